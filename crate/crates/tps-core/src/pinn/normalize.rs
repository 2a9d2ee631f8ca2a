//! Affine conditioning of the surrogate inputs and output.
//!
//! Each of the five inputs (x, t, ρ, k, c_p) is mapped to [−1, 1] from its
//! physical range: space and time from the scenario, the material properties
//! from the prior-support box. The network output maps to physical units via
//! T̂ = T0 + T_scale · net.

use crate::error::{Error, Result};
use crate::thermal::{MaterialProperties, ThermalScenario};
use crate::uq::PriorSpec;

/// Input conditioning plus the output map.
///
/// Space and the material properties map affinely to [−1, 1]. Time maps
/// through its square root: u = 2·√τ − 1 with τ = (t − t_lo)/(t_hi − t_lo),
/// which stretches the flux switch-on layer so the surface history — a √t
/// curve in physical time — becomes nearly linear in network coordinates.
///
/// The output map carries the matching envelope: T̂ = T0 + T_scale · w · net
/// with w = (u + 1)/2 = √τ. The envelope makes the uniform initial state
/// exact by construction — under the insulated/flux boundary conditions an
/// initial-state error has a mean component that never decays, so a soft
/// initial penalty would leave a permanent bias in the interface prediction —
/// and √τ is exactly the growth class of the switch-on corner.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationSpec {
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
    pub rho_range: (f64, f64),
    pub k_range: (f64, f64),
    pub cp_range: (f64, f64),
    /// Output offset, °C (the scenario's initial temperature).
    pub t0: f64,
    /// Output scale, K.
    pub t_scale: f64,
}

fn norm1(v: f64, (lo, hi): (f64, f64)) -> f64 {
    2.0 * (v - lo) / (hi - lo) - 1.0
}

fn denorm1(u: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (u + 1.0) * 0.5 * (hi - lo)
}

// Square-root warp for the time axis; fractions outside [0, 1] are carried
// through linearly so out-of-range inputs stay detectable (and clampable)
// downstream.
fn norm_time(t: f64, (lo, hi): (f64, f64)) -> f64 {
    let tau = (t - lo) / (hi - lo);
    if tau < 0.0 {
        2.0 * tau - 1.0
    } else {
        2.0 * tau.sqrt() - 1.0
    }
}

fn denorm_time(u: f64, (lo, hi): (f64, f64)) -> f64 {
    let w = (u + 1.0) * 0.5;
    if w < 0.0 {
        lo + w * (hi - lo)
    } else {
        lo + w * w * (hi - lo)
    }
}

impl NormalizationSpec {
    /// Builds the conditioning box for a scenario: x over the slab, t over
    /// the flight, each property over mean ± `box_sigmas`·std of its prior,
    /// clipped away from zero.
    pub fn for_scenario(
        scenario: &ThermalScenario,
        prior: &PriorSpec,
        box_sigmas: f64,
        t_scale: f64,
    ) -> Result<Self> {
        let prop_range = |mean: f64, std: f64| {
            let lo = (mean - box_sigmas * std).max(1e-6 * mean);
            (lo, mean + box_sigmas * std)
        };
        let spec = Self {
            x_range: (0.0, scenario.thickness),
            t_range: (0.0, scenario.duration),
            rho_range: prop_range(prior.rho.mean, prior.rho.std),
            k_range: prop_range(prior.k.mean, prior.k.std),
            cp_range: prop_range(prior.cp.mean, prior.cp.std),
            t0: scenario.initial_temp,
            t_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("x", self.x_range),
            ("t", self.t_range),
            ("rho", self.rho_range),
            ("k", self.k_range),
            ("cp", self.cp_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidInput(format!(
                    "normalization range for {name} must have positive width, got [{lo}, {hi}]"
                )));
            }
        }
        if !self.t_scale.is_finite() || self.t_scale <= 0.0 {
            return Err(Error::InvalidInput(format!("t_scale must be > 0, got {}", self.t_scale)));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidInput("t0 must be finite".into()));
        }
        Ok(())
    }

    pub fn ranges(&self) -> [(f64, f64); 5] {
        [self.x_range, self.t_range, self.rho_range, self.k_range, self.cp_range]
    }

    /// Physical point to normalized coordinates; no clamping.
    pub fn normalize(&self, x: f64, t: f64, q: &MaterialProperties) -> [f64; 5] {
        [
            norm1(x, self.x_range),
            norm_time(t, self.t_range),
            norm1(q.rho, self.rho_range),
            norm1(q.k, self.k_range),
            norm1(q.cp, self.cp_range),
        ]
    }

    /// Normalized coordinates clamped to [−1, 1]; the flag reports whether
    /// any input fell outside the box.
    pub fn normalize_clamped(&self, x: f64, t: f64, q: &MaterialProperties) -> ([f64; 5], bool) {
        let raw = self.normalize(x, t, q);
        let mut clamped = false;
        let mut out = [0.0; 5];
        for (dst, v) in out.iter_mut().zip(raw) {
            if v < -1.0 || v > 1.0 {
                clamped = true;
                *dst = v.clamp(-1.0, 1.0);
            } else {
                *dst = v;
            }
        }
        (out, clamped)
    }

    pub fn denormalize(&self, u: [f64; 5]) -> (f64, f64, MaterialProperties) {
        (
            denorm1(u[0], self.x_range),
            denorm_time(u[1], self.t_range),
            MaterialProperties {
                rho: denorm1(u[2], self.rho_range),
                k: denorm1(u[3], self.k_range),
                cp: denorm1(u[4], self.cp_range),
            },
        )
    }

    pub fn contains(&self, x: f64, t: f64, q: &MaterialProperties) -> bool {
        self.normalize(x, t, q).iter().all(|u| (-1.0 - 1e-12..=1.0 + 1e-12).contains(u))
    }

    /// Output envelope w = √τ at time `t`, clamped to [0, 1].
    pub fn envelope(&self, t: f64) -> f64 {
        let tau = ((t - self.t_range.0) / (self.t_range.1 - self.t_range.0)).clamp(0.0, 1.0);
        tau.sqrt()
    }

    /// Network output to physical temperature, °C.
    pub fn output(&self, t: f64, net: f64) -> f64 {
        self.t0 + self.t_scale * self.envelope(t) * net
    }
}
