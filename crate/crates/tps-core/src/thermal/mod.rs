//! Transient conduction in the protective film.
//!
//! The film occupies 0 ≤ x ≤ L with the film/substrate interface at x = 0
//! (adiabatic) and the heated outer surface at x = L (constant flux q_s).
//! Temperature obeys ∂T/∂t = α ∂²T/∂x² with α = k/(ρ c_p).
//!
//! Temperatures are carried in °C throughout; the equation is invariant to
//! the affine offset, so no conversions are needed.

pub mod analytic;
pub mod solver;

pub use analytic::analytic_slab_flux;
pub use solver::{
    enthalpy_balance, interface_series, refine_until, solve_fd, InterfaceSeries, TemperatureField,
};

use crate::error::{Error, Result};

/// One material-property sample q = (ρ, k, c_p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialProperties {
    /// Mass density, kg/m³.
    pub rho: f64,
    /// Thermal conductivity, W/(m·K).
    pub k: f64,
    /// Specific heat capacity, J/(kg·K).
    pub cp: f64,
}

impl MaterialProperties {
    pub fn new(rho: f64, k: f64, cp: f64) -> Result<Self> {
        let props = Self { rho, k, cp };
        props.validate()?;
        Ok(props)
    }

    /// Thermal diffusivity α = k/(ρ c_p), m²/s.
    pub fn alpha(&self) -> f64 {
        self.k / (self.rho * self.cp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("k", self.k), ("cp", self.cp)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "material property {name} must be finite and > 0, got {v}"
                )));
            }
        }
        let alpha = self.alpha();
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "derived diffusivity must be finite and > 0, got {alpha}"
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho, self.k, self.cp]
    }

    pub fn from_array(q: [f64; 3]) -> Self {
        Self { rho: q[0], k: q[1], cp: q[2] }
    }
}

/// Geometry, loading, and the design query for one film.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalScenario {
    /// Film thickness L, m.
    pub thickness: f64,
    /// Constant heat flux applied at the outer surface x = L, W/m².
    /// Applied for the whole duration.
    pub heat_flux: f64,
    /// Simulated duration, s.
    pub duration: f64,
    /// Uniform initial temperature, °C.
    pub initial_temp: f64,
    /// Interface design threshold, °C.
    pub threshold: f64,
    /// Time of the design query at the interface, s.
    pub eval_time: f64,
}

impl Default for ThermalScenario {
    /// The repository default scenario. The nominal interface temperature at
    /// `eval_time` sits right at the threshold, which is the statistically
    /// interesting regime for the reliability analysis.
    fn default() -> Self {
        Self {
            thickness: 0.05,
            heat_flux: 40_000.0,
            duration: 200.0,
            initial_temp: 25.0,
            threshold: 450.0,
            eval_time: 150.0,
        }
    }
}

impl ThermalScenario {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("thickness", self.thickness),
            ("heat_flux", self.heat_flux),
            ("duration", self.duration),
            ("initial_temp", self.initial_temp),
            ("threshold", self.threshold),
            ("eval_time", self.eval_time),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("scenario field {name} must be finite, got {v}")));
            }
        }
        if self.thickness <= 0.0 {
            return Err(Error::InvalidInput(format!("thickness must be > 0, got {}", self.thickness)));
        }
        if self.duration <= 0.0 {
            return Err(Error::InvalidInput(format!("duration must be > 0, got {}", self.duration)));
        }
        if self.heat_flux < 0.0 {
            return Err(Error::InvalidInput(format!("heat_flux must be >= 0, got {}", self.heat_flux)));
        }
        if !(self.eval_time > 0.0 && self.eval_time <= self.duration) {
            return Err(Error::InvalidInput(format!(
                "eval_time must satisfy 0 < t <= duration, got {} with duration {}",
                self.eval_time, self.duration
            )));
        }
        Ok(())
    }
}

/// Space-time discretization for one finite-difference solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Spatial node count; node 0 at x = 0, node nx−1 at x = L.
    pub nx: usize,
    /// Output time step, s.
    pub dt: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 201, dt: 0.05 }
    }
}

impl GridSpec {
    /// Validates the grid against a scenario and returns the step count.
    /// `dt` must divide the duration to within one step of rounding.
    pub fn validate(&self, scenario: &ThermalScenario) -> Result<usize> {
        if self.nx < 3 {
            return Err(Error::InvalidInput(format!("nx must be >= 3, got {}", self.nx)));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidInput(format!("dt must be finite and > 0, got {}", self.dt)));
        }
        let nt = (scenario.duration / self.dt).round();
        if nt < 1.0 || !nt.is_finite() {
            return Err(Error::InvalidInput(format!(
                "dt = {} leaves no time steps over duration {}",
                self.dt, scenario.duration
            )));
        }
        if (nt * self.dt - scenario.duration).abs() > self.dt * (1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "dt = {} does not divide duration {} to within one step",
                self.dt, scenario.duration
            )));
        }
        Ok(nt as usize)
    }

    pub fn dx(&self, thickness: f64) -> f64 {
        thickness / (self.nx - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_of_defaults() {
        let p = MaterialProperties::new(200.0, 1.0, 800.0).unwrap();
        assert!((p.alpha() - 6.25e-6).abs() < 1e-18);
    }

    #[test]
    fn rejects_nonpositive_properties() {
        assert!(MaterialProperties::new(0.0, 1.0, 800.0).is_err());
        assert!(MaterialProperties::new(200.0, -1.0, 800.0).is_err());
        assert!(MaterialProperties::new(200.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn scenario_eval_time_must_be_in_range() {
        let mut s = ThermalScenario::default();
        s.eval_time = 250.0;
        assert!(s.validate().is_err());
        s.eval_time = 0.0;
        assert!(s.validate().is_err());
        s.eval_time = 200.0;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn grid_divides_duration() {
        let s = ThermalScenario::default();
        assert_eq!(GridSpec::default().validate(&s).unwrap(), 4000);
        let odd = GridSpec { nx: 11, dt: 0.3 };
        // 200 / 0.3 = 666.67 steps; 667 * 0.3 = 200.1, within one step.
        assert_eq!(odd.validate(&s).unwrap(), 667);
        let bad = GridSpec { nx: 2, dt: 0.05 };
        assert!(bad.validate(&s).is_err());
    }
}
