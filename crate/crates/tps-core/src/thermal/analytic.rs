//! Closed-form series solution for the constant-flux slab.
//!
//! Independent oracle for the finite-difference solver: the classical
//! eigenfunction expansion for a slab insulated at x = 0 with constant flux
//! at x = L,
//!
//!   T(x,t) = T0 + (q_s L / k) [ Fo + (3x² − L²)/(6L²)
//!            − (2/π²) Σ_{n≥1} ((−1)ⁿ/n²) e^{−n²π²·Fo} cos(nπx/L) ],
//!
//! with Fourier number Fo = α t / L².

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::thermal::{MaterialProperties, ThermalScenario};

/// Series temperature at a point, °C.
///
/// At t = 0 the series sums exactly to the uniform initial state (the cosine
/// series of the quadratic term), so T0 is returned directly instead of
/// evaluating the truncated sum.
pub fn analytic_slab_flux(
    scenario: &ThermalScenario,
    props: &MaterialProperties,
    x: f64,
    t: f64,
    n_terms: usize,
) -> Result<f64> {
    scenario.validate()?;
    props.validate()?;
    if !(0.0..=scenario.thickness).contains(&x) || !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "x = {x} outside the slab [0, {}]",
            scenario.thickness
        )));
    }
    if !(0.0..=scenario.duration).contains(&t) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside the simulated window [0, {}]",
            scenario.duration
        )));
    }
    if n_terms < 1 {
        return Err(Error::InvalidInput("n_terms must be >= 1".into()));
    }
    if t == 0.0 {
        return Ok(scenario.initial_temp);
    }

    let l = scenario.thickness;
    let fo = props.alpha() * t / (l * l);
    let xi = x / l;
    let mut sum = 0.0;
    for n in 1..=n_terms {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / (nf * nf) * (-nf * nf * PI * PI * fo).exp() * (nf * PI * xi).cos();
    }
    let bracket = fo + (3.0 * xi * xi - 1.0) / 6.0 - (2.0 / (PI * PI)) * sum;
    Ok(scenario.initial_temp + scenario.heat_flux * l / props.k * bracket)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (ThermalScenario, MaterialProperties) {
        (ThermalScenario::default(), MaterialProperties::new(200.0, 1.0, 800.0).unwrap())
    }

    #[test]
    fn initial_condition_is_exact() {
        let (s, p) = defaults();
        for x in [0.0, 0.0123, 0.05] {
            let v = analytic_slab_flux(&s, &p, x, 0.0, 50).unwrap();
            assert!((v - 25.0).abs() < 1e-3, "T(x={x}, 0) = {v}");
        }
    }

    #[test]
    fn interface_value_at_eval_time() {
        // 451.6756643 from a high-precision partial-sum evaluation; at
        // Fo = 0.375 only the n = 1 term is non-negligible.
        let (s, p) = defaults();
        let v = analytic_slab_flux(&s, &p, 0.0, 150.0, 50).unwrap();
        assert!((v - 451.6756643).abs() < 1e-4, "got {v}");
    }

    #[test]
    fn heated_surface_value_at_eval_time() {
        let (s, p) = defaults();
        let v = analytic_slab_flux(&s, &p, 0.05, 150.0, 50).unwrap();
        assert!((v - 1431.6575936).abs() < 1e-4, "got {v}");
    }

    #[test]
    fn zero_flux_is_uniform() {
        let (mut s, p) = defaults();
        s.heat_flux = 0.0;
        for (x, t) in [(0.0, 10.0), (0.025, 150.0), (0.05, 200.0)] {
            assert_eq!(analytic_slab_flux(&s, &p, x, t, 50).unwrap(), 25.0);
        }
    }

    #[test]
    fn rejects_out_of_range_points() {
        let (s, p) = defaults();
        assert!(analytic_slab_flux(&s, &p, -0.01, 10.0, 50).is_err());
        assert!(analytic_slab_flux(&s, &p, 0.06, 10.0, 50).is_err());
        assert!(analytic_slab_flux(&s, &p, 0.01, -1.0, 50).is_err());
        assert!(analytic_slab_flux(&s, &p, 0.01, 201.0, 50).is_err());
        assert!(analytic_slab_flux(&s, &p, 0.01, 10.0, 0).is_err());
    }

    #[test]
    fn tail_is_negligible_at_moderate_fourier_number() {
        // At Fo >= 0.01 the exponential damping makes the 50-term truncation
        // tail smaller than 1e-6 K for the default scenario.
        let (s, p) = defaults();
        let t = 0.01 * s.thickness * s.thickness / p.alpha();
        for x in [0.0, 0.025, 0.05] {
            let short = analytic_slab_flux(&s, &p, x, t, 50).unwrap();
            let long = analytic_slab_flux(&s, &p, x, t, 400).unwrap();
            assert!((short - long).abs() < 1e-6, "tail at x={x}: {}", short - long);
        }
    }
}
