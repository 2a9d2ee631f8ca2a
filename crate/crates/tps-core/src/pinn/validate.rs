//! Surrogate accuracy against the finite-difference reference.

use crate::error::Result;
use crate::pinn::network::{forward_flagged, NetworkParameters};
use crate::pinn::NormalizationSpec;
use crate::thermal::{solve_fd, GridSpec, MaterialProperties, ThermalScenario};

/// Probe lattice resolution (space × time).
pub const PROBE_NX: usize = 51;
pub const PROBE_NT: usize = 51;

/// Per-sample comparison results.
#[derive(Debug, Clone, Copy)]
pub struct ValidationSample {
    pub props: MaterialProperties,
    /// max |T̂ − T_fd| over the probe lattice, K.
    pub max_domain_error: f64,
    /// |T̂ − T_fd| at (x = 0, t = eval_time), K.
    pub poi_error: f64,
    /// Any probe point fell outside the normalization box.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub samples: Vec<ValidationSample>,
    pub max_domain_error: f64,
    pub max_poi_error: f64,
    pub mean_poi_error: f64,
    /// Probe lattice used, (space, time).
    pub lattice: (usize, usize),
}

/// Compares the surrogate against one finite-difference solve per property
/// sample over a uniform space-time probe lattice. Reports errors without
/// judging them; untrained parameters simply produce large numbers.
pub fn validate_against_fd(
    params: &NetworkParameters,
    norm: &NormalizationSpec,
    scenario: &ThermalScenario,
    prop_samples: &[MaterialProperties],
    grid: &GridSpec,
) -> Result<ValidationReport> {
    let mut samples = Vec::with_capacity(prop_samples.len());
    let l = scenario.thickness;
    let t_end = scenario.duration;

    for props in prop_samples {
        let field = solve_fd(scenario, props, grid)?;
        let mut max_err = 0.0_f64;
        let mut clamped = false;
        for ti in 0..PROBE_NT {
            let t = t_end * ti as f64 / (PROBE_NT - 1) as f64;
            let step = field.nearest_step(t);
            for xi in 0..PROBE_NX {
                let x = l * xi as f64 / (PROBE_NX - 1) as f64;
                let node = ((x / l) * (grid.nx - 1) as f64).round() as usize;
                let (pred, was_clamped) = forward_flagged(params, norm, x, t, props)?;
                clamped |= was_clamped;
                max_err = max_err.max((pred - field.values[[step, node]]).abs());
            }
        }
        let step = field.nearest_step(scenario.eval_time);
        let (poi_pred, poi_clamped) = forward_flagged(params, norm, 0.0, scenario.eval_time, props)?;
        clamped |= poi_clamped;
        let poi_error = (poi_pred - field.values[[step, 0]]).abs();
        samples.push(ValidationSample { props: *props, max_domain_error: max_err, poi_error, clamped });
    }

    let max_domain_error = samples.iter().map(|s| s.max_domain_error).fold(0.0, f64::max);
    let max_poi_error = samples.iter().map(|s| s.poi_error).fold(0.0, f64::max);
    let mean_poi_error = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.poi_error).sum::<f64>() / samples.len() as f64
    };
    Ok(ValidationReport {
        samples,
        max_domain_error,
        max_poi_error,
        mean_poi_error,
        lattice: (PROBE_NX, PROBE_NT),
    })
}
