//! Reliability of the design over posterior property samples, with optional
//! re-verification through the finite-difference reference.

use rand::Rng;

use crate::error::{Error, Result};
use crate::thermal::{GridSpec, MaterialProperties, ThermalScenario};
use crate::uq::ForwardModel;

/// Which model produced the per-sample temperatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerificationModel {
    Surrogate,
    HighFidelity,
}

/// Threshold-exceedance tally over a sample set.
#[derive(Debug, Clone)]
pub struct ReliabilityReport {
    /// Samples evaluated.
    pub n: usize,
    /// Samples whose interface temperature stays below the threshold.
    pub n_ok: usize,
    /// 100 · n_ok / n.
    pub r_hat_percent: f64,
    pub model: VerificationModel,
    /// Interface temperature per evaluated sample, °C.
    pub temps: Vec<f64>,
    /// Set when the input was subsampled to bound solver cost.
    pub subsampled_from: Option<usize>,
    /// Surrogate inputs clamped to the normalization box.
    pub clamped: usize,
}

fn tally(temps: Vec<f64>, t_th: f64, model: VerificationModel, subsampled_from: Option<usize>, clamped: usize) -> ReliabilityReport {
    let n = temps.len();
    let n_ok = temps.iter().filter(|t| **t < t_th).count();
    ReliabilityReport {
        n,
        n_ok,
        r_hat_percent: 100.0 * n_ok as f64 / n as f64,
        model,
        temps,
        subsampled_from,
        clamped,
    }
}

/// Reliability over property samples with the given forward model: the
/// percentage whose predicted interface temperature at the eval time stays
/// below the threshold. Under constant-flux heating the interface history is
/// monotone, so the eval-time value is also the maximum up to that time.
pub fn reliability(
    samples: &[MaterialProperties],
    model: &ForwardModel<'_>,
    scenario: &ThermalScenario,
    t_th: f64,
) -> Result<ReliabilityReport> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("reliability of an empty sample set".into()));
    }
    let kind = match model {
        ForwardModel::Surrogate { .. } => VerificationModel::Surrogate,
        ForwardModel::HighFidelity { .. } => VerificationModel::HighFidelity,
    };
    let (temps, clamped) = match model {
        ForwardModel::Surrogate { params, norm } => {
            let points: Vec<(f64, f64, MaterialProperties)> =
                samples.iter().map(|q| (0.0, scenario.eval_time, *q)).collect();
            crate::pinn::predict_batch_flagged(params, norm, &points)?
        }
        ForwardModel::HighFidelity { .. } => (model.interface_temp_batch(scenario, samples)?, 0),
    };
    Ok(tally(temps, t_th, kind, None, clamped))
}

/// Re-verifies reliability through the finite-difference solver. When the
/// sample set exceeds `max_fd`, a seeded uniform subsample of that size is
/// evaluated instead and noted in the report.
pub fn cross_verify(
    samples: &[MaterialProperties],
    scenario: &ThermalScenario,
    grid: &GridSpec,
    t_th: f64,
    max_fd: usize,
    seed: u64,
) -> Result<ReliabilityReport> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("cross-verification of an empty sample set".into()));
    }
    if max_fd == 0 {
        return Err(Error::InvalidInput("max_fd must be >= 1".into()));
    }
    let (subset, subsampled_from): (Vec<MaterialProperties>, Option<usize>) =
        if samples.len() > max_fd {
            // Partial Fisher–Yates: the first max_fd entries of a seeded
            // uniform shuffle.
            let mut rng = crate::rng::stream(seed, 2);
            let mut pool: Vec<usize> = (0..samples.len()).collect();
            for i in 0..max_fd {
                let j = rng.gen_range(i..pool.len());
                pool.swap(i, j);
            }
            (pool[..max_fd].iter().map(|&i| samples[i]).collect(), Some(samples.len()))
        } else {
            (samples.to_vec(), None)
        };

    use rayon::prelude::*;
    let model = ForwardModel::HighFidelity { grid: *grid };
    let temps: Result<Vec<f64>> = subset
        .par_iter()
        .map(|q| model.interface_temp(scenario, q))
        .collect();
    Ok(tally(temps?, t_th, VerificationModel::HighFidelity, subsampled_from, 0))
}
