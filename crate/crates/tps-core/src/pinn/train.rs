//! Adam training loop with periodic collocation resampling.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::pinn::loss::{loss_and_grad, CollocationSet, LossBreakdown, LossWeights};
use crate::pinn::network::{init_params, NetworkArchitecture, NetworkParameters};
use crate::pinn::NormalizationSpec;
use crate::thermal::ThermalScenario;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

// Seed-stream ids reserved by the trainer.
const STREAM_INIT: u64 = 0;
const STREAM_COLLOCATION: u64 = 1000;
const STREAM_POLISH: u64 = 999;

/// Optimizer schedule and collocation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Adam steps with periodic collocation resampling.
    pub iterations: usize,
    pub learning_rate: f64,
    /// Learning rate multiplies by `decay_factor` every `decay_every` steps.
    pub decay_every: usize,
    pub decay_factor: f64,
    /// PDE residual points per batch.
    pub interior_points: usize,
    /// Points per constraint category (initial / interface / surface).
    pub constraint_points: usize,
    /// Fresh collocation draws every this many steps.
    pub resample_every: usize,
    /// L-BFGS polish steps on one fixed collocation set after Adam; the
    /// stochastic phase finds the basin, the quasi-Newton phase drives the
    /// residuals down. 0 disables the polish.
    pub lbfgs_iterations: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    /// Budget sized so a full default training run stays within a desk-scale
    /// single-threaded wall-time while meeting the validation targets.
    fn default() -> Self {
        Self {
            iterations: 10_000,
            learning_rate: 1e-3,
            decay_every: 4000,
            decay_factor: 0.5,
            interior_points: 2000,
            constraint_points: 500,
            resample_every: 250,
            lbfgs_iterations: 2000,
            seed: 42,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be > 0".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.decay_every == 0 || !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::InvalidInput("decay schedule must have decay_every > 0 and 0 < factor <= 1".into()));
        }
        if self.resample_every == 0 {
            return Err(Error::InvalidInput("resample_every must be > 0".into()));
        }
        Ok(())
    }
}

/// One logged loss entry: the mean of each component over the preceding
/// 100-step window (smoothed history; raw per-step losses bounce with every
/// collocation resample).
#[derive(Debug, Clone, Copy)]
pub struct HistoryEntry {
    /// Window end (exclusive); entries land at steps 100, 200, ...
    pub step: usize,
    pub loss: LossBreakdown,
}

/// Smoothed loss history, final loss, wall time, and the seed that produced
/// the run.
#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub history: Vec<HistoryEntry>,
    pub final_loss: f64,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// Trains the surrogate: full-batch Adam over the current collocation set,
/// resampled periodically. Deterministic given the config seed.
pub fn train(
    arch: &NetworkArchitecture,
    norm: &NormalizationSpec,
    weights: &LossWeights,
    config: &TrainingConfig,
    scenario: &ThermalScenario,
) -> Result<(NetworkParameters, TrainingReport)> {
    config.validate()?;
    weights.validate()?;
    norm.validate()?;
    let start = Instant::now();

    let mut params = init_params(arch, config.seed.wrapping_add(STREAM_INIT))?;
    let n = params.n_params();
    let mut m1 = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut history = Vec::with_capacity(config.iterations / 100 + 2);
    let mut colloc: Option<CollocationSet> = None;
    let mut last = LossBreakdown::default();
    let mut window = LossBreakdown::default();
    let mut window_len = 0usize;

    for step in 0..config.iterations {
        if step % config.resample_every == 0 {
            let mut rng = crate::rng::stream(
                config.seed,
                STREAM_COLLOCATION + (step / config.resample_every) as u64,
            );
            colloc = Some(CollocationSet::sample(
                norm,
                config.interior_points,
                config.constraint_points,
                &mut rng,
            ));
        }
        let set = colloc.as_ref().expect("collocation sampled on step 0");

        let (breakdown, grad) = loss_and_grad(&params, norm, weights, set, scenario).map_err(|e| {
            Error::Numerical(format!(
                "training aborted at step {step}: {e} \
                 (components: pde={:.3e} ic={:.3e} bc0={:.3e} bcL={:.3e})",
                last.pde, last.ic, last.bc0, last.bcl
            ))
        })?;
        last = breakdown;
        window.pde += breakdown.pde;
        window.ic += breakdown.ic;
        window.bc0 += breakdown.bc0;
        window.bcl += breakdown.bcl;
        window.total += breakdown.total;
        window_len += 1;
        if (step + 1) % 100 == 0 || step + 1 == config.iterations {
            let n = window_len as f64;
            history.push(HistoryEntry {
                step: step + 1,
                loss: LossBreakdown {
                    pde: window.pde / n,
                    ic: window.ic / n,
                    bc0: window.bc0 / n,
                    bcl: window.bcl / n,
                    total: window.total / n,
                },
            });
            window = LossBreakdown::default();
            window_len = 0;
        }

        let lr = config.learning_rate
            * config.decay_factor.powi((step / config.decay_every) as i32);
        let t = (step + 1) as i32;
        let bias1 = 1.0 - ADAM_BETA1.powi(t);
        let bias2 = 1.0 - ADAM_BETA2.powi(t);
        for i in 0..n {
            let g = grad[i];
            m1[i] = ADAM_BETA1 * m1[i] + (1.0 - ADAM_BETA1) * g;
            m2[i] = ADAM_BETA2 * m2[i] + (1.0 - ADAM_BETA2) * g * g;
            let mhat = m1[i] / bias1;
            let vhat = m2[i] / bias2;
            params.values[i] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }

    if config.lbfgs_iterations > 0 {
        let mut rng = crate::rng::stream(config.seed, STREAM_POLISH);
        // A larger fixed set than the Adam batches: the polish objective is
        // deterministic, so it can afford the denser quadrature.
        let set = CollocationSet::sample(
            norm,
            2 * config.interior_points,
            config.constraint_points,
            &mut rng,
        );
        let polished = lbfgs_polish(&mut params, norm, weights, &set, scenario, config, &mut history)?;
        last = polished;
    }

    let report = TrainingReport {
        history,
        final_loss: last.total,
        wall_time_s: start.elapsed().as_secs_f64(),
        seed: config.seed,
    };
    Ok((params, report))
}

const LBFGS_HISTORY: usize = 20;

// Two-loop L-BFGS with Armijo backtracking on the fixed collocation set.
// Appends window means to the shared history and returns the last breakdown.
fn lbfgs_polish(
    params: &mut NetworkParameters,
    norm: &NormalizationSpec,
    weights: &LossWeights,
    set: &CollocationSet,
    scenario: &ThermalScenario,
    config: &TrainingConfig,
    history: &mut Vec<HistoryEntry>,
) -> Result<LossBreakdown> {
    let n = params.n_params();
    let (mut breakdown, mut grad) = loss_and_grad(params, norm, weights, set, scenario)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut window = LossBreakdown::default();
    let mut window_len = 0usize;
    let base_step = config.iterations;

    for step in 0..config.lbfgs_iterations {
        // Two-loop recursion for the search direction.
        let mut q = grad.clone();
        let mut alphas = vec![0.0; s_hist.len()];
        for i in (0..s_hist.len()).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let a = rho * dot(&s_hist[i], &q);
            alphas[i] = a;
            axpy(-a, &y_hist[i], &mut q);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..s_hist.len() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &q);
            axpy(alphas[i] - beta, &s_hist[i], &mut q);
        }
        let direction: Vec<f64> = q.iter().map(|v| -v).collect();
        let slope = dot(&grad, &direction);
        if slope >= 0.0 || !slope.is_finite() {
            break; // not a descent direction; the basin is exhausted
        }

        // Armijo backtracking.
        let old_values = params.values.clone();
        let old_loss = breakdown.total;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..25 {
            for i in 0..n {
                params.values[i] = old_values[i] + alpha * direction[i];
            }
            match loss_and_grad(params, norm, weights, set, scenario) {
                Ok((bd, g)) if bd.total <= old_loss + 1e-4 * alpha * slope => {
                    accepted = Some((bd, g));
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        let Some((bd, g)) = accepted else {
            params.values.copy_from_slice(&old_values);
            break; // line search failed; keep the best point found
        };

        let s: Vec<f64> = params.values.iter().zip(&old_values).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * norm2(&s) * norm2(&y) {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > LBFGS_HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        breakdown = bd;
        grad = g;

        window.pde += breakdown.pde;
        window.ic += breakdown.ic;
        window.bc0 += breakdown.bc0;
        window.bcl += breakdown.bcl;
        window.total += breakdown.total;
        window_len += 1;
        if (step + 1) % 100 == 0 || step + 1 == config.lbfgs_iterations {
            let m = window_len as f64;
            history.push(HistoryEntry {
                step: base_step + step + 1,
                loss: LossBreakdown {
                    pde: window.pde / m,
                    ic: window.ic / m,
                    bc0: window.bc0 / m,
                    bcl: window.bcl / m,
                    total: window.total / m,
                },
            });
            window = LossBreakdown::default();
            window_len = 0;
        }
    }
    Ok(breakdown)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}
