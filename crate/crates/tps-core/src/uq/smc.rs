//! Likelihood-tempered sequential Monte Carlo with systematic resampling and
//! Metropolis rejuvenation moves.

use rand::Rng;

use crate::error::{Error, Result};
use crate::thermal::MaterialProperties;
use crate::uq::PosteriorEvaluator;

const MAX_STAGES: usize = 1000;
const DIM: usize = 3;

/// Effective sample size 1 / Σ wᵢ² of normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::InvalidInput("effective sample size of an empty weight vector".into()));
    }
    Ok(1.0 / weights.iter().map(|w| w * w).sum::<f64>())
}

/// Systematic resampling: N stratified positions with a single uniform
/// offset. The count of index i is ⌊N·wᵢ⌋ or ⌈N·wᵢ⌉.
pub fn systematic_resample(weights: &[f64], seed: u64) -> Vec<usize> {
    let n = weights.len();
    let mut rng = crate::rng::stream(seed, 0);
    let offset: f64 = rng.gen::<f64>() / n as f64;
    let mut indices = Vec::with_capacity(n);
    let mut cumulative = 0.0;
    let mut i = 0;
    for j in 0..n {
        let position = offset + j as f64 / n as f64;
        while cumulative + weights[i] < position && i < n - 1 {
            cumulative += weights[i];
            i += 1;
        }
        indices.push(i);
    }
    indices
}

/// SMC controls.
#[derive(Debug, Clone, Copy)]
pub struct SmcOptions {
    pub n_particles: usize,
    /// Each tempering step targets ESS ≈ this fraction of N.
    pub ess_threshold_frac: f64,
    /// Metropolis rejuvenation passes per stage.
    pub move_steps: usize,
    pub seed: u64,
    /// Treat the likelihood as constant (the σ → ∞ limit); the posterior
    /// collapses to the prior.
    pub flat_likelihood: bool,
}

impl Default for SmcOptions {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            ess_threshold_frac: 0.5,
            move_steps: 3,
            seed: 42,
            flat_likelihood: false,
        }
    }
}

/// Weighted posterior ensemble with its tempering trace.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub particles: Vec<MaterialProperties>,
    /// Normalized weights (uniform whenever the final stage resampled).
    pub weights: Vec<f64>,
    /// Predicted interface temperature per particle, °C.
    pub interface_temps: Vec<f64>,
    /// Temper exponent after every stage; non-decreasing, ends at 1.
    pub beta_history: Vec<f64>,
    /// ESS recorded after every reweighting.
    pub ess_history: Vec<f64>,
    pub resample_count: usize,
    /// Mean acceptance of the rejuvenation moves.
    pub move_acceptance: f64,
    pub seed: u64,
}

fn weighted_mean_cov(particles: &[MaterialProperties], weights: &[f64]) -> ([f64; DIM], [[f64; DIM]; DIM]) {
    let mut mean = [0.0; DIM];
    for (q, w) in particles.iter().zip(weights) {
        let v = q.as_array();
        for d in 0..DIM {
            mean[d] += w * v[d];
        }
    }
    let mut cov = [[0.0; DIM]; DIM];
    for (q, w) in particles.iter().zip(weights) {
        let v = q.as_array();
        for r in 0..DIM {
            for c in 0..DIM {
                cov[r][c] += w * (v[r] - mean[r]) * (v[c] - mean[c]);
            }
        }
    }
    (mean, cov)
}

fn cholesky3(a: &[[f64; DIM]; DIM]) -> Option<[[f64; DIM]; DIM]> {
    let mut l = [[0.0; DIM]; DIM];
    for r in 0..DIM {
        for c in 0..=r {
            let mut sum = a[r][c];
            for k in 0..c {
                sum -= l[r][k] * l[c][k];
            }
            if r == c {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[r][c] = sum.sqrt();
            } else {
                l[r][c] = sum / l[c][c];
            }
        }
    }
    Some(l)
}

// ESS of the weights after multiplying in exp(delta · ll), without
// normalizing first.
fn tempered_ess(weights: &[f64], loglik: &[f64], delta: f64) -> f64 {
    let max_ll = loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (w, ll) in weights.iter().zip(loglik) {
        let u = w * (delta * (ll - max_ll)).exp();
        sum += u;
        sum_sq += u * u;
    }
    sum * sum / sum_sq
}

/// Likelihood-tempered SMC targeting the material-property posterior.
///
/// Particles start from the prior; each stage advances the temper exponent by
/// bisection so the reweighted ESS lands at the threshold, then systematically
/// resamples and applies Metropolis moves whose proposal covariance is the
/// weighted particle covariance scaled by 2.38²/d. Per-particle likelihood
/// evaluations within a stage are issued as one batched model call.
pub fn smc_sample(evaluator: &PosteriorEvaluator<'_>, opts: &SmcOptions) -> Result<ParticleEnsemble> {
    if opts.n_particles < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 particles, got {}",
            opts.n_particles
        )));
    }
    if !(opts.ess_threshold_frac > 0.0 && opts.ess_threshold_frac < 1.0) {
        return Err(Error::InvalidInput("ESS threshold fraction must lie in (0, 1)".into()));
    }
    let n = opts.n_particles;
    let target_ess = opts.ess_threshold_frac * n as f64;

    let mut init_rng = crate::rng::stream(opts.seed, 1);
    let mut particles: Vec<MaterialProperties> = (0..n).map(|_| evaluator.prior.sample(&mut init_rng)).collect();
    let evaluate = |qs: &[MaterialProperties]| -> Result<(Vec<f64>, Vec<f64>)> {
        let pairs = evaluator.log_likelihood_batch(qs)?;
        let (mut lls, mut temps) = (Vec::with_capacity(qs.len()), Vec::with_capacity(qs.len()));
        for (ll, t) in pairs {
            lls.push(if opts.flat_likelihood { 0.0 } else { ll });
            temps.push(t);
        }
        Ok((lls, temps))
    };
    let (mut loglik, mut temps) = evaluate(&particles)?;

    let mut weights = vec![1.0 / n as f64; n];
    let mut beta = 0.0;
    let mut beta_history = vec![0.0];
    let mut ess_history = Vec::new();
    let mut resample_count = 0;
    let mut move_accepts = 0usize;
    let mut move_trials = 0usize;

    for stage in 0..MAX_STAGES {
        let remaining = 1.0 - beta;
        let delta = if tempered_ess(&weights, &loglik, remaining) >= target_ess {
            remaining
        } else {
            let (mut lo, mut hi) = (0.0, remaining);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if tempered_ess(&weights, &loglik, mid) >= target_ess {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo.max(remaining * 1e-12)
        };

        let max_ll = loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (w, ll) in weights.iter_mut().zip(&loglik) {
            *w *= (delta * (ll - max_ll)).exp();
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Degenerate(format!(
                "stage {stage}: tempered weights collapsed (sum {total})"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        beta += delta;
        beta_history.push(beta);
        let ess = effective_sample_size(&weights)?;
        ess_history.push(ess);

        let final_stage = beta >= 1.0 - 1e-12;
        if final_stage && ess >= target_ess {
            break;
        }

        // Proposal covariance from the weighted ensemble, before resampling.
        let (_, cov) = weighted_mean_cov(&particles, &weights);
        let scale = 2.38 * 2.38 / DIM as f64;
        let mut proposal_cov = [[0.0; DIM]; DIM];
        for r in 0..DIM {
            for c in 0..DIM {
                proposal_cov[r][c] = scale * cov[r][c];
            }
            proposal_cov[r][r] += 1e-12 * (1.0 + cov[r][r].abs());
        }
        let chol = cholesky3(&proposal_cov).ok_or_else(|| {
            Error::Degenerate(format!(
                "stage {stage}: particle covariance is not positive definite \
                 (beta {beta:.4}, ESS {ess:.1})"
            ))
        })?;

        let ancestors = systematic_resample(&weights, opts.seed ^ (0xA5A5_0000 + stage as u64));
        particles = ancestors.iter().map(|&i| particles[i]).collect();
        loglik = ancestors.iter().map(|&i| loglik[i]).collect();
        temps = ancestors.iter().map(|&i| temps[i]).collect();
        weights.fill(1.0 / n as f64);
        resample_count += 1;

        let mut move_rng = crate::rng::stream(opts.seed, 0xB000 + stage as u64);
        for _ in 0..opts.move_steps {
            let mut proposals = Vec::with_capacity(n);
            for q in &particles {
                let z: [f64; DIM] = [
                    move_rng.sample(rand_distr::StandardNormal),
                    move_rng.sample(rand_distr::StandardNormal),
                    move_rng.sample(rand_distr::StandardNormal),
                ];
                let v = q.as_array();
                let mut p = [0.0; DIM];
                for r in 0..DIM {
                    p[r] = v[r];
                    for c in 0..=r {
                        p[r] += chol[r][c] * z[c];
                    }
                }
                proposals.push(MaterialProperties::from_array(p));
            }
            let (prop_ll, prop_temps) = evaluate(&proposals)?;
            for i in 0..n {
                let current_lp = evaluator.log_prior(&particles[i]) + beta * loglik[i];
                let prop_prior = evaluator.log_prior(&proposals[i]);
                move_trials += 1;
                if prop_prior == f64::NEG_INFINITY {
                    continue;
                }
                let delta_lp = prop_prior + beta * prop_ll[i] - current_lp;
                if delta_lp >= 0.0 || move_rng.gen::<f64>() < delta_lp.exp() {
                    particles[i] = proposals[i];
                    loglik[i] = prop_ll[i];
                    temps[i] = prop_temps[i];
                    move_accepts += 1;
                }
            }
        }

        if final_stage {
            break;
        }
        if stage + 1 == MAX_STAGES {
            return Err(Error::NonConvergence(format!(
                "tempering stalled after {MAX_STAGES} stages at beta {beta:.6}"
            )));
        }
    }

    let first = particles[0];
    if particles.iter().all(|q| *q == first) {
        return Err(Error::Degenerate(format!(
            "ensemble collapsed onto a single particle after {} resamples \
             (beta history {:?})",
            resample_count,
            &beta_history[beta_history.len().saturating_sub(4)..]
        )));
    }

    let move_acceptance = if move_trials > 0 {
        move_accepts as f64 / move_trials as f64
    } else {
        0.0
    };
    Ok(ParticleEnsemble {
        particles,
        weights,
        interface_temps: temps,
        beta_history,
        ess_history,
        resample_count,
        move_acceptance,
        seed: opts.seed,
    })
}

impl ParticleEnsemble {
    /// Weighted posterior mean per parameter.
    pub fn means(&self) -> [f64; DIM] {
        weighted_mean_cov(&self.particles, &self.weights).0
    }

    pub fn final_ess(&self) -> f64 {
        effective_sample_size(&self.weights).unwrap_or(0.0)
    }
}
