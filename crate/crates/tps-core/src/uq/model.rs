//! Prior, reliability-shifted likelihood, and the posterior evaluator.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pinn::{self, NetworkParameters, NormalizationSpec};
use crate::rng::Stream;
use crate::thermal::{interface_series, solve_fd, GridSpec, MaterialProperties, ThermalScenario};
use crate::uq::normal::z_quantile;

/// Truncated normal for one material property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPrior {
    pub mean: f64,
    pub std: f64,
    /// Truncation bounds; lo > 0 keeps the property physical.
    pub lo: f64,
    pub hi: f64,
}

impl ParamPrior {
    pub fn new(mean: f64, std: f64) -> Self {
        // Default truncation at mean ± mean/2 (±5 std at the 10% priors used
        // here), wide enough that rejection sampling is essentially free.
        Self { mean, std, lo: 0.5 * mean, hi: 1.5 * mean }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.std.is_finite() && self.std > 0.0) {
            return Err(Error::InvalidInput(format!("prior {name}: std must be > 0, got {}", self.std)));
        }
        if !(self.lo > 0.0 && self.lo < self.mean && self.mean < self.hi) {
            return Err(Error::InvalidInput(format!(
                "prior {name}: need 0 < lo < mean < hi, got lo={} mean={} hi={}",
                self.lo, self.mean, self.hi
            )));
        }
        Ok(())
    }

    fn log_density(&self, v: f64) -> f64 {
        if v < self.lo || v > self.hi {
            return f64::NEG_INFINITY;
        }
        let z = (v - self.mean) / self.std;
        -0.5 * z * z
    }

    fn sample(&self, rng: &mut Stream) -> f64 {
        for _ in 0..1000 {
            let draw = self.mean + self.std * rng.sample::<f64, _>(rand_distr::StandardNormal);
            if draw >= self.lo && draw <= self.hi {
                return draw;
            }
        }
        // ±5σ truncation makes rejection failure astronomically unlikely;
        // fall back to the mode rather than loop forever.
        self.mean
    }
}

/// Independent truncated normals over (ρ, k, c_p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub rho: ParamPrior,
    pub k: ParamPrior,
    pub cp: ParamPrior,
}

impl Default for PriorSpec {
    /// ±10% property uncertainty around the nominal film material.
    fn default() -> Self {
        Self {
            rho: ParamPrior::new(200.0, 20.0),
            k: ParamPrior::new(1.0, 0.1),
            cp: ParamPrior::new(800.0, 80.0),
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        self.rho.validate("rho")?;
        self.k.validate("k")?;
        self.cp.validate("cp")
    }

    pub fn means(&self) -> MaterialProperties {
        MaterialProperties { rho: self.rho.mean, k: self.k.mean, cp: self.cp.mean }
    }

    pub fn contains(&self, q: &MaterialProperties) -> bool {
        q.rho >= self.rho.lo
            && q.rho <= self.rho.hi
            && q.k >= self.k.lo
            && q.k <= self.k.hi
            && q.cp >= self.cp.lo
            && q.cp <= self.cp.hi
    }

    pub fn sample(&self, rng: &mut Stream) -> MaterialProperties {
        MaterialProperties {
            rho: self.rho.sample(rng),
            k: self.k.sample(rng),
            cp: self.cp.sample(rng),
        }
    }
}

/// Unnormalized log prior density; −∞ outside the truncation box.
pub fn log_prior(q: &MaterialProperties, prior: &PriorSpec) -> f64 {
    prior.rho.log_density(q.rho) + prior.k.log_density(q.k) + prior.cp.log_density(q.cp)
}

/// Normal likelihood on the interface temperature with its mean shifted below
/// the threshold by the reliability quantile: μ = T_th − z_p(R)·σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodSpec {
    pub t_th: f64,
    pub sigma: f64,
    pub reliability_target: f64,
    /// Derived mean, °C.
    pub mu: f64,
}

pub fn make_likelihood(t_th: f64, sigma: f64, reliability_target: f64) -> Result<LikelihoodSpec> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(format!("likelihood sigma must be > 0, got {sigma}")));
    }
    if !t_th.is_finite() {
        return Err(Error::InvalidInput(format!("threshold must be finite, got {t_th}")));
    }
    let z = z_quantile(reliability_target)?;
    Ok(LikelihoodSpec { t_th, sigma, reliability_target, mu: t_th - z * sigma })
}

/// Forward model used by the samplers: either the trained surrogate or the
/// finite-difference reference.
pub enum ForwardModel<'a> {
    Surrogate { params: &'a NetworkParameters, norm: &'a NormalizationSpec },
    HighFidelity { grid: GridSpec },
}

impl ForwardModel<'_> {
    /// Interface temperature at the scenario's eval time for one sample.
    pub fn interface_temp(&self, scenario: &ThermalScenario, q: &MaterialProperties) -> Result<f64> {
        match self {
            ForwardModel::Surrogate { params, norm } => {
                pinn::forward(params, norm, 0.0, scenario.eval_time, q)
            }
            ForwardModel::HighFidelity { grid } => {
                let field = solve_fd(scenario, q, grid)?;
                Ok(interface_series(&field).at_eval_time)
            }
        }
    }

    /// Batched interface temperatures; one vectorized pass for the surrogate.
    pub fn interface_temp_batch(
        &self,
        scenario: &ThermalScenario,
        qs: &[MaterialProperties],
    ) -> Result<Vec<f64>> {
        match self {
            ForwardModel::Surrogate { params, norm } => {
                let points: Vec<(f64, f64, MaterialProperties)> =
                    qs.iter().map(|q| (0.0, scenario.eval_time, *q)).collect();
                pinn::predict_batch(params, norm, &points)
            }
            ForwardModel::HighFidelity { .. } => {
                qs.iter().map(|q| self.interface_temp(scenario, q)).collect()
            }
        }
    }
}

/// Everything needed to evaluate the unnormalized posterior.
pub struct PosteriorEvaluator<'a> {
    pub model: ForwardModel<'a>,
    pub scenario: ThermalScenario,
    pub prior: PriorSpec,
    pub likelihood: LikelihoodSpec,
    /// Drop the prior's quadratic term (keep only the truncation box): the
    /// literal proportional-to-likelihood posterior.
    pub flat_prior: bool,
}

impl PosteriorEvaluator<'_> {
    pub fn log_prior(&self, q: &MaterialProperties) -> f64 {
        let lp = log_prior(q, &self.prior);
        if self.flat_prior && lp.is_finite() {
            0.0
        } else {
            lp
        }
    }

    /// Log likelihood and the predicted interface temperature.
    pub fn log_likelihood(&self, q: &MaterialProperties) -> Result<(f64, f64)> {
        let t_pred = self.model.interface_temp(&self.scenario, q)?;
        let z = (t_pred - self.likelihood.mu) / self.likelihood.sigma;
        Ok((-0.5 * z * z, t_pred))
    }

    /// Unnormalized log posterior; −∞ with the model never invoked when the
    /// prior already excludes the point.
    pub fn log_posterior(&self, q: &MaterialProperties) -> Result<(f64, f64)> {
        let lp = self.log_prior(q);
        if lp == f64::NEG_INFINITY {
            return Ok((f64::NEG_INFINITY, f64::NAN));
        }
        let (ll, t_pred) = self.log_likelihood(q)?;
        Ok((lp + ll, t_pred))
    }

    /// Batched log likelihoods with predicted temperatures.
    pub fn log_likelihood_batch(&self, qs: &[MaterialProperties]) -> Result<Vec<(f64, f64)>> {
        let temps = self.model.interface_temp_batch(&self.scenario, qs)?;
        Ok(temps
            .into_iter()
            .map(|t_pred| {
                let z = (t_pred - self.likelihood.mu) / self.likelihood.sigma;
                (-0.5 * z * z, t_pred)
            })
            .collect())
    }
}
