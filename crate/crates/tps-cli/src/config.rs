//! Run configuration: strict JSON with full defaults.
//!
//! Every field is optional in the file (defaults reproduce the documented
//! reference scenario); unknown keys are rejected so typos cannot silently
//! fall back to defaults.

use serde::{Deserialize, Serialize};

use tps_core::pinn::{NetworkArchitecture, NormalizationSpec, TrainingConfig};
use tps_core::thermal::{GridSpec, MaterialProperties, ThermalScenario};
use tps_core::uq::{make_likelihood, LikelihoodSpec, ParamPrior, PriorSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub grid: GridConfig,
    pub prior: PriorConfig,
    pub likelihood: LikelihoodConfig,
    pub network: NetworkConfig,
    pub training: TrainingSection,
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            grid: GridConfig::default(),
            prior: PriorConfig::default(),
            likelihood: LikelihoodConfig::default(),
            network: NetworkConfig::default(),
            training: TrainingSection::default(),
            sampler: SamplerConfig::default(),
            seed: 42,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub thickness_m: f64,
    pub heat_flux_w_m2: f64,
    pub duration_s: f64,
    /// Temperatures are carried in °C throughout.
    pub initial_temp_c: f64,
    pub threshold_c: f64,
    pub eval_time_s: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = ThermalScenario::default();
        Self {
            thickness_m: s.thickness,
            heat_flux_w_m2: s.heat_flux,
            duration_s: s.duration,
            initial_temp_c: s.initial_temp,
            threshold_c: s.threshold,
            eval_time_s: s.eval_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nx: usize,
    pub dt_s: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self { nx: g.nx, dt_s: g.dt }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorEntry {
    pub mean: f64,
    pub std: f64,
    /// Truncation bounds; default to mean ± mean/2.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl PriorEntry {
    fn from_core(p: ParamPrior) -> Self {
        Self { mean: p.mean, std: p.std, lo: None, hi: None }
    }

    fn to_core(&self) -> ParamPrior {
        let mut p = ParamPrior::new(self.mean, self.std);
        if let Some(lo) = self.lo {
            p.lo = lo;
        }
        if let Some(hi) = self.hi {
            p.hi = hi;
        }
        p
    }
}

impl Default for PriorEntry {
    fn default() -> Self {
        Self::from_core(ParamPrior::new(1.0, 0.1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub rho: PriorEntry,
    pub k: PriorEntry,
    pub cp: PriorEntry,
}

impl Default for PriorConfig {
    fn default() -> Self {
        let p = PriorSpec::default();
        Self {
            rho: PriorEntry::from_core(p.rho),
            k: PriorEntry::from_core(p.k),
            cp: PriorEntry::from_core(p.cp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LikelihoodConfig {
    pub sigma_k: f64,
    pub reliability_target: f64,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        Self { sigma_k: 10.0, reliability_target: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub t_scale_k: f64,
    /// The property normalization box spans mean ± this many prior stds.
    pub box_sigmas: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { hidden: NetworkArchitecture::default().hidden, t_scale_k: 2000.0, box_sigmas: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub iterations: usize,
    pub learning_rate: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    pub interior_points: usize,
    pub constraint_points: usize,
    pub resample_every: usize,
    pub lbfgs_iterations: usize,
    pub weights: WeightsConfig,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            iterations: t.iterations,
            learning_rate: t.learning_rate,
            decay_every: t.decay_every,
            decay_factor: t.decay_factor,
            interior_points: t.interior_points,
            constraint_points: t.constraint_points,
            resample_every: t.resample_every,
            lbfgs_iterations: t.lbfgs_iterations,
            weights: WeightsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub pde: f64,
    pub ic: f64,
    pub bc0: f64,
    pub bcl: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        let w = tps_core::pinn::LossWeights::default();
        Self { pde: w.pde, ic: w.ic, bc0: w.bc0, bcl: w.bcl }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMethod {
    Mh,
    Smc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    /// Retained MH samples.
    pub n_samples: usize,
    pub burn_in: usize,
    /// Initial MH proposal std as a fraction of the prior std (tuned during
    /// burn-in).
    pub proposal_scale: f64,
    pub n_particles: usize,
    pub ess_threshold: f64,
    pub move_steps: usize,
    /// Drop the prior's quadratic term: posterior ∝ likelihood inside the
    /// truncation box.
    pub flat_prior: bool,
    /// Cross-verification budget: at most this many finite-difference solves.
    pub max_fd: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            method: SamplerMethod::Mh,
            n_samples: 20_000,
            burn_in: 4000,
            proposal_scale: 0.1,
            n_particles: 1000,
            ess_threshold: 0.5,
            move_steps: 3,
            flat_prior: false,
            max_fd: 200,
        }
    }
}

/// Core-typed view of a validated configuration.
#[derive(Debug)]
pub struct Resolved {
    pub scenario: ThermalScenario,
    pub grid: GridSpec,
    pub prior: PriorSpec,
    pub likelihood: LikelihoodSpec,
    pub arch: NetworkArchitecture,
    pub norm: NormalizationSpec,
    pub training: TrainingConfig,
    pub weights: tps_core::pinn::LossWeights,
    pub nominal: MaterialProperties,
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("invalid config at `{path}`: {msg}"))
}

impl RunConfig {
    /// Reads and strictly parses a config file.
    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("malformed config {}: {e}", path.display())))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every field (naming the offending path) and converts to the
    /// core types.
    pub fn resolve(&self) -> CliResult<Resolved> {
        let scenario = ThermalScenario {
            thickness: self.scenario.thickness_m,
            heat_flux: self.scenario.heat_flux_w_m2,
            duration: self.scenario.duration_s,
            initial_temp: self.scenario.initial_temp_c,
            threshold: self.scenario.threshold_c,
            eval_time: self.scenario.eval_time_s,
        };
        scenario.validate().map_err(|e| field("scenario", e))?;

        let grid = GridSpec { nx: self.grid.nx, dt: self.grid.dt_s };
        grid.validate(&scenario).map_err(|e| field("grid", e))?;

        let prior = PriorSpec {
            rho: self.prior.rho.to_core(),
            k: self.prior.k.to_core(),
            cp: self.prior.cp.to_core(),
        };
        prior.rho.validate("rho").map_err(|e| field("prior.rho", e))?;
        prior.k.validate("k").map_err(|e| field("prior.k", e))?;
        prior.cp.validate("cp").map_err(|e| field("prior.cp", e))?;

        if !(self.likelihood.sigma_k.is_finite() && self.likelihood.sigma_k > 0.0) {
            return Err(field("likelihood.sigma", "must be finite and > 0"));
        }
        if !(self.likelihood.reliability_target > 0.0 && self.likelihood.reliability_target < 1.0) {
            return Err(field("likelihood.reliability_target", "must lie in (0, 1)"));
        }
        let likelihood = make_likelihood(
            scenario.threshold,
            self.likelihood.sigma_k,
            self.likelihood.reliability_target,
        )
        .map_err(|e| field("likelihood", e))?;

        let arch = NetworkArchitecture { hidden: self.network.hidden.clone() };
        arch.validate().map_err(|e| field("network.hidden", e))?;
        if !(self.network.box_sigmas > 0.0) {
            return Err(field("network.box_sigmas", "must be > 0"));
        }
        let norm =
            NormalizationSpec::for_scenario(&scenario, &prior, self.network.box_sigmas, self.network.t_scale_k)
                .map_err(|e| field("network", e))?;

        let training = TrainingConfig {
            iterations: self.training.iterations,
            learning_rate: self.training.learning_rate,
            decay_every: self.training.decay_every,
            decay_factor: self.training.decay_factor,
            interior_points: self.training.interior_points,
            constraint_points: self.training.constraint_points,
            resample_every: self.training.resample_every,
            lbfgs_iterations: self.training.lbfgs_iterations,
            seed: self.seed,
        };
        training.validate().map_err(|e| field("training", e))?;

        let weights = tps_core::pinn::LossWeights {
            pde: self.training.weights.pde,
            ic: self.training.weights.ic,
            bc0: self.training.weights.bc0,
            bcl: self.training.weights.bcl,
        };
        weights.validate().map_err(|e| field("training.weights", e))?;

        if self.sampler.n_samples == 0 {
            return Err(field("sampler.n_samples", "must be > 0"));
        }
        if !(self.sampler.proposal_scale > 0.0) {
            return Err(field("sampler.proposal_scale", "must be > 0"));
        }
        if self.sampler.n_particles < 10 {
            return Err(field("sampler.n_particles", "must be >= 10"));
        }
        if !(self.sampler.ess_threshold > 0.0 && self.sampler.ess_threshold < 1.0) {
            return Err(field("sampler.ess_threshold", "must lie in (0, 1)"));
        }
        if self.sampler.max_fd == 0 {
            return Err(field("sampler.max_fd", "must be >= 1"));
        }
        if self.threads == 0 {
            return Err(field("threads", "must be >= 1"));
        }

        Ok(Resolved {
            nominal: prior.means(),
            scenario,
            grid,
            prior,
            likelihood,
            arch,
            norm,
            training,
            weights,
        })
    }

    /// SHA-256 of the canonical serialized form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_yields_full_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.resolve().unwrap();
    }

    #[test]
    fn negative_sigma_names_the_field() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"likelihood": {"sigma_k": -1.0}}"#).unwrap();
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("likelihood.sigma"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"scneario": {}}"#).unwrap_err();
        assert!(err.to_string().contains("scneario"));
        let err =
            serde_json::from_str::<RunConfig>(r#"{"scenario": {"thickness": 0.05}}"#).unwrap_err();
        assert!(err.to_string().contains("thickness"));
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.emit();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.seed = 43;
        assert_ne!(a.hash(), b.hash());
    }
}
