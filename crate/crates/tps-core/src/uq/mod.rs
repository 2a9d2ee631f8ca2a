//! Bayesian machinery: prior, reliability-shifted likelihood, posterior
//! samplers (random-walk Metropolis–Hastings and likelihood-tempered
//! sequential Monte Carlo), reliability computation, and high-fidelity
//! cross-verification.

pub mod mh;
pub mod model;
pub mod normal;
pub mod reliability;
pub mod smc;

pub use mh::{mh_sample, random_walk_mh, Chain, MhOptions, MhRun};
pub use model::{
    log_prior, make_likelihood, ForwardModel, LikelihoodSpec, ParamPrior, PosteriorEvaluator,
    PriorSpec,
};
pub use normal::{erf, erfc, normal_cdf, normal_pdf, z_quantile};
pub use reliability::{cross_verify, reliability, ReliabilityReport, VerificationModel};
pub use smc::{effective_sample_size, smc_sample, systematic_resample, ParticleEnsemble, SmcOptions};
