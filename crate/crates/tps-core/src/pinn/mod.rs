//! Parametric physics-informed surrogate T̂(x, t, ρ, k, c_p).
//!
//! A tanh multilayer perceptron over normalized inputs, trained on the
//! conduction residual plus initial/boundary penalties (no labeled data), so
//! one network covers the whole material-property box. Inference is pure and
//! batched for the samplers.

pub mod loss;
pub mod network;
pub mod normalize;
pub mod train;
pub mod validate;

pub use loss::{loss_and_grad, pde_residual, CollocationSet, LossBreakdown, LossWeights, SurrogateField};
pub use network::{
    forward, forward_flagged, init_params, mlp_eval, predict_batch, predict_batch_flagged,
    NetworkArchitecture, NetworkParameters,
};
pub use normalize::NormalizationSpec;
pub use train::{train, HistoryEntry, TrainingConfig, TrainingReport};
pub use validate::{validate_against_fd, ValidationReport, ValidationSample, PROBE_NT, PROBE_NX};
