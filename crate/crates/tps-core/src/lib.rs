//! Reliability-constrained Bayesian design of a thermal-protection film.
//!
//! The film shields a substrate from a constant aerodynamic heat flux; the
//! design question is whether the film/substrate interface stays below a
//! threshold temperature with a target reliability when the material
//! properties (density, conductivity, specific heat) are uncertain.
//!
//! The crate provides four layers:
//!
//! * [`thermal`] — the high-fidelity reference: a Crank–Nicolson solver for
//!   1D transient conduction with an insulated interface and a constant-flux
//!   outer surface, plus the closed-form series solution used as an
//!   independent oracle.
//! * [`autodiff`] — a minimal automatic-differentiation engine: second-order
//!   dual numbers for input derivatives and a batched tape for reverse-mode
//!   parameter gradients.
//! * [`pinn`] — a parametric physics-informed surrogate T̂(x, t, ρ, k, c_p)
//!   trained on the conduction residual plus initial/boundary penalties, with
//!   fast batched prediction for the samplers.
//! * [`uq`] — the Bayesian machinery: truncated-normal prior, reliability-
//!   shifted likelihood, random-walk Metropolis–Hastings, likelihood-tempered
//!   sequential Monte Carlo, and high-fidelity cross-verification.

pub mod autodiff;
pub mod error;
pub mod pinn;
pub mod rng;
pub mod thermal;
pub mod uq;

pub use error::{Error, Result};
