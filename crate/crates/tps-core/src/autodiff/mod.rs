//! Minimal automatic differentiation for the surrogate.
//!
//! Two engines with one division of labor:
//!
//! * forward mode over the inputs — [`Dual2`] carries first and second
//!   directional derivatives, giving the ∂T/∂t, ∂T/∂x and ∂²T/∂x² terms of
//!   the conduction residual exactly;
//! * reverse mode over the parameters — the batched [`Tape`] records the
//!   dual-number program and its reverse sweep yields the loss gradient.
//!
//! The supported primitive set is closed and small (affine, tanh, +, −, ×, ÷,
//! exp, plus sin/cos on the scalar carrier for oracle composition); programs
//! are assembled from typed operations, so an unsupported primitive cannot be
//! constructed.

pub mod dual;
pub mod tape;

pub use dual::Dual2;
pub use tape::{BatchValue, LayerRef, NodeId, Tape};

use crate::error::Result;

/// A twice-differentiable scalar field of (x, t) built from the supported
/// primitives.
pub trait Field2 {
    fn eval(&self, x: Dual2, t: Dual2) -> Dual2;
}

impl<F: Fn(Dual2, Dual2) -> Dual2> Field2 for F {
    fn eval(&self, x: Dual2, t: Dual2) -> Dual2 {
        self(x, t)
    }
}

/// Field value and the PDE-relevant input derivatives at a point.
#[derive(Debug, Clone, Copy)]
pub struct PointDerivs {
    pub value: f64,
    pub dt: f64,
    pub dx: f64,
    pub dxx: f64,
}

/// Evaluates a field with exact input derivatives: ∂/∂t by a first-order
/// forward pass in the t direction, ∂/∂x and ∂²/∂x² by a second-order pass in
/// the x direction.
pub fn eval_with_input_derivs(field: &impl Field2, x: f64, t: f64) -> PointDerivs {
    let t_pass = field.eval(Dual2::constant(x), Dual2::variable(t));
    let x_pass = field.eval(Dual2::variable(x), Dual2::constant(t));
    PointDerivs { value: x_pass.v, dt: t_pass.d1, dx: x_pass.d1, dxx: x_pass.d2 }
}

/// Loss value and its reverse-mode gradient for a program built on `tape`.
///
/// The builder returns the scalar loss node; the gradient has one entry per
/// parameter with a deterministic accumulation order. A non-finite loss is an
/// error naming the offending term.
pub fn grad_params<F>(params: &[f64], build: F) -> Result<(f64, Vec<f64>)>
where
    F: FnOnce(&mut Tape) -> Result<NodeId>,
{
    let mut tape = Tape::new(params);
    let loss = build(&mut tape)?;
    let value = tape.scalar(loss);
    let grad = tape.grad(loss)?;
    Ok((value, grad))
}

// Relative with a unit floor: inputs are normalized, so derivatives are O(1)
// and the floor keeps the second-difference rounding noise (~1e-7 at
// h = 1e-4) from dominating when the true derivative happens to be tiny.
fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() / denom
}

/// Maximum relative error of the forward-mode derivatives against central
/// finite differences with step `h`. The oracle itself, exposed for tests.
pub fn fd_check(field: &impl Field2, x: f64, t: f64, h: f64) -> f64 {
    let exact = eval_with_input_derivs(field, x, t);
    let at = |x: f64, t: f64| field.eval(Dual2::constant(x), Dual2::constant(t)).v;
    let fd_dt = (at(x, t + h) - at(x, t - h)) / (2.0 * h);
    let fd_dx = (at(x + h, t) - at(x - h, t)) / (2.0 * h);
    let fd_dxx = (at(x + h, t) - 2.0 * at(x, t) + at(x - h, t)) / (h * h);
    rel_err(exact.dt, fd_dt).max(rel_err(exact.dx, fd_dx)).max(rel_err(exact.dxx, fd_dxx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn quadratic_field_derivatives() {
        let f = |x: Dual2, _t: Dual2| x * x;
        let d = eval_with_input_derivs(&f, 3.0, 0.5);
        assert_eq!(d.value, 9.0);
        assert_eq!(d.dt, 0.0);
        assert_eq!(d.dx, 6.0);
        assert_eq!(d.dxx, 2.0);
    }

    #[test]
    fn separable_analytic_field() {
        // f(x, t) = t·sin(x): ∂f/∂t = sin x, ∂²f/∂x² = −t sin x.
        let f = |x: Dual2, t: Dual2| t * x.sin();
        let (x0, t0) = (0.8, 2.5);
        let d = eval_with_input_derivs(&f, x0, t0);
        assert!((d.dt - x0.sin()).abs() < 1e-14);
        assert!((d.dx - t0 * x0.cos()).abs() < 1e-14);
        assert!((d.dxx + t0 * x0.sin()).abs() < 1e-14);
    }

    #[test]
    fn fd_check_is_zero_for_constants() {
        let f = |_x: Dual2, _t: Dual2| Dual2::constant(4.2);
        assert_eq!(fd_check(&f, 0.3, 0.7, 1e-4), 0.0);
    }

    #[test]
    fn fd_check_is_tiny_for_quadratics() {
        // Central differences are exact for quadratics up to rounding.
        let f = |x: Dual2, _t: Dual2| x * x;
        assert!(fd_check(&f, 0.9, 0.0, 1e-4) < 1e-8);
    }

    #[test]
    fn random_two_layer_tanh_network_matches_finite_differences() {
        let mut rng = crate::rng::stream(11, 0);
        for _ in 0..5 {
            let w1: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b1: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let w2: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let net = move |x: Dual2, t: Dual2| {
                let mut out = Dual2::constant(0.0);
                for j in 0..4 {
                    let pre = x * w1[2 * j] + t * w1[2 * j + 1] + b1[j];
                    out = out + pre.tanh() * w2[j];
                }
                out
            };
            let x = rng.gen_range(-0.9..0.9);
            let t = rng.gen_range(-0.9..0.9);
            let err = fd_check(&net, x, t, 1e-4);
            assert!(err < 1e-5, "fd mismatch {err} at ({x}, {t})");
        }
    }
}
