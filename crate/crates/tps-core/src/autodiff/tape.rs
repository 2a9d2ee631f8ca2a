//! Batched reverse-mode tape over dual-valued nodes.
//!
//! Each node holds a batch of second-order dual numbers (value plus up to two
//! tracked directional-derivative components), so one recorded program
//! evaluates a whole collocation batch at once. The reverse sweep
//! differentiates a scalar loss with respect to the flat parameter vector by
//! running the adjoint of every dual-number primitive — reverse mode over the
//! forward-mode program.
//!
//! A tape belongs to a single evaluation: records are appended in topological
//! order and never shared across concurrent evaluations.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis, Zip};

use crate::error::{Error, Result};

/// Index of a recorded node.
pub type NodeId = usize;

/// A weight matrix (row-major, `out_dim` × `in_dim`) and optional bias inside
/// the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerRef {
    pub w_offset: usize,
    pub b_offset: Option<usize>,
    pub out_dim: usize,
    pub in_dim: usize,
}

impl LayerRef {
    pub fn n_params(&self) -> usize {
        self.out_dim * self.in_dim + if self.b_offset.is_some() { self.out_dim } else { 0 }
    }
}

/// Batch of dual values: `v` is batch × features; `d1`/`d2` are the tracked
/// derivative components along the seeded direction. `None` means the
/// component is not tracked for this evaluation (distinct from zero).
#[derive(Debug, Clone)]
pub struct BatchValue {
    pub v: Array2<f64>,
    pub d1: Option<Array2<f64>>,
    pub d2: Option<Array2<f64>>,
}

impl BatchValue {
    /// Value-only batch.
    pub fn plain(v: Array2<f64>) -> Self {
        Self { v, d1: None, d2: None }
    }

    /// First-order batch with a seeded direction.
    pub fn first_order(v: Array2<f64>, d1: Array2<f64>) -> Self {
        Self { v, d1: Some(d1), d2: None }
    }

    /// Second-order batch; the input seed has zero curvature.
    pub fn second_order(v: Array2<f64>, d1: Array2<f64>) -> Self {
        let d2 = Array2::zeros(v.dim());
        Self { v, d1: Some(d1), d2: Some(d2) }
    }

    fn dim(&self) -> (usize, usize) {
        self.v.dim()
    }
}

#[derive(Debug)]
enum Op {
    /// Constant leaf; receives no adjoint.
    Input,
    /// x·Wᵀ (+ b).
    Affine { input: NodeId, layer: LayerRef },
    Tanh { input: NodeId },
    /// Value-only copy of a node's value component.
    TakeV { input: NodeId },
    /// Value-only node holding the first derivative component.
    TakeD1 { input: NodeId },
    /// Value-only node holding the second derivative component.
    TakeD2 { input: NodeId },
    /// a·x + c (the shift applies to the value component only).
    ShiftScale { input: NodeId, scale: f64 },
    /// a·x + b·y on value-only nodes.
    AxPbY { x: NodeId, y: NodeId, a: f64, b: f64 },
    /// Row-wise product with a constant vector, on value-only nodes.
    MulVec { input: NodeId, factor: Array1<f64> },
    /// Scalar mean of squared values.
    MeanSq { input: NodeId, label: &'static str },
    /// Scalar Σ wᵢ·termᵢ over scalar nodes.
    WeightedSum { terms: Vec<(NodeId, f64)> },
}

struct Node {
    op: Op,
    value: BatchValue,
}

#[derive(Default)]
struct Adjoint {
    v: Option<Array2<f64>>,
    d1: Option<Array2<f64>>,
    d2: Option<Array2<f64>>,
}

fn accumulate(slot: &mut Option<Array2<f64>>, delta: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &delta,
        None => *slot = Some(delta),
    }
}

// Zero-initialized accumulator for in-place adjoint updates.
fn ensure(slot: &mut Option<Array2<f64>>, dim: (usize, usize)) -> &mut Array2<f64> {
    slot.get_or_insert_with(|| Array2::zeros(dim))
}

/// Recorded program over one parameter vector.
pub struct Tape<'p> {
    params: &'p [f64],
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Self { params, nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: BatchValue) -> NodeId {
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &BatchValue {
        &self.nodes[id].value
    }

    /// The plain value of a scalar (1×1) node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id].value.v[[0, 0]]
    }

    pub fn input(&mut self, value: BatchValue) -> NodeId {
        self.push(Op::Input, value)
    }

    fn weight_view(&self, layer: &LayerRef) -> ArrayView2<'p, f64> {
        ArrayView2::from_shape(
            (layer.out_dim, layer.in_dim),
            &self.params[layer.w_offset..layer.w_offset + layer.out_dim * layer.in_dim],
        )
        .expect("layer reference consistent with parameter vector")
    }

    fn bias_view(&self, layer: &LayerRef) -> Option<ArrayView1<'p, f64>> {
        layer.b_offset.map(|off| ArrayView1::from(&self.params[off..off + layer.out_dim]))
    }

    pub fn affine(&mut self, input: NodeId, layer: LayerRef) -> Result<NodeId> {
        let x = &self.nodes[input].value;
        if x.dim().1 != layer.in_dim {
            return Err(Error::InvalidInput(format!(
                "affine expects {} input columns, node has {}",
                layer.in_dim,
                x.dim().1
            )));
        }
        let w = self.weight_view(&layer);
        let wt = w.t();
        let mut v = x.v.dot(&wt);
        if let Some(b) = self.bias_view(&layer) {
            v += &b;
        }
        let d1 = x.d1.as_ref().map(|d| d.dot(&wt));
        let d2 = x.d2.as_ref().map(|d| d.dot(&wt));
        Ok(self.push(Op::Affine { input, layer }, BatchValue { v, d1, d2 }))
    }

    pub fn tanh(&mut self, input: NodeId) -> NodeId {
        let x = &self.nodes[input].value;
        let t = x.v.mapv(f64::tanh);
        let d1 = x.d1.as_ref().map(|x1| {
            let mut out = Array2::zeros(t.raw_dim());
            Zip::from(&mut out).and(&t).and(x1).for_each(|o, &t, &x1| *o = (1.0 - t * t) * x1);
            out
        });
        let d2 = match (&x.d1, &x.d2) {
            (Some(x1), Some(x2)) => {
                let mut out = Array2::zeros(t.raw_dim());
                Zip::from(&mut out).and(&t).and(x1).and(x2).for_each(|o, &t, &x1, &x2| {
                    let s = 1.0 - t * t;
                    *o = s * x2 - 2.0 * t * s * x1 * x1;
                });
                Some(out)
            }
            _ => None,
        };
        self.push(Op::Tanh { input }, BatchValue { v: t, d1, d2 })
    }

    pub fn take_v(&mut self, input: NodeId) -> NodeId {
        let v = self.nodes[input].value.v.clone();
        self.push(Op::TakeV { input }, BatchValue::plain(v))
    }

    pub fn take_d1(&mut self, input: NodeId) -> Result<NodeId> {
        let d1 = self.nodes[input]
            .value
            .d1
            .clone()
            .ok_or_else(|| Error::InvalidInput("take_d1 on a node without a tracked first derivative".into()))?;
        Ok(self.push(Op::TakeD1 { input }, BatchValue::plain(d1)))
    }

    pub fn take_d2(&mut self, input: NodeId) -> Result<NodeId> {
        let d2 = self.nodes[input]
            .value
            .d2
            .clone()
            .ok_or_else(|| Error::InvalidInput("take_d2 on a node without a tracked second derivative".into()))?;
        Ok(self.push(Op::TakeD2 { input }, BatchValue::plain(d2)))
    }

    pub fn shift_scale(&mut self, input: NodeId, scale: f64, shift: f64) -> NodeId {
        let x = &self.nodes[input].value;
        let v = x.v.mapv(|v| scale * v + shift);
        let d1 = x.d1.as_ref().map(|d| d.mapv(|d| scale * d));
        let d2 = x.d2.as_ref().map(|d| d.mapv(|d| scale * d));
        self.push(Op::ShiftScale { input, scale }, BatchValue { v, d1, d2 })
    }

    pub fn axpby(&mut self, a: f64, x: NodeId, b: f64, y: NodeId) -> Result<NodeId> {
        let (xv, yv) = (&self.nodes[x].value, &self.nodes[y].value);
        if xv.dim() != yv.dim() {
            return Err(Error::InvalidInput(format!("axpby shape mismatch {:?} vs {:?}", xv.dim(), yv.dim())));
        }
        if xv.d1.is_some() || yv.d1.is_some() {
            return Err(Error::InvalidInput("axpby is defined on value-only nodes".into()));
        }
        let v = a * &xv.v + b * &yv.v;
        Ok(self.push(Op::AxPbY { x, y, a, b }, BatchValue::plain(v)))
    }

    pub fn mul_vec(&mut self, input: NodeId, factor: Array1<f64>) -> Result<NodeId> {
        let x = &self.nodes[input].value;
        if x.d1.is_some() {
            return Err(Error::InvalidInput("mul_vec is defined on value-only nodes".into()));
        }
        if x.dim().0 != factor.len() {
            return Err(Error::InvalidInput(format!(
                "mul_vec factor length {} does not match batch size {}",
                factor.len(),
                x.dim().0
            )));
        }
        let col = factor.view().insert_axis(Axis(1));
        let v = &x.v * &col;
        Ok(self.push(Op::MulVec { input, factor }, BatchValue::plain(v)))
    }

    pub fn mean_sq(&mut self, input: NodeId, label: &'static str) -> NodeId {
        let x = &self.nodes[input].value;
        let n = (x.dim().0 * x.dim().1) as f64;
        let s = x.v.iter().map(|v| v * v).sum::<f64>() / n;
        self.push(Op::MeanSq { input, label }, BatchValue::plain(Array2::from_elem((1, 1), s)))
    }

    pub fn weighted_sum(&mut self, terms: Vec<(NodeId, f64)>) -> Result<NodeId> {
        let mut total = 0.0;
        for &(id, w) in &terms {
            let v = self.scalar(id);
            if !v.is_finite() {
                let label = match self.nodes[id].op {
                    Op::MeanSq { label, .. } => label,
                    _ => "<unlabeled>",
                };
                return Err(Error::Numerical(format!("non-finite value in loss term '{label}': {v}")));
            }
            total += w * v;
        }
        Ok(self.push(Op::WeightedSum { terms }, BatchValue::plain(Array2::from_elem((1, 1), total))))
    }

    /// Reverse sweep from a scalar node; returns d(scalar)/d(params).
    /// Deterministic accumulation order: adjoints are propagated in strict
    /// reverse topological order.
    pub fn grad(&self, loss: NodeId) -> Result<Vec<f64>> {
        let loss_value = self.scalar(loss);
        if !loss_value.is_finite() {
            return Err(Error::Numerical(format!("cannot differentiate a non-finite loss: {loss_value}")));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut adjoints: Vec<Adjoint> = (0..self.nodes.len()).map(|_| Adjoint::default()).collect();
        adjoints[loss].v = Some(Array2::from_elem((1, 1), 1.0));

        for id in (0..=loss).rev() {
            let adj = std::mem::take(&mut adjoints[id]);
            if adj.v.is_none() && adj.d1.is_none() && adj.d2.is_none() {
                continue;
            }
            match &self.nodes[id].op {
                Op::Input => {}
                Op::Affine { input, layer } => {
                    let w = self.weight_view(layer);
                    let x = &self.nodes[*input].value;
                    let components: [(&Option<Array2<f64>>, Option<&Array2<f64>>); 3] = [
                        (&adj.v, Some(&x.v)),
                        (&adj.d1, x.d1.as_ref()),
                        (&adj.d2, x.d2.as_ref()),
                    ];
                    for (idx, (abar, xcomp)) in components.iter().enumerate() {
                        let Some(abar) = abar else { continue };
                        // Weight gradient ȳᵀ·x accumulated straight into the
                        // flat gradient's row-major weight block.
                        let xcomp = xcomp.expect("forward tracked this component");
                        let mut gw = ArrayViewMut2::from_shape(
                            (layer.out_dim, layer.in_dim),
                            &mut grad[layer.w_offset..layer.w_offset + layer.out_dim * layer.in_dim],
                        )
                        .expect("weight block is contiguous");
                        general_mat_mul(1.0, &abar.t(), xcomp, 1.0, &mut gw);
                        // Bias receives only the value adjoint.
                        if idx == 0 {
                            if let Some(b_off) = layer.b_offset {
                                let colsum = abar.sum_axis(Axis(0));
                                for (j, g) in colsum.iter().enumerate() {
                                    grad[b_off + j] += g;
                                }
                            }
                        }
                        // Input adjoint.
                        let slot = match idx {
                            0 => &mut adjoints[*input].v,
                            1 => &mut adjoints[*input].d1,
                            _ => &mut adjoints[*input].d2,
                        };
                        let acc = ensure(slot, x.dim());
                        general_mat_mul(1.0, abar, &w, 1.0, acc);
                    }
                }
                Op::Tanh { input } => {
                    let x = &self.nodes[*input].value;
                    let t = &self.nodes[id].value.v;
                    let dim = x.dim();
                    if let Some(ybar) = &adj.v {
                        let acc = ensure(&mut adjoints[*input].v, dim);
                        Zip::from(acc).and(ybar).and(t).for_each(|a, &y, &t| *a += y * (1.0 - t * t));
                    }
                    if let Some(ybar) = &adj.d1 {
                        let x1 = x.d1.as_ref().expect("forward tracked d1");
                        let acc = ensure(&mut adjoints[*input].v, dim);
                        Zip::from(acc).and(ybar).and(t).and(x1).for_each(|a, &y, &t, &x1| {
                            *a += y * (-2.0 * t * (1.0 - t * t) * x1);
                        });
                        let acc = ensure(&mut adjoints[*input].d1, dim);
                        Zip::from(acc).and(ybar).and(t).for_each(|a, &y, &t| *a += y * (1.0 - t * t));
                    }
                    if let Some(ybar) = &adj.d2 {
                        let x1 = x.d1.as_ref().expect("forward tracked d1");
                        let x2 = x.d2.as_ref().expect("forward tracked d2");
                        // y.d2 = f″·x1² + f′·x2 with f′ = s, f″ = −2ts,
                        // f‴ = s·(6t² − 2).
                        let acc = ensure(&mut adjoints[*input].v, dim);
                        Zip::from(acc).and(ybar).and(t).and(x1).and(x2).for_each(
                            |a, &y, &t, &x1, &x2| {
                                let s = 1.0 - t * t;
                                let fpp = -2.0 * t * s;
                                let fppp = s * (6.0 * t * t - 2.0);
                                *a += y * (fppp * x1 * x1 + fpp * x2);
                            },
                        );
                        let acc = ensure(&mut adjoints[*input].d1, dim);
                        Zip::from(acc).and(ybar).and(t).and(x1).for_each(|a, &y, &t, &x1| {
                            *a += y * (-4.0 * t * (1.0 - t * t) * x1);
                        });
                        let acc = ensure(&mut adjoints[*input].d2, dim);
                        Zip::from(acc).and(ybar).and(t).for_each(|a, &y, &t| *a += y * (1.0 - t * t));
                    }
                }
                Op::TakeV { input } => {
                    if let Some(ybar) = adj.v {
                        accumulate(&mut adjoints[*input].v, ybar);
                    }
                }
                Op::TakeD1 { input } => {
                    if let Some(ybar) = adj.v {
                        accumulate(&mut adjoints[*input].d1, ybar);
                    }
                }
                Op::TakeD2 { input } => {
                    if let Some(ybar) = adj.v {
                        accumulate(&mut adjoints[*input].d2, ybar);
                    }
                }
                Op::ShiftScale { input, scale, .. } => {
                    if let Some(ybar) = &adj.v {
                        accumulate(&mut adjoints[*input].v, ybar * *scale);
                    }
                    if let Some(ybar) = &adj.d1 {
                        accumulate(&mut adjoints[*input].d1, ybar * *scale);
                    }
                    if let Some(ybar) = &adj.d2 {
                        accumulate(&mut adjoints[*input].d2, ybar * *scale);
                    }
                }
                Op::AxPbY { x, y, a, b } => {
                    if let Some(ybar) = &adj.v {
                        accumulate(&mut adjoints[*x].v, ybar * *a);
                        accumulate(&mut adjoints[*y].v, ybar * *b);
                    }
                }
                Op::MulVec { input, factor } => {
                    if let Some(ybar) = &adj.v {
                        let col = factor.view().insert_axis(Axis(1));
                        accumulate(&mut adjoints[*input].v, ybar * &col);
                    }
                }
                Op::MeanSq { input, .. } => {
                    if let Some(ybar) = &adj.v {
                        let x = &self.nodes[*input].value;
                        let n = (x.dim().0 * x.dim().1) as f64;
                        let scale = 2.0 / n * ybar[[0, 0]];
                        let acc = ensure(&mut adjoints[*input].v, x.dim());
                        Zip::from(acc).and(&x.v).for_each(|a, &v| *a += scale * v);
                    }
                }
                Op::WeightedSum { terms } => {
                    if let Some(ybar) = &adj.v {
                        let seed = ybar[[0, 0]];
                        for &(term, w) in terms {
                            accumulate(&mut adjoints[term].v, Array2::from_elem((1, 1), w * seed));
                        }
                    }
                }
            }
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Dual2;

    #[test]
    fn gradient_of_theta_squared() {
        let params = [1.7];
        let mut tape = Tape::new(&params);
        let one = tape.input(BatchValue::plain(Array2::from_elem((1, 1), 1.0)));
        let layer = LayerRef { w_offset: 0, b_offset: None, out_dim: 1, in_dim: 1 };
        let theta = tape.affine(one, layer).unwrap();
        let loss = tape.mean_sq(theta, "theta_sq");
        assert!((tape.scalar(loss) - 1.7 * 1.7).abs() < 1e-15);
        let grad = tape.grad(loss).unwrap();
        assert!((grad[0] - 2.0 * 1.7).abs() < 1e-14);
    }

    #[test]
    fn affine_least_squares_gradient_is_closed_form() {
        // loss = (W x + b − y)² with a single sample; gradient is
        // 2 (W x + b − y) · (x, 1).
        let params = [0.8, -0.3, 0.25]; // W (1×2), b
        let x = [1.3, -2.1];
        let y = 0.7;
        let mut tape = Tape::new(&params);
        let input = tape.input(BatchValue::plain(Array2::from_shape_vec((1, 2), x.to_vec()).unwrap()));
        let layer = LayerRef { w_offset: 0, b_offset: Some(2), out_dim: 1, in_dim: 2 };
        let out = tape.affine(input, layer).unwrap();
        let resid = tape.shift_scale(out, 1.0, -y);
        let loss = tape.mean_sq(resid, "lsq");
        let grad = tape.grad(loss).unwrap();
        let r = params[0] * x[0] + params[1] * x[1] + params[2] - y;
        let want = [2.0 * r * x[0], 2.0 * r * x[1], 2.0 * r];
        for (g, w) in grad.iter().zip(want) {
            assert!((g - w).abs() < 1e-13, "grad {g} vs closed form {w}");
        }
    }

    #[test]
    fn reverse_matches_forward_for_single_parameter() {
        // f(θ) = tanh(c·θ)² via the tape (reverse) and via scalar duals
        // (forward); the two engines must agree to 1e-12 relative.
        let c = 0.9;
        let theta = 0.37;
        let params = [theta];
        let mut tape = Tape::new(&params);
        let input = tape.input(BatchValue::plain(Array2::from_elem((1, 1), c)));
        let layer = LayerRef { w_offset: 0, b_offset: None, out_dim: 1, in_dim: 1 };
        let pre = tape.affine(input, layer).unwrap();
        let act = tape.tanh(pre);
        let loss = tape.mean_sq(act, "f");
        let reverse = tape.grad(loss).unwrap()[0];

        let d = (Dual2::variable(theta) * c).tanh();
        let forward = (d * d).d1;
        assert!((reverse - forward).abs() <= 1e-12 * forward.abs().max(1.0));
    }

    #[test]
    fn second_order_components_flow_through_the_network() {
        // d/dx and d²/dx² of tanh(w·x + b) via the tape's dual components
        // against the scalar dual-number evaluation.
        let params = [1.3, -0.2];
        let x0 = 0.45;
        let mut tape = Tape::new(&params);
        let v = Array2::from_elem((1, 1), x0);
        let d1 = Array2::from_elem((1, 1), 1.0);
        let input = tape.input(BatchValue::second_order(v, d1));
        let layer = LayerRef { w_offset: 0, b_offset: Some(1), out_dim: 1, in_dim: 1 };
        let pre = tape.affine(input, layer).unwrap();
        let act = tape.tanh(pre);
        let got = tape.value(act);

        let want = (Dual2::variable(x0) * params[0] + params[1]).tanh();
        assert!((got.v[[0, 0]] - want.v).abs() < 1e-15);
        assert!((got.d1.as_ref().unwrap()[[0, 0]] - want.d1).abs() < 1e-15);
        assert!((got.d2.as_ref().unwrap()[[0, 0]] - want.d2).abs() < 1e-15);
    }

    #[test]
    fn gradients_are_bit_identical_across_evaluations() {
        let params: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let run = || {
            let mut tape = Tape::new(&params);
            let v = Array2::from_shape_vec((2, 3), vec![0.1, -0.4, 0.9, 1.1, 0.2, -0.7]).unwrap();
            let d1 = Array2::from_shape_vec((2, 3), vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
            let input = tape.input(BatchValue::second_order(v, d1));
            let layer = LayerRef { w_offset: 0, b_offset: Some(9), out_dim: 3, in_dim: 3 };
            let h = tape.affine(input, layer).unwrap();
            let h = tape.tanh(h);
            let dxx = tape.take_d2(h).unwrap();
            let loss = tape.mean_sq(dxx, "dxx");
            tape.grad(loss).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_loss_terms_are_named() {
        let params = [f64::INFINITY];
        let mut tape = Tape::new(&params);
        let one = tape.input(BatchValue::plain(Array2::from_elem((1, 1), 1.0)));
        let layer = LayerRef { w_offset: 0, b_offset: None, out_dim: 1, in_dim: 1 };
        let out = tape.affine(one, layer).unwrap();
        let term = tape.mean_sq(out, "pde");
        let err = tape.weighted_sum(vec![(term, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("pde"), "{err}");
    }

    #[test]
    fn take_d1_requires_a_tracked_component() {
        let params = [0.0];
        let mut tape = Tape::new(&params);
        let plain = tape.input(BatchValue::plain(Array2::zeros((1, 1))));
        assert!(tape.take_d1(plain).is_err());
        assert!(tape.take_d2(plain).is_err());
    }
}
