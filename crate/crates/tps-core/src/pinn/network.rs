//! Multilayer perceptron over (x, t, ρ, k, c_p): parameter layout,
//! initialization, and inference paths.

use rand::Rng;

use crate::autodiff::{Dual2, LayerRef};
use crate::error::{Error, Result};
use crate::pinn::NormalizationSpec;
use crate::thermal::MaterialProperties;

pub const INPUT_DIM: usize = 5;
pub const OUTPUT_DIM: usize = 1;

/// Hidden-layer widths; tanh on hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkArchitecture {
    pub hidden: Vec<usize>,
}

impl Default for NetworkArchitecture {
    fn default() -> Self {
        Self { hidden: vec![64, 64, 64, 64] }
    }
}

impl NetworkArchitecture {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::InvalidInput("network needs at least one hidden layer".into()));
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidInput("hidden widths must be >= 1".into()));
        }
        Ok(())
    }

    /// (in, out) of every affine layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = INPUT_DIM;
        for &w in &self.hidden {
            dims.push((prev, w));
            prev = w;
        }
        dims.push((prev, OUTPUT_DIM));
        dims
    }

    pub fn n_params(&self) -> usize {
        self.layer_dims().iter().map(|&(i, o)| i * o + o).sum()
    }
}

/// Flat parameter vector plus the per-layer views into it.
/// Entries are finite by construction; each layer holds a row-major weight
/// matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParameters {
    pub arch: NetworkArchitecture,
    pub values: Vec<f64>,
    layers: Vec<LayerRef>,
}

fn layer_refs(arch: &NetworkArchitecture) -> Vec<LayerRef> {
    let mut layers = Vec::new();
    let mut offset = 0;
    for (in_dim, out_dim) in arch.layer_dims() {
        layers.push(LayerRef {
            w_offset: offset,
            b_offset: Some(offset + in_dim * out_dim),
            out_dim,
            in_dim,
        });
        offset += in_dim * out_dim + out_dim;
    }
    layers
}

impl NetworkParameters {
    pub fn from_values(arch: NetworkArchitecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.n_params() {
            return Err(Error::InvalidInput(format!(
                "parameter vector has {} entries, architecture needs {}",
                values.len(),
                arch.n_params()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("parameter vector contains non-finite entries".into()));
        }
        let layers = layer_refs(&arch);
        Ok(Self { arch, values, layers })
    }

    pub fn layers(&self) -> &[LayerRef] {
        &self.layers
    }

    pub fn n_params(&self) -> usize {
        self.values.len()
    }
}

/// Xavier/Glorot uniform initialization: W ~ U(−a, a) with
/// a = √(6 / (fan_in + fan_out)), biases zero. Deterministic given the seed.
pub fn init_params(arch: &NetworkArchitecture, seed: u64) -> Result<NetworkParameters> {
    arch.validate()?;
    let mut rng = crate::rng::stream(seed, 0);
    let mut values = Vec::with_capacity(arch.n_params());
    for (in_dim, out_dim) in arch.layer_dims() {
        let a = (6.0 / (in_dim + out_dim) as f64).sqrt();
        for _ in 0..in_dim * out_dim {
            values.push(rng.gen_range(-a..a));
        }
        values.extend(std::iter::repeat(0.0).take(out_dim));
    }
    NetworkParameters::from_values(arch.clone(), values)
}

/// Scalar-like values the MLP can run on: plain numbers for inference and
/// dual numbers for input derivatives.
pub trait Activation: Copy {
    fn from_f64(v: f64) -> Self;
    fn add(self, other: Self) -> Self;
    fn scale_add(self, w: f64, x: Self) -> Self;
    fn tanh_act(self) -> Self;
}

impl Activation for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale_add(self, w: f64, x: Self) -> Self {
        self + w * x
    }
    fn tanh_act(self) -> Self {
        self.tanh()
    }
}

impl Activation for Dual2 {
    fn from_f64(v: f64) -> Self {
        Dual2::constant(v)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale_add(self, w: f64, x: Self) -> Self {
        self + x * w
    }
    fn tanh_act(self) -> Self {
        self.tanh()
    }
}

/// Raw network output for one normalized input point. The accumulation order
/// (bias first, then inputs in index order) is shared by every inference
/// path, so scalar and batched evaluations agree bitwise.
pub fn mlp_eval<T: Activation>(params: &NetworkParameters, input: &[T]) -> T {
    debug_assert_eq!(input.len(), INPUT_DIM);
    let mut h: Vec<T> = input.to_vec();
    let mut next: Vec<T> = Vec::new();
    let n_layers = params.layers.len();
    for (li, layer) in params.layers.iter().enumerate() {
        next.clear();
        let b_off = layer.b_offset.expect("network layers always carry biases");
        for j in 0..layer.out_dim {
            let mut acc = T::from_f64(params.values[b_off + j]);
            let row = layer.w_offset + j * layer.in_dim;
            for (i, hi) in h.iter().enumerate() {
                acc = acc.scale_add(params.values[row + i], *hi);
            }
            if li + 1 < n_layers {
                acc = acc.tanh_act();
            }
            next.push(acc);
        }
        std::mem::swap(&mut h, &mut next);
    }
    h[0]
}

/// Surrogate temperature at a physical point, °C. Out-of-box inputs are
/// clamped to the box edge; use [`forward_flagged`] to observe the clamp.
pub fn forward(
    params: &NetworkParameters,
    norm: &NormalizationSpec,
    x: f64,
    t: f64,
    q: &MaterialProperties,
) -> Result<f64> {
    forward_flagged(params, norm, x, t, q).map(|(v, _)| v)
}

/// Surrogate temperature plus a flag marking that some input was clamped to
/// the normalization box.
pub fn forward_flagged(
    params: &NetworkParameters,
    norm: &NormalizationSpec,
    x: f64,
    t: f64,
    q: &MaterialProperties,
) -> Result<(f64, bool)> {
    let (u, clamped) = norm.normalize_clamped(x, t, q);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite surrogate input ({x}, {t}, {q:?})")));
    }
    // The output envelope w = √τ is linear in the warped time coordinate;
    // using the clamped coordinate keeps out-of-box queries consistent with
    // the clamped network inputs.
    let envelope = 0.5 * (u[1] + 1.0);
    let out = norm.t0 + norm.t_scale * envelope * mlp_eval(params, &u);
    if !out.is_finite() {
        return Err(Error::Numerical(format!("surrogate produced a non-finite value at ({x}, {t})")));
    }
    Ok((out, clamped))
}

const PAR_CHUNK: usize = 512;

/// Batched prediction, °C per point. Element-wise identical to [`forward`];
/// chunks may be evaluated on separate threads, with results assembled in
/// input order so the output is independent of the thread count.
pub fn predict_batch(
    params: &NetworkParameters,
    norm: &NormalizationSpec,
    points: &[(f64, f64, MaterialProperties)],
) -> Result<Vec<f64>> {
    predict_batch_flagged(params, norm, points).map(|(v, _)| v)
}

/// Batched prediction plus the number of clamped points.
pub fn predict_batch_flagged(
    params: &NetworkParameters,
    norm: &NormalizationSpec,
    points: &[(f64, f64, MaterialProperties)],
) -> Result<(Vec<f64>, usize)> {
    let eval_chunk = |chunk: &[(f64, f64, MaterialProperties)]| -> Result<(Vec<f64>, usize)> {
        let mut out = Vec::with_capacity(chunk.len());
        let mut clamped = 0;
        for (x, t, q) in chunk {
            let (v, c) = forward_flagged(params, norm, *x, *t, q)?;
            out.push(v);
            clamped += c as usize;
        }
        Ok((out, clamped))
    };

    if points.len() <= PAR_CHUNK {
        return eval_chunk(points);
    }
    use rayon::prelude::*;
    let chunks: Vec<Result<(Vec<f64>, usize)>> =
        points.par_chunks(PAR_CHUNK).map(eval_chunk).collect();
    let mut out = Vec::with_capacity(points.len());
    let mut clamped = 0;
    for chunk in chunks {
        let (vals, c) = chunk?;
        out.extend(vals);
        clamped += c;
    }
    Ok((out, clamped))
}
