//! Physics-informed loss: conduction residual plus initial and boundary
//! penalties, all nondimensionalized so the default weights are scale-free.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::autodiff::{eval_with_input_derivs, BatchValue, Dual2, Field2, NodeId, Tape};
use crate::error::{Error, Result};
use crate::pinn::network::{mlp_eval, NetworkParameters};
use crate::pinn::NormalizationSpec;
use crate::rng::Stream;
use crate::thermal::{MaterialProperties, ThermalScenario};

/// Penalty weights for the four loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub pde: f64,
    pub ic: f64,
    pub bc0: f64,
    pub bcl: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { pde: 1.0, ic: 10.0, bc0: 10.0, bcl: 10.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.pde, self.ic, self.bc0, self.bcl];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("loss weights must be finite and >= 0".into()));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidInput("at least one loss weight must be > 0".into()));
        }
        Ok(())
    }
}

/// Sampled penalty locations, in physical coordinates (x, t, ρ, k, c_p).
#[derive(Debug, Clone)]
pub struct CollocationSet {
    /// PDE residual points, strictly inside the space-time box.
    pub interior: Vec<[f64; 5]>,
    /// Initial-condition points, t = 0.
    pub initial: Vec<[f64; 5]>,
    /// Adiabatic interface points, x = 0.
    pub interface: Vec<[f64; 5]>,
    /// Heated surface points, x = L.
    pub surface: Vec<[f64; 5]>,
}

impl CollocationSet {
    /// Fresh uniform draws over the normalization box with the category
    /// constraints applied exactly. Times are drawn uniformly in the warped
    /// coordinate w = √τ (with a small floor keeping the 1/w residual factor
    /// bounded), matching the resolution the network actually has in t.
    pub fn sample(norm: &NormalizationSpec, n_interior: usize, n_constraint: usize, rng: &mut Stream) -> Self {
        const W_MIN: f64 = 0.01;
        let ranges = norm.ranges();
        let draw = |rng: &mut Stream, (lo, hi): (f64, f64)| rng.gen_range(lo..hi);
        let point = |rng: &mut Stream| {
            let w: f64 = rng.gen_range(W_MIN..1.0);
            [
                draw(rng, ranges[0]),
                ranges[1].0 + (ranges[1].1 - ranges[1].0) * w * w,
                draw(rng, ranges[2]),
                draw(rng, ranges[3]),
                draw(rng, ranges[4]),
            ]
        };
        let interior = (0..n_interior).map(|_| point(rng)).collect();
        let initial = (0..n_constraint)
            .map(|_| {
                let mut p = point(rng);
                p[1] = 0.0;
                p
            })
            .collect();
        let interface = (0..n_constraint)
            .map(|_| {
                let mut p = point(rng);
                p[0] = 0.0;
                p
            })
            .collect();
        let surface = (0..n_constraint)
            .map(|_| {
                let mut p = point(rng);
                p[0] = ranges[0].1;
                p
            })
            .collect();
        Self { interior, initial, interface, surface }
    }

    pub fn validate(&self, norm: &NormalizationSpec) -> Result<()> {
        let inside = |p: &[f64; 5]| {
            let q = MaterialProperties { rho: p[2], k: p[3], cp: p[4] };
            norm.contains(p[0], p[1], &q)
        };
        for (name, points) in [
            ("interior", &self.interior),
            ("initial", &self.initial),
            ("interface", &self.interface),
            ("surface", &self.surface),
        ] {
            if !points.iter().all(inside) {
                return Err(Error::InvalidInput(format!("{name} collocation point outside the box")));
            }
        }
        if self.initial.iter().any(|p| p[1] != 0.0) {
            return Err(Error::InvalidInput("initial points must sit at t = 0".into()));
        }
        if self.interface.iter().any(|p| p[0] != 0.0) {
            return Err(Error::InvalidInput("interface points must sit at x = 0".into()));
        }
        let l = norm.x_range.1;
        if self.surface.iter().any(|p| p[0] != l) {
            return Err(Error::InvalidInput("surface points must sit at x = L".into()));
        }
        Ok(())
    }
}

/// Conduction residual r = ∂T/∂t − α ∂²T/∂x² at a point, in physical units
/// (K/s). For the surrogate, wrap it in [`SurrogateField`] so the chain rule
/// through the normalization is applied internally.
pub fn pde_residual(field: &impl Field2, x: f64, t: f64, alpha: f64) -> f64 {
    let d = eval_with_input_derivs(field, x, t);
    d.dt - alpha * d.dxx
}

/// The surrogate as a twice-differentiable field of physical (x, t) at fixed
/// material properties.
pub struct SurrogateField<'a> {
    pub params: &'a NetworkParameters,
    pub norm: &'a NormalizationSpec,
    pub props: MaterialProperties,
}

impl Field2 for SurrogateField<'_> {
    fn eval(&self, x: Dual2, t: Dual2) -> Dual2 {
        let n = self.norm;
        let scale = |v: Dual2, (lo, hi): (f64, f64)| (v - lo) * (2.0 / (hi - lo)) - 1.0;
        let tau = (t - n.t_range.0) * (1.0 / (n.t_range.1 - n.t_range.0));
        let envelope = tau.sqrt();
        let t_norm = envelope * 2.0 - 1.0;
        let input = [
            scale(x, n.x_range),
            t_norm,
            Dual2::constant(2.0 * (self.props.rho - n.rho_range.0) / (n.rho_range.1 - n.rho_range.0) - 1.0),
            Dual2::constant(2.0 * (self.props.k - n.k_range.0) / (n.k_range.1 - n.k_range.0) - 1.0),
            Dual2::constant(2.0 * (self.props.cp - n.cp_range.0) / (n.cp_range.1 - n.cp_range.0) - 1.0),
        ];
        envelope * mlp_eval(self.params, &input) * n.t_scale + n.t0
    }
}

/// Loss value split into its four raw (unweighted) mean-square terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossBreakdown {
    pub pde: f64,
    pub ic: f64,
    pub bc0: f64,
    pub bcl: f64,
    /// Weighted total.
    pub total: f64,
}

fn to_matrix(norm: &NormalizationSpec, points: &[[f64; 5]]) -> Array2<f64> {
    let mut m = Array2::zeros((points.len(), 5));
    for (r, p) in points.iter().enumerate() {
        let q = MaterialProperties { rho: p[2], k: p[3], cp: p[4] };
        let u = norm.normalize(p[0], p[1], &q);
        for (c, v) in u.into_iter().enumerate() {
            m[[r, c]] = v;
        }
    }
    m
}

fn direction(rows: usize, col: usize) -> Array2<f64> {
    let mut d = Array2::zeros((rows, 5));
    d.column_mut(col).fill(1.0);
    d
}

fn net_on_tape(tape: &mut Tape, params: &NetworkParameters, input: NodeId) -> Result<NodeId> {
    let mut h = input;
    let n_layers = params.layers().len();
    for (li, layer) in params.layers().iter().enumerate() {
        h = tape.affine(h, *layer)?;
        if li + 1 < n_layers {
            h = tape.tanh(h);
        }
    }
    Ok(h)
}

/// Weighted physics loss and its gradient with respect to the parameters.
///
/// All four terms are dimensionless:
///   pde — mean of (r · t_end / T_scale)²,
///   ic  — mean of ((T̂ − T0) / T_scale)²,
///   bc0 — mean of (L · ∂T̂/∂x|₀ / T_scale)²,
///   bcL — mean of ((k · ∂T̂/∂x|_L − q_s) / q_s)².
///
/// With the warped time coordinate u = 2√τ − 1 and the envelope output map
/// T̂ = T0 + T_scale·w·N (w = √τ) the normalized residual expands to
/// r̃ = N/(2w) + N_u − (4 t_end α / L²)·w·N_x̃x̃ and the boundary derivatives
/// pick up a factor w; the ic term is zero by construction but remains part
/// of the reported breakdown.
pub fn loss_and_grad(
    params: &NetworkParameters,
    norm: &NormalizationSpec,
    weights: &LossWeights,
    colloc: &CollocationSet,
    scenario: &ThermalScenario,
) -> Result<(LossBreakdown, Vec<f64>)> {
    weights.validate()?;
    if weights.bcl > 0.0 && scenario.heat_flux == 0.0 {
        return Err(Error::Config(
            "surface-flux loss weight is set but the scenario flux is zero; \
             the flux-normalized residual is undefined"
                .into(),
        ));
    }
    for (name, points, weight) in [
        ("interior", &colloc.interior, weights.pde),
        ("initial", &colloc.initial, weights.ic),
        ("interface", &colloc.interface, weights.bc0),
        ("surface", &colloc.surface, weights.bcl),
    ] {
        if weight > 0.0 && points.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{name} collocation set is empty but its loss weight is {weight}"
            )));
        }
    }

    let l = scenario.thickness;
    let t_end = scenario.duration;
    let mut tape = Tape::new(&params.values);
    let mut terms: Vec<(NodeId, f64)> = Vec::new();
    let mut breakdown = LossBreakdown::default();

    let env_of = |points: &[[f64; 5]]| {
        Array1::from_iter(points.iter().map(|p| norm.envelope(p[1])))
    };

    if weights.pde > 0.0 {
        let m = to_matrix(norm, &colloc.interior);
        let rows = m.nrows();
        let t_in = tape.input(BatchValue::first_order(m.clone(), direction(rows, 1)));
        let t_out = net_on_tape(&mut tape, params, t_in)?;
        let x_in = tape.input(BatchValue::second_order(m, direction(rows, 0)));
        let x_out = net_on_tape(&mut tape, params, x_in)?;
        let envs = env_of(&colloc.interior);
        let n_val = tape.take_v(t_out);
        let n_u = tape.take_d1(t_out)?;
        let n_xx = tape.take_d2(x_out)?;
        let inv_2w = envs.mapv(|w| 0.5 / w);
        let w_alpha = Array1::from_iter(colloc.interior.iter().zip(&envs).map(|(p, &w)| {
            w * MaterialProperties { rho: p[2], k: p[3], cp: p[4] }.alpha()
        }));
        let n_over_2w = tape.mul_vec(n_val, inv_2w)?;
        let n_xx_w = tape.mul_vec(n_xx, w_alpha)?;
        let drift = tape.axpby(1.0, n_over_2w, 1.0, n_u)?;
        let resid = tape.axpby(1.0, drift, -4.0 * t_end / (l * l), n_xx_w)?;
        let node = tape.mean_sq(resid, "pde");
        breakdown.pde = tape.scalar(node);
        terms.push((node, weights.pde));
    }

    if weights.ic > 0.0 {
        let m = to_matrix(norm, &colloc.initial);
        let input = tape.input(BatchValue::plain(m));
        let out = net_on_tape(&mut tape, params, input)?;
        // (T̂ − T0)/T_scale = w·N; zero by construction at t = 0, kept in the
        // breakdown as a guard on the output map.
        let scaled = tape.mul_vec(out, env_of(&colloc.initial))?;
        let node = tape.mean_sq(scaled, "ic");
        breakdown.ic = tape.scalar(node);
        terms.push((node, weights.ic));
    }

    if weights.bc0 > 0.0 {
        let m = to_matrix(norm, &colloc.interface);
        let rows = m.nrows();
        let input = tape.input(BatchValue::first_order(m, direction(rows, 0)));
        let out = net_on_tape(&mut tape, params, input)?;
        let n_x = tape.take_d1(out)?;
        // L·∂T̂/∂x / T_scale = 2·w·N_x̃.
        let n_x_w = tape.mul_vec(n_x, env_of(&colloc.interface))?;
        let resid = tape.shift_scale(n_x_w, 2.0, 0.0);
        let node = tape.mean_sq(resid, "bc0");
        breakdown.bc0 = tape.scalar(node);
        terms.push((node, weights.bc0));
    }

    if weights.bcl > 0.0 {
        let m = to_matrix(norm, &colloc.surface);
        let rows = m.nrows();
        let input = tape.input(BatchValue::first_order(m, direction(rows, 0)));
        let out = net_on_tape(&mut tape, params, input)?;
        let n_x = tape.take_d1(out)?;
        let envs = env_of(&colloc.surface);
        let k_w = Array1::from_iter(colloc.surface.iter().zip(&envs).map(|(p, &w)| p[3] * w));
        let kn = tape.mul_vec(n_x, k_w)?;
        // (k·∂T̂/∂x − q_s)/q_s = (2 T_scale/(L q_s))·k·w·N_x̃ − 1.
        let resid = tape.shift_scale(kn, 2.0 * norm.t_scale / (l * scenario.heat_flux), -1.0);
        let node = tape.mean_sq(resid, "bcL");
        breakdown.bcl = tape.scalar(node);
        terms.push((node, weights.bcl));
    }

    let loss = tape.weighted_sum(terms)?;
    breakdown.total = tape.scalar(loss);
    let grad = tape.grad(loss)?;
    Ok((breakdown, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinn::network::{init_params, NetworkArchitecture, NetworkParameters};
    use crate::thermal::analytic_slab_flux;
    use crate::uq::PriorSpec;

    fn norm() -> NormalizationSpec {
        NormalizationSpec::for_scenario(&ThermalScenario::default(), &PriorSpec::default(), 3.0, 2000.0)
            .unwrap()
    }

    fn small_colloc(n: usize, seed: u64) -> CollocationSet {
        CollocationSet::sample(&norm(), n, n / 2 + 1, &mut crate::rng::stream(seed, 0))
    }

    #[test]
    fn sampled_collocation_is_valid() {
        let c = small_colloc(64, 3);
        c.validate(&norm()).unwrap();
        assert_eq!(c.interior.len(), 64);
        assert_eq!(c.initial.len(), 33);
    }

    #[test]
    fn manufactured_linear_in_time_field_has_constant_residual() {
        // u = T0 + c·t → r = c for any α.
        let c = 3.7;
        let f = move |_x: Dual2, t: Dual2| t * c + 25.0;
        for alpha in [1e-6, 6.25e-6, 4e-5] {
            let r = pde_residual(&f, 0.02, 77.0, alpha);
            assert!((r - c).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn manufactured_quadratic_in_space_field_has_residual_minus_alpha() {
        // u = T0 + x²/2 → r = −α.
        let f = |x: Dual2, _t: Dual2| x * x * 0.5 + 25.0;
        for alpha in [1e-6, 6.25e-6, 4e-5] {
            let r = pde_residual(&f, 0.013, 5.0, alpha);
            assert!((r + alpha).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn truncated_series_solution_satisfies_the_pde() {
        let scenario = ThermalScenario::default();
        let props = MaterialProperties { rho: 200.0, k: 1.0, cp: 800.0 };
        let alpha = props.alpha();
        // Interior point at Fo = 0.2.
        let t = 0.2 * scenario.thickness * scenario.thickness / alpha;
        let f = move |x: Dual2, tt: Dual2| {
            series_field(&scenario, &props, x, tt, 50)
        };
        let r = pde_residual(&f, 0.02, t, alpha);
        assert!(r.abs() < 1e-6, "residual {r}");
    }

    // The analytic series as a dual-number field (t > 0 only).
    fn series_field(
        scenario: &ThermalScenario,
        props: &MaterialProperties,
        x: Dual2,
        t: Dual2,
        n_terms: usize,
    ) -> Dual2 {
        use std::f64::consts::PI;
        let l = scenario.thickness;
        let alpha = props.alpha();
        let fo = t * (alpha / (l * l));
        let xi = x * (1.0 / l);
        let mut sum = Dual2::constant(0.0);
        for n in 1..=n_terms {
            let nf = n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let decay = (fo * (-nf * nf * PI * PI)).exp();
            let mode = (xi * (nf * PI)).cos();
            sum = sum + decay * mode * (sign / (nf * nf));
        }
        let bracket = fo + (xi * xi * 3.0 - 1.0) * (1.0 / 6.0) - sum * (2.0 / (PI * PI));
        bracket * (scenario.heat_flux * l / props.k) + scenario.initial_temp
    }

    #[test]
    fn zero_parameters_leave_only_the_surface_term() {
        let arch = NetworkArchitecture { hidden: vec![8, 8] };
        let params = NetworkParameters::from_values(arch.clone(), vec![0.0; arch.n_params()]).unwrap();
        let weights = LossWeights::default();
        let (bd, _) = loss_and_grad(&params, &norm(), &weights, &small_colloc(32, 1), &ThermalScenario::default())
            .unwrap();
        assert_eq!(bd.pde, 0.0);
        assert_eq!(bd.ic, 0.0);
        assert_eq!(bd.bc0, 0.0);
        assert_eq!(bd.bcl, 1.0);
        assert_eq!(bd.total, weights.bcl);
    }

    #[test]
    fn composed_series_solution_drives_all_loss_terms_to_truncation_level() {
        // Assemble the four dimensionless penalty terms from the exact
        // series solution via the scalar dual path; every term sits at
        // truncation/rounding level.
        let scenario = ThermalScenario::default();
        let n = norm();
        let colloc = small_colloc(64, 9);
        let weights = LossWeights::default();
        let mut total = 0.0;

        let mut pde = 0.0;
        for p in &colloc.interior {
            let props = MaterialProperties { rho: p[2], k: p[3], cp: p[4] };
            let f = move |x: Dual2, t: Dual2| series_field(&scenario, &props, x, t, 80);
            let r = pde_residual(&f, p[0], p[1], props.alpha());
            let r_tilde = r * scenario.duration / n.t_scale;
            pde += r_tilde * r_tilde;
        }
        total += weights.pde * pde / colloc.interior.len() as f64;

        let mut ic = 0.0;
        for p in &colloc.initial {
            let props = MaterialProperties { rho: p[2], k: p[3], cp: p[4] };
            // At t = 0 the solution is the uniform initial state.
            let v = analytic_slab_flux(&scenario, &props, p[0], 0.0, 80).unwrap();
            let e = (v - scenario.initial_temp) / n.t_scale;
            ic += e * e;
        }
        total += weights.ic * ic / colloc.initial.len() as f64;

        for (points, at_surface, w) in
            [(&colloc.interface, false, weights.bc0), (&colloc.surface, true, weights.bcl)]
        {
            let mut acc = 0.0;
            for p in points.iter() {
                let props = MaterialProperties { rho: p[2], k: p[3], cp: p[4] };
                let f = move |x: Dual2, t: Dual2| series_field(&scenario, &props, x, t, 80);
                let d = eval_with_input_derivs(&f, p[0], p[1]);
                let e = if at_surface {
                    (props.k * d.dx - scenario.heat_flux) / scenario.heat_flux
                } else {
                    scenario.thickness * d.dx / n.t_scale
                };
                acc += e * e;
            }
            total += w * acc / points.len() as f64;
        }

        assert!(total < 1e-8, "composed loss {total}");
    }

    #[test]
    fn tape_loss_agrees_with_scalar_dual_composition() {
        // The batched tape and the scalar dual path are independent
        // implementations of the same formulas; they must agree closely on a
        // random network.
        let scenario = ThermalScenario::default();
        let n = norm();
        let params = init_params(&NetworkArchitecture { hidden: vec![12, 12] }, 21).unwrap();
        let colloc = small_colloc(48, 13);
        let weights = LossWeights::default();
        let (bd, _) = loss_and_grad(&params, &n, &weights, &colloc, &scenario).unwrap();

        let mut pde = 0.0;
        for p in &colloc.interior {
            let props = MaterialProperties { rho: p[2], k: p[3], cp: p[4] };
            let field = SurrogateField { params: &params, norm: &n, props };
            let r = pde_residual(&field, p[0], p[1], props.alpha());
            let r_tilde = r * scenario.duration / n.t_scale;
            pde += r_tilde * r_tilde;
        }
        pde /= colloc.interior.len() as f64;
        assert!(
            (bd.pde - pde).abs() <= 1e-10 * pde.abs().max(1.0),
            "tape {} vs scalar {pde}",
            bd.pde
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let scenario = ThermalScenario::default();
        let n = norm();
        let weights = LossWeights::default();
        for seed in [1_u64, 2, 3] {
            let params = init_params(&NetworkArchitecture { hidden: vec![10, 10] }, seed).unwrap();
            let colloc = small_colloc(24, seed + 50);
            let (bd, grad) = loss_and_grad(&params, &n, &weights, &colloc, &scenario).unwrap();
            assert!(bd.total.is_finite());

            let mut rng = crate::rng::stream(seed, 7);
            let h = 1e-4;
            for _ in 0..20 {
                let i = rng.gen_range(0..params.n_params());
                let mut plus = params.clone();
                plus.values[i] += h;
                let mut minus = params.clone();
                minus.values[i] -= h;
                let (lp, _) = loss_and_grad(&plus, &n, &weights, &colloc, &scenario).unwrap();
                let (lm, _) = loss_and_grad(&minus, &n, &weights, &colloc, &scenario).unwrap();
                let fd = (lp.total - lm.total) / (2.0 * h);
                let denom = grad[i].abs().max(fd.abs()).max(1.0);
                assert!(
                    (grad[i] - fd).abs() / denom < 1e-5,
                    "seed {seed} coord {i}: ad {} vs fd {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn zero_flux_with_surface_weight_is_a_config_error() {
        let mut scenario = ThermalScenario::default();
        scenario.heat_flux = 0.0;
        let params = init_params(&NetworkArchitecture { hidden: vec![4] }, 0).unwrap();
        let err = loss_and_grad(&params, &norm(), &LossWeights::default(), &small_colloc(8, 0), &scenario)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn empty_category_with_nonzero_weight_is_rejected() {
        let params = init_params(&NetworkArchitecture { hidden: vec![4] }, 0).unwrap();
        let mut colloc = small_colloc(8, 0);
        colloc.initial.clear();
        let err = loss_and_grad(
            &params,
            &norm(),
            &LossWeights::default(),
            &colloc,
            &ThermalScenario::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)), "{err}");
    }
}
