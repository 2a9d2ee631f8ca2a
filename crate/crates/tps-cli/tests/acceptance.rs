//! Acceptance suite: every release criterion as an executable check, one
//! test per criterion, each printing a PASS line with the measured numbers.
//!
//! The surrogate used by criteria 3–6 is trained once (default config) and
//! shared; run with `--nocapture` to see the measurements.

use std::path::PathBuf;
use std::sync::LazyLock;
use std::time::Instant;

use rand::Rng;
use tempfile::TempDir;

use tps_cli::commands;
use tps_cli::config::{RunConfig, SamplerMethod};
use tps_cli::model_file::load_model;
use tps_core::autodiff::Dual2;
use tps_core::pinn::{
    loss_and_grad, pde_residual, validate_against_fd, CollocationSet, LossWeights,
    NetworkArchitecture, NetworkParameters, NormalizationSpec,
};
use tps_core::thermal::{
    analytic_slab_flux, solve_fd, GridSpec, MaterialProperties, ThermalScenario,
};
use tps_core::uq::{
    cross_verify, mh_sample, random_walk_mh, smc_sample, systematic_resample, Chain, ForwardModel,
    MhOptions, PosteriorEvaluator, SmcOptions,
};

struct Trained {
    _dir: TempDir,
    model_path: PathBuf,
    params: NetworkParameters,
    norm: NormalizationSpec,
    train_seconds: f64,
}

static TRAINED: LazyLock<Trained> = LazyLock::new(|| {
    let dir = TempDir::new().expect("tempdir");
    let cfg = RunConfig::default();
    let t0 = Instant::now();
    let summary = commands::cmd_train(&cfg, dir.path()).expect("training succeeds");
    let train_seconds = t0.elapsed().as_secs_f64();
    let model_path = dir.path().join("model.json");
    let (params, norm) = load_model(&model_path).expect("model loads");
    eprintln!(
        "[acceptance] surrogate trained in {train_seconds:.0} s (final loss {})",
        summary.metrics["final_loss"]
    );
    Trained { _dir: dir, model_path, params, norm, train_seconds }
});

static CHAIN: LazyLock<Chain> = LazyLock::new(|| {
    let trained = &*TRAINED;
    let evaluator = default_evaluator(&trained.params, &trained.norm);
    let prior = evaluator.prior;
    mh_sample(
        &evaluator,
        &prior.means(),
        &[2.0, 0.01, 8.0],
        20_000,
        4000,
        42,
    )
    .expect("mh chain")
});

fn default_evaluator<'a>(
    params: &'a NetworkParameters,
    norm: &'a NormalizationSpec,
) -> PosteriorEvaluator<'a> {
    let resolved = RunConfig::default().resolve().expect("default config resolves");
    PosteriorEvaluator {
        model: ForwardModel::Surrogate { params, norm },
        scenario: resolved.scenario,
        prior: resolved.prior,
        likelihood: resolved.likelihood,
        flat_prior: false,
    }
}

#[test]
fn criterion_1_solver_fidelity() {
    let scenario = ThermalScenario::default();
    let props = MaterialProperties { rho: 200.0, k: 1.0, cp: 800.0 };
    let grid = GridSpec { nx: 201, dt: 0.05 };

    let t0 = Instant::now();
    let field = solve_fd(&scenario, &props, &grid).unwrap();
    let solve_seconds = t0.elapsed().as_secs_f64();

    let mut max_err = 0.0_f64;
    let dx = grid.dx(scenario.thickness);
    for n in 0..=field.n_steps() {
        let t = field.time(n).min(scenario.duration);
        for i in 0..grid.nx {
            let x = (i as f64 * dx).min(scenario.thickness);
            let want = analytic_slab_flux(&scenario, &props, x, t, 100).unwrap();
            max_err = max_err.max((field.values[[n, i]] - want).abs());
        }
    }
    assert!(max_err < 0.5, "max space-time error {max_err} K");
    assert!(solve_seconds < 1.0, "solve took {solve_seconds} s");
    println!(
        "ACCEPTANCE 1 (solver fidelity): PASS — max |fd − series| = {max_err:.3} K (< 0.5), \
         solve {solve_seconds:.3} s (< 1)"
    );
}

#[test]
fn criterion_2_autodiff_correctness() {
    // Manufactured fields: exact residuals to 1e-12.
    let c = 2.31;
    let linear = move |_x: Dual2, t: Dual2| t * c + 25.0;
    let r = pde_residual(&linear, 0.02, 50.0, 6.25e-6);
    assert!((r - c).abs() < 1e-12, "{r}");
    let quadratic = |x: Dual2, _t: Dual2| x * x * 0.5 + 25.0;
    for alpha in [1e-6, 6.25e-6, 4e-5] {
        let r = pde_residual(&quadratic, 0.013, 5.0, alpha);
        assert!((r + alpha).abs() < 1e-12, "{r}");
    }

    // Gradient of the full physics loss vs central differences:
    // 3 seeds × 20 coordinates at rel error < 1e-5.
    let scenario = ThermalScenario::default();
    let resolved = RunConfig::default().resolve().unwrap();
    let weights = LossWeights::default();
    let mut worst = 0.0_f64;
    for seed in [1_u64, 2, 3] {
        let params =
            tps_core::pinn::init_params(&NetworkArchitecture { hidden: vec![10, 10] }, seed).unwrap();
        let colloc =
            CollocationSet::sample(&resolved.norm, 32, 12, &mut tps_core::rng::stream(seed, 77));
        let (_, grad) = loss_and_grad(&params, &resolved.norm, &weights, &colloc, &scenario).unwrap();
        let mut rng = tps_core::rng::stream(seed, 78);
        let h = 1e-4;
        for _ in 0..20 {
            let i = rng.gen_range(0..params.n_params());
            let mut plus = params.clone();
            plus.values[i] += h;
            let mut minus = params.clone();
            minus.values[i] -= h;
            let (lp, _) = loss_and_grad(&plus, &resolved.norm, &weights, &colloc, &scenario).unwrap();
            let (lm, _) = loss_and_grad(&minus, &resolved.norm, &weights, &colloc, &scenario).unwrap();
            let fd = (lp.total - lm.total) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
            assert!(rel < 1e-5, "seed {seed} coord {i}: ad {} vs fd {fd}", grad[i]);
        }
    }
    println!(
        "ACCEPTANCE 2 (autodiff correctness): PASS — manufactured residuals exact to 1e-12, \
         worst gradient fd mismatch {worst:.2e} (< 1e-5)"
    );
}

#[test]
fn criterion_3_pinn_validation() {
    let trained = &*TRAINED;
    let scenario = ThermalScenario::default();
    let grid = GridSpec::default();

    let nominal = MaterialProperties { rho: 200.0, k: 1.0, cp: 800.0 };
    let nominal_report =
        validate_against_fd(&trained.params, &trained.norm, &scenario, &[nominal], &grid).unwrap();
    let poi = nominal_report.samples[0].poi_error;

    let mut rng = tps_core::rng::stream(7, 0);
    let samples: Vec<MaterialProperties> = (0..20)
        .map(|_| MaterialProperties {
            rho: rng.gen_range(trained.norm.rho_range.0..trained.norm.rho_range.1),
            k: rng.gen_range(trained.norm.k_range.0..trained.norm.k_range.1),
            cp: rng.gen_range(trained.norm.cp_range.0..trained.norm.cp_range.1),
        })
        .collect();
    let box_report =
        validate_against_fd(&trained.params, &trained.norm, &scenario, &samples, &grid).unwrap();

    assert!(poi < 2.0, "point-of-interest error {poi} K (need < 2)");
    assert!(
        box_report.max_domain_error <= 30.0,
        "max domain error {} K over 20 box samples (need <= 30)",
        box_report.max_domain_error
    );
    assert!(
        trained.train_seconds <= 1800.0,
        "training took {} s (budget 1800)",
        trained.train_seconds
    );
    println!(
        "ACCEPTANCE 3 (surrogate validation): PASS — nominal poi error {poi:.2} K (< 2), \
         box max domain error {:.1} K (<= 30), training {:.0} s (<= 1800)",
        box_report.max_domain_error, trained.train_seconds
    );
}

#[test]
fn criterion_4_statistical_design() {
    let trained = &*TRAINED;
    let t0 = Instant::now();
    let chain = &*CHAIN;
    let scenario = ThermalScenario::default();

    assert_eq!(chain.samples.len(), 20_000);
    let report = cross_verify(
        &chain.samples,
        &scenario,
        &GridSpec::default(),
        scenario.threshold,
        200,
        42,
    )
    .unwrap();
    let elapsed = t0.elapsed().as_secs_f64();

    assert_eq!(report.n, 200);
    assert!(
        report.r_hat_percent >= 90.0,
        "cross-verified reliability {}% (need >= 90, target 95)",
        report.r_hat_percent
    );
    assert!(elapsed <= 600.0, "sampling + verification took {elapsed} s");
    let _ = &trained.model_path;
    println!(
        "ACCEPTANCE 4 (statistical design): PASS — cross-verified R̂ = {:.1}% (>= 90, target 95), \
         MH acceptance {:.2}, wall {elapsed:.0} s (<= 600)",
        report.r_hat_percent, chain.acceptance_rate
    );
}

#[test]
fn criterion_5_smc_mcmc_agreement() {
    let trained = &*TRAINED;
    let chain = &*CHAIN;
    let evaluator = default_evaluator(&trained.params, &trained.norm);
    let opts = SmcOptions { n_particles: 1000, seed: 11, ..SmcOptions::default() };
    let ensemble = smc_sample(&evaluator, &opts).unwrap();

    let n = chain.samples.len() as f64;
    let mh_means = [
        chain.samples.iter().map(|q| q.rho).sum::<f64>() / n,
        chain.samples.iter().map(|q| q.k).sum::<f64>() / n,
        chain.samples.iter().map(|q| q.cp).sum::<f64>() / n,
    ];
    let smc_means = ensemble.means();
    let mut worst = 0.0_f64;
    for ((name, mh), smc) in ["rho", "k", "cp"].iter().zip(mh_means).zip(smc_means) {
        let rel = (mh - smc).abs() / mh.abs();
        worst = worst.max(rel);
        assert!(rel < 0.05, "{name}: mh mean {mh} vs smc mean {smc} ({:.1}% off)", rel * 100.0);
    }
    let ess = ensemble.final_ess();
    assert!(ess >= 0.3 * 1000.0, "final ESS {ess}");
    let beta = *ensemble.beta_history.last().unwrap();
    assert!((beta - 1.0).abs() < 1e-9, "final beta {beta}");
    assert!(ensemble.beta_history.windows(2).all(|w| w[1] > w[0]), "beta not increasing");
    println!(
        "ACCEPTANCE 5 (smc/mcmc agreement): PASS — worst mean discrepancy {:.2}% (< 5%), \
         final ESS {ess:.0} (>= 300), beta reached 1 in {} stages",
        worst * 100.0,
        ensemble.beta_history.len() - 1
    );
}

#[test]
fn criterion_6_surrogate_speedup() {
    let trained = &*TRAINED;
    let dir = TempDir::new().unwrap();
    let cfg = RunConfig::default();
    let summary = commands::cmd_bench(&cfg, &trained.model_path, dir.path()).unwrap();
    let ratio = summary.metrics["speedup_ratio"].as_f64().unwrap();
    let surrogate = summary.metrics["surrogate_s_per_eval"].as_f64().unwrap();
    let fd = summary.metrics["fd_s_per_eval"].as_f64().unwrap();
    assert!(ratio >= 10.0, "speedup {ratio}x (need >= 10x)");
    println!(
        "ACCEPTANCE 6 (surrogate speedup): PASS — measured ratio {ratio:.0}x \
         (surrogate {surrogate:.2e} s/eval batched, fd {fd:.2e} s/eval; threshold 10x)"
    );
}

#[test]
fn criterion_7_sampler_statistics() {
    // MH on the 1D standard normal: mean and std windows at 50k samples.
    let mut worst_mean = 0.0_f64;
    let mut worst_std = 0.0_f64;
    for seed in [1_u64, 2, 3] {
        let opts = MhOptions { n_samples: 50_000, burn_in: 2000, seed, tune: true };
        let run = random_walk_mh(|q| Ok((-0.5 * q[0] * q[0], 0.0)), &[0.3], &[1.0], &opts).unwrap();
        let n = run.samples.len() as f64;
        let mean = run.samples.iter().map(|q| q[0]).sum::<f64>() / n;
        let std =
            (run.samples.iter().map(|q| (q[0] - mean) * (q[0] - mean)).sum::<f64>() / n).sqrt();
        assert!((-0.05..=0.05).contains(&mean), "seed {seed}: mean {mean}");
        assert!((0.95..=1.05).contains(&std), "seed {seed}: std {std}");
        worst_mean = worst_mean.max(mean.abs());
        worst_std = worst_std.max((std - 1.0).abs());
    }

    // Systematic resampling: floor/ceil count bounds over 10^4 trials.
    let weights = [0.2, 0.3, 0.5];
    for trial in 0..10_000_u64 {
        let idx = systematic_resample(&weights, trial);
        let mut counts = [0usize; 3];
        for i in idx {
            counts[i] += 1;
        }
        for (c, w) in counts.iter().zip(weights) {
            let expected = 3.0 * w;
            assert!(
                *c >= expected.floor() as usize && *c <= expected.ceil() as usize,
                "trial {trial}: count {c} outside floor/ceil of {expected}"
            );
        }
    }
    println!(
        "ACCEPTANCE 7 (sampler statistics): PASS — 1D harness |mean| <= {worst_mean:.3} (< 0.05), \
         |std−1| <= {worst_std:.3} (< 0.05) over 3 seeds; floor/ceil bounds held on 10^4 resample trials"
    );
}

#[test]
fn criterion_8_reproducibility() {
    // Identical config + seed + threads=1 must give byte-identical CSV
    // payloads for every command. Budgets are shrunk (this checks the
    // reproducibility contract, not statistical quality).
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("config.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "grid": {"nx": 41, "dt_s": 0.5},
            "network": {"hidden": [8, 8]},
            "training": {"iterations": 150, "interior_points": 96, "constraint_points": 24,
                          "resample_every": 50, "lbfgs_iterations": 30},
            "sampler": {"n_samples": 400, "burn_in": 100, "max_fd": 20},
            "threads": 1,
            "seed": 9
        }"#,
    )
    .unwrap();
    let cfg = RunConfig::load(&cfg_path).unwrap();

    let run_all = |out: &std::path::Path| {
        commands::cmd_solve(&cfg, out).unwrap();
        commands::cmd_analytic(&cfg, out).unwrap();
        commands::cmd_train(&cfg, out).unwrap();
        let model = out.join("model.json");
        commands::cmd_validate(&cfg, &model, out).unwrap();
        commands::cmd_sample(&cfg, &model, SamplerMethod::Mh, false, out).unwrap();
        let chain = out.join("chain.csv");
        commands::cmd_verify(&cfg, &chain, out).unwrap();
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_all(&a);
    run_all(&b);

    let payloads = [
        "field.csv",
        "interface.csv",
        "analytic_field.csv",
        "analytic_interface.csv",
        "model.json",
        "history.csv",
        "validation.csv",
        "chain.csv",
        "verify.csv",
    ];
    for name in payloads {
        let bytes_a = std::fs::read(a.join(name)).unwrap();
        let bytes_b = std::fs::read(b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
    }
    println!(
        "ACCEPTANCE 8 (reproducibility): PASS — {} artifacts byte-identical across repeated runs",
        payloads.len()
    );
}
