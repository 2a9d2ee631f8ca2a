//! Command implementations shared by the binary and the test suites.

use std::path::Path;
use std::time::Instant;

use rand::Rng;

use tps_core::pinn::{predict_batch, train, validate_against_fd};
use tps_core::thermal::{
    analytic_slab_flux, enthalpy_balance, interface_series, solve_fd, MaterialProperties,
    TemperatureField,
};
use tps_core::uq::{
    cross_verify, mh_sample, smc_sample, systematic_resample, ForwardModel, PosteriorEvaluator,
    SmcOptions,
};

use crate::artifacts::{
    read_chain_csv, write_chain_csv, write_field_csv, write_interface_csv, RunSummary,
};
use crate::config::{RunConfig, SamplerMethod};
use crate::error::{CliError, CliResult};
use crate::model_file::{load_model, save_model};

pub const ANALYTIC_TERMS: usize = 100;
const VALIDATION_SAMPLES: usize = 20;
const BENCH_BATCH: usize = 1000;

// Creates the output directory and records the fully-resolved configuration
// (defaults applied) next to the artifacts; reloading that file reproduces
// the run exactly.
fn ensure_out_dir(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create output dir {}: {e}", dir.display())))?;
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.emit())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// High-fidelity solve with the nominal (prior-mean) material; emits the
/// field and interface-history CSVs.
pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> CliResult<RunSummary> {
    let resolved = cfg.resolve()?;
    ensure_out_dir(cfg, out)?;
    let mut summary = RunSummary::new("solve", cfg.hash(), cfg.seed, cfg.threads);

    let t0 = Instant::now();
    let field = solve_fd(&resolved.scenario, &resolved.nominal, &resolved.grid)?;
    summary.time("solve", t0.elapsed().as_secs_f64());

    let series = interface_series(&field);
    summary.metric("interface_at_eval_time_c", series.at_eval_time);
    summary.metric("interface_max_c", series.max_temp);
    summary.metric(
        "enthalpy_balance_rel_err",
        enthalpy_balance(&field, &resolved.nominal, &resolved.scenario, resolved.scenario.eval_time)?,
    );

    let field_path = out.join("field.csv");
    write_field_csv(&field_path, &field)?;
    summary.artifact(&field_path);
    let iface_path = out.join("interface.csv");
    write_interface_csv(&iface_path, &field)?;
    summary.artifact(&iface_path);
    summary.write(out)?;
    Ok(summary)
}

/// Series-oracle counterpart of `solve` on the same lattice.
pub fn cmd_analytic(cfg: &RunConfig, out: &Path) -> CliResult<RunSummary> {
    let resolved = cfg.resolve()?;
    ensure_out_dir(cfg, out)?;
    let mut summary = RunSummary::new("analytic", cfg.hash(), cfg.seed, cfg.threads);

    let t0 = Instant::now();
    let nt = resolved.grid.validate(&resolved.scenario)?;
    let mut values = ndarray::Array2::zeros((nt + 1, resolved.grid.nx));
    let dx = resolved.grid.dx(resolved.scenario.thickness);
    for n in 0..=nt {
        let t = n as f64 * resolved.grid.dt;
        for i in 0..resolved.grid.nx {
            values[[n, i]] = analytic_slab_flux(
                &resolved.scenario,
                &resolved.nominal,
                (i as f64 * dx).min(resolved.scenario.thickness),
                t.min(resolved.scenario.duration),
                ANALYTIC_TERMS,
            )?;
        }
    }
    let field = TemperatureField { scenario: resolved.scenario, grid: resolved.grid, values };
    summary.time("analytic", t0.elapsed().as_secs_f64());

    let series = interface_series(&field);
    summary.metric("interface_at_eval_time_c", series.at_eval_time);
    summary.metric("series_terms", ANALYTIC_TERMS as u64);

    let field_path = out.join("analytic_field.csv");
    write_field_csv(&field_path, &field)?;
    summary.artifact(&field_path);
    let iface_path = out.join("analytic_interface.csv");
    write_interface_csv(&iface_path, &field)?;
    summary.artifact(&iface_path);
    summary.write(out)?;
    Ok(summary)
}

/// Trains the surrogate and writes the model artifact plus the loss history.
pub fn cmd_train(cfg: &RunConfig, out: &Path) -> CliResult<RunSummary> {
    let resolved = cfg.resolve()?;
    ensure_out_dir(cfg, out)?;
    let mut summary = RunSummary::new("train", cfg.hash(), cfg.seed, cfg.threads);

    let t0 = Instant::now();
    let (params, report) = train(
        &resolved.arch,
        &resolved.norm,
        &resolved.weights,
        &resolved.training,
        &resolved.scenario,
    )?;
    summary.time("train", t0.elapsed().as_secs_f64());
    summary.metric("final_loss", report.final_loss);
    summary.metric("adam_iterations", resolved.training.iterations as u64);
    summary.metric("lbfgs_iterations", resolved.training.lbfgs_iterations as u64);
    summary.metric("n_params", params.n_params() as u64);

    let model_path = out.join("model.json");
    save_model(&model_path, &params, &resolved.norm)?;
    summary.artifact(&model_path);

    let hist_path = out.join("history.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&hist_path)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", hist_path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "step,pde,ic,bc0,bcl,total").map_err(CliError::from)?;
        for h in &report.history {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                h.step, h.loss.pde, h.loss.ic, h.loss.bc0, h.loss.bcl, h.loss.total
            )
            .map_err(CliError::from)?;
        }
        w.flush().map_err(CliError::from)?;
    }
    summary.artifact(&hist_path);
    summary.write(out)?;
    Ok(summary)
}

/// Compares a trained model against fresh finite-difference solves over the
/// probe lattice; reports errors without judging them.
pub fn cmd_validate(cfg: &RunConfig, model_path: &Path, out: &Path) -> CliResult<RunSummary> {
    let resolved = cfg.resolve()?;
    ensure_out_dir(cfg, out)?;
    let (params, norm) = load_model(model_path)?;
    let mut summary = RunSummary::new("validate", cfg.hash(), cfg.seed, cfg.threads);

    // Uniform draws over the property box stress the edges harder than prior
    // draws would.
    let mut rng = tps_core::rng::stream(cfg.seed, 7001);
    let mut samples = vec![resolved.nominal];
    for _ in 0..VALIDATION_SAMPLES - 1 {
        samples.push(MaterialProperties {
            rho: rng.gen_range(norm.rho_range.0..norm.rho_range.1),
            k: rng.gen_range(norm.k_range.0..norm.k_range.1),
            cp: rng.gen_range(norm.cp_range.0..norm.cp_range.1),
        });
    }

    let t0 = Instant::now();
    let report = validate_against_fd(&params, &norm, &resolved.scenario, &samples, &resolved.grid)?;
    summary.time("validate", t0.elapsed().as_secs_f64());
    summary.metric("nominal_poi_error_k", report.samples[0].poi_error);
    summary.metric("max_poi_error_k", report.max_poi_error);
    summary.metric("max_domain_error_k", report.max_domain_error);
    summary.metric("mean_poi_error_k", report.mean_poi_error);
    summary.metric("samples", report.samples.len() as u64);
    summary.metric("clamped_samples", report.samples.iter().filter(|s| s.clamped).count() as u64);

    let path = out.join("validation.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&path)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "rho,k,cp,max_domain_error_k,poi_error_k,clamped").map_err(CliError::from)?;
        for s in &report.samples {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.props.rho, s.props.k, s.props.cp, s.max_domain_error, s.poi_error, s.clamped as u8
            )
            .map_err(CliError::from)?;
        }
        w.flush().map_err(CliError::from)?;
    }
    summary.artifact(&path);
    summary.write(out)?;
    Ok(summary)
}

/// Samples the surrogate posterior with MH or SMC and writes the chain CSV.
pub fn cmd_sample(
    cfg: &RunConfig,
    model_path: &Path,
    method: SamplerMethod,
    flat_prior: bool,
    out: &Path,
) -> CliResult<RunSummary> {
    let resolved = cfg.resolve()?;
    ensure_out_dir(cfg, out)?;
    let (params, norm) = load_model(model_path)?;
    let mut summary = RunSummary::new("sample", cfg.hash(), cfg.seed, cfg.threads);
    summary.metric("method", match method {
        SamplerMethod::Mh => "mh",
        SamplerMethod::Smc => "smc",
    });
    summary.metric("flat_prior", flat_prior);

    let evaluator = PosteriorEvaluator {
        model: ForwardModel::Surrogate { params: &params, norm: &norm },
        scenario: resolved.scenario,
        prior: resolved.prior,
        likelihood: resolved.likelihood,
        flat_prior,
    };

    let t0 = Instant::now();
    let chain = match method {
        SamplerMethod::Mh => {
            let proposal = [
                cfg.sampler.proposal_scale * resolved.prior.rho.std,
                cfg.sampler.proposal_scale * resolved.prior.k.std,
                cfg.sampler.proposal_scale * resolved.prior.cp.std,
            ];
            let chain = mh_sample(
                &evaluator,
                &resolved.prior.means(),
                &proposal,
                cfg.sampler.n_samples,
                cfg.sampler.burn_in,
                cfg.seed,
            )?;
            summary.metric("acceptance_rate", chain.acceptance_rate);
            summary.metric("burn_in", chain.burn_in as u64);
            chain
        }
        SamplerMethod::Smc => {
            let opts = SmcOptions {
                n_particles: cfg.sampler.n_particles,
                ess_threshold_frac: cfg.sampler.ess_threshold,
                move_steps: cfg.sampler.move_steps,
                seed: cfg.seed,
                flat_likelihood: false,
            };
            let ensemble = smc_sample(&evaluator, &opts)?;
            summary.metric("stages", (ensemble.beta_history.len() - 1) as u64);
            summary.metric("resamples", ensemble.resample_count as u64);
            summary.metric("final_ess", ensemble.final_ess());
            summary.metric("move_acceptance", ensemble.move_acceptance);
            summary.metric(
                "ess_history",
                serde_json::to_value(&ensemble.ess_history).expect("serializable"),
            );
            summary.metric(
                "beta_history",
                serde_json::to_value(&ensemble.beta_history).expect("serializable"),
            );
            ensemble_to_chain(&evaluator, ensemble, cfg.seed, &mut summary)
        }
    };
    summary.time("sample", t0.elapsed().as_secs_f64());

    let below = chain.interface_temps.iter().filter(|t| **t < resolved.scenario.threshold).count();
    summary.metric("r_hat_surrogate_percent", 100.0 * below as f64 / chain.samples.len() as f64);
    summary.metric("chain_length", chain.samples.len() as u64);

    let path = out.join("chain.csv");
    write_chain_csv(&path, &chain)?;
    summary.artifact(&path);
    summary.write(out)?;
    Ok(summary)
}

// Exports an SMC ensemble through the chain schema. A weighted final
// ensemble is first equalized by one systematic resample (noted in the
// summary) since the chain format carries no weight column.
fn ensemble_to_chain(
    evaluator: &PosteriorEvaluator<'_>,
    ensemble: tps_core::uq::ParticleEnsemble,
    seed: u64,
    summary: &mut RunSummary,
) -> tps_core::uq::Chain {
    let n = ensemble.particles.len();
    let uniform = ensemble.weights.iter().all(|w| (w - 1.0 / n as f64).abs() < 1e-12);
    let (particles, temps) = if uniform {
        (ensemble.particles, ensemble.interface_temps)
    } else {
        summary.metric("export_resampled", true);
        let idx = systematic_resample(&ensemble.weights, seed ^ 0xE0F0);
        (
            idx.iter().map(|&i| ensemble.particles[i]).collect(),
            idx.iter().map(|&i| ensemble.interface_temps[i]).collect(),
        )
    };
    let log_posteriors = particles
        .iter()
        .zip(&temps)
        .map(|(q, t)| {
            let z = (t - evaluator.likelihood.mu) / evaluator.likelihood.sigma;
            evaluator.log_prior(q) - 0.5 * z * z
        })
        .collect();
    tps_core::uq::Chain {
        samples: particles,
        log_posteriors,
        interface_temps: temps,
        acceptance_rate: ensemble.move_acceptance,
        proposal_std: [0.0; 3],
        burn_in: 0,
        seed,
    }
}

/// Re-verifies a sampled chain through the finite-difference solver.
pub fn cmd_verify(cfg: &RunConfig, chain_path: &Path, out: &Path) -> CliResult<RunSummary> {
    let resolved = cfg.resolve()?;
    ensure_out_dir(cfg, out)?;
    let mut summary = RunSummary::new("verify", cfg.hash(), cfg.seed, cfg.threads);

    let (samples, surrogate_temps) = read_chain_csv(chain_path)?;
    if samples.is_empty() {
        return Err(CliError::Validation(format!(
            "chain {} holds no samples",
            chain_path.display()
        )));
    }
    let below = surrogate_temps.iter().filter(|t| **t < resolved.scenario.threshold).count();
    summary.metric("r_hat_surrogate_percent", 100.0 * below as f64 / samples.len() as f64);

    let t0 = Instant::now();
    let report = cross_verify(
        &samples,
        &resolved.scenario,
        &resolved.grid,
        resolved.scenario.threshold,
        cfg.sampler.max_fd,
        cfg.seed,
    )?;
    summary.time("verify", t0.elapsed().as_secs_f64());
    summary.metric("r_hat_fd_percent", report.r_hat_percent);
    summary.metric("n_verified", report.n as u64);
    summary.metric("chain_length", samples.len() as u64);
    if let Some(from) = report.subsampled_from {
        summary.metric("subsampled_from", from as u64);
    }

    let path = out.join("verify.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&path)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "T_fd").map_err(CliError::from)?;
        for t in &report.temps {
            writeln!(w, "{t}").map_err(CliError::from)?;
        }
        w.flush().map_err(CliError::from)?;
    }
    summary.artifact(&path);
    summary.write(out)?;
    Ok(summary)
}

/// Measures the per-posterior-evaluation cost of the batched surrogate
/// against the finite-difference solver.
pub fn cmd_bench(cfg: &RunConfig, model_path: &Path, out: &Path) -> CliResult<RunSummary> {
    let resolved = cfg.resolve()?;
    ensure_out_dir(cfg, out)?;
    let (params, norm) = load_model(model_path)?;
    let mut summary = RunSummary::new("bench", cfg.hash(), cfg.seed, cfg.threads);

    let mut rng = tps_core::rng::stream(cfg.seed, 9001);
    let points: Vec<(f64, f64, MaterialProperties)> = (0..BENCH_BATCH)
        .map(|_| {
            (
                0.0,
                resolved.scenario.eval_time,
                MaterialProperties {
                    rho: rng.gen_range(norm.rho_range.0..norm.rho_range.1),
                    k: rng.gen_range(norm.k_range.0..norm.k_range.1),
                    cp: rng.gen_range(norm.cp_range.0..norm.cp_range.1),
                },
            )
        })
        .collect();

    // Surrogate: repeat whole-batch evaluations until enough wall time
    // accumulates for a stable per-sample figure.
    let mut reps = 0usize;
    let mut sink = 0.0;
    let t0 = Instant::now();
    while t0.elapsed().as_secs_f64() < 0.5 {
        let out = predict_batch(&params, &norm, &points)?;
        sink += out[0];
        reps += 1;
    }
    let surrogate_per_sample = t0.elapsed().as_secs_f64() / (reps * BENCH_BATCH) as f64;
    summary.metric("surrogate_batch_reps", reps as u64);

    // Reference: one posterior evaluation = one transient solve.
    let mut fd_runs = 0usize;
    let t1 = Instant::now();
    while fd_runs < 3 || (t1.elapsed().as_secs_f64() < 0.5 && fd_runs < 200) {
        let field = solve_fd(&resolved.scenario, &points[fd_runs % points.len()].2, &resolved.grid)?;
        sink += field.values[[0, 0]];
        fd_runs += 1;
    }
    let fd_per_solve = t1.elapsed().as_secs_f64() / fd_runs as f64;
    summary.metric("fd_runs", fd_runs as u64);

    let ratio = fd_per_solve / surrogate_per_sample;
    summary.metric("surrogate_s_per_eval", surrogate_per_sample);
    summary.metric("fd_s_per_eval", fd_per_solve);
    summary.metric("speedup_ratio", ratio);
    summary.metric("batch_size", BENCH_BATCH as u64);
    summary.time("bench", t0.elapsed().as_secs_f64() + t1.elapsed().as_secs_f64());
    // Keep the compiler from eliding the timed work.
    summary.metric("sink", sink);

    println!(
        "surrogate: {:.3e} s/eval (batch {BENCH_BATCH}), fd: {:.3e} s/eval, speedup {:.0}x",
        surrogate_per_sample, fd_per_solve, ratio
    );
    summary.write(out)?;
    Ok(summary)
}
