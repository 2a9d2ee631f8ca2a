// Scratch training pilot used while sizing the default hyperparameters.
use tps_core::pinn::{
    train, validate_against_fd, LossWeights, NetworkArchitecture, NormalizationSpec, TrainingConfig,
};
use tps_core::thermal::{GridSpec, MaterialProperties, ThermalScenario};
use tps_core::uq::PriorSpec;
use rand::Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let hidden: Vec<usize> = args.get(1).map(|s| s.split(',').map(|v| v.parse().unwrap()).collect()).unwrap_or(vec![32, 32, 32]);
    let iterations: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(10_000);
    let interior: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(3000);
    let constraint: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(600);
    let seed: u64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(42);
    let lbfgs: usize = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(0);
    let resample: usize = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(250);

    let scenario = ThermalScenario::default();
    let prior = PriorSpec::default();
    let norm = NormalizationSpec::for_scenario(&scenario, &prior, 3.0, 2000.0).unwrap();
    let arch = NetworkArchitecture { hidden: hidden.clone() };
    let config = TrainingConfig {
        iterations,
        interior_points: interior,
        constraint_points: constraint,
        resample_every: resample,
        learning_rate: 1e-3,
        decay_every: iterations / 3,
        decay_factor: 0.5,
        lbfgs_iterations: lbfgs,
        seed,
    };
    println!("config: {config:?}");
    let t0 = std::time::Instant::now();
    let (params, report) = train(&arch, &norm, &LossWeights::default(), &config, &scenario).unwrap();
    let train_s = t0.elapsed().as_secs_f64();
    println!(
        "hidden={hidden:?} iters={iterations} interior={interior} constraint={constraint} seed={seed}"
    );
    println!("train: {train_s:.1}s final_loss={:.3e}", report.final_loss);
    for h in report.history.iter().rev().take(3) {
        println!(
            "  step {}: total={:.3e} pde={:.3e} ic={:.3e} bc0={:.3e} bcL={:.3e}",
            h.step, h.loss.total, h.loss.pde, h.loss.ic, h.loss.bc0, h.loss.bcl
        );
    }

    let nominal = MaterialProperties { rho: 200.0, k: 1.0, cp: 800.0 };
    let grid = GridSpec::default();
    let t1 = std::time::Instant::now();
    let rep = validate_against_fd(&params, &norm, &scenario, &[nominal], &grid).unwrap();
    println!(
        "nominal: poi_err={:.3} K max_domain={:.2} K (validate {:.1}s)",
        rep.samples[0].poi_error,
        rep.samples[0].max_domain_error,
        t1.elapsed().as_secs_f64()
    );

    let mut rng = tps_core::rng::stream(7, 0);
    let samples: Vec<MaterialProperties> = (0..20)
        .map(|_| MaterialProperties {
            rho: rng.gen_range(140.0..260.0),
            k: rng.gen_range(0.7..1.3),
            cp: rng.gen_range(560.0..1040.0),
        })
        .collect();
    let t2 = std::time::Instant::now();
    let rep = validate_against_fd(&params, &norm, &scenario, &samples, &grid).unwrap();
    println!(
        "box 20: max_poi={:.3} K mean_poi={:.3} K max_domain={:.2} K (validate {:.1}s)",
        rep.max_poi_error,
        rep.mean_poi_error,
        rep.max_domain_error,
        t2.elapsed().as_secs_f64()
    );
}
