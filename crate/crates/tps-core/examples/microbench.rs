// Scratch micro-benchmark for the training hot path.
use ndarray::Array2;
use std::time::Instant;
use tps_core::pinn::{loss_and_grad, CollocationSet, LossWeights, NetworkArchitecture, NormalizationSpec, init_params};
use tps_core::thermal::ThermalScenario;
use tps_core::uq::PriorSpec;

fn main() {
    let b = 3000;
    let h = 32;
    let a = Array2::<f64>::from_elem((b, h), 0.3);
    let w = Array2::<f64>::from_elem((h, h), 0.01);
    // GEMM throughput
    let t0 = Instant::now();
    let reps = 200;
    let mut acc = 0.0;
    for _ in 0..reps {
        let c = a.dot(&w);
        acc += c[[0, 0]];
    }
    let dt = t0.elapsed().as_secs_f64();
    let flops = 2.0 * (b * h * h) as f64 * reps as f64;
    println!("gemm {b}x{h} * {h}x{h}: {:.1} ms/op, {:.2} Gflop/s (acc {acc:.1})", dt / reps as f64 * 1e3, flops / dt / 1e9);

    // tanh throughput
    let t0 = Instant::now();
    let mut s = 0.0;
    for _ in 0..10 {
        let t = a.mapv(f64::tanh);
        s += t[[0, 0]];
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("tanh {}k elems: {:.2} ms/pass ({s:.1})", b * h / 1000, dt / 10.0 * 1e3);

    // full loss_and_grad
    let scenario = ThermalScenario::default();
    let norm = NormalizationSpec::for_scenario(&scenario, &PriorSpec::default(), 3.0, 2000.0).unwrap();
    let params = init_params(&NetworkArchitecture { hidden: vec![32, 32, 32] }, 1).unwrap();
    let colloc = CollocationSet::sample(&norm, 3000, 600, &mut tps_core::rng::stream(0, 0));
    let weights = LossWeights::default();
    let t0 = Instant::now();
    let reps = 20;
    for _ in 0..reps {
        let _ = loss_and_grad(&params, &norm, &weights, &colloc, &scenario).unwrap();
    }
    println!("loss_and_grad: {:.1} ms/iter", t0.elapsed().as_secs_f64() / reps as f64 * 1e3);
}
