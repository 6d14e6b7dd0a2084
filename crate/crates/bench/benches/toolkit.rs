//! Throughput of the NI tests, synthesis, simulation and describing function.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use higs_core::io::{controller_from_json, data, plant_from_json};
use higs_core::plant::default_grid;
use higs_core::{
    assemble, describing_function, find_ni_certificate, ni_frequency_test, ni_hamiltonian_test, simulate, synthesize,
    ClosedLoop, ControllerConfig, DescribingOptions, HigsParams, InitialState, InputChannel, InputSignal, PlantModel,
    SimConfig, SynthesisRequest, Topology, Wiring,
};
use nalgebra::dmatrix;

/// (s + 6)/(s² + 1.2s + 4), NI with a nonzero feedthrough of velocity.
fn second_order() -> PlantModel {
    PlantModel::new(dmatrix![0.0, 1.0; -4.0, -1.2], dmatrix![0.0; 1.0], dmatrix![6.0, 1.0]).unwrap()
}

fn ni_tests(c: &mut Criterion) {
    let mems = plant_from_json(data::MEMS_PLANT_JSON).unwrap();
    let grid = default_grid(&mems).unwrap();
    c.bench_function("sweep/mems", |b| b.iter(|| ni_frequency_test(black_box(&mems), &grid).unwrap()));
    let plant = second_order();
    c.bench_function("hamiltonian/second_order", |b| b.iter(|| ni_hamiltonian_test(black_box(&plant)).unwrap()));
    c.bench_function("certificate/second_order", |b| b.iter(|| find_ni_certificate(black_box(&plant)).unwrap()));
    c.bench_function("synthesize/mems_multi", |b| {
        b.iter(|| synthesize(&SynthesisRequest::new(mems.clone(), Topology::Multi, 0.05, 10.0)).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let plant = plant_from_json(data::MEMS_PLANT_JSON).unwrap();
    let ctrl = controller_from_json(data::MEMS_CONTROLLER_JSON).unwrap();
    let lp = assemble(&plant, &ctrl, Wiring::PlantInput).unwrap();
    let mut cfg = SimConfig::new(0.02, 1e-6);
    cfg.output_stride = 100;
    let init = InitialState {
        x: vec![0.5; 4],
        x_h: vec![0.0; 2],
    };
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("mems_regulation_20ms", |b| {
        b.iter(|| simulate(&lp, &InputSignal::zero(2), &cfg, black_box(&init)).unwrap())
    });
    let bare = ClosedLoop::open_higs(&ControllerConfig::Single(HigsParams::new(1.0, 1.0).unwrap())).unwrap();
    let input = InputSignal::uniform(InputChannel::pulse_train(1.0, 2.0, 0.5), 1);
    group.bench_function("higs_pulse_train", |b| {
        b.iter(|| simulate(&bare, &input, &SimConfig::new(10.0, 1e-3), &InitialState::default()).unwrap())
    });
    group.finish();
}

fn describing(c: &mut Criterion) {
    let p = HigsParams::new(1.0, 1.0).unwrap();
    let opts = DescribingOptions::default();
    let mut group = c.benchmark_group("describing_function");
    group.sample_size(10);
    group.bench_function("omega_100", |b| b.iter(|| describing_function(&p, 1.0, black_box(100.0), &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, ni_tests, simulation, describing);
criterion_main!(benches);
