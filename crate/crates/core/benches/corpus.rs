use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use workcost::corpus::{random_halting, random_input, random_machine, MachineParams};
use workcost::game::Ensemble;
use workcost::search::{least_cost_program, SearchOptions};
use workcost::{Configuration, CostModel, Execution};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn ensemble(c: &mut Criterion) {
    let params = MachineParams {
        max_states: 6,
        max_symbols: 4,
        max_skip: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let members: Vec<_> = (0..256)
        .map(|_| {
            let spec = Arc::new(random_machine(&mut rng, params));
            let input = random_input(&mut rng, spec.symbol_count(), 16);
            Configuration::new(spec).with_tape(0, &input)
        })
        .collect();
    let mut group = c.benchmark_group("ensemble_256x200");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut e = Ensemble::new(CostModel::default()).with_execution(exec);
                for m in &members {
                    e.add(m.clone()).unwrap();
                }
                e.run_ticks(200).unwrap();
                black_box(e.raw_cost())
            })
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let params = MachineParams {
        max_states: 4,
        max_symbols: 3,
        max_skip: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sample = random_halting(&mut rng, params, 4, 200);
    let mut done = Configuration::new(Arc::clone(&sample.machine)).with_tape(0, &sample.input);
    done.run_unmetered(1000).unwrap();
    let target = done.tape(0).window(0, 2);
    let accept = |c: &Configuration| c.tape(0).window(0, 2) == target;
    let mut group = c.benchmark_group("program_search");
    group.sample_size(20);
    for (name, exec) in MODES {
        let opts = SearchOptions {
            max_len: 7,
            candidate_cap: 100_000,
            exec,
            ..SearchOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                black_box(
                    least_cost_program(&sample.machine, &sample.input, &accept, &opts)
                        .unwrap()
                        .best
                        .cost,
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble, search);
criterion_main!(benches);
