use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use workcost::capacity::{db_scale, rate_from_db, silicon_capacity, SiliconSubsystem};
use workcost::corpus::{random_halting, random_input, random_machine, MachineParams};
use workcost::game::Ensemble;
use workcost::machine::{skip, RunLimits};
use workcost::tradeoff::{argmin_delta, cost_ratio, exact_stationarity_omega};
use workcost::{Configuration, CostLedger, CostMeter, CostModel, Execution, Status};

fn params() -> MachineParams {
    MachineParams {
        max_states: 5,
        max_symbols: 3,
        max_skip: 2,
    }
}

fn run(spec: &Arc<workcost::MachineSpec>, input: &[u32], limits: RunLimits) -> (Configuration, CostLedger) {
    let meter = CostMeter::formula(spec);
    let mut config = Configuration::new(Arc::clone(spec)).with_tape(0, input);
    let mut ledger = CostLedger::new();
    config.run(&meter, limits, &mut ledger).unwrap();
    (config, ledger)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn cost_strictly_increases_with_steps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = Arc::new(random_machine(&mut rng, params()));
        let input = random_input(&mut rng, spec.symbol_count(), 5);
        let (_, ledger) = run(&spec, &input, RunLimits::steps(60));
        let cum = ledger.cumulative();
        for w in cum.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
        for e in ledger.entries() {
            prop_assert!(e.bits >= CostMeter::formula(&spec).fsm_bits());
        }
    }

    #[test]
    fn serial_runs_add_up(seed in any::<u64>(), split in 0u64..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = Arc::new(random_machine(&mut rng, params()));
        let input = random_input(&mut rng, spec.symbol_count(), 5);
        let (whole_cfg, whole) = run(&spec, &input, RunLimits::steps(80));

        let meter = CostMeter::formula(&spec);
        let mut config = Configuration::new(Arc::clone(&spec)).with_tape(0, &input);
        let mut first = CostLedger::new();
        let a = config.run(&meter, RunLimits::steps(split), &mut first).unwrap();
        let mut second = CostLedger::new();
        let b = config.run(&meter, RunLimits::steps(80 - a.steps), &mut second).unwrap();
        prop_assert_eq!(a.steps + b.steps, whole.steps());
        prop_assert!(close(first.total_bits() + second.total_bits(), whole.total_bits()));
        prop_assert_eq!(config.tape(0), whole_cfg.tape(0));
    }

    #[test]
    fn independent_machines_add_up(seed in any::<u64>(), count in 1usize..5, ticks in 1u64..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ensemble = Ensemble::new(CostModel::default()).with_execution(Execution::Parallel);
        let mut separate = 0.0;
        for _ in 0..count {
            let spec = Arc::new(random_machine(&mut rng, params()));
            let input = random_input(&mut rng, spec.symbol_count(), 4);
            separate += run(&spec, &input, RunLimits::steps(ticks)).1.total_bits();
            ensemble.add(Configuration::new(spec).with_tape(0, &input)).unwrap();
        }
        ensemble.run_ticks(ticks).unwrap();
        prop_assert!(close(ensemble.raw_cost(), separate));
    }

    #[test]
    fn budget_is_never_exceeded(seed in any::<u64>(), fraction in 0.0f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = Arc::new(random_machine(&mut rng, params()));
        let input = random_input(&mut rng, spec.symbol_count(), 5);
        let (_, full) = run(&spec, &input, RunLimits::steps(50));
        let budget = full.total_bits() * fraction;
        let (cfg, ledger) = run(&spec, &input, RunLimits { budget_bits: budget, max_steps: Some(50) });
        prop_assert!(ledger.total_bits() <= budget * (1.0 + 1e-12));
        prop_assert!(ledger.steps() <= full.steps());
        if ledger.steps() < full.steps() {
            prop_assert_eq!(cfg.status(), Status::BudgetExceeded);
        }
        let s = CostMeter::formula(&spec).fsm_bits();
        let (_, none) = run(&spec, &input, RunLimits { budget_bits: s * 0.999, max_steps: Some(50) });
        prop_assert_eq!(none.steps(), 0);
    }

    #[test]
    fn skip_expansion_preserves_tapes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = random_halting(&mut rng, MachineParams { max_skip: 3, ..params() }, 5, 200);
        let unit = Arc::new(skip::expand(&sample.machine).unwrap());
        prop_assert_eq!(unit.max_skip(), 1);
        let mut a = Configuration::new(Arc::clone(&sample.machine)).with_tape(0, &sample.input);
        let mut b = Configuration::new(unit).with_tape(0, &sample.input);
        let sa = a.run_unmetered(10_000).unwrap();
        let sb = b.run_unmetered(10_000).unwrap();
        prop_assert_eq!(b.status(), Status::Halted);
        prop_assert!(sb >= sa && sb <= sa * sample.machine.max_skip() as u64);
        prop_assert_eq!(a.tape(0), b.tape(0));
    }

    #[test]
    fn identity_scale_costs_nothing(s in 1e-3f64..1e9, i in 0f64..1e12, m in 1f64..64.0, n in 1f64..64.0) {
        prop_assert_eq!(cost_ratio(1.0, s, i, m, n), 1.0);
    }

    #[test]
    fn ratio_minimum_is_stationary(omega in 0.5f64..500.0, m in 1u32..12, n in 1u32..12) {
        let (m, n) = (m as f64, n as f64);
        let d = argmin_delta(1.0, omega, m, n).unwrap();
        let rel = (exact_stationarity_omega(d, m, n) - omega).abs() / omega;
        prop_assert!(rel < 1e-5, "delta {} rel {}", d, rel);
        for probe in [d * 0.9, d * 1.1] {
            prop_assert!(cost_ratio(probe, 1.0, omega, m, n) >= cost_ratio(d, 1.0, omega, m, n));
        }
    }

    #[test]
    fn capacity_is_linear(t in 1e3f64..1e10, c in 1e3f64..1e10, k in 0.1f64..100.0, mem in 1e3f64..1e12) {
        let logic = SiliconSubsystem::Logic { label: String::new(), transistor_count: t, bits_per_transistor: 8.0, units: 1.0, clock_hz: c };
        let memory = SiliconSubsystem::Memory { label: String::new(), capacity_bytes: mem, units: 1.0, clock_hz: c };
        let both = silicon_capacity(&[logic.clone(), memory.clone()]).unwrap();
        let sum = silicon_capacity(std::slice::from_ref(&logic)).unwrap() + silicon_capacity(std::slice::from_ref(&memory)).unwrap();
        prop_assert!(close(both, sum));
        let scaled = |s: &SiliconSubsystem| match s.clone() {
            SiliconSubsystem::Logic { label, transistor_count, bits_per_transistor, units, clock_hz } =>
                SiliconSubsystem::Logic { label, transistor_count, bits_per_transistor, units, clock_hz: clock_hz * k },
            SiliconSubsystem::Memory { label, capacity_bytes, units, clock_hz } =>
                SiliconSubsystem::Memory { label, capacity_bytes, units, clock_hz: clock_hz * k },
        };
        let fast = silicon_capacity(&[scaled(&logic), scaled(&memory)]).unwrap();
        prop_assert!((fast / (both * k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decibels_round_trip(rate in 1e-3f64..1e30) {
        let back = rate_from_db(db_scale(rate).unwrap());
        prop_assert!((back / rate - 1.0).abs() < 1e-9);
    }
}
