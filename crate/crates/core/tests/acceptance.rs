//! Acceptance criteria. Each criterion prints one PASS/FAIL line with its
//! measurements; the process exits non-zero if any criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use workcost::capacity::{self, keys_per_second};
use workcost::corpus::{halting_corpus, random_halting, random_input, random_machine, stretch, MachineParams};
use workcost::cost::{accumulator_bits, counter_cost, fsm_size, head_cost_per_step};
use workcost::emulator::neural::{random_net, verify_neural, NeuralOptions};
use workcost::emulator::utm::{build_utm_emulator, verify};
use workcost::game::{self, Ensemble, PlayOptions, Script, Verdict};
use workcost::machine::{skip, RunLimits};
use workcost::search::{least_cost_program, least_cost_program_within, SearchOptions};
use workcost::tradeoff::{argmin_delta, cost_ratio, exact_optimal_delta, gamma_delta, optimal_delta};
use workcost::{
    Configuration, CostLedger, CostMeter, CostModel, Execution, MachineSpec, Status, Symbol, TableSizeMode,
};

struct Verdicts {
    failed: usize,
}

impl Verdicts {
    fn record(&mut self, id: u32, title: &str, limit: Duration, f: impl FnOnce() -> Result<String, String>) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.2?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !pass {
            self.failed += 1;
        }
        println!(
            "criterion {id}: {} {title} ({detail}; {elapsed:.2?})",
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn tit_for_tat() -> Result<String, String> {
    let moves = [
        ("C", "C"),
        ("D", "C"),
        ("C", "D"),
        ("D", "D"),
        ("C", "C"),
        ("C", "D"),
        ("D", "C"),
        ("D", "D"),
        ("C", "C"),
        ("D", "D"),
    ];
    let script = Script::moves(&moves);
    let opts = PlayOptions {
        model: CostModel {
            table_mode: TableSizeMode::Packed,
            ..CostModel::default()
        },
        ..PlayOptions::default()
    };
    let t = game::play(Arc::new(game::tit_for_tat_machine()), &script, &opts).map_err(|e| e.to_string())?;
    ensure(t.turns.len() == 11, || format!("{} turns played", t.turns.len()))?;
    for turn in &t.turns[..10] {
        ensure(turn.bits == 76.0, || {
            format!("turn {} cost {} bits", turn.turn, turn.bits)
        })?;
    }
    ensure(t.first_illegal.is_none(), || {
        format!("illegal move {:?}", t.first_illegal)
    })?;
    ensure(t.verdict == Verdict::SystemWins, || format!("verdict {:?}", t.verdict))?;
    Ok(format!("10 turns x 76 bits, {:?}", t.verdict))
}

fn head_cost() -> Result<String, String> {
    let r8 = head_cost_per_step(256, 256, 256).map_err(|e| e.to_string())? as f64
        / fsm_size(256, 256, 256, 1).map_err(|e| e.to_string())? as f64;
    let r16 = head_cost_per_step(65536, 65536, 65536).map_err(|e| e.to_string())? as f64
        / fsm_size(65536, 65536, 65536, 1).map_err(|e| e.to_string())? as f64;
    let c2 = counter_cost(2).map_err(|e| e.to_string())?;
    ensure((0.055..=0.07).contains(&r8), || format!("8-bit ratio {r8}"))?;
    ensure(r16 < 3e-4, || format!("16-bit ratio {r16}"))?;
    ensure(c2 == 25, || format!("counter_cost(2) = {c2}"))?;
    Ok(format!(
        "8-bit {:.3}%, 16-bit {:.5}%, counter(2) {c2}",
        100.0 * r8,
        100.0 * r16
    ))
}

fn cost_properties() -> Result<String, String> {
    let params = MachineParams {
        max_states: 5,
        max_symbols: 3,
        max_skip: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xC057);
    let machines = 1000;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let mut steps_checked = 0u64;
    for i in 0..machines {
        let spec = Arc::new(random_machine(&mut rng, params));
        let input = random_input(&mut rng, spec.symbol_count(), 6);
        let meter = CostMeter::formula(&spec);
        let cap = rng.gen_range(1..=60);

        let mut whole = CostLedger::new();
        let mut c = Configuration::new(Arc::clone(&spec)).with_tape(0, &input);
        c.run(&meter, RunLimits::steps(cap), &mut whole)
            .map_err(|e| e.to_string())?;
        let cum = whole.cumulative();
        ensure(cum.windows(2).all(|w| w[1] > w[0]), || {
            format!("machine {i}: cost not strictly increasing")
        })?;
        steps_checked += whole.steps();

        let split = rng.gen_range(0..=cap);
        let mut c = Configuration::new(Arc::clone(&spec)).with_tape(0, &input);
        let mut a = CostLedger::new();
        let sa = c
            .run(&meter, RunLimits::steps(split), &mut a)
            .map_err(|e| e.to_string())?;
        let mut b = CostLedger::new();
        c.run(&meter, RunLimits::steps(cap - sa.steps), &mut b)
            .map_err(|e| e.to_string())?;
        ensure(close(a.total_bits() + b.total_bits(), whole.total_bits()), || {
            format!(
                "machine {i}: serial {} + {} != {}",
                a.total_bits(),
                b.total_bits(),
                whole.total_bits()
            )
        })?;

        let size = meter.fsm_bits();
        let mut c = Configuration::new(Arc::clone(&spec)).with_tape(0, &input);
        let s = c
            .run(
                &meter,
                RunLimits {
                    budget_bits: size * 0.999,
                    max_steps: Some(cap),
                },
                &mut CostLedger::new(),
            )
            .map_err(|e| e.to_string())?;
        ensure(
            s.steps == 0 && (size == 0.0 || s.status == Status::BudgetExceeded),
            || format!("machine {i}: ran {} steps on a budget below its size", s.steps),
        )?;
    }

    let mut groups = 0;
    for g in 0..(machines / 4) {
        let mut ensemble = Ensemble::new(CostModel::default()).with_execution(Execution::Parallel);
        let mut separate = 0.0;
        let ticks = rng.gen_range(1..=40);
        for _ in 0..4 {
            let spec = Arc::new(random_machine(&mut rng, params));
            let input = random_input(&mut rng, spec.symbol_count(), 6);
            let mut c = Configuration::new(Arc::clone(&spec)).with_tape(0, &input);
            let mut l = CostLedger::totals_only();
            c.run(&CostMeter::formula(&spec), RunLimits::steps(ticks), &mut l)
                .map_err(|e| e.to_string())?;
            separate += l.total_bits();
            ensemble
                .add(Configuration::new(spec).with_tape(0, &input))
                .map_err(|e| e.to_string())?;
        }
        ensemble.run_ticks(ticks).map_err(|e| e.to_string())?;
        ensure(close(ensemble.raw_cost(), separate), || {
            format!("group {g}: ensemble {} != separate {separate}", ensemble.raw_cost())
        })?;
        groups += 1;
    }
    Ok(format!(
        "{machines} machines, {steps_checked} steps, {groups} ensembles of 4"
    ))
}

fn utm_corpus() -> Result<String, String> {
    let params = MachineParams {
        max_states: 6,
        max_symbols: 4,
        max_skip: 2,
    };
    let corpus = halting_corpus(0x07A1, 100, params, 6, 200);
    let mut total_steps = 0;
    let mut worst: f64 = 0.0;
    let mut max_states = 0;
    for (i, s) in corpus.iter().enumerate() {
        let bundle = build_utm_emulator(&s.machine).map_err(|e| format!("sample {i}: {e}"))?;
        max_states = max_states.max(s.machine.state_count());
        let v = verify(&bundle, &s.input, 10_000)
            .map_err(|e| format!("sample {i}: {e}"))?
            .ok_or_else(|| format!("sample {i}: target did not halt"))?;
        ensure(v.tapes_equal, || format!("sample {i}: tapes differ"))?;
        let lo = 4 * v.direct_steps;
        ensure(v.emulated_steps >= lo && v.emulated_steps <= lo + 1, || {
            format!(
                "sample {i}: {} emulated steps for {} direct",
                v.emulated_steps, v.direct_steps
            )
        })?;
        ensure(v.emulated_cost <= v.bound, || {
            format!("sample {i}: C' {} > bound {}", v.emulated_cost, v.bound)
        })?;
        total_steps += v.direct_steps;
        worst = worst.max(v.emulated_cost / v.bound);
    }
    Ok(format!(
        "{} machines (M<={max_states}), {total_steps} target steps, max C'/bound {worst:.3}",
        corpus.len()
    ))
}

fn neural_corpus() -> Result<String, String> {
    let acc = accumulator_bits(32, 1);
    ensure(acc == 591, || format!("A=32 accumulator {acc} bits"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x2E7);
    let nets = 50;
    let ticks = 20;
    for i in 0..nets {
        let net = random_net(&mut rng, 6, 4, 8);
        for accumulator in [false, true] {
            let k = net.max_in_degree().max(1);
            let opts = NeuralOptions {
                n_max: net.nodes.len(),
                k_max: k,
                accumulator,
            };
            let v = verify_neural(&net, opts, ticks).map_err(|e| format!("net {i}: {e}"))?;
            let gamma = if accumulator { 6 } else { k as u64 + 5 };
            ensure(v.trajectories_equal, || format!("net {i}: trajectories differ"))?;
            ensure(v.gamma == gamma && v.lockstep_steps == gamma * ticks, || {
                format!(
                    "net {i}: gamma {} steps {} (expected {gamma})",
                    v.gamma, v.lockstep_steps
                )
            })?;
            ensure(v.within_bound, || {
                format!("net {i}: cost {} > bound {}", v.raw_cost, v.bound)
            })?;
        }
    }
    Ok(format!("{nets} nets x 2 modes x {ticks} ticks, accumulator {acc} bits"))
}

fn search() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EA);
    let params = MachineParams {
        max_states: 4,
        max_symbols: 3,
        max_skip: 2,
    };
    let opts = SearchOptions {
        max_len: 6,
        candidate_cap: 10_000,
        ..SearchOptions::default()
    };
    let mut improved = 0;
    let mut cases = 0;
    while cases < 20 {
        let s = random_halting(&mut rng, params, 4, 200);
        let mut c = Configuration::new(Arc::clone(&s.machine)).with_tape(0, &s.input);
        c.run_unmetered(1000).map_err(|e| e.to_string())?;
        let target: Vec<Symbol> = c.tape(0).window(0, 2);
        let accept = |c: &Configuration| c.tape(0).window(0, 2) == target;
        let r = least_cost_program(&s.machine, &s.input, &accept, &opts).map_err(|e| e.to_string())?;
        cases += 1;
        ensure(r.candidates_examined <= 10_000, || {
            format!("{} candidates", r.candidates_examined)
        })?;
        let brute = common::brute_force(&s.machine, r.reference_cost, opts.max_len, &accept);
        let expected = match brute {
            Some((cost, program)) if (cost, program.len(), &program) < (r.reference_cost, s.input.len(), &s.input) => {
                (cost, program)
            }
            _ => (r.reference_cost, s.input.clone()),
        };
        ensure(
            r.best.program == expected.1 && rel(r.best.cost, expected.0.max(1e-300)) <= 1e-9,
            || {
                format!(
                    "case {cases}: search {:?} vs brute force {:?}",
                    r.best.program, expected.1
                )
            },
        )?;
        if r.best.cost < r.reference_cost {
            improved += 1;
        }
        let mut last = f64::INFINITY;
        for factor in [1.0, 1.25, 1.5] {
            let w = least_cost_program_within(&s.machine, r.reference_cost * factor, &accept, &opts)
                .map_err(|e| e.to_string())?;
            let best = w.best.map(|b| b.cost).unwrap_or(f64::INFINITY);
            ensure(best <= last, || {
                format!("case {cases}: best cost rose to {best} at budget x{factor}")
            })?;
            last = best;
        }
    }
    Ok(format!(
        "{cases} searches agree with brute force, {improved} beat their reference, monotone over 3 budgets"
    ))
}

fn trade_off() -> Result<String, String> {
    let mut failures = Vec::new();
    if cost_ratio(1.0, 17.0, 12345.0, 8.0, 8.0) != 1.0 {
        failures.push("cost_ratio(1) != 1".to_string());
    }
    let r = cost_ratio(2.0, 1.0, 1e6, 2.0, 2.0);
    if rel(r, 0.5) > 0.01 {
        failures.push(format!("large-memory limit {r} vs 1/2"));
    }
    let r = cost_ratio(4.0, 1.0, 1e6, 1.0, 1.0);
    if rel(r, 0.25) > 0.01 {
        failures.push(format!("large-memory limit {r} vs 1/4"));
    }
    let g = gamma_delta(0.5, 4.0, 4.0);
    let r = cost_ratio(0.5, 1.0, 1e-6, 4.0, 4.0);
    if rel(r, g) > 0.01 {
        failures.push(format!("small-memory limit {r} vs {g}"));
    }
    for m in [4.0, 8.0, 16.0] {
        for n in [4.0f64, 8.0, 16.0] {
            let d = optimal_delta((m + n) / std::f64::consts::LN_2, m, n).map_err(|e| e.to_string())?;
            if (d - 1.0).abs() > 1e-6 {
                failures.push(format!("optimal_delta at m={m} n={n} is {d}"));
            }
        }
    }
    let mut worst_published: f64 = 0.0;
    let mut worst_derived: f64 = 0.0;
    for omega in [2.0, 10.0, 23.083, 100.0] {
        for (m, n) in [(2.0, 2.0), (4.0, 4.0), (8.0, 8.0)] {
            let a = argmin_delta(1.0, omega, m, n).map_err(|e| e.to_string())?;
            let published = optimal_delta(omega, m, n).map_err(|e| e.to_string())?;
            let derived = exact_optimal_delta(omega, m, n).map_err(|e| e.to_string())?;
            worst_published = worst_published.max((a - published).abs());
            worst_derived = worst_derived.max((a - derived).abs());
        }
    }
    if worst_published > 1e-6 {
        failures.push(format!(
            "argmin of cost_ratio is up to {worst_published:.3e} from the published stationarity root \
             (the derivative of the ratio gives omega = delta^2 Gamma (m+n) ln 2; argmin agrees with that root to {worst_derived:.1e})"
        ));
    }
    if failures.is_empty() {
        Ok(format!(
            "limits within 1%, root 1 on the 3x3 grid, argmin within {worst_published:.1e}"
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn capacity_fixtures() -> Result<String, String> {
    let mut failures = Vec::new();
    let mut checked = 0;
    for case in capacity::case_studies() {
        let report = case.report(true).map_err(|e| e.to_string())?;
        for c in &report.comparisons {
            if c.discrepancy.is_some() {
                continue;
            }
            checked += 1;
            if !c.matches {
                failures.push(format!(
                    "{} {} computed {:.3e} vs published {:.3e}",
                    report.name, c.quantity, c.computed, c.published
                ));
            }
        }
    }
    let q = |name: &str| -> Result<std::collections::BTreeMap<String, f64>, String> {
        capacity::case_study(name)
            .and_then(|c| c.quantities(true))
            .map_err(|e| e.to_string())
    };
    let amd = q("amd64_x2")?;
    let pentium = q("pentium_ii_1998")?;
    let eff = q("eff_des_cracker")?;
    let per_year = amd["db"] / 23.0;
    let keys = keys_per_second(pentium["logic_rate"], eff["per_key_bytes"]).map_err(|e| e.to_string())?;
    let hours = 2f64.powi(55) / keys / 3600.0;
    let ratio = q("human_neuron")?["rate"] / q("c_elegans")?["rate"];
    let extra = [
        ("dB per year", per_year, 2.6, 0.10),
        ("keys per second", keys, 4.5e11, 0.10),
        ("neuron/worm ratio", ratio, 6.0, 0.20),
    ];
    for (what, got, want, tol) in extra {
        checked += 1;
        if rel(got, want) > tol {
            failures.push(format!("{what} {got:.3e} vs {want:.3e}"));
        }
    }
    checked += 1;
    if hours >= 30.0 {
        failures.push(format!("average key search {hours:.1} h"));
    }
    if failures.is_empty() {
        Ok(format!("{checked} published values reproduced"))
    } else {
        Err(format!("{} of {checked} off: {}", failures.len(), failures.join("; ")))
    }
}

fn skip_elimination() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5C1);
    let params = MachineParams {
        max_states: 5,
        max_symbols: 3,
        max_skip: 1,
    };
    let run = |spec: &Arc<MachineSpec>, input: &[Symbol]| -> Result<(Configuration, f64), String> {
        let mut c = Configuration::new(Arc::clone(spec)).with_tape(0, input);
        let mut l = CostLedger::totals_only();
        let s = c
            .run(&CostMeter::formula(spec), RunLimits::steps(1_000_000), &mut l)
            .map_err(|e| e.to_string())?;
        ensure(s.status == Status::Halted, || "run did not halt".to_string())?;
        Ok((c, l.total_bits()))
    };
    let machines = 20;
    let mut mean = [0.0f64; 4];
    let mut worst_normalized: f64 = 0.0;
    let mut count = 0;
    while count < machines {
        let base = random_halting(&mut rng, params, 5, 200);
        if base.steps == 0 {
            continue;
        }
        count += 1;
        let n = base.machine.symbol_count() as f64;
        let mut last = 0.0;
        for d in 1..=4u32 {
            let wide = Arc::new(stretch(&base.machine, d).map_err(|e| e.to_string())?);
            let unit = Arc::new(skip::expand(&wide).map_err(|e| e.to_string())?);
            let mut input = vec![0; (base.input.len().max(1) - 1) * d as usize + 1];
            for (i, &x) in base.input.iter().enumerate() {
                input[i * d as usize] = x;
            }
            let (a, ca) = run(&wide, &input)?;
            let (b, cb) = run(&unit, &input)?;
            ensure(a.tape(0) == b.tape(0), || {
                format!("machine {count}, D={d}: final tapes differ")
            })?;
            let ratio = cb / ca;
            ensure(ratio >= 1.0 - 1e-12, || {
                format!("machine {count}, D={d}: expansion cheaper ({ratio})")
            })?;
            ensure(ratio >= last - 1e-12, || {
                format!("machine {count}: ratio fell to {ratio} at D={d}")
            })?;
            last = ratio;
            mean[d as usize - 1] += ratio / machines as f64;
            worst_normalized = worst_normalized.max(ratio / (n * (d * d) as f64));
        }
    }
    ensure(worst_normalized <= 1.0, || {
        format!("ratio / (N D^2) reached {worst_normalized:.3}")
    })?;
    Ok(format!(
        "{machines} machines, mean cost ratio by Dmax 1..4: {:.2} {:.2} {:.2} {:.2}, max ratio/(N D^2) {worst_normalized:.3}",
        mean[0], mean[1], mean[2], mean[3]
    ))
}

fn main() {
    let mut v = Verdicts { failed: 0 };
    let s = Duration::from_secs;
    v.record(1, "Tit-for-Tat reproduction", s(1), tit_for_tat);
    v.record(2, "head-cost model", s(1), head_cost);
    v.record(3, "cost-function properties", s(60), cost_properties);
    v.record(4, "UTM emulator corpus", s(120), utm_corpus);
    v.record(5, "neural emulator corpus", s(120), neural_corpus);
    v.record(6, "least-cost search", s(120), search);
    v.record(7, "trade-off formulas", s(10), trade_off);
    v.record(8, "capacity fixtures", s(1), capacity_fixtures);
    v.record(9, "skip elimination", s(120), skip_elimination);
    println!("acceptance: {} of 9 criteria passed", 9 - v.failed);
    if v.failed > 0 {
        std::process::exit(1);
    }
}
