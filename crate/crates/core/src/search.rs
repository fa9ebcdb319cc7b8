//! Budgeted exhaustive search for least-cost programs and machine/program pairs.
//!
//! A program is the initial content of tape 0, written from position 0; its
//! size is `len · n` bits. Candidates are enumerated in shortlex order, run
//! with the reference cost as budget, and reduced by `(cost, key)` so the
//! result does not depend on evaluation order.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::cost::{fsm_size, CostLedger, CostMeter};
use crate::emulator::utm::{build_utm_emulator, cost_bound};
use crate::machine::{Configuration, MachineBuilder, MachineDoc, MachineError, MachineSpec, RunLimits, Status, Symbol};
use crate::par::{self, Execution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("reference program rejected by the oracle")]
    ReferenceRejected,
    #[error("reference program did not halt within {0} steps")]
    ReferenceDiverged(u64),
    #[error("{0} candidates exceed the cap of {1}")]
    CandidateCap(u64, u64),
    #[error("machine stores no information per step, so no step bound exists")]
    ZeroInformation,
    #[error("no machine in the family fits the bound of {0} bits")]
    EmptyFamily(f64),
    #[error("emulation failed: {0}")]
    Emulator(String),
}

/// Accepts or rejects a final configuration.
pub trait Oracle: Sync {
    fn accept(&self, config: &Configuration) -> bool;
}

impl<F: Fn(&Configuration) -> bool + Sync> Oracle for F {
    fn accept(&self, config: &Configuration) -> bool {
        self(config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    /// Longest program enumerated.
    pub max_len: usize,
    /// Refuse to run more candidates than this.
    pub candidate_cap: u64,
    /// Step cap for the reference run.
    pub reference_steps: u64,
    pub exec: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_len: 8,
            candidate_cap: 1_000_000,
            reference_steps: 100_000,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub program: Vec<Symbol>,
    pub cost: f64,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub best: Candidate,
    pub reference_cost: f64,
    pub candidates_examined: u64,
    pub accepted: u64,
    pub all_terminated: bool,
}

/// Shortlex order on programs.
pub fn shortlex(a: &[Symbol], b: &[Symbol]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Number of programs over `symbols` of each length `0..=max_len`.
fn layer_sizes(symbols: u64, max_len: usize, cap: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(max_len + 1);
    let mut size = 1u64;
    for _ in 0..=max_len {
        out.push(size);
        size = size.saturating_mul(symbols).min(cap.saturating_add(1));
    }
    out
}

/// The `index`-th program in shortlex order.
fn program_at(mut index: u64, symbols: u64, layers: &[u64]) -> Vec<Symbol> {
    let mut len = 0;
    while index >= layers[len] {
        index -= layers[len];
        len += 1;
    }
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % symbols) as Symbol;
        index /= symbols;
    }
    out
}

/// Longest program whose size stays below `budget`.
fn length_limit(cell_bits: u32, budget: f64, max_len: usize) -> usize {
    if cell_bits == 0 {
        return max_len;
    }
    let mut len = 0;
    while len < max_len && (((len + 1) as u64 * cell_bits as u64) as f64) < budget {
        len += 1;
    }
    len
}

struct Outcome {
    cost: f64,
    steps: u64,
    status: Status,
    accepted: bool,
}

fn run_candidate(
    spec: &Arc<MachineSpec>,
    meter: &CostMeter,
    program: &[Symbol],
    limits: RunLimits,
    oracle: &dyn Oracle,
) -> Result<Outcome, MachineError> {
    let mut config = Configuration::new(Arc::clone(spec)).with_tape(0, program);
    let mut ledger = CostLedger::totals_only();
    let summary = config.run(meter, limits, &mut ledger)?;
    Ok(Outcome {
        cost: summary.cost_bits,
        steps: summary.steps,
        status: summary.status,
        accepted: summary.status == Status::Halted && oracle.accept(&config),
    })
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.cost < b.cost || (a.cost == b.cost && shortlex(&a.program, &b.program) == Ordering::Less)
}

/// Outcome of a program search under an explicit budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProgramSearch {
    pub best: Option<Candidate>,
    pub budget: f64,
    pub candidates_examined: u64,
    pub accepted: u64,
    pub all_terminated: bool,
}

/// Cheapest accepted program of size below `budget` whose run costs at most
/// `budget`.
pub fn least_cost_program_within(
    machine: &Arc<MachineSpec>,
    budget: f64,
    oracle: &dyn Oracle,
    opts: &SearchOptions,
) -> Result<ProgramSearch, SearchError> {
    let meter = CostMeter::formula(machine);
    let i_min = meter.breakdown_for(|_| 0).total();
    if i_min <= 0.0 {
        return Err(SearchError::ZeroInformation);
    }
    let limits = RunLimits {
        budget_bits: budget,
        max_steps: Some((budget / i_min).floor() as u64 + 1),
    };

    let symbols = machine.tape_symbols(0) as u64;
    let max_len = length_limit(machine.cell_bits(0), budget, opts.max_len);
    let layers = layer_sizes(symbols, max_len, opts.candidate_cap);
    let total: u64 = layers.iter().fold(0u64, |a, &b| a.saturating_add(b));
    if total > opts.candidate_cap {
        return Err(SearchError::CandidateCap(total, opts.candidate_cap));
    }

    let outcomes = par::map_range(0..total, opts.exec, |i| {
        let program = program_at(i, symbols, &layers);
        run_candidate(machine, &meter, &program, limits, oracle).map(|o| (program, o))
    });

    let mut best: Option<Candidate> = None;
    let mut accepted = 0;
    let mut all_terminated = true;
    for r in outcomes {
        let (program, o) = r?;
        all_terminated &= matches!(o.status, Status::Halted | Status::BudgetExceeded);
        if o.accepted {
            accepted += 1;
            let c = Candidate {
                program,
                cost: o.cost,
                steps: o.steps,
            };
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
    }
    Ok(ProgramSearch {
        best,
        budget,
        candidates_examined: total,
        accepted,
        all_terminated,
    })
}

/// Cheapest accepted program for `machine`, using the cost of a known
/// accepted `reference` as the budget.
pub fn least_cost_program(
    machine: &Arc<MachineSpec>,
    reference: &[Symbol],
    oracle: &dyn Oracle,
    opts: &SearchOptions,
) -> Result<SearchResult, SearchError> {
    let meter = CostMeter::formula(machine);
    let reference_run = run_candidate(
        machine,
        &meter,
        reference,
        RunLimits::steps(opts.reference_steps),
        oracle,
    )?;
    if reference_run.status != Status::Halted {
        return Err(SearchError::ReferenceDiverged(opts.reference_steps));
    }
    if !reference_run.accepted {
        return Err(SearchError::ReferenceRejected);
    }
    let within = least_cost_program_within(machine, reference_run.cost, oracle, opts)?;
    let fallback = Candidate {
        program: reference.to_vec(),
        cost: reference_run.cost,
        steps: reference_run.steps,
    };
    let best = match within.best {
        Some(b) if !better(&fallback, &b) => b,
        _ => fallback,
    };
    Ok(SearchResult {
        best,
        reference_cost: reference_run.cost,
        candidates_examined: within.candidates_examined,
        accepted: within.accepted,
        all_terminated: within.all_terminated,
    })
}

/// Bounds of a machine family: states `2..=max_states` (the last state halts),
/// the listed alphabet sizes and skips `1..=max_skip`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyLimits {
    pub max_states: u32,
    pub symbols: Vec<u32>,
    pub max_skip: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MachineKey {
    pub states: u32,
    pub symbols: u32,
    pub max_skip: u32,
    pub index: u64,
}

impl FamilyLimits {
    fn classes(&self) -> Vec<(u32, u32, u32)> {
        let mut out = Vec::new();
        for m in 2..=self.max_states {
            for &n in &self.symbols {
                for d in 1..=self.max_skip {
                    out.push((m, n, d));
                }
            }
        }
        out
    }

    /// Machines in one class: every non-halting row picks (write, move, next).
    fn class_size(m: u32, n: u32, d: u32) -> u64 {
        let choices = n as u64 * (2 * d as u64 + 1) * m as u64;
        let rows = (m as u64 - 1) * n as u64;
        choices.checked_pow(rows as u32).unwrap_or(u64::MAX)
    }

    /// Decodes a machine of the family.
    pub fn machine(key: MachineKey) -> Result<MachineSpec, MachineError> {
        let (m, n, d) = (key.states, key.symbols, key.max_skip);
        let moves = 2 * d as u64 + 1;
        let mut b = MachineBuilder::numbered(m, n).max_skip(d).halt(m - 1);
        let mut index = key.index;
        for q in 0..m - 1 {
            for s in 0..n {
                let c = index % (n as u64 * moves * m as u64);
                index /= n as u64 * moves * m as u64;
                let w = (c % n as u64) as Symbol;
                let mv = ((c / n as u64) % moves) as i64 - d as i64;
                let next = (c / (n as u64 * moves)) as u32;
                b.push_entry(q, &[s], &[w], &[mv], next);
            }
        }
        b.build()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCandidate {
    pub key: MachineKey,
    pub machine: MachineDoc,
    pub program: Vec<Symbol>,
    /// Cost of running the pair on its emulator.
    pub cost: f64,
    pub native_cost: f64,
    pub native_steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairResult {
    pub best: Option<PairCandidate>,
    pub machines: u64,
    pub candidates_examined: u64,
    pub accepted: u64,
    pub all_terminated: bool,
}

type PairKey = (f64, MachineKey, usize, Vec<Symbol>);

fn pair_less(a: &PairKey, b: &PairKey) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Less) => true,
        Some(Ordering::Greater) => false,
        _ => (a.1, a.2, &a.3) < (b.1, b.2, &b.3),
    }
}

/// Cheapest accepted machine/program pair under `bound` bits.
///
/// Machines must have `S ≤ bound`; programs must satisfy `len·n + S < bound`.
/// Each pair runs natively with budget `bound`; accepted pairs are then run
/// on their emulator with the emulation cost bound as budget, and that
/// emulated cost is minimized.
pub fn least_cost_pair(
    family: &FamilyLimits,
    bound: f64,
    oracle: &dyn Oracle,
    opts: &SearchOptions,
) -> Result<PairResult, SearchError> {
    let mut work: Vec<(MachineKey, usize)> = Vec::new();
    let mut total = 0u64;
    let mut machines = 0u64;
    for (m, n, d) in family.classes() {
        let s = fsm_size(m as u64, n as u64, 2 * d as u64 + 1, 1).expect("positive sizes") as f64;
        if s > bound {
            continue;
        }
        let cell_bits = crate::bits::ceil_log2(n as u64);
        let mut len = 0;
        let fits = |len: usize| ((len as u64 * cell_bits as u64) as f64) + s < bound;
        if !fits(0) {
            continue;
        }
        while len < opts.max_len && fits(len + 1) {
            len += 1;
        }
        let programs: u64 = layer_sizes(n as u64, len, opts.candidate_cap)
            .iter()
            .fold(0u64, |a, &b| a.saturating_add(b));
        let count = FamilyLimits::class_size(m, n, d);
        machines = machines.saturating_add(count);
        total = total.saturating_add(count.saturating_mul(programs));
        if total > opts.candidate_cap {
            return Err(SearchError::CandidateCap(total, opts.candidate_cap));
        }
        for index in 0..count {
            work.push((
                MachineKey {
                    states: m,
                    symbols: n,
                    max_skip: d,
                    index,
                },
                len,
            ));
        }
    }
    if work.is_empty() {
        return Err(SearchError::EmptyFamily(bound));
    }

    let per_machine = par::map(
        &work,
        opts.exec,
        |&(key, len)| -> Result<(Option<PairKey>, PairStats), SearchError> {
            let spec = Arc::new(FamilyLimits::machine(key)?);
            let meter = CostMeter::formula(&spec);
            let i_min = meter.breakdown_for(|_| 0).total();
            if i_min <= 0.0 {
                return Err(SearchError::ZeroInformation);
            }
            let limits = RunLimits {
                budget_bits: bound,
                max_steps: Some((bound / i_min).floor() as u64 + 1),
            };
            let symbols = key.symbols as u64;
            let layers = layer_sizes(symbols, len, u64::MAX);
            let count: u64 = layers.iter().sum();
            let mut stats = PairStats::default();
            let mut best: Option<PairKey> = None;
            let mut bundle = None;
            for i in 0..count {
                let program = program_at(i, symbols, &layers);
                let o = run_candidate(&spec, &meter, &program, limits, oracle)?;
                stats.examined += 1;
                stats.all_terminated &= matches!(o.status, Status::Halted | Status::BudgetExceeded);
                if !o.accepted {
                    continue;
                }
                stats.accepted += 1;
                if bundle.is_none() {
                    bundle = Some(build_utm_emulator(&spec).map_err(|e| SearchError::Emulator(e.to_string()))?);
                }
                let b = bundle.as_ref().expect("just built");
                let k = b.constants_for(&program);
                let budget =
                    cost_bound(o.cost, o.steps as f64, &k).map_err(|e| SearchError::Emulator(e.to_string()))?;
                let out = crate::emulator::utm::emulate_run(b, &program, RunLimits::budget(budget))
                    .map_err(|e| SearchError::Emulator(e.to_string()))?;
                let cand: PairKey = (out.ledger.total_bits(), key, program.len(), program);
                if best.as_ref().is_none_or(|b| pair_less(&cand, b)) {
                    stats.native = (o.cost, o.steps);
                    best = Some(cand);
                }
            }
            Ok((best, stats))
        },
    );

    let mut best: Option<(PairKey, (f64, u64))> = None;
    let mut examined = 0;
    let mut accepted = 0;
    let mut all_terminated = true;
    for r in per_machine {
        let (cand, stats) = r?;
        examined += stats.examined;
        accepted += stats.accepted;
        all_terminated &= stats.all_terminated;
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|(b, _)| pair_less(&c, b)) {
                best = Some((c, stats.native));
            }
        }
    }
    let best = match best {
        Some(((cost, key, _, program), (native_cost, native_steps))) => Some(PairCandidate {
            key,
            machine: MachineDoc::from_spec(&FamilyLimits::machine(key)?),
            program,
            cost,
            native_cost,
            native_steps,
        }),
        None => None,
    };
    Ok(PairResult {
        best,
        machines,
        candidates_examined: examined,
        accepted,
        all_terminated,
    })
}

#[derive(Clone, Copy, Debug)]
struct PairStats {
    examined: u64,
    accepted: u64,
    all_terminated: bool,
    native: (f64, u64),
}

impl Default for PairStats {
    fn default() -> Self {
        PairStats {
            examined: 0,
            accepted: 0,
            all_terminated: true,
            native: (0.0, 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortlex_enumeration() {
        let layers = layer_sizes(2, 2, 100);
        let all: Vec<Vec<Symbol>> = (0..7).map(|i| program_at(i, 2, &layers)).collect();
        assert_eq!(
            all,
            vec![vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        for w in all.windows(2) {
            assert_eq!(shortlex(&w[0], &w[1]), Ordering::Less);
        }
    }

    #[test]
    fn family_decoding_is_total() {
        let n = FamilyLimits::class_size(2, 2, 1);
        assert_eq!(n, (2 * 3 * 2u64).pow(2));
        for index in [0, 1, n - 1] {
            let spec = FamilyLimits::machine(MachineKey {
                states: 2,
                symbols: 2,
                max_skip: 1,
                index,
            })
            .unwrap();
            assert_eq!(spec.state_count(), 2);
        }
    }

    #[test]
    fn cap_is_an_error() {
        let family = FamilyLimits {
            max_states: 3,
            symbols: vec![2],
            max_skip: 1,
        };
        let opts = SearchOptions {
            candidate_cap: 10,
            ..SearchOptions::default()
        };
        let accept = |_: &Configuration| true;
        assert!(matches!(
            least_cost_pair(&family, 1e6, &accept, &opts),
            Err(SearchError::CandidateCap(..))
        ));
        assert!(matches!(
            least_cost_pair(&family, 1.0, &accept, &opts),
            Err(SearchError::EmptyFamily(_))
        ));
    }
}
