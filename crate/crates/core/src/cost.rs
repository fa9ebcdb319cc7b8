//! Information content per step and accumulated computational cost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{ceil_log2, position_bits};
use crate::machine::{Configuration, MachineSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("counter width must be at least 1, got {0}")]
    CounterWidth(u32),
    #[error("head cost needs M, N, D >= 2 (got M={0}, N={1}, D={2})")]
    HeadWidths(u64, u64, u64),
    #[error("shared region references unknown machine {0}")]
    UnknownMachine(usize),
    #[error("fsm size arguments must be positive")]
    ZeroSize,
}

/// How the action-table size S is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSizeMode {
    /// S = M·ΠN_i·(m + Σ(n_i + d)) + m
    #[default]
    Formula,
    /// Bit width of the literal table: executable rows × packed row width.
    Packed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub table_mode: TableSizeMode,
    pub include_head_cost: bool,
    /// Extra fixed bits charged every step (attached hardware).
    pub device_bits: f64,
}

/// S for a machine with `tapes` identical tapes.
pub fn fsm_size(states: u64, symbols: u64, movements: u64, tapes: u32) -> Result<u64, CostError> {
    fsm_size_per_tape(states, &vec![symbols; tapes as usize], movements)
}

/// S with a separate alphabet per tape.
pub fn fsm_size_per_tape(states: u64, alphabets: &[u64], movements: u64) -> Result<u64, CostError> {
    if states == 0 || movements == 0 || alphabets.contains(&0) {
        return Err(CostError::ZeroSize);
    }
    let m = ceil_log2(states) as u128;
    let d = ceil_log2(movements) as u128;
    let rows: u128 = states as u128 * alphabets.iter().map(|&n| n as u128).product::<u128>();
    let row_bits: u128 = m + alphabets.iter().map(|&n| ceil_log2(n) as u128 + d).sum::<u128>();
    Ok(u64::try_from(rows * row_bits + m).unwrap_or(u64::MAX))
}

pub fn fsm_size_of(spec: &MachineSpec) -> u64 {
    let alphabets: Vec<u64> = spec.tape_alphabets().iter().map(|&n| n as u64).collect();
    fsm_size_per_tape(spec.state_count() as u64, &alphabets, spec.movement_count() as u64)
        .expect("validated machines have positive sizes")
}

/// Bits of the table written out literally: every executable row stores
/// each field in just enough bits for the values that field actually takes.
pub fn packed_table_bits(spec: &MachineSpec) -> u64 {
    let t = spec.tape_count();
    let mut writes = vec![BTreeSet::new(); t];
    let mut moves = vec![BTreeSet::new(); t];
    let mut next = BTreeSet::new();
    let mut rows = 0u64;
    for (_, _, a) in spec.executable_rows() {
        rows += 1;
        for i in 0..t {
            writes[i].insert(a.writes[i]);
            moves[i].insert(a.moves[i]);
        }
        next.insert(a.next);
    }
    let width: u64 = (0..t)
        .map(|i| (ceil_log2(writes[i].len() as u64) + ceil_log2(moves[i].len() as u64)) as u64)
        .sum::<u64>()
        + ceil_log2(next.len() as u64) as u64;
    rows * width
}

/// Bits for a w-bit counter with zero comparator.
pub fn counter_cost(width: u32) -> Result<u64, CostError> {
    if width < 1 {
        return Err(CostError::CounterWidth(width));
    }
    Ok(17 * width as u64 - 9)
}

/// Per-step information of a head driven by state, symbol and move counters.
pub fn head_cost_per_step(states: u64, symbols: u64, movements: u64) -> Result<u64, CostError> {
    if states < 2 || symbols < 2 || movements < 2 {
        return Err(CostError::HeadWidths(states, symbols, movements));
    }
    let (m, n, d) = (ceil_log2(states), ceil_log2(symbols), ceil_log2(movements));
    Ok(2 * n as u64 + states * counter_cost(m)? + symbols * counter_cost(n)? + movements * counter_cost(d)?)
}

/// The head cost for Tit-for-Tat as counted by hand (1+2+4·25+4·25+2·8).
/// It disagrees with `head_cost_per_step(4, 3, 2) == 195`.
pub const TIT_FOR_TAT_HEAD_HAND_COUNT: u64 = 219;

/// Logic bits of a k-input fast accumulator on A-bit words: k·(19A − 17).
pub fn accumulator_bits(width: u32, inputs: u32) -> u64 {
    inputs as u64 * (19 * width as u64).saturating_sub(17)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub fsm_bits: f64,
    pub state_bits: f64,
    pub head_position_bits: f64,
    pub tape_content_bits: f64,
    #[serde(default)]
    pub head_bits: f64,
    #[serde(default)]
    pub device_bits: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.fsm_bits
            + self.state_bits
            + self.head_position_bits
            + self.tape_content_bits
            + self.head_bits
            + self.device_bits
    }
}

/// Evaluates I(λ) for configurations of one machine.
#[derive(Clone, Debug)]
pub struct CostMeter {
    model: CostModel,
    fsm_bits: f64,
    state_bits: f64,
    head_bits: f64,
    /// (tape index, bits per cell) for charged tapes.
    work: Vec<(usize, u32)>,
}

impl CostMeter {
    pub fn new(spec: &MachineSpec, model: CostModel) -> Result<Self, CostError> {
        let fsm_bits = match model.table_mode {
            TableSizeMode::Formula => fsm_size_of(spec),
            TableSizeMode::Packed => packed_table_bits(spec),
        } as f64;
        let head_bits = if model.include_head_cost {
            head_cost_per_step(
                spec.state_count() as u64,
                spec.symbol_count() as u64,
                spec.movement_count() as u64,
            )? as f64
        } else {
            0.0
        };
        Ok(CostMeter {
            model,
            fsm_bits,
            state_bits: spec.state_bits() as f64,
            head_bits,
            work: spec.work_tapes().map(|t| (t, spec.cell_bits(t))).collect(),
        })
    }

    /// Formula table size, no head cost.
    pub fn formula(spec: &MachineSpec) -> Self {
        CostMeter::new(spec, CostModel::default()).expect("no head cost requested")
    }

    pub fn packed(spec: &MachineSpec) -> Self {
        let model = CostModel {
            table_mode: TableSizeMode::Packed,
            ..CostModel::default()
        };
        CostMeter::new(spec, model).expect("no head cost requested")
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn fsm_bits(&self) -> f64 {
        self.fsm_bits
    }

    /// Information given the leased-cell count of every tape.
    pub fn breakdown_for(&self, leased: impl Fn(usize) -> u64) -> Breakdown {
        let mut b = Breakdown {
            fsm_bits: self.fsm_bits,
            state_bits: self.state_bits,
            head_bits: self.head_bits,
            device_bits: self.model.device_bits,
            ..Breakdown::default()
        };
        for &(tape, cell_bits) in &self.work {
            let u = leased(tape);
            b.head_position_bits += position_bits(u) as f64;
            b.tape_content_bits += (u * cell_bits as u64) as f64;
        }
        b
    }

    pub fn information(&self, config: &Configuration) -> Breakdown {
        self.breakdown_for(|t| config.tape(t).leased_count())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub lambda: u64,
    pub bits: f64,
    pub breakdown: Breakdown,
}

/// Per-step information and the running total C.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CostLedger {
    entries: Vec<LedgerEntry>,
    total_bits: f64,
    steps: u64,
    #[serde(skip)]
    totals_only: bool,
}

impl CostLedger {
    pub fn new() -> Self {
        CostLedger::default()
    }

    /// A ledger that keeps the totals but not the per-step entries.
    pub fn totals_only() -> Self {
        CostLedger {
            totals_only: true,
            ..CostLedger::default()
        }
    }

    pub fn record(&mut self, lambda: u64, breakdown: Breakdown) {
        let bits = breakdown.total();
        self.total_bits += bits;
        self.steps += 1;
        if !self.totals_only {
            self.entries.push(LedgerEntry {
                lambda,
                bits,
                breakdown,
            });
        }
    }

    pub fn total_bits(&self) -> f64 {
        self.total_bits
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Running totals after each recorded step.
    pub fn cumulative(&self) -> Vec<f64> {
        self.entries
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e.bits;
                Some(*acc)
            })
            .collect()
    }

    pub fn to_jsonl(&self, machine: usize) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let rec = serde_json::json!({
                "machine": machine,
                "lambda": e.lambda,
                "bits": e.bits,
                "breakdown": e.breakdown,
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self, machine: usize) -> String {
        let mut out = String::from(
            "machine,lambda,bits,fsm_bits,state_bits,head_position_bits,tape_content_bits,head_bits,device_bits\n",
        );
        for e in &self.entries {
            let b = &e.breakdown;
            let _ = writeln!(
                out,
                "{machine},{},{},{},{},{},{},{},{}",
                e.lambda,
                e.bits,
                b.fsm_bits,
                b.state_bits,
                b.head_position_bits,
                b.tape_content_bits,
                b.head_bits,
                b.device_bits
            );
        }
        out
    }
}

/// Builds a ledger from per-step breakdowns, numbering steps from 1.
pub fn accumulate<I: IntoIterator<Item = Breakdown>>(trace: I) -> CostLedger {
    let mut ledger = CostLedger::new();
    for (i, b) in trace.into_iter().enumerate() {
        ledger.record(i as u64 + 1, b);
    }
    ledger
}

/// Cost summary of one ensemble member.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineCost {
    pub id: usize,
    pub steps: u64,
    pub total_bits: f64,
}

/// Bits each sharing machine's ledger already includes for one shared region.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SharedRegion {
    pub charges: BTreeMap<usize, f64>,
}

impl SharedRegion {
    /// The machine that keeps the charge: most steps, then lowest id.
    pub fn owner(&self, machines: &[MachineCost]) -> Result<Option<usize>, CostError> {
        let mut best: Option<(u64, usize)> = None;
        for &id in self.charges.keys() {
            let m = machines
                .iter()
                .find(|m| m.id == id)
                .ok_or(CostError::UnknownMachine(id))?;
            let better = match best {
                None => true,
                Some((steps, bid)) => m.steps > steps || (m.steps == steps && id < bid),
            };
            if better {
                best = Some((m.steps, id));
            }
        }
        Ok(best.map(|(_, id)| id))
    }
}

/// Sum of member costs with each shared region counted once, in its owner.
pub fn ensemble_cost(machines: &[MachineCost], regions: &[SharedRegion]) -> Result<f64, CostError> {
    let mut total: f64 = machines.iter().map(|m| m.total_bits).sum();
    for region in regions {
        let owner = region.owner(machines)?;
        for (&id, &bits) in &region.charges {
            if Some(id) != owner {
                total -= bits;
            }
        }
    }
    Ok(total)
}
