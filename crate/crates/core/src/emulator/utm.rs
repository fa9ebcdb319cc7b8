//! Dual-tape emulator for single-tape machines.
//!
//! The emulator keeps the target's tape on T_a and the target's action table
//! on T_b, one three-cell row per (state, symbol):
//! `[new symbol, zigzag(move H_a), zigzag(offset to the next state's row 0)]`.
//! Rows of state q start at `3·q·N_a`; a single HALT marker cell follows the
//! table. Each target step takes four emulator steps:
//!
//! 1. fetch: skip H_b forward by `3σ` to the row of the symbol under H_a
//!    (or halt if H_b sits on the HALT marker),
//! 2. write: copy the new symbol to T_a,
//! 3. move: move H_a,
//! 4. jump: skip H_b to row 0 of the next state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::EmulatorError;
use crate::bits::{position_bits, unzigzag, zigzag};
use crate::cost::{CostLedger, CostMeter};
use crate::machine::{Configuration, MachineBuilder, MachineDoc, MachineSpec, RunLimits, Status, Symbol, TapeKind};

pub const FETCH: u32 = 0;
pub const WRITE: u32 = 1;
pub const MOVE: u32 = 2;
pub const JUMP: u32 = 3;
pub const HALT: u32 = 4;

/// Emulator steps per target step.
pub const GAMMA: u64 = 4;
/// Extra emulator steps: the final fetch that finds the HALT marker.
pub const STARTUP: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtmOptions {
    /// Largest T_b alphabet the emulator may use.
    pub max_symbols: u32,
}

impl Default for UtmOptions {
    fn default() -> Self {
        UtmOptions { max_symbols: 1 << 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowLayout {
    pub state: String,
    pub symbol: String,
    pub position: i64,
}

/// Where each target row lives on T_b.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub fields: [String; 3],
    pub rows: Vec<RowLayout>,
    pub halt_block: i64,
    pub halt_marker: Symbol,
}

/// Per-bundle constants of the cost bound `C' ≤ γ(C + Λ(α+ε)) + β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct EmulatorBundle {
    pub emulator: Arc<MachineSpec>,
    pub emulated: Arc<MachineSpec>,
    pub layout: Layout,
    /// T_b contents.
    pub program: Vec<Symbol>,
    /// Constants with β for a blank input.
    pub constants: BoundConstants,
}

/// `γ(C + Λ(α + ε)) + β`
pub fn cost_bound(cost: f64, steps: f64, k: &BoundConstants) -> Result<f64, EmulatorError> {
    if cost < 0.0 || steps < 0.0 || cost.is_nan() || steps.is_nan() {
        return Err(EmulatorError::Negative);
    }
    Ok(k.gamma * (cost + steps * (k.alpha + k.epsilon)) + k.beta)
}

fn row_base(state: u32, symbol: u32, symbols: u32) -> i64 {
    3 * (state as i64 * symbols as i64 + symbol as i64)
}

pub fn build_utm_emulator(target: &MachineSpec) -> Result<EmulatorBundle, EmulatorError> {
    build_utm_emulator_with(target, UtmOptions::default())
}

pub fn build_utm_emulator_with(target: &MachineSpec, opts: UtmOptions) -> Result<EmulatorBundle, EmulatorError> {
    if target.tape_count() != 1 || target.tape_kind(0) != TapeKind::Work {
        return Err(EmulatorError::NotSingleTape);
    }
    let (ma, na) = (target.state_count(), target.tape_symbols(0));
    let rows = ma as u64 * na as u64;
    let reach = 3 * rows;
    let nb = 2 * reach + 2;
    if nb > opts.max_symbols as u64 {
        return Err(EmulatorError::TooLarge {
            needed: nb,
            available: opts.max_symbols,
        });
    }
    let nb = nb as u32;
    let marker = nb - 1;
    let halt_block = reach as i64;

    let mut program = vec![0; reach as usize + 1];
    let mut layout_rows = Vec::with_capacity(rows as usize);
    for q in 0..ma {
        for s in 0..na {
            let base = row_base(q, s, na);
            layout_rows.push(RowLayout {
                state: target.state_name(q).to_owned(),
                symbol: target.symbol_name(s).to_owned(),
                position: base,
            });
            if target.is_halting(q) {
                continue;
            }
            let a = target.action(q, &[s]);
            let dest = if target.is_halting(a.next) {
                halt_block
            } else {
                row_base(a.next, 0, na)
            };
            program[base as usize] = a.writes[0];
            program[base as usize + 1] = zigzag(a.moves[0]) as Symbol;
            program[base as usize + 2] = zigzag(dest - (base + 2)) as Symbol;
        }
    }
    program[halt_block as usize] = marker;

    let max_skip = (reach as u32).max(target.max_skip()).max(3 * (na - 1));
    let decode = |x: Symbol| -> i64 {
        if x < marker {
            unzigzag(x as u64)
        } else {
            0
        }
    };
    let names: Vec<String> = ["fetch", "write", "move", "jump", "halt"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let symbols: Vec<String> = (0..nb).map(|i| i.to_string()).collect();
    let mut b = MachineBuilder::new(&names, &symbols)
        .work_tapes(2)
        .tape_symbols(&[na, nb])
        .max_skip(max_skip)
        .initial(FETCH)
        .halt(HALT);
    for s in 0..na {
        for x in 0..nb {
            if x == marker {
                b.push_entry(FETCH, &[s, x], &[s, x], &[0, 0], HALT);
            } else {
                b.push_entry(FETCH, &[s, x], &[s, x], &[0, 3 * s as i64], WRITE);
            }
            let w = if x < na { x } else { s };
            b.push_entry(WRITE, &[s, x], &[w, x], &[0, 1], MOVE);
            b.push_entry(MOVE, &[s, x], &[s, x], &[decode(x), 1], JUMP);
            b.push_entry(JUMP, &[s, x], &[s, x], &[0, decode(x)], FETCH);
        }
    }
    let emulator = b.build()?;

    let mut bundle = EmulatorBundle {
        emulator: Arc::new(emulator),
        emulated: Arc::new(target.clone()),
        layout: Layout {
            fields: ["new_symbol".into(), "move_a".into(), "jump".into()],
            rows: layout_rows,
            halt_block,
            halt_marker: marker,
        },
        program,
        constants: BoundConstants {
            alpha: 0.0,
            beta: 0.0,
            gamma: GAMMA as f64,
            epsilon: 0.0,
        },
    };
    bundle.constants = bundle.constants_for(&[]);
    Ok(bundle)
}

impl EmulatorBundle {
    /// Bits per step the emulator holds beyond the target's tape: its own
    /// table and state plus T_b, minus the target's table and state.
    fn fixed_bits(&self) -> (f64, f64) {
        let e = &self.emulator;
        let meter = CostMeter::formula(e);
        let tb_cells = self.program.len() as u64;
        let nb = e.cell_bits(1) as f64;
        let base = meter.fsm_bits() + e.state_bits() as f64 + position_bits(tb_cells) as f64;
        (base, nb)
    }

    /// Constants for a run on `input`; only β depends on the input.
    pub fn constants_for(&self, input: &[Symbol]) -> BoundConstants {
        let (base, nb) = self.fixed_bits();
        let t = &self.emulated;
        let rows = (t.state_count() as u64 * t.tape_symbols(0) as u64) as f64;
        let ideal_row = ((t.tape_symbols(0) as f64) * (t.state_count() as f64) * (t.movement_count() as f64)).log2();
        let alpha = base + nb;
        // Stored T_b bits beyond the information-theoretic row size.
        let epsilon = rows * (3.0 * nb - ideal_row);
        let config = self.initial_config(input);
        let beta = CostMeter::formula(&self.emulator).information(&config).total();
        BoundConstants {
            alpha,
            beta,
            gamma: GAMMA as f64,
            epsilon,
        }
    }

    pub fn initial_config(&self, input: &[Symbol]) -> Configuration {
        let t = &self.emulated;
        let start = if t.is_halting(t.initial_state()) {
            self.layout.halt_block
        } else {
            row_base(t.initial_state(), 0, t.tape_symbols(0))
        };
        let mut config = Configuration::new(Arc::clone(&self.emulator))
            .with_tape(0, input)
            .with_tape(1, &self.program);
        config.tape_mut(1).set_head(start);
        config
    }

    pub fn emulator_doc(&self) -> MachineDoc {
        MachineDoc::from_spec(&self.emulator)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: Configuration,
    pub ledger: CostLedger,
}

/// Runs the target itself with formula metering.
pub fn direct_run(target: &Arc<MachineSpec>, input: &[Symbol], limits: RunLimits) -> Result<RunOutcome, EmulatorError> {
    let meter = CostMeter::formula(target);
    let mut config = Configuration::new(Arc::clone(target)).with_tape(0, input);
    let mut ledger = CostLedger::totals_only();
    config.run(&meter, limits, &mut ledger)?;
    Ok(RunOutcome { config, ledger })
}

/// Runs the emulator on `input`; fails if it does not halt within the limits.
pub fn emulate_run(bundle: &EmulatorBundle, input: &[Symbol], limits: RunLimits) -> Result<RunOutcome, EmulatorError> {
    let meter = CostMeter::formula(&bundle.emulator);
    let mut config = bundle.initial_config(input);
    let mut ledger = CostLedger::totals_only();
    let summary = config.run(&meter, limits, &mut ledger)?;
    match summary.status {
        Status::Halted => Ok(RunOutcome { config, ledger }),
        Status::BudgetExceeded => Err(EmulatorError::Budget(ledger.total_bits())),
        _ => Err(EmulatorError::StepCap(summary.steps)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub direct_steps: u64,
    pub direct_cost: f64,
    pub emulated_steps: u64,
    pub emulated_cost: f64,
    pub bound: f64,
    pub constants: BoundConstants,
    pub tapes_equal: bool,
    pub steps_in_range: bool,
    pub within_bound: bool,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.tapes_equal && self.steps_in_range && self.within_bound
    }
}

/// Runs target and emulator on `input` and checks tape equality, step
/// count and the cost bound. `None` if the target does not halt in `max_steps`.
pub fn verify(
    bundle: &EmulatorBundle,
    input: &[Symbol],
    max_steps: u64,
) -> Result<Option<Verification>, EmulatorError> {
    let direct = direct_run(&bundle.emulated, input, RunLimits::steps(max_steps))?;
    if direct.config.status() != Status::Halted {
        return Ok(None);
    }
    let lambda = direct.config.steps();
    let constants = bundle.constants_for(input);
    let bound = cost_bound(direct.ledger.total_bits(), lambda as f64, &constants)?;
    // Cap one step past the allowed range so overruns are observed, not hidden.
    let emulated = emulate_run(
        bundle,
        input,
        RunLimits {
            budget_bits: f64::INFINITY,
            max_steps: Some(GAMMA * lambda + STARTUP + 1),
        },
    )?;
    let steps = emulated.config.steps();
    let a = direct.config.tape(0);
    let b = emulated.config.tape(0);
    Ok(Some(Verification {
        direct_steps: lambda,
        direct_cost: direct.ledger.total_bits(),
        emulated_steps: steps,
        emulated_cost: emulated.ledger.total_bits(),
        bound,
        constants,
        tapes_equal: a.contents() == b.contents() && a.head() == b.head(),
        steps_in_range: steps >= GAMMA * lambda && steps <= GAMMA * lambda + STARTUP,
        within_bound: emulated.ledger.total_bits() <= bound,
    }))
}
