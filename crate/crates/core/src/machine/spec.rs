use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::MachineError;
use crate::bits::ceil_log2;

pub type StateId = u32;
pub type Symbol = u32;

/// Unwritten cells read as this symbol.
pub const BLANK: Symbol = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TapeKind {
    /// Private memory; leased cells are charged.
    Work,
    /// Shared move tape. Uncharged; the machine sleeps on unwritten cells.
    Run,
    /// Read-only parameter tape. Uncharged; writes are dropped.
    Valuation,
}

impl TapeKind {
    pub fn is_charged(self) -> bool {
        self == TapeKind::Work
    }
}

/// One row of an action table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub writes: SmallVec<[Symbol; 4]>,
    pub moves: SmallVec<[i64; 4]>,
    pub next: StateId,
}

/// Generated action table for machines too large to tabulate.
///
/// Implementations must be total: every `(state, reads)` with reads inside
/// the per-tape alphabets returns an in-range action.
pub trait ActionRule: Send + Sync + fmt::Debug {
    fn action(&self, state: StateId, reads: &[Symbol]) -> Action;
}

#[derive(Clone)]
pub(crate) enum ActionTable {
    Dense {
        writes: Vec<Symbol>,
        moves: Vec<i64>,
        next: Vec<StateId>,
        /// False for halt-state rows that were filled in as no-ops.
        declared: Vec<bool>,
    },
    Rule(Arc<dyn ActionRule>),
}

/// Finite-state control of a multi-tape skip-move machine.
///
/// Moves are relative skips in `[-max_skip, +max_skip]`, so a machine has
/// `D = 2·max_skip + 1` distinct head movements. Every tape may use its own
/// prefix of the symbol list (`tape_symbols`); symbol 0 is the blank.
#[derive(Clone)]
pub struct MachineSpec {
    pub(crate) states: Vec<String>,
    pub(crate) symbols: Vec<String>,
    pub(crate) tape_kinds: Vec<TapeKind>,
    pub(crate) tape_symbols: Vec<u32>,
    pub(crate) max_skip: u32,
    pub(crate) initial_state: StateId,
    pub(crate) halting: Vec<bool>,
    pub(crate) table: ActionTable,
}

impl fmt::Debug for MachineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MachineSpec")
            .field("states", &self.states.len())
            .field("symbols", &self.symbols.len())
            .field("tape_kinds", &self.tape_kinds)
            .field("tape_symbols", &self.tape_symbols)
            .field("max_skip", &self.max_skip)
            .field("initial_state", &self.initial_state)
            .finish()
    }
}

impl MachineSpec {
    /// M
    pub fn state_count(&self) -> u32 {
        self.states.len() as u32
    }

    /// N: size of the largest tape alphabet.
    pub fn symbol_count(&self) -> u32 {
        self.symbols.len() as u32
    }

    pub fn tape_count(&self) -> usize {
        self.tape_kinds.len()
    }

    pub fn tape_kinds(&self) -> &[TapeKind] {
        &self.tape_kinds
    }

    pub fn tape_kind(&self, tape: usize) -> TapeKind {
        self.tape_kinds[tape]
    }

    /// Alphabet size of one tape.
    pub fn tape_symbols(&self, tape: usize) -> u32 {
        self.tape_symbols[tape]
    }

    pub fn tape_alphabets(&self) -> &[u32] {
        &self.tape_symbols
    }

    pub fn work_tapes(&self) -> impl Iterator<Item = usize> + '_ {
        self.tape_kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_charged())
            .map(|(i, _)| i)
    }

    pub fn work_tape_count(&self) -> usize {
        self.work_tapes().count()
    }

    pub fn run_tape(&self) -> Option<usize> {
        self.tape_kinds.iter().position(|k| *k == TapeKind::Run)
    }

    pub fn max_skip(&self) -> u32 {
        self.max_skip
    }

    /// D = 2·Dmax + 1.
    pub fn movement_count(&self) -> u32 {
        2 * self.max_skip + 1
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    pub fn is_halting(&self, state: StateId) -> bool {
        self.halting[state as usize]
    }

    pub fn halt_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.halting
            .iter()
            .enumerate()
            .filter(|(_, h)| **h)
            .map(|(i, _)| i as StateId)
    }

    /// m = ⌈log2 M⌉
    pub fn state_bits(&self) -> u32 {
        ceil_log2(self.state_count() as u64)
    }

    /// n = ⌈log2 N⌉ for the widest alphabet.
    pub fn symbol_bits(&self) -> u32 {
        ceil_log2(self.symbol_count() as u64)
    }

    /// Bits per cell of one tape.
    pub fn cell_bits(&self, tape: usize) -> u32 {
        ceil_log2(self.tape_symbols[tape] as u64)
    }

    /// d = ⌈log2 D⌉
    pub fn move_bits(&self) -> u32 {
        ceil_log2(self.movement_count() as u64)
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state as usize]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn symbol_name(&self, symbol: Symbol) -> &str {
        &self.symbols[symbol as usize]
    }

    pub fn symbol_names(&self) -> &[String] {
        &self.symbols
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(|i| i as StateId)
    }

    pub fn symbol_id(&self, name: &str) -> Option<Symbol> {
        self.symbols.iter().position(|s| s == name).map(|i| i as Symbol)
    }

    /// Rows per state: the product of the tape alphabets.
    pub fn reads_per_state(&self) -> u64 {
        self.tape_symbols.iter().map(|&n| n as u64).product()
    }

    /// Total rows M·ΠN_i.
    pub fn row_count(&self) -> u64 {
        self.state_count() as u64 * self.reads_per_state()
    }

    pub fn is_rule_backed(&self) -> bool {
        matches!(self.table, ActionTable::Rule(_))
    }

    pub(crate) fn row_index(&self, state: StateId, reads: &[Symbol]) -> usize {
        let mut idx = state as u64;
        for (tape, &r) in reads.iter().enumerate() {
            idx = idx * self.tape_symbols[tape] as u64 + r as u64;
        }
        idx as usize
    }

    /// Inverse of `row_index` for the read part.
    pub(crate) fn decode_row(&self, row: u64) -> (StateId, SmallVec<[Symbol; 4]>) {
        let mut reads: SmallVec<[Symbol; 4]> = SmallVec::from_elem(0, self.tape_count());
        let mut rest = row;
        for tape in (0..self.tape_count()).rev() {
            let n = self.tape_symbols[tape] as u64;
            reads[tape] = (rest % n) as Symbol;
            rest /= n;
        }
        (rest as StateId, reads)
    }

    /// Table lookup. `reads` must lie inside the per-tape alphabets.
    pub fn action(&self, state: StateId, reads: &[Symbol]) -> Action {
        match &self.table {
            ActionTable::Dense {
                writes, moves, next, ..
            } => {
                let t = self.tape_count();
                let row = self.row_index(state, reads);
                Action {
                    writes: SmallVec::from_slice(&writes[row * t..(row + 1) * t]),
                    moves: SmallVec::from_slice(&moves[row * t..(row + 1) * t]),
                    next: next[row],
                }
            }
            ActionTable::Rule(rule) => rule.action(state, reads),
        }
    }

    /// Whether a row was declared (false only for filled-in halt rows).
    pub fn is_declared(&self, state: StateId, reads: &[Symbol]) -> bool {
        match &self.table {
            ActionTable::Dense { declared, .. } => declared[self.row_index(state, reads)],
            ActionTable::Rule(_) => true,
        }
    }

    /// Iterate all rows of non-halting states as `(state, reads, action)`.
    pub fn executable_rows(&self) -> impl Iterator<Item = (StateId, SmallVec<[Symbol; 4]>, Action)> + '_ {
        (0..self.row_count()).filter_map(move |row| {
            let (state, reads) = self.decode_row(row);
            if self.is_halting(state) {
                None
            } else {
                let action = self.action(state, &reads);
                Some((state, reads, action))
            }
        })
    }

    /// Checks an action produced for `state` against the alphabets and skip limit.
    pub(crate) fn check_action(&self, action: &Action) -> Result<(), MachineError> {
        let t = self.tape_count();
        if action.writes.len() != t || action.moves.len() != t {
            return Err(MachineError::Arity {
                expected: t,
                found: action.writes.len().min(action.moves.len()),
            });
        }
        for tape in 0..t {
            if action.writes[tape] >= self.tape_symbols[tape] {
                return Err(MachineError::SymbolOutOfRange {
                    tape,
                    symbol: action.writes[tape],
                    alphabet: self.tape_symbols[tape],
                });
            }
            if action.moves[tape].unsigned_abs() > self.max_skip as u64 {
                return Err(MachineError::MoveOutOfRange {
                    movement: action.moves[tape],
                    max_skip: self.max_skip,
                });
            }
            if self.tape_kinds[tape] == TapeKind::Run && action.moves[tape] < 0 {
                return Err(MachineError::BackwardRunMove {
                    tape,
                    movement: action.moves[tape],
                });
            }
        }
        if action.next >= self.state_count() {
            return Err(MachineError::UnknownStateId(action.next));
        }
        Ok(())
    }

    /// Builds a machine whose table is produced by `rule`.
    pub fn from_rule(
        states: Vec<String>,
        symbols: Vec<String>,
        tape_kinds: Vec<TapeKind>,
        tape_symbols: Vec<u32>,
        max_skip: u32,
        initial_state: StateId,
        halt_states: &[StateId],
        rule: Arc<dyn ActionRule>,
    ) -> Result<Self, MachineError> {
        let mut halting = vec![false; states.len()];
        for &h in halt_states {
            *halting.get_mut(h as usize).ok_or(MachineError::UnknownStateId(h))? = true;
        }
        let spec = MachineSpec {
            states,
            symbols,
            tape_kinds,
            tape_symbols,
            max_skip,
            initial_state,
            halting,
            table: ActionTable::Rule(rule),
        };
        spec.check_shape()?;
        Ok(spec)
    }

    pub(crate) fn check_shape(&self) -> Result<(), MachineError> {
        if self.states.is_empty() {
            return Err(MachineError::Empty("states"));
        }
        if self.symbols.is_empty() {
            return Err(MachineError::Empty("symbols"));
        }
        if self.tape_kinds.is_empty() {
            return Err(MachineError::Empty("tapes"));
        }
        if self.tape_symbols.len() != self.tape_kinds.len() {
            return Err(MachineError::Arity {
                expected: self.tape_kinds.len(),
                found: self.tape_symbols.len(),
            });
        }
        for (tape, &n) in self.tape_symbols.iter().enumerate() {
            if n == 0 || n > self.symbol_count() {
                return Err(MachineError::BadAlphabet { tape, size: n });
            }
        }
        if self.initial_state >= self.state_count() {
            return Err(MachineError::UnknownStateId(self.initial_state));
        }
        Ok(())
    }
}

/// Programmatic construction of dense machines.
///
/// Rows are keyed by state and read vector; rows of halt states may be left
/// out and are filled in as no-ops.
#[derive(Clone, Debug)]
pub struct MachineBuilder {
    states: Vec<String>,
    symbols: Vec<String>,
    tape_kinds: Vec<TapeKind>,
    tape_symbols: Option<Vec<u32>>,
    max_skip: u32,
    initial_state: StateId,
    halt_states: Vec<StateId>,
    entries: Vec<(StateId, Vec<Symbol>, Vec<Symbol>, Vec<i64>, StateId)>,
}

impl MachineBuilder {
    pub fn new<S: AsRef<str>>(states: &[S], symbols: &[S]) -> Self {
        MachineBuilder {
            states: states.iter().map(|s| s.as_ref().to_owned()).collect(),
            symbols: symbols.iter().map(|s| s.as_ref().to_owned()).collect(),
            tape_kinds: vec![TapeKind::Work],
            tape_symbols: None,
            max_skip: 1,
            initial_state: 0,
            halt_states: Vec::new(),
            entries: Vec::new(),
        }
    }

    /// Anonymous states `q0..` and symbols `0..`.
    pub fn numbered(states: u32, symbols: u32) -> Self {
        let st: Vec<String> = (0..states).map(|i| format!("q{i}")).collect();
        let sy: Vec<String> = (0..symbols).map(|i| i.to_string()).collect();
        MachineBuilder::new(&st, &sy)
    }

    pub fn tapes(mut self, kinds: &[TapeKind]) -> Self {
        self.tape_kinds = kinds.to_vec();
        self
    }

    pub fn work_tapes(self, count: usize) -> Self {
        self.tapes(&vec![TapeKind::Work; count])
    }

    pub fn tape_symbols(mut self, sizes: &[u32]) -> Self {
        self.tape_symbols = Some(sizes.to_vec());
        self
    }

    pub fn max_skip(mut self, max_skip: u32) -> Self {
        self.max_skip = max_skip;
        self
    }

    pub fn initial(mut self, state: StateId) -> Self {
        self.initial_state = state;
        self
    }

    pub fn halt(mut self, state: StateId) -> Self {
        self.halt_states.push(state);
        self
    }

    pub fn entry(mut self, state: StateId, reads: &[Symbol], writes: &[Symbol], moves: &[i64], next: StateId) -> Self {
        self.push_entry(state, reads, writes, moves, next);
        self
    }

    pub fn push_entry(&mut self, state: StateId, reads: &[Symbol], writes: &[Symbol], moves: &[i64], next: StateId) {
        self.entries
            .push((state, reads.to_vec(), writes.to_vec(), moves.to_vec(), next));
    }

    pub fn build(self) -> Result<MachineSpec, MachineError> {
        let t = self.tape_kinds.len();
        let tape_symbols = self
            .tape_symbols
            .clone()
            .unwrap_or_else(|| vec![self.symbols.len() as u32; t]);
        let mut halting = vec![false; self.states.len()];
        for &h in &self.halt_states {
            *halting.get_mut(h as usize).ok_or(MachineError::UnknownStateId(h))? = true;
        }
        let mut spec = MachineSpec {
            states: self.states,
            symbols: self.symbols,
            tape_kinds: self.tape_kinds,
            tape_symbols,
            max_skip: self.max_skip,
            initial_state: self.initial_state,
            halting,
            table: ActionTable::Rule(Arc::new(NoRule)),
        };
        spec.check_shape()?;

        let rows = spec.row_count() as usize;
        let mut writes = vec![0; rows * t];
        let mut moves = vec![0; rows * t];
        let mut next = vec![0; rows];
        let mut declared = vec![false; rows];

        for (state, reads, w, mv, nx) in self.entries {
            if state >= spec.state_count() {
                return Err(MachineError::UnknownStateId(state));
            }
            if reads.len() != t {
                return Err(MachineError::Arity {
                    expected: t,
                    found: reads.len(),
                });
            }
            for (tape, &r) in reads.iter().enumerate() {
                if r >= spec.tape_symbols[tape] {
                    return Err(MachineError::SymbolOutOfRange {
                        tape,
                        symbol: r,
                        alphabet: spec.tape_symbols[tape],
                    });
                }
            }
            let action = Action {
                writes: SmallVec::from_vec(w),
                moves: SmallVec::from_vec(mv),
                next: nx,
            };
            spec.check_action(&action)?;
            let row = spec.row_index(state, &reads);
            if declared[row] {
                return Err(MachineError::DuplicateRow {
                    state: spec.states[state as usize].clone(),
                    reads: reads.iter().map(|&r| spec.symbols[r as usize].clone()).collect(),
                });
            }
            declared[row] = true;
            writes[row * t..(row + 1) * t].copy_from_slice(&action.writes);
            moves[row * t..(row + 1) * t].copy_from_slice(&action.moves);
            next[row] = action.next;
        }

        for row in 0..rows {
            if declared[row] {
                continue;
            }
            let (state, reads) = spec.decode_row(row as u64);
            if !spec.halting[state as usize] {
                return Err(MachineError::PartialTable {
                    state: spec.states[state as usize].clone(),
                    reads: reads.iter().map(|&r| spec.symbols[r as usize].clone()).collect(),
                });
            }
            // Halt rows are never executed; fill with a no-op.
            writes[row * t..(row + 1) * t].copy_from_slice(&reads);
            next[row] = state;
        }

        spec.table = ActionTable::Dense {
            writes,
            moves,
            next,
            declared,
        };
        Ok(spec)
    }
}

#[derive(Debug)]
struct NoRule;

impl ActionRule for NoRule {
    fn action(&self, state: StateId, reads: &[Symbol]) -> Action {
        Action {
            writes: SmallVec::from_slice(reads),
            moves: SmallVec::from_elem(0, reads.len()),
            next: state,
        }
    }
}
