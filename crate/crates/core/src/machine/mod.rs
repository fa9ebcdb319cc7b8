//! Multi-tape skip-move machines.

mod config;
mod doc;
pub mod skip;
mod spec;
mod tape;

pub use config::{CellWrite, Configuration, ExternalStep, RunLimits, RunSummary, Status, StepEvent, StepPlan};
pub use doc::{EntryDoc, MachineDoc};
pub use spec::{Action, ActionRule, MachineBuilder, MachineSpec, StateId, Symbol, TapeKind, BLANK};
pub use tape::Tape;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error("malformed machine document: {0}")]
    Malformed(String),
    #[error("machine has no {0}")]
    Empty(&'static str),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("state id {0} out of range")]
    UnknownStateId(StateId),
    #[error("expected {expected} tape components, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("symbol {symbol} outside the {alphabet}-symbol alphabet of tape {tape}")]
    SymbolOutOfRange { tape: usize, symbol: Symbol, alphabet: u32 },
    #[error("move {movement} out of range (max skip {max_skip})")]
    MoveOutOfRange { movement: i64, max_skip: u32 },
    #[error("tape {tape} has invalid alphabet size {size}")]
    BadAlphabet { tape: usize, size: u32 },
    #[error("partial table: no entry for state `{state}` reading {reads:?}")]
    PartialTable { state: String, reads: Vec<String> },
    #[error("duplicate entry for state `{state}` reading {reads:?}")]
    DuplicateRow { state: String, reads: Vec<String> },
    #[error("run tape {tape} moved backwards by {movement}")]
    BackwardRunMove { tape: usize, movement: i64 },
    #[error("tape index {0} out of range")]
    TapeIndex(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
}
