//! Emulator constructions with checked cost bounds.

pub mod neural;
pub mod utm;

use thiserror::Error;

use crate::game::GameError;
use crate::machine::MachineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmulatorError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Ensemble(#[from] GameError),
    #[error("target must have exactly one work tape")]
    NotSingleTape,
    #[error("target needs {needed} emulator symbols, only {available} available")]
    TooLarge { needed: u64, available: u32 },
    #[error("cost and step count must be non-negative")]
    Negative,
    #[error("emulation exceeded its budget after {0} bits")]
    Budget(f64),
    #[error("emulation did not halt within {0} steps")]
    StepCap(u64),
    #[error("invalid net: {0}")]
    Net(String),
}
