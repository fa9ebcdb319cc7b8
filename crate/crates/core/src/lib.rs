//! Cost-metered multi-tape Turing machines.
//!
//! The cost of a computation is the sum, over executed steps, of the
//! information (in bits) stored in the machine at that step: its action
//! table, its state register, its head positions and the leased cells of its
//! work tapes. On top of that metering this crate provides
//!
//! * a System-vs-Environment game harness with sleep/wake on the run tape,
//!   lockstep ensembles with shared work tapes and daughter recruitment,
//! * a dual-tape emulator for single-tape machines and a UTM-ensemble
//!   emulator for small discrete neural nets, both with checked cost bounds,
//! * budgeted least-cost search over programs and machine/program pairs,
//! * closed-form processor-size versus run-length trade-off formulas,
//! * silicon and synapse capacity estimators with bundled case studies.

pub mod bits;
pub mod capacity;
pub mod corpus;
pub mod cost;
pub mod emulator;
pub mod game;
pub mod machine;
pub mod par;
pub mod search;
pub mod tradeoff;

pub use cost::{Breakdown, CostLedger, CostMeter, CostModel, TableSizeMode};
pub use machine::{
    Configuration, MachineBuilder, MachineDoc, MachineError, MachineSpec, StateId, Status, Symbol, TapeKind, BLANK,
};
pub use par::Execution;

/// Version stamped into every exported document.
pub const FORMAT_VERSION: u32 = 1;
