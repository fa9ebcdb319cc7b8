//! System-versus-Environment games on a run tape, and machine ensembles.

mod ensemble;
mod play;

pub use ensemble::{CellRef, Coprocessor, Ensemble, Member, Overlap, RecruitmentRequest, TickReport};
pub use play::{
    judge, play, tit_for_tat_doc, tit_for_tat_machine, GameRules, GameTranscript, IllegalMove, PlayOptions, Player,
    Script, ScriptTurn, TurnRecord, Verdict,
};

use thiserror::Error;

use crate::machine::MachineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("system machine has no run tape")]
    NoRunTape,
    #[error("bad script: {0}")]
    Script(String),
    #[error("cost model: {0}")]
    Cost(String),
    #[error("unknown machine {0}")]
    UnknownMachine(usize),
    #[error("machine {0} has no tape {1}")]
    UnknownTape(usize, usize),
    #[error("tape {1} of machine {0} is not a work tape")]
    NotWorkTape(usize, usize),
    #[error("machines {first} and {second} both wrote shared cell group {group} in one tick")]
    WriteConflict { group: usize, first: usize, second: usize },
}
