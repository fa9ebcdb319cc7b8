use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GameError;
use crate::cost::{CostLedger, CostMeter, CostModel};
use crate::machine::{Configuration, MachineDoc, MachineSpec, Status, Symbol};
use crate::FORMAT_VERSION;

const TIT_FOR_TAT: &str = include_str!("../../fixtures/titfortat.json");

/// The Tit-for-Tat player: states c, d, r, h over symbols C, D, H on a
/// single run tape.
pub fn tit_for_tat_machine() -> MachineSpec {
    MachineDoc::from_json(TIT_FOR_TAT)
        .and_then(|d| d.build())
        .expect("bundled Tit-for-Tat table is valid")
}

pub fn tit_for_tat_doc() -> MachineDoc {
    MachineDoc::from_json(TIT_FOR_TAT).expect("bundled Tit-for-Tat table is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    System,
    Environment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SystemWins,
    EnvironmentWins,
    Unfinished,
}

/// One Environment turn: a random cell and a move cell, or a lone halt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptTurn {
    Halt {
        halt: bool,
    },
    Move {
        random: String,
        #[serde(rename = "move")]
        mv: String,
    },
}

impl ScriptTurn {
    pub fn play(random: &str, mv: &str) -> Self {
        ScriptTurn::Move {
            random: random.to_owned(),
            mv: mv.to_owned(),
        }
    }

    pub fn halt() -> Self {
        ScriptTurn::Halt { halt: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Script(pub Vec<ScriptTurn>);

impl Script {
    pub fn from_json(text: &str) -> Result<Self, GameError> {
        serde_json::from_str(text).map_err(|e| GameError::Script(e.to_string()))
    }

    /// `turns` seeded random C/D turns followed by a halt.
    pub fn random(seed: u64, turns: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = |rng: &mut ChaCha8Rng| if rng.gen::<bool>() { "C" } else { "D" };
        let mut out: Vec<ScriptTurn> = (0..turns)
            .map(|_| {
                let r = pick(&mut rng);
                let m = pick(&mut rng);
                ScriptTurn::play(r, m)
            })
            .collect();
        out.push(ScriptTurn::halt());
        Script(out)
    }

    /// Convenience: each pair is (random, move); a halt is appended.
    pub fn moves(pairs: &[(&str, &str)]) -> Self {
        let mut out: Vec<ScriptTurn> = pairs.iter().map(|(r, m)| ScriptTurn::play(r, m)).collect();
        out.push(ScriptTurn::halt());
        Script(out)
    }
}

/// Symbols with special meaning in the turn protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameRules {
    pub halt_symbol: Symbol,
    pub move_symbols: Vec<Symbol>,
}

impl GameRules {
    /// Halt is the symbol named `H` (else the last symbol); all others are moves.
    pub fn for_machine(spec: &MachineSpec) -> Self {
        let halt_symbol = spec.symbol_id("H").unwrap_or(spec.symbol_count() - 1);
        GameRules {
            halt_symbol,
            move_symbols: (0..spec.symbol_count()).filter(|&s| s != halt_symbol).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlayOptions {
    pub max_turns: usize,
    pub budget_bits: f64,
    pub model: CostModel,
}

impl Default for PlayOptions {
    fn default() -> Self {
        PlayOptions {
            max_turns: usize::MAX,
            budget_bits: f64::INFINITY,
            model: CostModel::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IllegalMove {
    pub player: Player,
    pub turn: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub environment: Vec<String>,
    pub system: Vec<String>,
    pub step_bits: Vec<f64>,
    pub bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub format_version: u32,
    pub turns: Vec<TurnRecord>,
    pub verdict: Verdict,
    pub first_illegal: Option<IllegalMove>,
    pub environment_halted: bool,
    pub system_status: Status,
    pub budget_exhausted: bool,
    pub steps: u64,
    pub total_bits: f64,
}

impl GameTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcripts always serialize")
    }
}

/// First illegal move loses; otherwise the System wins once the
/// Environment has called halt and the System has halted.
pub fn judge(t: &GameTranscript) -> Verdict {
    match &t.first_illegal {
        Some(m) if m.player == Player::System => Verdict::EnvironmentWins,
        Some(_) => Verdict::SystemWins,
        None if t.environment_halted && t.system_status == Status::Halted => Verdict::SystemWins,
        None => Verdict::Unfinished,
    }
}

struct Referee {
    rules: GameRules,
    owner: HashMap<i64, Player>,
    first_illegal: Option<IllegalMove>,
}

impl Referee {
    fn flag(&mut self, player: Player, turn: usize, reason: String) {
        if self.first_illegal.is_none() {
            self.first_illegal = Some(IllegalMove { player, turn, reason });
        }
    }
}

/// Plays `system` against a scripted Environment on the run tape.
///
/// Each turn the Environment appends a random cell (owned by the System,
/// which writes its move there) and a move cell (owned by the Environment),
/// then wakes the System, which runs until it sleeps or halts.
pub fn play(system: Arc<MachineSpec>, script: &Script, opts: &PlayOptions) -> Result<GameTranscript, GameError> {
    let run = system.run_tape().ok_or(GameError::NoRunTape)?;
    let meter = CostMeter::new(&system, opts.model).map_err(|e| GameError::Cost(e.to_string()))?;
    let mut referee = Referee {
        rules: GameRules::for_machine(&system),
        owner: HashMap::new(),
        first_illegal: None,
    };
    let sym = |name: &str| -> Result<Symbol, GameError> {
        system
            .symbol_id(name)
            .filter(|&s| s < system.tape_symbols(run))
            .ok_or_else(|| GameError::Script(format!("unknown symbol `{name}`")))
    };
    let mut config = Configuration::new(Arc::clone(&system));
    let mut ledger = CostLedger::new();
    let mut env_pos: i64 = config.tape(run).head();
    let mut turns = Vec::new();
    let mut environment_halted = false;
    let mut budget_exhausted = false;

    for (turn, entry) in script.0.iter().enumerate().take(opts.max_turns) {
        if config.status() != Status::Sleeping {
            break;
        }
        let mut environment = Vec::new();
        match entry {
            ScriptTurn::Halt { halt } => {
                if !halt {
                    return Err(GameError::Script("`halt` must be true".into()));
                }
                config.write_external(run, env_pos, referee.rules.halt_symbol)?;
                referee.owner.insert(env_pos, Player::System);
                environment.push(system.symbol_name(referee.rules.halt_symbol).to_owned());
                env_pos += 1;
                environment_halted = true;
            }
            ScriptTurn::Move { random, mv } => {
                let (r, m) = (sym(random)?, sym(mv)?);
                if m == referee.rules.halt_symbol {
                    referee.flag(Player::Environment, turn, "halt symbol in move cell".into());
                }
                config.write_external(run, env_pos, r)?;
                config.write_external(run, env_pos + 1, m)?;
                referee.owner.insert(env_pos, Player::System);
                referee.owner.insert(env_pos + 1, Player::Environment);
                environment.push(random.clone());
                environment.push(mv.clone());
                env_pos += 2;
            }
        }

        let mut record = TurnRecord {
            turn,
            environment,
            system: Vec::new(),
            step_bits: Vec::new(),
            bits: 0.0,
        };
        while config.status() == Status::Running {
            let plan = config.plan()?;
            let head_before = config.tape(run).head();
            let before = ledger.total_bits();
            if !config.charge(&meter, &plan, opts.budget_bits, &mut ledger) {
                budget_exhausted = true;
                break;
            }
            debug_assert!(config.tape(run).head() >= head_before);
            record.step_bits.push(ledger.total_bits() - before);
            record
                .system
                .push(system.symbol_name(plan.action.writes[run]).to_owned());
            for w in plan.writes.iter().filter(|w| w.tape == run) {
                if !referee.rules.move_symbols.contains(&w.symbol) {
                    referee.flag(
                        Player::System,
                        turn,
                        format!("wrote non-move symbol `{}`", system.symbol_name(w.symbol)),
                    );
                }
                if referee.owner.get(&w.pos) == Some(&Player::Environment) {
                    referee.flag(Player::System, turn, format!("overwrote Environment cell {}", w.pos));
                }
            }
        }
        record.bits = record.step_bits.iter().sum();
        turns.push(record);
        if budget_exhausted {
            break;
        }
    }

    let mut transcript = GameTranscript {
        format_version: FORMAT_VERSION,
        turns,
        verdict: Verdict::Unfinished,
        first_illegal: referee.first_illegal,
        environment_halted,
        system_status: config.status(),
        budget_exhausted,
        steps: config.steps(),
        total_bits: ledger.total_bits(),
    };
    transcript.verdict = judge(&transcript);
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{fsm_size_of, packed_table_bits, TableSizeMode};
    use crate::machine::MachineBuilder;

    fn packed() -> PlayOptions {
        PlayOptions {
            model: CostModel {
                table_mode: TableSizeMode::Packed,
                ..CostModel::default()
            },
            ..PlayOptions::default()
        }
    }

    #[test]
    fn table_rows() {
        let t = tit_for_tat_machine();
        assert_eq!((t.state_count(), t.symbol_count(), t.work_tape_count()), (4, 3, 0));
        let row = |s: &str, r: &str| t.action(t.state_id(s).unwrap(), &[t.symbol_id(r).unwrap()]);
        let a = row("c", "C");
        assert_eq!((a.writes[0], a.moves[0], a.next), (0, 1, 2));
        let a = row("r", "D");
        assert_eq!((a.writes[0], a.moves[0], a.next), (1, 1, 1));
        let a = row("r", "H");
        assert_eq!((a.writes[0], a.moves[0], a.next), (0, 0, 3));
        assert_eq!(packed_table_bits(&t), 36);
        assert_eq!(fsm_size_of(&t), 4 * 3 * (2 + 2 + 2) + 2);
    }

    #[test]
    fn three_turn_script() {
        let script = Script(vec![
            ScriptTurn::play("C", "C"),
            ScriptTurn::play("D", "D"),
            ScriptTurn::halt(),
        ]);
        let t = play(Arc::new(tit_for_tat_machine()), &script, &packed()).unwrap();
        assert_eq!(t.verdict, Verdict::SystemWins);
        assert_eq!(t.steps, 5);
        assert_eq!(t.turns[0].bits, 76.0);
        assert_eq!(t.turns[1].bits, 76.0);
        assert_eq!(t.turns[2].bits, 38.0);
        assert_eq!(t.turns[1].system, vec!["C", "D"]);
        assert_eq!(t.total_bits, 190.0);
    }

    #[test]
    fn replies_with_previous_move() {
        let script = Script::moves(&[("C", "D"), ("C", "C"), ("D", "D")]);
        let t = play(Arc::new(tit_for_tat_machine()), &script, &packed()).unwrap();
        let own: Vec<&str> = t.turns.iter().map(|r| r.system[0].as_str()).collect();
        assert_eq!(own, vec!["C", "D", "C", "D"]);
    }

    #[test]
    fn immediate_halt() {
        let t = play(
            Arc::new(tit_for_tat_machine()),
            &Script(vec![ScriptTurn::halt()]),
            &packed(),
        )
        .unwrap();
        assert_eq!((t.steps, t.total_bits, t.verdict), (1, 38.0, Verdict::SystemWins));
    }

    #[test]
    fn environment_halt_in_move_cell_loses() {
        let script = Script(vec![ScriptTurn::play("C", "H")]);
        let t = play(Arc::new(tit_for_tat_machine()), &script, &packed()).unwrap();
        let first = t.first_illegal.clone().unwrap();
        assert_eq!(first.player, Player::Environment);
        assert_eq!(t.system_status, Status::Halted);
        assert_eq!(t.verdict, Verdict::SystemWins);
    }

    #[test]
    fn system_overwrite_loses() {
        // Like Tit-for-Tat but flips the Environment's move in state r.
        let spec = MachineBuilder::new(&["c", "r", "h"], &["C", "D", "H"])
            .tapes(&[crate::TapeKind::Run])
            .halt(2)
            .entry(0, &[0], &[0], &[1], 1)
            .entry(0, &[1], &[0], &[1], 1)
            .entry(0, &[2], &[0], &[0], 2)
            .entry(1, &[0], &[1], &[1], 0)
            .entry(1, &[1], &[1], &[1], 0)
            .entry(1, &[2], &[2], &[0], 2)
            .build()
            .unwrap();
        let t = play(Arc::new(spec), &Script::moves(&[("C", "C")]), &packed()).unwrap();
        assert_eq!(t.first_illegal.unwrap().player, Player::System);
        assert_eq!(t.verdict, Verdict::EnvironmentWins);
    }

    #[test]
    fn budget_cuts_game() {
        let opts = PlayOptions {
            budget_bits: 100.0,
            ..packed()
        };
        let t = play(
            Arc::new(tit_for_tat_machine()),
            &Script::moves(&[("C", "C"), ("D", "D")]),
            &opts,
        )
        .unwrap();
        assert!(t.budget_exhausted);
        assert_eq!(t.steps, 2);
        assert_eq!(t.verdict, Verdict::Unfinished);
    }

    #[test]
    fn script_json() {
        let s = Script::from_json(r#"[{"random":"C","move":"D"},{"halt":true}]"#).unwrap();
        assert_eq!(s, Script::moves(&[("C", "D")]));
        assert_eq!(Script::random(7, 4), Script::random(7, 4));
    }
}
