use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::spec::{Action, MachineSpec, StateId, Symbol, TapeKind};
use super::tape::Tape;
use super::MachineError;
use crate::cost::{CostLedger, CostMeter};

/// Relative slack on budget comparisons so that a budget of exactly k·I
/// admits k steps despite rounding.
const BUDGET_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Sleeping,
    Halted,
    BudgetExceeded,
}

/// An effective write produced by one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellWrite {
    pub tape: usize,
    pub pos: i64,
    pub symbol: Symbol,
}

/// A step computed from the current configuration but not yet applied.
#[derive(Clone, Debug)]
pub struct StepPlan {
    pub reads: SmallVec<[Symbol; 4]>,
    pub action: Action,
    /// Cells newly leased on each tape by this step.
    pub new_leases: SmallVec<[u64; 4]>,
    pub writes: SmallVec<[CellWrite; 4]>,
    /// Bits charged by an external device for this step.
    pub device_bits: f64,
}

/// A step computed outside the action table (a coprocessor).
#[derive(Clone, Debug)]
pub struct ExternalStep {
    pub action: Action,
    pub device_bits: f64,
}

#[derive(Clone, Debug)]
pub enum StepEvent {
    Executed(StepPlan),
    Asleep,
    Halted,
    Stopped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunLimits {
    pub budget_bits: f64,
    pub max_steps: Option<u64>,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            budget_bits: f64::INFINITY,
            max_steps: None,
        }
    }
}

impl RunLimits {
    pub fn budget(bits: f64) -> Self {
        RunLimits {
            budget_bits: bits,
            max_steps: None,
        }
    }

    pub fn steps(max: u64) -> Self {
        RunLimits {
            budget_bits: f64::INFINITY,
            max_steps: Some(max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: u64,
    pub cost_bits: f64,
    pub status: Status,
    pub step_cap_hit: bool,
}

/// Instantaneous description: state, tapes, heads, step count.
#[derive(Clone, Debug)]
pub struct Configuration {
    spec: Arc<MachineSpec>,
    state: StateId,
    tapes: Vec<Tape>,
    steps: u64,
    status: Status,
}

impl Configuration {
    pub fn new(spec: Arc<MachineSpec>) -> Self {
        let tapes = vec![Tape::new(); spec.tape_count()];
        let state = spec.initial_state();
        let mut config = Configuration {
            spec,
            state,
            tapes,
            steps: 0,
            status: Status::Running,
        };
        config.refresh_status();
        config
    }

    /// Loads `contents` onto `tape` starting at position 0.
    pub fn with_tape(mut self, tape: usize, contents: &[Symbol]) -> Self {
        self.tapes[tape].load(0, contents);
        self.refresh_status();
        self
    }

    pub fn spec(&self) -> &Arc<MachineSpec> {
        &self.spec
    }

    pub fn state(&self) -> StateId {
        self.state
    }

    pub fn set_state(&mut self, state: StateId) {
        self.state = state;
        self.refresh_status();
    }

    pub fn tape(&self, index: usize) -> &Tape {
        &self.tapes[index]
    }

    pub fn tapes(&self) -> &[Tape] {
        &self.tapes
    }

    pub fn tape_mut(&mut self, index: usize) -> &mut Tape {
        &mut self.tapes[index]
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn leased_counts(&self) -> SmallVec<[u64; 4]> {
        self.tapes.iter().map(|t| t.leased_count()).collect()
    }

    /// Writes a cell from outside the machine (environment or loader).
    pub fn write_external(&mut self, tape: usize, pos: i64, symbol: Symbol) -> Result<(), MachineError> {
        if tape >= self.tapes.len() {
            return Err(MachineError::TapeIndex(tape));
        }
        if symbol >= self.spec.tape_symbols(tape) {
            return Err(MachineError::SymbolOutOfRange {
                tape,
                symbol,
                alphabet: self.spec.tape_symbols(tape),
            });
        }
        self.tapes[tape].write(pos, symbol);
        self.refresh_status();
        Ok(())
    }

    /// Releases `count` cells starting at the head of `tape`.
    pub fn free_cells(&mut self, tape: usize, count: i64) -> Result<u64, MachineError> {
        if tape >= self.tapes.len() {
            return Err(MachineError::TapeIndex(tape));
        }
        if count < 0 {
            return Err(MachineError::Invalid(format!("negative free count {count}")));
        }
        let t = &mut self.tapes[tape];
        let head = t.head();
        let freed = (head..head + count).filter(|&p| t.free(p)).count() as u64;
        self.refresh_status();
        Ok(freed)
    }

    /// Re-derives running/sleeping/halted from the state and run tape.
    pub fn refresh_status(&mut self) {
        if matches!(self.status, Status::BudgetExceeded) {
            return;
        }
        self.status = if self.spec.is_halting(self.state) {
            Status::Halted
        } else if self.input_missing() {
            Status::Sleeping
        } else {
            Status::Running
        };
    }

    fn input_missing(&self) -> bool {
        self.spec
            .tape_kinds()
            .iter()
            .enumerate()
            .any(|(i, k)| *k == TapeKind::Run && !self.tapes[i].is_leased(self.tapes[i].head()))
    }

    pub fn reads(&self) -> SmallVec<[Symbol; 4]> {
        self.tapes.iter().map(|t| t.read_head()).collect()
    }

    /// Plans the next table step without applying it.
    pub fn plan(&self) -> Result<StepPlan, MachineError> {
        let reads = self.reads();
        for (tape, &r) in reads.iter().enumerate() {
            if r >= self.spec.tape_symbols(tape) {
                return Err(MachineError::SymbolOutOfRange {
                    tape,
                    symbol: r,
                    alphabet: self.spec.tape_symbols(tape),
                });
            }
        }
        let action = self.spec.action(self.state, &reads);
        if self.spec.is_rule_backed() {
            self.spec.check_action(&action)?;
        }
        Ok(self.plan_with(reads, action, 0.0))
    }

    /// Plans a step whose action comes from outside the table.
    pub fn plan_external(&self, step: ExternalStep) -> Result<StepPlan, MachineError> {
        self.spec.check_action(&step.action)?;
        Ok(self.plan_with(self.reads(), step.action, step.device_bits))
    }

    fn plan_with(&self, reads: SmallVec<[Symbol; 4]>, action: Action, device_bits: f64) -> StepPlan {
        let mut new_leases: SmallVec<[u64; 4]> = SmallVec::from_elem(0, self.tapes.len());
        let mut writes = SmallVec::new();
        for (i, tape) in self.tapes.iter().enumerate() {
            let w = action.writes[i];
            // Writing back what was read changes nothing and leases nothing.
            if w == reads[i] || self.spec.tape_kind(i) == TapeKind::Valuation {
                continue;
            }
            let pos = tape.head();
            if !tape.is_leased(pos) {
                new_leases[i] = 1;
            }
            writes.push(CellWrite {
                tape: i,
                pos,
                symbol: w,
            });
        }
        StepPlan {
            reads,
            action,
            new_leases,
            writes,
            device_bits,
        }
    }

    /// Applies a plan computed from this configuration.
    pub fn apply(&mut self, plan: &StepPlan) {
        for w in &plan.writes {
            self.tapes[w.tape].write(w.pos, w.symbol);
        }
        for (tape, &mv) in self.tapes.iter_mut().zip(plan.action.moves.iter()) {
            tape.move_head(mv);
        }
        self.state = plan.action.next;
        self.steps += 1;
        self.refresh_status();
    }

    /// One read-write-move cycle. Refused unless the machine is running.
    pub fn step(&mut self) -> Result<StepEvent, MachineError> {
        if let Some(event) = self.blocked() {
            return Ok(event);
        }
        let plan = self.plan()?;
        self.apply(&plan);
        Ok(StepEvent::Executed(plan))
    }

    fn blocked(&mut self) -> Option<StepEvent> {
        if self.status == Status::Sleeping {
            self.refresh_status();
        }
        match self.status {
            Status::Running => None,
            Status::Sleeping => Some(StepEvent::Asleep),
            Status::Halted => Some(StepEvent::Halted),
            Status::BudgetExceeded => Some(StepEvent::Stopped),
        }
    }

    /// Marks the configuration as out of budget.
    pub fn exhaust(&mut self) {
        self.status = Status::BudgetExceeded;
    }

    /// Steps with cost accrual until halt, sleep, budget or step cap.
    ///
    /// A step is taken only if the cost after it stays within the budget.
    /// The ledger continues from whatever it already holds.
    pub fn run(
        &mut self,
        meter: &CostMeter,
        limits: RunLimits,
        ledger: &mut CostLedger,
    ) -> Result<RunSummary, MachineError> {
        let start_steps = self.steps;
        let start_cost = ledger.total_bits();
        let mut step_cap_hit = false;
        loop {
            if self.blocked().is_some() {
                break;
            }
            if let Some(cap) = limits.max_steps {
                if self.steps - start_steps >= cap {
                    step_cap_hit = true;
                    break;
                }
            }
            let plan = self.plan()?;
            if !self.charge(meter, &plan, limits.budget_bits, ledger) {
                break;
            }
        }
        Ok(RunSummary {
            steps: self.steps - start_steps,
            cost_bits: ledger.total_bits() - start_cost,
            status: self.status,
            step_cap_hit,
        })
    }

    /// Applies `plan` if its post-step information fits in the budget and
    /// records it; otherwise marks the budget as exceeded.
    pub fn charge(&mut self, meter: &CostMeter, plan: &StepPlan, budget_bits: f64, ledger: &mut CostLedger) -> bool {
        let mut breakdown = meter.breakdown_for(|t| self.tapes[t].leased_count() + plan.new_leases[t]);
        breakdown.device_bits += plan.device_bits;
        let bits = breakdown.total();
        if ledger.total_bits() + bits > budget_bits * (1.0 + BUDGET_EPS) {
            self.exhaust();
            return false;
        }
        self.apply(plan);
        ledger.record(self.steps, breakdown);
        true
    }

    /// Runs without metering; returns the number of steps taken.
    pub fn run_unmetered(&mut self, max_steps: u64) -> Result<u64, MachineError> {
        let start = self.steps;
        while self.steps - start < max_steps {
            match self.step()? {
                StepEvent::Executed(_) => {}
                _ => break,
            }
        }
        Ok(self.steps - start)
    }
}
