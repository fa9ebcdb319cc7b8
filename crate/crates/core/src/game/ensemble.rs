use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::GameError;
use crate::cost::{ensemble_cost, CostLedger, CostMeter, CostModel, MachineCost, SharedRegion};
use crate::machine::{Configuration, ExternalStep, MachineSpec, StateId, Status, StepPlan, Symbol, TapeKind};
use crate::par::{self, Execution};

/// Replaces table lookups with steps computed by attached hardware.
pub trait Coprocessor: Send + Sync {
    fn intercept(&self, config: &Configuration) -> Option<ExternalStep>;
}

/// A cell of one member's tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRef {
    pub member: usize,
    pub tape: usize,
    pub pos: i64,
}

pub struct Member {
    pub config: Configuration,
    pub meter: CostMeter,
    pub ledger: CostLedger,
    coprocessor: Option<Arc<dyn Coprocessor>>,
    /// Bits this member's ledger has charged for each shared group.
    shared_charges: BTreeMap<usize, f64>,
    /// (tape, pos, group, cell bits) for this member's shared cells.
    shared_cells: Vec<(usize, i64, usize, u32)>,
}

impl Member {
    pub fn steps(&self) -> u64 {
        self.config.steps()
    }
}

/// A range of cells aliased between the new machine and an existing one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Overlap {
    pub tape: usize,
    pub start: i64,
    pub other: usize,
    pub other_tape: usize,
    pub other_start: i64,
    pub len: usize,
}

/// Everything needed to start a daughter machine.
#[derive(Clone, Debug)]
pub struct RecruitmentRequest {
    pub spec: Arc<MachineSpec>,
    pub state: Option<StateId>,
    pub work_tapes: Vec<(usize, Vec<Symbol>)>,
    pub heads: Vec<(usize, i64)>,
    pub overlaps: Vec<Overlap>,
}

impl RecruitmentRequest {
    pub fn new(spec: Arc<MachineSpec>) -> Self {
        RecruitmentRequest {
            spec,
            state: None,
            work_tapes: Vec::new(),
            heads: Vec::new(),
            overlaps: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TickReport {
    pub executed: Vec<usize>,
    pub shared_writes: usize,
}

/// Machines stepping in lockstep, some of whose work-tape cells are aliased.
///
/// In a tick every running member computes its step from the state at the
/// start of the tick. Writes to shared cells are checked for conflicts and
/// then copied to every alias, so they become visible on the next tick.
pub struct Ensemble {
    members: Vec<Member>,
    groups: Vec<Vec<CellRef>>,
    group_of: HashMap<CellRef, usize>,
    model: CostModel,
    exec: Execution,
    ticks: u64,
}

impl Ensemble {
    pub fn new(model: CostModel) -> Self {
        Ensemble {
            members: Vec::new(),
            groups: Vec::new(),
            group_of: HashMap::new(),
            model,
            exec: Execution::Sequential,
            ticks: 0,
        }
    }

    /// Plans the members of a tick on the rayon pool.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn add(&mut self, config: Configuration) -> Result<usize, GameError> {
        self.add_with_model(config, self.model)
    }

    /// Adds a member metered under its own cost model.
    pub fn add_with_model(&mut self, config: Configuration, model: CostModel) -> Result<usize, GameError> {
        let meter = CostMeter::new(config.spec(), model).map_err(|e| GameError::Cost(e.to_string()))?;
        self.members.push(Member {
            config,
            meter,
            ledger: CostLedger::totals_only(),
            coprocessor: None,
            shared_charges: BTreeMap::new(),
            shared_cells: Vec::new(),
        });
        Ok(self.members.len() - 1)
    }

    pub fn attach(&mut self, member: usize, coprocessor: Arc<dyn Coprocessor>) {
        self.members[member].coprocessor = Some(coprocessor);
    }

    /// Keep per-step ledger entries for `member`.
    pub fn trace(&mut self, member: usize) {
        self.members[member].ledger = CostLedger::new();
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, id: usize) -> &Member {
        &self.members[id]
    }

    pub fn config(&self, id: usize) -> &Configuration {
        &self.members[id].config
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn group(&self, cell: CellRef) -> Option<usize> {
        self.group_of.get(&cell).copied()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    fn check_cell(&self, cell: CellRef) -> Result<(), GameError> {
        let m = self
            .members
            .get(cell.member)
            .ok_or(GameError::UnknownMachine(cell.member))?;
        match m.config.spec().tape_kinds().get(cell.tape) {
            Some(TapeKind::Work) => Ok(()),
            Some(_) => Err(GameError::NotWorkTape(cell.member, cell.tape)),
            None => Err(GameError::UnknownTape(cell.member, cell.tape)),
        }
    }

    /// Aliases `len` cells of `to` with those of `from`; the cells of `to`
    /// take over the current contents of `from`.
    pub fn share(&mut self, from: CellRef, to: CellRef, len: usize) -> Result<(), GameError> {
        self.check_cell(from)?;
        self.check_cell(to)?;
        for i in 0..len as i64 {
            let a = CellRef {
                pos: from.pos + i,
                ..from
            };
            let b = CellRef { pos: to.pos + i, ..to };
            if a == b {
                continue;
            }
            let src = self.members[a.member].config.tape(a.tape);
            let (leased, sym) = (src.is_leased(a.pos), src.read(a.pos));
            for cell in self.union(a, b) {
                if cell == a {
                    continue;
                }
                let tape = self.members[cell.member].config.tape_mut(cell.tape);
                if leased {
                    tape.write(cell.pos, sym);
                } else {
                    tape.free(cell.pos);
                }
            }
        }
        for m in &mut self.members {
            m.config.refresh_status();
        }
        self.rebuild_cell_index();
        Ok(())
    }

    /// Merges the groups of `a` and `b`; returns the members of the result.
    fn union(&mut self, a: CellRef, b: CellRef) -> Vec<CellRef> {
        let ga = self.group_of.get(&a).copied();
        let gb = self.group_of.get(&b).copied();
        let g = match (ga, gb) {
            (Some(x), Some(y)) if x == y => x,
            (Some(x), Some(y)) => {
                let moved = std::mem::take(&mut self.groups[y]);
                for c in &moved {
                    self.group_of.insert(*c, x);
                }
                self.groups[x].extend(moved);
                x
            }
            (Some(x), None) => {
                self.groups[x].push(b);
                self.group_of.insert(b, x);
                x
            }
            (None, Some(y)) => {
                self.groups[y].push(a);
                self.group_of.insert(a, y);
                y
            }
            (None, None) => {
                self.groups.push(vec![a, b]);
                let g = self.groups.len() - 1;
                self.group_of.insert(a, g);
                self.group_of.insert(b, g);
                g
            }
        };
        self.groups[g].clone()
    }

    fn rebuild_cell_index(&mut self) {
        for m in &mut self.members {
            m.shared_cells.clear();
        }
        let mut cells: Vec<(&CellRef, &usize)> = self.group_of.iter().collect();
        cells.sort();
        for (cell, &g) in cells {
            let bits = self.members[cell.member].config.spec().cell_bits(cell.tape);
            self.members[cell.member]
                .shared_cells
                .push((cell.tape, cell.pos, g, bits));
        }
    }

    /// Adds a daughter with copies of `parent`'s run and valuation tapes.
    pub fn recruit(&mut self, parent: usize, req: RecruitmentRequest) -> Result<usize, GameError> {
        let source = self.members.get(parent).ok_or(GameError::UnknownMachine(parent))?;
        for o in &req.overlaps {
            self.check_cell(CellRef {
                member: o.other,
                tape: o.other_tape,
                pos: o.other_start,
            })?;
            match req.spec.tape_kinds().get(o.tape) {
                Some(TapeKind::Work) => {}
                Some(_) => return Err(GameError::NotWorkTape(self.members.len(), o.tape)),
                None => return Err(GameError::UnknownTape(self.members.len(), o.tape)),
            }
        }
        let mut config = Configuration::new(Arc::clone(&req.spec));
        for kind in [TapeKind::Run, TapeKind::Valuation] {
            let theirs: Vec<usize> = source
                .config
                .spec()
                .tape_kinds()
                .iter()
                .enumerate()
                .filter(|(_, k)| **k == kind)
                .map(|(i, _)| i)
                .collect();
            let mine: Vec<usize> = req
                .spec
                .tape_kinds()
                .iter()
                .enumerate()
                .filter(|(_, k)| **k == kind)
                .map(|(i, _)| i)
                .collect();
            for (&dst, &src) in mine.iter().zip(theirs.iter()) {
                *config.tape_mut(dst) = source.config.tape(src).clone();
            }
        }
        for (tape, contents) in &req.work_tapes {
            if *tape >= config.tapes().len() {
                return Err(GameError::UnknownTape(self.members.len(), *tape));
            }
            config.tape_mut(*tape).load(0, contents);
        }
        for &(tape, pos) in &req.heads {
            if tape >= config.tapes().len() {
                return Err(GameError::UnknownTape(self.members.len(), tape));
            }
            config.tape_mut(tape).set_head(pos);
        }
        if let Some(s) = req.state {
            if s >= req.spec.state_count() {
                return Err(GameError::Machine(crate::MachineError::UnknownStateId(s)));
            }
            config.set_state(s);
        }
        config.refresh_status();
        let id = self.add(config)?;
        for o in &req.overlaps {
            self.share(
                CellRef {
                    member: o.other,
                    tape: o.other_tape,
                    pos: o.other_start,
                },
                CellRef {
                    member: id,
                    tape: o.tape,
                    pos: o.start,
                },
                o.len,
            )?;
        }
        Ok(id)
    }

    /// One lockstep tick of every running member.
    pub fn tick(&mut self) -> Result<TickReport, GameError> {
        let plans: Vec<Option<Result<StepPlan, crate::MachineError>>> = par::map(&self.members, self.exec, |m| {
            let mut probe = m.config.status();
            if probe == Status::Sleeping {
                let mut c = m.config.clone();
                c.refresh_status();
                probe = c.status();
            }
            if probe != Status::Running {
                return None;
            }
            Some(match m.coprocessor.as_ref().and_then(|c| c.intercept(&m.config)) {
                Some(ext) => m.config.plan_external(ext),
                None => m.config.plan(),
            })
        });

        let mut writers: HashMap<usize, (usize, Symbol)> = HashMap::new();
        let mut propagate: Vec<(usize, usize, Symbol)> = Vec::new();
        let mut report = TickReport::default();
        let mut ready: Vec<(usize, StepPlan)> = Vec::new();
        for (id, plan) in plans.into_iter().enumerate() {
            let Some(plan) = plan else { continue };
            let plan = plan?;
            for w in &plan.writes {
                let cell = CellRef {
                    member: id,
                    tape: w.tape,
                    pos: w.pos,
                };
                if let Some(&g) = self.group_of.get(&cell) {
                    if let Some((other, _)) = writers.insert(g, (id, w.symbol)) {
                        return Err(GameError::WriteConflict {
                            group: g,
                            first: other,
                            second: id,
                        });
                    }
                    propagate.push((g, id, w.symbol));
                }
            }
            ready.push((id, plan));
        }

        for (id, plan) in ready {
            let m = &mut self.members[id];
            m.config.refresh_status();
            let applied = m.config.charge(&m.meter, &plan, f64::INFINITY, &mut m.ledger);
            debug_assert!(applied);
            for &(tape, pos, g, bits) in &m.shared_cells {
                if m.config.tape(tape).is_leased(pos) {
                    *m.shared_charges.entry(g).or_insert(0.0) += bits as f64;
                }
            }
            report.executed.push(id);
        }

        report.shared_writes = propagate.len();
        for (g, writer, symbol) in propagate {
            for cell in self.groups[g].clone() {
                if cell.member == writer {
                    continue;
                }
                self.members[cell.member]
                    .config
                    .tape_mut(cell.tape)
                    .write(cell.pos, symbol);
            }
        }
        for m in &mut self.members {
            m.config.refresh_status();
        }
        self.ticks += 1;
        Ok(report)
    }

    pub fn run_ticks(&mut self, ticks: u64) -> Result<(), GameError> {
        for _ in 0..ticks {
            self.tick()?;
        }
        Ok(())
    }

    /// Sum of member ledgers, shared cells double counted.
    pub fn raw_cost(&self) -> f64 {
        self.members.iter().map(|m| m.ledger.total_bits()).sum()
    }

    pub fn machine_costs(&self) -> Vec<MachineCost> {
        self.members
            .iter()
            .enumerate()
            .map(|(id, m)| MachineCost {
                id,
                steps: m.steps(),
                total_bits: m.ledger.total_bits(),
            })
            .collect()
    }

    pub fn shared_regions(&self) -> Vec<SharedRegion> {
        (0..self.groups.len())
            .filter(|&g| !self.groups[g].is_empty())
            .map(|g| {
                let mut charges = BTreeMap::new();
                for cell in &self.groups[g] {
                    let c = self.members[cell.member].shared_charges.get(&g).copied().unwrap_or(0.0);
                    charges.insert(cell.member, c);
                }
                SharedRegion { charges }
            })
            .collect()
    }

    /// Total with every shared cell charged only to its most active user.
    pub fn attributed_cost(&self) -> f64 {
        ensemble_cost(&self.machine_costs(), &self.shared_regions()).expect("regions reference members")
    }
}
