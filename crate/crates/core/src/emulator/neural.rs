//! Discrete neural nets and their emulation by an ensemble of dual-tape machines.
//!
//! Every synapse is a finite-state machine: in state σ, reading the origin
//! node's spike η ∈ {0,1}, it moves to state `next[η]` and emits that state's
//! activation. Every node carries a potential u; each tick it forms
//! `v = u + Σ activations`, fires `fire(v)` and keeps `carry(v)` as its new
//! potential.
//!
//! In the emulator each synapse and each node is a generic machine whose
//! T_β holds the element's table and whose T_α cells are aliased with the
//! machines it talks to: a synapse's T_α is `[origin η, target slot]` and a
//! node's T_α is `[slot_1 .. slot_k, η]`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use super::EmulatorError;
use crate::bits::{ceil_log2, position_bits, twos_code, twos_complement, unzigzag, zigzag};
use crate::cost::{accumulator_bits, fsm_size_of, CostModel};
use crate::game::{CellRef, Coprocessor, Ensemble};
use crate::machine::{Action, ActionRule, Configuration, ExternalStep, MachineSpec, StateId, Symbol, TapeKind};
use crate::par::Execution;
use crate::FORMAT_VERSION;

/// Widest activation the emulator tabulates (its alphabet is 2^A symbols).
pub const MAX_EMULATED_WIDTH: u32 = 12;

/// An A-bit fast accumulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulatorModel {
    pub width: u32,
}

impl AccumulatorModel {
    /// Registers (3A − 1) plus adder truth tables 16(A − 1).
    pub fn cost_bits_per_step(&self) -> u64 {
        accumulator_bits(self.width, 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRow {
    pub fire: u8,
    /// Potential carried into the next tick.
    pub carry: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    /// Row i covers potential `v_lo + i`.
    pub table: Vec<NodeRow>,
    #[serde(default)]
    pub v_lo: i64,
    #[serde(default)]
    pub initial_potential: i64,
    #[serde(default)]
    pub initial_state: u8,
}

impl NodeSpec {
    pub fn v_hi(&self) -> i64 {
        self.v_lo + self.table.len() as i64 - 1
    }

    fn row(&self, v: i64) -> &NodeRow {
        &self.table[(v - self.v_lo) as usize]
    }

    /// Constant node: never fires, always resets to 0.
    pub fn silent(v_lo: i64, v_hi: i64) -> Self {
        NodeSpec {
            table: (v_lo..=v_hi).map(|_| NodeRow { fire: 0, carry: 0 }).collect(),
            v_lo,
            initial_potential: 0,
            initial_state: 0,
        }
    }

    /// Fires when `v >= threshold` and resets to 0.
    pub fn threshold(threshold: i64, v_lo: i64, v_hi: i64, initial_state: u8) -> Self {
        NodeSpec {
            table: (v_lo..=v_hi)
                .map(|v| NodeRow {
                    fire: (v >= threshold) as u8,
                    carry: 0,
                })
                .collect(),
            v_lo,
            initial_potential: 0,
            initial_state,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynapseRow {
    pub activation: i64,
    pub next0: usize,
    pub next1: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynapseSpec {
    pub origin: usize,
    pub target: usize,
    pub table: Vec<SynapseRow>,
    #[serde(default)]
    pub initial: usize,
}

impl SynapseSpec {
    /// Two states tracking the origin's spike: emits `weight` after a spike.
    pub fn follower(origin: usize, target: usize, weight: i64) -> Self {
        SynapseSpec {
            origin,
            target,
            table: vec![
                SynapseRow {
                    activation: 0,
                    next0: 0,
                    next1: 1,
                },
                SynapseRow {
                    activation: weight,
                    next0: 0,
                    next1: 1,
                },
            ],
            initial: 0,
        }
    }

    fn activation_range(&self) -> (i64, i64) {
        let acts = self.table.iter().map(|r| r.activation);
        (acts.clone().min().unwrap_or(0), acts.max().unwrap_or(0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuralNet {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub nodes: Vec<NodeSpec>,
    pub synapses: Vec<SynapseSpec>,
    #[serde(default = "default_width")]
    pub accumulator_bits: u32,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

fn default_width() -> u32 {
    8
}

impl NeuralNet {
    pub fn new(nodes: Vec<NodeSpec>, synapses: Vec<SynapseSpec>, accumulator_bits: u32) -> Self {
        NeuralNet {
            format_version: FORMAT_VERSION,
            nodes,
            synapses,
            accumulator_bits,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, EmulatorError> {
        let net: NeuralNet = serde_json::from_str(text).map_err(|e| EmulatorError::Net(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("nets always serialize")
    }

    /// Synapse indices per target node, in declaration order.
    pub fn incoming(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (i, s) in self.synapses.iter().enumerate() {
            if s.target < inc.len() {
                inc[s.target].push(i);
            }
        }
        inc
    }

    /// Largest in-degree.
    pub fn max_in_degree(&self) -> usize {
        self.incoming().iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), EmulatorError> {
        let bad = |m: String| Err(EmulatorError::Net(m));
        let a = self.accumulator_bits;
        if !(2..=62).contains(&a) {
            return bad(format!("activation width {a} outside 2..=62"));
        }
        let (amin, amax) = (-(1i64 << (a - 1)), (1i64 << (a - 1)) - 1);
        for (i, s) in self.synapses.iter().enumerate() {
            if s.origin >= self.nodes.len() || s.target >= self.nodes.len() {
                return bad(format!("synapse {i} references a missing node"));
            }
            if s.table.is_empty() || s.initial >= s.table.len() {
                return bad(format!("synapse {i} has no row for its initial state"));
            }
            for r in &s.table {
                if r.next0 >= s.table.len() || r.next1 >= s.table.len() {
                    return bad(format!("synapse {i} moves to a missing row"));
                }
                if r.activation < amin || r.activation > amax {
                    return bad(format!("synapse {i} activation {} exceeds {a} bits", r.activation));
                }
            }
        }
        let inc = self.incoming();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.table.is_empty() {
                return bad(format!("node {i} has an empty table"));
            }
            if n.initial_state > 1 || n.table.iter().any(|r| r.fire > 1) {
                return bad(format!("node {i} uses a spike value other than 0/1"));
            }
            if n.v_lo > 0 || n.v_hi() < 0 {
                return bad(format!("node {i} table does not cover potential 0"));
            }
            let (lo, hi) = inc[i].iter().fold((0, 0), |(lo, hi), &s| {
                let (a, b) = self.synapses[s].activation_range();
                (lo + a, hi + b)
            });
            let carries = n
                .table
                .iter()
                .map(|r| r.carry)
                .chain(std::iter::once(n.initial_potential));
            for c in carries {
                if c < n.v_lo || c > n.v_hi() || c + lo < n.v_lo || c + hi > n.v_hi() {
                    return bad(format!("node {i} potential can leave [{}, {}]", n.v_lo, n.v_hi()));
                }
            }
        }
        Ok(())
    }
}

/// Trajectory of spikes, one vector per tick starting with the initial one.
pub type Trajectory = Vec<Vec<u8>>;

#[derive(Clone, Debug, PartialEq)]
pub struct DirectRun {
    pub trajectory: Trajectory,
    pub cost: f64,
}

/// Reference simulation of `ticks` ticks.
pub fn simulate(net: &NeuralNet, ticks: u64) -> Trajectory {
    let inc = net.incoming();
    let mut eta: Vec<u8> = net.nodes.iter().map(|n| n.initial_state).collect();
    let mut pot: Vec<i64> = net.nodes.iter().map(|n| n.initial_potential).collect();
    let mut sigma: Vec<usize> = net.synapses.iter().map(|s| s.initial).collect();
    let mut out = vec![eta.clone()];
    for _ in 0..ticks {
        let mut act = vec![0i64; net.synapses.len()];
        for (i, s) in net.synapses.iter().enumerate() {
            let row = &s.table[sigma[i]];
            sigma[i] = if eta[s.origin] == 0 { row.next0 } else { row.next1 };
            act[i] = s.table[sigma[i]].activation;
        }
        for (i, n) in net.nodes.iter().enumerate() {
            let v = pot[i] + inc[i].iter().map(|&s| act[s]).sum::<i64>();
            let row = n.row(v);
            eta[i] = row.fire;
            pot[i] = row.carry;
        }
        out.push(eta.clone());
    }
    out
}

/// Direct simulation with its cost taken from `model`.
pub fn simulate_direct(net: &NeuralNet, ticks: u64, model: &NeuralCostModel) -> DirectRun {
    let mut m = *model;
    m.lambda = ticks as f64;
    DirectRun {
        trajectory: simulate(net, ticks),
        cost: m.direct_cost(),
    }
}

/// Complexities and emulator constants entering the cost formulas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeuralCostModel {
    pub i_node: f64,
    pub i_syn: f64,
    pub i_b: f64,
    pub i_a: f64,
    pub lambda: f64,
    /// Nodes updated per tick.
    pub n: f64,
    /// Size of the origin population addressed by each synapse.
    pub origins: f64,
    pub k: f64,
    pub n_max: f64,
    pub k_max: f64,
    pub alpha_b: f64,
    pub alpha_a: f64,
    pub alpha_syn: f64,
    pub eps_b: f64,
    pub eps_a: f64,
    pub eps_syn: f64,
    pub beta: f64,
}

impl NeuralCostModel {
    fn log_origins(&self) -> f64 {
        if self.origins > 0.0 {
            self.origins.log2()
        } else {
            0.0
        }
    }

    /// `ΛN(I_node + k(I_syn + log2 N))`
    pub fn direct_cost(&self) -> f64 {
        self.lambda * self.n * (self.i_node + self.k * (self.i_syn + self.log_origins()))
    }

    /// Bound with the fast accumulator, as a sum of its table and overhead parts.
    pub fn bound(&self) -> f64 {
        let per_node =
            self.i_b + self.eps_b + self.k * (self.i_syn + self.log_origins() + self.i_a + self.eps_syn + self.eps_a);
        6.0 * self.lambda * self.n * per_node + self.beta + self.overhead(6.0)
    }

    /// Same bound written as `6C + ...` with `C` the direct cost.
    pub fn bound_from_direct(&self) -> f64 {
        6.0 * self.direct_cost()
            + 6.0 * self.lambda * self.n * (self.eps_b + self.k * (self.eps_a + self.eps_syn))
            + self.overhead(6.0)
            + self.beta
    }

    /// Plain-mode analog with `γ = k_max + 5` steps per tick and no accumulator.
    pub fn plain_bound(&self) -> f64 {
        let gamma = self.k_max + 5.0;
        let per_node = self.i_b + self.eps_b + self.k * (self.i_syn + self.log_origins() + self.eps_syn);
        gamma * self.lambda * self.n * per_node + self.beta + self.overhead(gamma)
    }

    fn overhead(&self, gamma: f64) -> f64 {
        gamma * self.lambda * self.n_max * (self.alpha_b + self.k_max * (self.alpha_a + self.alpha_syn))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralOptions {
    pub n_max: usize,
    pub k_max: usize,
    pub accumulator: bool,
}

const S_READ: StateId = 0;
const S_JUMP: StateId = 1;
const S_EMIT: StateId = 2;

/// Generic synapse machine: read, jump, emit, then wait out the tick.
#[derive(Debug)]
struct SynapseRule {
    waits: u32,
    codes: u32,
    max_skip: i64,
}

impl SynapseRule {
    fn offset(&self, x: Symbol) -> i64 {
        let v = unzigzag(x as u64);
        if v.abs() <= self.max_skip {
            v
        } else {
            0
        }
    }
}

impl ActionRule for SynapseRule {
    fn action(&self, state: StateId, reads: &[Symbol]) -> Action {
        let (a, b) = (reads[0], reads[1]);
        let last = 2 + self.waits;
        let after = |s: StateId| if s >= last { S_READ } else { s + 1 };
        let (writes, moves) = match state {
            S_READ => (smallvec![a, b], smallvec![1, 1 + (a.min(1) as i64)]),
            S_JUMP => (smallvec![a, b], smallvec![0, self.offset(b)]),
            S_EMIT => (smallvec![if b < self.codes { b } else { a }, b], smallvec![-1, 0]),
            _ => (smallvec![a, b], smallvec![0, 0]),
        };
        Action {
            writes,
            moves,
            next: after(state),
        }
    }
}

/// Generic node machine: wait for the synapses, sum, fire, reset.
#[derive(Debug)]
struct NodeRule {
    k: u32,
    width: u32,
    accumulator: bool,
    max_skip: i64,
}

impl NodeRule {
    fn sum_states(&self) -> u32 {
        if self.accumulator {
            1
        } else {
            self.k
        }
    }

    fn fire_state(&self) -> StateId {
        3 + self.sum_states()
    }

    fn state_count(&self) -> u32 {
        self.fire_state() + 2
    }
}

impl ActionRule for NodeRule {
    fn action(&self, state: StateId, reads: &[Symbol]) -> Action {
        let (a, b) = (reads[0], reads[1]);
        let fire = self.fire_state();
        let next = if state + 1 >= self.state_count() { 0 } else { state + 1 };
        let (writes, moves) = if state < 3 {
            (smallvec![a, b], smallvec![0, 0])
        } else if state < fire {
            if self.accumulator {
                // Only reached without a coprocessor attached.
                (smallvec![a, b], smallvec![self.k as i64, 0])
            } else {
                let rho = twos_complement(a as u64, self.width);
                (smallvec![a, b], smallvec![1, 2 * rho])
            }
        } else if state == fire {
            (smallvec![b.min(1), b], smallvec![0, 1])
        } else {
            let off = unzigzag(b as u64);
            let off = if off.abs() <= self.max_skip { off } else { 0 };
            (smallvec![a, b], smallvec![-(self.k as i64), off])
        };
        Action { writes, moves, next }
    }
}

/// Sums the k slots under H_α in one step.
struct FastAccumulator {
    state: StateId,
    k: u32,
    width: u32,
}

impl Coprocessor for FastAccumulator {
    fn intercept(&self, config: &Configuration) -> Option<ExternalStep> {
        if config.state() != self.state {
            return None;
        }
        let ta = config.tape(0);
        let v: i64 = (0..self.k as i64)
            .map(|j| twos_complement(ta.read(ta.head() + j) as u64, self.width))
            .sum();
        let reads = config.reads();
        Some(ExternalStep {
            action: Action {
                writes: reads.clone(),
                moves: smallvec![self.k as i64, 2 * v],
                next: self.state + 1,
            },
            device_bits: 0.0,
        })
    }
}

/// Running emulation of one net.
pub struct NeuralEmulator {
    net: NeuralNet,
    opts: NeuralOptions,
    ensemble: Ensemble,
    node_spec: Arc<MachineSpec>,
    synapse_spec: Arc<MachineSpec>,
    node_tb_bits: Vec<f64>,
    synapse_tb_bits: Vec<f64>,
    ticks: u64,
}

fn symbol_names(n: u32) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn stored_bits(cells: usize, cell_bits: u32) -> f64 {
    (position_bits(cells as u64) as u64 + cells as u64 * cell_bits as u64) as f64
}

pub fn build_neural_emulator(net: &NeuralNet, opts: NeuralOptions) -> Result<NeuralEmulator, EmulatorError> {
    build_neural_emulator_with(net, opts, Execution::Sequential)
}

pub fn build_neural_emulator_with(
    net: &NeuralNet,
    opts: NeuralOptions,
    exec: Execution,
) -> Result<NeuralEmulator, EmulatorError> {
    net.validate()?;
    let width = net.accumulator_bits;
    if width > MAX_EMULATED_WIDTH {
        return Err(EmulatorError::TooLarge {
            needed: 1u64 << width,
            available: 1 << MAX_EMULATED_WIDTH,
        });
    }
    let inc = net.incoming();
    if net.nodes.len() > opts.n_max || net.max_in_degree() > opts.k_max {
        return Err(EmulatorError::Net(format!(
            "net with {} nodes and in-degree {} exceeds N_max={} k_max={}",
            net.nodes.len(),
            net.max_in_degree(),
            opts.n_max,
            opts.k_max
        )));
    }
    let k = opts.k_max as u32;
    let codes = 1u32 << width;
    let half = 1i64 << (width - 1);

    // Node machine.
    let node_rows = net.nodes.iter().map(|n| n.table.len()).max().unwrap_or(1) as i64;
    let node_skip = (2 * node_rows + 1).max(2 * half * k.max(1) as i64);
    let node_tb = zigzag(2 * node_rows + 1) as u32 + 1;
    let node_rule = NodeRule {
        k,
        width,
        accumulator: opts.accumulator,
        max_skip: node_skip,
    };
    let node_states: Vec<String> = (0..node_rule.state_count()).map(|i| format!("n{i}")).collect();
    let node_alpha = [codes, node_tb];
    let node_spec = Arc::new(MachineSpec::from_rule(
        node_states,
        symbol_names(codes.max(node_tb)),
        vec![TapeKind::Work; 2],
        node_alpha.to_vec(),
        node_skip as u32,
        0,
        &[],
        Arc::new(node_rule),
    )?);

    // Synapse machine.
    let syn_rows = net.synapses.iter().map(|s| s.table.len()).max().unwrap_or(1) as i64;
    let syn_skip = 3 * syn_rows + 2;
    let syn_tb = codes.max(zigzag(syn_skip) as u32 + 1);
    let waits = if opts.accumulator { 3 } else { k + 2 };
    let syn_states: Vec<String> = (0..3 + waits).map(|i| format!("s{i}")).collect();
    let synapse_spec = Arc::new(MachineSpec::from_rule(
        syn_states,
        symbol_names(codes.max(syn_tb)),
        vec![TapeKind::Work; 2],
        vec![codes, syn_tb],
        syn_skip as u32,
        0,
        &[],
        Arc::new(SynapseRule {
            waits,
            codes,
            max_skip: syn_skip,
        }),
    )?);

    let node_model = CostModel {
        device_bits: if opts.accumulator {
            accumulator_bits(width, k) as f64
        } else {
            0.0
        },
        ..CostModel::default()
    };
    let mut ensemble = Ensemble::new(CostModel::default()).with_execution(exec);
    let mut node_tb_bits = Vec::new();

    for i in 0..opts.n_max {
        let mut config = Configuration::new(Arc::clone(&node_spec));
        if let Some(n) = net.nodes.get(i) {
            let mut ta = vec![0; k as usize];
            ta.push(n.initial_state as Symbol);
            let zero_of = |p: i64| 2 * (p - n.v_lo);
            let mut tb = Vec::with_capacity(2 * n.table.len());
            for (r, row) in n.table.iter().enumerate() {
                tb.push(row.fire as Symbol);
                tb.push(zigzag(zero_of(row.carry) - (2 * r as i64 + 1)) as Symbol);
            }
            node_tb_bits.push(stored_bits(tb.len(), node_spec.cell_bits(1)));
            config = config.with_tape(0, &ta).with_tape(1, &tb);
            config.tape_mut(1).set_head(zero_of(n.initial_potential));
        }
        let id = ensemble.add_with_model(config, node_model)?;
        if opts.accumulator {
            ensemble.attach(id, Arc::new(FastAccumulator { state: 3, k, width }));
        }
    }

    let mut synapse_tb_bits = Vec::new();
    for i in 0..opts.n_max {
        for j in 0..opts.k_max {
            let mut config = Configuration::new(Arc::clone(&synapse_spec));
            let syn = inc.get(i).and_then(|v| v.get(j)).copied();
            if let Some(s) = syn {
                let spec = &net.synapses[s];
                let mut tb = Vec::with_capacity(3 * spec.table.len());
                for (r, row) in spec.table.iter().enumerate() {
                    let base = 3 * r as i64;
                    tb.push(twos_code(row.activation, width) as Symbol);
                    tb.push(zigzag(3 * row.next0 as i64 - (base + 1)) as Symbol);
                    tb.push(zigzag(3 * row.next1 as i64 - (base + 2)) as Symbol);
                }
                synapse_tb_bits.push(stored_bits(tb.len(), synapse_spec.cell_bits(1)));
                config = config.with_tape(0, &[0, 0]).with_tape(1, &tb);
                config.tape_mut(1).set_head(3 * spec.initial as i64);
            }
            let id = ensemble.add(config)?;
            if let Some(s) = syn {
                let origin = net.synapses[s].origin;
                ensemble.share(
                    CellRef {
                        member: origin,
                        tape: 0,
                        pos: k as i64,
                    },
                    CellRef {
                        member: id,
                        tape: 0,
                        pos: 0,
                    },
                    1,
                )?;
                ensemble.share(
                    CellRef {
                        member: i,
                        tape: 0,
                        pos: j as i64,
                    },
                    CellRef {
                        member: id,
                        tape: 0,
                        pos: 1,
                    },
                    1,
                )?;
            }
        }
    }

    Ok(NeuralEmulator {
        net: net.clone(),
        opts,
        ensemble,
        node_spec,
        synapse_spec,
        node_tb_bits,
        synapse_tb_bits,
        ticks: 0,
    })
}

impl NeuralEmulator {
    /// Lockstep steps per net tick.
    pub fn gamma(&self) -> u64 {
        if self.opts.accumulator {
            6
        } else {
            self.opts.k_max as u64 + 5
        }
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn node_machine(&self) -> &Arc<MachineSpec> {
        &self.node_spec
    }

    pub fn synapse_machine(&self) -> &Arc<MachineSpec> {
        &self.synapse_spec
    }

    pub fn spikes(&self) -> Vec<u8> {
        let k = self.opts.k_max as i64;
        (0..self.net.nodes.len())
            .map(|i| self.ensemble.config(i).tape(0).read(k) as u8)
            .collect()
    }

    /// Runs `ticks` net ticks; returns the trajectory including the start.
    pub fn run(&mut self, ticks: u64) -> Result<Trajectory, EmulatorError> {
        let mut out = vec![self.spikes()];
        for _ in 0..ticks {
            let before = self.ensemble.ticks();
            for _ in 0..self.gamma() {
                self.ensemble.tick()?;
            }
            debug_assert_eq!(self.ensemble.ticks() - before, self.gamma());
            self.ticks += 1;
            out.push(self.spikes());
        }
        Ok(out)
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Lockstep steps executed so far.
    pub fn lockstep_steps(&self) -> u64 {
        self.ensemble.ticks()
    }

    pub fn raw_cost(&self) -> f64 {
        self.ensemble.raw_cost()
    }

    pub fn attributed_cost(&self) -> f64 {
        self.ensemble.attributed_cost()
    }

    /// Constants measured from this construction, for `ticks` net ticks.
    pub fn cost_model(&self, ticks: u64) -> NeuralCostModel {
        let width = self.net.accumulator_bits;
        let i_a = if self.opts.accumulator {
            accumulator_bits(width, 1) as f64
        } else {
            0.0
        };
        let ideal_node = |rows: usize| (rows as u64 * (1 + ceil_log2(rows as u64) as u64)) as f64;
        let ideal_syn = |rows: usize| (rows as u64 * (width as u64 + 2 * ceil_log2(rows as u64) as u64)) as f64;
        let i_b = self
            .net
            .nodes
            .iter()
            .map(|n| ideal_node(n.table.len()))
            .fold(0.0, f64::max);
        let i_syn = self
            .net
            .synapses
            .iter()
            .map(|s| ideal_syn(s.table.len()))
            .fold(0.0, f64::max);
        let max_b = self.node_tb_bits.iter().copied().fold(0.0, f64::max);
        let max_syn = self.synapse_tb_bits.iter().copied().fold(0.0, f64::max);
        let k = self.net.max_in_degree() as f64;
        let node_ta = stored_bits(self.opts.k_max + 1, self.node_spec.cell_bits(0));
        let syn_ta = stored_bits(2, self.synapse_spec.cell_bits(0));
        let fixed = |spec: &MachineSpec| fsm_size_of(spec) as f64 + spec.state_bits() as f64;
        NeuralCostModel {
            i_node: i_b + k * i_a,
            i_syn,
            i_b,
            i_a,
            lambda: ticks as f64,
            n: self.net.nodes.len() as f64,
            origins: self.net.nodes.len() as f64,
            k,
            n_max: self.opts.n_max as f64,
            k_max: self.opts.k_max as f64,
            alpha_b: fixed(&self.node_spec) + node_ta,
            alpha_a: i_a,
            alpha_syn: fixed(&self.synapse_spec) + syn_ta,
            eps_b: (max_b - i_b).max(0.0),
            eps_a: 0.0,
            eps_syn: (max_syn - i_syn).max(0.0),
            beta: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralVerification {
    pub ticks: u64,
    pub gamma: u64,
    pub lockstep_steps: u64,
    pub trajectories_equal: bool,
    pub raw_cost: f64,
    pub attributed_cost: f64,
    pub bound: f64,
    pub within_bound: bool,
    pub model: NeuralCostModel,
}

/// Emulates `net` for `ticks` and checks it against the direct simulation
/// and the bound for its mode.
pub fn verify_neural(net: &NeuralNet, opts: NeuralOptions, ticks: u64) -> Result<NeuralVerification, EmulatorError> {
    let mut emu = build_neural_emulator(net, opts)?;
    let emulated = emu.run(ticks)?;
    let direct = simulate(net, ticks);
    let model = emu.cost_model(ticks);
    let bound = if opts.accumulator {
        model.bound()
    } else {
        model.plain_bound()
    };
    let raw = emu.raw_cost();
    Ok(NeuralVerification {
        ticks,
        gamma: emu.gamma(),
        lockstep_steps: emu.lockstep_steps(),
        trajectories_equal: emulated == direct,
        raw_cost: raw,
        attributed_cost: emu.attributed_cost(),
        bound,
        within_bound: raw <= bound,
        model,
    })
}

/// [`random_net`] driven by a ChaCha8 stream seeded with `seed`.
pub fn random_net_from_seed(seed: u64, max_nodes: usize, max_k: usize, width: u32) -> NeuralNet {
    use rand::SeedableRng;
    random_net(
        &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        max_nodes,
        max_k,
        width,
    )
}

/// Random net with up to `max_nodes` nodes and in-degree up to `max_k`.
pub fn random_net<R: Rng>(rng: &mut R, max_nodes: usize, max_k: usize, width: u32) -> NeuralNet {
    let n = rng.gen_range(1..=max_nodes);
    let mut synapses = Vec::new();
    for target in 0..n {
        for _ in 0..rng.gen_range(0..=max_k) {
            let rows = rng.gen_range(1..=4);
            let table = (0..rows)
                .map(|_| SynapseRow {
                    activation: rng.gen_range(-3..=3),
                    next0: rng.gen_range(0..rows),
                    next1: rng.gen_range(0..rows),
                })
                .collect();
            synapses.push(SynapseSpec {
                origin: rng.gen_range(0..n),
                target,
                table,
                initial: rng.gen_range(0..rows),
            });
        }
    }
    let mut net = NeuralNet::new(Vec::new(), synapses, width);
    let mut inc = vec![Vec::new(); n];
    for (i, s) in net.synapses.iter().enumerate() {
        inc[s.target].push(i);
    }
    for node in &inc {
        let (lo, hi) = node.iter().fold((0, 0), |(lo, hi), &s| {
            let (a, b) = net.synapses[s].activation_range();
            (lo + a, hi + b)
        });
        let (c_lo, c_hi) = (-rng.gen_range(0..=2i64), rng.gen_range(0..=2i64));
        let v_lo = c_lo + lo.min(0);
        let v_hi = c_hi + hi.max(0);
        let threshold = rng.gen_range(-1..=3);
        let table = (v_lo..=v_hi)
            .map(|v| {
                let fire = (v >= threshold) as u8;
                let carry = if fire == 1 { 0 } else { (v / 2).clamp(c_lo, c_hi) };
                NodeRow { fire, carry }
            })
            .collect();
        net.nodes.push(NodeSpec {
            table,
            v_lo,
            initial_potential: rng.gen_range(c_lo..=c_hi),
            initial_state: rng.gen_range(0..=1),
        });
    }
    net
}
