//! Seeded generators of small machines and inputs for tests and benchmarks.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::machine::{Configuration, MachineBuilder, MachineError, MachineSpec, Status, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MachineParams {
    pub max_states: u32,
    pub max_symbols: u32,
    pub max_skip: u32,
}

impl Default for MachineParams {
    fn default() -> Self {
        MachineParams {
            max_states: 6,
            max_symbols: 4,
            max_skip: 2,
        }
    }
}

/// A random single-tape machine. State `M-1` halts; the others have a full
/// table with uniformly chosen writes, moves and successors.
pub fn random_machine<R: Rng>(rng: &mut R, p: MachineParams) -> MachineSpec {
    let m = rng.gen_range(2..=p.max_states.max(2));
    let n = rng.gen_range(2..=p.max_symbols.max(2));
    let d = rng.gen_range(1..=p.max_skip.max(1)) as i64;
    let mut b = MachineBuilder::numbered(m, n).max_skip(d as u32).halt(m - 1);
    for q in 0..m - 1 {
        for s in 0..n {
            let w = rng.gen_range(0..n);
            let mv = rng.gen_range(-d..=d);
            let next = rng.gen_range(0..m);
            b.push_entry(q, &[s], &[w], &[mv], next);
        }
    }
    b.build().expect("generated table is complete")
}

pub fn random_input<R: Rng>(rng: &mut R, symbols: u32, max_len: usize) -> Vec<Symbol> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..symbols)).collect()
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub machine: Arc<MachineSpec>,
    pub input: Vec<Symbol>,
    /// Steps of the direct run.
    pub steps: u64,
}

/// Draws machines and inputs until one halts within `step_cap` steps.
pub fn random_halting<R: Rng>(rng: &mut R, p: MachineParams, max_input: usize, step_cap: u64) -> Sample {
    loop {
        let machine = Arc::new(random_machine(rng, p));
        let input = random_input(rng, machine.symbol_count(), max_input);
        let mut config = Configuration::new(Arc::clone(&machine)).with_tape(0, &input);
        if let Ok(steps) = config.run_unmetered(step_cap) {
            if config.status() == Status::Halted {
                return Sample { machine, input, steps };
            }
        }
    }
}

/// `count` halting samples from `seed`.
pub fn halting_corpus(seed: u64, count: usize, p: MachineParams, max_input: usize, step_cap: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_halting(&mut rng, p, max_input, step_cap))
        .collect()
}

/// The same machine with every move multiplied by `factor`.
pub fn stretch(spec: &MachineSpec, factor: u32) -> Result<MachineSpec, MachineError> {
    if factor == 0 {
        return Err(MachineError::Invalid("stretch factor must be positive".into()));
    }
    let mut b = MachineBuilder::new(spec.state_names(), spec.symbol_names())
        .tapes(spec.tape_kinds())
        .tape_symbols(spec.tape_alphabets())
        .max_skip(spec.max_skip() * factor)
        .initial(spec.initial_state());
    for h in spec.halt_states() {
        b = b.halt(h);
    }
    for (state, reads, action) in spec.executable_rows() {
        let moves: Vec<i64> = action.moves.iter().map(|m| m * factor as i64).collect();
        b.push_entry(state, &reads, &action.writes, &moves, action.next);
    }
    b.build()
}
