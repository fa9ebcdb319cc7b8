//! Rewriting skip moves into unit moves.
//!
//! Every skip of `k` cells becomes one unit move followed by `|k|-1` steps
//! through auxiliary move states that rewrite what they read and carry the
//! remaining offset. Tape contents are unaffected; step count grows by at
//! most a factor of `max_skip`.

use std::collections::HashMap;

use smallvec::SmallVec;

use super::spec::{MachineBuilder, MachineSpec, StateId};
use super::MachineError;

type Offsets = SmallVec<[i64; 4]>;

fn unit(offsets: &[i64]) -> Offsets {
    offsets.iter().map(|o| o.signum()).collect()
}

fn rest(offsets: &[i64]) -> Offsets {
    offsets.iter().map(|o| o - o.signum()).collect()
}

/// Unit-move machine equivalent to `spec`, with the original states first.
pub fn expand(spec: &MachineSpec) -> Result<MachineSpec, MachineError> {
    let m = spec.state_count();
    let mut names: Vec<String> = spec.state_names().to_vec();
    let mut index: HashMap<(StateId, Offsets), StateId> = HashMap::new();
    let mut pending: Vec<(StateId, StateId, Offsets)> = Vec::new();
    let mut entries: Vec<(StateId, Vec<u32>, Vec<u32>, Vec<i64>, StateId)> = Vec::new();

    let mut target = |next: StateId, remaining: Offsets, names: &mut Vec<String>, pending: &mut Vec<_>| {
        if remaining.iter().all(|&o| o == 0) {
            return next;
        }
        if let Some(&id) = index.get(&(next, remaining.clone())) {
            return id;
        }
        let id = names.len() as StateId;
        let label: Vec<String> = remaining.iter().map(|o| o.to_string()).collect();
        names.push(format!("{}~{}", spec.state_name(next), label.join(",")));
        index.insert((next, remaining.clone()), id);
        pending.push((id, next, remaining));
        id
    };

    for (state, reads, action) in spec.executable_rows() {
        let next = target(action.next, rest(&action.moves), &mut names, &mut pending);
        entries.push((
            state,
            reads.to_vec(),
            action.writes.to_vec(),
            unit(&action.moves).to_vec(),
            next,
        ));
    }

    let reads_per_state = spec.reads_per_state();
    while let Some((id, next, remaining)) = pending.pop() {
        let after = target(next, rest(&remaining), &mut names, &mut pending);
        for r in 0..reads_per_state {
            let (_, reads) = spec.decode_row(r);
            entries.push((id, reads.to_vec(), reads.to_vec(), unit(&remaining).to_vec(), after));
        }
    }

    let symbols = spec.symbol_names().to_vec();
    let mut builder = MachineBuilder::new(&names, &symbols)
        .tapes(spec.tape_kinds())
        .tape_symbols(spec.tape_alphabets())
        .max_skip(spec.max_skip().min(1))
        .initial(spec.initial_state());
    for h in spec.halt_states() {
        builder = builder.halt(h);
    }
    debug_assert!(names.len() as u32 >= m);
    for (state, reads, writes, moves, next) in entries {
        builder.push_entry(state, &reads, &writes, &moves, next);
    }
    builder.build()
}
