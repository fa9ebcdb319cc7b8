use serde::{Deserialize, Serialize};

use super::spec::{MachineBuilder, MachineSpec, StateId, Symbol, TapeKind};
use super::MachineError;
use crate::FORMAT_VERSION;

fn default_version() -> u32 {
    FORMAT_VERSION
}

/// JSON form of a machine. States and symbols are referenced by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineDoc {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub states: Vec<String>,
    #[serde(default)]
    pub halt_states: Vec<String>,
    pub symbols: Vec<String>,
    pub tapes: usize,
    pub max_skip: u32,
    pub initial_state: String,
    /// Defaults to all work tapes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tape_kinds: Option<Vec<TapeKind>>,
    /// Per-tape alphabet sizes; defaults to the full symbol list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tape_symbols: Option<Vec<u32>>,
    pub table: Vec<EntryDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub state: String,
    pub read: Vec<String>,
    pub write: Vec<String>,
    #[serde(rename = "move")]
    pub moves: Vec<i64>,
    pub next: String,
}

impl MachineDoc {
    pub fn from_json(text: &str) -> Result<Self, MachineError> {
        serde_json::from_str(text).map_err(|e| MachineError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine documents always serialize")
    }

    pub fn build(&self) -> Result<MachineSpec, MachineError> {
        if self.format_version != FORMAT_VERSION {
            return Err(MachineError::Malformed(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let state = |name: &str| -> Result<StateId, MachineError> {
            self.states
                .iter()
                .position(|s| s == name)
                .map(|i| i as StateId)
                .ok_or_else(|| MachineError::UnknownState(name.to_owned()))
        };
        let symbol = |name: &String| -> Result<Symbol, MachineError> {
            self.symbols
                .iter()
                .position(|s| s == name)
                .map(|i| i as Symbol)
                .ok_or_else(|| MachineError::UnknownSymbol(name.clone()))
        };
        let kinds = match &self.tape_kinds {
            Some(k) if k.len() != self.tapes => {
                return Err(MachineError::Arity {
                    expected: self.tapes,
                    found: k.len(),
                })
            }
            Some(k) => k.clone(),
            None => vec![TapeKind::Work; self.tapes],
        };
        let mut builder = MachineBuilder::new(&self.states, &self.symbols)
            .tapes(&kinds)
            .max_skip(self.max_skip)
            .initial(state(&self.initial_state)?);
        if let Some(sizes) = &self.tape_symbols {
            builder = builder.tape_symbols(sizes);
        }
        for h in &self.halt_states {
            builder = builder.halt(state(h)?);
        }
        for e in &self.table {
            let reads = e.read.iter().map(symbol).collect::<Result<Vec<_>, _>>()?;
            let writes = e.write.iter().map(symbol).collect::<Result<Vec<_>, _>>()?;
            builder.push_entry(state(&e.state)?, &reads, &writes, &e.moves, state(&e.next)?);
        }
        builder.build()
    }

    /// Document listing every declared row of `spec`.
    pub fn from_spec(spec: &MachineSpec) -> Self {
        let sym = |s: Symbol| spec.symbol_name(s).to_owned();
        let mut table = Vec::new();
        for row in 0..spec.row_count() {
            let (state, reads) = spec.decode_row(row);
            let declared = if spec.is_rule_backed() {
                !spec.is_halting(state)
            } else {
                spec.is_declared(state, &reads)
            };
            if !declared {
                continue;
            }
            let a = spec.action(state, &reads);
            table.push(EntryDoc {
                state: spec.state_name(state).to_owned(),
                read: reads.iter().map(|&s| sym(s)).collect(),
                write: a.writes.iter().map(|&s| sym(s)).collect(),
                moves: a.moves.to_vec(),
                next: spec.state_name(a.next).to_owned(),
            });
        }
        let all_work = spec.tape_kinds().iter().all(|k| *k == TapeKind::Work);
        let full = spec.tape_alphabets().iter().all(|&n| n == spec.symbol_count());
        MachineDoc {
            format_version: FORMAT_VERSION,
            states: spec.state_names().to_vec(),
            halt_states: spec.halt_states().map(|h| spec.state_name(h).to_owned()).collect(),
            symbols: spec.symbol_names().to_vec(),
            tapes: spec.tape_count(),
            max_skip: spec.max_skip(),
            initial_state: spec.state_name(spec.initial_state()).to_owned(),
            tape_kinds: (!all_work).then(|| spec.tape_kinds().to_vec()),
            tape_symbols: (!full).then(|| spec.tape_alphabets().to_vec()),
            table,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = r#"{"states":["q"],"symbols":["_"],"tapes":1,"max_skip":0,
        "initial_state":"q","table":[{"state":"q","read":["_"],"write":["_"],"move":[0],"next":"q"}]}"#;

    #[test]
    fn degenerate_machine() {
        let spec = MachineDoc::from_json(IDENTITY).unwrap().build().unwrap();
        assert_eq!(spec.state_count(), 1);
        assert_eq!(spec.symbol_count(), 1);
        assert_eq!(spec.state_bits(), 0);
        assert_eq!(spec.symbol_bits(), 0);
    }

    #[test]
    fn partial_table_rejected() {
        let text = r#"{"states":["a","b"],"halt_states":["b"],"symbols":["0","1"],"tapes":1,
            "max_skip":1,"initial_state":"a",
            "table":[{"state":"a","read":["0"],"write":["1"],"move":[1],"next":"b"}]}"#;
        let err = MachineDoc::from_json(text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("partial table"), "{err}");
    }

    #[test]
    fn move_out_of_range_rejected() {
        let text = IDENTITY.replace("\"move\":[0]", "\"move\":[2]");
        let err = MachineDoc::from_json(&text).unwrap().build().unwrap_err();
        assert!(matches!(err, MachineError::MoveOutOfRange { .. }));
    }

    #[test]
    fn malformed_rejected() {
        assert!(matches!(
            MachineDoc::from_json("{\"states\": 3}"),
            Err(MachineError::Malformed(_))
        ));
    }

    #[test]
    fn round_trip() {
        let doc = MachineDoc::from_json(IDENTITY).unwrap();
        let spec = doc.build().unwrap();
        let back = MachineDoc::from_spec(&spec);
        assert_eq!(back, doc);
    }
}
