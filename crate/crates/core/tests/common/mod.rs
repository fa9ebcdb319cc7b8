use std::sync::Arc;

use workcost::machine::StepEvent;
use workcost::{Configuration, CostMeter, MachineSpec, Status, Symbol};

/// Recursive enumeration that steps each candidate by hand.
pub fn brute_force(
    spec: &Arc<MachineSpec>,
    budget: f64,
    max_len: usize,
    accept: &dyn Fn(&Configuration) -> bool,
) -> Option<(f64, Vec<Symbol>)> {
    let meter = CostMeter::formula(spec);
    let n = spec.symbol_count();
    let cell_bits = spec.cell_bits(0) as f64;
    let mut best: Option<(f64, Vec<Symbol>)> = None;

    fn visit(prefix: &mut Vec<Symbol>, depth: usize, n: u32, f: &mut dyn FnMut(&[Symbol])) {
        if prefix.len() == depth {
            f(prefix);
            return;
        }
        for s in 0..n {
            prefix.push(s);
            visit(prefix, depth, n, f);
            prefix.pop();
        }
    }

    for len in 0..=max_len {
        if len > 0 && len as f64 * cell_bits >= budget {
            break;
        }
        visit(&mut Vec::new(), len, n, &mut |program| {
            let mut config = Configuration::new(Arc::clone(spec)).with_tape(0, program);
            let mut total = 0.0;
            loop {
                match config.step().unwrap() {
                    StepEvent::Executed(_) => {
                        total += meter.information(&config).total();
                        if total > budget * (1.0 + 1e-12) {
                            return;
                        }
                    }
                    _ => break,
                }
            }
            if config.status() != Status::Halted || !accept(&config) {
                return;
            }
            let better = match &best {
                None => true,
                Some((c, p)) => total < *c || (total == *c && (program.len(), program) < (p.len(), p.as_slice())),
            };
            if better {
                best = Some((total, program.to_vec()));
            }
        });
    }
    best
}
