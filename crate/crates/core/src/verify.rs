//! Checks that a routed circuit is the original circuit plus SWAPs.

use std::collections::VecDeque;
use std::fmt;

use crate::circuit::{Circuit, Gate};
use crate::route::TranspileResult;
use crate::topology::CouplingGraph;

/// First point where the routed circuit departs from the original.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// Index into the routed circuit, or `None` when the mismatch is found at the end.
    pub routed_index: Option<usize>,
    /// The routed gate pulled back to logical qubits, where that is possible.
    pub routed_gate: Option<Gate>,
    /// The original gate the routed gate was expected to match.
    pub expected: Option<Gate>,
    pub reason: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.routed_index {
            Some(k) => write!(f, "routed gate {k}")?,
            None => write!(f, "end of routed circuit")?,
        }
        write!(f, ": {}", self.reason)?;
        if let Some(g) = &self.routed_gate {
            write!(f, "; routed [{g}]")?;
        }
        if let Some(g) = &self.expected {
            write!(f, "; expected [{g}]")?;
        }
        Ok(())
    }
}

/// Replays the routed circuit against the original.
///
/// Walking the routed gates with the layout evolving under every inserted
/// SWAP, each non-SWAP gate must pull back to the next pending original gate
/// on all of its logical qubits. Original gates on disjoint qubits may
/// therefore appear in any order consistent with their dependencies. At the
/// end every original gate must be consumed, the tracked layout must equal
/// the reported final layout, and the inserted SWAPs must match `swap_count`.
pub fn verify_equivalence(original: &Circuit, result: &TranspileResult) -> Result<(), Mismatch> {
    let n = original.num_qubits;
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); n];
    for (k, gate) in original.gates.iter().enumerate() {
        for q in gate.qubits() {
            queues[q].push_back(k);
        }
    }
    let mismatch = |index: Option<usize>, routed: Option<Gate>, expected: Option<Gate>, reason: String| Mismatch {
        routed_index: index,
        routed_gate: routed,
        expected,
        reason,
    };
    if result.initial_layout.num_logical() != n {
        return Err(mismatch(None, None, None, "initial layout has the wrong number of logical qubits".into()));
    }

    let mut layout = result.initial_layout.clone();
    let mut consumed = 0;
    let mut inserted = 0;
    for (idx, gate) in result.circuit.gates.iter().enumerate() {
        let logical: Option<Vec<usize>> = gate.qubits().map(|p| layout.logical_at(p)).collect();
        let pulled = logical.as_ref().map(|_| gate.map_qubits(|p| layout.logical_at(p).expect("checked")));
        let next = logical.as_ref().and_then(|qs| {
            let k = *queues[qs[0]].front()?;
            qs.iter().all(|&q| queues[q].front() == Some(&k)).then_some(k)
        });

        if let Gate::Swap { a, b } = *gate {
            let is_original = matches!((next, &pulled), (Some(k), Some(g)) if original.gates[k] == *g);
            if !is_original {
                layout.swap_physical(a, b);
                inserted += 1;
                continue;
            }
        }

        let Some(pulled) = pulled else {
            return Err(mismatch(Some(idx), None, None, format!("[{gate}] acts on an unoccupied physical qubit")));
        };
        match next {
            Some(k) if original.gates[k] == pulled => {
                for q in pulled.qubits() {
                    queues[q].pop_front();
                }
                consumed += 1;
            }
            _ => {
                let q0 = pulled.operands().0;
                let expected = queues[q0].front().map(|&k| original.gates[k].clone());
                return Err(mismatch(Some(idx), Some(pulled), expected, "out of order or altered gate".into()));
            }
        }
    }

    if consumed != original.gates.len() {
        let expected = queues.iter().filter_map(|q| q.front()).min().map(|&k| original.gates[k].clone());
        return Err(mismatch(
            None,
            None,
            expected,
            format!("{} of {} original gates never executed", original.gates.len() - consumed, original.gates.len()),
        ));
    }
    if layout != result.final_layout {
        return Err(mismatch(None, None, None, "tracked layout differs from the reported final layout".into()));
    }
    if inserted != result.swap_count {
        return Err(mismatch(
            None,
            None,
            None,
            format!("found {inserted} inserted SWAPs but {} reported", result.swap_count),
        ));
    }
    Ok(())
}

/// Every two-qubit gate of the routed circuit sits on a coupler.
pub fn check_conformance(circuit: &Circuit, graph: &CouplingGraph) -> Result<(), String> {
    for (k, gate) in circuit.gates.iter().enumerate() {
        for q in gate.qubits() {
            if q >= graph.num_physical() {
                return Err(format!("gate {k} [{gate}] uses qubit {q} outside the device"));
            }
        }
        if let Some((p, q)) = gate.pair() {
            if !graph.is_edge(p, q) {
                return Err(format!("gate {k} [{gate}] acts on uncoupled qubits {p} and {q}"));
            }
        }
    }
    Ok(())
}
