//! Turning a routing assignment into physical SWAPs.

use thiserror::Error;

use super::SwapStep;
use crate::layout::{Layout, LayoutError};
use crate::qubo::{routing_slots, VariableCodec};
use crate::topology::CouplingGraph;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("step {step}: logical qubit {logical} occupies {count} physical qubits")]
    NotOneHot { step: usize, logical: usize, count: usize },
    #[error("step {step}: physical qubit {physical} holds logical {first} and {second}")]
    Collision { step: usize, physical: usize, first: usize, second: usize },
    #[error("step {step}: logical qubit {logical} jumps from {from} to non-adjacent {to}")]
    NonAdjacentMove { step: usize, logical: usize, from: usize, to: usize },
    #[error("assignment does not come from a routing problem")]
    WrongCodec,
}

/// Layout at each step `1..=T` of a routing assignment, checked for one-hot
/// rows and free collisions.
pub fn decode_step_layouts(codec: &VariableCodec, bits: &[bool]) -> Result<Vec<Layout>, DecodeError> {
    let VariableCodec::Routing { num_physical, .. } = *codec else {
        return Err(DecodeError::WrongCodec);
    };
    routing_slots(codec, bits)
        .into_iter()
        .enumerate()
        .map(|(t, rows)| {
            let step = t + 1;
            let mut placement = Vec::with_capacity(rows.len());
            for (logical, slots) in rows.iter().enumerate() {
                if slots.len() != 1 {
                    return Err(DecodeError::NotOneHot { step, logical, count: slots.len() });
                }
                placement.push(slots[0]);
            }
            Layout::new(placement, num_physical).map_err(|e| match e {
                LayoutError::Collision { physical, first, second } => {
                    DecodeError::Collision { step, physical, first, second }
                }
                _ => unreachable!("slots come from the codec range"),
            })
        })
        .collect()
}

/// SWAPs taking `from` to `to`, where every qubit moves at most one edge.
///
/// Movements form chains ending on a free physical qubit and closed cycles.
/// A chain of `k` moves costs `k` swaps, a cycle of length `k` costs `k - 1`,
/// and every swap sits on an edge some qubit moved along.
pub(crate) fn movement_swaps(
    from: &Layout,
    to: &Layout,
    graph: &CouplingGraph,
    step: usize,
) -> Result<Vec<(usize, usize)>, DecodeError> {
    let n = graph.num_physical();
    let mut next = vec![None; n];
    let mut has_pred = vec![false; n];
    for logical in 0..from.num_logical() {
        let (p, q) = (from.physical(logical), to.physical(logical));
        if p == q {
            continue;
        }
        if !graph.is_edge(p, q) {
            return Err(DecodeError::NonAdjacentMove { step, logical, from: p, to: q });
        }
        next[p] = Some(q);
        has_pred[q] = true;
    }

    let mut swaps = Vec::new();
    let mut visited = vec![false; n];
    let mut walk = Vec::new();
    // Chains first: they start where nothing moves in.
    for start in 0..n {
        if next[start].is_none() || has_pred[start] {
            continue;
        }
        walk.clear();
        let mut here = start;
        walk.push(here);
        while let Some(q) = next[here] {
            visited[here] = true;
            walk.push(q);
            here = q;
        }
        for w in walk.windows(2).rev() {
            swaps.push((w[0], w[1]));
        }
    }
    for start in 0..n {
        if next[start].is_none() || visited[start] {
            continue;
        }
        walk.clear();
        let mut here = start;
        while !visited[here] {
            visited[here] = true;
            walk.push(here);
            here = next[here].expect("cycle members all move");
        }
        for w in walk.windows(2).rev() {
            swaps.push((w[0], w[1]));
        }
    }
    Ok(swaps)
}

/// Ordered SWAPs realising every step of a routing assignment.
pub fn decode_movements(
    prior: &Layout,
    bits: &[bool],
    codec: &VariableCodec,
    graph: &CouplingGraph,
) -> Result<SwapStep, DecodeError> {
    let layouts = decode_step_layouts(codec, bits)?;
    let mut swaps = Vec::new();
    let mut current = prior.clone();
    for (t, target) in layouts.iter().enumerate() {
        let step_swaps = movement_swaps(&current, target, graph, t + 1)?;
        for &(p, q) in &step_swaps {
            current.swap_physical(p, q);
        }
        debug_assert_eq!(current.as_slice(), target.as_slice());
        swaps.extend(step_swaps);
    }
    Ok(SwapStep { swaps })
}
