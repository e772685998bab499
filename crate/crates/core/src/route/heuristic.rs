//! Lookahead SWAP-insertion router in the SABRE family.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Emitter, HeuristicConfig, PhaseTimings, RouteError, TranspileResult};
use crate::circuit::Circuit;
use crate::layout::Layout;
use crate::topology::CouplingGraph;

/// Routes `circuit` from `initial`, keeping the trial with fewest SWAPs.
pub fn heuristic_route(
    circuit: &Circuit,
    initial: &Layout,
    graph: &CouplingGraph,
    cfg: &HeuristicConfig,
) -> Result<TranspileResult, RouteError> {
    let clock = Instant::now();
    if initial.num_logical() != circuit.num_qubits {
        return Err(RouteError::Layout(crate::layout::LayoutError::TooManyLogical {
            logical: circuit.num_qubits,
            physical: initial.num_logical(),
        }));
    }
    let mut best: Option<Emitter> = None;
    for trial in 0..cfg.trials.max(1) {
        let mut rng = (trial > 0).then(|| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(trial as u64);
            r
        });
        let routed = route_once(circuit, initial, graph, cfg, rng.as_mut());
        if best.as_ref().is_none_or(|b| routed.swaps < b.swaps) {
            best = Some(routed);
        }
    }
    let best = best.expect("at least one trial");
    let timings = PhaseTimings::default();
    let mut result = best.finish(circuit, initial.clone(), timings, clock);
    result.timings.routing_solve = result.timings.total;
    Ok(result)
}

struct Dag {
    succs: Vec<Vec<usize>>,
    preds: Vec<usize>,
}

impl Dag {
    fn new(circuit: &Circuit) -> Self {
        let n = circuit.gates.len();
        let mut succs = vec![Vec::new(); n];
        let mut preds = vec![0; n];
        let mut last: Vec<Option<usize>> = vec![None; circuit.num_qubits];
        for (k, gate) in circuit.gates.iter().enumerate() {
            let mut before: Vec<usize> = gate.qubits().filter_map(|q| last[q]).collect();
            before.dedup();
            for j in before {
                succs[j].push(k);
                preds[k] += 1;
            }
            for q in gate.qubits() {
                last[q] = Some(k);
            }
        }
        Dag { succs, preds }
    }
}

fn route_once(
    circuit: &Circuit,
    initial: &Layout,
    graph: &CouplingGraph,
    cfg: &HeuristicConfig,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Emitter {
    let gates = &circuit.gates;
    let dag = Dag::new(circuit);
    let mut pending = dag.preds.clone();
    let mut done = vec![false; gates.len()];
    let mut front: Vec<usize> = (0..gates.len()).filter(|&k| pending[k] == 0).collect();
    let mut out = Emitter::new(circuit, initial.clone());
    let mut scan_from = 0;
    let mut last_swap: Option<(usize, usize)> = None;
    let mut since_progress = 0;
    let release_after = (3 * graph.diameter() as usize).max(10);

    loop {
        // Run everything runnable, repeatedly, in gate order.
        let mut progressed = false;
        loop {
            let runnable: Vec<usize> = front
                .iter()
                .copied()
                .filter(|&k| match gates[k].pair() {
                    Some((a, b)) => graph.is_edge(out.layout().physical(a), out.layout().physical(b)),
                    None => true,
                })
                .collect();
            if runnable.is_empty() {
                break;
            }
            progressed = true;
            front.retain(|k| !runnable.contains(k));
            for k in runnable {
                out.gate(&gates[k]);
                done[k] = true;
                for &s in &dag.succs[k] {
                    pending[s] -= 1;
                    if pending[s] == 0 {
                        front.push(s);
                    }
                }
            }
            front.sort_unstable();
        }
        if front.is_empty() {
            break;
        }
        if progressed {
            since_progress = 0;
            last_swap = None;
        }

        if since_progress >= release_after {
            // Stuck: walk the oldest front gate together.
            let (a, b) = gates[front[0]].pair().expect("blocked gates are two-qubit");
            let path = graph.shortest_path(out.layout().physical(a), out.layout().physical(b));
            for w in path.windows(2).take(path.len() - 2) {
                out.swap(w[0], w[1]);
            }
            since_progress = 0;
            last_swap = None;
            continue;
        }

        while scan_from < gates.len() && done[scan_from] {
            scan_from += 1;
        }
        let extended: Vec<(usize, usize)> = (scan_from..gates.len())
            .filter(|&k| !done[k] && !front.contains(&k))
            .filter_map(|k| gates[k].pair())
            .take(cfg.lookahead)
            .collect();
        let front_pairs: Vec<(usize, usize)> = front.iter().filter_map(|&k| gates[k].pair()).collect();

        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for &(a, b) in &front_pairs {
            for p in [out.layout().physical(a), out.layout().physical(b)] {
                for &q in graph.neighbors(p) {
                    let e = graph.edge_index(p, q).expect("neighbour edge");
                    candidates.push((e, p.min(q), p.max(q)));
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();

        let layout = out.layout();
        let front_total = |swap: Option<(usize, usize)>| -> f64 {
            front_pairs.iter().map(|&(a, b)| swapped_dist(layout, graph, swap, a, b)).sum()
        };
        let now = front_total(None);
        let mut scored: Vec<(f64, usize, usize)> = Vec::with_capacity(candidates.len());
        for &(_, p, q) in &candidates {
            let s = Some((p, q));
            let f = front_total(s);
            if last_swap == s && f >= now && candidates.len() > 1 {
                continue;
            }
            let mut h = f / front_pairs.len() as f64;
            if !extended.is_empty() {
                let e: f64 = extended.iter().map(|&(a, b)| swapped_dist(layout, graph, s, a, b)).sum();
                h += cfg.lookahead_weight * e / extended.len() as f64;
            }
            scored.push((h, p, q));
        }
        let min = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let ties: Vec<(usize, usize)> =
            scored.iter().filter(|s| s.0 <= min + 1e-9).map(|s| (s.1, s.2)).collect();
        let (p, q) = match rng.as_deref_mut() {
            Some(r) => *ties.choose(r).expect("non-empty"),
            None => ties[0],
        };
        out.swap(p, q);
        last_swap = Some((p, q));
        since_progress += 1;
    }
    out
}

fn swapped_dist(layout: &Layout, graph: &CouplingGraph, swap: Option<(usize, usize)>, a: usize, b: usize) -> f64 {
    let moved = |x: usize| {
        let p = layout.physical(x);
        match swap {
            Some((s, t)) if p == s => t,
            Some((s, t)) if p == t => s,
            _ => p,
        }
    };
    graph.dist(moved(a), moved(b)) as f64
}
