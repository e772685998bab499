//! QUBO-driven placement and routing.

use std::time::Instant;

use log::{debug, warn};

use super::decode::{decode_movements, decode_step_layouts, DecodeError};
use super::{Emitter, PhaseTimings, RouteError, RouteScope, SwapStep, TranspileConfig, TranspileResult};
use crate::anneal::Solver;
use crate::circuit::{first_interaction_weights_with_decay, Circuit, Gate};
use crate::layout::Layout;
use crate::qubo::{
    build_mapping_qubo_from_pairs, build_routing_qubo, default_mapping_lambda, default_routing_lambda,
    VariableCodec, WeightedPair,
};
use crate::topology::CouplingGraph;

/// Outcome of splitting a residual circuit at the current layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Gates that can run now, in circuit order.
    pub executable: Vec<Gate>,
    /// Everything else, in circuit order.
    pub residual: Vec<Gate>,
    /// Interactions the next routing step should bring together.
    pub blocked: Vec<WeightedPair>,
}

/// Splits `gates` into those executable under `layout` and the rest.
///
/// A two-qubit gate on non-adjacent qubits is blocked, and so is every later
/// gate touching a qubit of a blocked gate.
pub fn classify_executable(
    gates: &[Gate],
    layout: &Layout,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
) -> Classification {
    let n = layout.num_logical();
    let mut blocked_qubit = vec![false; n];
    let mut executable = Vec::new();
    let mut residual = Vec::new();
    let mut front = Vec::new();
    for gate in gates {
        let waits = gate.qubits().any(|q| blocked_qubit[q]);
        let far = match gate.pair() {
            Some((a, b)) => !graph.is_edge(layout.physical(a), layout.physical(b)),
            None => false,
        };
        if waits || far {
            if far && !waits {
                front.push(gate.clone());
            }
            for q in gate.qubits() {
                blocked_qubit[q] = true;
            }
            residual.push(gate.clone());
        } else {
            executable.push(gate.clone());
        }
    }

    let (w_max, decay) = (cfg.penalty.w_max, cfg.penalty.decay);
    let weights = match cfg.scope {
        RouteScope::AllResidual => first_interaction_weights_with_decay(&residual, n, w_max, decay),
        RouteScope::Window(k) => {
            let mut taken = 0;
            let end = residual
                .iter()
                .position(|g| {
                    if g.is_two_qubit() {
                        taken += 1;
                    }
                    taken > k.max(1)
                })
                .unwrap_or(residual.len());
            first_interaction_weights_with_decay(&residual[..end], n, w_max, decay)
        }
        RouteScope::FrontLayer => first_interaction_weights_with_decay(&front, n, w_max, decay),
    };
    Classification { executable, residual, blocked: WeightedPair::from_weights(&weights) }
}

fn weighted_distance(pairs: &[WeightedPair], layout: &Layout, graph: &CouplingGraph) -> f64 {
    pairs
        .iter()
        .map(|p| p.weight * graph.dist(layout.physical(p.a), layout.physical(p.b)) as f64)
        .sum()
}

fn incident_weight(num_logical: usize, pairs: &[WeightedPair]) -> Vec<f64> {
    let mut w = vec![0.0; num_logical];
    for p in pairs {
        w[p.a] += p.weight;
        w[p.b] += p.weight;
    }
    w
}

/// Builds a layout from a possibly infeasible placement assignment.
///
/// Logical qubits claim one of their set slots in order of decreasing total
/// interaction weight; those left without a slot go to the free physical qubit
/// nearest their heaviest already-placed partner.
pub fn repair_mapping(
    bits: &[bool],
    num_logical: usize,
    graph: &CouplingGraph,
    pairs: &[WeightedPair],
    max_violations: usize,
) -> Result<Layout, RouteError> {
    let n_phys = graph.num_physical();
    let var = |i: usize, p: usize| VariableCodec::mapping_index(n_phys, i, p);
    let mut violations = 0;
    for i in 0..num_logical {
        let k = (0..n_phys).filter(|&p| bits[var(i, p)]).count();
        violations += if k == 0 { 1 } else { k - 1 };
    }
    for p in 0..n_phys {
        let k = (0..num_logical).filter(|&i| bits[var(i, p)]).count();
        violations += k.saturating_sub(1);
    }
    if violations > max_violations {
        return Err(RouteError::Unrepairable { violations, threshold: max_violations });
    }
    if violations > 0 {
        debug!("repairing placement with {violations} one-hot violations");
    }

    let incident = incident_weight(num_logical, pairs);
    let mut order: Vec<usize> = (0..num_logical).collect();
    order.sort_by(|&a, &b| incident[b].total_cmp(&incident[a]).then(a.cmp(&b)));

    let mut placed: Vec<Option<usize>> = vec![None; num_logical];
    let mut taken = vec![false; n_phys];
    for &i in &order {
        if let Some(p) = (0..n_phys).find(|&p| bits[var(i, p)] && !taken[p]) {
            placed[i] = Some(p);
            taken[p] = true;
        }
    }
    for &i in &order {
        if placed[i].is_some() {
            continue;
        }
        let anchor = pairs
            .iter()
            .filter_map(|pr| {
                let other = if pr.a == i {
                    pr.b
                } else if pr.b == i {
                    pr.a
                } else {
                    return None;
                };
                placed[other].map(|p| (pr.weight, p))
            })
            .max_by(|x, y| x.0.total_cmp(&y.0))
            .map(|(_, p)| p);
        let free = (0..n_phys).filter(|&p| !taken[p]);
        let p = match anchor {
            Some(a) => free.min_by_key(|&p| (graph.dist(a, p), p)),
            None => free.min(),
        }
        .expect("layout has room for every logical qubit");
        placed[i] = Some(p);
        taken[p] = true;
    }
    let placement = placed.into_iter().map(|p| p.expect("all placed")).collect();
    Ok(Layout::new(placement, n_phys)?)
}

pub(crate) fn initial_mapping_timed(
    circuit: &Circuit,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
    timings: &mut PhaseTimings,
) -> Result<Layout, RouteError> {
    let p = &cfg.penalty;
    let weights = first_interaction_weights_with_decay(&circuit.gates, circuit.num_qubits, p.w_max, p.decay);
    let pairs = WeightedPair::from_weights(&weights);
    let base = p.lambda.unwrap_or_else(|| default_mapping_lambda(&pairs, graph));
    let mut last = None;
    for attempt in 0..=cfg.lambda_retries {
        let mut penalty = p.clone();
        penalty.lambda = Some(base * f64::powi(2.0, attempt as i32));
        let problem = build_mapping_qubo_from_pairs(circuit.num_qubits, &pairs, graph, &penalty)?;
        let clock = Instant::now();
        let solved = solver.solve(&problem)?;
        timings.add_solve(solver, true, clock.elapsed());
        let clock = Instant::now();
        let repaired = repair_mapping(&solved.best_assignment, circuit.num_qubits, graph, &pairs, cfg.max_violations);
        timings.decode += clock.elapsed();
        match repaired {
            Ok(layout) => return Ok(layout),
            Err(e) => {
                warn!("placement attempt {attempt}: {e}; doubling the penalty weight");
                last = Some(e);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Placement by QUBO, escalating the penalty weight when the solution is too
/// far from a permutation to repair.
pub fn solve_initial_mapping(
    circuit: &Circuit,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
) -> Result<Layout, RouteError> {
    initial_mapping_timed(circuit, graph, cfg, solver, &mut PhaseTimings::default())
}

fn routing_step_timed(
    blocked: &[WeightedPair],
    prior: &Layout,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
    timings: &mut PhaseTimings,
) -> Result<(SwapStep, Layout), RouteError> {
    let p = &cfg.penalty;
    let base = p.lambda.unwrap_or_else(|| default_routing_lambda(blocked, prior.num_logical(), graph, p));
    let mut last = DecodeError::WrongCodec;
    for attempt in 0..=cfg.lambda_retries {
        let mut penalty = p.clone();
        penalty.lambda = Some(base * f64::powi(2.0, attempt as i32));
        let problem = build_routing_qubo(blocked, prior, graph, &penalty)?;
        let hint = stationary_hint(&problem.codec, prior);
        let problem = problem.with_hint(hint);
        let clock = Instant::now();
        let solved = solver.solve(&problem)?;
        timings.add_solve(solver, false, clock.elapsed());

        let clock = Instant::now();
        let decoded = decode_movements(prior, &solved.best_assignment, &problem.codec, graph).and_then(|step| {
            let layouts = decode_step_layouts(&problem.codec, &solved.best_assignment)?;
            Ok((step, layouts.last().cloned().unwrap_or_else(|| prior.clone())))
        });
        timings.decode += clock.elapsed();
        match decoded {
            Ok(found) => return Ok(found),
            Err(e) => {
                warn!("routing attempt {attempt}: {e}; doubling the penalty weight");
                last = e;
            }
        }
    }
    Err(RouteError::InfeasibleDecode(last))
}

/// One routing QUBO solve from `prior`: the SWAPs and the layout they reach.
pub fn solve_routing_step(
    blocked: &[WeightedPair],
    prior: &Layout,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
) -> Result<(SwapStep, Layout), RouteError> {
    routing_step_timed(blocked, prior, graph, cfg, solver, &mut PhaseTimings::default())
}

/// Every qubit staying where it is for all steps.
fn stationary_hint(codec: &VariableCodec, prior: &Layout) -> Vec<bool> {
    let mut bits = vec![false; codec.num_vars()];
    if let VariableCodec::Routing { time_steps, .. } = *codec {
        for t in 1..=time_steps {
            for i in 0..prior.num_logical() {
                bits[codec.encode(i, prior.physical(i), Some(t))] = true;
            }
        }
    }
    bits
}

/// SWAPs moving `a` along a shortest path until it neighbours `b`.
fn route_pair(layout: &Layout, graph: &CouplingGraph, a: usize, b: usize) -> Vec<(usize, usize)> {
    let path = graph.shortest_path(layout.physical(a), layout.physical(b));
    path.windows(2).take(path.len().saturating_sub(2)).map(|w| (w[0], w[1])).collect()
}

/// Placement and routing both by QUBO.
pub fn transpile_full(
    circuit: &Circuit,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
) -> Result<TranspileResult, RouteError> {
    let clock = Instant::now();
    let mut timings = PhaseTimings::default();
    let initial = initial_mapping_timed(circuit, graph, cfg, solver, &mut timings)?;
    let mut out = Emitter::new(circuit, initial.clone());
    let mut residual = circuit.gates.clone();
    let mut stalled = 0;
    let mut iterations = 0;

    loop {
        let split_clock = Instant::now();
        let split = classify_executable(&residual, out.layout(), graph, cfg);
        timings.decode += split_clock.elapsed();
        for gate in &split.executable {
            out.gate(gate);
        }
        let progressed = !split.executable.is_empty();
        residual = split.residual;
        if residual.is_empty() {
            break;
        }
        iterations += 1;
        if iterations > cfg.max_iterations {
            return Err(RouteError::IterationCap(cfg.max_iterations));
        }
        stalled = if progressed { 0 } else { stalled + 1 };

        let swaps = if stalled > cfg.stall_limit {
            // The first residual gate is always blocked by distance alone.
            let (a, b) = residual[0].pair().expect("front residual gate is two-qubit");
            debug!("routing stalled for {stalled} rounds; walking ({a}, {b}) together");
            stalled = 0;
            route_pair(out.layout(), graph, a, b)
        } else {
            let before = weighted_distance(&split.blocked, out.layout(), graph);
            let (step, reached) =
                routing_step_timed(&split.blocked, out.layout(), graph, cfg, solver, &mut timings)?;
            if weighted_distance(&split.blocked, &reached, graph) < before {
                step.swaps
            } else {
                // No improvement: one greedy SWAP on the heaviest pair.
                let heaviest = split
                    .blocked
                    .iter()
                    .filter(|p| !graph.is_edge(out.layout().physical(p.a), out.layout().physical(p.b)))
                    .max_by(|x, y| x.weight.total_cmp(&y.weight).then((y.a, y.b).cmp(&(x.a, x.b))))
                    .expect("a blocked pair is non-adjacent");
                route_pair(out.layout(), graph, heaviest.a, heaviest.b).into_iter().take(1).collect()
            }
        };
        for (p, q) in swaps {
            out.swap(p, q);
        }
    }
    Ok(out.finish(circuit, initial, timings, clock))
}
