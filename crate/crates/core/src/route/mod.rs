//! Transpilation strategies.
//!
//! * **Full**: QUBO placement, then repeated classify / route-by-QUBO rounds
//!   until every gate has executed.
//! * **Hybrid**: QUBO placement, then the lookahead heuristic router.
//! * **Heuristic-only**: identity placement, then the heuristic router; the
//!   baseline arm.

mod decode;
mod full;
mod heuristic;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::anneal::{SolveError, Solver};
use crate::circuit::{Circuit, Gate};
use crate::layout::{Layout, LayoutError};
use crate::qubo::{PenaltyConfig, QuboError};
use crate::topology::CouplingGraph;

pub use decode::{decode_movements, decode_step_layouts, DecodeError};
pub use full::{
    classify_executable, repair_mapping, solve_initial_mapping, solve_routing_step, transpile_full, Classification,
};
pub use heuristic::heuristic_route;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("placement still violates {violations} constraints (threshold {threshold}) after penalty escalation")]
    Unrepairable { violations: usize, threshold: usize },
    #[error("routing solution could not be decoded after penalty escalation: {0}")]
    InfeasibleDecode(DecodeError),
    #[error("routing did not finish within {0} iterations")]
    IterationCap(usize),
}

/// Ordered physical SWAPs, each on a coupler.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SwapStep {
    pub swaps: Vec<(usize, usize)>,
}

impl SwapStep {
    pub fn apply(&self, layout: &mut Layout) {
        for &(p, q) in &self.swaps {
            layout.swap_physical(p, q);
        }
    }

    pub fn len(&self) -> usize {
        self.swaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.swaps.is_empty()
    }
}

/// Which residual interactions a routing QUBO optimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RouteScope {
    /// Every interaction left in the residual circuit, with decayed weights.
    #[default]
    AllResidual,
    /// Interactions among the first `n` residual two-qubit gates.
    Window(usize),
    /// Only gates blocked by adjacency, not by an earlier blocked gate.
    FrontLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicConfig {
    pub lookahead: usize,
    pub lookahead_weight: f64,
    /// Independent routing passes; the pass with fewest SWAPs is kept.
    /// Pass 0 breaks ties by edge index, later passes at random.
    pub trials: usize,
    pub seed: u64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig { lookahead: 20, lookahead_weight: 0.5, trials: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranspileConfig {
    pub penalty: PenaltyConfig,
    /// Most one-hot violations a placement may have and still be repaired.
    pub max_violations: usize,
    /// Times the penalty weight is doubled before giving up on a solution.
    pub lambda_retries: usize,
    pub scope: RouteScope,
    pub max_iterations: usize,
    /// Routing rounds without an executed gate before the front gate is
    /// routed along a shortest path.
    pub stall_limit: usize,
    pub heuristic: HeuristicConfig,
}

impl Default for TranspileConfig {
    fn default() -> Self {
        TranspileConfig {
            penalty: PenaltyConfig::default(),
            max_violations: 8,
            lambda_retries: 3,
            scope: RouteScope::AllResidual,
            max_iterations: 10_000,
            stall_limit: 8,
            heuristic: HeuristicConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Full,
    Hybrid,
    HeuristicOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Full, Strategy::Hybrid, Strategy::HeuristicOnly];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Hybrid => "hybrid",
            Strategy::HeuristicOnly => "heuristic-only",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Strategy::Full),
            "hybrid" => Ok(Strategy::Hybrid),
            "heuristic-only" | "heuristic" => Ok(Strategy::HeuristicOnly),
            other => Err(format!("unknown strategy `{other}` (expected full, hybrid or heuristic-only)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseTimings {
    pub mapping_solve: Duration,
    pub routing_solve: Duration,
    pub decode: Duration,
    pub remote_solve: Duration,
    pub total: Duration,
}

impl PhaseTimings {
    /// Books solver time under its phase, or under `remote_solve` for remote solvers.
    pub(crate) fn add_solve(&mut self, solver: &dyn Solver, mapping: bool, elapsed: Duration) {
        if solver.is_remote() {
            self.remote_solve += elapsed;
        } else if mapping {
            self.mapping_solve += elapsed;
        } else {
            self.routing_solve += elapsed;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranspileResult {
    /// Routed circuit over physical qubits; inserted SWAPs appear as `Gate::Swap`.
    pub circuit: Circuit,
    pub initial_layout: Layout,
    pub final_layout: Layout,
    pub swap_count: usize,
    pub original_cnot: usize,
    pub equivalent_cnot: usize,
    pub timings: PhaseTimings,
}

/// Accumulates a routed circuit alongside the live layout.
pub(crate) struct Emitter {
    circuit: Circuit,
    layout: Layout,
    swaps: usize,
}

impl Emitter {
    pub(crate) fn new(original: &Circuit, layout: Layout) -> Self {
        let mut circuit = Circuit::new(original.name.clone(), layout.num_physical());
        circuit.num_clbits = original.num_clbits;
        Emitter { circuit, layout, swaps: 0 }
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Emits a logical gate rewritten onto its current physical qubits.
    pub(crate) fn gate(&mut self, gate: &Gate) {
        let layout = &self.layout;
        self.circuit.push(gate.map_qubits(|q| layout.physical(q)));
    }

    pub(crate) fn swap(&mut self, p: usize, q: usize) {
        self.circuit.swap(p, q);
        self.layout.swap_physical(p, q);
        self.swaps += 1;
    }

    pub(crate) fn finish(
        self,
        original: &Circuit,
        initial_layout: Layout,
        mut timings: PhaseTimings,
        clock: Instant,
    ) -> TranspileResult {
        timings.total = clock.elapsed();
        let original_cnot = original.equivalent_cnot();
        TranspileResult {
            circuit: self.circuit,
            initial_layout,
            final_layout: self.layout,
            swap_count: self.swaps,
            original_cnot,
            equivalent_cnot: original_cnot + 3 * self.swaps,
            timings,
        }
    }
}

/// QUBO placement followed by heuristic routing.
pub fn transpile_hybrid(
    circuit: &Circuit,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
) -> Result<TranspileResult, RouteError> {
    let clock = Instant::now();
    let mut timings = PhaseTimings::default();
    let initial = full::initial_mapping_timed(circuit, graph, cfg, solver, &mut timings)?;
    let routed_clock = Instant::now();
    let mut result = heuristic_route(circuit, &initial, graph, &cfg.heuristic)?;
    timings.routing_solve += routed_clock.elapsed();
    timings.total = clock.elapsed();
    result.timings = timings;
    Ok(result)
}

/// Identity placement followed by heuristic routing.
pub fn transpile_heuristic_only(
    circuit: &Circuit,
    graph: &CouplingGraph,
    cfg: &TranspileConfig,
) -> Result<TranspileResult, RouteError> {
    let initial = Layout::trivial(circuit.num_qubits, graph.num_physical())?;
    heuristic_route(circuit, &initial, graph, &cfg.heuristic)
}

pub fn transpile(
    circuit: &Circuit,
    graph: &CouplingGraph,
    strategy: Strategy,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
) -> Result<TranspileResult, RouteError> {
    match strategy {
        Strategy::Full => transpile_full(circuit, graph, cfg, solver),
        Strategy::Hybrid => transpile_hybrid(circuit, graph, cfg, solver),
        Strategy::HeuristicOnly => transpile_heuristic_only(circuit, graph, cfg),
    }
}
