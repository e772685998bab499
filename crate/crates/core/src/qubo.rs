//! QUBO construction for initial placement and for time-expanded routing.
//!
//! Energies follow `E(x) = offset + sum_i Q_ii x_i + sum_{a<b} Q_ab x_a x_b`.
//! Placement variables are `x[i,p]` (logical `i` on physical `p`); routing
//! variables are `x[i,p,t]` for time steps `t = 1..=T`, with the prior layout
//! at `t = 0` folded in as constants.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{first_interaction_weights_with_decay, Circuit, InteractionWeights, DEFAULT_WEIGHT_DECAY};
use crate::layout::Layout;
use crate::topology::CouplingGraph;

/// Variable capacity of the annealing hardware the formulation targets.
pub const ANNEALER_CAPACITY: usize = 8192;

#[derive(Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("QUBO needs {num_vars} variables, above the budget of {budget}")]
    BudgetExceeded { num_vars: usize, budget: usize },
    #[error("{logical} logical qubits exceed {physical} physical qubits")]
    TooManyLogical { logical: usize, physical: usize },
    #[error("assignment has {got} bits, problem has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid penalty configuration: {0}")]
    InvalidConfig(String),
    #[error("prior layout covers {layout} logical qubits but pair ({a}, {b}) is outside it")]
    PairOutsideLayout { a: usize, b: usize, layout: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    /// Constraint weight; `None` derives it from the instance so that no
    /// infeasible assignment can undercut a feasible one.
    pub lambda: Option<f64>,
    pub w_swap: f64,
    pub w_max: f64,
    pub decay: f64,
    pub time_steps: usize,
    /// Variable budget; `None` lifts the limit (local solver only).
    pub budget: Option<usize>,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            lambda: None,
            w_swap: 3.0,
            w_max: crate::circuit::DEFAULT_W_MAX,
            decay: DEFAULT_WEIGHT_DECAY,
            time_steps: 2,
            budget: Some(ANNEALER_CAPACITY),
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<(), QuboError> {
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(QuboError::InvalidConfig(format!("lambda must be > 0, got {l}")));
            }
        }
        if !(self.w_swap >= 0.0) {
            return Err(QuboError::InvalidConfig(format!("w_swap must be >= 0, got {}", self.w_swap)));
        }
        if !(self.w_max > 0.0) {
            return Err(QuboError::InvalidConfig(format!("w_max must be > 0, got {}", self.w_max)));
        }
        if self.time_steps == 0 {
            return Err(QuboError::InvalidConfig("time_steps must be >= 1".into()));
        }
        Ok(())
    }

    fn check_budget(&self, num_vars: usize) -> Result<(), QuboError> {
        match self.budget {
            Some(budget) if num_vars > budget => Err(QuboError::BudgetExceeded { num_vars, budget }),
            _ => Ok(()),
        }
    }
}

/// Interacting logical pair with its priority weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPair {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl WeightedPair {
    pub fn from_weights(weights: &InteractionWeights) -> Vec<WeightedPair> {
        weights.iter().map(|(&(a, b), &weight)| WeightedPair { a, b, weight }).collect()
    }
}

/// Decoded coordinates of a flat variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarCoord {
    pub logical: usize,
    pub physical: usize,
    /// Routing time step in `1..=T`; `None` for placement variables.
    pub step: Option<usize>,
}

/// Layout of variables in a QUBO.
///
/// Structured codecs are one-hot grids: `layers x rows x slots`, where a row
/// is a logical qubit and a slot a physical qubit. Flat index is
/// `(layer * rows + row) * slots + slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableCodec {
    Generic { num_vars: usize },
    Mapping { num_logical: usize, num_physical: usize },
    Routing { num_logical: usize, num_physical: usize, time_steps: usize },
}

impl VariableCodec {
    pub fn num_vars(&self) -> usize {
        match *self {
            VariableCodec::Generic { num_vars } => num_vars,
            VariableCodec::Mapping { num_logical, num_physical } => num_logical * num_physical,
            VariableCodec::Routing { num_logical, num_physical, time_steps } => {
                num_logical * num_physical * time_steps
            }
        }
    }

    /// `(layers, rows, slots)` of a one-hot structured codec.
    pub fn grid_shape(&self) -> Option<(usize, usize, usize)> {
        match *self {
            VariableCodec::Generic { .. } => None,
            VariableCodec::Mapping { num_logical, num_physical } => Some((1, num_logical, num_physical)),
            VariableCodec::Routing { num_logical, num_physical, time_steps } => {
                Some((time_steps, num_logical, num_physical))
            }
        }
    }

    #[inline]
    pub fn mapping_index(num_physical: usize, logical: usize, physical: usize) -> usize {
        logical * num_physical + physical
    }

    /// Flat index of `x[i,p]` or `x[i,p,t]`. Panics on a codec/coordinate mismatch.
    pub fn encode(&self, logical: usize, physical: usize, step: Option<usize>) -> usize {
        match (*self, step) {
            (VariableCodec::Mapping { num_logical, num_physical }, None) => {
                assert!(logical < num_logical && physical < num_physical);
                logical * num_physical + physical
            }
            (VariableCodec::Routing { num_logical, num_physical, time_steps }, Some(t)) => {
                assert!(logical < num_logical && physical < num_physical && (1..=time_steps).contains(&t));
                ((t - 1) * num_logical + logical) * num_physical + physical
            }
            _ => panic!("coordinate does not match codec {self:?}"),
        }
    }

    pub fn decode(&self, index: usize) -> Option<VarCoord> {
        if index >= self.num_vars() {
            return None;
        }
        match *self {
            VariableCodec::Generic { .. } => None,
            VariableCodec::Mapping { num_physical, .. } => {
                Some(VarCoord { logical: index / num_physical, physical: index % num_physical, step: None })
            }
            VariableCodec::Routing { num_logical, num_physical, .. } => {
                let row = index / num_physical;
                Some(VarCoord {
                    logical: row % num_logical,
                    physical: index % num_physical,
                    step: Some(row / num_logical + 1),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    pub codec: VariableCodec,
    pub linear: Vec<f64>,
    /// `(a, b, Q_ab)` with `a < b`, sorted, no duplicates.
    pub quadratic: Vec<(usize, usize, f64)>,
    pub offset: f64,
    /// Penalty weight used to build the problem, if any.
    pub lambda: Option<f64>,
    /// Optional starting assignment for the first solver restart.
    pub hint: Option<Vec<bool>>,
}

impl QuboProblem {
    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn energy(&self, x: &[bool]) -> Result<f64, QuboError> {
        if x.len() != self.num_vars() {
            return Err(QuboError::LengthMismatch { expected: self.num_vars(), got: x.len() });
        }
        let mut e = self.offset;
        for (i, &c) in self.linear.iter().enumerate() {
            if x[i] {
                e += c;
            }
        }
        for &(a, b, c) in &self.quadratic {
            if x[a] && x[b] {
                e += c;
            }
        }
        Ok(e)
    }

    /// Coefficient `Q_ab` (linear when `a == b`).
    pub fn coefficient(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return self.linear[a];
        }
        let key = (a.min(b), a.max(b));
        self.quadratic
            .binary_search_by(|&(x, y, _)| (x, y).cmp(&key))
            .map(|k| self.quadratic[k].2)
            .unwrap_or(0.0)
    }

    pub fn export(&self) -> QuboExport {
        QuboExport {
            num_vars: self.num_vars(),
            offset: self.offset,
            linear: self.linear.clone(),
            quadratic: self.quadratic.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.export()).expect("QUBO export is always serialisable")
    }

    pub fn with_hint(mut self, hint: Vec<bool>) -> Self {
        debug_assert_eq!(hint.len(), self.num_vars());
        self.hint = Some(hint);
        self
    }
}

/// Wire form of a QUBO: `{num_vars, offset, linear, quadratic: [[a, b, coef], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboExport {
    pub num_vars: usize,
    pub offset: f64,
    pub linear: Vec<f64>,
    pub quadratic: Vec<(usize, usize, f64)>,
}

impl QuboExport {
    /// Rebuilds an unstructured problem, merging duplicate and mirrored terms.
    pub fn into_problem(self) -> Result<QuboProblem, QuboError> {
        if self.linear.len() != self.num_vars {
            return Err(QuboError::LengthMismatch { expected: self.num_vars, got: self.linear.len() });
        }
        let mut builder = QuboBuilder::new(VariableCodec::Generic { num_vars: self.num_vars });
        builder.linear = self.linear;
        builder.offset = self.offset;
        for (a, b, c) in self.quadratic {
            if a >= self.num_vars || b >= self.num_vars {
                return Err(QuboError::LengthMismatch { expected: self.num_vars, got: a.max(b) + 1 });
            }
            builder.add_quadratic(a, b, c);
        }
        Ok(builder.build(None))
    }
}

/// Accumulates terms; duplicate pairs are summed.
pub struct QuboBuilder {
    codec: VariableCodec,
    linear: Vec<f64>,
    quadratic: HashMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboBuilder {
    pub fn new(codec: VariableCodec) -> Self {
        QuboBuilder { codec, linear: vec![0.0; codec.num_vars()], quadratic: HashMap::new(), offset: 0.0 }
    }

    pub fn add_linear(&mut self, a: usize, c: f64) {
        self.linear[a] += c;
    }

    /// `x_a * x_a = x_a`, so diagonal terms land in the linear part.
    pub fn add_quadratic(&mut self, a: usize, b: usize, c: f64) {
        if a == b {
            self.linear[a] += c;
        } else {
            *self.quadratic.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
        }
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn build(self, lambda: Option<f64>) -> QuboProblem {
        let mut quadratic: Vec<(usize, usize, f64)> =
            self.quadratic.into_iter().filter(|&(_, c)| c != 0.0).map(|((a, b), c)| (a, b, c)).collect();
        quadratic.sort_unstable_by_key(|&(a, b, _)| (a, b));
        QuboProblem { codec: self.codec, linear: self.linear, quadratic, offset: self.offset, lambda, hint: None }
    }

    /// `lambda * sum_rows (sum_slots x - 1)^2` over each one-hot row given as variable indices.
    fn one_hot_rows(&mut self, rows: impl Iterator<Item = Vec<usize>>, lambda: f64) {
        for row in rows {
            self.offset += lambda;
            for (k, &a) in row.iter().enumerate() {
                self.linear[a] -= lambda;
                for &b in &row[k + 1..] {
                    self.add_quadratic(a, b, 2.0 * lambda);
                }
            }
        }
    }

    /// `lambda * sum_{i != j} x_a x_b` over each column: `2 lambda` per unordered pair.
    fn exclusive_columns(&mut self, columns: impl Iterator<Item = Vec<usize>>, lambda: f64) {
        for column in columns {
            for (k, &a) in column.iter().enumerate() {
                for &b in &column[k + 1..] {
                    self.add_quadratic(a, b, 2.0 * lambda);
                }
            }
        }
    }
}

fn total_weight(pairs: &[WeightedPair]) -> f64 {
    pairs.iter().map(|p| p.weight).sum()
}

/// Default placement penalty: twice the largest possible objective, plus one.
pub fn default_mapping_lambda(pairs: &[WeightedPair], graph: &CouplingGraph) -> f64 {
    2.0 * total_weight(pairs) * graph.diameter() as f64 + 1.0
}

/// Default routing penalty: twice the largest possible feasible objective
/// (distance at every step plus every qubit moving at every step), plus one.
pub fn default_routing_lambda(
    pairs: &[WeightedPair],
    num_logical: usize,
    graph: &CouplingGraph,
    cfg: &PenaltyConfig,
) -> f64 {
    let steps = cfg.time_steps as f64;
    let max_dist = steps * total_weight(pairs) * graph.diameter() as f64;
    let max_swap = cfg.w_swap * 2.0 * num_logical as f64 * steps;
    2.0 * (max_dist + max_swap) + 1.0
}

/// Placement QUBO for a circuit, weighting pairs by first interaction.
pub fn build_mapping_qubo(
    circuit: &Circuit,
    graph: &CouplingGraph,
    cfg: &PenaltyConfig,
) -> Result<QuboProblem, QuboError> {
    let weights = first_interaction_weights_with_decay(&circuit.gates, circuit.num_qubits, cfg.w_max, cfg.decay);
    build_mapping_qubo_from_pairs(circuit.num_qubits, &WeightedPair::from_weights(&weights), graph, cfg)
}

pub fn build_mapping_qubo_from_pairs(
    num_logical: usize,
    pairs: &[WeightedPair],
    graph: &CouplingGraph,
    cfg: &PenaltyConfig,
) -> Result<QuboProblem, QuboError> {
    cfg.validate()?;
    let n_phys = graph.num_physical();
    if num_logical > n_phys {
        return Err(QuboError::TooManyLogical { logical: num_logical, physical: n_phys });
    }
    let codec = VariableCodec::Mapping { num_logical, num_physical: n_phys };
    cfg.check_budget(codec.num_vars())?;
    let lambda = cfg.lambda.unwrap_or_else(|| default_mapping_lambda(pairs, graph));
    let var = |i: usize, p: usize| VariableCodec::mapping_index(n_phys, i, p);

    let mut b = QuboBuilder::new(codec);
    for pair in pairs {
        for p in 0..n_phys {
            for q in 0..n_phys {
                let d = graph.dist(p, q);
                if d > 0 {
                    b.add_quadratic(var(pair.a, p), var(pair.b, q), pair.weight * d as f64);
                }
            }
        }
    }
    b.one_hot_rows((0..num_logical).map(|i| (0..n_phys).map(|p| var(i, p)).collect()), lambda);
    b.exclusive_columns((0..n_phys).map(|p| (0..num_logical).map(|i| var(i, p)).collect()), lambda);
    Ok(b.build(Some(lambda)))
}

/// Time-expanded routing QUBO over `cfg.time_steps` steps, starting from `prior`.
pub fn build_routing_qubo(
    pairs: &[WeightedPair],
    prior: &Layout,
    graph: &CouplingGraph,
    cfg: &PenaltyConfig,
) -> Result<QuboProblem, QuboError> {
    cfg.validate()?;
    let n_log = prior.num_logical();
    let n_phys = graph.num_physical();
    for pair in pairs {
        if pair.a >= n_log || pair.b >= n_log {
            return Err(QuboError::PairOutsideLayout { a: pair.a, b: pair.b, layout: n_log });
        }
    }
    let steps = cfg.time_steps;
    let codec = VariableCodec::Routing { num_logical: n_log, num_physical: n_phys, time_steps: steps };
    cfg.check_budget(codec.num_vars())?;
    let lambda = cfg.lambda.unwrap_or_else(|| default_routing_lambda(pairs, n_log, graph, cfg));
    let allowed = graph.allowed_transitions();
    let var = |i: usize, p: usize, t: usize| codec.encode(i, p, Some(t));
    let ws = cfg.w_swap;

    let mut b = QuboBuilder::new(codec);
    for t in 1..=steps {
        for pair in pairs {
            for p in 0..n_phys {
                for q in 0..n_phys {
                    let d = graph.dist(p, q);
                    if d > 0 {
                        b.add_quadratic(var(pair.a, p, t), var(pair.b, q, t), pair.weight * d as f64);
                    }
                }
            }
        }
    }

    // Movement cost. The t = 0 state is the prior layout, a constant.
    for i in 0..n_log {
        let start = prior.physical(i);
        for p in 0..n_phys {
            if p == start {
                b.add_linear(var(i, p, 1), -ws);
                b.add_offset(ws);
            } else {
                b.add_linear(var(i, p, 1), ws);
            }
            for t in 2..=steps {
                b.add_linear(var(i, p, t - 1), ws);
                b.add_linear(var(i, p, t), ws);
                b.add_quadratic(var(i, p, t - 1), var(i, p, t), -2.0 * ws);
            }
        }
    }

    for t in 1..=steps {
        b.one_hot_rows((0..n_log).map(|i| (0..n_phys).map(|p| var(i, p, t)).collect()), lambda);
        b.exclusive_columns((0..n_phys).map(|p| (0..n_log).map(|i| var(i, p, t)).collect()), lambda);
    }

    // Moves outside stay-or-adjacent.
    for i in 0..n_log {
        let start = prior.physical(i);
        for q in 0..n_phys {
            if !allowed.allows(start, q) {
                b.add_linear(var(i, q, 1), lambda);
            }
        }
        for t in 2..=steps {
            for p in 0..n_phys {
                for q in 0..n_phys {
                    if !allowed.allows(p, q) {
                        b.add_quadratic(var(i, p, t - 1), var(i, q, t), lambda);
                    }
                }
            }
        }
    }
    Ok(b.build(Some(lambda)))
}

/// Reads the per-step layouts out of a routing assignment. Each entry is the
/// list of physical slots set for each logical qubit at that step.
pub fn routing_slots(codec: &VariableCodec, bits: &[bool]) -> Vec<Vec<Vec<usize>>> {
    let (layers, rows, slots) = codec.grid_shape().expect("structured codec");
    (0..layers)
        .map(|l| {
            (0..rows)
                .map(|r| (0..slots).filter(|&s| bits[(l * rows + r) * slots + s]).collect())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn placement_bits(n_phys: usize, placement: &[usize]) -> Vec<bool> {
        let mut x = vec![false; placement.len() * n_phys];
        for (i, &p) in placement.iter().enumerate() {
            x[i * n_phys + p] = true;
        }
        x
    }

    #[test]
    fn mapping_size() {
        let g = CouplingGraph::grid(8, 8).unwrap();
        let c = crate::circuit::generate_benchmark(crate::circuit::Family::Ghz, 50, 0).unwrap();
        let q = build_mapping_qubo(&c, &g, &PenaltyConfig::default()).unwrap();
        assert_eq!(q.num_vars(), 3200);
    }

    #[test]
    fn two_qubit_mapping_energies() {
        let g = CouplingGraph::grid(1, 2).unwrap();
        let mut c = Circuit::new("cx", 2);
        c.cx(0, 1);
        let cfg = PenaltyConfig { lambda: Some(100.0), ..PenaltyConfig::default() };
        let q = build_mapping_qubo(&c, &g, &cfg).unwrap();
        assert_relative_eq!(q.energy(&placement_bits(2, &[0, 1])).unwrap(), 11.0, epsilon = 1e-9);
        assert_relative_eq!(q.energy(&placement_bits(2, &[1, 0])).unwrap(), 11.0, epsilon = 1e-9);
        // brute force: the two feasible placements are the minima
        let min = (0..16u32)
            .map(|m| q.energy(&(0..4).map(|k| m >> k & 1 == 1).collect::<Vec<_>>()).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, 11.0, epsilon = 1e-9);
    }

    #[test]
    fn energy_edge_cases() {
        let mut b = QuboBuilder::new(VariableCodec::Generic { num_vars: 3 });
        b.add_linear(1, -2.5);
        b.add_quadratic(0, 2, 4.0);
        b.add_offset(1.5);
        let q = b.build(None);
        assert_eq!(q.energy(&[false, false, false]).unwrap(), 1.5);
        assert_eq!(q.energy(&[false, true, false]).unwrap(), -1.0);
        assert_eq!(q.energy(&[true, false, true]).unwrap(), 5.5);
        assert_eq!(q.energy(&[true]), Err(QuboError::LengthMismatch { expected: 3, got: 1 }));
        assert_eq!(q.coefficient(2, 0), 4.0);
        assert_eq!(q.coefficient(0, 1), 0.0);
    }

    #[test]
    fn swap_cost_of_stationary_and_hopping_qubit() {
        let g = CouplingGraph::grid(1, 3).unwrap();
        let prior = Layout::new(vec![0], 3).unwrap();
        let cfg = PenaltyConfig { w_swap: 1.5, lambda: Some(1000.0), ..PenaltyConfig::default() };
        let q = build_routing_qubo(&[], &prior, &g, &cfg).unwrap();
        let bits = |p1: usize, p2: usize| {
            let mut x = vec![false; 6];
            x[q.codec.encode(0, p1, Some(1))] = true;
            x[q.codec.encode(0, p2, Some(2))] = true;
            x
        };
        assert_relative_eq!(q.energy(&bits(0, 0)).unwrap(), 0.0, epsilon = 1e-9);
        assert_relative_eq!(q.energy(&bits(1, 1)).unwrap(), 2.0 * 1.5, epsilon = 1e-9);
        assert_relative_eq!(q.energy(&bits(0, 1)).unwrap(), 2.0 * 1.5, epsilon = 1e-9);
        assert_relative_eq!(q.energy(&bits(1, 2)).unwrap(), 4.0 * 1.5, epsilon = 1e-9);
        // 0 -> 2 in one step is not a coupler
        assert!(q.energy(&bits(2, 2)).unwrap() >= 1000.0);
    }

    #[test]
    fn routing_budget_boundary() {
        let g = CouplingGraph::grid(8, 8).unwrap();
        let prior = Layout::trivial(64, 64).unwrap();
        let q = build_routing_qubo(&[], &prior, &g, &PenaltyConfig::default()).unwrap();
        assert_eq!(q.num_vars(), 8192);
        let cfg = PenaltyConfig { time_steps: 3, ..PenaltyConfig::default() };
        let prior43 = Layout::trivial(43, 64).unwrap();
        assert_eq!(
            build_routing_qubo(&[], &prior43, &g, &cfg).unwrap_err(),
            QuboError::BudgetExceeded { num_vars: 8256, budget: 8192 }
        );
    }

    #[test]
    fn codec_round_trip() {
        let codecs = [
            VariableCodec::Mapping { num_logical: 3, num_physical: 5 },
            VariableCodec::Routing { num_logical: 3, num_physical: 4, time_steps: 2 },
        ];
        for codec in codecs {
            for k in 0..codec.num_vars() {
                let v = codec.decode(k).unwrap();
                assert_eq!(codec.encode(v.logical, v.physical, v.step), k);
            }
            assert_eq!(codec.decode(codec.num_vars()), None);
        }
    }

    #[test]
    fn export_round_trip() {
        let g = CouplingGraph::grid(1, 3).unwrap();
        let pairs = [WeightedPair { a: 0, b: 1, weight: 2.0 }];
        let q = build_mapping_qubo_from_pairs(2, &pairs, &g, &PenaltyConfig::default()).unwrap();
        let export: QuboExport = serde_json::from_str(&q.to_json()).unwrap();
        let back = export.into_problem().unwrap();
        assert_eq!(back.linear, q.linear);
        assert_eq!(back.quadratic, q.quadratic);
        assert_eq!(back.offset, q.offset);
    }

    #[test]
    fn bad_config_rejected() {
        let g = CouplingGraph::grid(1, 2).unwrap();
        let cfg = PenaltyConfig { lambda: Some(0.0), ..PenaltyConfig::default() };
        assert!(matches!(build_mapping_qubo_from_pairs(1, &[], &g, &cfg), Err(QuboError::InvalidConfig(_))));
        assert!(matches!(
            build_mapping_qubo_from_pairs(3, &[], &g, &PenaltyConfig::default()),
            Err(QuboError::TooManyLogical { .. })
        ));
    }
}
