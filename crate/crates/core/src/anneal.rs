//! QUBO solvers: an embedded simulated annealer and an HTTP client for
//! external Ising-machine services.

use std::time::{Duration, Instant};

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::qubo::{QuboError, QuboProblem};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("remote solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("remote solver transport error: {0}")]
    Transport(String),
    #[error("malformed solver response: {0}")]
    MalformedResponse(String),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

impl SolveError {
    /// Errors after which a local solver may be tried instead.
    pub fn is_transport(&self) -> bool {
        matches!(self, SolveError::Timeout(_) | SolveError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    #[default]
    Geometric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    pub num_sweeps: usize,
    pub num_restarts: usize,
    /// `None` sets the start temperature to the largest `|dE|` of a proposal
    /// from a random starting state.
    pub initial_temperature: Option<f64>,
    pub final_temperature: f64,
    pub seed: u64,
    pub schedule: Schedule,
    /// Propose feasibility-preserving relocations on one-hot structured problems
    /// instead of single-bit flips.
    pub one_hot_moves: bool,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            num_sweeps: 2000,
            num_restarts: 16,
            initial_temperature: None,
            final_temperature: 0.1,
            seed: 0,
            schedule: Schedule::Geometric,
            one_hot_moves: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_assignment: Vec<bool>,
    pub best_energy: f64,
    pub wall_time: Duration,
    pub restarts_run: usize,
}

pub trait Solver: Send + Sync {
    fn solve(&self, problem: &QuboProblem) -> Result<SolveResult, SolveError>;

    /// True when solve time is dominated by an external service.
    fn is_remote(&self) -> bool {
        false
    }
}

/// Row-compressed symmetric coupling matrix without the diagonal.
struct Couplings {
    start: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl Couplings {
    fn new(problem: &QuboProblem) -> Self {
        let n = problem.num_vars();
        let mut degree = vec![0usize; n + 1];
        for &(a, b, _) in &problem.quadratic {
            degree[a + 1] += 1;
            degree[b + 1] += 1;
        }
        for k in 0..n {
            degree[k + 1] += degree[k];
        }
        let start = degree;
        let mut fill = start.clone();
        let mut col = vec![0u32; start[n]];
        let mut val = vec![0.0; start[n]];
        // `quadratic` is sorted by (a, b), so every row comes out sorted.
        for &(a, b, c) in &problem.quadratic {
            col[fill[a]] = b as u32;
            val[fill[a]] = c;
            fill[a] += 1;
        }
        for &(a, b, c) in &problem.quadratic {
            col[fill[b]] = a as u32;
            val[fill[b]] = c;
            fill[b] += 1;
        }
        for a in 0..n {
            let range = start[a]..start[a + 1];
            if !col[range.clone()].windows(2).all(|w| w[0] < w[1]) {
                let mut row: Vec<(u32, f64)> = range.clone().map(|k| (col[k], val[k])).collect();
                row.sort_unstable_by_key(|e| e.0);
                for (k, (c, v)) in range.zip(row) {
                    col[k] = c;
                    val[k] = v;
                }
            }
        }
        Couplings { start, col, val }
    }

    #[inline]
    fn row(&self, a: usize) -> (&[u32], &[f64]) {
        let r = self.start[a]..self.start[a + 1];
        (&self.col[r.clone()], &self.val[r])
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> f64 {
        let (cols, vals) = self.row(a);
        match cols.binary_search(&(b as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }
}

/// Annealing state: assignment, local fields `h_a = Q_aa + sum_b Q_ab x_b`,
/// and the running energy.
pub(crate) struct Walker<'a> {
    problem: &'a QuboProblem,
    couplings: &'a Couplings,
    x: Vec<bool>,
    field: Vec<f64>,
    energy: f64,
}

impl<'a> Walker<'a> {
    fn new(problem: &'a QuboProblem, couplings: &'a Couplings, x: Vec<bool>) -> Self {
        let mut field = problem.linear.clone();
        for &(a, b, c) in &problem.quadratic {
            if x[b] {
                field[a] += c;
            }
            if x[a] {
                field[b] += c;
            }
        }
        let energy = problem.energy(&x).expect("walker state matches problem size");
        Walker { problem, couplings, x, field, energy }
    }

    #[inline]
    fn sign(&self, a: usize) -> f64 {
        if self.x[a] {
            -1.0
        } else {
            1.0
        }
    }

    #[inline]
    fn flip_delta(&self, a: usize) -> f64 {
        self.sign(a) * self.field[a]
    }

    /// Energy change of flipping every variable in `vars` (distinct).
    fn multi_flip_delta(&self, vars: &[usize]) -> f64 {
        let mut total = 0.0;
        for (k, &a) in vars.iter().enumerate() {
            let mut h = self.field[a];
            for &b in &vars[..k] {
                h += self.couplings.get(a, b) * self.sign(b);
            }
            total += self.sign(a) * h;
        }
        total
    }

    fn flip(&mut self, a: usize) {
        let s = self.sign(a);
        self.energy += s * self.field[a];
        self.x[a] = !self.x[a];
        let (cols, vals) = self.couplings.row(a);
        for (&b, &c) in cols.iter().zip(vals) {
            self.field[b as usize] += s * c;
        }
    }

    fn exact_energy(&self) -> f64 {
        self.problem.energy(&self.x).expect("walker state matches problem size")
    }
}

/// Positions of each one-hot row and occupants of each slot, per layer.
struct OneHotState {
    rows: usize,
    slots: usize,
    pos: Vec<usize>,
    occ: Vec<Option<usize>>,
}

impl OneHotState {
    fn from_bits(layers: usize, rows: usize, slots: usize, x: &[bool]) -> Option<Self> {
        let mut pos = vec![0; layers * rows];
        let mut occ = vec![None; layers * slots];
        for l in 0..layers {
            for r in 0..rows {
                let base = (l * rows + r) * slots;
                let set: Vec<usize> = (0..slots).filter(|&s| x[base + s]).collect();
                if set.len() != 1 || occ[l * slots + set[0]].is_some() {
                    return None;
                }
                pos[l * rows + r] = set[0];
                occ[l * slots + set[0]] = Some(r);
            }
        }
        Some(OneHotState { rows, slots, pos, occ })
    }

    fn random_bits(layers: usize, rows: usize, slots: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
        let mut x = vec![false; layers * rows * slots];
        let mut order: Vec<usize> = (0..slots).collect();
        for l in 0..layers {
            order.shuffle(rng);
            for r in 0..rows {
                x[(l * rows + r) * slots + order[r]] = true;
            }
        }
        x
    }

    #[inline]
    fn var(&self, layer: usize, row: usize, slot: usize) -> usize {
        (layer * self.rows + row) * self.slots + slot
    }

    /// Flips that move `row` of `layer` onto `slot`, exchanging with its occupant.
    fn relocation(&self, layer: usize, row: usize, slot: usize, flips: &mut Vec<usize>) {
        flips.clear();
        let from = self.pos[layer * self.rows + row];
        if from == slot {
            return;
        }
        flips.push(self.var(layer, row, from));
        flips.push(self.var(layer, row, slot));
        if let Some(other) = self.occ[layer * self.slots + slot] {
            flips.push(self.var(layer, other, slot));
            flips.push(self.var(layer, other, from));
        }
    }

    fn commit(&mut self, layer: usize, row: usize, slot: usize) {
        let from = self.pos[layer * self.rows + row];
        let other = self.occ[layer * self.slots + slot];
        self.pos[layer * self.rows + row] = slot;
        self.occ[layer * self.slots + slot] = Some(row);
        self.occ[layer * self.slots + from] = other;
        if let Some(o) = other {
            self.pos[layer * self.rows + o] = from;
        }
    }
}

fn temperatures(cfg: &AnnealConfig, t0: f64) -> Vec<f64> {
    let tf = cfg.final_temperature;
    let t0 = t0.max(tf);
    let n = cfg.num_sweeps.max(1);
    match cfg.schedule {
        Schedule::Geometric => {
            if n == 1 {
                return vec![tf];
            }
            let ratio = (tf / t0).powf(1.0 / (n - 1) as f64);
            (0..n).map(|k| t0 * ratio.powi(k as i32)).collect()
        }
    }
}

#[inline]
fn metropolis(delta: f64, temperature: f64, rng: &mut ChaCha8Rng) -> bool {
    // exp(-40) is below the resolution of a uniform f64 draw.
    delta <= 0.0 || (delta < 40.0 * temperature && rng.gen::<f64>() < (-delta / temperature).exp())
}

struct RestartOutcome {
    assignment: Vec<bool>,
    energy: f64,
}

fn anneal_restart(
    problem: &QuboProblem,
    couplings: &Couplings,
    cfg: &AnnealConfig,
    restart: usize,
) -> RestartOutcome {
    let n = problem.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let shape = problem.codec.grid_shape().filter(|_| cfg.one_hot_moves);

    let hint = if restart == 0 { problem.hint.clone() } else { None };
    let start = match (hint, shape) {
        (Some(h), Some((l, r, s))) if OneHotState::from_bits(l, r, s, &h).is_some() => h,
        (Some(h), None) => h,
        (_, Some((l, r, s))) => OneHotState::random_bits(l, r, s, &mut rng),
        (_, None) => (0..n).map(|_| rng.gen::<bool>()).collect(),
    };
    let mut walker = Walker::new(problem, couplings, start);
    let mut order: Vec<usize> = (0..n).collect();
    let mut flips = Vec::with_capacity(4);

    let mut one_hot = shape.map(|(l, r, s)| {
        OneHotState::from_bits(l, r, s, &walker.x).expect("one-hot start state is feasible")
    });

    let t0 = cfg.initial_temperature.unwrap_or_else(|| match &one_hot {
        Some(state) => {
            let mut max = 0.0f64;
            for v in 0..n.min(4096) {
                let v = if n > 4096 { rng.gen_range(0..n) } else { v };
                let (layer, row, slot) = (v / (state.rows * state.slots), (v / state.slots) % state.rows, v % state.slots);
                state.relocation(layer, row, slot, &mut flips);
                if !flips.is_empty() {
                    max = max.max(walker.multi_flip_delta(&flips).abs());
                }
            }
            max
        }
        None => (0..n).map(|a| walker.flip_delta(a).abs()).fold(0.0, f64::max),
    });

    let mut best = walker.x.clone();
    let mut best_energy = walker.energy;
    for temperature in temperatures(cfg, t0) {
        order.shuffle(&mut rng);
        match one_hot.as_mut() {
            Some(state) => {
                let plane = state.rows * state.slots;
                for &v in &order {
                    let (layer, row, slot) = (v / plane, (v / state.slots) % state.rows, v % state.slots);
                    state.relocation(layer, row, slot, &mut flips);
                    if flips.is_empty() {
                        continue;
                    }
                    let delta = walker.multi_flip_delta(&flips);
                    if metropolis(delta, temperature, &mut rng) {
                        for &a in &flips {
                            walker.flip(a);
                        }
                        state.commit(layer, row, slot);
                    }
                }
            }
            None => {
                for &a in &order {
                    let delta = walker.flip_delta(a);
                    if metropolis(delta, temperature, &mut rng) {
                        walker.flip(a);
                    }
                }
            }
        }
        if walker.energy < best_energy {
            best_energy = walker.energy;
            best.copy_from_slice(&walker.x);
        }
    }
    debug_assert!(
        (walker.energy - walker.exact_energy()).abs() <= 1e-6 * (1.0 + walker.energy.abs()),
        "incremental energy drifted: {} vs {}",
        walker.energy,
        walker.exact_energy()
    );
    let energy = problem.energy(&best).expect("sized to problem");
    RestartOutcome { assignment: best, energy }
}

/// Simulated annealing over `cfg.num_restarts` independent restarts; the
/// lowest-energy assignment wins, earliest restart on ties.
pub fn solve_sa(problem: &QuboProblem, cfg: &AnnealConfig) -> SolveResult {
    let clock = Instant::now();
    let couplings = Couplings::new(problem);
    let restarts = cfg.num_restarts.max(1);
    let mut best: Option<RestartOutcome> = None;
    for restart in 0..restarts {
        let outcome = anneal_restart(problem, &couplings, cfg, restart);
        if best.as_ref().is_none_or(|b| outcome.energy < b.energy) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");
    SolveResult {
        best_assignment: best.assignment,
        best_energy: best.energy,
        wall_time: clock.elapsed(),
        restarts_run: restarts,
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulatedAnnealer {
    pub config: AnnealConfig,
}

impl SimulatedAnnealer {
    pub fn new(config: AnnealConfig) -> Self {
        SimulatedAnnealer { config }
    }
}

impl Solver for SimulatedAnnealer {
    fn solve(&self, problem: &QuboProblem) -> Result<SolveResult, SolveError> {
        Ok(solve_sa(problem, &self.config))
    }
}

#[derive(Deserialize)]
struct RemoteResponse {
    assignment: Vec<serde_json::Value>,
    energy: f64,
}

fn parse_bit(v: &serde_json::Value) -> Option<bool> {
    match v {
        serde_json::Value::Bool(b) => Some(*b),
        serde_json::Value::Number(n) => match n.as_u64() {
            Some(0) => Some(false),
            Some(1) => Some(true),
            _ => None,
        },
        _ => None,
    }
}

/// Sends the QUBO export to `endpoint` and validates the returned assignment.
pub fn solve_remote(problem: &QuboProblem, endpoint: &str, timeout: Duration) -> Result<SolveResult, SolveError> {
    let clock = Instant::now();
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let response = agent
        .post(endpoint)
        .set("Content-Type", "application/json")
        .send_string(&problem.to_json())
        .map_err(|e| match e {
            ureq::Error::Status(code, _) => SolveError::Transport(format!("HTTP status {code}")),
            ureq::Error::Transport(t) => {
                let message = t.to_string();
                if message.contains("timed out") || message.contains("Timeout") {
                    SolveError::Timeout(timeout)
                } else {
                    SolveError::Transport(message)
                }
            }
        })?;
    let body = response.into_string().map_err(|e| SolveError::Transport(e.to_string()))?;
    let parsed: RemoteResponse =
        serde_json::from_str(&body).map_err(|e| SolveError::MalformedResponse(e.to_string()))?;
    let assignment: Vec<bool> = parsed
        .assignment
        .iter()
        .map(parse_bit)
        .collect::<Option<_>>()
        .ok_or_else(|| SolveError::MalformedResponse("assignment entries must be 0 or 1".into()))?;
    let energy = problem.energy(&assignment)?;
    if (energy - parsed.energy).abs() > 1e-6 * (1.0 + energy.abs()) {
        warn!("remote solver reported energy {} but the assignment evaluates to {energy}; using the local value", parsed.energy);
    }
    Ok(SolveResult { best_assignment: assignment, best_energy: energy, wall_time: clock.elapsed(), restarts_run: 1 })
}

/// Remote solver that falls back to a local annealer when the service cannot be reached.
#[derive(Debug, Clone)]
pub struct RemoteSolver {
    pub endpoint: String,
    pub timeout: Duration,
    pub fallback: Option<SimulatedAnnealer>,
}

impl Solver for RemoteSolver {
    fn solve(&self, problem: &QuboProblem) -> Result<SolveResult, SolveError> {
        match solve_remote(problem, &self.endpoint, self.timeout) {
            Err(e) if e.is_transport() && self.fallback.is_some() => {
                warn!("remote solver at {} failed ({e}); falling back to simulated annealing", self.endpoint);
                self.fallback.as_ref().expect("checked").solve(problem)
            }
            other => other,
        }
    }

    fn is_remote(&self) -> bool {
        true
    }
}
