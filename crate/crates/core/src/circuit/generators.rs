//! Seeded generators for the benchmark circuit families.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Circuit, SingleOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Ghz,
    Bv,
    Grover,
    QaoaGrid,
    QaoaRandom,
    Qv,
    Asp,
}

impl Family {
    pub const ALL: [Family; 7] =
        [Family::Bv, Family::Grover, Family::QaoaGrid, Family::Ghz, Family::QaoaRandom, Family::Qv, Family::Asp];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Ghz => "ghz",
            Family::Bv => "bv",
            Family::Grover => "grover",
            Family::QaoaGrid => "qaoa_grid",
            Family::QaoaRandom => "qaoa_random",
            Family::Qv => "qv",
            Family::Asp => "asp",
        }
    }

    /// Qubit count used for this family in the standard benchmark table.
    pub fn table_size(&self) -> usize {
        match self {
            Family::Bv => 30,
            Family::Grover => 4,
            Family::QaoaGrid => 25,
            Family::Ghz => 50,
            Family::QaoaRandom => 30,
            Family::Qv => 10,
            Family::Asp => 50,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ghz" => Family::Ghz,
            "bv" => Family::Bv,
            "grover" => Family::Grover,
            "qaoa_grid" => Family::QaoaGrid,
            "qaoa_random" | "qaoa_rand" | "qaoa" => Family::QaoaRandom,
            "qv" => Family::Qv,
            "asp" => Family::Asp,
            _ => return Err(GenerateError::UnknownFamily(s.to_string())),
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("unknown benchmark family `{0}`")]
    UnknownFamily(String),
    #[error("invalid size {n} for {family}: {reason}")]
    InvalidSize { family: Family, n: usize, reason: &'static str },
    #[error("malformed benchmark spec `{0}` (expected family:n[:seed])")]
    MalformedSpec(String),
}

/// `family:n[:seed]`, as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn generate(&self) -> Result<Circuit, GenerateError> {
        generate_benchmark(self.family, self.n, self.seed)
    }
}

impl FromStr for BenchmarkSpec {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || GenerateError::MalformedSpec(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(malformed());
        }
        let family = parts[0].parse()?;
        let n = parts[1].parse().map_err(|_| malformed())?;
        let seed = match parts.get(2) {
            Some(text) => text.parse().map_err(|_| malformed())?,
            None => 0,
        };
        Ok(BenchmarkSpec { family, n, seed })
    }
}

/// Builds a benchmark circuit. Output is a pure function of the arguments.
pub fn generate_benchmark(family: Family, n: usize, seed: u64) -> Result<Circuit, GenerateError> {
    if n < 2 {
        return Err(GenerateError::InvalidSize { family, n, reason: "at least 2 qubits are required" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let circuit = match family {
        Family::Ghz => ghz(n),
        Family::Bv => bv(n, &mut rng),
        Family::Grover => grover(n, family)?,
        Family::QaoaGrid => qaoa_grid(n, &mut rng)?,
        Family::QaoaRandom => qaoa_random(n, &mut rng)?,
        Family::Qv => quantum_volume(n, &mut rng),
        Family::Asp => asp(n),
    };
    Ok(circuit)
}

fn ghz(n: usize) -> Circuit {
    let mut c = Circuit::new(format!("ghz_n{n}"), n);
    c.apply(SingleOp::H, 0);
    for k in 0..n - 1 {
        c.cx(k, k + 1);
    }
    c
}

/// Bernstein-Vazirani with `n - 1` data qubits and the ancilla on the last
/// qubit. The secret string has `floor(3n/5)` ones at seed-chosen positions.
fn bv(n: usize, rng: &mut ChaCha8Rng) -> Circuit {
    let data = n - 1;
    let ancilla = n - 1;
    let weight = (3 * n / 5).clamp(1, data);
    let mut secret: Vec<usize> = index::sample(rng, data, weight).into_vec();
    secret.sort_unstable();

    let mut c = Circuit::new(format!("bv_n{n}"), n);
    c.apply(SingleOp::X, ancilla);
    for q in 0..n {
        c.apply(SingleOp::H, q);
    }
    for &q in &secret {
        c.cx(q, ancilla);
    }
    for q in 0..data {
        c.apply(SingleOp::H, q);
    }
    for q in 0..data {
        c.measure(q, q);
    }
    c
}

/// Applies `exp(i theta)` to the all-ones state of `qubits` through a
/// Gray-code parity network of `2^m - 2` CNOTs.
///
/// Uses `x_1 ... x_m = 2^{1-m} sum_{S != {}} (-1)^{|S|+1} parity(S)`: each
/// level `k` walks the subsets whose largest member is `qubits[k-1]`,
/// accumulating their parities on that qubit.
pub(crate) fn multi_controlled_phase(c: &mut Circuit, qubits: &[usize], theta: f64) {
    let m = qubits.len();
    let unit = theta / (1u64 << (m - 1)) as f64;
    for k in 1..=m {
        let target = qubits[k - 1];
        let controls = &qubits[..k - 1];
        let codes = 1usize << controls.len();
        for i in 0..codes {
            if i > 0 {
                let flipped = i.trailing_zeros() as usize;
                c.cx(controls[flipped], target);
            }
            let gray = i ^ (i >> 1);
            let size = 1 + gray.count_ones();
            let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
            c.apply_with(SingleOp::U1, target, &[sign * unit]);
        }
        if !controls.is_empty() {
            c.cx(controls[controls.len() - 1], target);
        }
    }
}

fn grover(n: usize, family: Family) -> Result<Circuit, GenerateError> {
    if n > 20 {
        return Err(GenerateError::InvalidSize { family, n, reason: "grover is limited to 20 qubits" });
    }
    let iterations = ((PI / 4.0) * ((1u64 << n) as f64).sqrt()).floor() as usize;
    let qubits: Vec<usize> = (0..n).collect();
    let mut c = Circuit::new(format!("grover_n{n}"), n);
    for &q in &qubits {
        c.apply(SingleOp::H, q);
    }
    for _ in 0..iterations {
        multi_controlled_phase(&mut c, &qubits, PI);
        for &q in &qubits {
            c.apply(SingleOp::H, q).apply(SingleOp::X, q);
        }
        multi_controlled_phase(&mut c, &qubits, PI);
        for &q in &qubits {
            c.apply(SingleOp::X, q).apply(SingleOp::H, q);
        }
    }
    Ok(c)
}

/// One QAOA round: `H` layer, `CNOT-RZ-CNOT` per edge, `RX` mixer.
fn qaoa_layer(name: String, n: usize, edges: &[(usize, usize)], rng: &mut ChaCha8Rng) -> Circuit {
    let gamma: f64 = rng.gen_range(0.0..PI);
    let beta: f64 = rng.gen_range(0.0..PI);
    let mut c = Circuit::new(name, n);
    for q in 0..n {
        c.apply(SingleOp::H, q);
    }
    for &(u, v) in edges {
        c.cx(u, v).apply_with(SingleOp::Rz, v, &[2.0 * gamma]).cx(u, v);
    }
    for q in 0..n {
        c.apply_with(SingleOp::Rx, q, &[2.0 * beta]);
    }
    c
}

fn qaoa_grid(n: usize, rng: &mut ChaCha8Rng) -> Result<Circuit, GenerateError> {
    let rows = (2..=n).take_while(|r| r * r <= n).filter(|r| n.is_multiple_of(*r)).last().ok_or(
        GenerateError::InvalidSize { family: Family::QaoaGrid, n, reason: "n must factor as rows x cols with rows >= 2" },
    )?;
    let cols = n / rows;
    let mut edges = Vec::new();
    for r in 0..rows {
        for col in 0..cols {
            let q = r * cols + col;
            if col + 1 < cols {
                edges.push((q, q + 1));
            }
            if r + 1 < rows {
                edges.push((q, q + cols));
            }
        }
    }
    Ok(qaoa_layer(format!("qaoa_grid_n{n}"), n, &edges, rng))
}

/// Random 3-regular graph by the pairing model, rejecting loops and multi-edges.
fn random_cubic_graph(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    loop {
        let mut points: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        points.shuffle(rng);
        let mut edges: Vec<(usize, usize)> =
            points.chunks(2).map(|p| (p[0].min(p[1]), p[0].max(p[1]))).collect();
        if edges.iter().any(|(u, v)| u == v) {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return edges;
    }
}

fn qaoa_random(n: usize, rng: &mut ChaCha8Rng) -> Result<Circuit, GenerateError> {
    if n < 4 || n % 2 == 1 {
        return Err(GenerateError::InvalidSize {
            family: Family::QaoaRandom,
            n,
            reason: "a 3-regular graph needs an even node count >= 4",
        });
    }
    let edges = random_cubic_graph(n, rng);
    Ok(qaoa_layer(format!("qaoa_random_n{n}"), n, &edges, rng))
}

fn random_u3(c: &mut Circuit, q: usize, rng: &mut ChaCha8Rng) {
    let angles = [rng.gen_range(0.0..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)];
    c.apply_with(SingleOp::U3, q, &angles);
}

/// Quantum volume with depth equal to width. Each block is a three-CNOT
/// two-qubit template with random single-qubit dressing.
fn quantum_volume(n: usize, rng: &mut ChaCha8Rng) -> Circuit {
    let mut c = Circuit::new(format!("qv_n{n}"), n);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        order.shuffle(rng);
        for pair in order.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            random_u3(&mut c, a, rng);
            random_u3(&mut c, b, rng);
            c.cx(b, a);
            c.apply_with(SingleOp::Rz, a, &[rng.gen_range(-PI..PI)]);
            c.apply_with(SingleOp::Ry, b, &[rng.gen_range(-PI..PI)]);
            c.cx(a, b);
            c.apply_with(SingleOp::Ry, b, &[rng.gen_range(-PI..PI)]);
            c.cx(b, a);
            random_u3(&mut c, a, rng);
            random_u3(&mut c, b, rng);
        }
    }
    c
}

/// Adiabatic state preparation on a chain: three Trotter steps of an `RX`
/// layer followed by even then odd nearest-neighbour `ZZ` bonds.
fn asp(n: usize) -> Circuit {
    const STEPS: usize = 3;
    let mut c = Circuit::new(format!("asp_n{n}"), n);
    for q in 0..n {
        c.apply(SingleOp::H, q);
    }
    for step in 1..=STEPS {
        let s = step as f64 / STEPS as f64;
        let dt = 1.0 / STEPS as f64;
        for q in 0..n {
            c.apply_with(SingleOp::Rx, q, &[2.0 * (1.0 - s) * dt]);
        }
        for parity in [0, 1] {
            for q in (parity..n - 1).step_by(2) {
                c.cx(q, q + 1).apply_with(SingleOp::Rz, q + 1, &[2.0 * s * dt]).cx(q, q + 1);
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::compute_layers;

    #[test]
    fn table_cnot_counts() {
        let expected = [
            (Family::Bv, 18),
            (Family::Grover, 84),
            (Family::QaoaGrid, 80),
            (Family::Ghz, 49),
            (Family::QaoaRandom, 90),
            (Family::Qv, 150),
            (Family::Asp, 294),
        ];
        for (family, cnots) in expected {
            let c = generate_benchmark(family, family.table_size(), 0).unwrap();
            assert_eq!(c.cnot_count(), cnots, "{family}");
            assert!(c.validate().is_ok());
        }
    }

    #[test]
    fn qaoa_random_count_is_seed_independent() {
        for seed in 0..10 {
            assert_eq!(generate_benchmark(Family::QaoaRandom, 30, seed).unwrap().cnot_count(), 90);
        }
    }

    #[test]
    fn cubic_graph_is_regular() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let edges = random_cubic_graph(30, &mut rng);
        let mut degree = [0usize; 30];
        for (u, v) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        assert!(degree.iter().all(|&d| d == 3));
    }

    #[test]
    fn deterministic_in_seed() {
        for family in Family::ALL {
            let n = family.table_size();
            assert_eq!(generate_benchmark(family, n, 7), generate_benchmark(family, n, 7));
        }
        assert_ne!(generate_benchmark(Family::Qv, 10, 1), generate_benchmark(Family::Qv, 10, 2));
    }

    #[test]
    fn bv_cnots_share_target_and_layers_increase() {
        let c = generate_benchmark(Family::Bv, 30, 0).unwrap();
        let layers = compute_layers(&c);
        let cnot_layers: Vec<usize> = c
            .gates
            .iter()
            .enumerate()
            .filter_map(|(k, g)| match g {
                crate::circuit::Gate::Cnot { target, .. } => {
                    assert_eq!(*target, 29);
                    Some(layers.layer(k))
                }
                _ => None,
            })
            .collect();
        assert!(cnot_layers.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invalid_sizes() {
        assert!(generate_benchmark(Family::Ghz, 1, 0).is_err());
        assert!(generate_benchmark(Family::QaoaGrid, 7, 0).is_err());
        assert!(generate_benchmark(Family::QaoaRandom, 9, 0).is_err());
        assert!(generate_benchmark(Family::QaoaGrid, 6, 0).is_ok());
    }

    #[test]
    fn spec_parsing() {
        let spec: BenchmarkSpec = "ghz:50:3".parse().unwrap();
        assert_eq!(spec, BenchmarkSpec { family: Family::Ghz, n: 50, seed: 3 });
        let spec: BenchmarkSpec = "qaoa-grid:25".parse().unwrap();
        assert_eq!(spec.seed, 0);
        assert!("ghz".parse::<BenchmarkSpec>().is_err());
        assert!("warp:5:1".parse::<BenchmarkSpec>().is_err());
    }
}
