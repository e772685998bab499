//! Benchmark sweeps and their CSV / JSON reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::Solver;
use crate::circuit::{BenchmarkSpec, Circuit, Family};
use crate::route::{transpile, Strategy, TranspileConfig, TranspileResult};
use crate::topology::CouplingGraph;
use crate::verify::{check_conformance, verify_equivalence};

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 11] = [
    "circuit",
    "qubits",
    "strategy",
    "seed",
    "original_cnot",
    "swap_count",
    "equivalent_cnot",
    "map_ms",
    "route_ms",
    "total_ms",
    "verified",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("row {circuit}/{strategy}/{seed}: equivalent_cnot {equivalent} != {original} + 3 x {swaps}")]
    Inconsistent { circuit: String, strategy: String, seed: u64, equivalent: usize, original: usize, swaps: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Deterministic part of one benchmark run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchResult {
    pub circuit: String,
    pub qubits: usize,
    pub strategy: String,
    pub seed: u64,
    pub original_cnot: usize,
    pub swap_count: usize,
    pub equivalent_cnot: usize,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Wall-clock phases of one run, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchTiming {
    pub map_ms: f64,
    pub route_ms: f64,
    pub decode_ms: f64,
    pub remote_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub result: BenchResult,
    pub timing: BenchTiming,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    circuit: &'a str,
    qubits: usize,
    strategy: &'a str,
    seed: u64,
    original_cnot: usize,
    swap_count: usize,
    equivalent_cnot: usize,
    map_ms: String,
    route_ms: String,
    total_ms: String,
    verified: bool,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    results: Vec<&'a BenchResult>,
    timings: Vec<&'a BenchTiming>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn new(mut rows: Vec<BenchRow>) -> Self {
        rows.sort_by(|x, y| {
            let (a, b) = (&x.result, &y.result);
            (&a.circuit, &a.strategy, a.seed).cmp(&(&b.circuit, &b.strategy, b.seed))
        });
        BenchReport { rows }
    }

    pub fn all_verified(&self) -> bool {
        self.rows.iter().all(|r| r.result.verified)
    }

    fn check(&self) -> Result<(), ReportError> {
        for row in &self.rows {
            let r = &row.result;
            if r.error.is_none() && r.equivalent_cnot != r.original_cnot + 3 * r.swap_count {
                return Err(ReportError::Inconsistent {
                    circuit: r.circuit.clone(),
                    strategy: r.strategy.clone(),
                    seed: r.seed,
                    equivalent: r.equivalent_cnot,
                    original: r.original_cnot,
                    swaps: r.swap_count,
                });
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        self.check()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        for row in &self.rows {
            let (r, t) = (&row.result, &row.timing);
            w.serialize(CsvRow {
                circuit: &r.circuit,
                qubits: r.qubits,
                strategy: &r.strategy,
                seed: r.seed,
                original_cnot: r.original_cnot,
                swap_count: r.swap_count,
                equivalent_cnot: r.equivalent_cnot,
                map_ms: format!("{:.3}", t.map_ms),
                route_ms: format!("{:.3}", t.route_ms),
                total_ms: format!("{:.3}", t.total_ms),
                verified: r.verified,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// `results` is identical across runs with the same inputs; `timings`
    /// holds the wall-clock data in the same row order.
    pub fn to_json(&self) -> Result<String, ReportError> {
        self.check()?;
        let report = JsonReport {
            results: self.rows.iter().map(|r| &r.result).collect(),
            timings: self.rows.iter().map(|r| &r.timing).collect(),
        };
        Ok(serde_json::to_string_pretty(&report)?)
    }
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// One named circuit of a sweep.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub name: String,
    pub circuit: Circuit,
}

impl BenchCase {
    pub fn from_spec(spec: &BenchmarkSpec) -> Result<Self, crate::circuit::GenerateError> {
        Ok(BenchCase { name: spec.family.name().to_string(), circuit: spec.generate()? })
    }
}

/// All seven families at their reference sizes, with circuit seed `circuit_seed`.
pub fn table2_suite(circuit_seed: u64) -> Vec<BenchCase> {
    Family::ALL
        .iter()
        .map(|&family| {
            BenchCase::from_spec(&BenchmarkSpec { family, n: family.table_size(), seed: circuit_seed })
                .expect("reference sizes are valid")
        })
        .collect()
}

/// Transpiles and verifies one case; failures become a row, not an error.
pub fn run_case(
    case: &BenchCase,
    graph: &CouplingGraph,
    strategy: Strategy,
    seed: u64,
    cfg: &TranspileConfig,
    solver: &dyn Solver,
) -> (BenchRow, Option<TranspileResult>) {
    let mut result = BenchResult {
        circuit: case.name.clone(),
        qubits: case.circuit.num_qubits,
        strategy: strategy.name().to_string(),
        seed,
        original_cnot: case.circuit.equivalent_cnot(),
        swap_count: 0,
        equivalent_cnot: 0,
        verified: false,
        error: None,
    };
    let mut timing = BenchTiming::default();
    let mut cfg = cfg.clone();
    cfg.heuristic.seed = seed;
    let outcome = transpile(&case.circuit, graph, strategy, &cfg, solver);
    let transpiled = match outcome {
        Ok(r) => {
            result.swap_count = r.swap_count;
            result.equivalent_cnot = r.equivalent_cnot;
            timing = BenchTiming {
                map_ms: ms(r.timings.mapping_solve),
                route_ms: ms(r.timings.routing_solve),
                decode_ms: ms(r.timings.decode),
                remote_ms: ms(r.timings.remote_solve),
                total_ms: ms(r.timings.total),
            };
            let check = verify_equivalence(&case.circuit, &r)
                .map_err(|m| m.to_string())
                .and_then(|_| check_conformance(&r.circuit, graph));
            match check {
                Ok(()) => result.verified = true,
                Err(e) => result.error = Some(format!("verification failed: {e}")),
            }
            Some(r)
        }
        Err(e) => {
            result.error = Some(e.to_string());
            None
        }
    };
    (BenchRow { result, timing }, transpiled)
}

/// The cross product of cases, strategies and seeds. `solver_for_seed`
/// supplies the solver used for a given seed.
pub fn run_bench(
    cases: &[BenchCase],
    graph: &CouplingGraph,
    strategies: &[Strategy],
    seeds: &[u64],
    cfg: &TranspileConfig,
    solver_for_seed: &dyn Fn(u64) -> Box<dyn Solver>,
) -> BenchReport {
    let mut rows = Vec::new();
    for case in cases {
        for &strategy in strategies {
            for &seed in seeds {
                let solver = solver_for_seed(seed);
                let (row, _) = run_case(case, graph, strategy, seed, cfg, solver.as_ref());
                log::info!(
                    "{} {} seed {}: equivalent_cnot {} verified {}",
                    row.result.circuit,
                    row.result.strategy,
                    seed,
                    row.result.equivalent_cnot,
                    row.result.verified
                );
                rows.push(row);
            }
        }
    }
    BenchReport::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anneal::{AnnealConfig, SimulatedAnnealer};

    fn row(circuit: &str, strategy: &str, seed: u64, swaps: usize) -> BenchRow {
        BenchRow {
            result: BenchResult {
                circuit: circuit.into(),
                qubits: 3,
                strategy: strategy.into(),
                seed,
                original_cnot: 2,
                swap_count: swaps,
                equivalent_cnot: 2 + 3 * swaps,
                verified: true,
                error: None,
            },
            timing: BenchTiming { total_ms: 1.5, ..Default::default() },
        }
    }

    #[test]
    fn rows_sorted_and_csv_header_fixed() {
        let report = BenchReport::new(vec![row("qv", "full", 1, 0), row("ghz", "hybrid", 0, 1), row("ghz", "full", 2, 2)]);
        let order: Vec<_> = report.rows.iter().map(|r| (r.result.circuit.as_str(), r.result.seed)).collect();
        assert_eq!(order, vec![("ghz", 2), ("ghz", 0), ("qv", 1)]);
        let csv = report.to_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(csv.lines().count(), 4);
        assert!(BenchReport::default().to_csv().unwrap().starts_with("circuit,qubits"));
    }

    #[test]
    fn inconsistent_row_rejected() {
        let mut bad = row("ghz", "full", 0, 1);
        bad.result.equivalent_cnot += 1;
        assert!(matches!(BenchReport::new(vec![bad]).to_json(), Err(ReportError::Inconsistent { .. })));
    }

    #[test]
    fn json_results_are_deterministic() {
        let g = CouplingGraph::grid(3, 3).unwrap();
        let cases = vec![BenchCase::from_spec(&"ghz:6:0".parse().unwrap()).unwrap()];
        let factory = |seed: u64| -> Box<dyn Solver> {
            Box::new(SimulatedAnnealer::new(AnnealConfig { num_sweeps: 50, num_restarts: 2, seed, ..Default::default() }))
        };
        let run = || run_bench(&cases, &g, &Strategy::ALL, &[0, 1], &TranspileConfig::default(), &factory);
        let (a, b) = (run(), run());
        assert!(a.all_verified());
        assert_eq!(a.rows.len(), 6);
        let results = |r: &BenchReport| {
            let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
            v["results"].clone()
        };
        assert_eq!(results(&a), results(&b));
    }
}
