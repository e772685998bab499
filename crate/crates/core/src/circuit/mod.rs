//! Circuit intermediate representation.
//!
//! A [`Circuit`] is a totally ordered list of gates over a contiguous index
//! space of qubits. The same type is used for logical input circuits and for
//! routed output circuits over physical qubits.

mod generators;
mod qasm;

use std::collections::BTreeMap;
use std::fmt;

pub use generators::{generate_benchmark, BenchmarkSpec, Family, GenerateError};
pub use qasm::{emit_qasm, parse_qasm, QasmError};

/// Decay constant of the first-interaction weight `w(t) = w_max * exp(-decay * t) + 1`.
pub const DEFAULT_WEIGHT_DECAY: f64 = 0.1;

/// Default amplitude of the first-interaction weight.
pub const DEFAULT_W_MAX: f64 = 10.0;

/// Single-qubit operations, including the non-unitary `measure` and `barrier`
/// markers which are carried through routing untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingleOp {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    U1,
    U2,
    U3,
    Id,
    Measure { clbit: usize },
    Barrier,
}

impl SingleOp {
    pub fn name(&self) -> &'static str {
        match self {
            SingleOp::H => "h",
            SingleOp::X => "x",
            SingleOp::Y => "y",
            SingleOp::Z => "z",
            SingleOp::S => "s",
            SingleOp::Sdg => "sdg",
            SingleOp::T => "t",
            SingleOp::Tdg => "tdg",
            SingleOp::Rx => "rx",
            SingleOp::Ry => "ry",
            SingleOp::Rz => "rz",
            SingleOp::U1 => "u1",
            SingleOp::U2 => "u2",
            SingleOp::U3 => "u3",
            SingleOp::Id => "id",
            SingleOp::Measure { .. } => "measure",
            SingleOp::Barrier => "barrier",
        }
    }

    /// Looks up a parameterised unitary gate by its qelib1 name.
    pub fn from_gate_name(name: &str) -> Option<SingleOp> {
        Some(match name {
            "h" => SingleOp::H,
            "x" => SingleOp::X,
            "y" => SingleOp::Y,
            "z" => SingleOp::Z,
            "s" => SingleOp::S,
            "sdg" => SingleOp::Sdg,
            "t" => SingleOp::T,
            "tdg" => SingleOp::Tdg,
            "rx" => SingleOp::Rx,
            "ry" => SingleOp::Ry,
            "rz" => SingleOp::Rz,
            "u1" => SingleOp::U1,
            "u2" => SingleOp::U2,
            "u3" | "U" => SingleOp::U3,
            "id" => SingleOp::Id,
            _ => return None,
        })
    }

    pub fn num_params(&self) -> usize {
        match self {
            SingleOp::Rx | SingleOp::Ry | SingleOp::Rz | SingleOp::U1 => 1,
            SingleOp::U2 => 2,
            SingleOp::U3 => 3,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
    Single { op: SingleOp, qubit: usize, params: Vec<f64> },
}

impl Gate {
    pub fn single(op: SingleOp, qubit: usize) -> Gate {
        Gate::Single { op, qubit, params: Vec::new() }
    }

    pub fn rotation(op: SingleOp, qubit: usize, params: Vec<f64>) -> Gate {
        Gate::Single { op, qubit, params }
    }

    /// First operand and, for two-qubit gates, the second.
    pub fn operands(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Cnot { control, target } => (control, Some(target)),
            Gate::Swap { a, b } => (a, Some(b)),
            Gate::Single { qubit, .. } => (qubit, None),
        }
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        let (a, b) = self.operands();
        std::iter::once(a).chain(b)
    }

    /// Operand pair of a two-qubit gate.
    pub fn pair(&self) -> Option<(usize, usize)> {
        match self.operands() {
            (a, Some(b)) => Some((a, b)),
            _ => None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.pair().is_some()
    }

    /// Rewrites every operand through `f`.
    pub fn map_qubits(&self, f: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::Cnot { control, target } => Gate::Cnot { control: f(*control), target: f(*target) },
            Gate::Swap { a, b } => Gate::Swap { a: f(*a), b: f(*b) },
            Gate::Single { op, qubit, params } => Gate::Single { op: *op, qubit: f(*qubit), params: params.clone() },
        }
    }

    /// Cost of the gate in CNOTs: SWAP = 3, CNOT = 1, everything else 0.
    pub fn cnot_cost(&self) -> usize {
        match self {
            Gate::Cnot { .. } => 1,
            Gate::Swap { .. } => 3,
            Gate::Single { .. } => 0,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Cnot { control, target } => write!(f, "cx {control},{target}"),
            Gate::Swap { a, b } => write!(f, "swap {a},{b}"),
            Gate::Single { op, qubit, params } => {
                write!(f, "{}", op.name())?;
                if !params.is_empty() {
                    let joined: Vec<String> = params.iter().map(|p| p.to_string()).collect();
                    write!(f, "({})", joined.join(","))?;
                }
                write!(f, " {qubit}")?;
                if let SingleOp::Measure { clbit } = op {
                    write!(f, " -> {clbit}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub name: String,
    pub num_qubits: usize,
    pub num_clbits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize) -> Self {
        Circuit { name: name.into(), num_qubits, num_clbits: 0, gates: Vec::new() }
    }

    /// Appends a gate.
    ///
    /// Panics if an operand is out of range or a two-qubit gate repeats an
    /// operand; use [`Circuit::validate`] on circuits assembled by hand.
    pub fn push(&mut self, gate: Gate) -> &mut Self {
        for q in gate.qubits() {
            assert!(q < self.num_qubits, "qubit {q} out of range for {} qubits", self.num_qubits);
        }
        if let Some((a, b)) = gate.pair() {
            assert_ne!(a, b, "two-qubit gate on a single qubit {a}");
        }
        if let Gate::Single { op: SingleOp::Measure { clbit }, .. } = gate {
            self.num_clbits = self.num_clbits.max(clbit + 1);
        }
        self.gates.push(gate);
        self
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(Gate::Cnot { control, target })
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.push(Gate::Swap { a, b })
    }

    pub fn apply(&mut self, op: SingleOp, qubit: usize) -> &mut Self {
        self.push(Gate::single(op, qubit))
    }

    pub fn apply_with(&mut self, op: SingleOp, qubit: usize, params: &[f64]) -> &mut Self {
        self.push(Gate::rotation(op, qubit, params.to_vec()))
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> &mut Self {
        self.push(Gate::single(SingleOp::Measure { clbit }, qubit))
    }

    /// Checks the operand invariants of every gate.
    pub fn validate(&self) -> Result<(), String> {
        for (k, gate) in self.gates.iter().enumerate() {
            for q in gate.qubits() {
                if q >= self.num_qubits {
                    return Err(format!("gate {k} ({gate}) uses qubit {q} >= {}", self.num_qubits));
                }
            }
            if let Some((a, b)) = gate.pair() {
                if a == b {
                    return Err(format!("gate {k} ({gate}) repeats qubit {a}"));
                }
            }
        }
        Ok(())
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }

    pub fn swap_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Swap { .. })).count()
    }

    /// Total CNOT-equivalent cost, counting each SWAP as three CNOTs.
    pub fn equivalent_cnot(&self) -> usize {
        self.gates.iter().map(Gate::cnot_cost).sum()
    }

    pub fn two_qubit_gates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.gates.iter().filter_map(Gate::pair)
    }
}

/// ASAP layer index of every gate of a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAssignment {
    pub layer_of_gate: Vec<usize>,
}

impl LayerAssignment {
    pub fn layer(&self, gate_index: usize) -> usize {
        self.layer_of_gate[gate_index]
    }

    /// Number of layers; zero for an empty circuit.
    pub fn depth(&self) -> usize {
        self.layer_of_gate.iter().max().map_or(0, |m| m + 1)
    }
}

/// Assigns each gate the earliest layer after every earlier gate sharing an operand.
pub fn compute_layers(circuit: &Circuit) -> LayerAssignment {
    compute_layers_of(&circuit.gates, circuit.num_qubits)
}

pub(crate) fn compute_layers_of(gates: &[Gate], num_qubits: usize) -> LayerAssignment {
    let mut next_free = vec![0usize; num_qubits];
    let mut layer_of_gate = Vec::with_capacity(gates.len());
    for gate in gates {
        let layer = gate.qubits().map(|q| next_free[q]).max().unwrap_or(0);
        for q in gate.qubits() {
            next_free[q] = layer + 1;
        }
        layer_of_gate.push(layer);
    }
    LayerAssignment { layer_of_gate }
}

/// Interaction weight of an unordered logical pair, keyed `(min, max)`.
pub type InteractionWeights = BTreeMap<(usize, usize), f64>;

/// Weight of a pair whose first two-qubit gate sits in layer `t`.
pub fn interaction_weight(t: usize, w_max: f64, decay: f64) -> f64 {
    w_max * (-decay * t as f64).exp() + 1.0
}

/// Weights every interacting pair by the layer of its first two-qubit gate.
/// Pairs that never interact are absent.
pub fn first_interaction_weights(circuit: &Circuit, w_max: f64) -> InteractionWeights {
    first_interaction_weights_with_decay(&circuit.gates, circuit.num_qubits, w_max, DEFAULT_WEIGHT_DECAY)
}

pub fn first_interaction_weights_with_decay(
    gates: &[Gate],
    num_qubits: usize,
    w_max: f64,
    decay: f64,
) -> InteractionWeights {
    let layers = compute_layers_of(gates, num_qubits);
    let mut weights = InteractionWeights::new();
    for (k, gate) in gates.iter().enumerate() {
        if let Some((a, b)) = gate.pair() {
            weights
                .entry((a.min(b), a.max(b)))
                .or_insert_with(|| interaction_weight(layers.layer(k), w_max, decay));
        }
    }
    weights
}
