//! QUBO-driven qubit placement and SWAP routing for quantum circuits.
//!
//! Placement and routing are posed as quadratic unconstrained binary
//! optimisation problems and handed to a [`anneal::Solver`]: the built-in
//! simulated annealer or a remote Ising-machine service.

pub mod anneal;
pub mod bench;
pub mod circuit;
pub mod layout;
pub mod qubo;
pub mod route;
pub mod topology;
pub mod verify;
