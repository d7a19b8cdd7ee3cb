//! Matrix-free simulation of adiabatic quantum algorithms on spin systems.
//!
//! The crate evolves a state vector under the linear interpolation
//! `H(g) = (1 - g) H_in + g H_out` for several Hamiltonian families
//! (Grover search, transverse-field Ising chain, a Grover/Ising hybrid,
//! and exact cover-3 encodings), measures the minimal runtime needed to
//! reach a target final fidelity, scans the low-lying spectrum along the
//! interpolation path, and orchestrates batch experiments with
//! distribution-free median statistics.
//!
//! Operators are never materialized as dense matrices for large systems;
//! they are kept as term lists (diagonal arrays, single-bit flips,
//! pair-exchange hops, and rank-one projectors) whose action on a state
//! costs `O(dim * terms)`. Hamiltonians that conserve the total
//! magnetization `Σz` can be restricted to a fixed-Hamming-weight sector
//! of dimension `C(n, k)`, which is where the exact cover-3 schemes run.

pub mod evolve;
pub mod hamiltonians;
pub mod harness;
pub mod instances;
pub mod operator;
pub mod sector;
pub mod spectra;
pub mod state;
pub mod stats;

pub use operator::OperatorHandle;
pub use state::{Space, StateVector};
