//! Classical toolkit for preparing Majorana zero modes as eigenstates of the
//! Kitaev chain on a simulated line of qubits.
//!
//! The pipeline runs from a quadratic fermionic Hamiltonian through its
//! Bogoliubov diagonalization, Givens-rotation circuit synthesis, noisy
//! shot-based simulation, correlation-matrix measurement and error
//! mitigation, down to observables such as energies, Majorana site
//! correlations and a fidelity witness. Every stage can be checked against
//! brute-force exact diagonalization in the 2^n-dimensional Fock space.
//!
//! Conventions used throughout:
//!
//! * Modes and qubits are 0-indexed. Bit `j` of a basis-state index (and
//!   character `j` of a bitstring) is qubit `j`, which holds mode `j` under
//!   the Jordan-Wigner transform `a_j = Z_0 ... Z_{j-1} |0><1|_j`.
//! * Two-qubit gate matrices on `(q, q + 1)` are written in the basis index
//!   `b_q + 2 b_{q+1}`.

pub mod analysis;
pub mod bogoliubov;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod hamiltonian;
pub mod linalg;
pub mod measure;
pub mod mitigate;
pub mod oracle;
pub mod simulate;
pub mod synthesis;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub type CMatrix = nalgebra::DMatrix<Complex64>;
pub type RMatrix = nalgebra::DMatrix<f64>;
