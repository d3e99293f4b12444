//! Nonstabilizerness ("magic") of pure qubit states through the flatness of
//! their computational-basis participation distribution.
//!
//! The Clifford-orbit average of the multifractal flatness `F = I₃ − I₂²`
//! equals `2(1 − 2^{−M₂})/((d+1)(d+2))`, where `M₂` is the stabilizer
//! 2-Rényi entropy. This crate computes both sides: exact measures by Pauli
//! enumeration, exact orbit averages for one and two qubits, Monte Carlo
//! orbit sampling for larger registers, Haar-ensemble reference values and a
//! simulated two-qubit readout experiment with passive mitigation.

pub mod cli;
pub mod clifford;
pub mod error;
pub mod measures;
pub mod oracles;
pub mod orbit;
pub mod pauli;
pub mod readout;
pub mod state;

pub use clifford::{apply_clifford, random_clifford, CliffordTableau, Gate};
pub use error::{Error, Result};
pub use measures::{
    fit_scaling, ipr, multifractal_flatness, participation_entropy, stabilizer_entropy, FitResult,
    MeasureKind, MeasureReport,
};
pub use orbit::{estimate_m2, orbit_average_exact, orbit_average_mc, OrbitEstimate, Protocol};
pub use pauli::{pauli_expectation, xi_norm, PauliString};
pub use readout::ReadoutModel;
pub use state::Statevector;
