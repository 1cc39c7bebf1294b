//! Simulation and verification toolkit for a controlled-swap quantum router.
//!
//! The crate builds the router circuits from `{H, X, S, S†, T, T†, CNOT}`,
//! simulates them as pure states or under a calibrated Kraus noise model,
//! reconstructs density matrices from seeded Pauli-basis shot data, and scores
//! the results with fidelity, negativity and entropy.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the common instantiations. Basis indices are big-endian:
//! qubit 0 is the most significant bit.
//!
//! ```
//! use qrouter_core::{gates::RouterExperiment, gates::simulate, qstate::to_density, tomography};
//!
//! let psi = simulate::<f64>(&RouterExperiment::Superposition.circuit()).unwrap();
//! let rho = to_density(&psi);
//! let rebuilt = tomography::project_to_physical(
//!     &tomography::linear_inversion(&tomography::exact_expectations(&rho), 3).unwrap(),
//! )
//! .unwrap();
//! assert!((tomography::fidelity(&rebuilt, &rho).unwrap() - 1.0).abs() < 1e-9);
//! ```

pub mod experiment;
pub mod gates;
pub mod linalg;
pub mod noise;
pub mod qasm;
pub mod qstate;
pub mod scalar;
pub mod tomography;

pub use gates::{Circuit, Instruction, OneQubitGate, PrepSpec, RouterExperiment};
pub use noise::NoiseModel;
pub use qstate::{DensityMatrix, StateVector};
pub use scalar::Real;

pub type C64 = scalar::C<f64>;
pub type C32 = scalar::C<f32>;
pub type CMatrix64 = linalg::CMatrix<f64>;
pub type StateVector64 = StateVector<f64>;
pub type StateVector32 = StateVector<f32>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type DensityMatrix32 = DensityMatrix<f32>;
pub type KrausChannel64 = noise::KrausChannel<f64>;
pub type KrausChannel32 = noise::KrausChannel<f32>;
