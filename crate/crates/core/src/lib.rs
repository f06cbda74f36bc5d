//! Two-qubit gates generated by a single constant pulse, with spectral
//! degeneracy diagnostics and Bloch-Redfield purity benchmarks.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! bottom fix the scalar to `f64`. Search, sweeps and calibration work in `f64`.

// NaN-rejecting `!(x > 0)` guards and index loops over 4x4 matrices are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibrate;
pub mod constructions;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod optimize;
pub mod purity;
pub mod redfield;
pub mod scalar;
pub mod sensitivity;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
pub use hamiltonian::{build_hamiltonian, pauli_tensor, spectrum_optimal_point, Axis, Control, HamiltonianParams};
pub use linalg::{expm_hermitian, CMat4, Mat2, SuperOp};
pub use metrics::{gate_distance, is_equivalent, makhlin_invariants, GateReport, GateTarget, MakhlinInvariants};
pub use noise::{spectral_function, NoiseModel};
pub use purity::{gate_purity, relax_time_check, InitialStateSet, PurityOptions, PurityTrace};
pub use redfield::{propagate, DensityMatrix, Dynamics, RedfieldTensor, TensorConvention};
pub use scalar::{Real, C};
pub use spectrum::{classify_degeneracy, eigensystem, Degeneracy, DegeneracyReport, EigenSystem};

/// Library version embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Params = HamiltonianParams<f64>;
pub type Mat4 = CMat4<f64>;
pub type Noise = NoiseModel<f64>;
pub type Eigen = EigenSystem<f64>;
pub type Density = DensityMatrix<f64>;
pub type Target = GateTarget<f64>;
pub type Invariants = MakhlinInvariants<f64>;
pub type Trace = PurityTrace<f64>;
