//! Dense complex-matrix Lindblad engine.
//!
//! Density matrices are vectorised column-major (`vec(ρ)` stacks columns),
//! which is also nalgebra's storage order, so `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

mod liouvillian;
mod operator;
mod periodic;
mod propagate;

pub use liouvillian::{build_liouvillian, commutator_superoperator, steady_state, CollapseOp, Liouvillian};
pub use operator::{expectation, CMatrix, DensityMatrix, Operator, C64};
pub use periodic::{cycle_averaged_steady_state, PeriodicDrive};
pub use propagate::{propagate, Modulation, Observer, Propagator, Trajectory};

/// Tolerance for the hermiticity of Hamiltonians (max element deviation).
pub const HERMITIAN_TOL: f64 = 1e-12;
