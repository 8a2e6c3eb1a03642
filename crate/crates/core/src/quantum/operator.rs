use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// A square complex matrix over the simulation basis.
///
/// Hamiltonians are expressed in rad/μs.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        Ok(Operator(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(CMatrix::identity(dim, dim))
    }

    /// `|to⟩⟨from|`
    pub fn transition(dim: usize, to: usize, from: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(to, from)] = C64::new(1.0, 0.0);
        Operator(m)
    }

    /// `|i⟩⟨i|`
    pub fn projector(dim: usize, i: usize) -> Self {
        Self::transition(dim, i, i)
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(e, 0.0);
        }
        Operator(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    /// Max element of `|A - A^†|`.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.0, &self.0.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn scale(&self, s: f64) -> Self {
        Operator(self.0.map(|z| z * s))
    }

    /// Real eigenvalues of a Hermitian operator, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[Operator]) -> Self {
        let n: usize = blocks.iter().map(Operator::dim).sum();
        let mut m = CMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            let d = b.dim();
            m.view_mut((off, off), (d, d)).copy_from(&b.0);
            off += d;
        }
        Operator(m)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        Operator(self.0.map(|z| z * rhs))
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const EIGEN_TOL: f64 = -1e-8;

    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let rho = DensityMatrix(m);
        let herm = rho.hermiticity_error();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_ev = rho.min_eigenvalue();
        if min_ev < Self::EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation. Used for integrator output, where
    /// the invariants hold up to the integrator's accuracy.
    pub(crate) fn from_raw(m: CMatrix) -> Self {
        DensityMatrix(m)
    }

    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|a| a / norm));
        DensityMatrix::new(&v * v.adjoint())
    }

    /// `|i⟩⟨i|` in a `dim`-level basis.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, len: dim });
        }
        Ok(DensityMatrix(Operator::projector(dim, i).into_matrix()))
    }

    /// Diagonal (incoherent) mixture with the given weights, renormalised.
    pub fn mixture(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidState("mixture weights must be non-negative".into()));
        }
        let norm: Vec<f64> = weights.iter().map(|w| w / total).collect();
        DensityMatrix::new(Operator::diagonal(&norm).into_matrix())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.0, &self.0.adjoint())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    /// Column-major vectorisation.
    pub fn to_vec(&self) -> Vec<C64> {
        self.0.as_slice().to_vec()
    }

    pub(crate) fn from_vec(dim: usize, v: &[C64]) -> Self {
        DensityMatrix(CMatrix::from_column_slice(dim, dim, v))
    }
}

/// `trace(O ρ)`.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
    }
    let (o, r) = (op.matrix(), rho.matrix());
    let n = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += o[(i, k)] * r[(k, i)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expectation_of_identity_is_one() {
        let rho = DensityMatrix::mixture(&[0.2, 0.3, 0.5]).unwrap();
        let e = expectation(&rho, &Operator::identity(3)).unwrap();
        assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.im, 0.0);
    }

    #[test]
    fn expectation_of_projector_on_itself() {
        let rho = DensityMatrix::basis(4, 3).unwrap();
        let e = expectation(&rho, &Operator::projector(4, 3)).unwrap();
        assert_eq!(e, C64::new(1.0, 0.0));
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let rho = DensityMatrix::basis(4, 0).unwrap();
        assert!(matches!(expectation(&rho, &Operator::identity(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.7, 0.0);
        assert!(matches!(DensityMatrix::new(m.clone()), Err(Error::InvalidState(_))));
        m[(1, 1)] = C64::new(0.3, 0.0);
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.0, -0.1);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        // |ρ01|² > ρ00 ρ11 is not positive
        m[(0, 1)] = C64::new(0.0, 0.6);
        m[(1, 0)] = C64::new(0.0, -0.6);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn pure_state_is_normalised() {
        let s = 1.0 / 2f64.sqrt();
        let rho = DensityMatrix::pure(&[C64::new(3.0, 0.0), C64::new(0.0, 3.0)]).unwrap();
        assert_abs_diff_eq!(rho.element(0, 1).im, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.population(0), s * s, epsilon = 1e-15);
    }

    #[test]
    fn direct_sum_places_blocks() {
        let a = Operator::identity(2);
        let b = Operator::diagonal(&[3.0, 4.0, 5.0]);
        let s = Operator::direct_sum(&[a, b]);
        assert_eq!(s.dim(), 5);
        assert_eq!(s.matrix()[(4, 4)], C64::new(5.0, 0.0));
        assert_eq!(s.matrix()[(1, 2)], C64::new(0.0, 0.0));
    }
}
