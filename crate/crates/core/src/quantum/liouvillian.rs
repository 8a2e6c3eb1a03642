use nalgebra::{DVector, SVD};

use super::operator::{CMatrix, DensityMatrix, Operator, C64};
use super::HERMITIAN_TOL;
use crate::{Error, Result};

/// A jump operator with its rate (rad/μs).
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseOp {
    pub op: Operator,
    pub rate: f64,
}

impl CollapseOp {
    pub fn new(op: Operator, rate: f64) -> Self {
        CollapseOp { op, rate }
    }
}

/// Generator of Lindblad dynamics acting on column-stacked `vec(ρ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Liouvillian {
    dim: usize,
    matrix: CMatrix,
}

impl Liouvillian {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        Ok(Liouvillian { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rho.dim() });
        }
        let v = DVector::from_column_slice(rho.matrix().as_slice());
        let out = &self.matrix * v;
        Ok(CMatrix::from_column_slice(self.dim, self.dim, out.as_slice()))
    }

    /// Max element of `vec(I)^† L`; zero for a trace-preserving generator.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        (0..d * d).map(|col| (0..d).map(|i| self.matrix[(i + d * i, col)]).sum::<C64>().norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Liouvillian) -> Result<Liouvillian> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(Liouvillian { dim: self.dim, matrix: &self.matrix + &other.matrix })
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        self.matrix.clone().singular_values().iter().copied().fold(0.0, f64::max)
    }
}

/// Superoperator of `ρ ↦ -i[H, ρ]` for an arbitrary (not necessarily
/// Hermitian) `H`.
pub fn commutator_superoperator(h: &Operator) -> CMatrix {
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    let m = h.matrix();
    (id.kronecker(m) - m.transpose().kronecker(&id)) * C64::new(0.0, -1.0)
}

/// `L vec(ρ) = vec(-i[H,ρ] + Σ_k γ_k (C_k ρ C_k^† - ½{C_k^† C_k, ρ}))`.
pub fn build_liouvillian(h: &Operator, collapse_ops: &[CollapseOp]) -> Result<Liouvillian> {
    let d = h.dim();
    let herm = h.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let mut l = commutator_superoperator(h);
    let id = CMatrix::identity(d, d);
    for c in collapse_ops {
        if c.op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: c.op.dim() });
        }
        if c.rate < 0.0 || c.rate.is_nan() {
            return Err(Error::NegativeRate(c.rate));
        }
        if c.rate == 0.0 {
            continue;
        }
        let cm = c.op.matrix();
        let cdc = cm.adjoint() * cm;
        let jump = cm.conjugate().kronecker(cm);
        let anti = id.kronecker(&cdc) + cdc.transpose().kronecker(&id);
        l += (jump - anti * C64::new(0.5, 0.0)) * C64::new(c.rate, 0.0);
    }
    Ok(Liouvillian { dim: d, matrix: l })
}

/// Relative singular-value threshold below which a direction counts as null.
const NULL_TOL: f64 = 1e-11;

/// Solves `{L vec(ρ) = 0, tr ρ = 1}` in the least-squares sense.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.dim;
    let n = d * d;
    let mut a = CMatrix::zeros(n + 1, n);
    a.view_mut((0, 0), (n, n)).copy_from(&l.matrix);
    for i in 0..d {
        a[(n, i + d * i)] = C64::new(1.0, 0.0);
    }
    let mut b = DVector::<C64>::zeros(n + 1);
    b[n] = C64::new(1.0, 0.0);

    let svd = SVD::new(a.clone(), true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let smax = *sv.last().unwrap_or(&0.0);
    let null_dim = sv.iter().filter(|&&s| s <= NULL_TOL * smax).count();
    if null_dim > 0 {
        return Err(Error::NonUniqueSteadyState {
            null_dim: null_dim + 1,
            smallest: sv.iter().take(null_dim + 1).map(|s| s / smax).collect(),
        });
    }
    let solve = |rhs: &DVector<C64>| svd.solve(rhs, 0.0).map_err(|e| Error::InvalidState(format!("steady-state solve failed: {e}")));
    let mut x = solve(&b)?;
    // near-dark resonances are ill-conditioned; two refinement passes recover
    // the digits the first solve loses
    for _ in 0..2 {
        let r = &b - &a * &x;
        x += solve(&r)?;
    }

    let mut rho = CMatrix::from_column_slice(d, d, x.as_slice());
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    rho /= tr;

    let resid = (&l.matrix * DVector::from_column_slice(rho.as_slice())).norm();
    let lnorm = l.norm();
    let bound = 1e-8 * lnorm.max(f64::MIN_POSITIVE);
    if resid > bound {
        return Err(Error::SteadyStateResidual { residual: resid, bound });
    }
    Ok(DensityMatrix::from_raw(rho))
}
