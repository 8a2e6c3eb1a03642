//! Fixed-step RK4 integration of `dρ/dt = L(t) ρ`.
//!
//! Superoperators are stored as compressed sparse rows; for the few-level
//! systems simulated here most entries of `L` vanish and the sparse kernel is
//! several times faster than a dense matrix-vector product.

use super::liouvillian::{build_liouvillian, commutator_superoperator, CollapseOp};
use super::operator::{CMatrix, DensityMatrix, Operator, C64};
use crate::{Error, Result};

const TRACE_TOL: f64 = 1e-8;
const MIN_DT: f64 = 1e-9;

#[derive(Clone, Debug)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_dense(m: &CMatrix) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { row_ptr, cols, vals }
    }

    fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// `y += s · A x`
    #[inline]
    fn mul_add(&self, s: C64, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr += s * acc;
        }
    }
}

/// Piecewise-constant scalar modulation `H(t) += f(t) · op`, with `f` constant
/// on consecutive intervals of length `step` starting at `t = 0`. Past the
/// last interval the final value is held.
#[derive(Clone, Debug)]
pub struct Modulation {
    pub op: Operator,
    pub step: f64,
    pub values: Vec<f64>,
}

impl Modulation {
    pub fn value_at(&self, t: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let k = (t / self.step).floor().max(0.0) as usize;
        self.values[k.min(self.values.len() - 1)]
    }
}

/// Receives the state after every accepted step (and the initial state).
/// `rho` is column-stacked, so `ρ_ij = rho[i + dim·j]`.
pub trait Observer {
    /// Called before each integration attempt; a rejected attempt is discarded.
    fn reset(&mut self);
    fn observe(&mut self, t: f64, rho: &[C64]);
}

/// Every state of a run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Observer for Trajectory {
    fn reset(&mut self) {
        self.times.clear();
        self.states.clear();
    }

    fn observe(&mut self, t: f64, rho: &[C64]) {
        self.times.push(t);
        self.states.push(DensityMatrix::from_vec(self.dim, rho));
    }
}

/// `L(t) = L₀ + L₊ e^{iωt} + L₋ e^{-iωt}` for `H(t) = H_s + H_osc e^{iωt} + h.c.`
#[derive(Clone, Debug)]
pub struct Propagator {
    dim: usize,
    l0: Csr,
    l_plus: Csr,
    l_minus: Csr,
    freq: f64,
}

impl Propagator {
    pub fn new(h_static: &Operator, h_osc: Option<(&Operator, f64)>, collapse_ops: &[CollapseOp]) -> Result<Self> {
        let dim = h_static.dim();
        let l0 = build_liouvillian(h_static, collapse_ops)?;
        let (l_plus, l_minus, freq) = match h_osc {
            Some((h, f)) => {
                if h.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: h.dim() });
                }
                (Csr::from_dense(&commutator_superoperator(h)), Csr::from_dense(&commutator_superoperator(&h.adjoint())), f)
            }
            None => (Csr::from_dense(&CMatrix::zeros(0, 0)), Csr::from_dense(&CMatrix::zeros(0, 0)), 0.0),
        };
        Ok(Propagator { dim, l0: Csr::from_dense(l0.matrix()), l_plus, l_minus, freq })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn deriv(&self, t: f64, m: Option<(&Csr, f64)>, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        self.l0.mul_add(C64::new(1.0, 0.0), x, y);
        if !self.l_plus.is_empty() {
            let ph = C64::from_polar(1.0, self.freq * t);
            self.l_plus.mul_add(ph, x, y);
            self.l_minus.mul_add(ph.conj(), x, y);
        }
        if let Some((lm, v)) = m {
            if v != 0.0 {
                lm.mul_add(C64::new(v, 0.0), x, y);
            }
        }
    }

    /// Integrates from `t = 0` to `duration` with a step no larger than `dt`,
    /// halving the step whenever the trace drifts by more than 1e-8 or a
    /// population leaves `[0, 1]` by more than that. Returns the final state.
    pub fn run(
        &self,
        rho0: &DensityMatrix,
        duration: f64,
        dt: f64,
        modulation: Option<&Modulation>,
        observer: &mut dyn Observer,
    ) -> Result<DensityMatrix> {
        if rho0.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rho0.dim() });
        }
        if !(duration >= 0.0) || !(dt > 0.0) || !duration.is_finite() {
            return Err(Error::param(format!("invalid propagation window {duration} / step {dt}")));
        }
        let modsup = match modulation {
            Some(m) => {
                if m.op.dim() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, found: m.op.dim() });
                }
                if !(m.step > 0.0) {
                    return Err(Error::param("modulation step must be positive"));
                }
                Some((Csr::from_dense(&commutator_superoperator(&m.op)), m))
            }
            None => None,
        };
        let mut h = dt;
        loop {
            observer.reset();
            match self.attempt(rho0, duration, h, modsup.as_ref(), observer) {
                Ok(v) => return Ok(DensityMatrix::from_vec(self.dim, &v)),
                Err(drift) => {
                    h /= 2.0;
                    if h < MIN_DT {
                        return Err(Error::StepUnderflow { dt: h, drift });
                    }
                }
            }
        }
    }

    fn attempt(
        &self,
        rho0: &DensityMatrix,
        duration: f64,
        dt: f64,
        modsup: Option<&(Csr, &Modulation)>,
        observer: &mut dyn Observer,
    ) -> std::result::Result<Vec<C64>, f64> {
        let d = self.dim;
        let n = d * d;
        let steps = ((duration / dt).ceil() as usize).max(if duration > 0.0 { 1 } else { 0 });
        let h = if steps == 0 { 0.0 } else { duration / steps as f64 };
        let mut x = rho0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]);
        observer.observe(0.0, &x);
        let half = C64::new(h / 2.0, 0.0);
        let full = C64::new(h, 0.0);
        for s in 0..steps {
            let t = s as f64 * h;
            let m = modsup.map(|(c, m)| (c, m.value_at(t + h / 2.0)));
            self.deriv(t, m, &x, &mut k1);
            axpy(&x, half, &k1, &mut tmp);
            self.deriv(t + h / 2.0, m, &tmp, &mut k2);
            axpy(&x, half, &k2, &mut tmp);
            self.deriv(t + h / 2.0, m, &tmp, &mut k3);
            axpy(&x, full, &k3, &mut tmp);
            self.deriv(t + h, m, &tmp, &mut k4);
            let w = h / 6.0;
            for i in 0..n {
                x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
            }
            let mut tr = 0.0;
            for i in 0..d {
                let p = x[i + d * i].re;
                if !(p > -TRACE_TOL && p < 1.0 + TRACE_TOL) {
                    return Err(if p.is_finite() { p.abs() } else { f64::INFINITY });
                }
                tr += p;
            }
            if (tr - 1.0).abs() > TRACE_TOL {
                return Err((tr - 1.0).abs());
            }
            observer.observe(t + h, &x);
        }
        Ok(x)
    }
}

#[inline]
fn axpy(x: &[C64], a: C64, y: &[C64], out: &mut [C64]) {
    for i in 0..x.len() {
        out[i] = x[i] + a * y[i];
    }
}

/// Convenience wrapper recording every step.
pub fn propagate(
    h_static: &Operator,
    h_osc: Option<(&Operator, f64)>,
    collapse_ops: &[CollapseOp],
    rho0: &DensityMatrix,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    let p = Propagator::new(h_static, h_osc, collapse_ops)?;
    let mut traj = Trajectory { dim: p.dim(), ..Default::default() };
    p.run(rho0, duration, dt, None, &mut traj)?;
    Ok(traj)
}
