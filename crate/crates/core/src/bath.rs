//! Classical noise on the spin (bath-induced Zeeman shift `±δ_N`) and on the
//! optical transition (spectral diffusion), with seeded ensemble averaging.
//!
//! Sample `i` of a model is generated from its own ChaCha stream keyed by
//! `(seed, i)`, so ensembles are independent of evaluation order and worker
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use crate::experiments::calibrate_sigma;
use crate::{Error, Exec, Result, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpinNoise {
    #[default]
    None,
    /// Quasi-static: one Gaussian draw per repetition, MHz.
    StaticGaussian { sigma: f64 },
    /// Stationary Ornstein-Uhlenbeck process, σ in MHz and τ_c in μs.
    OrnsteinUhlenbeck { sigma: f64, tau_c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub spin: SpinNoise,
    /// Per-repetition static optical detuning spread, MHz.
    pub optical_sigma: f64,
    pub seed: u64,
    pub n_samples: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { spin: SpinNoise::None, optical_sigma: 0.0, seed: 0, n_samples: 1 }
    }
}

/// One noise realisation.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSample {
    /// Static shift, or the value at `t = 0` of a trajectory.
    pub delta_n: f64,
    /// `δ_N` on consecutive intervals of length `step` covering the window.
    pub trajectory: Option<(f64, Vec<f64>)>,
    pub delta_opt: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn static_gaussian(sigma: f64, seed: u64, n_samples: usize) -> Self {
        NoiseModel { spin: SpinNoise::StaticGaussian { sigma }, optical_sigma: 0.0, seed, n_samples }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::param("n_samples must be >= 1"));
        }
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.optical_sigma) {
            return Err(Error::param(format!("optical sigma must be >= 0, got {}", self.optical_sigma)));
        }
        match self.spin {
            SpinNoise::None => {}
            SpinNoise::StaticGaussian { sigma } => {
                if !ok(sigma) {
                    return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
                }
            }
            SpinNoise::OrnsteinUhlenbeck { sigma, tau_c } => {
                if !ok(sigma) {
                    return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
                }
                if !(tau_c > 0.0) {
                    return Err(Error::param(format!("tau_c must be > 0, got {tau_c}")));
                }
            }
        }
        Ok(())
    }

    /// True when every sample is identical (and zero).
    pub fn is_silent(&self) -> bool {
        let spin = match self.spin {
            SpinNoise::None => true,
            SpinNoise::StaticGaussian { sigma } | SpinNoise::OrnsteinUhlenbeck { sigma, .. } => sigma == 0.0,
        };
        spin && self.optical_sigma == 0.0
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self.spin, SpinNoise::OrnsteinUhlenbeck { sigma, .. } if sigma > 0.0)
    }

    /// Realisation `index`. Dynamic noise is sampled on intervals of length
    /// `step` covering `[0, duration]`; static variants ignore both.
    pub fn sample(&self, index: usize, duration: f64, step: f64) -> Result<BathSample> {
        if index >= self.n_samples {
            return Err(Error::IndexOutOfRange { index, len: self.n_samples });
        }
        let mut spin_rng = stream(self.seed, 2 * index as u64);
        let mut opt_rng = stream(self.seed, 2 * index as u64 + 1);
        let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let delta_opt = if self.optical_sigma > 0.0 { self.optical_sigma * normal(&mut opt_rng) } else { 0.0 };
        let (delta_n, trajectory) = match self.spin {
            SpinNoise::None => (0.0, None),
            SpinNoise::StaticGaussian { sigma } => (sigma * normal(&mut spin_rng), None),
            SpinNoise::OrnsteinUhlenbeck { sigma, tau_c } => {
                if !(step > 0.0) || !(duration >= 0.0) {
                    return Err(Error::param("dynamic noise needs a positive step and window"));
                }
                let n = ((duration / step).ceil() as usize).max(1);
                let a = (-step / tau_c).exp();
                let b = sigma * (1.0 - a * a).sqrt();
                let mut x = sigma * normal(&mut spin_rng);
                let mut tr = Vec::with_capacity(n);
                for _ in 0..n {
                    tr.push(x);
                    x = a * x + b * normal(&mut spin_rng);
                }
                (tr[0], Some((step, tr)))
            }
        };
        Ok(BathSample { delta_n, trajectory, delta_opt })
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Pointwise mean of `runner(sample, index)` over the ensemble, with the
/// standard error of the mean when there is more than one sample.
///
/// The mean is accumulated relative to the first sample in index order, which
/// makes it exact for a runner that ignores the noise.
pub fn ensemble_average<F>(model: &NoiseModel, exec: &Exec, duration: f64, step: f64, runner: F) -> Result<Spectrum>
where
    F: Fn(&BathSample, usize) -> Result<Spectrum> + Sync,
{
    model.validate()?;
    let n = model.n_samples;
    let spectra = exec.try_map(n, |i| {
        let s = model.sample(i, duration, step)?;
        runner(&s, i).map_err(|e| Error::Sample { index: i, source: Box::new(e) })
    })?;
    average(spectra)
}

pub(crate) fn average(spectra: Vec<Spectrum>) -> Result<Spectrum> {
    let n = spectra.len();
    let first = spectra.first().ok_or_else(|| Error::param("empty ensemble"))?;
    let m = first.len();
    for (i, s) in spectra.iter().enumerate() {
        if s.len() != m || s.detunings != first.detunings {
            return Err(Error::Sample { index: i, source: Box::new(Error::DimensionMismatch { expected: m, found: s.len() }) });
        }
    }
    let x0 = &first.signal;
    let mut mean = x0.clone();
    let mut stderr = vec![0.0; m];
    if n > 1 {
        for j in 0..m {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for s in &spectra {
                let d = s.signal[j] - x0[j];
                s1 += d;
                s2 += d * d;
            }
            let mu = s1 / n as f64;
            mean[j] = x0[j] + mu;
            let var = ((s2 - n as f64 * mu * mu) / (n - 1) as f64).max(0.0);
            stderr[j] = (var / n as f64).sqrt();
        }
    }
    let mut out = Spectrum::new(first.detunings.clone(), mean)?;
    out.metadata = first.metadata.clone();
    out.metadata.insert("n_samples".into(), n.to_string());
    if n > 1 {
        out.stderr = Some(stderr);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_is_zero() {
        let m = NoiseModel { n_samples: 3, ..Default::default() };
        for i in 0..3 {
            let s = m.sample(i, 1.0, 0.1).unwrap();
            assert_eq!((s.delta_n, s.delta_opt), (0.0, 0.0));
            assert!(s.trajectory.is_none());
        }
        assert!(matches!(m.sample(3, 1.0, 0.1), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
    }

    #[test]
    fn reproducible_and_independent_streams() {
        let m = NoiseModel { optical_sigma: 0.2, ..NoiseModel::static_gaussian(0.3, 11, 10) };
        let a: Vec<_> = (0..10).map(|i| m.sample(i, 0.0, 0.0).unwrap()).collect();
        let b: Vec<_> = (0..10).rev().map(|i| m.sample(i, 0.0, 0.0).unwrap()).collect();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert_eq!(x.delta_n.to_bits(), y.delta_n.to_bits());
            assert_eq!(x.delta_opt.to_bits(), y.delta_opt.to_bits());
        }
        assert_ne!(a[0].delta_n, a[1].delta_n);
        assert_ne!(a[0].delta_n / 0.3, a[0].delta_opt / 0.2);
        let other = NoiseModel { seed: 12, ..m.clone() };
        assert_ne!(other.sample(0, 0.0, 0.0).unwrap().delta_n, a[0].delta_n);
    }

    #[test]
    fn ou_trajectory_layout() {
        let m = NoiseModel { spin: SpinNoise::OrnsteinUhlenbeck { sigma: 0.1, tau_c: 2.0 }, n_samples: 1, ..Default::default() };
        let s = m.sample(0, 1.0, 0.3).unwrap();
        let (step, tr) = s.trajectory.unwrap();
        assert_eq!(step, 0.3);
        assert_eq!(tr.len(), 4);
        assert_eq!(tr[0], s.delta_n);
        assert!(m.sample(0, 1.0, 0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(NoiseModel { n_samples: 0, ..Default::default() }.validate().is_err());
        assert!(NoiseModel::static_gaussian(-1.0, 0, 1).validate().is_err());
        let ou = NoiseModel { spin: SpinNoise::OrnsteinUhlenbeck { sigma: 0.1, tau_c: 0.0 }, ..Default::default() };
        assert!(ou.validate().is_err());
    }

    #[test]
    fn averaging_a_fixed_spectrum_is_exact() {
        let base = Spectrum::new(vec![0.0, 1.0, 2.0], vec![0.1, 0.7, 1.0 / 3.0]).unwrap();
        let m = NoiseModel::static_gaussian(1.0, 5, 7);
        let avg = ensemble_average(&m, &Exec::sequential(), 0.0, 0.0, |_, _| Ok(base.clone())).unwrap();
        assert_eq!(avg.signal, base.signal);
        assert_eq!(avg.stderr.unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn runner_failure_carries_index() {
        let m = NoiseModel { n_samples: 5, ..Default::default() };
        let err = ensemble_average(&m, &Exec::sequential(), 0.0, 0.0, |_, i| {
            if i == 3 {
                Err(Error::EmptyGrid)
            } else {
                Spectrum::new(vec![0.0], vec![1.0])
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Sample { index: 3, .. }));
        assert!(err.is_config());
    }
}
