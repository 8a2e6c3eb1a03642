use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Emission versus two-photon detuning.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Spectrum {
    /// MHz.
    pub detunings: Vec<f64>,
    /// `Γ_e ×` time-averaged excited population, μs⁻¹.
    pub signal: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl Spectrum {
    pub fn new(detunings: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        if detunings.len() != signal.len() {
            return Err(Error::DimensionMismatch { expected: detunings.len(), found: signal.len() });
        }
        if detunings.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(Spectrum { detunings, signal, stderr: None, metadata: BTreeMap::new() })
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Smallest spacing between neighbouring grid points.
    pub fn min_spacing(&self) -> f64 {
        self.detunings.windows(2).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
        let s = Spectrum::new(g, vec![0.0; 5]).unwrap();
        assert_eq!(s.min_spacing(), 0.5);
        assert!(matches!(Spectrum::new(vec![], vec![]), Err(Error::EmptyGrid)));
        assert!(Spectrum::new(vec![1.0], vec![]).is_err());
    }
}
