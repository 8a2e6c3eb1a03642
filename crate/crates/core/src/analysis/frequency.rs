use rustfft::{num_complex::Complex, FftPlanner};

use crate::{Error, Result};

/// Dominant oscillation frequency (MHz) of a uniformly sampled trace (μs).
///
/// A Hann window is applied after removing the windowed mean, and the trace zero-padded to
/// at least 64× its length; the largest non-DC bin is refined by a parabola
/// through it and its neighbours.
pub fn dominant_frequency(times: &[f64], values: &[f64]) -> Result<f64> {
    let n = values.len();
    if times.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: times.len() });
    }
    if n < 8 {
        return Err(Error::Extraction(format!("trace too short ({n} samples)")));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Extraction("time grid is not increasing".into()));
    }
    let window: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos()).collect();
    // window-weighted mean, so the windowed trace has no DC component
    let mean = window.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / window.iter().sum::<f64>();
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-12) {
        return Err(Error::Extraction("trace is flat".into()));
    }
    let len = (64 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); len];
    for (i, v) in values.iter().enumerate() {
        buf[i] = Complex::new((v - mean) * window[i], 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|c| c.norm()).collect();
    let (k, _) = mag[1..mag.len() - 1].iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    let k = k + 1;
    let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = a - 2.0 * b + c;
    let off = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let f = (k as f64 + off) / (len as f64 * dt);
    let span = times[n - 1] - times[0];
    if f * span < 1.0 {
        return Err(Error::Extraction(format!("trace spans {span} us, shorter than one period of the {f} MHz component")));
    }
    Ok(f)
}
