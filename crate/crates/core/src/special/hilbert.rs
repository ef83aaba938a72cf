use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

/// Fourier-multiplier transform on the zero-padded (factor 2) periodic extension of `g`.
fn padded_multiplier(g: &[f64], mult: impl Fn(usize, usize) -> Complex64) -> Vec<f64> {
    let n = g.len();
    let len = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex64> = g
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)).take(len - n))
        .collect();
    fwd.process(&mut buf);
    for (q, b) in buf.iter_mut().enumerate() {
        *b *= mult(q, len);
    }
    inv.process(&mut buf);
    let scale = 1.0 / len as f64;
    buf[..n].iter().map(|c| c.re * scale).collect()
}

/// Signed frequency index of FFT bin `q` for transform length `len`.
fn signed_freq(q: usize, len: usize) -> i64 {
    // Nyquist → 0 keeps real inputs real.
    if 2 * q == len {
        0
    } else if 2 * q < len {
        q as i64
    } else {
        q as i64 - len as i64
    }
}

/// Discrete Hilbert transform with kernel 1/(π(s−t)) on a uniform grid.
///
/// Applies the multiplier −i·sign(frequency) to the band-limited interpolant of
/// the samples. In sample space this is the lattice kernel 2/(πk) for odd k and 0
/// for even k, applied as a linear convolution through a zero-padded (factor 2)
/// FFT, so nothing wraps around. `hilbert_uniform(hilbert_uniform(g)) ≈ −g` when
/// both g and its transform decay at the grid ends.
pub fn hilbert_uniform(g: &[f64]) -> Result<Vec<f64>> {
    if g.len() < 8 {
        return invalid(format!("hilbert_uniform needs at least 8 samples, got {}", g.len()));
    }
    let n = g.len();
    let len = 2 * n;
    let mut kernel = vec![Complex64::new(0.0, 0.0); len];
    for k in (1..n).step_by(2) {
        let v = 2.0 / (std::f64::consts::PI * k as f64);
        kernel[k] = Complex64::new(v, 0.0);
        kernel[len - k] = Complex64::new(-v, 0.0);
    }
    FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut kernel);
    Ok(padded_multiplier(g, |q, _| kernel[q]))
}

/// Spectral derivative of the given order on a uniform grid with spacing `ds`,
/// using the same zero-padded extension as [`hilbert_uniform`].
pub fn spectral_derivative(g: &[f64], ds: f64, order: u32) -> Result<Vec<f64>> {
    if g.len() < 8 {
        return invalid(format!("spectral_derivative needs at least 8 samples, got {}", g.len()));
    }
    if order == 0 {
        return Ok(g.to_vec());
    }
    Ok(padded_multiplier(g, |q, len| {
        let f = signed_freq(q, len);
        let w = 2.0 * std::f64::consts::PI * f as f64 / (len as f64 * ds);
        Complex64::new(0.0, w).powu(order)
    }))
}
