use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::{Image2D, PolarCoefficients};
use crate::error::{bad_grid, invalid, Result};

/// Angular synthesis Re Σ_n F_n(r) e^{inφ} on an `n_x`×`n_x` grid over [−1, 1]².
///
/// F_n is interpolated linearly between radii; samples with r > 1 are zero.
pub fn polar_to_cartesian(p: &PolarCoefficients, n_x: usize) -> Result<Image2D> {
    if n_x < 3 {
        return bad_grid(format!("output grid must be at least 3x3, got {n_x}"));
    }
    let mut img = Image2D::zeros(n_x, n_x, 1.0)?;
    let m = p.m as f64;
    let n_max = p.n_max as i64;
    let xs: Vec<f64> = (0..n_x).map(|i| img.x(i)).collect();
    img.values.par_chunks_mut(n_x).enumerate().for_each(|(iy, row)| {
        let y = xs[iy];
        for (ix, out) in row.iter_mut().enumerate() {
            let x = xs[ix];
            let r = (x * x + y * y).sqrt();
            if r > 1.0 {
                *out = 0.0;
                continue;
            }
            let t = r * m;
            let i0 = (t.floor() as usize).min(p.m - 1);
            let w = t - i0 as f64;
            let phi = y.atan2(x);
            let step = Complex64::from_polar(1.0, phi);
            let mut e = Complex64::from_polar(1.0, -(n_max as f64) * phi);
            let mut acc = 0.0;
            for n in -n_max..n_max {
                let row = p.row(n);
                let f = row[i0] * (1.0 - w) + row[i0 + 1] * w;
                acc += (f * e).re;
                e *= step;
            }
            *out = acc;
        }
    });
    Ok(img)
}

/// Angular analysis of an image on the polar nodes r_i = i/m, φ_k = 2πk/(4·n_max).
///
/// Samples are taken by bilinear interpolation, the ring at r = 1 is set to zero,
/// and negative orders are filled by conjugation so the result is exactly
/// conjugate-symmetric.
pub fn cartesian_to_polar(img: &Image2D, n_max: usize, m: usize) -> Result<PolarCoefficients> {
    if n_max < 1 || m < 1 {
        return invalid(format!("cartesian_to_polar needs n_max, m >= 1 (got {n_max}, {m})"));
    }
    let n_phi = 4 * n_max;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_phi);
    let rings: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let r = i as f64 / m as f64;
            let mut buf: Vec<Complex64> = (0..n_phi)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / n_phi as f64;
                    Complex64::new(img.sample(r * phi.cos(), r * phi.sin()), 0.0)
                })
                .collect();
            fft.process(&mut buf);
            let scale = 1.0 / n_phi as f64;
            buf.iter().map(|c| c * scale).collect()
        })
        .collect();
    let mut p = PolarCoefficients::zeros(n_max, m);
    for (i, ring) in rings.iter().enumerate() {
        p.set(0, i, Complex64::new(ring[0].re, 0.0));
        for n in 1..=n_max {
            let c = ring[n];
            if n < n_max {
                p.set(n as i64, i, c);
            }
            p.set(-(n as i64), i, c.conj());
        }
    }
    Ok(p)
}
