//! Fourier-series inversion of the V-line and one-sided X-ray transforms.
//!
//! Pipeline: angular FFT of the sinogram, division by the V-line/X-ray symbol
//! (Tikhonov-damped for V-lines), resampling onto uniform s = j/m, Perry's radial
//! back-substitution, angular synthesis.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Result};
use crate::grid::{polar_to_cartesian, Image2D, PolarCoefficients, VlineSinogram};
use crate::special::cheb_t;

/// The Tikhonov-divided V-line coefficients approximate 2·(RF)_n; this factor
/// maps them to (RF)_n. Fixed by the disc oracle (see tests).
pub const C_NORM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlineVariant {
    PerryStable,
    /// Cormack's exterior formula. Severely ill-posed; diagnostic use only.
    CormackExterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlineInversionConfig {
    pub epsilon: f64,
    pub n_max: usize,
    /// Radial nodes r_i = i/m.
    pub m: usize,
    pub variant: VlineVariant,
    /// Side length of the reconstructed image.
    pub output_size: usize,
}

impl VlineInversionConfig {
    /// Defaults for a sinogram: n_max = n_phi/2, m = n_psi + 1 (matches arcsine ψ nodes),
    /// 201×201 output.
    pub fn for_sinogram(s: &VlineSinogram, epsilon: f64) -> Self {
        Self {
            epsilon,
            n_max: s.n_phi / 2,
            m: s.n_psi() + 1,
            variant: VlineVariant::PerryStable,
            output_size: 201,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.n_max < 1 || self.m < 2 {
            return invalid("need n_max >= 1 and m >= 2");
        }
        Ok(())
    }
}

/// Complex table indexed by order n ∈ [−n_max, n_max) and a column index.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    pub n_max: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
}

impl CoeffTable {
    pub fn zeros(n_max: usize, cols: usize) -> Self {
        Self { n_max, cols, values: vec![Complex64::new(0.0, 0.0); 2 * n_max * cols] }
    }
    pub fn orders(&self) -> std::ops::Range<i64> {
        -(self.n_max as i64)..self.n_max as i64
    }
    pub fn row(&self, n: i64) -> &[Complex64] {
        let s = (n + self.n_max as i64) as usize * self.cols;
        &self.values[s..s + self.cols]
    }
    pub fn row_mut(&mut self, n: i64) -> &mut [Complex64] {
        let s = (n + self.n_max as i64) as usize * self.cols;
        &mut self.values[s..s + self.cols]
    }
    pub fn get(&self, n: i64, j: usize) -> Complex64 {
        self.row(n)[j]
    }
}

/// Angular Fourier coefficients G[n, j] = (1/n_phi) Σ_k V(φ_k, ψ_j) e^{−inφ_k}.
pub fn sinogram_coeffs(s: &VlineSinogram, n_max: usize) -> Result<CoeffTable> {
    if s.n_phi < 2 * n_max {
        return invalid(format!("n_phi = {} cannot resolve n_max = {n_max}", s.n_phi));
    }
    let np = s.n_psi();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(s.n_phi);
    let mut out = CoeffTable::zeros(n_max, np);
    let scale = 1.0 / s.n_phi as f64;
    for j in 0..np {
        let mut buf: Vec<Complex64> = (0..s.n_phi).map(|k| Complex64::new(s.get(k, j), 0.0)).collect();
        fft.process(&mut buf);
        for n in out.orders() {
            let bin = n.rem_euclid(s.n_phi as i64) as usize;
            out.row_mut(n)[j] = buf[bin] * scale;
        }
    }
    Ok(out)
}

/// Tikhonov-damped division by the V-line symbol:
/// H = cos(n(ψ − π/2))·G / (ε² + cos²(n(ψ − π/2))).
pub fn regularized_radon_coeffs(g: &CoeffTable, psi_nodes: &[f64], epsilon: f64) -> CoeffTable {
    let mut h = g.clone();
    for n in g.orders() {
        for (j, v) in h.row_mut(n).iter_mut().enumerate() {
            let c = (n as f64 * (psi_nodes[j] - FRAC_PI_2)).cos();
            *v *= c / (epsilon * epsilon + c * c);
        }
    }
    h
}

/// Exact division by the one-sided X-ray symbol e^{−in(ψ − π/2)}.
pub fn xray_radon_coeffs(g: &CoeffTable, psi_nodes: &[f64]) -> CoeffTable {
    let mut h = g.clone();
    for n in g.orders() {
        for (j, v) in h.row_mut(n).iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, n as f64 * (psi_nodes[j] - FRAC_PI_2));
        }
    }
    h
}

/// Radon coefficients (RF)_n(s_j) on the uniform grid s_j = j/m, j = 0..=m.
pub type RadonCoeffs = PolarCoefficients;

/// Resamples coefficients given at s = sin ψ_j onto s = j/m (linear interpolation),
/// scaling by `scale`. Uses (RF)_n(1) = 0 and the parity of (RF)_n at s = 0: zero for
/// odd n, even quadratic fit through the first two nodes for even n.
pub fn resample_to_uniform_s(h: &CoeffTable, psi_nodes: &[f64], m: usize, scale: f64) -> RadonCoeffs {
    let s: Vec<f64> = psi_nodes.iter().map(|p| p.sin()).collect();
    let mut out = RadonCoeffs::zeros(h.n_max, m);
    for n in h.orders() {
        let row = h.row(n);
        let v0 = if n % 2 != 0 || row.len() < 2 {
            Complex64::new(0.0, 0.0)
        } else {
            let b = (row[1] - row[0]) / (s[1] * s[1] - s[0] * s[0]);
            row[0] - b * s[0] * s[0]
        };
        let mut knots_s = Vec::with_capacity(s.len() + 2);
        let mut knots_v = Vec::with_capacity(s.len() + 2);
        knots_s.push(0.0);
        knots_v.push(v0);
        knots_s.extend_from_slice(&s);
        knots_v.extend_from_slice(row);
        knots_s.push(1.0);
        knots_v.push(Complex64::new(0.0, 0.0));
        for j in 0..=m {
            let t = j as f64 / m as f64;
            let k = knots_s.partition_point(|&x| x <= t).clamp(1, knots_s.len() - 1) - 1;
            let w = ((t - knots_s[k]) / (knots_s[k + 1] - knots_s[k])).clamp(0.0, 1.0);
            let v = knots_v[k] * (1.0 - w) + knots_v[k + 1] * w;
            out.set(n, j, v * scale);
        }
    }
    out
}

/// Weight w⁽ⁿ⁾_{i,j} of the radial back-substitution for the cell [r_j, r_{j+1}].
///
/// Interior cells (j < i): (T_|n|(r_{j+1}/r_i) − T_|n|(r_j/r_i))/|n|, zero for n = 0.
/// Exterior cells (j ≥ i): log(r + √(r² − r_i²)) differences for n = 0 and
/// −(e^{−|n| arccosh(r_{j+1}/r_i)} − e^{−|n| arccosh(r_j/r_i)})/|n| otherwise.
pub fn perry_weights(n: i64, i: usize, j: usize, radii: &[f64]) -> f64 {
    let na = n.unsigned_abs();
    let ri = radii[i];
    let (a, b) = (radii[j], radii[j + 1]);
    if j < i {
        if na == 0 {
            return 0.0;
        }
        let (xa, xb) = ((a / ri).min(1.0), (b / ri).min(1.0));
        (cheb_t(na as u32, xb) - cheb_t(na as u32, xa)) / na as f64
    } else if na == 0 {
        let lg = |r: f64| (r + (r * r - ri * ri).max(0.0).sqrt()).ln();
        lg(b) - lg(a)
    } else {
        let ex = |r: f64| (-(na as f64) * (r / ri).max(1.0).acosh()).exp();
        -(ex(b) - ex(a)) / na as f64
    }
}

fn slopes(row: &[Complex64], m: usize) -> Vec<Complex64> {
    (0..m).map(|j| (row[j + 1] - row[j]) * m as f64).collect()
}

/// Radial back-substitution F_n(r_i) = (1/π)[Σ_{j<i} w g'_j − Σ_{j≥i} w g'_j]
/// with g'_j the forward-difference slope of (RF)_n on [s_j, s_{j+1}].
pub fn radial_solve(h: &RadonCoeffs) -> PolarCoefficients {
    let m = h.m;
    let radii: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let orders: Vec<i64> = h.orders().collect();
    let rows: Vec<Vec<Complex64>> = orders
        .par_iter()
        .map(|&n| {
            let g = slopes(h.row(n), m);
            let mut f = vec![Complex64::new(0.0, 0.0); m + 1];
            for i in 1..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, gj) in g.iter().enumerate() {
                    let w = perry_weights(n, i, j, &radii);
                    if j < i {
                        acc += gj * w;
                    } else {
                        acc -= gj * w;
                    }
                }
                f[i] = acc / PI;
            }
            fill_origin(n, &mut f);
            f
        })
        .collect();
    assemble(h.n_max, m, &orders, rows)
}

fn fill_origin(n: i64, f: &mut [Complex64]) {
    f[0] = if n == 0 && f.len() > 3 { (f[1] * 4.0 - f[2]) / 3.0 } else { Complex64::new(0.0, 0.0) };
}

fn assemble(n_max: usize, m: usize, orders: &[i64], rows: Vec<Vec<Complex64>>) -> PolarCoefficients {
    let mut p = PolarCoefficients::zeros(n_max, m);
    for (&n, row) in orders.iter().zip(rows) {
        for (i, v) in row.into_iter().enumerate() {
            p.set(n, i, v);
        }
    }
    p
}

/// Structured warning attached to the exterior reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorDiagnostic {
    pub message: &'static str,
    /// Largest |weight| used; grows like e^{|n| arccosh(1/r)}.
    pub max_weight: f64,
    /// Coefficients that overflowed and were set to zero.
    pub non_finite_zeroed: usize,
}

#[derive(Debug, Clone)]
pub struct ExteriorResult {
    pub coeffs: PolarCoefficients,
    pub diagnostic: ExteriorDiagnostic,
}

/// Cormack's exterior formula F_n(r) = −(1/π) ∫_r^1 (RF)_n'(s) T_|n|(s/r)/√(s² − r²) ds,
/// with the kernel integrated exactly over each cell.
pub fn radial_solve_exterior(h: &RadonCoeffs) -> ExteriorResult {
    let m = h.m;
    let radii: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let orders: Vec<i64> = h.orders().collect();
    let mut max_weight: f64 = 0.0;
    let mut zeroed = 0;
    let mut rows = Vec::with_capacity(orders.len());
    for &n in &orders {
        let na = n.unsigned_abs() as f64;
        let g = slopes(h.row(n), m);
        let mut f = vec![Complex64::new(0.0, 0.0); m + 1];
        for i in 1..m {
            let prim = |r: f64| {
                let u = (r / radii[i]).max(1.0).acosh();
                if na == 0.0 {
                    u
                } else {
                    (na * u).sinh() / na
                }
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for j in i..m {
                let w = prim(radii[j + 1]) - prim(radii[j]);
                max_weight = max_weight.max(w.abs());
                acc += g[j] * w;
            }
            let v = -acc / PI;
            if v.re.is_finite() && v.im.is_finite() {
                f[i] = v;
            } else {
                zeroed += 1;
            }
        }
        fill_origin(n, &mut f);
        rows.push(f);
    }
    ExteriorResult {
        coeffs: assemble(h.n_max, m, &orders, rows),
        diagnostic: ExteriorDiagnostic {
            message: "exterior (Cormack) inversion is severely ill-posed; use for diagnostics only",
            max_weight,
            non_finite_zeroed: zeroed,
        },
    }
}

/// Radon coefficients (RF)_n on s = j/m recovered from a V-line sinogram.
pub fn vline_radon_coeffs(s: &VlineSinogram, cfg: &VlineInversionConfig) -> Result<RadonCoeffs> {
    cfg.validate()?;
    let g = sinogram_coeffs(s, cfg.n_max)?;
    let h = regularized_radon_coeffs(&g, &s.psi_nodes, cfg.epsilon);
    Ok(resample_to_uniform_s(&h, &s.psi_nodes, cfg.m, C_NORM))
}

/// Full V-line inversion: sinogram → image on `cfg.output_size`² over [−1, 1]².
pub fn invert_vline(s: &VlineSinogram, cfg: &VlineInversionConfig) -> Result<Image2D> {
    if cfg.variant != VlineVariant::PerryStable {
        return invalid("invert_vline only runs the PerryStable variant; use invert_vline_exterior");
    }
    let r = vline_radon_coeffs(s, cfg)?;
    polar_to_cartesian(&radial_solve(&r), cfg.output_size)
}

/// Exterior-formula inversion of a V-line sinogram (diagnostic only).
pub fn invert_vline_exterior(s: &VlineSinogram, cfg: &VlineInversionConfig) -> Result<ExteriorResult> {
    let r = vline_radon_coeffs(s, cfg)?;
    Ok(radial_solve_exterior(&r))
}

/// Inversion of a one-sided X-ray sinogram in the V-line layout (no regularization).
pub fn invert_xray(s: &VlineSinogram, cfg: &VlineInversionConfig) -> Result<Image2D> {
    cfg.validate()?;
    let g = sinogram_coeffs(s, cfg.n_max)?;
    let h = xray_radon_coeffs(&g, &s.psi_nodes);
    let r = resample_to_uniform_s(&h, &s.psi_nodes, cfg.m, 1.0);
    polar_to_cartesian(&radial_solve(&r), cfg.output_size)
}
