use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{bad_grid, Result};
use crate::grid::{ConeData, Volume3D};

use super::adjoint::cone_cell_measure;
use super::kernel::z_derivative;

/// Discrete surrogates of the norms in the stability estimate for C_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityNorms {
    /// ‖f‖_{−1} = (∫ |F f(ξ)|² / (1 + |ξ|²) dξ)^{1/2}, F f = ∫ f e^{−i x·ξ} dx.
    pub sobolev_minus_1: f64,
    /// (∫ |C_k f / cos^{2−k} ψ|² |cos β| sin β dφ dz dβ dψ)^{1/2}
    pub cone_norm: f64,
    /// cone_norm with the ∂_z C_k f term added.
    pub cone_norm_1: f64,
    pub l2: f64,
}

/// In-place 3D FFT of a (nz, ny, nx) row-major array.
fn fft3(data: &mut [Complex64], dims: [usize; 3]) {
    let [nz, ny, nx] = dims;
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(nx);
    for row in data.chunks_mut(nx) {
        fx.process(row);
    }
    let mut line = Vec::new();
    let fy = planner.plan_fft_forward(ny);
    for iz in 0..nz {
        for ix in 0..nx {
            line.clear();
            line.extend((0..ny).map(|iy| data[(iz * ny + iy) * nx + ix]));
            fy.process(&mut line);
            for (iy, v) in line.iter().enumerate() {
                data[(iz * ny + iy) * nx + ix] = *v;
            }
        }
    }
    let fz = planner.plan_fft_forward(nz);
    for iy in 0..ny {
        for ix in 0..nx {
            line.clear();
            line.extend((0..nz).map(|iz| data[(iz * ny + iy) * nx + ix]));
            fz.process(&mut line);
            for (iz, v) in line.iter().enumerate() {
                data[(iz * ny + iy) * nx + ix] = *v;
            }
        }
    }
}

fn freq(i: usize, n: usize, h: f64) -> f64 {
    let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
    2.0 * PI * k / (n as f64 * h)
}

/// H^{−1} norm from the zero-padded (×2) discrete Fourier transform.
pub fn sobolev_minus_1(f: &Volume3D) -> f64 {
    sobolev_minus_1_padded(f, 2)
}

/// H^{−1} norm with the volume zero-padded by `pad` along every axis; larger
/// padding refines the frequency spacing.
pub fn sobolev_minus_1_padded(f: &Volume3D, pad: usize) -> f64 {
    let pad = pad.max(1);
    let (nx, ny, nz) = (pad * f.n_x, pad * f.n_y, pad * f.n_z);
    let mut buf = vec![Complex64::new(0.0, 0.0); nx * ny * nz];
    for iz in 0..f.n_z {
        for iy in 0..f.n_y {
            for ix in 0..f.n_x {
                buf[(iz * ny + iy) * nx + ix] = Complex64::new(f.values[f.index(ix, iy, iz)], 0.0);
            }
        }
    }
    fft3(&mut buf, [nz, ny, nx]);
    let (hx, hy, hz) = (f.dx(), f.dy(), f.dz());
    let vox = f.voxel_volume();
    let dxi = (2.0 * PI / (nx as f64 * hx)) * (2.0 * PI / (ny as f64 * hy)) * (2.0 * PI / (nz as f64 * hz));
    let mut acc = 0.0;
    for iz in 0..nz {
        let kz = freq(iz, nz, hz);
        for iy in 0..ny {
            let ky = freq(iy, ny, hy);
            for ix in 0..nx {
                let kx = freq(ix, nx, hx);
                let v = buf[(iz * ny + iy) * nx + ix] * vox;
                acc += v.norm_sqr() / (1.0 + kx * kx + ky * ky + kz * kz);
            }
        }
    }
    (acc * dxi).sqrt()
}

pub fn stability_norms(f: &Volume3D, c: &ConeData) -> Result<StabilityNorms> {
    let g = &c.grid;
    if c.data.len() != g.len() {
        return bad_grid("cone data does not match its grid");
    }
    let measure = cone_cell_measure(g);
    let (nb, np) = (g.n_beta(), g.n_psi());
    let pw = 2 - c.k_weight.min(2) as i32;
    let weight = |idx: usize| {
        let ib = (idx / np) % nb;
        let is = idx % np;
        let (sb, cb) = g.beta_nodes[ib].sin_cos();
        measure[idx] * cb.abs() * sb / g.psi_nodes[is].cos().powi(pw).powi(2)
    };
    let cone2: f64 = c.data.iter().enumerate().map(|(i, v)| v * v * weight(i)).sum();
    let extra = if g.n_z() >= 3 {
        z_derivative(c, 1).iter().enumerate().map(|(i, v)| v * v * weight(i)).sum()
    } else {
        0.0
    };
    let l2 = (f.values.iter().map(|v| v * v).sum::<f64>() * f.voxel_volume()).sqrt();
    Ok(StabilityNorms {
        sobolev_minus_1: sobolev_minus_1(f),
        cone_norm: cone2.sqrt(),
        cone_norm_1: (cone2 + extra).sqrt(),
        l2,
    })
}
