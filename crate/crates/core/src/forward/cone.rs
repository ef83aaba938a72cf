use rayon::prelude::*;
use std::f64::consts::PI;

use super::{clip_disc, trapezoid, RayQuadratureSpec};
use crate::error::{invalid, Result};
use crate::grid::{ConeData, ConeGrid, Volume3D};

/// Cone surface quadrature: rectangle rule in the azimuth η, trapezoid in r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeQuadratureSpec {
    pub n_eta: usize,
    pub step_r: f64,
    /// Ray truncation; `None` means 2·(1 + max|z|) of the cone grid.
    pub r_max: Option<f64>,
}

impl Default for ConeQuadratureSpec {
    fn default() -> Self {
        Self { n_eta: 256, step_r: 1e-3, r_max: None }
    }
}

impl ConeQuadratureSpec {
    pub fn new(n_eta: usize, step_r: f64) -> Result<Self> {
        if n_eta < 16 {
            return invalid(format!("cone quadrature needs n_eta >= 16, got {n_eta}"));
        }
        if !(step_r > 0.0) {
            return invalid("cone quadrature needs step_r > 0");
        }
        Ok(Self { n_eta, step_r, r_max: None })
    }
}

/// Cone axis a(φ, β) = (−cos φ sin β, −sin φ sin β, cos β).
pub fn axis_vector(phi: f64, beta: f64) -> [f64; 3] {
    let (sp, cp) = phi.sin_cos();
    let (sb, cb) = beta.sin_cos();
    [-cp * sb, -sp * sb, cb]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Orthonormal frame (a, u₁, u₂) with u₁ = (−sin φ, cos φ, 0) horizontal and u₂ = a × u₁.
pub fn cone_frame(phi: f64, beta: f64) -> [[f64; 3]; 3] {
    let a = axis_vector(phi, beta);
    let u1 = [-phi.sin(), phi.cos(), 0.0];
    [a, u1, cross(a, u1)]
}

/// Parameter interval of p + t·d inside the cylinder of `vol` (radius extent_xy, z-slab).
fn clip_volume(vol: &Volume3D, p: [f64; 3], d: [f64; 3]) -> Option<(f64, f64)> {
    let (mut a, mut b) = clip_disc([p[0], p[1]], [d[0], d[1]], vol.extent_xy)?;
    if d[2] == 0.0 {
        if p[2] < vol.z_min || p[2] > vol.z_max {
            return None;
        }
    } else {
        let t0 = (vol.z_min - p[2]) / d[2];
        let t1 = (vol.z_max - p[2]) / d[2];
        a = a.max(t0.min(t1));
        b = b.min(t0.max(t1));
    }
    (b > a).then_some((a, b))
}

/// Visits every quadrature node of one cone with its weight
/// sin ψ · r^k · Δr · Δη, clipped to the support cylinder of `vol`.
///
/// This is the single definition of the discrete cone transform: the forward
/// operator gathers through it and the adjoint scatters through it.
#[allow(clippy::too_many_arguments)]
pub fn for_each_cone_sample(
    vol: &Volume3D,
    phi: f64,
    z: f64,
    beta: f64,
    psi: f64,
    k: u32,
    q: &ConeQuadratureSpec,
    r_max: f64,
    mut visit: impl FnMut([f64; 3], f64),
) {
    let [a, u1, u2] = cone_frame(phi, beta);
    let v = [phi.cos(), phi.sin(), z];
    let (sp, cp) = psi.sin_cos();
    let d_eta = 2.0 * PI / q.n_eta as f64;
    for l in 0..q.n_eta {
        let (se, ce) = (l as f64 * d_eta).sin_cos();
        let w: [f64; 3] = std::array::from_fn(|i| cp * a[i] + sp * (ce * u1[i] + se * u2[i]));
        let Some((t0, t1)) = clip_volume(vol, v, w) else { continue };
        let (r0, r1) = (t0.max(0.0), t1.min(r_max));
        if r1 <= r0 {
            continue;
        }
        for (r, wr) in trapezoid(r0, r1, q.step_r) {
            let weight = sp * wr * d_eta * r.powi(k as i32);
            visit([v[0] + r * w[0], v[1] + r * w[1], v[2] + r * w[2]], weight);
        }
    }
}

pub(crate) fn default_r_max(grid: &ConeGrid, q: &ConeQuadratureSpec) -> f64 {
    q.r_max.unwrap_or_else(|| {
        let zmax = grid.z_nodes.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        2.0 * (1.0 + zmax)
    })
}

/// Weighted conical Radon transform of a voxel volume on the given cone grid.
pub fn conical_forward(vol: &Volume3D, k_weight: u32, grid: &ConeGrid, q: &ConeQuadratureSpec) -> Result<ConeData> {
    if q.n_eta < 16 {
        return invalid("cone quadrature needs n_eta >= 16");
    }
    let mut out = ConeData::zeros(grid.clone(), k_weight);
    let r_max = default_r_max(grid, q);
    let block = grid.n_beta() * grid.n_psi();
    let nz = grid.n_z();
    out.data.par_chunks_mut(block).enumerate().for_each(|(pz, chunk)| {
        let (ip, iz) = (pz / nz, pz % nz);
        let (phi, z) = (grid.phi(ip), grid.z_nodes[iz]);
        for (ib, &beta) in grid.beta_nodes.iter().enumerate() {
            for (is, &psi) in grid.psi_nodes.iter().enumerate() {
                let mut acc = 0.0;
                for_each_cone_sample(vol, phi, z, beta, psi, k_weight, q, r_max, |p, w| {
                    if let Some(st) = vol.stencil(p) {
                        let f: f64 = st.iter().map(|&(i, c)| c * vol.values[i]).sum();
                        acc += w * f;
                    }
                });
                chunk[ib * grid.n_psi() + is] = acc;
            }
        }
    });
    Ok(out)
}

/// Weighted one-sided ray integral ∫_0^∞ f(v + r·u) r^k dr for a possibly non-unit u.
///
/// The trapezoid nodes are placed at the same geometric points for every scaling
/// of u, so X_k(v, λu) = λ^{−k−1} X_k(v, u) holds up to rounding.
pub fn weighted_ray_3d(vol: &Volume3D, vertex: [f64; 3], u: [f64; 3], k: u32, q: &RayQuadratureSpec) -> f64 {
    let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let Some((t0, t1)) = clip_volume(vol, vertex, u) else { return 0.0 };
    let (a, b) = (t0.max(0.0), t1.min(q.r_max / norm));
    if b <= a {
        return 0.0;
    }
    trapezoid(a, b, q.step / norm)
        .map(|(t, w)| w * t.powi(k as i32) * vol.sample([vertex[0] + t * u[0], vertex[1] + t * u[1], vertex[2] + t * u[2]]))
        .sum()
}
