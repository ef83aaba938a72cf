use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::forward::axis_vector;
use crate::grid::{cell_widths, ConeData, Volume3D};
use crate::quad::Stencil;

use super::kernel::z_derivative;
use super::method2::psi_moments;

/// Largest voxel count accepted without `allow_large`.
pub const DIRECT_MAX_VOXELS: usize = 32 * 32 * 32;

/// Half-width of the blend between a direction and its antipode, in s.
const HALF_WIDTH: f64 = 0.25;

/// PV Σ_j D_j Δz / (z* − z_j) over a uniform z grid, by subtracting the linear
/// interpolant at z*; cells are [z_0 − Δz/2, z_last + Δz/2].
fn pv_in_z(d: &[f64], z0: f64, dz: f64, zs: f64) -> f64 {
    let n = d.len();
    let (a, b) = (z0 - 0.5 * dz, z0 + (n as f64 - 0.5) * dz);
    if zs <= a || zs >= b {
        return d.iter().enumerate().map(|(j, &v)| v * dz / (zs - (z0 + j as f64 * dz))).sum();
    }
    let u = ((zs - z0) / dz).clamp(0.0, (n - 1) as f64);
    let i = (u.floor() as usize).min(n.saturating_sub(2));
    let f = u - i as f64;
    let dstar = d[i] * (1.0 - f) + d[(i + 1).min(n - 1)] * f;
    let slope = if n > 1 { (d[(i + 1).min(n - 1)] - d[i]) / dz } else { 0.0 };
    let mut acc = dstar * ((zs - a) / (b - zs)).abs().ln();
    for (j, &v) in d.iter().enumerate() {
        let e = zs - (z0 + j as f64 * dz);
        acc += if e.abs() < 1e-12 * dz { -slope * dz } else { (v - dstar) * dz / e };
    }
    acc
}

/// Direct inversion
///   f(x) = −(1/8π⁴) ∫_{S²} w_k(β) PV∫ D(φ, β, z) / (⟨x, a⟩ − z cos β + sin β) dz dω,
/// with D = ∫ ∂_z^{1+k} C_k dψ / cos^{2−k} ψ, w_1 = 1/|cos β| and w_0 = sign(cos β).
///
/// Each direction integrates only the planes on its own side of the origin and the
/// antipodal direction covers the rest. Directions whose vertex window does not reach
/// across the origin are interpolated in β from covered ones; those without covered
/// neighbours on both sides are dropped.
///
/// Cost is a full quadrature per voxel; meant for verification on small grids.
pub fn invert_cone_direct(c: &ConeData, template: &Volume3D, allow_large: bool) -> Result<Volume3D> {
    if c.k_weight >= 2 {
        return invalid("the direct formula is only available for k = 0 and k = 1");
    }
    if template.values.len() > DIRECT_MAX_VOXELS && !allow_large {
        return invalid(format!(
            "direct inversion of {} voxels refused (limit {DIRECT_MAX_VOXELS}); pass allow_large to override",
            template.values.len()
        ));
    }
    let g = &c.grid;
    let deriv = ConeData::new(g.clone(), c.k_weight, z_derivative(c, 1 + c.k_weight))?;
    // psi_moments returns −(1/π) times the ψ-integral.
    let d_all: Vec<f64> = psi_moments(&deriv)?.into_iter().map(|v| -PI * v).collect();
    let (nb, nz) = (g.n_beta(), g.n_z());
    let (z0, dz) = (g.z_nodes[0], g.dz());
    let d_beta = cell_widths(&g.beta_nodes, 0.0, PI);
    let d_phi = 2.0 * PI / g.n_phi as f64;
    let pref = -1.0 / (8.0 * PI.powi(4));
    let (z_first, z_last) = (g.z_nodes[0], g.z_nodes[nz - 1]);
    let z_half = template.z_min.abs().max(template.z_max.abs());
    let r_xy = template.extent_xy.min(1.0);

    // The integrand is even under ω → −ω, so each direction only integrates the
    // planes with s = z cos β − sin β ≤ 0 through a smooth partition of unity
    // χ(s) + χ(−s) = 1 and the antipode supplies the rest (hence the factor 2).
    // A direction is usable when its vertex window reaches s = δ.
    let delta = HALF_WIDTH;
    let chi = |s: f64| {
        if s <= -delta {
            1.0
        } else if s >= delta {
            0.0
        } else {
            0.5 * (1.0 - (0.5 * PI * s / delta).sin())
        }
    };
    let covered: Vec<bool> = (0..g.n_phi * nb)
        .map(|d| {
            let (sb, cb) = g.beta_nodes[d % nb].sin_cos();
            if cb.abs() < 1e-9 {
                return false;
            }
            let (s1, s2) = (z_first * cb - sb, z_last * cb - sb);
            s1.min(s2) <= -delta.max(sb * r_xy + cb.abs() * z_half) && s1.max(s2) >= delta
        })
        .collect();

    // The integrand w_k PV/cos β is smooth in β, so uncovered directions are
    // interpolated along their meridian; the stencils fold into the weights of the
    // covered directions.
    let mut weight = vec![0.0; g.n_phi * nb];
    for ip in 0..g.n_phi {
        let observed: Vec<usize> = (0..nb).filter(|&ib| covered[ip * nb + ib]).collect();
        for ib in 0..nb {
            let q = 2.0 * pref * g.beta_nodes[ib].sin() * d_beta[ib] * d_phi;
            if covered[ip * nb + ib] {
                weight[ip * nb + ib] += q;
                continue;
            }
            let split = observed.partition_point(|&j| j < ib);
            if split == 0 || split == observed.len() {
                continue;
            }
            let (lo, hi) = (split.saturating_sub(2), (split + 2).min(observed.len()));
            let nodes: Vec<f64> = observed[lo..hi].iter().map(|&j| g.beta_nodes[j]).collect();
            let st = Stencil::new(&nodes, g.beta_nodes[ib]);
            for (&a, w) in st.idx.iter().zip(&st.w0) {
                weight[ip * nb + observed[lo + a]] += q * w;
            }
        }
    }

    let dirs: Vec<([f64; 3], f64, f64, f64, Vec<f64>)> = (0..g.n_phi * nb)
        .filter(|&d| covered[d])
        .map(|d| {
            let (ip, ib) = (d / nb, d % nb);
            let beta = g.beta_nodes[ib];
            let (sb, cb) = beta.sin_cos();
            let wk = if c.k_weight == 1 { 1.0 / cb.abs() } else { cb.signum() };
            let row = (0..nz).map(|iz| d_all[d * nz + iz] * chi(g.z_nodes[iz] * cb - sb)).collect();
            (axis_vector(g.phi(ip), beta), weight[d] * wk, sb, cb, row)
        })
        .collect();

    let mut vol = template.same_grid();
    let plane = vol.n_x * vol.n_y;
    let grid = template.clone();
    vol.values.par_chunks_mut(plane).enumerate().for_each(|(iz, out)| {
        let z = grid.z(iz);
        for iy in 0..grid.n_y {
            let y = grid.y(iy);
            for ix in 0..grid.n_x {
                let x = grid.x(ix);
                out[iy * grid.n_x + ix] = dirs
                    .iter()
                    .map(|(a, w, sb, cb, row)| {
                        let t = a[0] * x + a[1] * y + a[2] * z;
                        // t − z cos β + sin β = cos β (z* − z)
                        w * pv_in_z(row, z0, dz, (t + sb) / cb) / cb
                    })
                    .sum();
            }
        }
    });
    Ok(vol)
}
