use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{bad_grid, Result};
use crate::forward::{default_r_max, for_each_cone_sample, ConeQuadratureSpec};
use crate::grid::{cell_widths, ConeData, ConeGrid, Volume3D};

/// Quadrature measure Δφ Δz Δβ Δψ of every cone sample, index (φ, z, β, ψ).
pub fn cone_cell_measure(grid: &ConeGrid) -> Vec<f64> {
    let d_phi = 2.0 * PI / grid.n_phi as f64;
    let dz = grid.dz();
    let db = cell_widths(&grid.beta_nodes, 0.0, PI);
    let dp = cell_widths(&grid.psi_nodes, 0.0, PI);
    let mut out = Vec::with_capacity(grid.len());
    for _ in 0..grid.n_phi * grid.n_z() {
        for &b in &db {
            out.extend(dp.iter().map(|&p| d_phi * dz * b * p));
        }
    }
    out
}

/// Conical backprojection C♯_k: the transpose of `conical_forward` with respect to
/// the cone measure Δφ Δz Δβ Δψ and the voxel measure, so that
/// ⟨C_k f, g⟩_cone = ⟨f, C♯_k g⟩_vol holds to rounding.
pub fn adjoint_cone(g: &ConeData, target: &Volume3D, q: &ConeQuadratureSpec) -> Result<Volume3D> {
    let grid = &g.grid;
    if g.data.len() != grid.len() {
        return bad_grid("cone data does not match its grid");
    }
    let measure = cone_cell_measure(grid);
    let r_max = default_r_max(grid, q);
    let k = g.k_weight;
    // Fixed φ-groups summed in order keep the result independent of the thread count.
    let n_groups = grid.n_phi.min(8);
    let per = grid.n_phi.div_ceil(n_groups);
    let partial: Vec<Vec<f64>> = (0..n_groups)
        .into_par_iter()
        .map(|gi| {
            let mut buf = vec![0.0; target.values.len()];
            for ip in gi * per..((gi + 1) * per).min(grid.n_phi) {
                let phi = grid.phi(ip);
                for (iz, &z) in grid.z_nodes.iter().enumerate() {
                    for (ib, &beta) in grid.beta_nodes.iter().enumerate() {
                        for (is, &psi) in grid.psi_nodes.iter().enumerate() {
                            let idx = grid.index(ip, iz, ib, is);
                            let gv = g.data[idx] * measure[idx];
                            if gv == 0.0 {
                                continue;
                            }
                            for_each_cone_sample(target, phi, z, beta, psi, k, q, r_max, |p, w| {
                                if let Some(st) = target.stencil(p) {
                                    for (i, c) in st {
                                        buf[i] += gv * w * c;
                                    }
                                }
                            });
                        }
                    }
                }
            }
            buf
        })
        .collect();
    let mut out = target.same_grid();
    let inv = 1.0 / target.voxel_volume();
    for buf in partial {
        for (o, b) in out.values.iter_mut().zip(buf) {
            *o += b;
        }
    }
    out.values.iter_mut().for_each(|v| *v *= inv);
    Ok(out)
}
