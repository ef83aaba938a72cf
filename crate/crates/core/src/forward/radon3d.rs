use rayon::prelude::*;

use super::{axis_vector, trapezoid, RayQuadratureSpec};
use crate::error::{invalid, Result};
use crate::grid::{RadonData3D, Volume3D};

fn plane_frame(w: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // e1 ⟂ w, horizontal unless w is vertical.
    let e1 = if w[0].abs() + w[1].abs() < 1e-12 {
        [1.0, 0.0, 0.0]
    } else {
        let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
        [-w[1] / n, w[0] / n, 0.0]
    };
    let e2 = [w[1] * e1[2] - w[2] * e1[1], w[2] * e1[0] - w[0] * e1[2], w[0] * e1[1] - w[1] * e1[0]];
    (e1, e2)
}

/// Plane integral ∫_{⟨x,ω⟩=s} f dA by a 2D trapezoidal rule with spacing `q.step`
/// on an orthonormal frame of ω^⊥, covering the plane's intersection with the volume.
pub fn radon_3d(vol: &Volume3D, omega: [f64; 3], s: f64, q: &RayQuadratureSpec) -> Result<f64> {
    let norm = (omega.iter().map(|c| c * c).sum::<f64>()).sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return invalid(format!("plane normal must be a unit vector (norm {norm})"));
    }
    Ok(plane_sum(vol, omega, s, q.step))
}

fn plane_sum(vol: &Volume3D, w: [f64; 3], s: f64, step: f64) -> f64 {
    let zabs = vol.z_min.abs().max(vol.z_max.abs());
    let rho2 = 2.0 * vol.extent_xy * vol.extent_xy + zabs * zabs;
    if s * s >= rho2 {
        return 0.0;
    }
    let half = (rho2 - s * s).sqrt();
    let (e1, e2) = plane_frame(w);
    let c = w.map(|x| x * s);
    let mut acc = 0.0;
    for (a, wa) in trapezoid(-half, half, step) {
        let row: f64 = trapezoid(-half, half, step)
            .map(|(b, wb)| {
                let p = [c[0] + a * e1[0] + b * e2[0], c[1] + a * e1[1] + b * e2[1], c[2] + a * e1[2] + b * e2[2]];
                wb * vol.sample(p)
            })
            .sum();
        acc += wa * row;
    }
    acc
}

/// Plane integrals over the directions a(φ_i, β_j) and offsets `s_nodes`.
pub fn radon_3d_data(
    vol: &Volume3D,
    n_phi: usize,
    beta_nodes: &[f64],
    s_nodes: &[f64],
    q: &RayQuadratureSpec,
) -> Result<RadonData3D> {
    let mut out = RadonData3D::zeros(n_phi, beta_nodes.to_vec(), s_nodes.to_vec())?;
    let ns = s_nodes.len();
    let nb = beta_nodes.len();
    out.data.par_chunks_mut(ns).enumerate().for_each(|(d, row)| {
        let (ip, ib) = (d / nb, d % nb);
        let phi = 2.0 * std::f64::consts::PI * ip as f64 / n_phi as f64;
        let w = axis_vector(phi, beta_nodes[ib]);
        for (v, &s) in row.iter_mut().zip(s_nodes) {
            *v = plane_sum(vol, w, s, q.step);
        }
    });
    Ok(out)
}
