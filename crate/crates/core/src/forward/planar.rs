use rayon::prelude::*;

use super::{clip_disc, trapezoid, RayQuadratureSpec};
use crate::error::{invalid, Result};
use crate::grid::{Image2D, VlineSinogram};

/// One-sided ray integral ∫_0^{r_max} F(vertex + r·direction) dr, clipped to the unit disc.
pub fn xray_2d(img: &Image2D, vertex: [f64; 2], direction: [f64; 2], q: &RayQuadratureSpec) -> Result<f64> {
    let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return invalid(format!("ray direction must be a unit vector (norm {norm})"));
    }
    Ok(ray_sum(img, vertex, direction, q))
}

fn ray_sum(img: &Image2D, p: [f64; 2], d: [f64; 2], q: &RayQuadratureSpec) -> f64 {
    let Some((t0, t1)) = clip_disc(p, d, 1.0) else { return 0.0 };
    let (a, b) = (t0.max(0.0), t1.min(q.r_max));
    if b <= a {
        return 0.0;
    }
    trapezoid(a, b, q.step).map(|(t, w)| w * img.sample(p[0] + t * d[0], p[1] + t * d[1])).sum()
}

fn theta(a: f64) -> [f64; 2] {
    [a.cos(), a.sin()]
}

fn sinogram(
    img: &Image2D,
    n_phi: usize,
    psi_nodes: &[f64],
    q: &RayQuadratureSpec,
    sides: &[f64],
) -> Result<VlineSinogram> {
    let mut s = VlineSinogram::zeros(n_phi, psi_nodes.to_vec())?;
    let np = psi_nodes.len();
    s.data.par_chunks_mut(np).enumerate().for_each(|(k, row)| {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
        let v = theta(phi);
        for (j, out) in row.iter_mut().enumerate() {
            *out = sides
                .iter()
                .map(|&sigma| {
                    let t = theta(phi - sigma * psi_nodes[j]);
                    ray_sum(img, v, [-t[0], -t[1]], q)
                })
                .sum();
        }
    });
    Ok(s)
}

/// V-line transform: the two rays from θ(φ_k) with directions −θ(φ_k ∓ ψ_j).
pub fn vline_forward(img: &Image2D, n_phi: usize, psi_nodes: &[f64], q: &RayQuadratureSpec) -> Result<VlineSinogram> {
    sinogram(img, n_phi, psi_nodes, q, &[1.0, -1.0])
}

/// One-sided X-ray transform in the V-line layout: the single ray with direction −θ(φ_k − ψ_j).
pub fn xray_forward(img: &Image2D, n_phi: usize, psi_nodes: &[f64], q: &RayQuadratureSpec) -> Result<VlineSinogram> {
    sinogram(img, n_phi, psi_nodes, q, &[1.0])
}

/// Full-line integral over {x : ⟨x, θ(α)⟩ = s}; zero for |s| ≥ 1.
pub fn radon_2d(img: &Image2D, alpha: f64, s: f64, q: &RayQuadratureSpec) -> f64 {
    if s.abs() >= 1.0 {
        return 0.0;
    }
    let n = theta(alpha);
    let t = [-n[1], n[0]];
    let half = (1.0 - s * s).sqrt();
    trapezoid(-half, half, q.step)
        .map(|(u, w)| w * img.sample(s * n[0] + u * t[0], s * n[1] + u * t[1]))
        .sum()
}
