use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{bad_grid, invalid, Result};
use crate::grid::{cell_widths, midpoint_nodes, ConeData, VlineSinogram};
use crate::quad::{fd_derivative, fp_weights};

/// Linear map from ∂_z^k C_k(φ, z, ·, ·) to the V-line transform V f_z(φ, χ).
///
/// Entry (χ_c, β_b, ψ_j) holds
///   ((−1)^{k−1}/(k−1)!) · (−1/(2π²)) · Σ_γ sin^{k−1}γ cos γ sin χ Δγ · Δβ_b · ω_j(q),
/// where ω_j(q) are finite-part weights for ∫_0^π (·)/(cos ψ − q)² dψ and
/// q = cos γ cos χ sin β + sin γ cos β.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub k_weight: u32,
    /// Output V-line half-opening angles χ ∈ (0, π/2).
    pub chi_nodes: Vec<f64>,
    pub beta_nodes: Vec<f64>,
    pub psi_nodes: Vec<f64>,
    /// Midpoint nodes of the inner γ ∈ (−π/2, 0) quadrature.
    pub gamma_nodes: Vec<f64>,
    /// Row-major (χ, β, ψ).
    pub values: Vec<f64>,
}

impl KernelTable {
    pub fn get(&self, c: usize, b: usize, j: usize) -> f64 {
        self.values[(c * self.beta_nodes.len() + b) * self.psi_nodes.len() + j]
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Smallest γ resolution that resolves the kernel at the given χ nodes.
///
/// As χ → 0 the γ-integrand peaks where sin(β + γ) ≈ 1 with a width of order χ,
/// so the midpoint spacing π/(2 n_gamma) must stay below about χ_min / 4.
pub fn default_n_gamma(chi_nodes: &[f64]) -> usize {
    let chi_min = chi_nodes.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(chi_min > 0.0) {
        return 64;
    }
    ((2.0 * PI / chi_min).ceil() as usize).max(64)
}

/// Builds the kernel table for weight exponent `k_weight ≥ 1`.
///
/// `n_gamma` below [`default_n_gamma`] leaves the small-χ entries under-resolved;
/// the error shows up for vertices above or below the object.
pub fn kernel_table(
    k_weight: u32,
    chi_nodes: &[f64],
    beta_nodes: &[f64],
    psi_nodes: &[f64],
    n_gamma: usize,
) -> Result<KernelTable> {
    if k_weight == 0 {
        return invalid("the V-line reduction needs k_weight >= 1; use Method 2 for k = 0");
    }
    if n_gamma < 1 || psi_nodes.len() < 4 {
        return invalid("kernel table needs n_gamma >= 1 and at least 4 ψ nodes");
    }
    if chi_nodes.iter().any(|&c| !(c > 0.0 && c < PI / 2.0)) {
        return bad_grid("χ nodes must lie in (0, π/2)");
    }
    let gamma_nodes = midpoint_nodes(-PI / 2.0, 0.0, n_gamma);
    let d_gamma = (PI / 2.0) / n_gamma as f64;
    let d_beta = cell_widths(beta_nodes, 0.0, PI);
    let psi_cells = cell_widths(psi_nodes, 0.0, PI);
    let sign = if (k_weight - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let pref = sign / factorial(k_weight - 1) * (-1.0 / (2.0 * PI * PI));
    let (nb, np) = (beta_nodes.len(), psi_nodes.len());
    let mut values = vec![0.0; chi_nodes.len() * nb * np];
    values.par_chunks_mut(nb * np).enumerate().for_each(|(c, block)| {
        let (sc, cc) = chi_nodes[c].sin_cos();
        for (b, &beta) in beta_nodes.iter().enumerate() {
            let (sb, cb) = beta.sin_cos();
            let row = &mut block[b * np..(b + 1) * np];
            for &g in &gamma_nodes {
                let (sg, cg) = g.sin_cos();
                let outer = pref * sg.powi(k_weight as i32 - 1) * cg * sc * d_gamma * d_beta[b];
                let q = cg * cc * sb + sg * cb;
                for (r, w) in row.iter_mut().zip(fp_weights(psi_nodes, &psi_cells, q)) {
                    *r += outer * w;
                }
            }
        }
    });
    Ok(KernelTable {
        k_weight,
        chi_nodes: chi_nodes.to_vec(),
        beta_nodes: beta_nodes.to_vec(),
        psi_nodes: psi_nodes.to_vec(),
        gamma_nodes,
        values,
    })
}

/// `k`-th z-derivative of the cone data, second-order finite differences.
pub(crate) fn z_derivative(c: &ConeData, k: u32) -> Vec<f64> {
    let g = &c.grid;
    let block = g.n_beta() * g.n_psi();
    let nz = g.n_z();
    let h = g.dz();
    let mut cur = c.data.clone();
    for _ in 0..k {
        let mut next = vec![0.0; cur.len()];
        for ip in 0..g.n_phi {
            let base = ip * nz * block;
            let slices: Vec<&[f64]> = (0..nz).map(|iz| &cur[base + iz * block..base + (iz + 1) * block]).collect();
            for iz in 0..nz {
                let d = fd_derivative(&slices, h, iz);
                next[base + iz * block..base + (iz + 1) * block].copy_from_slice(&d);
            }
        }
        cur = next;
    }
    cur
}

/// Recovers V f_z(φ, χ) for every z node from cone data with weight k ≥ 1.
pub fn vline_from_cone(c: &ConeData, kt: &KernelTable) -> Result<Vec<VlineSinogram>> {
    let g = &c.grid;
    if c.k_weight != kt.k_weight {
        return invalid(format!("cone data has k = {}, kernel table k = {}", c.k_weight, kt.k_weight));
    }
    if g.n_z() < c.k_weight as usize + 2 {
        return bad_grid(format!("need at least {} z samples for ∂_z^{}", c.k_weight + 2, c.k_weight));
    }
    if g.beta_nodes != kt.beta_nodes || g.psi_nodes != kt.psi_nodes {
        return bad_grid("kernel table and cone data use different (β, ψ) grids");
    }
    let d = z_derivative(c, c.k_weight);
    let (nb, np, nc) = (g.n_beta(), g.n_psi(), kt.chi_nodes.len());
    let block = nb * np;
    (0..g.n_z())
        .into_par_iter()
        .map(|iz| {
            let mut data = vec![0.0; g.n_phi * nc];
            for ip in 0..g.n_phi {
                let start = g.index(ip, iz, 0, 0);
                let src = &d[start..start + block];
                for ci in 0..nc {
                    let w = &kt.values[ci * block..(ci + 1) * block];
                    data[ip * nc + ci] = w.iter().zip(src).map(|(a, b)| a * b).sum();
                }
            }
            VlineSinogram::new(g.n_phi, kt.chi_nodes.clone(), data)
        })
        .collect()
}
