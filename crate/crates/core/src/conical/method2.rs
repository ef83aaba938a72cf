use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{bad_grid, invalid, Result};
use crate::forward::axis_vector;
use crate::grid::{cell_widths, uniform_nodes, ConeData, RadonData3D, Volume3D};
use crate::quad::{cubic_uniform, fp_weights, pv_weights, CubicSpline, Stencil};
use crate::special::{hilbert_uniform, spectral_derivative};

/// Directions with |cos β| below this are treated as horizontal (degenerate z → s map).
const HORIZONTAL: f64 = 1e-9;
/// Fraction of the s-window at each end that is tapered before differentiation.
const TAPER: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct Method2Config {
    /// Number of uniform offsets on [−(1 + max|z|), 1 + max|z|].
    pub n_s: usize,
    /// Directions whose merged s-samples leave a gap wider than this are dropped.
    pub max_gap: f64,
}

impl Default for Method2Config {
    fn default() -> Self {
        Self { n_s: 1024, max_gap: 0.6 }
    }
}

/// Moments of the cone data and their mapping onto Radon offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Method2Intermediate {
    pub k_weight: u32,
    pub z_nodes: Vec<f64>,
    /// −(1/π) ∫ C_k dψ / cos^{2−k} ψ, index (φ, β, z).
    pub moments: Vec<f64>,
    /// H R f (k = 1) or H ∂_s R f (k = 0) on the uniform s-grid.
    pub radon: RadonData3D,
    /// s-derivatives of R f carried inside the Hilbert transform: 1 − k.
    pub derivative_order: u32,
    /// Per (φ, β): true when the direction could neither be sampled nor interpolated
    /// and is left out of the backprojection.
    pub missing: Vec<bool>,
    /// Per (φ, β): true when the row was interpolated in β from observed rows.
    pub filled: Vec<bool>,
}

fn check_k(c: &ConeData) -> Result<()> {
    if c.k_weight >= 2 {
        return invalid("the Radon route only works for k = 0 and k = 1");
    }
    if c.grid.n_z() < 4 {
        return bad_grid("Method 2 needs at least 4 z nodes");
    }
    Ok(())
}

/// ψ-moments of the cone data: principal value for k = 1, finite part for k = 0.
pub fn psi_moments(c: &ConeData) -> Result<Vec<f64>> {
    check_k(c)?;
    let g = &c.grid;
    let cells = cell_widths(&g.psi_nodes, 0.0, PI);
    let w = if c.k_weight == 1 {
        pv_weights(&g.psi_nodes, &cells, 0.0)
    } else {
        fp_weights(&g.psi_nodes, &cells, 0.0)
    };
    let (nz, nb) = (g.n_z(), g.n_beta());
    let mut out = vec![0.0; g.n_phi * nb * nz];
    out.par_chunks_mut(nb * nz).enumerate().for_each(|(ip, chunk)| {
        for ib in 0..nb {
            for iz in 0..nz {
                let row = c.psi_row(ip, iz, ib);
                let m: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
                chunk[ib * nz + iz] = -m / PI;
            }
        }
    });
    Ok(out)
}

pub fn cone_moments(c: &ConeData) -> Result<Method2Intermediate> {
    cone_moments_with(c, &Method2Config::default())
}

pub fn cone_moments_with(c: &ConeData, cfg: &Method2Config) -> Result<Method2Intermediate> {
    let moments = psi_moments(c)?;
    let g = &c.grid;
    let (np, nb, nz) = (g.n_phi, g.n_beta(), g.n_z());
    let z = &g.z_nodes;
    let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s_nodes = uniform_nodes(-(1.0 + zmax), 1.0 + zmax, cfg.n_s);
    let mut radon = RadonData3D::zeros(np, g.beta_nodes.clone(), s_nodes.clone())?;
    let ds = radon.ds();

    // Antipodal partner a(φ+π, π−β) = −a(φ, β), when the grid contains it.
    let symmetric_beta = (0..nb).all(|i| (g.beta_nodes[i] + g.beta_nodes[nb - 1 - i] - PI).abs() < 1e-12);
    let merge = np % 2 == 0 && symmetric_beta;
    // H R f is odd under (ω, s) → (−ω, −s); H ∂_s R f is even.
    let parity = if c.k_weight == 1 { -1.0 } else { 1.0 };
    let tail_power = if c.k_weight == 1 { 1 } else { 2 };
    let mom = |ip: usize, ib: usize, iz: usize| moments[(ip * nb + ib) * nz + iz];

    let rows: Vec<(Vec<f64>, bool)> = (0..np * nb)
        .into_par_iter()
        .map(|d| {
            let (ip, ib) = (d / nb, d % nb);
            let (sb, cb) = g.beta_nodes[ib].sin_cos();
            if cb.abs() < HORIZONTAL {
                return (vec![0.0; s_nodes.len()], false);
            }
            let own: Vec<(f64, f64)> = (0..nz).map(|iz| (z[iz] * cb - sb, mom(ip, ib, iz))).collect();
            let mut families = vec![Family::new(own, -sb, cb)];
            if merge {
                let (ip2, ib2) = ((ip + np / 2) % np, nb - 1 - ib);
                let anti = (0..nz).map(|iz| (z[iz] * cb + sb, parity * mom(ip2, ib2, iz))).collect();
                families.push(Family::new(anti, sb, cb));
            }
            let merged = merged_samples(&families, 0.5 * g.dz() * cb.abs());
            let (xs, ys): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
            let gap = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            if gap > cfg.max_gap || xs.len() < 4 {
                return (vec![0.0; s_nodes.len()], true);
            }
            let (lo, hi) = (xs[0], xs[xs.len() - 1]);
            let far = far_field_fit(&xs, &ys, tail_power);
            let bridge = CubicSpline::new(xs, ys);
            let value = |s: f64| blend(&families, s).unwrap_or_else(|| bridge.eval(s));
            let (ylo, yhi) = (value(lo), value(hi));
            // Outside the sampled window the transform follows its far-field
            // expansion a s^{−p} + b s^{−p−1}, p = 2 − k; a faster-decaying term
            // absorbs the misfit at the window end.
            let tail = |s: f64, s_end: f64, v_end: f64| {
                if s_end.abs() < ds {
                    return 0.0;
                }
                match far {
                    Some((a, b)) => {
                        let f = |t: f64| a * t.powi(-tail_power) + b * t.powi(-tail_power - 1);
                        f(s) + (v_end - f(s_end)) * (s_end / s).powi(tail_power + 3)
                    }
                    None => v_end * (s_end / s).powi(tail_power),
                }
            };
            let row = s_nodes
                .iter()
                .map(|&s| {
                    if s < lo {
                        tail(s, lo, ylo)
                    } else if s > hi {
                        tail(s, hi, yhi)
                    } else {
                        value(s)
                    }
                })
                .collect();
            (row, false)
        })
        .collect();

    let mut missing = vec![false; np * nb];
    for (d, (row, miss)) in rows.into_iter().enumerate() {
        radon.row_mut(d / nb, d % nb).copy_from_slice(&row);
        missing[d] = miss;
    }
    // Horizontal directions carry no usable samples at all.
    for ib in 0..nb {
        if g.beta_nodes[ib].cos().abs() < HORIZONTAL {
            (0..np).for_each(|ip| missing[ip * nb + ib] = true);
        }
    }
    let filled = fill_in_beta(&mut radon, &mut missing);
    Ok(Method2Intermediate {
        k_weight: c.k_weight,
        z_nodes: z.clone(),
        moments,
        radon,
        derivative_order: 1 - c.k_weight,
        missing,
        filled,
    })
}

/// Completes unobserved directions along each meridian: a row whose direction
/// could not be sampled is interpolated in β (cubic Lagrange through up to two
/// observed rows on each side). Rows without observed neighbours on both sides
/// stay missing. Returns the mask of interpolated rows.
fn fill_in_beta(radon: &mut RadonData3D, missing: &mut [bool]) -> Vec<bool> {
    let nb = radon.beta_nodes.len();
    let mut filled = vec![false; missing.len()];
    for ip in 0..radon.n_phi {
        let observed: Vec<usize> = (0..nb).filter(|&ib| !missing[ip * nb + ib]).collect();
        for ib in 0..nb {
            if !missing[ip * nb + ib] {
                continue;
            }
            let split = observed.partition_point(|&j| j < ib);
            if split == 0 || split == observed.len() {
                continue;
            }
            let lo = split.saturating_sub(2);
            let hi = (split + 2).min(observed.len());
            let nodes: Vec<f64> = observed[lo..hi].iter().map(|&j| radon.beta_nodes[j]).collect();
            let st = Stencil::new(&nodes, radon.beta_nodes[ib]);
            let row: Vec<f64> = (0..radon.n_s())
                .map(|i| st.idx.iter().zip(&st.w0).map(|(&a, w)| w * radon.row(ip, observed[lo + a])[i]).sum())
                .collect();
            radon.row_mut(ip, ib).copy_from_slice(&row);
            filled[ip * nb + ib] = true;
        }
    }
    for (m, f) in missing.iter_mut().zip(&filled) {
        *m &= !f;
    }
    filled
}

/// Samples of one vertex family (own or antipodal) for a fixed direction, with
/// s = z cos β + offset.
struct Family {
    spline: CubicSpline,
    lo: f64,
    hi: f64,
    offset: f64,
    cb: f64,
    points: Vec<(f64, f64)>,
}

impl Family {
    fn new(mut points: Vec<(f64, f64)>, offset: f64, cb: f64) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        Self { spline: CubicSpline::new(xs, ys), lo, hi, offset, cb, points }
    }

    /// Blending weight: favours vertices close to the object and vanishes
    /// smoothly at the ends of the family's window.
    fn weight(&self, s: f64) -> f64 {
        if s < self.lo || s > self.hi {
            return 0.0;
        }
        let z = (s - self.offset) / self.cb;
        let ramp_len = (0.25 * (self.hi - self.lo)).min(0.5);
        let d = ((s - self.lo).min(self.hi - s) / ramp_len).min(1.0);
        let ramp = d * d * (3.0 - 2.0 * d);
        ramp / (1.0 + z * z).powi(2)
    }
}

/// Weighted blend of the family splines, or `None` where no family covers s.
fn blend(families: &[Family], s: f64) -> Option<f64> {
    let (mut num, mut den, mut any) = (0.0, 0.0, false);
    let mut plain = (0.0, 0.0);
    for f in families {
        if s < f.lo || s > f.hi {
            continue;
        }
        any = true;
        let v = f.spline.eval(s);
        let w = f.weight(s);
        num += w * v;
        den += w;
        plain.0 += v;
        plain.1 += 1.0;
    }
    if !any {
        None
    } else if den > 1e-300 {
        Some(num / den)
    } else {
        Some(plain.0 / plain.1)
    }
}

/// All samples of all families, sorted, with points closer than `tol` averaged.
fn merged_samples(families: &[Family], tol: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = families.iter().flat_map(|f| f.points.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, f64)> = Vec::with_capacity(pts.len());
    for (s, v) in pts {
        match out.last_mut() {
            Some((l, y, n)) if s - *l < tol => {
                *l = (*l * *n + s) / (*n + 1.0);
                *y = (*y * *n + v) / (*n + 1.0);
                *n += 1.0;
            }
            _ => out.push((s, v, 1.0)),
        }
    }
    out.into_iter().map(|(s, v, _)| (s, v)).collect()
}

/// Least-squares fit of a s^{−p} + b s^{−p−1} to the samples in the outer part of
/// a window that straddles s = 0.
fn far_field_fit(xs: &[f64], ys: &[f64], p: i32) -> Option<(f64, f64)> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if !(lo < 0.0 && hi > 0.0) {
        return None;
    }
    let cut = 0.6 * lo.abs().min(hi);
    let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut count = 0;
    for (&x, &y) in xs.iter().zip(ys) {
        if x.abs() < cut {
            continue;
        }
        let (u, v) = (x.powi(-p), x.powi(-p - 1));
        a11 += u * u;
        a12 += u * v;
        a22 += v * v;
        r1 += u * y;
        r2 += v * y;
        count += 1;
    }
    let det = a11 * a22 - a12 * a12;
    if count < 4 || det <= 1e-12 * a11 * a22 {
        return None;
    }
    Some(((a22 * r1 - a12 * r2) / det, (a11 * r2 - a12 * r1) / det))
}

#[derive(Debug, Clone)]
pub struct Method2Output {
    pub volume: Volume3D,
    /// Directions left out of the backprojection for insufficient s coverage.
    pub skipped_directions: usize,
    pub warnings: Vec<String>,
}

/// ∂_s² R f on the s-grid from the Hilbert-domain data of one direction.
pub fn second_derivative_row(row: &[f64], ds: f64, derivative_order: u32) -> Result<Vec<f64>> {
    // H H = −I, so −H recovers R f or ∂_s R f.
    let mut inner: Vec<f64> = hilbert_uniform(row)?.into_iter().map(|v| -v).collect();
    // Near the window ends the result only carries truncation artifacts of the
    // s^{−1} tail; a cosine taper keeps them from ringing through the derivative.
    let n = inner.len();
    let nt = ((TAPER * n as f64) as usize).max(1);
    for i in 0..nt {
        let w = 0.5 - 0.5 * (PI * i as f64 / nt as f64).cos();
        inner[i] *= w;
        inner[n - 1 - i] *= w;
    }
    spectral_derivative(&inner, ds, 2 - derivative_order)
}

/// Filtered backprojection f(x) = −(1/8π²) ∫_{S²} ∂_s² R f(ω, ⟨ω, x⟩) dω over the
/// (φ, β) grid with weight sin β Δβ Δφ.
pub fn backproject_radon(inter: &Method2Intermediate, template: &Volume3D) -> Result<Method2Output> {
    let r = &inter.radon;
    let nb = r.beta_nodes.len();
    let ds = r.ds();
    let s0 = r.s_nodes[0];
    let d_beta = cell_widths(&r.beta_nodes, 0.0, PI);
    let d_phi = 2.0 * PI / r.n_phi as f64;
    let mut warnings = Vec::new();
    if nb < 16 {
        warnings.push(format!("only {nb} β nodes; the sphere quadrature is under-resolved (want >= 16)"));
    }
    let dirs: Vec<(usize, usize)> =
        (0..r.n_phi).flat_map(|ip| (0..nb).map(move |ib| (ip, ib))).filter(|&(ip, ib)| !inter.missing[ip * nb + ib]).collect();
    let skipped = r.n_phi * nb - dirs.len();
    let filled = inter.filled.iter().filter(|&&f| f).count();
    if filled > 0 {
        warnings.push(format!("{filled} directions without offset coverage interpolated in β"));
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} directions skipped for insufficient offset coverage"));
    }
    let filtered: Vec<([f64; 3], f64, Vec<f64>)> = dirs
        .par_iter()
        .map(|&(ip, ib)| {
            let beta = r.beta_nodes[ib];
            let w = -beta.sin() * d_beta[ib] * d_phi / (8.0 * PI * PI);
            let d2 = second_derivative_row(r.row(ip, ib), ds, inter.derivative_order)?;
            Ok((axis_vector(r.phi(ip), beta), w, d2))
        })
        .collect::<Result<_>>()?;

    let mut vol = template.same_grid();
    let plane = vol.n_x * vol.n_y;
    let grid = template.clone();
    vol.values.par_chunks_mut(plane).enumerate().for_each(|(iz, out)| {
        let z = grid.z(iz);
        for iy in 0..grid.n_y {
            let y = grid.y(iy);
            for ix in 0..grid.n_x {
                let x = grid.x(ix);
                out[iy * grid.n_x + ix] = filtered
                    .iter()
                    .map(|(a, w, d2)| w * cubic_uniform(d2, s0, ds, a[0] * x + a[1] * y + a[2] * z))
                    .sum();
            }
        }
    });
    Ok(Method2Output { volume: vol, skipped_directions: skipped, warnings })
}

/// Reconstruction through the 3D Radon transform (k ∈ {0, 1}) on the grid of `template`.
pub fn invert_cone_method2(c: &ConeData, template: &Volume3D, cfg: &Method2Config) -> Result<Method2Output> {
    let inter = cone_moments_with(c, cfg)?;
    backproject_radon(&inter, template)
}
