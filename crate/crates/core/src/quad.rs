//! Singular-integral quadrature in the opening angle and small interpolation helpers.
//!
//! The singular rules act on integrands C(ψ) sampled at increasing nodes in (0, π)
//! and treat the singularity in the variable c = cos ψ, writing h = C / sin ψ.

/// Local cubic (or lower, for short grids) Lagrange interpolant evaluated at `x`:
/// node indices plus value, first- and second-derivative weights.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub idx: Vec<usize>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl Stencil {
    pub fn new(nodes: &[f64], x: f64) -> Self {
        let n = nodes.len();
        let width = n.min(4);
        let pos = nodes.partition_point(|&v| v < x);
        let start = pos.saturating_sub(width / 2).min(n - width);
        let idx: Vec<usize> = (start..start + width).collect();
        let xs: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
        let mut w0 = vec![0.0; width];
        let mut w1 = vec![0.0; width];
        let mut w2 = vec![0.0; width];
        for a in 0..width {
            let denom: f64 = (0..width).filter(|&b| b != a).map(|b| xs[a] - xs[b]).product();
            let others: Vec<f64> = (0..width).filter(|&b| b != a).map(|b| x - xs[b]).collect();
            // value: product of all factors
            w0[a] = others.iter().product::<f64>() / denom;
            // first derivative: sum over dropping one factor
            let mut d1 = 0.0;
            for s in 0..others.len() {
                d1 += (0..others.len()).filter(|&t| t != s).map(|t| others[t]).product::<f64>();
            }
            w1[a] = d1 / denom;
            // second derivative: sum over dropping two factors
            let mut d2 = 0.0;
            for s in 0..others.len() {
                for t in 0..others.len() {
                    if s != t {
                        d2 += (0..others.len()).filter(|&u| u != s && u != t).map(|u| others[u]).product::<f64>();
                    }
                }
            }
            w2[a] = d2 / denom;
        }
        Self { idx, w0, w1, w2 }
    }
}

/// Nodes closer than this (in c) to the singular point use the limit value of
/// the subtracted integrand instead of the difference quotient.
const NEAR: f64 = 1e-4;

/// Interpolation weights for h(q), h'(q) and h''(q) (derivatives in c) expressed
/// on the raw samples C_j (so including the 1/sin ψ_j factor).
fn c_derivative_weights(psi: &[f64], q: f64) -> (Vec<usize>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let pq = q.clamp(-1.0, 1.0).acos();
    let st = Stencil::new(psi, pq);
    let (sq, cq) = (pq.sin(), pq.cos());
    let mut v = Vec::with_capacity(st.idx.len());
    let mut d1 = Vec::with_capacity(st.idx.len());
    let mut d2 = Vec::with_capacity(st.idx.len());
    for (a, &j) in st.idx.iter().enumerate() {
        let inv = 1.0 / psi[j].sin();
        // h_c = h_ψ / (−sin ψ);  h_cc = (h_ψψ + h_c cos ψ) / sin² ψ
        let hc = st.w1[a] / (-sq);
        v.push(st.w0[a] * inv);
        d1.push(hc * inv);
        d2.push((st.w2[a] + hc * cq) / (sq * sq) * inv);
    }
    (st.idx, v, d1, d2)
}

/// Weights ω_j with Σ ω_j C(ψ_j) ≈ PV ∫_0^π C(ψ) / (cos ψ − q) dψ.
///
/// `cells` are the rectangle-rule widths of the ψ nodes.
pub fn pv_weights(psi: &[f64], cells: &[f64], q: f64) -> Vec<f64> {
    let n = psi.len();
    let mut w = vec![0.0; n];
    let (idx, hv, hd1, _) = c_derivative_weights(psi, q);
    // Σ_j (h_j − h(q)) / (c_j − q) sin ψ_j Δψ_j + h(q) log((1−q)/(1+q))
    let mut coef_hq = ((1.0 - q) / (1.0 + q)).ln();
    let mut coef_dq = 0.0;
    for j in 0..n {
        let (s, c) = psi[j].sin_cos();
        let d = c - q;
        if d.abs() < NEAR {
            coef_dq += s * cells[j];
        } else {
            w[j] += cells[j] / d;
            coef_hq -= s * cells[j] / d;
        }
    }
    for (a, &j) in idx.iter().enumerate() {
        w[j] += coef_hq * hv[a] + coef_dq * hd1[a];
    }
    w
}

/// Weights ω_j with Σ ω_j C(ψ_j) ≈ FP ∫_0^π C(ψ) / (cos ψ − q)² dψ (Hadamard finite part).
pub fn fp_weights(psi: &[f64], cells: &[f64], q: f64) -> Vec<f64> {
    let n = psi.len();
    let mut w = vec![0.0; n];
    let (idx, hv, hd1, hd2) = c_derivative_weights(psi, q);
    // Σ_j [h_j − h(q) − h'(q)(c_j − q)] / (c_j − q)² sin ψ_j Δψ_j
    //   − 2 h(q) / (1 − q²) + h'(q) log((1−q)/(1+q))
    let mut coef_hq = -2.0 / (1.0 - q * q);
    let mut coef_dq = ((1.0 - q) / (1.0 + q)).ln();
    let mut coef_d2 = 0.0;
    for j in 0..n {
        let (s, c) = psi[j].sin_cos();
        let d = c - q;
        if d.abs() < NEAR {
            coef_d2 += 0.5 * s * cells[j];
        } else {
            w[j] += cells[j] / (d * d);
            coef_hq -= s * cells[j] / (d * d);
            coef_dq -= s * cells[j] / d;
        }
    }
    for (a, &j) in idx.iter().enumerate() {
        w[j] += coef_hq * hv[a] + coef_dq * hd1[a] + coef_d2 * hd2[a];
    }
    w
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n, "spline needs at least two knots");
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the natural-spline tridiagonal system.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (rhs - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    /// Evaluate inside [x_0, x_{n−1}]; outside, the end segments are extended.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Cubic convolution (Keys, a = −1/2) interpolation on a uniform grid starting at
/// `x0` with spacing `h`; zero outside the grid.
#[inline]
pub fn cubic_uniform(v: &[f64], x0: f64, h: f64, t: f64) -> f64 {
    let u = (t - x0) / h;
    let n = v.len() as isize;
    if !(u >= 0.0) || u > (n - 1) as f64 {
        return 0.0;
    }
    let i = u.floor() as isize;
    let f = u - i as f64;
    let at = |k: isize| if k < 0 || k >= n { 0.0 } else { v[k as usize] };
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
}

/// Second-order finite difference along a uniformly sampled sequence of slices:
/// central in the interior, one-sided three-point at the ends.
pub fn fd_derivative(slices: &[&[f64]], h: f64, out_index: usize) -> Vec<f64> {
    let n = slices.len();
    let len = slices[0].len();
    let i = out_index;
    (0..len)
        .map(|k| {
            if n == 2 {
                (slices[1][k] - slices[0][k]) / h
            } else if i == 0 {
                (-3.0 * slices[0][k] + 4.0 * slices[1][k] - slices[2][k]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * slices[n - 1][k] - 4.0 * slices[n - 2][k] + slices[n - 3][k]) / (2.0 * h)
            } else {
                (slices[i + 1][k] - slices[i - 1][k]) / (2.0 * h)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cell_widths, midpoint_nodes};
    use std::f64::consts::PI;

    /// Adaptive-free oracle: substitute c = cos ψ and integrate the subtracted
    /// integrand with a fine midpoint rule in c, adding the analytic pieces.
    fn fp_oracle(h: impl Fn(f64) -> f64, dh: impl Fn(f64) -> f64, q: f64) -> f64 {
        let n = 400_000;
        let mut acc = 0.0;
        for i in 0..n {
            let c = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
            let d = c - q;
            acc += (h(c) - h(q) - dh(q) * d) / (d * d) * 2.0 / n as f64;
        }
        acc - 2.0 * h(q) / (1.0 - q * q) + dh(q) * ((1.0 - q) / (1.0 + q)).ln()
    }

    fn pv_oracle(h: impl Fn(f64) -> f64, q: f64) -> f64 {
        let n = 400_000;
        let mut acc = 0.0;
        for i in 0..n {
            let c = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
            acc += (h(c) - h(q)) / (c - q) * 2.0 / n as f64;
        }
        acc + h(q) * ((1.0 - q) / (1.0 + q)).ln()
    }

    #[test]
    fn stencil_is_exact_on_cubics() {
        let x = [0.0, 0.3, 0.7, 1.1, 1.6, 2.0];
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.7 * t * t * t;
        let t = 0.91;
        let s = Stencil::new(&x, t);
        let v: f64 = s.idx.iter().zip(&s.w0).map(|(&i, w)| w * f(x[i])).sum();
        let d1: f64 = s.idx.iter().zip(&s.w1).map(|(&i, w)| w * f(x[i])).sum();
        let d2: f64 = s.idx.iter().zip(&s.w2).map(|(&i, w)| w * f(x[i])).sum();
        assert!((v - f(t)).abs() < 1e-12);
        assert!((d1 - (-2.0 + t - 2.1 * t * t)).abs() < 1e-12);
        assert!((d2 - (1.0 - 4.2 * t)).abs() < 1e-11);
    }

    #[test]
    fn singular_rules_match_fine_oracles() {
        let psi = midpoint_nodes(0.0, PI, 128);
        let cells = cell_widths(&psi, 0.0, PI);
        // C(ψ) = sin ψ · h(cos ψ) with a smooth h
        let h = |c: f64| (-(c - 0.2) * (c - 0.2) * 4.0).exp();
        let dh = |c: f64| -8.0 * (c - 0.2) * h(c);
        let samples: Vec<f64> = psi.iter().map(|p| p.sin() * h(p.cos())).collect();
        for &q in &[0.0, 0.31, -0.55, 0.8] {
            let fp: f64 = fp_weights(&psi, &cells, q).iter().zip(&samples).map(|(a, b)| a * b).sum();
            let pv: f64 = pv_weights(&psi, &cells, q).iter().zip(&samples).map(|(a, b)| a * b).sum();
            let fo = fp_oracle(h, dh, q);
            let po = pv_oracle(h, q);
            assert!((fp - fo).abs() < 2e-3 * fo.abs().max(1.0), "q={q}: fp {fp} vs {fo}");
            assert!((pv - po).abs() < 1e-3 * po.abs().max(1.0), "q={q}: pv {pv} vs {po}");
        }
    }

    #[test]
    fn singular_rules_survive_pole_on_node() {
        let psi = midpoint_nodes(0.0, PI, 64);
        let cells = cell_widths(&psi, 0.0, PI);
        let h = |c: f64| 1.0 + c + c * c;
        let dh = |c: f64| 1.0 + 2.0 * c;
        let samples: Vec<f64> = psi.iter().map(|p| p.sin() * h(p.cos())).collect();
        let q = psi[20].cos();
        let fp: f64 = fp_weights(&psi, &cells, q).iter().zip(&samples).map(|(a, b)| a * b).sum();
        let fo = fp_oracle(h, dh, q);
        assert!(fp.is_finite() && (fp - fo).abs() < 1e-2 * fo.abs().max(1.0), "{fp} vs {fo}");
    }

    #[test]
    fn spline_interpolates_and_is_cubic_exact_for_lines() {
        let x = vec![0.0, 0.5, 1.2, 2.0, 3.1];
        let s = CubicSpline::new(x.clone(), x.iter().map(|t| 3.0 * t - 1.0).collect());
        for t in [0.1, 0.7, 1.9, 3.0] {
            assert!((s.eval(t) - (3.0 * t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_convolution_reproduces_quadratics() {
        let v: Vec<f64> = (0..20).map(|i| (i as f64 * 0.1).powi(2)).collect();
        let t = 0.537;
        assert!((cubic_uniform(&v, 0.0, 0.1, t) - t * t).abs() < 1e-12);
    }

    #[test]
    fn finite_differences_are_second_order_exact() {
        let z: Vec<f64> = (0..5).map(|i| i as f64 * 0.25).collect();
        let rows: Vec<Vec<f64>> = z.iter().map(|t| vec![t * t, 2.0 * t]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        for i in 0..5 {
            let d = fd_derivative(&refs, 0.25, i);
            assert!((d[0] - 2.0 * z[i]).abs() < 1e-12);
            assert!((d[1] - 2.0).abs() < 1e-12);
        }
    }
}
