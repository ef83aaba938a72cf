//! Deterministic phantoms: the 2D smiley, discs, and 3D indicator/Gaussian balls
//! with closed-form plane and cone integrals for the Gaussian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{bad_grid, invalid, Result};
use crate::forward::cone_frame;
use crate::grid::{ConeData, ConeGrid, Image2D, Volume3D};

/// Sub-samples per axis used inside pixels (voxels) that straddle an edge.
const SUPERSAMPLE: usize = 16;

/// Rasterizes a piecewise-constant function with area-weighted edge pixels.
///
/// A pixel is supersampled when the function differs between any of the nine
/// points of its 3×3 probe pattern; otherwise it takes the centre value.
pub fn antialiased_image(n: usize, extent: f64, f: impl Fn(f64, f64) -> f64) -> Result<Image2D> {
    let mut img = Image2D::zeros(n, n, extent)?;
    let (hx, hy) = (img.dx(), img.dy());
    for iy in 0..n {
        let y = img.y(iy);
        for ix in 0..n {
            let x = img.x(ix);
            let c = f(x, y);
            let edge = (-1..=1).any(|a| (-1..=1).any(|b| f(x + 0.5 * a as f64 * hx, y + 0.5 * b as f64 * hy) != c));
            img.values[iy * n + ix] = if edge {
                let mut acc = 0.0;
                for a in 0..SUPERSAMPLE {
                    for b in 0..SUPERSAMPLE {
                        let ox = ((a as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5) * hx;
                        let oy = ((b as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5) * hy;
                        acc += f(x + ox, y + oy);
                    }
                }
                acc / (SUPERSAMPLE * SUPERSAMPLE) as f64
            } else {
                c
            };
        }
    }
    Ok(img)
}

/// Point value of the smiley: face disc (r ≤ 0.75) with two eye holes and a mouth arc.
pub fn smiley_value(x: f64, y: f64) -> f64 {
    if x * x + y * y > 0.75 * 0.75 {
        return 0.0;
    }
    for ex in [-0.3, 0.3] {
        if (x - ex).powi(2) + (y - 0.3).powi(2) <= 0.12 * 0.12 {
            return 0.0;
        }
    }
    let r = (x * x + y * y).sqrt();
    if (0.35..=0.45).contains(&r) {
        let deg = y.atan2(x).to_degrees().rem_euclid(360.0);
        if (200.0..=340.0).contains(&deg) {
            return 0.0;
        }
    }
    1.0
}

/// Smiley phantom on an n×n grid over [−1, 1]², anti-aliased at the edges.
pub fn phantom_smiley(n: usize) -> Result<Image2D> {
    if n < 51 {
        return bad_grid(format!("smiley needs n >= 51, got {n}"));
    }
    antialiased_image(n, 1.0, smiley_value)
}

/// Indicator of the disc of radius `a` about the origin, anti-aliased.
pub fn phantom_disc(n: usize, a: f64) -> Result<Image2D> {
    antialiased_image(n, 1.0, |x, y| if x * x + y * y <= a * a { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallKind {
    Indicator,
    /// exp(−|x − c|²/(2σ²)) with σ = radius/2.
    Gaussian,
}

/// A ball (or isotropic Gaussian) phantom inside the unit cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball3D {
    pub center: [f64; 3],
    pub radius: f64,
    pub kind: BallKind,
    pub amplitude: f64,
}

impl Ball3D {
    pub fn new(center: [f64; 3], radius: f64, kind: BallKind) -> Result<Self> {
        if radius < 0.0 {
            return invalid("ball radius must be non-negative");
        }
        if (center[0].hypot(center[1])) + radius >= 1.0 {
            return invalid("ball must lie inside the open unit cylinder");
        }
        Ok(Self { center, radius, kind, amplitude: 1.0 })
    }

    pub fn sigma(&self) -> f64 {
        0.5 * self.radius
    }

    /// Point value (no cylinder cut).
    pub fn value(&self, p: [f64; 3]) -> f64 {
        let d2: f64 = (0..3).map(|i| (p[i] - self.center[i]).powi(2)).sum();
        match self.kind {
            BallKind::Indicator => {
                if d2 <= self.radius * self.radius {
                    self.amplitude
                } else {
                    0.0
                }
            }
            BallKind::Gaussian => {
                let s = self.sigma();
                if s == 0.0 {
                    0.0
                } else {
                    self.amplitude * (-d2 / (2.0 * s * s)).exp()
                }
            }
        }
    }

    /// Adds the phantom to `vol`, zero outside the cylinder of radius extent_xy.
    /// Indicator edge voxels are supersampled (area/volume weighted).
    pub fn add_to(&self, vol: &mut Volume3D) {
        let (hx, hy, hz) = (vol.dx(), vol.dy(), vol.dz());
        let e2 = vol.extent_xy * vol.extent_xy;
        let diag = 0.5 * (hx * hx + hy * hy + hz * hz).sqrt();
        for iz in 0..vol.n_z {
            let z = vol.z(iz);
            for iy in 0..vol.n_y {
                let y = vol.y(iy);
                for ix in 0..vol.n_x {
                    let x = vol.x(ix);
                    if x * x + y * y >= e2 {
                        continue;
                    }
                    let p = [x, y, z];
                    let v = match self.kind {
                        BallKind::Gaussian => self.value(p),
                        BallKind::Indicator => {
                            let d = (0..3).map(|i| (p[i] - self.center[i]).powi(2)).sum::<f64>().sqrt();
                            if (d - self.radius).abs() > diag {
                                self.value(p)
                            } else {
                                let s = SUPERSAMPLE / 2;
                                let mut acc = 0.0;
                                for a in 0..s {
                                    for b in 0..s {
                                        for c in 0..s {
                                            let o = |t: usize, h: f64| ((t as f64 + 0.5) / s as f64 - 0.5) * h;
                                            acc += self.value([x + o(a, hx), y + o(b, hy), z + o(c, hz)]);
                                        }
                                    }
                                }
                                acc / (s * s * s) as f64
                            }
                        }
                    };
                    let i = vol.index(ix, iy, iz);
                    vol.values[i] += v;
                }
            }
        }
    }

    /// Plane integral over {⟨x, ω⟩ = s}.
    pub fn radon(&self, omega: [f64; 3], s: f64) -> f64 {
        let t = s - (0..3).map(|i| omega[i] * self.center[i]).sum::<f64>();
        match self.kind {
            BallKind::Indicator => {
                let r2 = self.radius * self.radius - t * t;
                if r2 > 0.0 {
                    self.amplitude * PI * r2
                } else {
                    0.0
                }
            }
            BallKind::Gaussian => {
                let s2 = self.sigma().powi(2);
                self.amplitude * 2.0 * PI * s2 * (-t * t / (2.0 * s2)).exp()
            }
        }
    }

    /// Total mass of the untruncated phantom.
    pub fn mass(&self) -> f64 {
        match self.kind {
            BallKind::Indicator => self.amplitude * 4.0 / 3.0 * PI * self.radius.powi(3),
            BallKind::Gaussian => self.amplitude * (2.0 * PI * self.sigma().powi(2)).powf(1.5),
        }
    }

    /// ∫_0^∞ g(v + r ω) r^k dr for the Gaussian, in closed form (ω unit).
    pub fn gaussian_ray(&self, v: [f64; 3], w: [f64; 3], k: u32) -> f64 {
        let s = self.sigma();
        if s == 0.0 {
            return 0.0;
        }
        let d: [f64; 3] = std::array::from_fn(|i| v[i] - self.center[i]);
        let p: f64 = (0..3).map(|i| d[i] * w[i]).sum();
        let d2: f64 = d.iter().map(|x| x * x).sum();
        let two_s2 = 2.0 * s * s;
        let base = (-(d2 - p * p) / two_s2).exp();
        if base == 0.0 {
            return 0.0;
        }
        // I_j = ∫_0^∞ e^{−(r+p)²/2σ²} r^j dr, I_{j+1} = σ² j I_{j−1} + σ² δ_{j0} e^{−p²/2σ²} − p I_j
        let e0 = (-p * p / two_s2).exp();
        let mut prev = 0.0;
        let mut cur = s * (PI / 2.0).sqrt() * libm::erfc(p / (s * std::f64::consts::SQRT_2));
        for j in 0..k {
            let extra = if j == 0 { s * s * e0 } else { s * s * j as f64 * prev };
            let next = extra - p * cur;
            prev = cur;
            cur = next;
        }
        self.amplitude * base * cur
    }

    /// Cone transform of the Gaussian with the radial integral in closed form and
    /// an `n_eta`-point rectangle rule in the azimuth.
    pub fn gaussian_cone_transform(&self, grid: &ConeGrid, k: u32, n_eta: usize) -> Result<ConeData> {
        if self.kind != BallKind::Gaussian {
            return invalid("closed-form cone transform is only available for Gaussian balls");
        }
        use rayon::prelude::*;
        let mut out = ConeData::zeros(grid.clone(), k);
        let block = grid.n_beta() * grid.n_psi();
        let nz = grid.n_z();
        let d_eta = 2.0 * PI / n_eta as f64;
        let trig: Vec<(f64, f64)> = (0..n_eta).map(|l| (l as f64 * d_eta).sin_cos()).collect();
        out.data.par_chunks_mut(block).enumerate().for_each(|(pz, chunk)| {
            let (ip, iz) = (pz / nz, pz % nz);
            let phi = grid.phi(ip);
            let v = [phi.cos(), phi.sin(), grid.z_nodes[iz]];
            for (ib, &beta) in grid.beta_nodes.iter().enumerate() {
                let [a, u1, u2] = cone_frame(phi, beta);
                for (is, &psi) in grid.psi_nodes.iter().enumerate() {
                    let (sp, cp) = psi.sin_cos();
                    let mut acc = 0.0;
                    for &(se, ce) in &trig {
                        let w: [f64; 3] = std::array::from_fn(|i| cp * a[i] + sp * (ce * u1[i] + se * u2[i]));
                        acc += self.gaussian_ray(v, w, k);
                    }
                    chunk[ib * grid.n_psi() + is] = sp * acc * d_eta;
                }
            }
        });
        Ok(out)
    }
}

/// Ball phantom sampled on the n³ cube [−1, 1]³.
pub fn phantom_ball3d(n: usize, center: [f64; 3], radius: f64, kind: BallKind) -> Result<Volume3D> {
    let ball = Ball3D::new(center, radius, kind)?;
    let mut vol = Volume3D::cube(n)?;
    ball.add_to(&mut vol);
    Ok(vol)
}

/// A random sum of `count` Gaussian blobs: radius in [0.25, 0.5), centre with
/// ρ + radius < 0.95 and |z| < 0.4, amplitude in [0.5, 1.5).
pub fn random_gaussian_blobs(seed: u64, count: usize) -> Vec<Ball3D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let radius: f64 = rng.gen_range(0.25..0.5);
            let rho = rng.gen_range(0.0..(0.95 - radius).max(0.0));
            let ang = rng.gen_range(0.0..2.0 * PI);
            let z = rng.gen_range(-0.4..0.4);
            let mut b = Ball3D::new([rho * ang.cos(), rho * ang.sin(), z], radius, BallKind::Gaussian)
                .expect("blob placed inside the cylinder");
            b.amplitude = rng.gen_range(0.5..1.5);
            b
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smiley_range_support_and_symmetry() {
        let img = phantom_smiley(201).unwrap();
        let max = img.values.iter().cloned().fold(f64::MIN, f64::max);
        let min = img.values.iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!((max, min), (1.0, 0.0));
        for iy in 0..201 {
            for ix in 0..201 {
                let (x, y) = (img.x(ix), img.y(iy));
                if x * x + y * y > 0.76 * 0.76 {
                    assert_eq!(img.get(ix, iy), 0.0);
                }
                assert_eq!(img.get(ix, iy), img.get(200 - ix, iy));
            }
        }
        assert!(phantom_smiley(50).is_err());
    }

    #[test]
    fn disc_area_is_accurate() {
        let img = phantom_disc(201, 0.5).unwrap();
        let area: f64 = img.values.iter().sum::<f64>() * img.dx() * img.dy();
        assert!((area - PI * 0.25).abs() < 1e-5, "{area}");
    }

    #[test]
    fn gaussian_mass() {
        let ball = Ball3D::new([0.0; 3], 0.5, BallKind::Gaussian).unwrap();
        let mut vol = Volume3D::cube(81).unwrap();
        ball.add_to(&mut vol);
        let mass: f64 = vol.values.iter().sum::<f64>() * vol.voxel_volume();
        assert!((mass - ball.mass()).abs() < 1e-3 * ball.mass(), "{mass} vs {}", ball.mass());
    }

    #[test]
    fn zero_radius_and_outside() {
        let vol = phantom_ball3d(9, [0.0; 3], 0.0, BallKind::Gaussian).unwrap();
        assert!(vol.values.iter().all(|&v| v == 0.0));
        let vol = phantom_ball3d(9, [0.0; 3], 0.0, BallKind::Indicator).unwrap();
        assert!(vol.values.iter().all(|&v| v == 0.0));
        assert!(Ball3D::new([0.6, 0.0, 0.0], 0.5, BallKind::Indicator).is_err());
    }

    #[test]
    fn gaussian_ray_matches_quadrature() {
        let mut ball = Ball3D::new([0.1, -0.2, 0.05], 0.4, BallKind::Gaussian).unwrap();
        ball.amplitude = 1.7;
        let v = [1.0, 0.0, 0.2];
        let w = {
            let u = [-0.9, -0.2, -0.1f64];
            let n = u.iter().map(|c| c * c).sum::<f64>().sqrt();
            u.map(|c| c / n)
        };
        for k in 0..4u32 {
            let n = 200_000;
            let h = 6.0 / n as f64;
            let num: f64 = (0..n)
                .map(|i| {
                    let r = (i as f64 + 0.5) * h;
                    ball.value([v[0] + r * w[0], v[1] + r * w[1], v[2] + r * w[2]]) * r.powi(k as i32) * h
                })
                .sum();
            let cf = ball.gaussian_ray(v, w, k);
            assert!((cf - num).abs() < 1e-8 * num.abs().max(1e-3), "k={k}: {cf} vs {num}");
        }
    }

    #[test]
    fn blobs_are_reproducible() {
        assert_eq!(random_gaussian_blobs(7, 3), random_gaussian_blobs(7, 3));
        assert_ne!(random_gaussian_blobs(7, 3), random_gaussian_blobs(8, 3));
    }
}
