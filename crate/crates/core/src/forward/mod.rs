//! Discrete forward models: one-sided X-ray, V-line, 2D/3D Radon and weighted
//! conical Radon transforms.

mod cone;
mod planar;
mod radon3d;

pub use cone::{
    axis_vector, cone_frame, conical_forward, for_each_cone_sample, weighted_ray_3d, ConeQuadratureSpec,
};
pub use planar::{radon_2d, vline_forward, xray_2d, xray_forward};
pub use radon3d::{radon_3d, radon_3d_data};
pub(crate) use cone::default_r_max;

/// Composite trapezoidal rule settings for ray and plane integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayQuadratureSpec {
    /// Arc-length step.
    pub step: f64,
    /// Truncation length of one-sided rays.
    pub r_max: f64,
}

impl Default for RayQuadratureSpec {
    fn default() -> Self {
        Self { step: 1e-3, r_max: 2.0 }
    }
}

impl RayQuadratureSpec {
    pub fn new(step: f64, r_max: f64) -> crate::Result<Self> {
        if !(step > 0.0) || !(r_max > 0.0) || step > 1e-2 * r_max {
            return crate::error::invalid(format!("ray quadrature needs 0 < step <= r_max/100 (step {step}, r_max {r_max})"));
        }
        Ok(Self { step, r_max })
    }
}

/// Parameter interval [t0, t1] where |p + t d|² ≤ radius² for the 2D (or horizontal) part.
pub(crate) fn clip_disc(p: [f64; 2], d: [f64; 2], radius: f64) -> Option<(f64, f64)> {
    let a = d[0] * d[0] + d[1] * d[1];
    if a == 0.0 {
        return (p[0] * p[0] + p[1] * p[1] <= radius * radius).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let b = p[0] * d[0] + p[1] * d[1];
    let c = p[0] * p[0] + p[1] * p[1] - radius * radius;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-b - sq) / a, (-b + sq) / a))
}

/// Trapezoidal nodes and weights on [a, b] with spacing at most `step`.
pub(crate) fn trapezoid(a: f64, b: f64, step: f64) -> impl Iterator<Item = (f64, f64)> {
    let len = b - a;
    let n = ((len / step).ceil() as usize).max(1);
    let h = len / n as f64;
    (0..=n).map(move |i| {
        let w = if i == 0 || i == n { 0.5 * h } else { h };
        (a + i as f64 * h, w)
    })
}
