//! Error metrics used by tests, the CLI report and the acceptance suite.

use crate::grid::Image2D;

/// ‖a − b‖₂ / ‖b‖₂ over all samples.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    relative_l2_masked(a, b, None)
}

/// ‖a − b‖₂ / ‖b‖₂ over samples where `keep` is true (all samples if `None`).
pub fn relative_l2_masked(a: &[f64], b: &[f64], keep: Option<&[bool]>) -> f64 {
    assert_eq!(a.len(), b.len());
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..a.len() {
        if keep.map_or(true, |k| k[i]) {
            num += (a[i] - b[i]).powi(2);
            den += b[i] * b[i];
        }
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// Mask that is `false` within `half_width` of a jump of the reference image.
///
/// Jump pixels are both members of any neighbour pair whose values differ by more
/// than a quarter of the value range; the band is their `half_width` dilation.
pub fn jump_band_mask(reference: &Image2D, half_width: f64) -> Vec<bool> {
    let (nx, ny) = (reference.n_x, reference.n_y);
    let v = &reference.values;
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    let range = max - min;
    let mut jump = vec![false; v.len()];
    if range == 0.0 {
        return vec![true; v.len()];
    }
    for iy in 0..ny {
        for ix in 0..nx {
            let i = iy * nx + ix;
            for (dx, dy) in [(1usize, 0usize), (0, 1)] {
                let (jx, jy) = (ix + dx, iy + dy);
                if jx < nx && jy < ny {
                    let j = jy * nx + jx;
                    if (v[i] - v[j]).abs() > 0.25 * range {
                        jump[i] = true;
                        jump[j] = true;
                    }
                }
            }
        }
    }
    let rx = (half_width / reference.dx()).floor() as isize;
    let ry = (half_width / reference.dy()).floor() as isize;
    let mut keep = vec![true; v.len()];
    for iy in 0..ny as isize {
        for ix in 0..nx as isize {
            if !jump[(iy as usize) * nx + ix as usize] {
                continue;
            }
            for oy in -ry..=ry {
                for ox in -rx..=rx {
                    let (jx, jy) = (ix + ox, iy + oy);
                    let dist = ((ox as f64 * reference.dx()).powi(2) + (oy as f64 * reference.dy()).powi(2)).sqrt();
                    if jx >= 0 && jy >= 0 && (jx as usize) < nx && (jy as usize) < ny && dist <= half_width {
                        keep[jy as usize * nx + jx as usize] = false;
                    }
                }
            }
        }
    }
    keep
}
