//! Seeded additive Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::grid::Sampled;

/// Returns a copy of `data` with i.i.d. N(0, (level·max|data|)²) noise added.
///
/// The stream is ChaCha8 seeded from `seed`, so output is bitwise reproducible.
pub fn add_noise<T: Sampled + Clone>(data: &T, level: f64, seed: u64) -> Result<T> {
    if !(level >= 0.0) {
        return invalid(format!("noise level must be non-negative, got {level}"));
    }
    let mut out = data.clone();
    let peak = data.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let std = level * peak;
    if std == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, std).map_err(|e| crate::CrtError::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.values_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}
