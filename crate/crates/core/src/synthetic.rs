//! Deterministic synthetic inputs for demos and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::Raster;

/// 8-bit grayscale scene with natural-image texture: a smooth illumination
/// ramp, overlapping blobs of different brightness and pixel noise. Values are
/// integers in `0..=255`.
pub fn natural_like(width: usize, height: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(0.05..0.3) * width.min(height) as f64,
                rng.random_range(0.4..1.6),
                rng.random_range(-70.0..70.0),
            )
        })
        .collect();
    let (fx, fy) = (rng.random_range(2.0..6.0), rng.random_range(2.0..6.0));
    Raster::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v = 90.0
            + 60.0 * xf / width as f64
            + 20.0 * (fx * xf / width as f64 + fy * yf / height as f64).sin();
        for &(cx, cy, r, aspect, gain) in &blobs {
            let d = ((xf - cx) / r).powi(2) + ((yf - cy) / (r * aspect)).powi(2);
            if d < 1.0 {
                v += gain;
            }
        }
        v += rng.random_range(-12.0..12.0);
        v.round().clamp(0.0, 255.0)
    })
    .expect("positive dimensions")
}

/// Prior map with a Gaussian bump of height 1 at `(cx, cy)`.
pub fn gaussian_prior(width: usize, height: usize, cx: f64, cy: f64, sigma: f64) -> Raster {
    Raster::from_fn(width, height, |x, y| {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (-d2 / (2.0 * sigma * sigma)).exp()
    })
    .expect("positive dimensions")
}
