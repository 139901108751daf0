//! Shared inputs for the padding and fitting benchmarks.

use lppad::Raster;

/// Deterministic smooth-plus-texture test raster.
pub fn test_raster(height: usize, width: usize, channels: usize) -> Raster {
    Raster::from_fn(height, width, channels, |y, x, c| {
        let (fy, fx) = (y as f64, x as f64);
        0.5 + 0.3 * (0.11 * fy + 0.07 * fx + c as f64).sin() + 0.1 * ((fy * 1.7 + fx * 2.3).sin() * 43.0).fract()
    })
    .expect("valid benchmark raster")
}
