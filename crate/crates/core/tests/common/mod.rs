#![allow(dead_code)]

use std::collections::HashMap;

use lppad::{Plane, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_raster(h: usize, w: usize, c: usize, seed: u64) -> Raster {
    let mut rng = rng(seed);
    Raster::from_fn(h, w, c, |_, _, _| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn uniform_plane(h: usize, w: usize, seed: u64) -> Plane {
    let mut rng = rng(seed);
    Plane::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0))
}

/// Columns of a stationary vertical AR(1) process with unit innovations.
pub fn vertical_ar1(h: usize, w: usize, a1: f64, seed: u64) -> Plane {
    let mut rng = rng(seed);
    let mut data = vec![0.0; h * w];
    let start_sd = (1.0 - a1 * a1).abs().sqrt().recip();
    for x in 0..w {
        let mut v = if a1.abs() < 1.0 {
            rng.sample::<f64, _>(StandardNormal) * start_sd
        } else {
            rng.sample::<f64, _>(StandardNormal)
        };
        for y in 0..h {
            if y > 0 {
                v = a1 * v + rng.sample::<f64, _>(StandardNormal);
            }
            data[y * w + x] = v;
        }
    }
    Plane::new(h, w, data).unwrap()
}

/// Every `(dy, dx)` offset pair product averaged over all origins where the
/// whole neighborhood is in bounds, by explicit enumeration.
pub fn brute_force_covariance(plane: &Plane, offsets: &[(isize, isize)]) -> Vec<Vec<f64>> {
    let n = offsets.len();
    let mut acc = vec![vec![0.0; n]; n];
    let mut count = 0usize;
    for y in -10..plane.height() as isize + 10 {
        for x in -10..plane.width() as isize + 10 {
            let vals: Option<Vec<f64>> = offsets
                .iter()
                .map(|&(dy, dx)| plane.get_signed(y + dy, x + dx))
                .collect();
            let Some(vals) = vals else { continue };
            count += 1;
            for i in 0..n {
                for j in 0..n {
                    acc[i][j] += vals[i] * vals[j];
                }
            }
        }
    }
    acc.iter()
        .map(|row| row.iter().map(|v| v / count as f64).collect())
        .collect()
}

/// Tukey window with a half-length flat top, evaluated from the piecewise
/// cosine definition on `x = n / (N - 1)`.
pub fn tukey_oracle(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let alpha = 0.5;
    (0..len)
        .map(|n| {
            let x = n as f64 / (len - 1) as f64;
            let pi = std::f64::consts::PI;
            if x < alpha / 2.0 {
                0.5 * (1.0 - (2.0 * pi * x / alpha).cos())
            } else if x <= 1.0 - alpha / 2.0 {
                1.0
            } else {
                0.5 * (1.0 - (2.0 * pi * (1.0 - x) / alpha).cos())
            }
        })
        .collect()
}

/// Linear (non-periodic) autocorrelation of the Tukey-windowed plane, by
/// double loop, memoized per lag.
pub struct WindowedCorrelation {
    windowed: Vec<Vec<f64>>,
    cache: HashMap<(isize, isize), f64>,
}

impl WindowedCorrelation {
    pub fn new(plane: &Plane) -> Self {
        let (wy, wx) = (tukey_oracle(plane.height()), tukey_oracle(plane.width()));
        let windowed = (0..plane.height())
            .map(|y| (0..plane.width()).map(|x| plane.get(y, x) * wy[y] * wx[x]).collect())
            .collect();
        Self {
            windowed,
            cache: HashMap::new(),
        }
    }

    pub fn at(&mut self, lag: (isize, isize)) -> f64 {
        if let Some(&v) = self.cache.get(&lag) {
            return v;
        }
        let (h, w) = (self.windowed.len() as isize, self.windowed[0].len() as isize);
        let mut acc = 0.0;
        for y in 0..h {
            for x in 0..w {
                let (py, px) = (y - lag.0, x - lag.1);
                if (0..h).contains(&py) && (0..w).contains(&px) {
                    acc += self.windowed[y as usize][x as usize] * self.windowed[py as usize][px as usize];
                }
            }
        }
        self.cache.insert(lag, acc);
        acc
    }
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}
