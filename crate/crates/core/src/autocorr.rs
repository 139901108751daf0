//! Autocorrelation-method statistics.
//!
//! The mean-subtracted channel is tapered by a Tukey window along both axes,
//! zero padded so that periodic correlation equals linear correlation, and
//! its periodic autocorrelation `R` is evaluated either by direct summation
//! at the few lags a neighborhood needs, or for all lags at once through the
//! power spectrum. Covariance entries are `r_ij = R[h_i - h_j] / (Ny Nx)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::geometry::{ExtendedNeighborhood, Offset};
use crate::raster::Plane;

/// Fraction of the window length given to the cosine tapers.
pub const TUKEY_ALPHA: f64 = 0.5;

/// Symmetric Tukey window with `alpha = 0.5`, so the flat top covers half
/// the length. Endpoints are zero for lengths above one.
pub fn tukey_taper(len: usize) -> Vec<f64> {
    if len <= 1 {
        return vec![1.0; len];
    }
    let m = (len - 1) as f64;
    let width = (TUKEY_ALPHA * m / 2.0).floor() as usize;
    (0..len)
        .map(|n| {
            let nf = n as f64;
            if n <= width {
                0.5 * (1.0 + (std::f64::consts::PI * (-1.0 + 2.0 * nf / TUKEY_ALPHA / m)).cos())
            } else if n < len - width - 1 {
                1.0
            } else {
                0.5 * (1.0
                    + (std::f64::consts::PI * (-2.0 / TUKEY_ALPHA + 1.0 + 2.0 * nf / TUKEY_ALPHA / m))
                        .cos())
            }
        })
        .collect()
}

/// Smallest `m >= n` whose only prime factors are 2, 3 and 5.
pub fn efficient_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Windowed channel embedded in a zero-padded periodic frame.
#[derive(Clone, Debug)]
pub struct WindowedPlane {
    plane: Plane,
    support: (usize, usize),
}

impl WindowedPlane {
    /// The zero-padded frame; its size is the period `(Ny, Nx)`.
    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn periods(&self) -> (usize, usize) {
        (self.plane.height(), self.plane.width())
    }

    /// Size of the nonzero top-left block holding the windowed data.
    pub fn support(&self) -> (usize, usize) {
        self.support
    }
}

/// Applies the separable Tukey taper and zero pads to at least
/// `(2H - 1, 2W - 1)`, rounded up to an FFT-friendly size.
pub fn prepare_windowed(plane: &Plane) -> WindowedPlane {
    prepare_windowed_to(
        plane,
        efficient_size(2 * plane.height() - 1),
        efficient_size(2 * plane.width() - 1),
    )
}

/// Like [`prepare_windowed`] with an explicit frame size.
pub fn prepare_windowed_to(plane: &Plane, ny: usize, nx: usize) -> WindowedPlane {
    let (h, w) = (plane.height(), plane.width());
    assert!(ny >= 2 * h - 1 && nx >= 2 * w - 1, "frame too small to avoid wraparound");
    let wy = tukey_taper(h);
    let wx = tukey_taper(w);
    let mut out = Plane::zeros(ny, nx);
    for (y, &ty) in wy.iter().enumerate() {
        for (x, &tx) in wx.iter().enumerate() {
            out.set(y, x, plane.get(y, x) * ty * tx);
        }
    }
    WindowedPlane {
        plane: out,
        support: (h, w),
    }
}

#[derive(Clone, Debug)]
enum Values {
    Dense(Vec<f64>),
    Sparse(BTreeMap<(usize, usize), f64>),
}

/// Periodic autocorrelation `R[dy, dx]`, either at every lag or at a chosen
/// subset. Lags are reduced modulo the periods.
#[derive(Clone, Debug)]
pub struct AutocorrelationMap {
    periods: (usize, usize),
    values: Values,
    imag_residue: f64,
}

impl AutocorrelationMap {
    pub fn periods(&self) -> (usize, usize) {
        self.periods
    }

    fn wrap(&self, (dy, dx): Offset) -> (usize, usize) {
        let (ny, nx) = self.periods;
        (
            dy.rem_euclid(ny as isize) as usize,
            dx.rem_euclid(nx as isize) as usize,
        )
    }

    /// `R` at a lag, or `None` if the lag was not computed.
    pub fn get(&self, lag: Offset) -> Option<f64> {
        let (y, x) = self.wrap(lag);
        match &self.values {
            Values::Dense(v) => Some(v[y * self.periods.1 + x]),
            Values::Sparse(m) => m.get(&(y, x)).copied(),
        }
    }

    /// Largest imaginary magnitude discarded by the FFT path; zero for the
    /// direct path.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }
}

/// Direct evaluation of `R[d] = sum_p I[p] I[(p - d) mod N]` at the given lags.
pub fn autocorrelation_direct(windowed: &WindowedPlane, lags: &[Offset]) -> AutocorrelationMap {
    let plane = windowed.plane();
    let (ny, nx) = windowed.periods();
    let (sh, sw) = windowed.support();
    let mut map = AutocorrelationMap {
        periods: (ny, nx),
        values: Values::Sparse(BTreeMap::new()),
        imag_residue: 0.0,
    };
    let mut values = BTreeMap::new();
    for &lag in lags {
        let key = map.wrap(lag);
        if values.contains_key(&key) {
            continue;
        }
        let (dy, dx) = (key.0 as isize, key.1 as isize);
        // Terms outside the support are exact zeros.
        let mut acc = 0.0;
        for y in 0..sh as isize {
            let yy = (y - dy).rem_euclid(ny as isize) as usize;
            for x in 0..sw as isize {
                let xx = (x - dx).rem_euclid(nx as isize) as usize;
                acc += plane.get(y as usize, x as usize) * plane.get(yy, xx);
            }
        }
        values.insert(key, acc);
    }
    map.values = Values::Sparse(values);
    map
}

fn fft_rows(data: &mut [Complex64], rows: usize, cols: usize, planner: &mut FftPlanner<f64>, dir: FftDirection) {
    let fft = planner.plan_fft(cols, dir);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(cols).take(rows) {
        fft.process_with_scratch(row, &mut scratch);
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for y in 0..rows {
        for x in 0..cols {
            out[x * rows + y] = data[y * cols + x];
        }
    }
    out
}

fn fft2(data: Vec<Complex64>, ny: usize, nx: usize, planner: &mut FftPlanner<f64>, dir: FftDirection) -> Vec<Complex64> {
    let mut data = data;
    fft_rows(&mut data, ny, nx, planner, dir);
    let mut t = transpose(&data, ny, nx);
    fft_rows(&mut t, nx, ny, planner, dir);
    transpose(&t, nx, ny)
}

/// All-lag autocorrelation through the power spectrum,
/// `R = IDFT2(|DFT2(I)|^2)`.
pub fn autocorrelation_fft(windowed: &WindowedPlane) -> AutocorrelationMap {
    let (ny, nx) = windowed.periods();
    let mut planner = FftPlanner::new();
    let input: Vec<Complex64> = windowed
        .plane()
        .data()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let spectrum = fft2(input, ny, nx, &mut planner, FftDirection::Forward);
    let power: Vec<Complex64> = spectrum
        .iter()
        .map(|c| Complex64::new(c.norm_sqr(), 0.0))
        .collect();
    let corr = fft2(power, ny, nx, &mut planner, FftDirection::Inverse);
    let scale = 1.0 / (ny * nx) as f64;
    let imag_residue = corr.iter().map(|c| (c.im * scale).abs()).fold(0.0, f64::max);
    AutocorrelationMap {
        periods: (ny, nx),
        values: Values::Dense(corr.iter().map(|c| c.re * scale).collect()),
        imag_residue,
    }
}

/// `r_ij = R[h_i - h_j] / (Ny Nx)`.
pub fn covariance_from_autocorrelation(
    map: &AutocorrelationMap,
    nbhd: &ExtendedNeighborhood,
) -> Result<CovarianceMatrix> {
    let (ny, nx) = map.periods();
    let norm = (ny * nx) as f64;
    let offs = nbhd.offsets();
    for &(ay, ax) in offs {
        for &(by, bx) in offs {
            if map.get((ay - by, ax - bx)).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "autocorrelation lag ({}, {}) was not computed",
                    ay - by,
                    ax - bx
                )));
            }
        }
    }
    // Average R[d] and R[-d]; they agree up to rounding on the FFT path and
    // the average keeps the matrix exactly symmetric.
    Ok(CovarianceMatrix::from_fn(nbhd.order(), |i, j| {
        let (a, b) = (offs[i], offs[j]);
        let fwd = map.get((a.0 - b.0, a.1 - b.1)).unwrap();
        let back = map.get((b.0 - a.0, b.1 - a.1)).unwrap();
        0.5 * (fwd + back) / norm
    }))
}
