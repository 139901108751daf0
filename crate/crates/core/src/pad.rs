//! Raster padding.
//!
//! Linear prediction methods subtract each channel's mean, fit one predictor
//! per padding direction on the original pixels, and then grow the raster one
//! pixel layer at a time: every pixel of a new layer is the predictor applied
//! to the pixels behind it, known or already predicted. Near the ends of a
//! layer the predicted pixel slides sideways under the predictor rectangle so
//! the layer keeps its full length. Vertical passes run first (down, up), then
//! horizontal passes (right, left) over the vertically padded extent, which
//! fills the corners.
//!
//! `zero`, `repl` and `extrN` are the classic methods. `extrN` evaluates the
//! degree `N - 1` polynomial through the `N` nearest pixels one step ahead,
//! recursively.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::autocorr::{
    autocorrelation_direct, autocorrelation_fft, covariance_from_autocorrelation,
    prepare_windowed, AutocorrelationMap,
};
use crate::covariance::{
    covariance_statistics, solve_general, solve_p1, solve_p2, ArModel, DEFAULT_RIDGE,
};
use crate::error::{Error, Result};
use crate::geometry::{valid_region, Direction, ExtendedNeighborhood};
use crate::raster::{Plane, Raster};
use crate::stabilize::stabilize;

/// How an `lp` method estimates its covariance matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FitMethod {
    /// Means of products over the valid region, closed-form solve, pole
    /// stabilization. Only for one or two predictors.
    CovarianceStabilized,
    /// Windowed autocorrelation summed directly at the needed lags.
    AutocorrDirect,
    /// Windowed autocorrelation through the power spectrum.
    AutocorrFft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PaddingMethod {
    Zero,
    Repl,
    /// Polynomial extrapolation through the `N` nearest pixels.
    Extr(usize),
    Lp {
        height: usize,
        width: usize,
        fit: FitMethod,
    },
}

/// Largest supported `extrN` order.
pub const MAX_EXTR_ORDER: usize = 16;

impl PaddingMethod {
    /// The twelve named methods.
    pub const ALL: [PaddingMethod; 12] = [
        PaddingMethod::Zero,
        PaddingMethod::Repl,
        PaddingMethod::Extr(2),
        PaddingMethod::Extr(3),
        PaddingMethod::lp(1, 1, FitMethod::CovarianceStabilized),
        PaddingMethod::lp(2, 1, FitMethod::AutocorrDirect),
        PaddingMethod::lp(2, 1, FitMethod::CovarianceStabilized),
        PaddingMethod::lp(2, 3, FitMethod::AutocorrDirect),
        PaddingMethod::lp(2, 5, FitMethod::AutocorrFft),
        PaddingMethod::lp(3, 3, FitMethod::AutocorrFft),
        PaddingMethod::lp(4, 5, FitMethod::AutocorrFft),
        PaddingMethod::lp(6, 7, FitMethod::AutocorrFft),
    ];

    const fn lp(height: usize, width: usize, fit: FitMethod) -> Self {
        PaddingMethod::Lp { height, width, fit }
    }

    pub fn is_lp(&self) -> bool {
        matches!(self, PaddingMethod::Lp { .. })
    }

    /// Comma-separated list of accepted names, for error messages.
    pub fn supported_names() -> String {
        let mut names: Vec<String> = Self::ALL.iter().map(|m| m.to_string()).collect();
        names.push("extrN".to_string());
        names.join(", ")
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PaddingMethod::Extr(n) if n > MAX_EXTR_ORDER => Err(Error::UnknownMethod(format!(
                "extr{n} (order above {MAX_EXTR_ORDER})"
            ))),
            PaddingMethod::Lp { height, width, fit } => {
                ExtendedNeighborhood::canonical(height, width)?;
                if fit == FitMethod::CovarianceStabilized && height * width > 2 {
                    return Err(Error::UnknownMethod(format!(
                        "lp{height}x{width}cs (stabilized covariance fits need one or two predictors)"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PaddingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PaddingMethod::Zero => f.write_str("zero"),
            PaddingMethod::Repl => f.write_str("repl"),
            PaddingMethod::Extr(n) => write!(f, "extr{n}"),
            PaddingMethod::Lp { height, width, fit } => {
                write!(f, "lp{height}x{width}")?;
                if fit == FitMethod::CovarianceStabilized {
                    f.write_str("cs")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for PaddingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMethod(s.to_string());
        let method = match s {
            "zero" => PaddingMethod::Zero,
            "repl" => PaddingMethod::Repl,
            _ => {
                if let Some(n) = s.strip_prefix("extr") {
                    let n: usize = n.parse().map_err(|_| unknown())?;
                    PaddingMethod::Extr(n)
                } else {
                    *Self::ALL
                        .iter()
                        .find(|m| m.is_lp() && m.to_string() == s)
                        .ok_or_else(unknown)?
                }
            }
        };
        method.validate()?;
        Ok(method)
    }
}

/// Pixels to add on each side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PadAmounts {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl PadAmounts {
    pub fn uniform(n: usize) -> Self {
        Self {
            top: n,
            bottom: n,
            left: n,
            right: n,
        }
    }

    pub fn for_direction(&self, dir: Direction) -> usize {
        match dir {
            Direction::Down => self.bottom,
            Direction::Up => self.top,
            Direction::Right => self.right,
            Direction::Left => self.left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PadConfig {
    /// Diagonal loading for the general normal-equation solve.
    pub ridge: f64,
}

impl Default for PadConfig {
    fn default() -> Self {
        Self {
            ridge: DEFAULT_RIDGE,
        }
    }
}

/// Padded raster plus the predictors fitted for each channel.
#[derive(Clone, Debug)]
pub struct PadOutput {
    pub raster: Raster,
    /// `models[c]` lists `(direction, model)` for every direction that was
    /// padded. Empty for non-`lp` methods.
    pub models: Vec<Vec<(Direction, ArModel)>>,
}

/// One-step-ahead extrapolation weights through the `n` nearest samples,
/// nearest first: `(-1)^(k+1) C(n, k)` for `k = 1..=n`.
pub fn lagrange_coefficients(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut binom = 1.0f64;
    for k in 1..=n {
        binom = binom * (n + 1 - k) as f64 / k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out.push(sign * binom.round());
    }
    out
}

/// Per-channel fitting state shared by the four directions.
struct ChannelFit<'a> {
    centered: &'a Plane,
    mean: f64,
    config: PadConfig,
    autocorr: Option<AutocorrelationMap>,
}

impl<'a> ChannelFit<'a> {
    fn new(centered: &'a Plane, mean: f64, config: PadConfig) -> Self {
        Self {
            centered,
            mean,
            config,
            autocorr: None,
        }
    }

    fn fit(&mut self, height: usize, width: usize, fit: FitMethod, dir: Direction) -> Result<ArModel> {
        let nbhd = ExtendedNeighborhood::canonical(height, width)?.rotate(dir);
        let (h, w) = (self.centered.height(), self.centered.width());
        let stats = match fit {
            FitMethod::CovarianceStabilized => {
                let region = valid_region(&nbhd, h, w);
                if region.is_empty() {
                    warn!(
                        "{h}x{w} channel is too small for a {height}x{width} {dir} fit; padding with the mean"
                    );
                    return Ok(ArModel::zeroed(nbhd, self.mean));
                }
                covariance_statistics(self.centered, &nbhd, &region)?
            }
            FitMethod::AutocorrDirect => {
                let windowed = prepare_windowed(self.centered);
                let map = autocorrelation_direct(&windowed, &nbhd.lags());
                covariance_from_autocorrelation(&map, &nbhd)?
            }
            FitMethod::AutocorrFft => {
                let map = self
                    .autocorr
                    .get_or_insert_with(|| autocorrelation_fft(&prepare_windowed(self.centered)));
                covariance_from_autocorrelation(map, &nbhd)?
            }
        };
        let coefficients = match fit {
            FitMethod::CovarianceStabilized => match stats.order() {
                1 => stabilize(&solve_p1(&stats)),
                2 => stabilize(&solve_p2(&stats)),
                p => {
                    return Err(Error::InvalidArgument(format!(
                        "stabilized covariance fit needs one or two predictors, got {p}"
                    )))
                }
            },
            _ => match solve_general(&stats, self.config.ridge) {
                Ok(a) => a,
                Err(Error::NotPositiveDefinite) => {
                    warn!("{height}x{width} {dir} normal equations are singular; padding with the mean");
                    return Ok(ArModel::zeroed(nbhd, self.mean));
                }
                Err(e) => return Err(e),
            },
        };
        Ok(ArModel {
            coefficients,
            mean: self.mean,
            neighborhood: nbhd,
            fallback: false,
        })
    }
}

/// Fits the `lp` predictor for one direction on a raw channel. The channel
/// mean is subtracted first and recorded in the model.
pub fn fit_direction(plane: &Plane, method: PaddingMethod, dir: Direction) -> Result<ArModel> {
    fit_direction_with(plane, method, dir, PadConfig::default())
}

pub fn fit_direction_with(
    plane: &Plane,
    method: PaddingMethod,
    dir: Direction,
    config: PadConfig,
) -> Result<ArModel> {
    method.validate()?;
    let PaddingMethod::Lp { height, width, fit } = method else {
        return Err(Error::InvalidArgument(format!("{method} is not a linear prediction method")));
    };
    let mean = plane.mean();
    let centered = plane.map(|v| v - mean);
    ChannelFit::new(&centered, mean, config).fit(height, width, fit, dir)
}

/// Grows `plane` downward by `rows` layers using a downward-causal
/// rectangle predictor. `rect_height x rect_width` is the rectangle above the
/// predicted pixel and `coeffs` follow the canonical predictor order.
/// Accesses outside the available data read as zero.
fn extend_down(plane: &Plane, rect_height: usize, rect_width: usize, coeffs: &[f64], rows: usize) -> Plane {
    let (r0, cols) = (plane.height(), plane.width());
    let mut out = Plane::zeros(r0 + rows, cols);
    out.data_mut()[..r0 * cols].copy_from_slice(plane.data());
    if rows == 0 {
        return out;
    }
    let half = (rect_width / 2) as isize;
    let ncols = cols as isize;
    let th = rect_height as isize;
    let (lo, hi) = (half, ncols - 1 - half);
    let data = out.data_mut();
    for k in r0..r0 + rows {
        let (done, rest) = data.split_at_mut(k * cols);
        let row = &mut rest[..cols];
        for (x, slot) in row.iter_mut().enumerate() {
            let x = x as isize;
            // Rectangle center column; slides inward near the ends of the row.
            let center = if lo <= hi { x.clamp(lo, hi) } else { (ncols - 1) / 2 };
            let center = x - (x - center).clamp(-half, half);
            let mut acc = 0.0;
            // Nearest rows first.
            for r in (0..th).rev() {
                let y = k as isize - th + r;
                if y < 0 {
                    continue;
                }
                let base = y as usize * cols;
                for c in (-half..=half).rev() {
                    let xx = center + c;
                    if xx < 0 || xx >= ncols {
                        continue;
                    }
                    let a = coeffs[(r * (2 * half + 1) + c + half) as usize];
                    acc += a * done[base + xx as usize];
                }
            }
            *slot = acc;
        }
    }
    out
}

/// Pads one side of a plane by turning it so that side faces down.
fn extend_side(
    plane: &Plane,
    dir: Direction,
    rect_height: usize,
    rect_width: usize,
    coeffs: &[f64],
    amount: usize,
) -> Plane {
    if amount == 0 {
        return plane.clone();
    }
    let grow = |p: &Plane| extend_down(p, rect_height, rect_width, coeffs, amount);
    match dir {
        Direction::Down => grow(plane),
        Direction::Up => grow(&plane.half_turn()).half_turn(),
        Direction::Right => grow(&plane.quarter_turn()).quarter_turn_back(),
        Direction::Left => grow(&plane.quarter_turn_back()).quarter_turn(),
    }
}

fn extent_along(plane: &Plane, dir: Direction) -> usize {
    match dir {
        Direction::Down | Direction::Up => plane.height(),
        Direction::Right | Direction::Left => plane.width(),
    }
}

fn pad_zero(plane: &Plane, amounts: &PadAmounts) -> Plane {
    let (h, w) = (plane.height(), plane.width());
    let mut out = Plane::zeros(h + amounts.top + amounts.bottom, w + amounts.left + amounts.right);
    write_center(&mut out, plane, amounts);
    out
}

fn pad_repl(plane: &Plane, amounts: &PadAmounts) -> Plane {
    let (h, w) = (plane.height(), plane.width());
    Plane::from_fn(
        h + amounts.top + amounts.bottom,
        w + amounts.left + amounts.right,
        |y, x| {
            let sy = y.saturating_sub(amounts.top).min(h - 1);
            let sx = x.saturating_sub(amounts.left).min(w - 1);
            plane.get(sy, sx)
        },
    )
}

fn pad_extr(plane: &Plane, order: usize, amounts: &PadAmounts) -> Plane {
    // Extrapolating around the mean keeps the roundoff that high orders
    // amplify independent of the signal's offset.
    let mean = plane.mean();
    let mut v = plane.map(|s| s - mean);
    for dir in Direction::ALL {
        let amount = amounts.for_direction(dir);
        if amount == 0 {
            continue;
        }
        // Fewer samples than the order: drop to the highest order available.
        let n = order.min(extent_along(&v, dir));
        let mut coeffs = lagrange_coefficients(n);
        coeffs.reverse();
        v = extend_side(&v, dir, n, 1, &coeffs, amount);
    }
    let mut out = v.map(|s| s + mean);
    write_center(&mut out, plane, amounts);
    out
}

fn write_center(out: &mut Plane, plane: &Plane, amounts: &PadAmounts) {
    for y in 0..plane.height() {
        for x in 0..plane.width() {
            out.set(y + amounts.top, x + amounts.left, plane.get(y, x));
        }
    }
}

fn pad_lp(
    plane: &Plane,
    height: usize,
    width: usize,
    fit: FitMethod,
    amounts: &PadAmounts,
    config: PadConfig,
) -> Result<(Plane, Vec<(Direction, ArModel)>)> {
    let mean = plane.mean();
    let centered = plane.map(|v| v - mean);
    let mut fitter = ChannelFit::new(&centered, mean, config);
    let mut models = Vec::new();
    let mut v = centered.clone();
    for dir in Direction::ALL {
        let amount = amounts.for_direction(dir);
        if amount == 0 {
            continue;
        }
        let model = fitter.fit(height, width, fit, dir)?;
        v = extend_side(&v, dir, height, width, &model.coefficients, amount);
        models.push((dir, model));
    }
    let mut out = v.map(|s| s + mean);
    write_center(&mut out, plane, amounts);
    Ok((out, models))
}

/// Pads every channel of `input` with the default configuration.
pub fn pad(input: &Raster, method: PaddingMethod, amounts: PadAmounts) -> Result<Raster> {
    Ok(pad_with(input, method, amounts, PadConfig::default())?.raster)
}

/// Pads every channel of `input` and reports the fitted predictors.
pub fn pad_with(
    input: &Raster,
    method: PaddingMethod,
    amounts: PadAmounts,
    config: PadConfig,
) -> Result<PadOutput> {
    method.validate()?;
    let planes = input.planes();
    let results: Vec<(Plane, Vec<(Direction, ArModel)>)> = planes
        .par_iter()
        .map(|plane| {
            Ok(match method {
                PaddingMethod::Zero | PaddingMethod::Extr(0) => (pad_zero(plane, &amounts), vec![]),
                PaddingMethod::Repl | PaddingMethod::Extr(1) => (pad_repl(plane, &amounts), vec![]),
                PaddingMethod::Extr(n) => (pad_extr(plane, n, &amounts), vec![]),
                PaddingMethod::Lp { height, width, fit } => {
                    pad_lp(plane, height, width, fit, &amounts, config)?
                }
            })
        })
        .collect::<Result<_>>()?;
    let (out_planes, models): (Vec<Plane>, Vec<_>) = results.into_iter().unzip();
    let raster = Raster::from_planes(&out_planes).map_err(|e| match e {
        Error::NonFinite(_) => Error::InvalidArgument(format!(
            "{method} padding diverged to non-finite values"
        )),
        other => other,
    })?;
    Ok(PadOutput { raster, models })
}
