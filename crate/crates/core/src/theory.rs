//! Padding error of 1D linear padding rules on blurred white noise.
//!
//! The data model is a zero-mean, unit-variance Gaussian process with
//! covariance `kappa(d) = exp(-d^2 / (2 sigma^2))`. A rule predicts `x[0]`
//! from `x[-1], .., x[-P]`; with extended coefficients `a_0 = -1, a_1..a_P`
//! the padding error is `eps = sum_i a_i x[-i]` and its normalized mean square
//! is `sum_ij a_i a_j kappa(j - i)`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pad::lagrange_coefficients;

/// Reflection coefficients beyond this magnitude abandon the recursion.
pub const LEVINSON_BREAKDOWN: f64 = 1.0 - 1e-12;
/// Diagonal loading for the dense fallback solve.
pub const FALLBACK_RIDGE: f64 = 1e-10;

/// Sequences longer than this are sampled by blurring white noise.
const FACTORIZE_MAX: usize = 256;
const SHARD_TRIALS: usize = 4096;

pub fn gaussian_kernel(d: f64, sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidSigma(sigma));
    }
    Ok((-d * d / (2.0 * sigma * sigma)).exp())
}

fn kernel_table(len: usize, sigma: f64) -> Result<Vec<f64>> {
    (0..len).map(|d| gaussian_kernel(d as f64, sigma)).collect()
}

/// Extended coefficients `[-1, a_1, .., a_P]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPadRule {
    extended: Vec<f64>,
}

impl LinearPadRule {
    pub fn from_predictors(a: &[f64]) -> Self {
        let mut extended = Vec::with_capacity(a.len() + 1);
        extended.push(-1.0);
        extended.extend_from_slice(a);
        Self { extended }
    }

    pub fn from_extended(extended: Vec<f64>) -> Result<Self> {
        if extended.first() != Some(&-1.0) {
            return Err(Error::InvalidArgument(
                "extended coefficients must start with -1".into(),
            ));
        }
        Ok(Self { extended })
    }

    pub fn extended(&self) -> &[f64] {
        &self.extended
    }

    pub fn predictors(&self) -> &[f64] {
        &self.extended[1..]
    }

    pub fn order(&self) -> usize {
        self.extended.len() - 1
    }

    /// Padding error for a window `x[0], x[-1], .., x[-P]` stored in that order.
    pub fn error(&self, window: &[f64]) -> f64 {
        self.extended.iter().zip(window).map(|(a, x)| a * x).sum()
    }
}

/// `sum_ij a_i a_j kappa(j - i)`.
pub fn theoretical_nmse(rule: &LinearPadRule, sigma: f64) -> Result<f64> {
    let a = rule.extended();
    let kappa = kernel_table(a.len(), sigma)?;
    let mut total = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            total += ai * aj * kappa[i.abs_diff(j)];
        }
    }
    Ok(total)
}

/// Solves the Toeplitz normal equations with `r_ij = kappa(j - i)` by
/// Levinson-Durbin recursion. Near-singular systems fall back to a
/// ridge-loaded dense solve.
pub fn levinson_optimal(order: usize, sigma: f64) -> Result<LinearPadRule> {
    if order == 0 {
        return Err(Error::InvalidArgument("predictor count must be at least 1".into()));
    }
    let r = kernel_table(order + 1, sigma)?;
    match levinson_durbin(&r) {
        Some(a) => Ok(LinearPadRule::from_predictors(&a)),
        None => {
            warn!("Levinson recursion broke down for P={order}, sigma={sigma}; using a dense solve");
            Ok(LinearPadRule::from_predictors(&dense_toeplitz_solve(
                &r,
                FALLBACK_RIDGE,
            )?))
        }
    }
}

/// Predictor coefficients for autocorrelation `r[0..=P]`, or `None` when a
/// reflection coefficient leaves the unit interval.
fn levinson_durbin(r: &[f64]) -> Option<Vec<f64>> {
    let p = r.len() - 1;
    let mut a: Vec<f64> = Vec::with_capacity(p);
    let mut err = r[0];
    for m in 0..p {
        let mut acc = r[m + 1];
        for (j, aj) in a.iter().enumerate() {
            acc -= aj * r[m - j];
        }
        let k = acc / err;
        if !k.is_finite() || k.abs() > LEVINSON_BREAKDOWN {
            return None;
        }
        let prev = a.clone();
        for j in 0..m {
            a[j] = prev[j] - k * prev[m - 1 - j];
        }
        a.push(k);
        err *= 1.0 - k * k;
    }
    Some(a)
}

/// Dense solve of `T a = r[1..]` with `T_ij = r[|i - j|] + ridge delta_ij`.
pub fn dense_toeplitz_solve(r: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let p = r.len() - 1;
    let t = DMatrix::from_fn(p, p, |i, j| r[i.abs_diff(j)] + if i == j { ridge } else { 0.0 });
    let rhs = DVector::from_fn(p, |i, _| r[i + 1]);
    let chol = t.cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Draws zero-mean, unit-variance sequences with covariance `kappa(j - i)`.
///
/// Short sequences use an exact symmetric square root of the covariance
/// matrix. Long ones convolve white noise with a sampled Gaussian of standard
/// deviation `sigma / sqrt(2)`, whose autocorrelation is `kappa`, scaled to
/// unit variance.
#[derive(Clone, Debug)]
pub struct GaussianProcessSampler {
    len: usize,
    kind: SamplerKind,
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Factor(DMatrix<f64>),
    Blur(Vec<f64>),
}

impl GaussianProcessSampler {
    pub fn new(len: usize, sigma: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
        }
        let kappa = kernel_table(len.min(FACTORIZE_MAX + 1), sigma)?;
        let kind = if len <= FACTORIZE_MAX {
            let cov = DMatrix::from_fn(len, len, |i, j| kappa[i.abs_diff(j)]);
            let eig = cov.symmetric_eigen();
            let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
            SamplerKind::Factor(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
        } else {
            let s = sigma / std::f64::consts::SQRT_2;
            let half = (6.0 * s).ceil().max(1.0) as isize;
            let mut taps: Vec<f64> = (-half..=half)
                .map(|k| (-(k * k) as f64 / (2.0 * s * s)).exp())
                .collect();
            let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
            taps.iter_mut().for_each(|t| *t /= norm);
            SamplerKind::Blur(taps)
        };
        Ok(Self { len, kind })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sample_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len);
        match &self.kind {
            SamplerKind::Factor(l) => {
                let z: Vec<f64> = (0..self.len).map(|_| StandardNormal.sample(rng)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..self.len).map(|j| l[(i, j)] * z[j]).sum();
                }
            }
            SamplerKind::Blur(taps) => {
                let noise: Vec<f64> = (0..self.len + taps.len() - 1)
                    .map(|_| StandardNormal.sample(rng))
                    .collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = taps.iter().zip(&noise[i..]).map(|(t, z)| t * z).sum();
                }
            }
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        self.sample_into(rng, &mut out);
        out
    }
}

pub fn sample_gaussian_process(len: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    let sampler = GaussianProcessSampler::new(len, sigma)?;
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Monte-Carlo estimate of `E(eps^2)` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Averages `eps^2` over independent process windows. Trials are split into
/// fixed shards, each with its own stream of `seed`, so the result does not
/// depend on the thread count.
pub fn empirical_nmse(rule: &LinearPadRule, sigma: f64, trials: usize, seed: u64) -> Result<McEstimate> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!(
            "at least 100 trials are needed, got {trials}"
        )));
    }
    let sampler = GaussianProcessSampler::new(rule.order() + 1, sigma)?;
    let shards = trials.div_ceil(SHARD_TRIALS);
    let sums: Vec<(f64, f64)> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let n = SHARD_TRIALS.min(trials - shard * SHARD_TRIALS);
            let mut window = vec![0.0; sampler.len()];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                sampler.sample_into(&mut rng, &mut window);
                let e2 = rule.error(&window).powi(2);
                s1 += e2;
                s2 += e2 * e2;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let n = trials as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / n).sqrt(),
    })
}

/// 1D padding rules of the error comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TheoryMethod {
    /// Polynomial extrapolation of order `N`; 0 is zero padding and 1 is
    /// replication.
    Extr(usize),
    /// Optimal linear predictor with `P` predictors under the known model.
    Lp(usize),
}

impl TheoryMethod {
    pub const DEFAULT_SET: [TheoryMethod; 7] = [
        TheoryMethod::Extr(0),
        TheoryMethod::Extr(1),
        TheoryMethod::Extr(2),
        TheoryMethod::Extr(3),
        TheoryMethod::Lp(1),
        TheoryMethod::Lp(2),
        TheoryMethod::Lp(3),
    ];

    pub fn order(&self) -> usize {
        match *self {
            TheoryMethod::Extr(n) | TheoryMethod::Lp(n) => n,
        }
    }

    pub fn rule(&self, sigma: f64) -> Result<LinearPadRule> {
        match *self {
            TheoryMethod::Extr(n) => {
                gaussian_kernel(0.0, sigma)?;
                Ok(LinearPadRule::from_predictors(&lagrange_coefficients(n)))
            }
            TheoryMethod::Lp(p) => levinson_optimal(p, sigma),
        }
    }
}

impl fmt::Display for TheoryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TheoryMethod::Extr(0) => f.write_str("zero"),
            TheoryMethod::Extr(1) => f.write_str("repl"),
            TheoryMethod::Extr(n) => write!(f, "extr{n}"),
            TheoryMethod::Lp(1) => f.write_str("lp1x1cs"),
            TheoryMethod::Lp(p) => write!(f, "lp{p}x1"),
        }
    }
}

impl FromStr for TheoryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMethod(s.to_string());
        match s {
            "zero" => return Ok(TheoryMethod::Extr(0)),
            "repl" => return Ok(TheoryMethod::Extr(1)),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("extr") {
            return n.parse().map(TheoryMethod::Extr).map_err(|_| unknown());
        }
        let body = s.strip_prefix("lp").ok_or_else(unknown)?;
        let body = body.strip_suffix("cs").unwrap_or(body);
        let p = body.strip_suffix("x1").unwrap_or(body);
        match p.parse::<usize>() {
            Ok(p) if p >= 1 => Ok(TheoryMethod::Lp(p)),
            _ => Err(unknown()),
        }
    }
}

/// `points` log-spaced values from `min` to `max` inclusive.
pub fn log_sigma_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || points == 0 {
        return Err(Error::InvalidArgument(format!(
            "sigma grid needs 0 < min <= max and at least one point, got [{min}, {max}] x {points}"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let (l0, l1) = (min.ln(), max.ln());
    Ok((0..points)
        .map(|i| match i {
            0 => min,
            i if i == points - 1 => max,
            i => (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp(),
        })
        .collect())
}

pub fn default_sigma_grid() -> Vec<f64> {
    log_sigma_grid(0.25, 8.0, 24).expect("valid default grid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmseCurve {
    pub method: String,
    /// `(sigma, nmse)` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Monte-Carlo estimates aligned with `samples`, when requested.
    pub monte_carlo: Option<Vec<McEstimate>>,
}

pub fn nmse_curves(sigmas: &[f64], methods: &[TheoryMethod]) -> Result<Vec<NmseCurve>> {
    methods
        .iter()
        .map(|m| {
            let samples = sigmas
                .iter()
                .map(|&s| Ok((s, theoretical_nmse(&m.rule(s)?, s)?)))
                .collect::<Result<_>>()?;
            Ok(NmseCurve {
                method: m.to_string(),
                samples,
                monte_carlo: None,
            })
        })
        .collect()
}

/// Like [`nmse_curves`] with Monte-Carlo columns. Each (method, sigma) cell
/// gets its own seed derived from `seed` and its position.
pub fn nmse_curves_with_mc(
    sigmas: &[f64],
    methods: &[TheoryMethod],
    trials: usize,
    seed: u64,
) -> Result<Vec<NmseCurve>> {
    let mut curves = nmse_curves(sigmas, methods)?;
    for (mi, (curve, m)) in curves.iter_mut().zip(methods).enumerate() {
        let mc = sigmas
            .iter()
            .enumerate()
            .map(|(si, &s)| {
                let cell = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((mi * sigmas.len() + si) as u64);
                empirical_nmse(&m.rule(s)?, s, trials, cell)
            })
            .collect::<Result<_>>()?;
        curve.monte_carlo = Some(mc);
    }
    Ok(curves)
}

/// CSV with header `method,sigma,nmse` plus `mc_nmse,stderr` when any curve
/// carries Monte-Carlo estimates. Values use 17 significant digits.
pub fn write_nmse_csv<W: Write>(curves: &[NmseCurve], mut out: W) -> io::Result<()> {
    let with_mc = curves.iter().any(|c| c.monte_carlo.is_some());
    if with_mc {
        writeln!(out, "method,sigma,nmse,mc_nmse,stderr")?;
    } else {
        writeln!(out, "method,sigma,nmse")?;
    }
    for c in curves {
        for (k, (s, v)) in c.samples.iter().enumerate() {
            write!(out, "{},{:.16e},{:.16e}", c.method, s, v)?;
            if with_mc {
                match c.monte_carlo.as_ref().map(|mc| mc[k]) {
                    Some(e) => write!(out, ",{:.16e},{:.16e}", e.estimate, e.stderr)?,
                    None => write!(out, ",,")?,
                }
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
