//! Stabilization of one- and two-tap recursive predictors.
//!
//! Padding with `y[k] = a1 y[k-1] + a2 y[k-2]` is an all-pole filter with
//! transfer function `1 / (1 - a1 z^-1 - a2 z^-2)`. Poles outside the unit
//! circle are moved to the reciprocal radius at the same angle, which keeps
//! the magnitude response up to a constant factor and makes the recursion
//! decay.

use num_complex::Complex64;

/// Poles above this radius are reciprocated. The slack absorbs rounding in
/// re-expanded coefficients so that stabilization is idempotent.
const RADIUS_LIMIT: f64 = 1.0 + 1e-12;

/// Poles of a one- or two-tap predictor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolePair {
    /// Single pole of a one-tap predictor.
    Single(f64),
    /// Two real poles, `p0 >= p1` when produced by [`poles_of`].
    Real(f64, f64),
    /// Complex conjugate pair.
    Conjugate { magnitude_sq: f64, real: f64 },
}

impl PolePair {
    pub fn max_magnitude(&self) -> f64 {
        match *self {
            PolePair::Single(p) => p.abs(),
            PolePair::Real(p0, p1) => p0.abs().max(p1.abs()),
            PolePair::Conjugate { magnitude_sq, .. } => magnitude_sq.sqrt(),
        }
    }
}

/// Poles of `z - a1` or `z^2 - a1 z - a2`.
pub fn poles_of(a: &[f64]) -> PolePair {
    match *a {
        [a1] => PolePair::Single(a1),
        [a1, a2] => {
            let disc = a1 * a1 + 4.0 * a2;
            if disc >= 0.0 {
                let s = disc.sqrt();
                PolePair::Real((a1 + s) / 2.0, (a1 - s) / 2.0)
            } else {
                PolePair::Conjugate {
                    magnitude_sq: -a2,
                    real: a1 / 2.0,
                }
            }
        }
        _ => panic!("poles_of supports one or two coefficients, got {}", a.len()),
    }
}

pub fn stabilize_p1(a1: f64) -> f64 {
    if a1.abs() > RADIUS_LIMIT {
        1.0 / a1
    } else {
        a1
    }
}

pub fn stabilize_p2(a1: f64, a2: f64) -> (f64, f64) {
    match poles_of(&[a1, a2]) {
        PolePair::Conjugate { magnitude_sq, .. } => {
            if magnitude_sq > RADIUS_LIMIT * RADIUS_LIMIT {
                (-a1 / a2, 1.0 / a2)
            } else {
                (a1, a2)
            }
        }
        PolePair::Real(p0, p1) => {
            if p0.abs() <= RADIUS_LIMIT && p1.abs() <= RADIUS_LIMIT {
                return (a1, a2);
            }
            let flip = |p: f64| if p.abs() > RADIUS_LIMIT { 1.0 / p } else { p };
            let (q0, q1) = (flip(p0), flip(p1));
            (q0 + q1, -(q0 * q1))
        }
        PolePair::Single(_) => unreachable!(),
    }
}

/// Stabilizes a coefficient vector of length one or two; longer vectors are
/// returned unchanged.
pub fn stabilize(a: &[f64]) -> Vec<f64> {
    match *a {
        [a1] => vec![stabilize_p1(a1)],
        [a1, a2] => {
            let (b1, b2) = stabilize_p2(a1, a2);
            vec![b1, b2]
        }
        _ => a.to_vec(),
    }
}

/// `|H(e^{i omega})|` for `H(z) = 1 / (1 - sum_k a_k z^-k)`. Evaluated
/// formally, so it is defined for unstable coefficients too.
pub fn magnitude_response(a: &[f64], omega: f64) -> f64 {
    let mut den = Complex64::new(1.0, 0.0);
    for (k, &ak) in a.iter().enumerate() {
        den -= ak * Complex64::from_polar(1.0, -omega * (k + 1) as f64);
    }
    1.0 / den.norm()
}

/// Input gain `b0'` that restores the DC gain after stabilization. Not
/// needed for zero-input padding.
pub fn gain_compensation(b0: f64, original: &[f64], stabilized: &[f64]) -> f64 {
    let num = 1.0 - stabilized.iter().sum::<f64>();
    let den = 1.0 - original.iter().sum::<f64>();
    b0 * num / den
}
