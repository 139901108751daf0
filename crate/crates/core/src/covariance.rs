//! Covariance-method statistics and normal-equation solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ExtendedNeighborhood, ValidRegion};
use crate::raster::Plane;

/// Ridge added to the diagonal in [`solve_general`] by default.
pub const DEFAULT_RIDGE: f64 = 1e-7;

/// Symmetric `(P+1) x (P+1)` matrix of second moments `r_ij` between the
/// predicted pixel (index 0) and the predictors (indices `1..=P`).
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    /// Builds from a full row-major matrix. The matrix must be square and
    /// symmetric.
    pub fn from_dense(size: usize, entries: Vec<f64>) -> Result<Self> {
        if size < 2 || entries.len() != size * size {
            return Err(Error::InvalidArgument(format!(
                "covariance matrix needs at least 2x2 entries, got {} for size {size}",
                entries.len()
            )));
        }
        for i in 0..size {
            for j in 0..i {
                if entries[i * size + j] != entries[j * size + i] {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { size, entries })
    }

    /// Builds from `r(i, j)` evaluated on the upper triangle.
    pub fn from_fn(order: usize, mut r: impl FnMut(usize, usize) -> f64) -> Self {
        let size = order + 1;
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            for j in i..size {
                let v = r(i, j);
                entries[i * size + j] = v;
                entries[j * size + i] = v;
            }
        }
        Self { size, entries }
    }

    /// Number of predictors `P`.
    pub fn order(&self) -> usize {
        self.size - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// The predictor block `r[1..=P, 1..=P]`.
    pub fn predictor_block(&self) -> DMatrix<f64> {
        let p = self.order();
        DMatrix::from_fn(p, p, |i, j| self.get(i + 1, j + 1))
    }

    /// The right-hand side `r[0, 1..=P]`.
    pub fn cross_terms(&self) -> DVector<f64> {
        DVector::from_fn(self.order(), |i, _| self.get(0, i + 1))
    }

    /// Mean square prediction error of `coeffs` under these statistics.
    pub fn prediction_mse(&self, coeffs: &[f64]) -> f64 {
        assert_eq!(coeffs.len(), self.order());
        let mut ext = Vec::with_capacity(self.size);
        ext.push(-1.0);
        ext.extend_from_slice(coeffs);
        let mut acc = 0.0;
        for i in 0..self.size {
            for j in 0..self.size {
                acc += ext[i] * ext[j] * self.get(i, j);
            }
        }
        acc
    }
}

/// Fitted per-channel autoregressive predictor for one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ArModel {
    pub coefficients: Vec<f64>,
    /// Mean subtracted from the channel before fitting.
    pub mean: f64,
    pub neighborhood: ExtendedNeighborhood,
    /// Set when the fit could not be carried out and coefficients were
    /// zeroed, which pads with the mean.
    pub fallback: bool,
}

impl ArModel {
    pub fn zeroed(neighborhood: ExtendedNeighborhood, mean: f64) -> Self {
        Self {
            coefficients: vec![0.0; neighborhood.order()],
            mean,
            neighborhood,
            fallback: true,
        }
    }
}

/// Means of products `r_ij = 1/|S| sum_{s in S} I[s + h_i] I[s + h_j]` over the
/// valid region. The plane is expected to be mean-subtracted already.
pub fn covariance_statistics(
    plane: &Plane,
    nbhd: &ExtendedNeighborhood,
    region: &ValidRegion,
) -> Result<CovarianceMatrix> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let offsets = nbhd.offsets();
    let size = offsets.len();
    let mut acc = vec![0.0f64; size * size];
    let mut values = vec![0.0f64; size];
    for (y, x) in region.iter() {
        for (v, &(dy, dx)) in values.iter_mut().zip(offsets) {
            *v = plane.get((y + dy) as usize, (x + dx) as usize);
        }
        for i in 0..size {
            let vi = values[i];
            for j in i..size {
                acc[i * size + j] += vi * values[j];
            }
        }
    }
    let n = region.len() as f64;
    Ok(CovarianceMatrix::from_fn(size - 1, |i, j| {
        acc[i * size + j] / n
    }))
}

/// Division that maps infinite or undefined quotients to zero.
#[inline]
pub fn safe_divide(num: f64, den: f64) -> f64 {
    let q = num / den;
    if q.is_finite() {
        q
    } else {
        0.0
    }
}

/// Closed-form single-predictor solution `a1 = r01 / r11`.
pub fn solve_p1(r: &CovarianceMatrix) -> Vec<f64> {
    assert_eq!(r.order(), 1, "solve_p1 needs one predictor");
    vec![safe_divide(r.get(0, 1), r.get(1, 1))]
}

/// Closed-form two-predictor solution by Cramer's rule.
pub fn solve_p2(r: &CovarianceMatrix) -> Vec<f64> {
    assert_eq!(r.order(), 2, "solve_p2 needs two predictors");
    let (r01, r02) = (r.get(0, 1), r.get(0, 2));
    let (r11, r12, r22) = (r.get(1, 1), r.get(1, 2), r.get(2, 2));
    let det = r11 * r22 - r12 * r12;
    vec![
        safe_divide(r01 * r22 - r02 * r12, det),
        safe_divide(r02 * r11 - r01 * r12, det),
    ]
}

/// Solves `(r[1..,1..] + ridge I) a = r[0,1..]` by Cholesky factorization.
pub fn solve_general(r: &CovarianceMatrix, ridge: f64) -> Result<Vec<f64>> {
    if ridge.is_nan() || ridge < 0.0 {
        return Err(Error::InvalidArgument(format!("ridge {ridge} is negative")));
    }
    let mut block = r.predictor_block();
    for i in 0..block.nrows() {
        block[(i, i)] += ridge;
    }
    let chol = block.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let a = chol.solve(&r.cross_terms());
    if a.iter().all(|v| v.is_finite()) {
        Ok(a.iter().copied().collect())
    } else {
        Err(Error::NotPositiveDefinite)
    }
}
