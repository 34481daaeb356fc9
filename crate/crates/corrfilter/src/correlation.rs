//! Weighted Pearson correlation matrices and the metric distance
//! `D_ij = sqrt(2 (1 - rho_ij))`.
//!
//! Correlations are estimated with either uniform weights or exponentially
//! decaying weights `w_t = w_0 * exp((t - t_end) / theta)` over the
//! observation window, normalized so the weights sum to one. Weighted
//! means, variances and covariances all use the same weights, so the
//! limit `theta -> inf` reproduces the uniform estimator.
//!
//! The distance transform maps correlation 1 to distance 0, correlation 0
//! to `sqrt(2)` and correlation -1 to 2, turning similarity into a metric
//! usable by the filtered-graph and clustering modules.

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::ReturnsPanel;

/// Errors raised by correlation and distance construction.
#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("series {ticker:?} has zero variance in the window")]
    ZeroVariance { ticker: String },
    #[error("smoothing scale theta must be positive, got {theta}")]
    NonPositiveTheta { theta: f64 },
    #[error("correlation ({i},{j}) = {value} outside [-1, 1]")]
    OutOfRangeCorrelation { i: usize, j: usize, value: f64 },
    #[error("matrix not symmetric at ({i},{j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("diagonal entry {i} must be {expected}")]
    BadDiagonal { i: usize, expected: f64 },
    #[error("negative distance at ({i},{j})")]
    NegativeEntry { i: usize, j: usize },
}

/// Observation weighting for [`pearson`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum WeightScheme {
    /// Every observation counts the same.
    Uniform,
    /// `w_t = w_0 * exp((t - t_end) / theta)`: recent observations count
    /// more, with memory scale `theta` in observation units.
    Exponential { theta: f64 },
}

/// Symmetric correlation matrix with unit diagonal, entries in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub tickers: Vec<String>,
    pub values: Array2<f64>,
}

/// Symmetric non-negative distance matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    pub tickers: Vec<String>,
    pub values: Array2<f64>,
}

fn default_tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i:03}")).collect()
}

impl CorrelationMatrix {
    /// Validates and wraps a raw matrix; entries may exceed `[-1, 1]` by
    /// at most `1e-12` and are clamped.
    pub fn from_values(values: Array2<f64>) -> Result<Self, CorrelationError> {
        let n = values.nrows();
        Self::from_parts(default_tickers(n), values)
    }

    /// Same as [`CorrelationMatrix::from_values`] with explicit tickers.
    pub fn from_parts(
        tickers: Vec<String>,
        mut values: Array2<f64>,
    ) -> Result<Self, CorrelationError> {
        let n = values.nrows();
        assert_eq!(values.ncols(), n, "correlation matrix must be square");
        assert_eq!(tickers.len(), n);
        for i in 0..n {
            if values[[i, i]] != 1.0 {
                if !((values[[i, i]] - 1.0).abs() <= 1e-12) {
                    return Err(CorrelationError::BadDiagonal { i, expected: 1.0 });
                }
                values[[i, i]] = 1.0;
            }
            for j in (i + 1)..n {
                if (values[[i, j]] - values[[j, i]]).abs() > 1e-12 {
                    return Err(CorrelationError::NotSymmetric { i, j });
                }
                let v = values[[i, j]];
                if v.abs() > 1.0 + 1e-12 || !v.is_finite() {
                    return Err(CorrelationError::OutOfRangeCorrelation { i, j, value: v });
                }
                let v = v.clamp(-1.0, 1.0);
                values[[i, j]] = v;
                values[[j, i]] = v;
            }
        }
        Ok(Self { tickers, values })
    }

    /// Matrix order.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

impl DistanceMatrix {
    /// Validates and wraps a raw distance matrix.
    pub fn from_values(values: Array2<f64>) -> Result<Self, CorrelationError> {
        let n = values.nrows();
        Self::from_parts(default_tickers(n), values)
    }

    /// Same as [`DistanceMatrix::from_values`] with explicit tickers.
    pub fn from_parts(
        tickers: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self, CorrelationError> {
        let n = values.nrows();
        assert_eq!(values.ncols(), n, "distance matrix must be square");
        assert_eq!(tickers.len(), n);
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(CorrelationError::BadDiagonal { i, expected: 0.0 });
            }
            for j in (i + 1)..n {
                if (values[[i, j]] - values[[j, i]]).abs() > 1e-12 {
                    return Err(CorrelationError::NotSymmetric { i, j });
                }
                if values[[i, j]] < 0.0 || !values[[i, j]].is_finite() {
                    return Err(CorrelationError::NegativeEntry { i, j });
                }
            }
        }
        Ok(Self { tickers, values })
    }

    /// Matrix order.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Normalized observation weights for a window of length `t_obs`.
///
/// The last observation carries the largest weight under the exponential
/// scheme; weights always sum to one.
pub fn observation_weights(
    scheme: WeightScheme,
    t_obs: usize,
) -> Result<Vec<f64>, CorrelationError> {
    match scheme {
        WeightScheme::Uniform => Ok(vec![1.0 / t_obs as f64; t_obs]),
        WeightScheme::Exponential { theta } => {
            if !(theta > 0.0) {
                return Err(CorrelationError::NonPositiveTheta { theta });
            }
            let t_end = (t_obs - 1) as f64;
            let mut weights: Vec<f64> =
                (0..t_obs).map(|t| ((t as f64 - t_end) / theta).exp()).collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            Ok(weights)
        }
    }
}

/// Weighted Pearson correlation matrix of a returns panel.
///
/// Each pair is accumulated in index order, and pairs are independent, so
/// the row-parallel evaluation is bit-identical to a sequential one.
pub fn pearson(
    panel: &ReturnsPanel,
    scheme: WeightScheme,
) -> Result<CorrelationMatrix, CorrelationError> {
    let n = panel.n_assets();
    let t_obs = panel.n_obs();
    if t_obs < 3 {
        return Err(CorrelationError::TooFewObservations {
            needed: 3,
            got: t_obs,
        });
    }
    let weights = observation_weights(scheme, t_obs)?;

    // Standardize each series: z_it = sqrt(w_t) (x_it - m_i) / s_i, so that
    // rho_ij is a plain dot product.
    let mut z = Array2::zeros((n, t_obs));
    for i in 0..n {
        let row = panel.returns.row(i);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in row.iter() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let mut mean = 0.0;
        for t in 0..t_obs {
            mean += weights[t] * row[t];
        }
        let mut var = 0.0;
        for t in 0..t_obs {
            var += weights[t] * (row[t] - mean).powi(2);
        }
        if lo == hi || var <= 0.0 {
            return Err(CorrelationError::ZeroVariance {
                ticker: panel.tickers[i].clone(),
            });
        }
        let scale = var.sqrt();
        for t in 0..t_obs {
            z[[i, t]] = weights[t].sqrt() * (row[t] - mean) / scale;
        }
    }

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            (i + 1..n)
                .map(|j| {
                    let zj = z.row(j);
                    let mut dot = 0.0;
                    for t in 0..t_obs {
                        dot += zi[t] * zj[t];
                    }
                    dot.clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();

    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        values[[i, i]] = 1.0;
        for (off, &rho) in rows[i].iter().enumerate() {
            let j = i + 1 + off;
            values[[i, j]] = rho;
            values[[j, i]] = rho;
        }
    }
    Ok(CorrelationMatrix {
        tickers: panel.tickers.clone(),
        values,
    })
}

/// Converts a correlation matrix into `D_ij = sqrt(2 (1 - rho_ij))`.
///
/// Tiny negative radicands from correlations within rounding of 1 are
/// clamped to zero.
pub fn to_distance(corr: &CorrelationMatrix) -> Result<DistanceMatrix, CorrelationError> {
    let n = corr.n();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let rho = corr.values[[i, j]];
            if rho.abs() > 1.0 + 1e-12 || !rho.is_finite() {
                return Err(CorrelationError::OutOfRangeCorrelation { i, j, value: rho });
            }
            let d = (2.0 * (1.0 - rho)).max(0.0).sqrt();
            values[[i, j]] = d;
            values[[j, i]] = d;
        }
    }
    Ok(DistanceMatrix {
        tickers: corr.tickers.clone(),
        values,
    })
}

/// Mean of the off-diagonal correlations.
pub fn mean_offdiagonal(corr: &CorrelationMatrix) -> f64 {
    let n = corr.n();
    assert!(n >= 2, "mean off-diagonal needs at least two series");
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += corr.values[[i, j]];
        }
    }
    sum / (n * (n - 1) / 2) as f64
}
