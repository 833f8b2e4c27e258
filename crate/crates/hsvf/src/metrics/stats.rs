//! Feature-model fitting shared by the fog-density and natural-statistics
//! scores: sample mean plus ridge-regularized covariance.

use crate::error::{Error, Result};

use super::linalg::cholesky;

pub const RIDGE: f64 = 1e-6;

/// Fits mean and covariance (row major, with `RIDGE` added to the diagonal)
/// over feature rows. All rows must share the same length.
pub fn fit_gaussian(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let count = rows.len();
    if count < 2 {
        return Err(Error::data("need at least two feature rows"));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::shape("inconsistent feature dimensions".to_string()));
    }
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= count as f64;
    }
    let mut cov = vec![0.0; dim * dim];
    for row in rows {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in 0..dim {
                cov[i * dim + j] += di * (row[j] - mean[j]);
            }
        }
    }
    for v in cov.iter_mut() {
        *v /= (count - 1) as f64;
    }
    for i in 0..dim {
        cov[i * dim + i] += RIDGE;
    }
    if cholesky(&cov, dim).is_none() {
        return Err(Error::numeric("regularized covariance is not positive definite"));
    }
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_mean_and_is_spd() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0])
            .collect();
        let (mean, cov) = fit_gaussian(&rows).unwrap();
        assert!((mean[0] - 9.5).abs() < 1e-12);
        assert!((mean[1] - 20.0).abs() < 1e-12);
        // symmetric positive definite after regularization
        assert!((cov[1] - cov[2]).abs() < 1e-12);
        assert!(super::super::linalg::cholesky(&cov, 2).is_some());
    }
}
