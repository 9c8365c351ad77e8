//! PCA pre-projection for the vector baselines.

use mvcca::matvar::fix_column_signs;
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: DVector<f64>,
    /// Orthonormal columns, leading directions first.
    pub basis: DMatrix<f64>,
}

impl Pca {
    pub fn fit(xs: &[DVector<f64>], k: usize) -> CliResult<Self> {
        let n = xs.len();
        let dim = xs.first().map_or(0, |x| x.len());
        if k == 0 || k > dim || k + 1 > n {
            return Err(CliError::usage(format!(
                "--pca-pre {k} must be in 1..={} for {n} samples of dimension {dim}",
                dim.min(n.saturating_sub(1))
            )));
        }
        let mean = xs.iter().fold(DVector::zeros(dim), |a, x| a + x) / n as f64;
        let centered = DMatrix::from_fn(dim, n, |r, c| xs[c][r] - mean[r]);
        let svd = centered.svd(true, false);
        let u = svd.u.ok_or_else(|| CliError::Numerical("PCA singular value decomposition failed".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut basis = DMatrix::from_fn(dim, k, |r, c| u[(r, order[c])]);
        fix_column_signs(&mut basis);
        Ok(Self { mean, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * (x - &self.mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_the_dominant_axis() {
        let xs: Vec<DVector<f64>> = (0..20)
            .map(|i| {
                let t = i as f64 - 9.5;
                DVector::from_vec(vec![0.01 * (i % 3) as f64, 3.0 * t, 1.0])
            })
            .collect();
        let p = Pca::fit(&xs, 1).unwrap();
        assert!((p.basis[(1, 0)].abs() - 1.0).abs() < 1e-4);
        assert!((p.apply(&xs[0])[0].abs() - 3.0 * 9.5).abs() < 0.1);
    }

    #[test]
    fn rank_is_capped_by_samples() {
        let xs = vec![DVector::from_element(5, 1.0), DVector::from_element(5, 2.0)];
        assert!(Pca::fit(&xs, 2).is_err());
        assert!(Pca::fit(&xs, 1).is_ok());
    }
}
