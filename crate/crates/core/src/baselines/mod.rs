//! Classical reference methods: vector CCA, two-dimensional CCA and
//! probabilistic CCA (closed-form maximum likelihood and EM).

mod cca;
mod pcca;
mod tdcca;

pub use cca::{cca_fit, cca_project, CcaModel};
pub use pcca::{
    pcca_fit_em, pcca_fit_ml, pcca_loglik, pcca_posterior_mean, PccaEm, PccaEmOptions, PccaFit,
    PccaModel,
};
pub use tdcca::{tdcca_fit, tdcca_project, TdccaFit, TdccaModel, TdccaOptions, TdccaStep};

use nalgebra::{DMatrix, DVector};

use crate::error::{MvccaError, Result};
use crate::scalar::Real;

/// Sample means and `1/N` covariance blocks of two vector views.
pub(crate) struct PairedMoments<T: Real> {
    pub mean1: DVector<T>,
    pub mean2: DVector<T>,
    pub c11: DMatrix<T>,
    pub c12: DMatrix<T>,
    pub c22: DMatrix<T>,
}

/// Columns are the centered samples.
pub(crate) fn centered_columns<T: Real>(xs: &[DVector<T>], what: &str) -> Result<(DVector<T>, DMatrix<T>)> {
    let dim = xs[0].len();
    let mut data = DMatrix::zeros(dim, xs.len());
    for (i, x) in xs.iter().enumerate() {
        if x.len() != dim {
            return Err(MvccaError::dim(format!(
                "{what} sample {i} has length {}, expected {dim}",
                x.len()
            )));
        }
        data.set_column(i, x);
    }
    let mean = data.column_mean();
    for mut c in data.column_iter_mut() {
        c -= &mean;
    }
    Ok((mean, data))
}

pub(crate) fn paired_moments<T: Real>(view1: &[DVector<T>], view2: &[DVector<T>]) -> Result<PairedMoments<T>> {
    if view1.len() != view2.len() {
        return Err(MvccaError::dim(format!(
            "{} first-view samples but {} second-view samples",
            view1.len(),
            view2.len()
        )));
    }
    if view1.len() < 2 {
        return Err(MvccaError::arg("at least two samples are required"));
    }
    let (mean1, x1) = centered_columns(view1, "first view")?;
    let (mean2, x2) = centered_columns(view2, "second view")?;
    let n = T::from_usize_lossy(view1.len());
    Ok(PairedMoments {
        mean1,
        mean2,
        c11: &x1 * x1.transpose() / n,
        c12: &x1 * x2.transpose() / n,
        c22: &x2 * x2.transpose() / n,
    })
}

pub(crate) fn check_rank(d: usize, m1: usize, m2: usize, what: &str) -> Result<()> {
    if d == 0 || d > m1.min(m2) {
        return Err(MvccaError::dim(format!(
            "{what} must be in 1..={}, got {d}",
            m1.min(m2)
        )));
    }
    Ok(())
}
