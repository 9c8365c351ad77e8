use nalgebra::{DMatrix, DVector};

use super::{check_rank, paired_moments};
use crate::dataset::View;
use crate::error::{MvccaError, Result};
use crate::matvar::{sym_geig_factored, symmetrize, SpdFactor, SpdPolicy};
use crate::scalar::Real;

/// Canonical directions of two vector views.
///
/// Columns of `w1`/`w2` have unit variance on the training data;
/// `correlations` are the canonical correlations in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel<T: Real> {
    pub w1: DMatrix<T>,
    pub w2: DMatrix<T>,
    pub correlations: DVector<T>,
    pub mean1: DVector<T>,
    pub mean2: DVector<T>,
}

impl<T: Real> CcaModel<T> {
    pub fn dim(&self) -> usize {
        self.correlations.len()
    }

    pub fn weights(&self, view: View) -> &DMatrix<T> {
        match view {
            View::First => &self.w1,
            View::Second => &self.w2,
        }
    }

    pub fn mean(&self, view: View) -> &DVector<T> {
        match view {
            View::First => &self.mean1,
            View::Second => &self.mean2,
        }
    }
}

/// Fits `d` canonical pairs by solving
/// `C₁₂ C₂₂⁻¹ C₂₁ w¹ = λ² C₁₁ w¹` and mapping `w² ∝ C₂₂⁻¹ C₂₁ w¹`.
pub fn cca_fit<T: Real>(
    view1: &[DVector<T>],
    view2: &[DVector<T>],
    d: usize,
    policy: &SpdPolicy,
) -> Result<CcaModel<T>> {
    let mo = paired_moments(view1, view2)?;
    let (m1, m2) = (mo.c11.nrows(), mo.c22.nrows());
    check_rank(d, m1, m2, "number of canonical pairs")?;
    let f11 = SpdFactor::new(&mo.c11, policy, "first-view autocovariance")?;
    let f22 = SpdFactor::new(&mo.c22, policy, "second-view autocovariance")?;
    let c21 = mo.c12.transpose();
    let c22_inv_c21 = f22.solve(&c21);
    let a = symmetrize(&(&mo.c12 * &c22_inv_c21));
    let eig = sym_geig_factored(&a, &f11)?;

    let one = T::one();
    let mut correlations = DVector::zeros(d);
    let w1 = eig.eigenvectors.columns(0, d).into_owned();
    let mut w2 = &c22_inv_c21 * &w1;
    let mut fallback = None;
    for k in 0..d {
        let lam = eig.eigenvalues[k].max(T::zero());
        correlations[k] = lam.sqrt().min(one);
        let col = w2.column(k).into_owned();
        let var = (col.transpose() * &mo.c22 * &col)[(0, 0)];
        if var > T::lit(1e-24) {
            w2.set_column(k, &(col / var.sqrt()));
        } else {
            // No cross-covariance along this direction: take the view-2
            // eigenvector of the mirrored problem instead.
            let alt = fallback.get_or_insert_with(|| {
                let b = symmetrize(&(&c21 * f11.solve(&mo.c12)));
                sym_geig_factored(&b, &f22)
            });
            let alt = alt.as_ref().map_err(|e| e.clone())?;
            w2.set_column(k, &alt.eigenvectors.column(k));
        }
    }
    Ok(CcaModel {
        w1,
        w2,
        correlations,
        mean1: mo.mean1,
        mean2: mo.mean2,
    })
}

/// `Wᵀ (x − mean)` for the given view.
pub fn cca_project<T: Real>(model: &CcaModel<T>, x: &DVector<T>, view: View) -> Result<DVector<T>> {
    let mean = model.mean(view);
    if x.len() != mean.len() {
        return Err(MvccaError::dim(format!(
            "view {} sample has length {}, model expects {}",
            view.number(),
            x.len(),
            mean.len()
        )));
    }
    Ok(model.weights(view).transpose() * (x - mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_vectors(n: usize, dim: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = stream_rng(seed, 0);
        (0..n)
            .map(|_| DVector::from_fn(dim, |_, _| rng.sample(StandardNormal)))
            .collect()
    }

    #[test]
    fn identical_views_are_perfectly_correlated() {
        let v = gaussian_vectors(200, 2, 1);
        let model = cca_fit(&v, &v, 2, &SpdPolicy::exact()).unwrap();
        for &r in model.correlations.iter() {
            assert!((r - 1.0).abs() < 1e-8, "{r}");
        }
    }

    #[test]
    fn independent_views_have_small_correlations() {
        let a = gaussian_vectors(10_000, 3, 2);
        let b = gaussian_vectors(10_000, 3, 3);
        let model = cca_fit(&a, &b, 3, &SpdPolicy::default()).unwrap();
        assert!(model.correlations.iter().all(|&r| r < 0.1), "{}", model.correlations);
    }

    #[test]
    fn projected_training_variance_is_one() {
        let a = gaussian_vectors(500, 4, 4);
        let b: Vec<_> = a
            .iter()
            .zip(gaussian_vectors(500, 3, 5))
            .map(|(x, e)| DVector::from_vec(vec![x[0] + e[0], x[1] - x[2] + e[1], e[2]]))
            .collect();
        let model = cca_fit(&a, &b, 3, &SpdPolicy::exact()).unwrap();
        for (view, data) in [(View::First, &a), (View::Second, &b)] {
            let proj: Vec<_> = data.iter().map(|x| cca_project(&model, x, view).unwrap()).collect();
            for k in 0..3 {
                let var = proj.iter().map(|p| p[k] * p[k]).sum::<f64>() / proj.len() as f64;
                assert!((var - 1.0).abs() < 1e-6, "view {view:?} dir {k}: {var}");
            }
        }
        // paired directions carry the reported correlation
        let p1: Vec<_> = a.iter().map(|x| cca_project(&model, x, View::First).unwrap()).collect();
        let p2: Vec<_> = b.iter().map(|x| cca_project(&model, x, View::Second).unwrap()).collect();
        for k in 0..3 {
            let cov = p1.iter().zip(&p2).map(|(u, v)| u[k] * v[k]).sum::<f64>() / 500.0;
            assert!((cov - model.correlations[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_of_mean_is_zero_and_dims_checked() {
        let a = gaussian_vectors(50, 3, 6);
        let b = gaussian_vectors(50, 2, 7);
        let model = cca_fit(&a, &b, 2, &SpdPolicy::default()).unwrap();
        let z = cca_project(&model, &model.mean1.clone(), View::First).unwrap();
        assert!(z.norm() < 1e-14);
        assert!(cca_project(&model, &DVector::zeros(2), View::First).is_err());
        assert!(cca_fit(&a, &b, 3, &SpdPolicy::default()).is_err());
    }

    #[test]
    fn identity_weights_center_the_input() {
        let model = CcaModel {
            w1: DMatrix::identity(2, 2),
            w2: DMatrix::identity(2, 2),
            correlations: DVector::from_vec(vec![1.0, 1.0]),
            mean1: DVector::from_vec(vec![1.0, 2.0]),
            mean2: DVector::zeros(2),
        };
        let x = DVector::from_vec(vec![3.0, -1.0]);
        assert_eq!(cca_project(&model, &x, View::First).unwrap(), DVector::from_vec(vec![2.0, -3.0]));
    }
}
