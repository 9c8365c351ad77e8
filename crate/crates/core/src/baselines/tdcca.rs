use nalgebra::{DMatrix, DVector};

use super::check_rank;
use crate::dataset::{PairedMatrixDataset, View};
use crate::error::{MvccaError, Result};
use crate::matvar::{block_diag, check_shape, sym_geig, SpdPolicy};
use crate::rng::{stream_rng, uniform_matrix};
use crate::scalar::Real;

/// Left and right projections of two-dimensional CCA.
#[derive(Debug, Clone, PartialEq)]
pub struct TdccaModel<T: Real> {
    pub l1: DMatrix<T>,
    pub l2: DMatrix<T>,
    pub r1: DMatrix<T>,
    pub r2: DMatrix<T>,
    pub mean1: DMatrix<T>,
    pub mean2: DMatrix<T>,
    /// Leading generalized eigenvalues of the final right-side solve.
    pub correlations: DVector<T>,
}

impl<T: Real> TdccaModel<T> {
    pub fn left(&self, view: View) -> &DMatrix<T> {
        match view {
            View::First => &self.l1,
            View::Second => &self.l2,
        }
    }

    pub fn right(&self, view: View) -> &DMatrix<T> {
        match view {
            View::First => &self.r1,
            View::Second => &self.r2,
        }
    }

    pub fn mean(&self, view: View) -> &DMatrix<T> {
        match view {
            View::First => &self.mean1,
            View::Second => &self.mean2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdccaOptions {
    pub d1: usize,
    pub d2: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Seeds the uniform(0, 1) initial right projections.
    pub seed: u64,
    pub policy: SpdPolicy,
}

impl TdccaOptions {
    pub fn new(d1: usize, d2: usize) -> Self {
        Self {
            d1,
            d2,
            max_iters: 200,
            tol: 1e-6,
            seed: 0,
            policy: SpdPolicy::default(),
        }
    }
}

/// One alternation: the left solve followed by the right solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TdccaStep {
    pub iteration: usize,
    /// Leading eigenvalue of the left-side problem (right side fixed).
    pub objective_left: f64,
    /// Leading eigenvalue of the right-side problem (left side fixed).
    pub objective_right: f64,
    pub delta_l1: f64,
    pub delta_l2: f64,
    pub delta_r1: f64,
    pub delta_r2: f64,
}

impl TdccaStep {
    pub fn max_delta(&self) -> f64 {
        self.delta_l1.max(self.delta_l2).max(self.delta_r1).max(self.delta_r2)
    }
}

#[derive(Debug, Clone)]
pub struct TdccaFit<T: Real> {
    pub model: TdccaModel<T>,
    pub trace: Vec<TdccaStep>,
    pub converged: bool,
}

/// Solves the paired problem `[0 Σ₁₂; Σ₂₁ 0] v = λ [Σ₁₁ 0; 0 Σ₂₂] v` and
/// returns the top `d` directions split per view, each half scaled to unit
/// variance under its own block.
fn paired_directions<T: Real>(
    s11: &DMatrix<T>,
    s12: &DMatrix<T>,
    s22: &DMatrix<T>,
    d: usize,
    policy: &SpdPolicy,
    side: &str,
) -> Result<(DVector<T>, DMatrix<T>, DMatrix<T>)> {
    let (k1, k2) = (s11.nrows(), s22.nrows());
    let mut a = DMatrix::zeros(k1 + k2, k1 + k2);
    a.view_mut((0, k1), (k1, k2)).copy_from(s12);
    a.view_mut((k1, 0), (k2, k1)).copy_from(&s12.transpose());
    let b = block_diag(&[s11, s22]);
    let eig = sym_geig(&a, &b, policy).map_err(|e| match e {
        MvccaError::NotPositiveDefinite { .. } | MvccaError::Singular { .. } => relabel(e, side),
        other => other,
    })?;
    let mut v1 = eig.eigenvectors.view((0, 0), (k1, d)).into_owned();
    let mut v2 = eig.eigenvectors.view((k1, 0), (k2, d)).into_owned();
    for k in 0..d {
        for (v, s) in [(&mut v1, s11), (&mut v2, s22)] {
            let col = v.column(k).into_owned();
            let var = (col.transpose() * s * &col)[(0, 0)];
            if var > T::lit(1e-30) {
                v.set_column(k, &(col / var.sqrt()));
            }
        }
    }
    Ok((eig.eigenvalues.rows(0, d).into_owned(), v1, v2))
}

fn relabel(e: MvccaError, side: &str) -> MvccaError {
    match e {
        MvccaError::NotPositiveDefinite { .. } => MvccaError::NotPositiveDefinite {
            what: format!("{side} autocovariance"),
        },
        MvccaError::Singular { condition, limit, .. } => MvccaError::Singular {
            what: format!("{side} autocovariance"),
            condition,
            limit,
        },
        other => other,
    }
}

/// Fits 2DCCA by alternating the left and right generalized eigenproblems
/// until every projection moves less than `tol` (Frobenius) or `max_iters`.
pub fn tdcca_fit<T: Real>(pairs: &PairedMatrixDataset<T>, opts: &TdccaOptions) -> Result<TdccaFit<T>> {
    if pairs.len() < 2 {
        return Err(MvccaError::arg("2DCCA needs at least two pairs"));
    }
    let (m1, n1) = pairs.shape(View::First);
    let (m2, n2) = pairs.shape(View::Second);
    check_rank(opts.d1, m1, m2, "left latent dimension")?;
    check_rank(opts.d2, n1, n2, "right latent dimension")?;
    let x1 = pairs.centered(View::First);
    let x2 = pairs.centered(View::Second);
    let inv_n = T::one() / T::from_usize_lossy(pairs.len());

    let mut rng = stream_rng(opts.seed, 0);
    let mut r1: DMatrix<T> = uniform_matrix(n1, opts.d2, &mut rng);
    let mut r2: DMatrix<T> = uniform_matrix(n2, opts.d2, &mut rng);
    let mut l1: DMatrix<T> = DMatrix::zeros(m1, opts.d1);
    let mut l2: DMatrix<T> = DMatrix::zeros(m2, opts.d1);
    let mut correlations = DVector::zeros(opts.d2);
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=opts.max_iters.max(1) {
        // Σʳᵢⱼ = (1/N) Σₙ Xⁱₙ Rⁱ Rʲᵀ Xʲₙᵀ
        let (mut s11, mut s12, mut s22) =
            (DMatrix::zeros(m1, m1), DMatrix::zeros(m1, m2), DMatrix::zeros(m2, m2));
        for (a, b) in x1.iter().zip(&x2) {
            let ya = a * &r1;
            let yb = b * &r2;
            s11 += &ya * ya.transpose();
            s12 += &ya * yb.transpose();
            s22 += &yb * yb.transpose();
        }
        let (eig_l, new_l1, new_l2) = paired_directions(
            &(s11 * inv_n),
            &(s12 * inv_n),
            &(s22 * inv_n),
            opts.d1,
            &opts.policy,
            "right-projected",
        )?;

        // Σˡᵢⱼ = (1/N) Σₙ Xⁱₙᵀ Lⁱ Lʲᵀ Xʲₙ
        let (mut t11, mut t12, mut t22) =
            (DMatrix::zeros(n1, n1), DMatrix::zeros(n1, n2), DMatrix::zeros(n2, n2));
        for (a, b) in x1.iter().zip(&x2) {
            let ya = a.transpose() * &new_l1;
            let yb = b.transpose() * &new_l2;
            t11 += &ya * ya.transpose();
            t12 += &ya * yb.transpose();
            t22 += &yb * yb.transpose();
        }
        let (eig_r, new_r1, new_r2) = paired_directions(
            &(t11 * inv_n),
            &(t12 * inv_n),
            &(t22 * inv_n),
            opts.d2,
            &opts.policy,
            "left-projected",
        )?;

        let step = TdccaStep {
            iteration,
            objective_left: eig_l[0].as_f64(),
            objective_right: eig_r[0].as_f64(),
            delta_l1: (&new_l1 - &l1).norm().as_f64(),
            delta_l2: (&new_l2 - &l2).norm().as_f64(),
            delta_r1: (&new_r1 - &r1).norm().as_f64(),
            delta_r2: (&new_r2 - &r2).norm().as_f64(),
        };
        let done = step.max_delta() < opts.tol;
        trace.push(step);
        l1 = new_l1;
        l2 = new_l2;
        r1 = new_r1;
        r2 = new_r2;
        correlations = eig_r;
        if done {
            converged = true;
            break;
        }
    }

    Ok(TdccaFit {
        model: TdccaModel {
            l1,
            l2,
            r1,
            r2,
            mean1: pairs.mean(View::First).clone(),
            mean2: pairs.mean(View::Second).clone(),
            correlations,
        },
        trace,
        converged,
    })
}

/// `Lᵀ (X − mean) R` for the given view.
pub fn tdcca_project<T: Real>(model: &TdccaModel<T>, x: &DMatrix<T>, view: View) -> Result<DMatrix<T>> {
    let mean = model.mean(view);
    check_shape(x, mean.nrows(), mean.ncols(), "observation")?;
    Ok(model.left(view).transpose() * (x - mean) * model.right(view))
}
