//! Unilateral matrix-variate CCA.
//!
//! With both views sharing `m` rows, the horizontally concatenated
//! observation `X = [X¹, X²]` (m × (n¹+n²)) follows `X = Z Rᵀ + Ξ` with
//! `Z ~ MN(0, I, I)` (m × d₂) and `Ξ ~ MN(0, I, Ψ_R)`, `Ψ_R` block diagonal.
//! Rows are independent, so the model is a factor analysis on rows and is
//! learned with exact EM.

use nalgebra::DMatrix;

use crate::dataset::{PairedMatrixDataset, View};
use crate::error::{MvccaError, Result};
use crate::factor::{converged, factor_blocks, posterior_cov, BlockFactorEm};
use crate::matvar::{block_diag, check_shape, SpdPolicy};
use crate::rng::{stream_rng, uniform_matrix};
use crate::scalar::Real;
use crate::trace::TraceRow;

#[derive(Debug, Clone, PartialEq)]
pub struct UmvccaModel<T: Real> {
    /// Stacked right projection `[R¹; R²]`, (n¹+n²) × d₂.
    pub r: DMatrix<T>,
    pub psi_r1: DMatrix<T>,
    pub psi_r2: DMatrix<T>,
    pub mean1: DMatrix<T>,
    pub mean2: DMatrix<T>,
}

impl<T: Real> UmvccaModel<T> {
    /// Shared row count `m`.
    pub fn rows(&self) -> usize {
        self.mean1.nrows()
    }

    pub fn d2(&self) -> usize {
        self.r.ncols()
    }

    pub fn n1(&self) -> usize {
        self.psi_r1.nrows()
    }

    pub fn n2(&self) -> usize {
        self.psi_r2.nrows()
    }

    pub fn right(&self, view: View) -> DMatrix<T> {
        match view {
            View::First => self.r.rows(0, self.n1()).into_owned(),
            View::Second => self.r.rows(self.n1(), self.n2()).into_owned(),
        }
    }

    pub fn psi_r(&self) -> DMatrix<T> {
        block_diag(&[&self.psi_r1, &self.psi_r2])
    }

    fn noise_blocks(&self) -> [DMatrix<T>; 2] {
        [self.psi_r1.clone(), self.psi_r2.clone()]
    }

    /// Posterior row covariance `S = (Rᵀ Ψ_R⁻¹ R + I)⁻¹`.
    pub fn posterior_row_cov(&self, policy: &SpdPolicy) -> Result<DMatrix<T>> {
        let factors = factor_blocks(&self.noise_blocks(), policy, "row noise covariance")?;
        Ok(posterior_cov(&self.r, &factors, policy)?.0)
    }

    /// Concatenates centered views; absent views contribute zeros.
    fn centered_concat(&self, x1: Option<&DMatrix<T>>, x2: Option<&DMatrix<T>>) -> Result<DMatrix<T>> {
        let (m, n1, n2) = (self.rows(), self.n1(), self.n2());
        let mut x = DMatrix::zeros(m, n1 + n2);
        if let Some(a) = x1 {
            check_shape(a, m, n1, "first-view observation")?;
            x.columns_mut(0, n1).copy_from(&(a - &self.mean1));
        }
        if let Some(b) = x2 {
            check_shape(b, m, n2, "second-view observation")?;
            x.columns_mut(n1, n2).copy_from(&(b - &self.mean2));
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmvccaOptions {
    pub d2: usize,
    pub max_iters: usize,
    /// Relative log-likelihood change that ends the iteration.
    pub tol: f64,
    pub seed: u64,
    pub policy: SpdPolicy,
}

impl UmvccaOptions {
    pub fn new(d2: usize) -> Self {
        Self {
            d2,
            max_iters: 500,
            tol: 1e-7,
            seed: 0,
            policy: SpdPolicy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UmvccaFit<T: Real> {
    pub model: UmvccaModel<T>,
    /// Training log-likelihood after every update with `‖ΔR‖_F`.
    pub trace: Vec<TraceRow<T>>,
    pub converged: bool,
}

/// `Σ̃ = (1/N) Σₙ XₙᵀXₙ` of the centered concatenations.
fn concat_scatter<T: Real>(model: &UmvccaModel<T>, pairs: &PairedMatrixDataset<T>) -> Result<DMatrix<T>> {
    let n = model.n1() + model.n2();
    let mut scatter = DMatrix::zeros(n, n);
    for i in 0..pairs.len() {
        let (a, b) = pairs.pair(i);
        let x = model.centered_concat(Some(a), Some(b))?;
        scatter += x.transpose() * &x;
    }
    Ok(scatter / T::from_usize_lossy(pairs.len()))
}

fn check_rows<T: Real>(pairs: &PairedMatrixDataset<T>) -> Result<usize> {
    let (m1, _) = pairs.shape(View::First);
    let (m2, _) = pairs.shape(View::Second);
    if m1 != m2 {
        return Err(MvccaError::dim(format!(
            "unilateral model needs equal row counts, got {m1} and {m2}"
        )));
    }
    Ok(m1)
}

/// Starting model: uniform(0, 1) right projections, identity noise.
pub fn umvcca_initial<T: Real>(pairs: &PairedMatrixDataset<T>, d2: usize, seed: u64) -> Result<UmvccaModel<T>> {
    check_rows(pairs)?;
    let (_, n1) = pairs.shape(View::First);
    let (_, n2) = pairs.shape(View::Second);
    if d2 == 0 || d2 > n1 + n2 {
        return Err(MvccaError::dim(format!(
            "latent column count must be in 1..={}, got {d2}",
            n1 + n2
        )));
    }
    let mut rng = stream_rng(seed, 0);
    Ok(UmvccaModel {
        r: uniform_matrix(n1 + n2, d2, &mut rng),
        psi_r1: DMatrix::identity(n1, n1),
        psi_r2: DMatrix::identity(n2, n2),
        mean1: pairs.mean(View::First).clone(),
        mean2: pairs.mean(View::Second).clone(),
    })
}

/// Fits the unilateral model by EM from the seeded starting point.
pub fn umvcca_fit<T: Real>(pairs: &PairedMatrixDataset<T>, opts: &UmvccaOptions) -> Result<UmvccaFit<T>> {
    if pairs.len() < 2 {
        return Err(MvccaError::arg("UMVCCA needs at least two pairs"));
    }
    let init = umvcca_initial(pairs, opts.d2, opts.seed)?;
    umvcca_fit_from(init, pairs, opts)
}

/// Runs EM from an explicit starting model.
pub fn umvcca_fit_from<T: Real>(
    init: UmvccaModel<T>,
    pairs: &PairedMatrixDataset<T>,
    opts: &UmvccaOptions,
) -> Result<UmvccaFit<T>> {
    let m = check_rows(pairs)?;
    let scatter = concat_scatter(&init, pairs)?;
    let em = BlockFactorEm {
        scatter: &scatter,
        rows: m,
        samples: pairs.len(),
        policy: opts.policy,
    };
    let mut model = init;
    let mut prev = em.loglik(&model.r, &model.noise_blocks())?;
    let mut trace = Vec::new();
    let mut done = false;
    for iteration in 1..=opts.max_iters {
        let (r, psi) = em.step(&model.r, &model.noise_blocks())?;
        let ll = em.loglik(&r, &psi).map_err(|e| match e {
            MvccaError::NonFinite { what, .. } => MvccaError::NonFinite { what, iteration },
            other => other,
        })?;
        let n1 = model.n1();
        let d_r1 = (r.rows(0, n1) - model.r.rows(0, n1)).norm();
        let d_r2 = (r.rows(n1, model.n2()) - model.r.rows(n1, model.n2())).norm();
        trace.push(TraceRow {
            iteration,
            objective: ll,
            deltas: vec![("delta_R1", d_r1), ("delta_R2", d_r2)],
        });
        let [p1, p2]: [DMatrix<T>; 2] = psi.try_into().expect("two noise blocks");
        model = UmvccaModel {
            r,
            psi_r1: p1,
            psi_r2: p2,
            ..model
        };
        if converged(prev, ll, opts.tol) {
            done = true;
            break;
        }
        prev = ll;
    }
    Ok(UmvccaFit {
        model,
        trace,
        converged: done,
    })
}

/// Posterior mean `E[Z | X] = X_c Ψ_R⁻¹ R S` (m × d₂). An absent view is
/// replaced by its training mean, so it contributes zeros after centering.
pub fn umvcca_posterior_mean<T: Real>(
    model: &UmvccaModel<T>,
    x1: Option<&DMatrix<T>>,
    x2: Option<&DMatrix<T>>,
    policy: &SpdPolicy,
) -> Result<DMatrix<T>> {
    if x1.is_none() && x2.is_none() {
        return Err(MvccaError::arg("at least one view must be present"));
    }
    let x = model.centered_concat(x1, x2)?;
    let factors = factor_blocks(&model.noise_blocks(), policy, "row noise covariance")?;
    let (s, psi_inv_r) = posterior_cov(&model.r, &factors, policy)?;
    Ok(x * psi_inv_r * s)
}

/// `Σₙ ln MN(X_c,ₙ; 0, I_m, R Rᵀ + Ψ_R)` with `Z` integrated out.
pub fn umvcca_loglik<T: Real>(
    model: &UmvccaModel<T>,
    pairs: &PairedMatrixDataset<T>,
    policy: &SpdPolicy,
) -> Result<T> {
    let m = check_rows(pairs)?;
    if m != model.rows() {
        return Err(MvccaError::dim(format!(
            "data has {m} rows, model has {}",
            model.rows()
        )));
    }
    let scatter = concat_scatter(model, pairs)?;
    BlockFactorEm {
        scatter: &scatter,
        rows: m,
        samples: pairs.len(),
        policy: *policy,
    }
    .loglik(&model.r, &model.noise_blocks())
}
