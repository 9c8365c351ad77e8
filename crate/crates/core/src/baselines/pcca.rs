use nalgebra::{DMatrix, DVector};

use super::{cca_fit, check_rank, paired_moments};
use crate::error::{MvccaError, Result};
use crate::factor::{converged, factor_blocks, floor_rel, posterior_cov, BlockFactorEm};
use crate::matvar::{block_diag, sqrt_psd, symmetrize_floored, SpdPolicy};
use crate::rng::{stream_rng, uniform_matrix};
use crate::scalar::Real;
use crate::trace::TraceRow;

/// Probabilistic CCA: `xʲ = Wʲ z + μʲ + εʲ`, `z ~ N(0, I)`, `εʲ ~ N(0, Ψʲ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PccaModel<T: Real> {
    pub w1: DMatrix<T>,
    pub w2: DMatrix<T>,
    pub psi1: DMatrix<T>,
    pub psi2: DMatrix<T>,
    pub mean1: DVector<T>,
    pub mean2: DVector<T>,
}

impl<T: Real> PccaModel<T> {
    pub fn dim(&self) -> usize {
        self.w1.ncols()
    }

    /// Stacked loadings `[W¹; W²]`.
    pub fn stacked_loadings(&self) -> DMatrix<T> {
        let (m1, m2, d) = (self.w1.nrows(), self.w2.nrows(), self.dim());
        let mut w = DMatrix::zeros(m1 + m2, d);
        w.rows_mut(0, m1).copy_from(&self.w1);
        w.rows_mut(m1, m2).copy_from(&self.w2);
        w
    }

    /// Joint covariance `W Wᵀ + blockdiag(Ψ¹, Ψ²)` of the stacked views.
    pub fn joint_covariance(&self) -> DMatrix<T> {
        let w = self.stacked_loadings();
        &w * w.transpose() + block_diag(&[&self.psi1, &self.psi2])
    }

    fn with_stacked(&self, w: &DMatrix<T>, psi: Vec<DMatrix<T>>) -> Self {
        let m1 = self.w1.nrows();
        let mut it = psi.into_iter();
        Self {
            w1: w.rows(0, m1).into_owned(),
            w2: w.rows(m1, w.nrows() - m1).into_owned(),
            psi1: it.next().expect("two noise blocks"),
            psi2: it.next().expect("two noise blocks"),
            mean1: self.mean1.clone(),
            mean2: self.mean2.clone(),
        }
    }
}

/// Closed-form maximum likelihood: `Wʲ = Σ̃ⱼⱼ Uʲ_d C_d^{1/2}`,
/// `Ψʲ = Σ̃ⱼⱼ − Wʲ Wʲᵀ` (symmetrized, eigenvalues floored at 0).
pub fn pcca_fit_ml<T: Real>(
    view1: &[DVector<T>],
    view2: &[DVector<T>],
    d: usize,
    policy: &SpdPolicy,
) -> Result<PccaModel<T>> {
    let cca = cca_fit(view1, view2, d, policy)?;
    let mo = paired_moments(view1, view2)?;
    let root = DMatrix::from_diagonal(&cca.correlations.map(|r| r.sqrt()));
    let w1 = &mo.c11 * &cca.w1 * &root;
    let w2 = &mo.c22 * &cca.w2 * &root;
    let psi1 = psd_floor(&(&mo.c11 - &w1 * w1.transpose()));
    let psi2 = psd_floor(&(&mo.c22 - &w2 * w2.transpose()));
    Ok(PccaModel {
        w1,
        w2,
        psi1,
        psi2,
        mean1: mo.mean1,
        mean2: mo.mean2,
    })
}

fn psd_floor<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    // sqrt_psd clips negative eigenvalues to zero
    let root = sqrt_psd(a);
    &root * &root
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PccaEmOptions {
    pub d: usize,
    pub max_iters: usize,
    /// Stop when the relative log-likelihood change falls below this.
    pub tol: f64,
    pub seed: u64,
    pub policy: SpdPolicy,
}

impl PccaEmOptions {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            max_iters: 1000,
            tol: 1e-9,
            seed: 0,
            policy: SpdPolicy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PccaFit<T: Real> {
    pub model: PccaModel<T>,
    /// Log-likelihood after each update, with the movement of `W¹`, `W²`.
    pub trace: Vec<TraceRow<T>>,
    pub converged: bool,
}

/// EM for PCCA on a fixed training set.
pub struct PccaEm<T: Real> {
    scatter: DMatrix<T>,
    samples: usize,
    mean1: DVector<T>,
    mean2: DVector<T>,
    policy: SpdPolicy,
}

impl<T: Real> PccaEm<T> {
    pub fn new(view1: &[DVector<T>], view2: &[DVector<T>], policy: SpdPolicy) -> Result<Self> {
        let mo = paired_moments(view1, view2)?;
        let (m1, m2) = (mo.c11.nrows(), mo.c22.nrows());
        let mut scatter = DMatrix::zeros(m1 + m2, m1 + m2);
        scatter.view_mut((0, 0), (m1, m1)).copy_from(&mo.c11);
        scatter.view_mut((0, m1), (m1, m2)).copy_from(&mo.c12);
        scatter.view_mut((m1, 0), (m2, m1)).copy_from(&mo.c12.transpose());
        scatter.view_mut((m1, m1), (m2, m2)).copy_from(&mo.c22);
        Ok(Self {
            scatter,
            samples: view1.len(),
            mean1: mo.mean1,
            mean2: mo.mean2,
            policy,
        })
    }

    fn engine(&self) -> BlockFactorEm<'_, T> {
        BlockFactorEm {
            scatter: &self.scatter,
            rows: 1,
            samples: self.samples,
            policy: self.policy,
        }
    }

    /// Starting point: loadings with seeded uniform(0, 1) entries, `Ψ = I`.
    pub fn initial(&self, d: usize, seed: u64) -> Result<PccaModel<T>> {
        let (m1, m2) = (self.mean1.len(), self.mean2.len());
        check_rank(d, m1, m2, "latent dimension")?;
        let mut rng = stream_rng(seed, 0);
        Ok(PccaModel {
            w1: uniform_matrix(m1, d, &mut rng),
            w2: uniform_matrix(m2, d, &mut rng),
            psi1: DMatrix::identity(m1, m1),
            psi2: DMatrix::identity(m2, m2),
            mean1: self.mean1.clone(),
            mean2: self.mean2.clone(),
        })
    }

    /// One EM update:
    /// `W ← Σ̃Ψ⁻¹WM (M + MWᵀΨ⁻¹Σ̃Ψ⁻¹WM)⁻¹`, `Ψ ← blockdiag(Σ̃ − Σ̃Ψ⁻¹WM W_newᵀ)`
    /// with `M = (WᵀΨ⁻¹W + I)⁻¹`.
    pub fn step(&self, model: &PccaModel<T>) -> Result<PccaModel<T>> {
        let w = model.stacked_loadings();
        let (w_new, psi) = self.engine().step(&w, &[model.psi1.clone(), model.psi2.clone()])?;
        Ok(model.with_stacked(&w_new, psi))
    }

    pub fn loglik(&self, model: &PccaModel<T>) -> Result<T> {
        self.engine()
            .loglik(&model.stacked_loadings(), &[model.psi1.clone(), model.psi2.clone()])
    }

    /// Iterates from `init` until the relative log-likelihood change is
    /// below `tol` or `max_iters` updates have been made.
    pub fn run(&self, init: PccaModel<T>, max_iters: usize, tol: f64) -> Result<PccaFit<T>> {
        let mut model = init;
        let mut prev = self.loglik(&model)?;
        let mut trace = Vec::new();
        let mut done = false;
        for iteration in 1..=max_iters {
            let next = self.step(&model)?;
            let ll = self.loglik(&next).map_err(|e| at_iteration(e, iteration))?;
            trace.push(TraceRow {
                iteration,
                objective: ll,
                deltas: vec![
                    ("delta_W1", (&next.w1 - &model.w1).norm()),
                    ("delta_W2", (&next.w2 - &model.w2).norm()),
                ],
            });
            model = next;
            if converged(prev, ll, tol) {
                done = true;
                break;
            }
            prev = ll;
        }
        Ok(PccaFit {
            model,
            trace,
            converged: done,
        })
    }
}

fn at_iteration(e: MvccaError, iteration: usize) -> MvccaError {
    match e {
        MvccaError::NonFinite { what, .. } => MvccaError::NonFinite { what, iteration },
        other => other,
    }
}

pub fn pcca_fit_em<T: Real>(
    view1: &[DVector<T>],
    view2: &[DVector<T>],
    opts: &PccaEmOptions,
) -> Result<PccaFit<T>> {
    let em = PccaEm::new(view1, view2, opts.policy)?;
    let init = em.initial(opts.d, opts.seed)?;
    em.run(init, opts.max_iters, opts.tol)
}

/// Observed-data log-likelihood of the samples under the model.
pub fn pcca_loglik<T: Real>(
    model: &PccaModel<T>,
    view1: &[DVector<T>],
    view2: &[DVector<T>],
    policy: &SpdPolicy,
) -> Result<T> {
    if view1.len() != view2.len() || view1.is_empty() {
        return Err(MvccaError::dim("views must be non-empty and aligned"));
    }
    let p1 = model.mean1.len();
    let mut stacked = Vec::with_capacity(view1.len());
    for (a, b) in view1.iter().zip(view2) {
        if a.len() != p1 || b.len() != model.mean2.len() {
            return Err(MvccaError::dim("sample length does not match the model"));
        }
        let mut x = DVector::zeros(p1 + b.len());
        x.rows_mut(0, p1).copy_from(&(a - &model.mean1));
        x.rows_mut(p1, b.len()).copy_from(&(b - &model.mean2));
        stacked.push(x);
    }
    // scatter about the model mean, not the sample mean
    let mut raw = DMatrix::zeros(p1 + model.mean2.len(), stacked.len());
    for (i, x) in stacked.iter().enumerate() {
        raw.set_column(i, x);
    }
    let n = T::from_usize_lossy(stacked.len());
    let scatter = &raw * raw.transpose() / n;
    BlockFactorEm {
        scatter: &scatter,
        rows: 1,
        samples: stacked.len(),
        policy: *policy,
    }
    .loglik(&model.stacked_loadings(), &[model.psi1.clone(), model.psi2.clone()])
}

/// Posterior mean `E[z | present views] = M Wₚᵀ Ψₚ⁻¹ (xₚ − μₚ)` with
/// `M = (Wₚᵀ Ψₚ⁻¹ Wₚ + I)⁻¹`, restricted to the views that are present.
pub fn pcca_posterior_mean<T: Real>(
    model: &PccaModel<T>,
    x1: Option<&DVector<T>>,
    x2: Option<&DVector<T>>,
    policy: &SpdPolicy,
) -> Result<DVector<T>> {
    let mut w_parts = Vec::new();
    let mut psi_parts = Vec::new();
    let mut x_parts = Vec::new();
    for (x, w, psi, mean, v) in [
        (x1, &model.w1, &model.psi1, &model.mean1, 1),
        (x2, &model.w2, &model.psi2, &model.mean2, 2),
    ] {
        if let Some(x) = x {
            if x.len() != mean.len() {
                return Err(MvccaError::dim(format!(
                    "view {v} sample has length {}, model expects {}",
                    x.len(),
                    mean.len()
                )));
            }
            w_parts.push(w);
            psi_parts.push(symmetrize_floored(psi, floor_rel(policy)));
            x_parts.push(x - mean);
        }
    }
    if w_parts.is_empty() {
        return Err(MvccaError::arg("at least one view must be present"));
    }
    let rows: usize = w_parts.iter().map(|w| w.nrows()).sum();
    let mut w = DMatrix::zeros(rows, model.dim());
    let mut x = DMatrix::zeros(rows, 1);
    let mut at = 0;
    for (wp, xp) in w_parts.iter().zip(&x_parts) {
        w.rows_mut(at, wp.nrows()).copy_from(*wp);
        x.rows_mut(at, xp.len()).copy_from(xp);
        at += wp.nrows();
    }
    let factors = factor_blocks(&psi_parts, policy, "noise covariance")?;
    let (m, psi_inv_w) = posterior_cov(&w, &factors, policy)?;
    let z = m * psi_inv_w.transpose() * x;
    Ok(z.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matvar::standard_normal_matrix;

    fn pcca_data(n: usize, seed: u64) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let mut rng = stream_rng(seed, 0);
        let w1: DMatrix<f64> = uniform_matrix(4, 2, &mut rng);
        let w2: DMatrix<f64> = uniform_matrix(3, 2, &mut rng);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..n {
            let z: DMatrix<f64> = standard_normal_matrix(2, 1, &mut rng);
            let e1: DMatrix<f64> = standard_normal_matrix(4, 1, &mut rng);
            let e2: DMatrix<f64> = standard_normal_matrix(3, 1, &mut rng);
            a.push((&w1 * &z + e1 * 0.5).column(0).into_owned());
            b.push((&w2 * &z + e2 * 0.5).column(0).into_owned());
        }
        (a, b)
    }

    #[test]
    fn ml_diagonal_blocks_reproduce_sample_covariance() {
        let (a, b) = pcca_data(500, 1);
        let model = pcca_fit_ml(&a, &b, 2, &SpdPolicy::default()).unwrap();
        let mo = paired_moments(&a, &b).unwrap();
        let r1 = &model.psi1 + &model.w1 * model.w1.transpose() - &mo.c11;
        let r2 = &model.psi2 + &model.w2 * model.w2.transpose() - &mo.c22;
        assert!(r1.abs().max() < 1e-10 && r2.abs().max() < 1e-10);
    }

    #[test]
    fn ml_noise_stays_psd_at_full_rank() {
        let (a, b) = pcca_data(500, 2);
        let mo = paired_moments(&a, &b).unwrap();
        let model = pcca_fit_ml(&a, &b, 3, &SpdPolicy::default()).unwrap();
        let raw = &mo.c22 - &model.w2 * model.w2.transpose();
        let min = nalgebra::SymmetricEigen::new(raw).eigenvalues.min();
        assert!(min >= -1e-8, "{min}");
    }

    #[test]
    fn em_log_likelihood_is_monotone() {
        let (a, b) = pcca_data(300, 3);
        let fit = pcca_fit_em(&a, &b, &PccaEmOptions { max_iters: 200, ..PccaEmOptions::new(2) }).unwrap();
        for w in fit.trace.windows(2) {
            let (p, c) = (w[0].objective, w[1].objective);
            assert!(c >= p - 1e-8 * p.abs(), "{p} -> {c}");
        }
    }

    #[test]
    fn em_fixed_point_at_ml_solution() {
        let (a, b) = pcca_data(400, 4);
        let policy = SpdPolicy::exact();
        let ml = pcca_fit_ml(&a, &b, 2, &policy).unwrap();
        let em = PccaEm::new(&a, &b, policy).unwrap();
        let next = em.step(&ml).unwrap();
        let moved = (&next.w1 - &ml.w1).norm()
            + (&next.w2 - &ml.w2).norm()
            + (&next.psi1 - &ml.psi1).norm()
            + (&next.psi2 - &ml.psi2).norm();
        assert!(moved < 1e-6, "{moved}");
    }

    #[test]
    fn posterior_mean_trivial_cases() {
        let (a, b) = pcca_data(100, 5);
        let model = pcca_fit_ml(&a, &b, 2, &SpdPolicy::default()).unwrap();
        let p = SpdPolicy::default();
        let z = pcca_posterior_mean(&model, Some(&model.mean1), Some(&model.mean2), &p).unwrap();
        assert!(z.norm() < 1e-12);
        let mut zero = model.clone();
        zero.w1.fill(0.0);
        zero.w2.fill(0.0);
        let z = pcca_posterior_mean(&zero, Some(&a[0]), Some(&b[0]), &p).unwrap();
        assert!(z.norm() < 1e-15);
        assert!(pcca_posterior_mean(&model, None, None, &p).is_err());
        assert!(pcca_posterior_mean(&model, Some(&b[0]), None, &p).is_err());
    }
}
