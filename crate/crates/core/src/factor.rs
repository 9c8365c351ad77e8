//! EM for a linear Gaussian factor model with block-diagonal noise.
//!
//! Each sample is an `m × p` matrix whose rows are independent draws of
//! `x = W z + ε`, `z ~ N(0, I_d)`, `ε ~ N(0, Ψ)` with `Ψ` block diagonal.
//! PCCA is the case `m = 1`; the unilateral matrix model stacks the rows of
//! all samples. Only the scatter `Σ̃ = (1/N) Σₙ XₙᵀXₙ` is needed.

use nalgebra::DMatrix;

use crate::error::{MvccaError, Result};
use crate::matvar::{block_diag, identity, symmetrize, symmetrize_floored, SpdFactor, SpdPolicy};
use crate::scalar::Real;

pub(crate) struct BlockFactorEm<'a, T: Real> {
    pub scatter: &'a DMatrix<T>,
    pub rows: usize,
    pub samples: usize,
    pub policy: SpdPolicy,
}

pub(crate) fn floor_rel(policy: &SpdPolicy) -> f64 {
    policy.jitter.max(1e-12)
}

/// `Ψ⁻¹ W` for block-diagonal `Ψ`.
pub(crate) fn block_solve<T: Real>(factors: &[SpdFactor<T>], w: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(w.nrows(), w.ncols());
    let mut at = 0;
    for f in factors {
        let k = f.dim();
        let part = f.solve(&w.rows(at, k).into_owned());
        out.rows_mut(at, k).copy_from(&part);
        at += k;
    }
    out
}

pub(crate) fn factor_blocks<T: Real>(
    psi: &[DMatrix<T>],
    policy: &SpdPolicy,
    what: &str,
) -> Result<Vec<SpdFactor<T>>> {
    psi.iter()
        .enumerate()
        .map(|(j, p)| SpdFactor::new(p, policy, &format!("{what} block {}", j + 1)))
        .collect()
}

/// Posterior row covariance `(Wᵀ Ψ⁻¹ W + I)⁻¹` together with `Ψ⁻¹ W`.
pub(crate) fn posterior_cov<T: Real>(
    w: &DMatrix<T>,
    factors: &[SpdFactor<T>],
    policy: &SpdPolicy,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let psi_inv_w = block_solve(factors, w);
    let prec = w.transpose() * &psi_inv_w + identity(w.ncols());
    let s = SpdFactor::new(&prec, policy, "posterior precision")?.inverse();
    Ok((s, psi_inv_w))
}

impl<'a, T: Real> BlockFactorEm<'a, T> {
    /// One EM update of `(W, Ψ)`; `Ψ` keeps its block sizes.
    pub fn step(&self, w: &DMatrix<T>, psi: &[DMatrix<T>]) -> Result<(DMatrix<T>, Vec<DMatrix<T>>)> {
        let factors = factor_blocks(psi, &self.policy, "noise covariance")?;
        let (s, psi_inv_w) = posterior_cov(w, &factors, &self.policy)?;
        let a_s = &psi_inv_w * &s;
        let m = T::from_usize_lossy(self.rows);
        // B = Σ̃ Ψ⁻¹ W S ; G = m S + (Ψ⁻¹WS)ᵀ Σ̃ (Ψ⁻¹WS)
        let b = self.scatter * &a_s;
        let g = &s * m + a_s.transpose() * &b;
        let g_factor = SpdFactor::new(&symmetrize(&g), &self.policy, "expected latent scatter")?;
        let w_new = g_factor.solve_right(&b);
        let full = (self.scatter - &w_new * b.transpose()) / m;
        let mut out = Vec::with_capacity(psi.len());
        let mut at = 0;
        for p in psi {
            let k = p.nrows();
            let block = full.view((at, at), (k, k)).into_owned();
            out.push(symmetrize_floored(&block, floor_rel(&self.policy)));
            at += k;
        }
        Ok((w_new, out))
    }

    /// Observed-data log-likelihood `−(N/2)(m p ln 2π + m ln|K| + tr(K⁻¹ Σ̃))`
    /// with `K = W Wᵀ + Ψ`.
    pub fn loglik(&self, w: &DMatrix<T>, psi: &[DMatrix<T>]) -> Result<T> {
        let refs: Vec<&DMatrix<T>> = psi.iter().collect();
        let k = w * w.transpose() + block_diag(&refs);
        let f = SpdFactor::new(&k, &self.policy, "marginal covariance")?;
        let p = T::from_usize_lossy(k.nrows());
        let m = T::from_usize_lossy(self.rows);
        let n = T::from_usize_lossy(self.samples);
        let tr = f.solve(self.scatter).trace();
        let ll = -n * T::lit(0.5) * (m * p * T::two_pi().ln() + m * f.ln_det() + tr);
        if !ll.is_finite() {
            return Err(MvccaError::NonFinite {
                what: "log-likelihood".into(),
                iteration: 0,
            });
        }
        Ok(ll)
    }
}

/// Relative change test shared by the iterative fits.
pub(crate) fn converged<T: Real>(prev: T, cur: T, tol: f64) -> bool {
    let scale = prev.abs().max(T::one());
    (cur - prev).abs() <= T::lit(tol) * scale
}
