//! Matrix-variate normal distribution.
//!
//! `X ~ MN(M, Σ, Φ)` has density
//! `(2π)^{-mn/2} |Σ|^{-n/2} |Φ|^{-m/2} exp(-½ tr[Σ⁻¹ (X-M) Φ⁻¹ (X-M)ᵀ])`
//! with `Σ` (m×m) the column covariance and `Φ` (n×n) the row covariance.
//! With column-stacked `vec`, `vec(X) ~ N(vec(M), Φ ⊗ Σ)`; that ordering is
//! used throughout the crate.

mod linalg;

pub use linalg::{
    block_diag, fix_column_signs, identity, kron, spd_inverse, sqrt_psd, sym_geig,
    sym_geig_factored, symmetrize, symmetrize_floored, unvec, vec_of, GeneralizedEigen,
    SpdFactor, SpdPolicy,
};
pub(crate) use linalg::{check_shape, check_square};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MvccaError, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;

const SYMMETRY_TOL: f64 = 1e-12;

/// Parameters of a matrix-variate normal distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixNormalParams<T: Real> {
    mean: DMatrix<T>,
    col_cov: DMatrix<T>,
    row_cov: DMatrix<T>,
}

impl<T: Real> MatrixNormalParams<T> {
    pub fn new(mean: DMatrix<T>, col_cov: DMatrix<T>, row_cov: DMatrix<T>) -> Result<Self> {
        check_square(&col_cov, mean.nrows(), "column covariance")?;
        check_square(&row_cov, mean.ncols(), "row covariance")?;
        for (name, c) in [("column covariance", &col_cov), ("row covariance", &row_cov)] {
            let scale = c.abs().max().max(T::one());
            let asym = (c - c.transpose()).abs().max();
            if asym > T::lit(SYMMETRY_TOL) * scale {
                return Err(MvccaError::arg(format!(
                    "{name} is not symmetric (max asymmetry {asym:e})"
                )));
            }
        }
        Ok(Self {
            mean,
            col_cov,
            row_cov,
        })
    }

    /// `MN(0, I_m, I_n)`.
    pub fn standard(rows: usize, cols: usize) -> Self {
        Self {
            mean: DMatrix::zeros(rows, cols),
            col_cov: identity(rows),
            row_cov: identity(cols),
        }
    }

    pub fn mean(&self) -> &DMatrix<T> {
        &self.mean
    }

    pub fn col_cov(&self) -> &DMatrix<T> {
        &self.col_cov
    }

    pub fn row_cov(&self) -> &DMatrix<T> {
        &self.row_cov
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mean.shape()
    }
}

/// A matrix normal with both covariances factored, ready for repeated
/// density evaluation and sampling.
#[derive(Debug, Clone)]
pub struct MatrixNormal<T: Real> {
    params: MatrixNormalParams<T>,
    col: SpdFactor<T>,
    row: SpdFactor<T>,
}

impl<T: Real> MatrixNormal<T> {
    pub fn new(params: MatrixNormalParams<T>, policy: &SpdPolicy) -> Result<Self> {
        let col = SpdFactor::new(&params.col_cov, policy, "column covariance")?;
        let row = SpdFactor::new(&params.row_cov, policy, "row covariance")?;
        Ok(Self { params, col, row })
    }

    pub fn params(&self) -> &MatrixNormalParams<T> {
        &self.params
    }

    pub fn log_density(&self, x: &DMatrix<T>) -> Result<T> {
        let (m, n) = self.params.shape();
        check_shape(x, m, n, "observation")?;
        let centered = x - &self.params.mean;
        // ‖L_Σ⁻¹ D L_Φ⁻ᵀ‖² = tr(Σ⁻¹ D Φ⁻¹ Dᵀ)
        let left = self.col.whiten(&centered);
        let both = self.row.whiten(&left.transpose());
        let quad = both.norm_squared();
        let (mf, nf) = (T::from_usize_lossy(m), T::from_usize_lossy(n));
        let half = T::lit(0.5);
        Ok(-half
            * (mf * nf * T::two_pi().ln() + nf * self.col.ln_det() + mf * self.row.ln_det() + quad))
    }

    /// Draws `M + A E Bᵀ` with `A Aᵀ = Σ`, `B Bᵀ = Φ` and `E` standard normal.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<T> {
        let (m, n) = self.params.shape();
        let e = standard_normal_matrix(m, n, rng);
        &self.params.mean + self.col.l() * e * self.row.l().transpose()
    }
}

pub(crate) fn standard_normal_matrix<T: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        T::lit(z)
    })
}

/// Log-density of `x` under `MN(M, Σ, Φ)`.
pub fn log_density<T: Real>(
    x: &DMatrix<T>,
    params: &MatrixNormalParams<T>,
    policy: &SpdPolicy,
) -> Result<T> {
    MatrixNormal::new(params.clone(), policy)?.log_density(x)
}

/// One deterministic draw for the given seed.
pub fn sample<T: Real>(params: &MatrixNormalParams<T>, seed: u64, policy: &SpdPolicy) -> Result<DMatrix<T>> {
    let dist = MatrixNormal::new(params.clone(), policy)?;
    let mut rng = stream_rng(seed, 0);
    Ok(dist.sample_with(&mut rng))
}

/// `count` draws from a single seeded stream.
pub fn sample_many<T: Real>(
    params: &MatrixNormalParams<T>,
    count: usize,
    seed: u64,
    policy: &SpdPolicy,
) -> Result<Vec<DMatrix<T>>> {
    let dist = MatrixNormal::new(params.clone(), policy)?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..count).map(|_| dist.sample_with(&mut rng)).collect())
}

/// Equivalent vector Gaussian: `(vec(M), Φ ⊗ Σ)`.
pub fn to_vec_normal<T: Real>(params: &MatrixNormalParams<T>) -> (DVector<T>, DMatrix<T>) {
    (vec_of(&params.mean), kron(&params.row_cov, &params.col_cov))
}

/// Log-density of a multivariate normal, used by the dense oracles and the
/// likelihood monitors.
pub fn vec_gaussian_log_density<T: Real>(
    x: &DVector<T>,
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    policy: &SpdPolicy,
) -> Result<T> {
    let f = SpdFactor::new(cov, policy, "covariance")?;
    if x.len() != f.dim() || mean.len() != f.dim() {
        return Err(MvccaError::dim(format!(
            "vector of length {} against covariance of order {}",
            x.len(),
            f.dim()
        )));
    }
    let d = DMatrix::from_column_slice(x.len(), 1, (x - mean).as_slice());
    let w = f.whiten(&d);
    let k = T::from_usize_lossy(x.len());
    Ok(-T::lit(0.5) * (k * T::two_pi().ln() + f.ln_det() + w.norm_squared()))
}
