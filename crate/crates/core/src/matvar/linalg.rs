//! Dense symmetric linear algebra shared by every model: jittered Cholesky
//! factorizations, SPD inverses, the symmetric-definite generalized
//! eigenproblem and a few small matrix helpers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{MvccaError, Result};
use crate::scalar::Real;

/// Controls how symmetric positive definite matrices are factored.
///
/// Before factoring `A`, `jitter * mean(diag(A))` is added to the diagonal.
/// A factorization whose condition estimate (squared ratio of the largest to
/// the smallest Cholesky pivot) exceeds `max_condition` is refused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdPolicy {
    pub jitter: f64,
    pub max_condition: f64,
}

impl Default for SpdPolicy {
    fn default() -> Self {
        Self {
            jitter: 1e-9,
            max_condition: 1e8,
        }
    }
}

impl SpdPolicy {
    pub fn new(jitter: f64, max_condition: f64) -> Result<Self> {
        if !(jitter >= 0.0) || !jitter.is_finite() {
            return Err(MvccaError::arg(format!("jitter must be finite and >= 0, got {jitter}")));
        }
        if !(max_condition > 1.0) {
            return Err(MvccaError::arg(format!(
                "max_condition must exceed 1, got {max_condition}"
            )));
        }
        Ok(Self {
            jitter,
            max_condition,
        })
    }

    /// No jitter and no condition limit: factor exactly or fail.
    pub fn exact() -> Self {
        Self {
            jitter: 0.0,
            max_condition: f64::INFINITY,
        }
    }

    pub fn with_jitter(self, jitter: f64) -> Self {
        Self { jitter, ..self }
    }

    /// Absolute jitter added to the diagonal of `a`.
    pub fn jitter_for<T: Real>(&self, a: &DMatrix<T>) -> T {
        if self.jitter == 0.0 || a.nrows() == 0 {
            return T::zero();
        }
        let mean_diag = a.diagonal().iter().fold(T::zero(), |s, &x| s + x.abs())
            / T::from_usize_lossy(a.nrows());
        T::lit(self.jitter) * mean_diag
    }
}

/// Cholesky factor of a jittered symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor<T: Real> {
    chol: Cholesky<T, Dyn>,
    jitter: T,
}

impl<T: Real> SpdFactor<T> {
    /// Factors `(a + a^T)/2 + jitter * I`. `what` names the matrix in errors.
    pub fn new(a: &DMatrix<T>, policy: &SpdPolicy, what: &str) -> Result<Self> {
        if !a.is_square() {
            return Err(MvccaError::dim(format!(
                "{what} must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(MvccaError::NotPositiveDefinite {
                what: format!("{what} (non-finite entries)"),
            });
        }
        let jitter = policy.jitter_for(a);
        let mut sym = symmetrize(a);
        for i in 0..sym.nrows() {
            sym[(i, i)] += jitter;
        }
        let chol = Cholesky::new(sym).ok_or_else(|| MvccaError::NotPositiveDefinite {
            what: what.to_string(),
        })?;
        let diag = chol.l_dirty().diagonal();
        let (mut lo, mut hi) = (T::max_value().unwrap(), T::zero());
        for &d in diag.iter() {
            if d < lo {
                lo = d;
            }
            if d > hi {
                hi = d;
            }
        }
        if diag.len() > 0 {
            if !(lo > T::zero()) {
                return Err(MvccaError::NotPositiveDefinite {
                    what: what.to_string(),
                });
            }
            let ratio = hi / lo;
            let condition = (ratio * ratio).as_f64();
            if condition > policy.max_condition {
                return Err(MvccaError::Singular {
                    what: what.to_string(),
                    condition,
                    limit: policy.max_condition,
                });
            }
        }
        Ok(Self { chol, jitter })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Lower-triangular factor `L` with `L L^T = A + jitter I`.
    pub fn l(&self) -> DMatrix<T> {
        self.chol.l()
    }

    /// Solves `(A + jitter I) X = B`.
    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<T>) -> DVector<T> {
        self.chol.solve(b)
    }

    /// Computes `B (A + jitter I)^{-1}`.
    pub fn solve_right(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.chol.solve(&b.transpose()).transpose()
    }

    pub fn inverse(&self) -> DMatrix<T> {
        symmetrize(&self.chol.inverse())
    }

    pub fn ln_det(&self) -> T {
        let two = T::lit(2.0);
        self.chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(T::zero(), |s, &d| s + two * d.ln())
    }

    /// Returns `L^{-1} B`.
    pub fn whiten(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let l = self.chol.l_dirty();
        l.solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal")
    }
}

/// `(A + jitter I)^{-1}` through a Cholesky factorization.
pub fn spd_inverse<T: Real>(a: &DMatrix<T>, policy: &SpdPolicy) -> Result<DMatrix<T>> {
    Ok(SpdFactor::new(a, policy, "matrix")?.inverse())
}

/// Solution of the symmetric-definite generalized eigenproblem `A v = λ B v`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen<T: Real> {
    /// Sorted in descending order.
    pub eigenvalues: DVector<T>,
    /// Columns are `B`-orthonormal eigenvectors, each with its
    /// largest-magnitude entry positive.
    pub eigenvectors: DMatrix<T>,
}

pub fn sym_geig<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    policy: &SpdPolicy,
) -> Result<GeneralizedEigen<T>> {
    let fb = SpdFactor::new(b, policy, "generalized eigenproblem metric")?;
    sym_geig_factored(a, &fb)
}

/// Same as [`sym_geig`] with the metric already factored.
pub fn sym_geig_factored<T: Real>(
    a: &DMatrix<T>,
    fb: &SpdFactor<T>,
) -> Result<GeneralizedEigen<T>> {
    let k = fb.dim();
    if a.nrows() != k || a.ncols() != k {
        return Err(MvccaError::dim(format!(
            "eigenproblem matrix is {}x{}, metric is {k}x{k}",
            a.nrows(),
            a.ncols()
        )));
    }
    // C = L^{-1} A L^{-T}
    let y = fb.whiten(&symmetrize(a));
    let c = symmetrize(&fb.whiten(&y.transpose()));
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let l = fb.chol.l_dirty();
    let mut values = DVector::zeros(k);
    let mut vectors = DMatrix::zeros(k, k);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let u = eig.eigenvectors.column(src).into_owned();
        let v = l
            .tr_solve_lower_triangular(&u)
            .expect("Cholesky factor has a positive diagonal");
        vectors.set_column(dst, &v);
    }
    fix_column_signs(&mut vectors);
    Ok(GeneralizedEigen {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn fix_column_signs<T: Real>(m: &mut DMatrix<T>) {
    for mut col in m.column_iter_mut() {
        let mut best = T::zero();
        for &x in col.iter() {
            if x.abs() > best.abs() {
                best = x;
            }
        }
        if best < T::zero() {
            col.neg_mut();
        }
    }
}

pub fn symmetrize<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::lit(0.5)
}

/// Symmetrizes `a` and, if it is not positive definite, raises every
/// eigenvalue to at least `floor_rel * mean(diag)`.
pub fn symmetrize_floored<T: Real>(a: &DMatrix<T>, floor_rel: f64) -> DMatrix<T> {
    let sym = symmetrize(a);
    if Cholesky::new(sym.clone()).is_some() {
        return sym;
    }
    let n = sym.nrows();
    let mean_diag = sym.diagonal().iter().fold(T::zero(), |s, &x| s + x.abs())
        / T::from_usize_lossy(n.max(1));
    let floor = T::lit(floor_rel) * mean_diag;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|x| if x < floor { floor } else { x });
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&clipped) * v.transpose()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

/// Block-diagonal matrix with the given square blocks.
pub fn block_diag<T: Real>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((at, at), (k, k)).copy_from(b);
        at += k;
    }
    out
}

/// Column-stacking vec operator.
pub fn vec_of<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec<T: Real>(v: &[T], rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(rows, cols, v)
}

pub fn identity<T: Real>(n: usize) -> DMatrix<T> {
    DMatrix::identity(n, n)
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn sqrt_psd<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let root = eig
        .eigenvalues
        .map(|x| if x > T::zero() { x.sqrt() } else { T::zero() });
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&root) * v.transpose()
}

pub(crate) fn check_square<T: Real>(a: &DMatrix<T>, n: usize, what: &str) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(MvccaError::dim(format!(
            "{what} must be {n}x{n}, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_shape<T: Real>(a: &DMatrix<T>, rows: usize, cols: usize, what: &str) -> Result<()> {
    if a.nrows() != rows || a.ncols() != cols {
        return Err(MvccaError::dim(format!(
            "{what} must be {rows}x{cols}, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let a = DMatrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn inverse_of_identity_is_identity() {
        let i: DMatrix<f64> = identity(3);
        let inv = spd_inverse(&i, &SpdPolicy::default()).unwrap();
        assert!((inv - &i).abs().max() < 1e-8);
    }

    #[test]
    fn inverse_of_diagonal_without_jitter() {
        let a = dmatrix![2.0, 0.0; 0.0, 4.0];
        let inv = spd_inverse(&a, &SpdPolicy::exact()).unwrap();
        assert!((inv - dmatrix![0.5, 0.0; 0.0, 0.25]).abs().max() < 1e-15);
    }

    #[test]
    fn inverse_residual_and_double_inverse() {
        for seed in 0..20 {
            let a = random_spd(3, seed);
            let inv = spd_inverse(&a, &SpdPolicy::exact()).unwrap();
            assert!((&inv * &a - identity::<f64>(3)).abs().max() < 1e-8);
            assert!((&inv - inv.transpose()).abs().max() < 1e-10);
            let back = spd_inverse(&inv, &SpdPolicy::exact()).unwrap();
            assert!((&back - &a).abs().max() <= 1e-6 * a.abs().max());
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = dmatrix![1.0, 2.0; 2.0, 1.0];
        let err = spd_inverse(&a, &SpdPolicy::default()).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn singular_matrix_trips_condition_limit() {
        let a = dmatrix![1.0, 1.0; 1.0, 1.0];
        let err = SpdFactor::new(&a, &SpdPolicy::default(), "scatter").unwrap_err();
        assert!(matches!(err, MvccaError::Singular { .. }), "{err}");
        assert!(err.to_string().contains("scatter"));
    }

    #[test]
    fn geig_identity_metric_matches_symmetric_eigen() {
        let a = random_spd(4, 3);
        let g = sym_geig(&a, &identity(4), &SpdPolicy::exact()).unwrap();
        let mut expect: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
        expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (k, e) in expect.iter().enumerate() {
            assert!((g.eigenvalues[k] - e).abs() < 1e-10);
        }
    }

    #[test]
    fn geig_equal_matrices_give_unit_spectrum() {
        let a = random_spd(5, 9);
        let g = sym_geig(&a, &a, &SpdPolicy::exact()).unwrap();
        assert!(g.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn geig_hand_diagonal_case() {
        let a: DMatrix<f64> = dmatrix![2.0, 0.0; 0.0, 1.0];
        let b = dmatrix![1.0, 0.0; 0.0, 2.0];
        let g = sym_geig(&a, &b, &SpdPolicy::exact()).unwrap();
        assert!((g.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!((g.eigenvalues[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn geig_residuals_and_sign_convention() {
        let a = {
            let m = random_spd(5, 11);
            &m - DMatrix::identity(5, 5) * 1.5
        };
        let b = random_spd(5, 12);
        let g = sym_geig(&a, &b, &SpdPolicy::exact()).unwrap();
        let scale = a.norm();
        for k in 0..5 {
            let v = g.eigenvectors.column(k);
            let r = &a * v - (&b * v) * g.eigenvalues[k];
            assert!(r.norm() < 1e-8 * scale);
            let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
            if k > 0 {
                assert!(g.eigenvalues[k - 1] >= g.eigenvalues[k]);
            }
        }
    }

    #[test]
    fn floored_matrix_becomes_positive_definite() {
        let a = dmatrix![1.0, 1.0; 1.0, 1.0];
        let f = symmetrize_floored(&a, 1e-6);
        assert!(Cholesky::new(f).is_some());
    }
}
