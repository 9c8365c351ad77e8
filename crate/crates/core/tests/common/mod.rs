#![allow(dead_code)]

use mvcca::bmvcca::{BilateralView, BmvccaModel};
use mvcca::PairedMatrixDataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = gauss(n, n, rng);
    &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5
}

pub fn vecm(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Kronecker product by explicit index arithmetic.
pub fn kron_loop(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q) = b.shape();
    DMatrix::from_fn(a.nrows() * p, a.ncols() * q, |i, j| a[(i / p, j / q)] * b[(i % p, j % q)])
}

pub fn gaussian_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let chol = cov.clone().cholesky().expect("covariance must be SPD");
    let diff = x - mean;
    let sol = chol.solve(&diff);
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (x.len() as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + diff.dot(&sol))
}

pub fn random_view(m: usize, n: usize, d1: usize, d2: usize, rng: &mut ChaCha8Rng) -> BilateralView<f64> {
    BilateralView {
        l: gauss(m, d1, rng),
        r: gauss(n, d2, rng),
        psi_l: spd(m, rng),
        psi_r: spd(n, rng),
        mean: gauss(m, n, rng),
    }
}

pub fn random_model(
    (m1, n1): (usize, usize),
    (m2, n2): (usize, usize),
    d1: usize,
    d2: usize,
    rng: &mut ChaCha8Rng,
) -> BmvccaModel<f64> {
    BmvccaModel::new(random_view(m1, n1, d1, d2, rng), random_view(m2, n2, d1, d2, rng)).unwrap()
}

pub fn random_pairs(model: &BmvccaModel<f64>, n: usize, rng: &mut ChaCha8Rng) -> PairedMatrixDataset<f64> {
    let (a, b) = (model.views[0].shape(), model.views[1].shape());
    let x1 = (0..n).map(|_| gauss(a.0, a.1, rng) * 1.5).collect();
    let x2 = (0..n).map(|_| gauss(b.0, b.1, rng) * 1.5).collect();
    PairedMatrixDataset::new(x1, x2).unwrap()
}

/// `(R ⊗ L, Ψ_R ⊗ Ψ_L)` for one view.
fn design(v: &BilateralView<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (kron_loop(&v.r, &v.l), kron_loop(&v.psi_r, &v.psi_l))
}

/// Joint covariance and loading of `[vec X¹; vec X²]`.
fn joint(model: &BmvccaModel<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (a1, n1) = design(&model.views[0]);
    let (a2, n2) = design(&model.views[1]);
    let (p1, p2) = (a1.nrows(), a2.nrows());
    let mut a = DMatrix::zeros(p1 + p2, a1.ncols());
    a.rows_mut(0, p1).copy_from(&a1);
    a.rows_mut(p1, p2).copy_from(&a2);
    let mut k = &a * a.transpose();
    let mut top = k.view_mut((0, 0), (p1, p1));
    top += &n1;
    let mut bottom = k.view_mut((p1, p1), (p2, p2));
    bottom += &n2;
    (a, k)
}

fn stacked(model: &BmvccaModel<f64>, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> DVector<f64> {
    let a = vecm(&(x1 - &model.views[0].mean));
    let b = vecm(&(x2 - &model.views[1].mean));
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(&a);
    out.rows_mut(a.len(), b.len()).copy_from(&b);
    out
}

/// `E[Z | X¹, X²]` by covariance-form Gaussian conditioning.
pub fn dense_posterior_mean(model: &BmvccaModel<f64>, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> DMatrix<f64> {
    let (a, k) = joint(model);
    let z = a.transpose() * k.cholesky().unwrap().solve(&stacked(model, x1, x2));
    DMatrix::from_column_slice(model.d1(), model.d2(), z.as_slice())
}

/// Exact `Σₙ ln p(X¹ₙ, X²ₙ)` with the latent integrated out.
pub fn dense_loglik(model: &BmvccaModel<f64>, pairs: &PairedMatrixDataset<f64>) -> f64 {
    let (_, k) = joint(model);
    let zero = DVector::zeros(k.nrows());
    (0..pairs.len())
        .map(|i| {
            let (a, b) = pairs.pair(i);
            gaussian_logpdf(&stacked(model, a, b), &zero, &k)
        })
        .sum()
}
