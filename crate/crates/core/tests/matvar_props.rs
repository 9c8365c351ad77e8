mod common;

use common::*;
use mvcca::matvar::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn density_equals_vec_gaussian(m in 1usize..=4, n in 1usize..=4, seed in any::<u64>()) {
        let mut g = rng(seed);
        let mean = gauss(m, n, &mut g);
        let sigma = spd(m, &mut g);
        let phi = spd(n, &mut g);
        let x = &mean + gauss(m, n, &mut g);
        let p = MatrixNormalParams::new(mean.clone(), sigma.clone(), phi.clone()).unwrap();
        let got = log_density(&x, &p, &SpdPolicy::exact()).unwrap();
        let oracle = gaussian_logpdf(&vecm(&x), &vecm(&mean), &kron_loop(&phi, &sigma));
        prop_assert!((got - oracle).abs() < 1e-10, "{} vs {}", got, oracle);
    }

    #[test]
    fn geig_spectrum_survives_congruence(k in 1usize..=5, seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = {
            let s = gauss(k, k, &mut g);
            &s + s.transpose()
        };
        let b = spd(k, &mut g);
        let t = gauss(k, k, &mut g) + DMatrix::identity(k, k) * 2.0;
        let p = SpdPolicy::exact();
        let base = sym_geig(&a, &b, &p).unwrap().eigenvalues;
        let moved = sym_geig(&symmetrize(&(t.transpose() * &a * &t)), &symmetrize(&(t.transpose() * &b * &t)), &p)
            .unwrap()
            .eigenvalues;
        let scale = base.amax().max(1.0);
        prop_assert!((base - moved).amax() <= 1e-6 * scale);
    }

    #[test]
    fn double_inverse_round_trips(k in 1usize..=6, seed in any::<u64>()) {
        let a = spd(k, &mut rng(seed));
        let p = SpdPolicy::exact();
        let back = spd_inverse(&spd_inverse(&a, &p).unwrap(), &p).unwrap();
        prop_assert!((&back - &a).amax() <= 1e-6 * a.amax());
    }
}

#[test]
fn vec_form_matches_loop_kronecker() {
    let mut g = rng(31);
    let (sigma, phi) = (spd(2, &mut g), spd(2, &mut g));
    let mean = gauss(2, 2, &mut g);
    let p = MatrixNormalParams::new(mean.clone(), sigma.clone(), phi.clone()).unwrap();
    let (mu, cov) = to_vec_normal(&p);
    assert_eq!(mu, vecm(&mean));
    assert!((cov - kron_loop(&phi, &sigma)).amax() < 1e-15);
}

#[test]
fn random_spd_inverse_residual() {
    let a = spd(3, &mut rng(32));
    let inv = spd_inverse(&a, &SpdPolicy::default()).unwrap();
    assert!((&a * inv - DMatrix::identity(3, 3)).amax() < 1e-8);
}

fn vec_moments(samples: &[DMatrix<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len() as f64;
    let vs: Vec<DVector<f64>> = samples.iter().map(vecm).collect();
    let mean = vs.iter().fold(DVector::zeros(vs[0].len()), |a, v| a + v) / n;
    let cov = vs
        .iter()
        .fold(DMatrix::zeros(mean.len(), mean.len()), |a, v| a + (v - &mean) * (v - &mean).transpose())
        / n;
    (mean, cov)
}

#[test]
fn standard_samples_have_zero_mean() {
    let p = MatrixNormalParams::<f64>::standard(2, 2);
    let xs = sample_many(&p, 50_000, 33, &SpdPolicy::default()).unwrap();
    let (mean, _) = vec_moments(&xs);
    assert!(mean.amax() < 0.02, "{mean}");
}

#[test]
fn sample_covariance_matches_kronecker() {
    let mut g = rng(34);
    let (sigma, phi) = (spd(2, &mut g), spd(2, &mut g));
    let p = MatrixNormalParams::new(DMatrix::zeros(2, 2), sigma.clone(), phi.clone()).unwrap();
    let xs = sample_many(&p, 50_000, 35, &SpdPolicy::default()).unwrap();
    let (_, cov) = vec_moments(&xs);
    let truth = kron_loop(&phi, &sigma);
    let err = (cov - &truth).amax();
    assert!(err < 0.05 * truth.amax(), "{err} {}", truth.amax());
}
