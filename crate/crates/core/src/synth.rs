//! Synthetic paired matrix data and recovery metrics.

use nalgebra::DMatrix;

use crate::dataset::PairedMatrixDataset;
use crate::error::{MvccaError, Result};
use crate::matvar::{identity, standard_normal_matrix};
use crate::rng::{stream_rng, uniform_matrix};
use crate::scalar::Real;

const LOADING_STREAM: u64 = 1;
const LATENT_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const CLASS_STREAM: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadingLaw {
    #[default]
    Uniform01,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthKind {
    /// `Xʲ = Lʲ Z Rʲᵀ + Ξʲ`, `Z` is d₁ × d₂.
    #[default]
    Bilateral,
    /// `Xʲ = Z Rʲᵀ + Ξʲ`, `Z` is m × d₂ and `d1` is ignored.
    Unilateral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub m1: usize,
    pub n1: usize,
    pub m2: usize,
    pub n2: usize,
    pub d1: usize,
    pub d2: usize,
    pub n_samples: usize,
    /// σ in `Ξ ~ MN(0, σI, σI)`, so each noise entry has variance σ².
    pub noise_scale: f64,
    pub loading_law: LoadingLaw,
    pub kind: SynthKind,
    /// Seeds the loadings and class offsets.
    pub seed: u64,
    /// Seeds latents and noise when set; otherwise `seed` does.
    pub sample_seed: Option<u64>,
    /// Samples are labelled `n mod class_count` and their latent mean is
    /// shifted by a per-class offset of Frobenius norm `class_offset_scale`.
    pub class_count: Option<usize>,
    pub class_offset_scale: f64,
}

impl SynthSpec {
    /// Square views of equal size.
    pub fn square(size: usize, d1: usize, d2: usize, n_samples: usize, noise_scale: f64, seed: u64) -> Self {
        Self {
            m1: size,
            n1: size,
            m2: size,
            n2: size,
            d1,
            d2,
            n_samples,
            noise_scale,
            loading_law: LoadingLaw::Uniform01,
            kind: SynthKind::Bilateral,
            seed,
            sample_seed: None,
            class_count: None,
            class_offset_scale: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if [self.m1, self.n1, self.m2, self.n2, self.d2].contains(&0) {
            return Err(MvccaError::dim("dimensions must be positive"));
        }
        if self.d2 > self.n1.min(self.n2) {
            return Err(MvccaError::dim(format!("d2 = {} exceeds the view column counts", self.d2)));
        }
        match self.kind {
            SynthKind::Bilateral => {
                if self.d1 == 0 || self.d1 > self.m1.min(self.m2) {
                    return Err(MvccaError::dim(format!("d1 = {} must be in 1..={}", self.d1, self.m1.min(self.m2))));
                }
            }
            SynthKind::Unilateral => {
                if self.m1 != self.m2 {
                    return Err(MvccaError::dim("unilateral data needs equal row counts"));
                }
            }
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(MvccaError::arg(format!("noise scale must be finite and non-negative, got {}", self.noise_scale)));
        }
        if self.class_count == Some(0) {
            return Err(MvccaError::arg("class count must be positive"));
        }
        Ok(())
    }

    /// Row count of the latent matrix.
    pub fn latent_rows(&self) -> usize {
        match self.kind {
            SynthKind::Bilateral => self.d1,
            SynthKind::Unilateral => self.m1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T: Real> {
    pub l1: DMatrix<T>,
    pub l2: DMatrix<T>,
    pub r1: DMatrix<T>,
    pub r2: DMatrix<T>,
    pub z: Vec<DMatrix<T>>,
    pub labels: Option<Vec<usize>>,
    pub class_offsets: Vec<DMatrix<T>>,
}

/// Draws a dataset. The first `k` samples do not depend on `n_samples`.
pub fn generate<T: Real>(spec: &SynthSpec) -> Result<(PairedMatrixDataset<T>, GroundTruth<T>)> {
    spec.validate()?;
    let rows = spec.latent_rows();
    let mut lr = stream_rng(spec.seed, LOADING_STREAM);
    let loading = |r: usize, c: usize, rng: &mut _| match spec.loading_law {
        LoadingLaw::Uniform01 => uniform_matrix::<T>(r, c, rng),
    };
    let (l1, l2) = match spec.kind {
        SynthKind::Bilateral => (loading(spec.m1, spec.d1, &mut lr), loading(spec.m2, spec.d1, &mut lr)),
        SynthKind::Unilateral => (identity(spec.m1), identity(spec.m2)),
    };
    let r1 = loading(spec.n1, spec.d2, &mut lr);
    let r2 = loading(spec.n2, spec.d2, &mut lr);

    let mut cr = stream_rng(spec.seed, CLASS_STREAM);
    let class_offsets: Vec<DMatrix<T>> = (0..spec.class_count.unwrap_or(0))
        .map(|_| {
            let g: DMatrix<T> = standard_normal_matrix(rows, spec.d2, &mut cr);
            let norm = g.norm();
            g * (T::lit(spec.class_offset_scale) / norm)
        })
        .collect();

    let sample_seed = spec.sample_seed.unwrap_or(spec.seed);
    let mut zr = stream_rng(sample_seed, LATENT_STREAM);
    let mut nr = stream_rng(sample_seed, NOISE_STREAM);
    let sigma = T::lit(spec.noise_scale);
    let (r1t, r2t) = (r1.transpose(), r2.transpose());
    let mut x1 = Vec::with_capacity(spec.n_samples);
    let mut x2 = Vec::with_capacity(spec.n_samples);
    let mut zs = Vec::with_capacity(spec.n_samples);
    let mut labels = Vec::new();
    for n in 0..spec.n_samples {
        let mut z: DMatrix<T> = standard_normal_matrix(rows, spec.d2, &mut zr);
        if let Some(k) = spec.class_count {
            let label = n % k;
            z += &class_offsets[label];
            labels.push(label);
        }
        let e1: DMatrix<T> = standard_normal_matrix(spec.m1, spec.n1, &mut nr);
        let e2: DMatrix<T> = standard_normal_matrix(spec.m2, spec.n2, &mut nr);
        x1.push(&l1 * &z * &r1t + e1 * sigma);
        x2.push(&l2 * &z * &r2t + e2 * sigma);
        zs.push(z);
    }
    let truth = GroundTruth {
        l1,
        l2,
        r1,
        r2,
        z: zs,
        labels: spec.class_count.map(|_| labels),
        class_offsets,
    };
    Ok((PairedMatrixDataset::new(x1, x2)?, truth))
}

fn scalar_series<T: Real>(xs: &[DMatrix<T>], what: &str) -> Result<Vec<T>> {
    xs.iter()
        .map(|x| {
            if x.shape() == (1, 1) {
                Ok(x[(0, 0)])
            } else {
                Err(MvccaError::dim(format!("{what} must be 1 × 1 latents, got {:?}", x.shape())))
            }
        })
        .collect()
}

fn unit<T: Real>(v: &[T], what: &str) -> Result<Vec<T>> {
    let norm = v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    if !(norm > T::zero()) {
        return Err(MvccaError::arg(format!("{what} has zero norm")));
    }
    Ok(v.iter().map(|&x| x / norm).collect())
}

/// Distance between unit-normalized scalar latent sequences, minimized over
/// the sign of the estimates.
pub fn recovery_error<T: Real>(estimates: &[DMatrix<T>], truth: &[DMatrix<T>]) -> Result<T> {
    if estimates.len() != truth.len() {
        return Err(MvccaError::dim(format!("{} estimates for {} latents", estimates.len(), truth.len())));
    }
    let e = unit(&scalar_series(estimates, "estimates")?, "estimates")?;
    let t = unit(&scalar_series(truth, "truth")?, "truth")?;
    let dist = |sign: T| {
        e.iter()
            .zip(&t)
            .fold(T::zero(), |a, (&x, &y)| a + (sign * x - y) * (sign * x - y))
            .sqrt()
    };
    Ok(dist(T::one()).min(dist(-T::one())))
}

/// `|uᵀv| / (‖u‖ ‖v‖)`.
pub fn alignment_cosine<T: Real>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(MvccaError::dim(format!("vectors have lengths {} and {}", u.len(), v.len())));
    }
    let a = unit(u, "first vector")?;
    let b = unit(v, "second vector")?;
    Ok(a.iter().zip(&b).fold(T::zero(), |s, (&x, &y)| s + x * y).abs())
}

/// Absolute Pearson correlation of two scalar latent sequences.
pub fn abs_correlation<T: Real>(estimates: &[DMatrix<T>], truth: &[DMatrix<T>]) -> Result<T> {
    if estimates.len() != truth.len() || estimates.len() < 2 {
        return Err(MvccaError::dim("need two equally long sequences of at least two latents"));
    }
    let center = |v: Vec<T>| {
        let mean = v.iter().fold(T::zero(), |a, &x| a + x) / T::from_usize_lossy(v.len());
        v.into_iter().map(|x| x - mean).collect::<Vec<_>>()
    };
    let e = center(scalar_series(estimates, "estimates")?);
    let t = center(scalar_series(truth, "truth")?);
    alignment_cosine(&e, &t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn noiseless_is_exact() {
        let spec = SynthSpec::square(4, 2, 3, 5, 0.0, 1);
        let (data, truth) = generate::<f64>(&spec).unwrap();
        for (n, z) in truth.z.iter().enumerate() {
            let (a, b) = data.pair(n);
            assert!((a - &truth.l1 * z * truth.r1.transpose()).norm() == 0.0);
            assert!((b - &truth.l2 * z * truth.r2.transpose()).norm() == 0.0);
        }
    }

    #[test]
    fn experiment_shapes() {
        let spec = SynthSpec::square(32, 15, 15, 1000, 0.1, 0);
        let (data, truth) = generate::<f64>(&spec).unwrap();
        assert_eq!(data.len(), 1000);
        assert_eq!(data.shape(crate::View::First), (32, 32));
        assert_eq!(truth.l1.shape(), (32, 15));
        assert_eq!(truth.z[0].shape(), (15, 15));
        assert!(truth.l1.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn nested_and_streams_independent() {
        let small = SynthSpec::square(3, 1, 1, 10, 0.1, 5);
        let big = SynthSpec { n_samples: 30, ..small.clone() };
        let (a, ta) = generate::<f64>(&small).unwrap();
        let (b, tb) = generate::<f64>(&big).unwrap();
        assert_eq!(a.view(crate::View::First), &b.view(crate::View::First)[..10]);
        assert_eq!(ta.l1, tb.l1);
        let other = SynthSpec { sample_seed: Some(99), ..small.clone() };
        let (c, tc) = generate::<f64>(&other).unwrap();
        assert_eq!(tc.l1, ta.l1);
        assert_eq!(tc.r2, ta.r2);
        assert_ne!(c.pair(0).0, a.pair(0).0);
    }

    #[test]
    fn unilateral_shapes() {
        let spec = SynthSpec {
            kind: SynthKind::Unilateral,
            ..SynthSpec::square(5, 0, 1, 3, 0.1, 2)
        };
        let (_, truth) = generate::<f64>(&spec).unwrap();
        assert_eq!(truth.z[0].shape(), (5, 1));
        assert_eq!(truth.l1, identity::<f64>(5));
    }

    #[test]
    fn recovery_error_removes_sign_and_scale() {
        let t = vec![dmatrix![1.0], dmatrix![-2.0], dmatrix![0.5]];
        let neg: Vec<_> = t.iter().map(|x| -x).collect();
        let scaled: Vec<_> = t.iter().map(|x| x * 3.0).collect();
        assert_eq!(recovery_error(&t, &t).unwrap(), 0.0);
        assert!(recovery_error(&neg, &t).unwrap() < 1e-15);
        assert!(recovery_error(&scaled, &t).unwrap() < 1e-12);
        assert!(recovery_error(&[dmatrix![1.0, 2.0]], &[dmatrix![1.0, 2.0]]).is_err());
    }

    #[test]
    fn cosine_cases() {
        assert!((alignment_cosine(&[1.0f64, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(alignment_cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((alignment_cosine(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(alignment_cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }
}
