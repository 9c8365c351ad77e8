//! Synthetic experiments behind the `repro-*` commands.

use mvcca::bmvcca::{bmvcca_fit, bmvcca_fit_observed, bmvcca_initial};
use mvcca::synth::{abs_correlation, alignment_cosine, generate, recovery_error, SynthKind};
use mvcca::umvcca::umvcca_fit;
use mvcca::{BmvccaOptions, Matrix, SynthSpec, TraceRow, UmvccaOptions, View};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Setup {
    pub size: usize,
    pub d: usize,
    pub samples: usize,
    pub noise: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for Fig1Setup {
    fn default() -> Self {
        Self {
            size: 32,
            d: 15,
            samples: 1000,
            noise: 0.1,
            max_iters: 100,
            seed: 7,
        }
    }
}

/// BMVCCA trace on bilateral synthetic data, running every iteration.
pub fn fig1_trace(s: &Fig1Setup) -> CliResult<Vec<TraceRow<f64>>> {
    let spec = SynthSpec::square(s.size, s.d, s.d, s.samples, s.noise, s.seed);
    let (data, _) = generate::<f64>(&spec)?;
    let opts = BmvccaOptions {
        max_iters: s.max_iters,
        tol: 0.0,
        seed: s.seed,
        ..BmvccaOptions::new(s.d, s.d)
    };
    Ok(bmvcca_fit(&data, &opts)?.trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig23Setup {
    pub size: usize,
    pub sample_counts: Vec<usize>,
    pub noise: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for Fig23Setup {
    fn default() -> Self {
        Self {
            size: 32,
            sample_counts: vec![10, 100, 1000],
            noise: 0.1,
            max_iters: 100,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryRow {
    pub samples: usize,
    pub iteration: usize,
    pub recovery_error: f64,
    pub abs_correlation: f64,
}

fn centered(zs: &[Matrix]) -> Vec<Matrix> {
    let mean = zs.iter().fold(Matrix::zeros(1, 1), |a, z| a + z) / zs.len() as f64;
    zs.iter().map(|z| z - &mean).collect()
}

/// Scalar-latent recovery after every E-step, for nested training sets.
///
/// Fitting removes the sample mean, so estimates are compared with the
/// sample-centered true latents.
pub fn fig23_rows(s: &Fig23Setup) -> CliResult<Vec<RecoveryRow>> {
    let largest = s.sample_counts.iter().copied().max().unwrap_or(0);
    if s.sample_counts.iter().any(|&n| n < 2) {
        return Err(CliError::usage("every sample count must be at least 2"));
    }
    let spec = SynthSpec::square(s.size, 1, 1, largest, s.noise, s.seed);
    let (all, truth) = generate::<f64>(&spec)?;
    let mut rows = Vec::new();
    for &n in &s.sample_counts {
        let data = all.truncated(n)?;
        let z = centered(&truth.z[..n]);
        let opts = BmvccaOptions {
            max_iters: s.max_iters,
            tol: 0.0,
            seed: s.seed,
            ..BmvccaOptions::new(1, 1)
        };
        let init = bmvcca_initial(&data, &opts)?;
        let mut failure = None;
        bmvcca_fit_observed(init, &data, &opts, |iteration, _, state| {
            if failure.is_some() {
                return;
            }
            match recovery_error(&state.c, &z).and_then(|e| Ok((e, abs_correlation(&state.c, &z)?))) {
                Ok((e, r)) => rows.push(RecoveryRow {
                    samples: n,
                    iteration,
                    recovery_error: e,
                    abs_correlation: r,
                }),
                Err(e) => failure = Some(e),
            }
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Setup {
    pub size: usize,
    pub samples: usize,
    pub noise: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for Fig4Setup {
    fn default() -> Self {
        Self {
            size: 32,
            samples: 1000,
            noise: 0.1,
            max_iters: 500,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Result {
    /// True and learned right projection vector per view.
    pub vectors: [(Vec<f64>, Vec<f64>); 2],
    pub cosines: [f64; 2],
    /// Log-likelihood after each EM iteration.
    pub loglik: Vec<f64>,
}

/// UMVCCA on data with a single right projection vector per view.
pub fn fig4(s: &Fig4Setup) -> CliResult<Fig4Result> {
    let spec = SynthSpec {
        kind: SynthKind::Unilateral,
        ..SynthSpec::square(s.size, 0, 1, s.samples, s.noise, s.seed)
    };
    let (data, truth) = generate::<f64>(&spec)?;
    let opts = UmvccaOptions {
        max_iters: s.max_iters,
        seed: s.seed,
        ..UmvccaOptions::new(1)
    };
    let f = umvcca_fit(&data, &opts)?;
    let pair = |t: &Matrix, v: View| (t.as_slice().to_vec(), f.model.right(v).as_slice().to_vec());
    let vectors = [pair(&truth.r1, View::First), pair(&truth.r2, View::Second)];
    let cosines = [
        alignment_cosine(&vectors[0].0, &vectors[0].1)?,
        alignment_cosine(&vectors[1].0, &vectors[1].1)?,
    ];
    Ok(Fig4Result {
        vectors,
        cosines,
        loglik: f.trace.iter().map(|r| r.objective).collect(),
    })
}
