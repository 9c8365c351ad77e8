//! One enum over the five model families, with the harness-level plumbing
//! (vectorization, PCA pre-projection, view transposition) each one needs.

use mvcca::baselines::{
    cca_fit, cca_project, pcca_fit_ml, pcca_loglik, pcca_posterior_mean, tdcca_fit, tdcca_project, TdccaOptions,
};
use mvcca::bmvcca::bmvcca_fit;
use mvcca::inference::{classify_ptest, BmvccaProjector};
use mvcca::matvar::vec_of;
use mvcca::umvcca::{umvcca_fit, umvcca_posterior_mean};
use mvcca::{
    BmvccaOptions, Bmvcca, Cca, Dataset, Matrix, ModelKind, Pcca, SpdPolicy, Tdcca, TraceRow, Umvcca, UmvccaOptions,
    View,
};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};
use crate::pca::Pca;

/// How a view's matrices become the vectors a baseline was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPrep {
    pub shape: (usize, usize),
    pub pca: Option<Pca>,
}

impl VectorPrep {
    fn apply(&self, x: &Matrix) -> CliResult<DVector<f64>> {
        if x.shape() != self.shape {
            return Err(CliError::usage(format!(
                "input is {:?} but the model expects {:?}",
                x.shape(),
                self.shape
            )));
        }
        let v = vec_of(x);
        Ok(match &self.pca {
            Some(p) => p.apply(&v),
            None => v,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Cca { model: Cca, prep: [VectorPrep; 2] },
    Pcca { model: Pcca, prep: [VectorPrep; 2] },
    Tdcca(Tdcca),
    /// With `transpose` the model was fitted on transposed views, giving the
    /// left-projection variant.
    Umvcca { model: Umvcca, transpose: bool },
    Bmvcca(Bmvcca),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitInfo {
    pub seed: u64,
    pub iterations: usize,
    pub final_objective: Option<f64>,
    pub converged: bool,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: FittedModel,
    pub fit: FitInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRequest {
    pub kind: ModelKind,
    pub d1: usize,
    pub d2: usize,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub jitter: Option<f64>,
    pub pca_pre: Option<usize>,
    pub transpose: bool,
}

impl FitRequest {
    pub fn new(kind: ModelKind, d1: usize, d2: usize) -> Self {
        Self {
            kind,
            d1,
            d2,
            max_iters: None,
            tol: None,
            seed: 0,
            jitter: None,
            pca_pre: None,
            transpose: false,
        }
    }

    pub fn policy(&self) -> SpdPolicy {
        match self.jitter {
            Some(j) => SpdPolicy::default().with_jitter(j),
            None => SpdPolicy::default(),
        }
    }
}

/// `d₂` whose `m × d₂` feature count is closest to `budget`; ties go to the
/// smaller `d₂`.
pub fn umvcca_d2_for_budget(rows: usize, cols: usize, budget: usize) -> usize {
    (1..=cols.max(1))
        .min_by_key(|&d| (rows * d).abs_diff(budget))
        .unwrap_or(1)
}

fn prepare_vectors(
    data: &Dataset,
    pca_pre: Option<usize>,
) -> CliResult<([VectorPrep; 2], Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let mut preps = Vec::with_capacity(2);
    let mut vectors = Vec::with_capacity(2);
    for v in [View::First, View::Second] {
        let raw: Vec<DVector<f64>> = data.view(v).iter().map(vec_of).collect();
        let pca = pca_pre.map(|k| Pca::fit(&raw, k)).transpose()?;
        let vs = match &pca {
            Some(p) => raw.iter().map(|x| p.apply(x)).collect(),
            None => raw,
        };
        preps.push(VectorPrep { shape: data.shape(v), pca });
        vectors.push(vs);
    }
    let v2 = vectors.pop().unwrap_or_default();
    let v1 = vectors.pop().unwrap_or_default();
    let p2 = preps.pop().expect("two views");
    let p1 = preps.pop().expect("two views");
    Ok(([p1, p2], v1, v2))
}

fn transposed(data: &Dataset) -> CliResult<Dataset> {
    Ok(Dataset::new(
        data.view(View::First).iter().map(|x| x.transpose()).collect(),
        data.view(View::Second).iter().map(|x| x.transpose()).collect(),
    )?)
}

/// Fits the requested model; the trace holds one row per iteration.
pub fn fit(data: &Dataset, req: &FitRequest) -> CliResult<(Trained, Vec<TraceRow<f64>>)> {
    let policy = req.policy();
    if req.pca_pre.is_some() && !matches!(req.kind, ModelKind::Cca | ModelKind::Pcca) {
        return Err(CliError::usage("--pca-pre applies to cca and pcca only"));
    }
    if req.transpose && req.kind != ModelKind::Umvcca {
        return Err(CliError::usage("--transpose applies to umvcca only"));
    }
    let (model, trace, converged) = match req.kind {
        ModelKind::Cca => {
            let (prep, v1, v2) = prepare_vectors(data, req.pca_pre)?;
            let model = cca_fit(&v1, &v2, req.d1, &policy)?;
            let row = TraceRow {
                iteration: 1,
                objective: model.correlations.sum(),
                deltas: vec![],
            };
            (FittedModel::Cca { model, prep }, vec![row], true)
        }
        ModelKind::Pcca => {
            let (prep, v1, v2) = prepare_vectors(data, req.pca_pre)?;
            let model = pcca_fit_ml(&v1, &v2, req.d1, &policy)?;
            let row = TraceRow {
                iteration: 1,
                objective: pcca_loglik(&model, &v1, &v2, &policy)?,
                deltas: vec![],
            };
            (FittedModel::Pcca { model, prep }, vec![row], true)
        }
        ModelKind::Tdcca => {
            let mut opts = TdccaOptions::new(req.d1, req.d2);
            opts.seed = req.seed;
            opts.policy = policy;
            if let Some(n) = req.max_iters {
                opts.max_iters = n;
            }
            if let Some(t) = req.tol {
                opts.tol = t;
            }
            let f = tdcca_fit(data, &opts)?;
            let trace = f
                .trace
                .iter()
                .map(|s| TraceRow {
                    iteration: s.iteration,
                    objective: s.objective_right,
                    deltas: vec![
                        ("delta_L1", s.delta_l1),
                        ("delta_L2", s.delta_l2),
                        ("delta_R1", s.delta_r1),
                        ("delta_R2", s.delta_r2),
                    ],
                })
                .collect();
            (FittedModel::Tdcca(f.model), trace, f.converged)
        }
        ModelKind::Umvcca => {
            let mut opts = UmvccaOptions::new(req.d2);
            opts.seed = req.seed;
            opts.policy = policy;
            if let Some(n) = req.max_iters {
                opts.max_iters = n;
            }
            if let Some(t) = req.tol {
                opts.tol = t;
            }
            let f = if req.transpose {
                umvcca_fit(&transposed(data)?, &opts)?
            } else {
                umvcca_fit(data, &opts)?
            };
            let model = FittedModel::Umvcca {
                model: f.model,
                transpose: req.transpose,
            };
            (model, f.trace, f.converged)
        }
        ModelKind::Bmvcca => {
            let mut opts = BmvccaOptions::new(req.d1, req.d2);
            opts.seed = req.seed;
            opts.policy = policy;
            if let Some(n) = req.max_iters {
                opts.max_iters = n;
            }
            if let Some(t) = req.tol {
                opts.tol = t;
            }
            let f = bmvcca_fit(data, &opts)?;
            (FittedModel::Bmvcca(f.model), f.trace, f.converged)
        }
    };
    let fit = FitInfo {
        seed: req.seed,
        iterations: trace.len(),
        final_objective: trace.last().map(|r| r.objective),
        converged,
        jitter: policy.jitter,
    };
    Ok((Trained { model, fit }, trace))
}

fn pick<'a>(x1: Option<&'a Matrix>, x2: Option<&'a Matrix>, v: View) -> Option<&'a Matrix> {
    match v {
        View::First => x1,
        View::Second => x2,
    }
}

fn average(codes: Vec<Matrix>) -> Matrix {
    let n = codes.len() as f64;
    let mut it = codes.into_iter();
    let first = it.next().expect("at least one code");
    it.fold(first, |a, c| a + c) / n
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Cca { .. } => ModelKind::Cca,
            FittedModel::Pcca { .. } => ModelKind::Pcca,
            FittedModel::Tdcca(_) => ModelKind::Tdcca,
            FittedModel::Umvcca { .. } => ModelKind::Umvcca,
            FittedModel::Bmvcca(_) => ModelKind::Bmvcca,
        }
    }

    /// Shape of the raw matrices of one view.
    pub fn view_shape(&self, v: View) -> (usize, usize) {
        let i = v.number() as usize - 1;
        match self {
            FittedModel::Cca { prep, .. } | FittedModel::Pcca { prep, .. } => prep[i].shape,
            FittedModel::Tdcca(m) => m.mean(v).shape(),
            FittedModel::Umvcca { model, transpose } => {
                let (r, c) = match v {
                    View::First => model.mean1.shape(),
                    View::Second => model.mean2.shape(),
                };
                if *transpose {
                    (c, r)
                } else {
                    (r, c)
                }
            }
            FittedModel::Bmvcca(m) => m.view(v).shape(),
        }
    }

    /// Number of entries in a subspace code.
    pub fn feature_count(&self) -> usize {
        match self {
            FittedModel::Cca { model, .. } => model.dim(),
            FittedModel::Pcca { model, .. } => model.dim(),
            FittedModel::Tdcca(m) => m.l1.ncols() * m.r1.ncols(),
            FittedModel::Umvcca { model, .. } => model.rows() * model.d2(),
            FittedModel::Bmvcca(m) => m.d1() * m.d2(),
        }
    }

    fn check_inputs(&self, x1: Option<&Matrix>, x2: Option<&Matrix>) -> CliResult<()> {
        if x1.is_none() && x2.is_none() {
            return Err(CliError::usage("projection needs at least one view"));
        }
        for v in [View::First, View::Second] {
            if let Some(x) = pick(x1, x2, v) {
                let want = self.view_shape(v);
                if x.shape() != want {
                    return Err(CliError::usage(format!(
                        "view {} input is {:?} but the model expects {:?}",
                        v.number(),
                        x.shape(),
                        want
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reconstructs a view from a code; only the generative models support it.
    pub fn reconstruct(&self, code: &Matrix, v: View) -> CliResult<Matrix> {
        match self {
            FittedModel::Bmvcca(m) => Ok(m.reconstruct(code, v)?),
            FittedModel::Umvcca { model, transpose } => {
                let want = (model.rows(), model.d2());
                if code.shape() != want {
                    return Err(CliError::usage(format!("code is {:?}, expected {want:?}", code.shape())));
                }
                let mean = match v {
                    View::First => &model.mean1,
                    View::Second => &model.mean2,
                };
                let x = code * model.right(v).transpose() + mean;
                Ok(if *transpose { x.transpose() } else { x })
            }
            FittedModel::Pcca { model, prep } => {
                let i = v.number() as usize - 1;
                if prep[i].pca.is_some() {
                    return Err(CliError::usage("reconstruction is not available after --pca-pre"));
                }
                if code.shape() != (model.dim(), 1) {
                    return Err(CliError::usage(format!("code is {:?}, expected ({}, 1)", code.shape(), model.dim())));
                }
                let (w, mean) = match v {
                    View::First => (&model.w1, &model.mean1),
                    View::Second => (&model.w2, &model.mean2),
                };
                let x = w * code.column(0) + mean;
                let (r, c) = prep[i].shape;
                Ok(DMatrix::from_column_slice(r, c, x.as_slice()))
            }
            _ => Err(CliError::usage(format!(
                "{} is not generative; reconstruct needs pcca, umvcca or bmvcca",
                self.kind().name()
            ))),
        }
    }
}

/// A model with its per-model precomputation done once.
pub struct Projector<'a> {
    model: &'a FittedModel,
    policy: SpdPolicy,
    bmvcca: Option<BmvccaProjector<f64>>,
}

impl<'a> Projector<'a> {
    pub fn new(model: &'a FittedModel, policy: SpdPolicy) -> CliResult<Self> {
        let bmvcca = match model {
            FittedModel::Bmvcca(m) => Some(BmvccaProjector::new(m, &policy)?),
            _ => None,
        };
        Ok(Self { model, policy, bmvcca })
    }

    /// Subspace code from one or both views.
    ///
    /// The deterministic baselines have one projection per view; given both
    /// views they return the average of the two.
    pub fn project(&self, x1: Option<&Matrix>, x2: Option<&Matrix>) -> CliResult<Matrix> {
        self.model.check_inputs(x1, x2)?;
        let present = || [View::First, View::Second].into_iter().filter_map(|v| pick(x1, x2, v).map(|x| (v, x)));
        match self.model {
            FittedModel::Cca { model, prep } => {
                let codes = present()
                    .map(|(v, x)| {
                        let z = cca_project(model, &prep[v.number() as usize - 1].apply(x)?, v)?;
                        Ok(DMatrix::from_column_slice(z.len(), 1, z.as_slice()))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(average(codes))
            }
            FittedModel::Pcca { model, prep } => {
                let a = x1.map(|x| prep[0].apply(x)).transpose()?;
                let b = x2.map(|x| prep[1].apply(x)).transpose()?;
                let z = pcca_posterior_mean(model, a.as_ref(), b.as_ref(), &self.policy)?;
                Ok(DMatrix::from_column_slice(z.len(), 1, z.as_slice()))
            }
            FittedModel::Tdcca(m) => {
                let codes = present()
                    .map(|(v, x)| Ok(tdcca_project(m, x, v)?))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(average(codes))
            }
            FittedModel::Umvcca { model, transpose } => {
                let t = |x: Option<&Matrix>| x.map(|m| if *transpose { m.transpose() } else { m.clone() });
                let (a, b) = (t(x1), t(x2));
                Ok(umvcca_posterior_mean(model, a.as_ref(), b.as_ref(), &self.policy)?)
            }
            FittedModel::Bmvcca(_) => {
                let p = self.bmvcca.as_ref().expect("prepared with the model");
                let code = match (x1, x2) {
                    (Some(a), Some(b)) => p.project_pair(a, b)?,
                    (Some(a), None) => p.project_single(a, View::First)?,
                    (None, Some(b)) => p.project_single(b, View::Second)?,
                    (None, None) => unreachable!("checked above"),
                };
                Ok(code.values)
            }
        }
    }

    /// Label of the gallery code that best explains a raw probe matrix.
    pub fn classify_ptest<'l>(
        &self,
        codes: &[Matrix],
        labels: &'l [String],
        x: &Matrix,
        view: View,
    ) -> CliResult<&'l str> {
        match self.model {
            FittedModel::Bmvcca(m) => Ok(classify_ptest(m, codes, labels, x, view, &self.policy)?),
            other => Err(CliError::usage(format!(
                "the ptest criterion needs a bmvcca model, got {}",
                other.kind().name()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_picks_nearest_multiple() {
        assert_eq!(umvcca_d2_for_budget(32, 32, 25), 1);
        assert_eq!(umvcca_d2_for_budget(32, 32, 100), 3);
        assert_eq!(umvcca_d2_for_budget(32, 4, 1000), 4);
        assert_eq!(umvcca_d2_for_budget(4, 8, 6), 1);
    }
}
