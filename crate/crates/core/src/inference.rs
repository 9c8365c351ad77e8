//! Projection, reconstruction and classification with fitted models.

use nalgebra::DMatrix;

use crate::bmvcca::{BmvccaModel, LatentSolver, ViewTerms};
use crate::dataset::View;
use crate::error::{MvccaError, Result};
use crate::matvar::{check_shape, SpdPolicy};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Cca,
    Pcca,
    Tdcca,
    Umvcca,
    Bmvcca,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cca => "cca",
            ModelKind::Pcca => "pcca",
            ModelKind::Tdcca => "2dcca",
            ModelKind::Umvcca => "umvcca",
            ModelKind::Bmvcca => "bmvcca",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceView {
    First,
    Second,
    Both,
}

impl From<View> for SourceView {
    fn from(v: View) -> Self {
        match v {
            View::First => SourceView::First,
            View::Second => SourceView::Second,
        }
    }
}

/// Low-dimensional representation of one observation. Vector models store
/// a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceCode<T: Real> {
    pub values: DMatrix<T>,
    pub source: SourceView,
    pub kind: ModelKind,
}

impl<T: Real> SubspaceCode<T> {
    pub fn new(values: DMatrix<T>, source: SourceView, kind: ModelKind) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(MvccaError::NonFinite {
                what: "subspace code".into(),
                iteration: 0,
            });
        }
        Ok(Self { values, source, kind })
    }
}

/// Codes with their labels.
#[derive(Debug, Clone)]
pub struct LabeledGallery<T: Real> {
    codes: Vec<SubspaceCode<T>>,
    labels: Vec<String>,
}

impl<T: Real> LabeledGallery<T> {
    pub fn new(codes: Vec<SubspaceCode<T>>, labels: Vec<String>) -> Result<Self> {
        if codes.len() != labels.len() {
            return Err(MvccaError::dim(format!(
                "{} codes but {} labels",
                codes.len(),
                labels.len()
            )));
        }
        if codes.is_empty() {
            return Err(MvccaError::arg("gallery is empty"));
        }
        let shape = codes[0].values.shape();
        if let Some(c) = codes.iter().find(|c| c.values.shape() != shape) {
            return Err(MvccaError::dim(format!(
                "gallery codes mix shapes {:?} and {:?}",
                shape,
                c.values.shape()
            )));
        }
        Ok(Self { codes, labels })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[SubspaceCode<T>] {
        &self.codes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Index of the smallest score; ties keep the lowest index.
fn argmin<T: Real>(scores: impl IntoIterator<Item = T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(s < b) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the gallery code nearest to `probe` in Euclidean distance.
pub fn nearest<T: Real>(gallery: &LabeledGallery<T>, probe: &SubspaceCode<T>) -> Result<usize> {
    let shape = gallery.codes[0].values.shape();
    if probe.values.shape() != shape {
        return Err(MvccaError::dim(format!(
            "probe code is {:?}, gallery codes are {:?}",
            probe.values.shape(),
            shape
        )));
    }
    let i = argmin(gallery.codes.iter().map(|c| (&c.values - &probe.values).norm_squared()));
    i.ok_or_else(|| MvccaError::arg("gallery is empty"))
}

/// Label of the nearest gallery code.
pub fn classify_nn<'a, T: Real>(gallery: &'a LabeledGallery<T>, probe: &SubspaceCode<T>) -> Result<&'a str> {
    Ok(&gallery.labels[nearest(gallery, probe)?])
}

/// Projects observations with a fitted bilateral model. The latent
/// precision is factored once.
pub struct BmvccaProjector<T: Real> {
    solver: LatentSolver<T>,
}

impl<T: Real> BmvccaProjector<T> {
    pub fn new(model: &BmvccaModel<T>, policy: &SpdPolicy) -> Result<Self> {
        Ok(Self {
            solver: LatentSolver::new(model, policy)?,
        })
    }

    pub fn project_pair(&self, x1: &DMatrix<T>, x2: &DMatrix<T>) -> Result<SubspaceCode<T>> {
        SubspaceCode::new(self.solver.mean(Some(x1), Some(x2))?, SourceView::Both, ModelKind::Bmvcca)
    }

    /// The other view is held at its training mean.
    pub fn project_single(&self, x: &DMatrix<T>, view: View) -> Result<SubspaceCode<T>> {
        let c = match view {
            View::First => self.solver.mean(Some(x), None)?,
            View::Second => self.solver.mean(None, Some(x))?,
        };
        SubspaceCode::new(c, view.into(), ModelKind::Bmvcca)
    }
}

/// Posterior mean of the latent matrix given both views.
pub fn project_pair<T: Real>(
    model: &BmvccaModel<T>,
    x1: &DMatrix<T>,
    x2: &DMatrix<T>,
    policy: &SpdPolicy,
) -> Result<SubspaceCode<T>> {
    BmvccaProjector::new(model, policy)?.project_pair(x1, x2)
}

/// Posterior mean of the latent matrix given one view.
pub fn project_single<T: Real>(
    model: &BmvccaModel<T>,
    x: &DMatrix<T>,
    view: View,
    policy: &SpdPolicy,
) -> Result<SubspaceCode<T>> {
    BmvccaProjector::new(model, policy)?.project_single(x, view)
}

/// `Lʲ C Rʲᵀ + Mʲ`.
pub fn reconstruct<T: Real>(model: &BmvccaModel<T>, code: &SubspaceCode<T>, view: View) -> Result<DMatrix<T>> {
    model.reconstruct(&code.values, view)
}

/// Scores a probe of one view against gallery latent means.
pub struct PtestScorer<T: Real> {
    terms: ViewTerms<T>,
    l: DMatrix<T>,
    rt: DMatrix<T>,
    mean: DMatrix<T>,
}

impl<T: Real> PtestScorer<T> {
    pub fn new(model: &BmvccaModel<T>, view: View, policy: &SpdPolicy) -> Result<Self> {
        let v = model.view(view);
        Ok(Self {
            terms: ViewTerms::new(v, policy, "probe view")?,
            l: v.l.clone(),
            rt: v.r.transpose(),
            mean: v.mean.clone(),
        })
    }

    fn residual(&self, x: &DMatrix<T>, c: &DMatrix<T>) -> Result<DMatrix<T>> {
        check_shape(x, self.mean.nrows(), self.mean.ncols(), "probe")?;
        check_shape(c, self.l.ncols(), self.rt.nrows(), "gallery code")?;
        Ok(x - &self.mean - &self.l * c * &self.rt)
    }

    /// `tr(Ψ_L⁻¹ E Ψ_R⁻¹ Eᵀ)` with `E = X − M − L C Rᵀ`; smaller is better.
    pub fn distance(&self, x: &DMatrix<T>, c: &DMatrix<T>) -> Result<T> {
        let e = self.residual(x, c)?;
        let w = self.terms.psi_l.whiten(&e);
        Ok(self.terms.psi_r.whiten(&w.transpose()).norm_squared())
    }

    /// `E_q[ln p(X | Z)]` under `q = MN(C, O, S)`.
    pub fn expected_loglik(&self, x: &DMatrix<T>, c: &DMatrix<T>, o: &DMatrix<T>, s: &DMatrix<T>) -> Result<T> {
        let d = self.distance(x, c)?;
        let (m, n) = self.mean.shape();
        let (mf, nf) = (T::from_usize_lossy(m), T::from_usize_lossy(n));
        let spread = (&self.terms.a_l * o).trace() * (&self.terms.a_r * s).trace();
        Ok(-T::lit(0.5)
            * (mf * nf * T::two_pi().ln()
                + nf * self.terms.psi_l.ln_det()
                + mf * self.terms.psi_r.ln_det()
                + d
                + spread))
    }

    /// Index of the gallery code that best explains `x`.
    pub fn best(&self, codes: &[DMatrix<T>], x: &DMatrix<T>) -> Result<usize> {
        let scores = codes.iter().map(|c| self.distance(x, c)).collect::<Result<Vec<_>>>()?;
        argmin(scores).ok_or_else(|| MvccaError::arg("gallery is empty"))
    }
}

/// Label of the gallery latent mean maximizing the expected probe
/// log-likelihood.
pub fn classify_ptest<'a, T: Real>(
    model: &BmvccaModel<T>,
    codes: &[DMatrix<T>],
    labels: &'a [String],
    x: &DMatrix<T>,
    view: View,
    policy: &SpdPolicy,
) -> Result<&'a str> {
    if codes.len() != labels.len() {
        return Err(MvccaError::dim(format!("{} codes but {} labels", codes.len(), labels.len())));
    }
    let i = PtestScorer::new(model, view, policy)?.best(codes, x)?;
    Ok(&labels[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn code(v: DMatrix<f64>) -> SubspaceCode<f64> {
        SubspaceCode::new(v, SourceView::Both, ModelKind::Bmvcca).unwrap()
    }

    #[test]
    fn nn_exact_match_and_ties() {
        let g = LabeledGallery::new(
            vec![code(dmatrix![1.0, 0.0]), code(dmatrix![-1.0, 0.0]), code(dmatrix![0.0, 3.0])],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        assert_eq!(classify_nn(&g, &code(dmatrix![0.0, 3.0])).unwrap(), "c");
        assert_eq!(classify_nn(&g, &code(dmatrix![0.0, 0.0])).unwrap(), "a");
        assert!(classify_nn(&g, &code(dmatrix![0.0; 0.0])).is_err());
    }

    #[test]
    fn gallery_validation() {
        assert!(LabeledGallery::<f64>::new(vec![], vec![]).is_err());
        assert!(LabeledGallery::new(vec![code(dmatrix![1.0])], vec![]).is_err());
        assert!(SubspaceCode::new(dmatrix![f64::NAN], SourceView::First, ModelKind::Cca).is_err());
    }
}
