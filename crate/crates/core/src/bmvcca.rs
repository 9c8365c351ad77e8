//! Bilateral matrix-variate CCA.
//!
//! Each view is `Xʲ = Mʲ + Lʲ Z Rʲᵀ + Ξʲ` with a shared latent
//! `Z ~ MN(0, I, I)` (d₁ × d₂) and noise `Ξʲ ~ MN(0, Ψ_Lʲ, Ψ_Rʲ)`. The
//! posterior is approximated by `q(Zₙ) = MN(Cₙ, O, S)`, with `O` and `S`
//! shared by all samples, and fitted by variational EM.

use nalgebra::{DMatrix, DVector};

use crate::baselines::{tdcca_fit, TdccaOptions};
use crate::dataset::{PairedMatrixDataset, View};
use crate::error::{MvccaError, Result};
use crate::factor::{converged, floor_rel};
use crate::matvar::{check_shape, identity, kron, symmetrize, symmetrize_floored, unvec, vec_of, SpdFactor, SpdPolicy};
use crate::scalar::Real;
use crate::trace::TraceRow;

/// Parameters of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct BilateralView<T: Real> {
    /// Left projection, m × d₁.
    pub l: DMatrix<T>,
    /// Right projection, n × d₂.
    pub r: DMatrix<T>,
    pub psi_l: DMatrix<T>,
    pub psi_r: DMatrix<T>,
    pub mean: DMatrix<T>,
}

impl<T: Real> BilateralView<T> {
    pub fn shape(&self) -> (usize, usize) {
        self.mean.shape()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmvccaModel<T: Real> {
    pub views: [BilateralView<T>; 2],
}

impl<T: Real> BmvccaModel<T> {
    pub fn new(first: BilateralView<T>, second: BilateralView<T>) -> Result<Self> {
        let (d1, d2) = (first.l.ncols(), first.r.ncols());
        for (v, name) in [(&first, "first"), (&second, "second")] {
            let (m, n) = v.shape();
            check_shape(&v.l, m, d1, &format!("{name}-view left projection"))?;
            check_shape(&v.r, n, d2, &format!("{name}-view right projection"))?;
            check_shape(&v.psi_l, m, m, &format!("{name}-view left noise covariance"))?;
            check_shape(&v.psi_r, n, n, &format!("{name}-view right noise covariance"))?;
        }
        Ok(Self { views: [first, second] })
    }

    pub fn view(&self, v: View) -> &BilateralView<T> {
        &self.views[v.number() as usize - 1]
    }

    pub fn d1(&self) -> usize {
        self.views[0].l.ncols()
    }

    pub fn d2(&self) -> usize {
        self.views[0].r.ncols()
    }

    /// `Lʲ C Rʲᵀ + Mʲ`.
    pub fn reconstruct(&self, code: &DMatrix<T>, v: View) -> Result<DMatrix<T>> {
        check_shape(code, self.d1(), self.d2(), "latent code")?;
        let p = self.view(v);
        Ok(&p.l * code * p.r.transpose() + &p.mean)
    }
}

/// Variational posterior `q(Zₙ) = MN(Cₙ, O, S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState<T: Real> {
    pub c: Vec<DMatrix<T>>,
    /// d₁ × d₁.
    pub o: DMatrix<T>,
    /// d₂ × d₂.
    pub s: DMatrix<T>,
}

impl<T: Real> VariationalState<T> {
    /// The prior: `Cₙ = 0`, `O = I`, `S = I`.
    pub fn prior(samples: usize, d1: usize, d2: usize) -> Self {
        Self {
            c: vec![DMatrix::zeros(d1, d2); samples],
            o: identity(d1),
            s: identity(d2),
        }
    }
}

/// Cached per-view quantities at fixed parameters.
pub(crate) struct ViewTerms<T: Real> {
    pub psi_l: SpdFactor<T>,
    pub psi_r: SpdFactor<T>,
    /// `Ψ_L⁻¹ L`.
    pub pl_l: DMatrix<T>,
    /// `Ψ_R⁻¹ R`.
    pub pr_r: DMatrix<T>,
    /// `Lᵀ Ψ_L⁻¹ L`.
    pub a_l: DMatrix<T>,
    /// `Rᵀ Ψ_R⁻¹ R`.
    pub a_r: DMatrix<T>,
}

impl<T: Real> ViewTerms<T> {
    pub fn new(v: &BilateralView<T>, policy: &SpdPolicy, name: &str) -> Result<Self> {
        let psi_l = SpdFactor::new(&v.psi_l, policy, &format!("{name} left noise covariance"))?;
        let psi_r = SpdFactor::new(&v.psi_r, policy, &format!("{name} right noise covariance"))?;
        let pl_l = psi_l.solve(&v.l);
        let pr_r = psi_r.solve(&v.r);
        let a_l = symmetrize(&(v.l.transpose() * &pl_l));
        let a_r = symmetrize(&(v.r.transpose() * &pr_r));
        Ok(Self { psi_l, psi_r, pl_l, pr_r, a_l, a_r })
    }

    /// `tr(Ψ_L⁻¹ E Ψ_R⁻¹ Eᵀ)`.
    fn quad(&self, e: &DMatrix<T>) -> T {
        let w = self.psi_l.whiten(e);
        self.psi_r.whiten(&w.transpose()).norm_squared()
    }
}

fn terms_of<T: Real>(model: &BmvccaModel<T>, policy: &SpdPolicy) -> Result<[ViewTerms<T>; 2]> {
    Ok([
        ViewTerms::new(&model.views[0], policy, "first-view")?,
        ViewTerms::new(&model.views[1], policy, "second-view")?,
    ])
}

/// Solves for posterior latent means at fixed parameters. The system
/// `[Σⱼ A_Rʲ ⊗ A_Lʲ + I] vec C = vec(Σⱼ Lʲᵀ Ψ_Lʲ⁻¹ Xʲ Ψ_Rʲ⁻¹ Rʲ)` is
/// factored once.
pub struct LatentSolver<T: Real> {
    terms: [ViewTerms<T>; 2],
    system: SpdFactor<T>,
    means: [DMatrix<T>; 2],
    d1: usize,
    d2: usize,
}

impl<T: Real> LatentSolver<T> {
    pub fn new(model: &BmvccaModel<T>, policy: &SpdPolicy) -> Result<Self> {
        let terms = terms_of(model, policy)?;
        let (d1, d2) = (model.d1(), model.d2());
        let mut prec = identity(d1 * d2);
        for t in &terms {
            prec += kron(&t.a_r, &t.a_l);
        }
        let system = SpdFactor::new(&symmetrize(&prec), policy, "latent precision")?;
        Ok(Self {
            terms,
            system,
            means: [model.views[0].mean.clone(), model.views[1].mean.clone()],
            d1,
            d2,
        })
    }

    fn evidence(&self, j: usize, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let m = &self.means[j];
        let name = if j == 0 { "first-view observation" } else { "second-view observation" };
        check_shape(x, m.nrows(), m.ncols(), name)?;
        let t = &self.terms[j];
        Ok(t.pl_l.transpose() * (x - m) * &t.pr_r)
    }

    /// Posterior mean of `Z`; an absent view sits at its training mean and
    /// contributes no evidence.
    pub fn mean(&self, x1: Option<&DMatrix<T>>, x2: Option<&DMatrix<T>>) -> Result<DMatrix<T>> {
        if x1.is_none() && x2.is_none() {
            return Err(MvccaError::arg("at least one view must be present"));
        }
        let mut rhs = DMatrix::zeros(self.d1, self.d2);
        for (j, x) in [x1, x2].into_iter().enumerate() {
            if let Some(x) = x {
                rhs += self.evidence(j, x)?;
            }
        }
        let sol = self.system.solve_vec(&vec_of(&rhs));
        Ok(unvec(sol.as_slice(), self.d1, self.d2))
    }

    fn means_for(&self, pairs: &PairedMatrixDataset<T>) -> Result<Vec<DMatrix<T>>> {
        let n = pairs.len();
        let k = self.d1 * self.d2;
        let mut rhs = DMatrix::zeros(k, n);
        for i in 0..n {
            let (a, b) = pairs.pair(i);
            let e = self.evidence(0, a)? + self.evidence(1, b)?;
            rhs.set_column(i, &DVector::from_column_slice(e.as_slice()));
        }
        let sol = self.system.solve(&rhs);
        Ok((0..n)
            .map(|i| unvec(sol.column(i).as_slice(), self.d1, self.d2))
            .collect())
    }
}

fn check_state<T: Real>(model: &BmvccaModel<T>, pairs: &PairedMatrixDataset<T>, st: &VariationalState<T>) -> Result<()> {
    for j in 0..2 {
        let v = View::try_from(j as u8 + 1).expect("view index");
        let (m, n) = model.views[j].shape();
        if pairs.shape(v) != (m, n) {
            return Err(MvccaError::dim(format!(
                "view {} data is {:?}, model expects {:?}",
                j + 1,
                pairs.shape(v),
                (m, n)
            )));
        }
    }
    if st.c.len() != pairs.len() {
        return Err(MvccaError::dim(format!(
            "state holds {} latent means for {} pairs",
            st.c.len(),
            pairs.len()
        )));
    }
    check_shape(&st.o, model.d1(), model.d1(), "O")?;
    check_shape(&st.s, model.d2(), model.d2(), "S")?;
    Ok(())
}

/// One variational E-step: `O`, then `S`, then every `Cₙ`.
pub fn variational_e_step<T: Real>(
    model: &BmvccaModel<T>,
    pairs: &PairedMatrixDataset<T>,
    state: &VariationalState<T>,
    policy: &SpdPolicy,
) -> Result<VariationalState<T>> {
    check_state(model, pairs, state)?;
    let solver = LatentSolver::new(model, policy)?;
    let (d1, d2) = (model.d1(), model.d2());
    let terms = &solver.terms;

    let mut po = identity(d1) * state.s.trace();
    for t in terms {
        po += &t.a_l * (&t.a_r * &state.s).trace();
    }
    let o = symmetrize(&(SpdFactor::new(&symmetrize(&po), policy, "O precision")?.inverse() * T::from_usize_lossy(d2)));

    let mut ps = identity(d2) * o.trace();
    for t in terms {
        ps += &t.a_r * (&t.a_l * &o).trace();
    }
    let s = symmetrize(&(SpdFactor::new(&symmetrize(&ps), policy, "S precision")?.inverse() * T::from_usize_lossy(d1)));

    let c = solver.means_for(pairs)?;
    Ok(VariationalState { c, o, s })
}

/// Centered samples of one view.
fn centered<T: Real>(pairs: &PairedMatrixDataset<T>, v: View, mean: &DMatrix<T>) -> Result<Vec<DMatrix<T>>> {
    pairs.centered_by(v, mean)
}

fn residuals<T: Real>(v: &BilateralView<T>, xs: &[DMatrix<T>], st: &VariationalState<T>) -> Vec<DMatrix<T>> {
    let rt = v.r.transpose();
    xs.iter().zip(&st.c).map(|(x, c)| x - &v.l * c * &rt).collect()
}

fn floored<T: Real>(a: &DMatrix<T>, policy: &SpdPolicy) -> DMatrix<T> {
    symmetrize_floored(a, floor_rel(policy))
}

/// `Ψ_L = P_L / (N n) + tr(A_R S) / n · L O Lᵀ`.
pub(crate) fn update_psi_l<T: Real>(
    v: &BilateralView<T>,
    xs: &[DMatrix<T>],
    st: &VariationalState<T>,
    policy: &SpdPolicy,
) -> Result<DMatrix<T>> {
    let (m, n) = v.shape();
    let psi_r = SpdFactor::new(&v.psi_r, policy, "right noise covariance")?;
    let pr_r = psi_r.solve(&v.r);
    let a_r = v.r.transpose() * &pr_r;
    let mut p = DMatrix::zeros(m, m);
    for e in residuals(v, xs, st) {
        p += &e * psi_r.solve(&e.transpose());
    }
    let nf = T::from_usize_lossy(n);
    let out = p / (T::from_usize_lossy(xs.len()) * nf) + &v.l * &st.o * v.l.transpose() * ((a_r * &st.s).trace() / nf);
    Ok(floored(&out, policy))
}

/// `Ψ_R = P / (N m) + tr(A_L O) / m · R S Rᵀ`.
pub(crate) fn update_psi_r<T: Real>(
    v: &BilateralView<T>,
    xs: &[DMatrix<T>],
    st: &VariationalState<T>,
    policy: &SpdPolicy,
) -> Result<DMatrix<T>> {
    let (m, n) = v.shape();
    let psi_l = SpdFactor::new(&v.psi_l, policy, "left noise covariance")?;
    let a_l = v.l.transpose() * psi_l.solve(&v.l);
    let mut p = DMatrix::zeros(n, n);
    for e in residuals(v, xs, st) {
        p += e.transpose() * psi_l.solve(&e);
    }
    let mf = T::from_usize_lossy(m);
    let out = p / (T::from_usize_lossy(xs.len()) * mf) + &v.r * &st.s * v.r.transpose() * ((a_l * &st.o).trace() / mf);
    Ok(floored(&out, policy))
}

/// `L = [Σ X Ψ_R⁻¹ R Cᵀ] [Σ C A_R Cᵀ + N tr(A_R S) O]⁻¹`.
pub(crate) fn update_l<T: Real>(
    v: &BilateralView<T>,
    xs: &[DMatrix<T>],
    st: &VariationalState<T>,
    policy: &SpdPolicy,
) -> Result<DMatrix<T>> {
    let psi_r = SpdFactor::new(&v.psi_r, policy, "right noise covariance")?;
    let pr_r = psi_r.solve(&v.r);
    let a_r = v.r.transpose() * &pr_r;
    let (d1, _) = st.o.shape();
    let mut num = DMatrix::zeros(v.l.nrows(), d1);
    let mut den = &st.o * (T::from_usize_lossy(xs.len()) * (&a_r * &st.s).trace());
    for (x, c) in xs.iter().zip(&st.c) {
        num += x * &pr_r * c.transpose();
        den += c * &a_r * c.transpose();
    }
    let f = SpdFactor::new(&symmetrize(&den), policy, "left projection normal matrix")?;
    Ok(f.solve_right(&num))
}

/// `R = [Σ Xᵀ Ψ_L⁻¹ L C] [Σ Cᵀ A_L C + N tr(A_L O) S]⁻¹`.
pub(crate) fn update_r<T: Real>(
    v: &BilateralView<T>,
    xs: &[DMatrix<T>],
    st: &VariationalState<T>,
    policy: &SpdPolicy,
) -> Result<DMatrix<T>> {
    let psi_l = SpdFactor::new(&v.psi_l, policy, "left noise covariance")?;
    let pl_l = psi_l.solve(&v.l);
    let a_l = v.l.transpose() * &pl_l;
    let (d2, _) = st.s.shape();
    let mut num = DMatrix::zeros(v.r.nrows(), d2);
    let mut den = &st.s * (T::from_usize_lossy(xs.len()) * (&a_l * &st.o).trace());
    for (x, c) in xs.iter().zip(&st.c) {
        num += x.transpose() * &pl_l * c;
        den += c.transpose() * &a_l * c;
    }
    let f = SpdFactor::new(&symmetrize(&den), policy, "right projection normal matrix")?;
    Ok(f.solve_right(&num))
}

/// Moves the scale of `Ψ_L` into `Ψ_R` so that `tr(Ψ_L) = m`.
fn fix_gauge<T: Real>(v: &mut BilateralView<T>) {
    let c = v.psi_l.trace() / T::from_usize_lossy(v.psi_l.nrows());
    if c > T::zero() && c.is_finite() {
        v.psi_l /= c;
        v.psi_r *= c;
    }
}

/// One variational M-step: `Ψ_L`, `Ψ_R`, `L`, `R` per view, then the gauge.
pub fn variational_m_step<T: Real>(
    model: &BmvccaModel<T>,
    pairs: &PairedMatrixDataset<T>,
    state: &VariationalState<T>,
    policy: &SpdPolicy,
) -> Result<BmvccaModel<T>> {
    check_state(model, pairs, state)?;
    let mut out = model.clone();
    for (j, view) in [View::First, View::Second].into_iter().enumerate() {
        let v = &mut out.views[j];
        let xs = centered(pairs, view, &v.mean)?;
        v.psi_l = update_psi_l(v, &xs, state, policy)?;
        v.psi_r = update_psi_r(v, &xs, state, policy)?;
        v.l = update_l(v, &xs, state, policy)?;
        v.r = update_r(v, &xs, state, policy)?;
        fix_gauge(v);
    }
    Ok(out)
}

/// Entropy of `MN(C, O, S)`.
pub fn variational_entropy<T: Real>(o: &DMatrix<T>, s: &DMatrix<T>, policy: &SpdPolicy) -> Result<T> {
    let (d1, d2) = (o.nrows(), s.nrows());
    let lo = SpdFactor::new(o, policy, "O")?.ln_det();
    let ls = SpdFactor::new(s, policy, "S")?.ln_det();
    let k = T::from_usize_lossy(d1 * d2);
    Ok(T::lit(0.5) * (k * (T::one() + T::two_pi().ln()) + T::from_usize_lossy(d1) * ls + T::from_usize_lossy(d2) * lo))
}

/// The variational lower bound on `Σₙ ln p(X¹ₙ, X²ₙ)`.
pub fn lower_bound<T: Real>(
    model: &BmvccaModel<T>,
    pairs: &PairedMatrixDataset<T>,
    state: &VariationalState<T>,
    policy: &SpdPolicy,
) -> Result<T> {
    check_state(model, pairs, state)?;
    let terms = terms_of(model, policy)?;
    let half = T::lit(0.5);
    let ln2pi = T::two_pi().ln();
    let nf = T::from_usize_lossy(pairs.len());
    let mut total = T::zero();
    for (j, view) in [View::First, View::Second].into_iter().enumerate() {
        let v = &model.views[j];
        let t = &terms[j];
        let (m, n) = v.shape();
        let (mf, nc) = (T::from_usize_lossy(m), T::from_usize_lossy(n));
        let xs = centered(pairs, view, &v.mean)?;
        let quad = residuals(v, &xs, state)
            .iter()
            .fold(T::zero(), |acc, e| acc + t.quad(e));
        let spread = (&t.a_l * &state.o).trace() * (&t.a_r * &state.s).trace();
        total -= half
            * (nf * (mf * nc * ln2pi + nc * t.psi_l.ln_det() + mf * t.psi_r.ln_det() + spread) + quad);
    }
    let (d1, d2) = (model.d1(), model.d2());
    let k = T::from_usize_lossy(d1 * d2);
    let code_sq = state.c.iter().fold(T::zero(), |acc, c| acc + c.norm_squared());
    total -= half * (nf * k * ln2pi + code_sq + nf * state.o.trace() * state.s.trace());
    total += nf * variational_entropy(&state.o, &state.s, policy)?;
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmvccaOptions {
    pub d1: usize,
    pub d2: usize,
    pub max_iters: usize,
    /// Relative lower-bound change that ends the iteration.
    pub tol: f64,
    /// Seed for the 2DCCA initialization.
    pub seed: u64,
    pub policy: SpdPolicy,
}

impl BmvccaOptions {
    pub fn new(d1: usize, d2: usize) -> Self {
        Self {
            d1,
            d2,
            max_iters: 300,
            tol: 1e-7,
            seed: 0,
            policy: SpdPolicy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BmvccaFit<T: Real> {
    pub model: BmvccaModel<T>,
    /// E-step state at the returned parameters.
    pub state: VariationalState<T>,
    /// Bound after each M-step with `‖ΔLʲ‖_F`, `‖ΔRʲ‖_F`.
    pub trace: Vec<TraceRow<T>>,
    /// Bound after each E-step, aligned with `trace`.
    pub bounds_after_e: Vec<T>,
    /// Bound at the starting parameters under the prior state.
    pub initial_bound: T,
    pub converged: bool,
}

/// 2DCCA projections with identity noise.
pub fn bmvcca_initial<T: Real>(pairs: &PairedMatrixDataset<T>, opts: &BmvccaOptions) -> Result<BmvccaModel<T>> {
    let mut topts = TdccaOptions::new(opts.d1, opts.d2);
    topts.seed = opts.seed;
    topts.policy = opts.policy;
    let td = match tdcca_fit(pairs, &topts) {
        Ok(f) => f.model,
        Err(e) if e.is_numerical() => {
            topts.policy = SpdPolicy {
                jitter: opts.policy.jitter.max(1e-6),
                max_condition: f64::INFINITY,
            };
            tdcca_fit(pairs, &topts)?.model
        }
        Err(e) => return Err(e),
    };
    let view = |v: View| {
        let (m, n) = pairs.shape(v);
        BilateralView {
            l: td.left(v).clone(),
            r: td.right(v).clone(),
            psi_l: identity(m),
            psi_r: identity(n),
            mean: pairs.mean(v).clone(),
        }
    };
    BmvccaModel::new(view(View::First), view(View::Second))
}

pub fn bmvcca_fit<T: Real>(pairs: &PairedMatrixDataset<T>, opts: &BmvccaOptions) -> Result<BmvccaFit<T>> {
    if pairs.len() < 2 {
        return Err(MvccaError::arg("BMVCCA needs at least two pairs"));
    }
    let init = bmvcca_initial(pairs, opts)?;
    bmvcca_fit_from(init, pairs, opts)
}

fn tag<T: Real>(bound: T, iteration: usize) -> Result<T> {
    if bound.is_finite() {
        Ok(bound)
    } else {
        Err(MvccaError::NonFinite {
            what: "lower bound".into(),
            iteration,
        })
    }
}

/// Variational EM from explicit starting parameters and the prior state.
pub fn bmvcca_fit_from<T: Real>(
    init: BmvccaModel<T>,
    pairs: &PairedMatrixDataset<T>,
    opts: &BmvccaOptions,
) -> Result<BmvccaFit<T>> {
    bmvcca_fit_observed(init, pairs, opts, |_, _, _| {})
}

/// Like [`bmvcca_fit_from`], calling `observe(iteration, model, state)`
/// after every E-step.
pub fn bmvcca_fit_observed<T: Real>(
    init: BmvccaModel<T>,
    pairs: &PairedMatrixDataset<T>,
    opts: &BmvccaOptions,
    mut observe: impl FnMut(usize, &BmvccaModel<T>, &VariationalState<T>),
) -> Result<BmvccaFit<T>> {
    let policy = &opts.policy;
    let mut model = init;
    let mut state = VariationalState::prior(pairs.len(), model.d1(), model.d2());
    let initial_bound = tag(lower_bound(&model, pairs, &state, policy)?, 0)?;
    let mut trace = Vec::new();
    let mut bounds_after_e = Vec::new();
    let mut prev = initial_bound;
    let mut done = false;
    for iteration in 1..=opts.max_iters {
        state = variational_e_step(&model, pairs, &state, policy)?;
        bounds_after_e.push(tag(lower_bound(&model, pairs, &state, policy)?, iteration)?);
        observe(iteration, &model, &state);
        let next = variational_m_step(&model, pairs, &state, policy)?;
        let bound = tag(lower_bound(&next, pairs, &state, policy)?, iteration)?;
        let delta = |j: usize, left: bool| {
            let (a, b) = (&next.views[j], &model.views[j]);
            if left { (&a.l - &b.l).norm() } else { (&a.r - &b.r).norm() }
        };
        trace.push(TraceRow {
            iteration,
            objective: bound,
            deltas: vec![
                ("delta_L1", delta(0, true)),
                ("delta_L2", delta(1, true)),
                ("delta_R1", delta(0, false)),
                ("delta_R2", delta(1, false)),
            ],
        });
        model = next;
        if converged(prev, bound, opts.tol) {
            done = true;
            break;
        }
        prev = bound;
    }
    state = variational_e_step(&model, pairs, &state, policy)?;
    Ok(BmvccaFit {
        model,
        state,
        trace,
        bounds_after_e,
        initial_bound,
        converged: done,
    })
}
