use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvcca::inference::classify_nn;
use mvcca::synth::{generate, SynthKind};
use mvcca::{Code, Gallery, Matrix, ModelKind, SourceView, SpdPolicy, SynthSpec, TraceRow, View};
use serde::{Deserialize, Serialize};

use crate::archive::{load_model, save_model};
use crate::error::{CliError, CliResult};
use crate::io::{read_csv_matrix, write_atomic, write_csv_matrix, write_matrix, MatrixFormat};
use crate::manifest::{load_dataset, DatasetManifest, LoadedDataset, ManifestPair, MANIFEST_VERSION};
use crate::models::{fit, umvcca_d2_for_budget, FitRequest, Projector};
use crate::repro::{fig1_trace, fig23_rows, fig4, Fig1Setup, Fig23Setup, Fig4Setup};

#[derive(Debug, Parser)]
#[command(name = "mvcca", version, about = "Fit and evaluate matrix-variate CCA models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic paired dataset with ground truth
    #[command(name = "synth-gen")]
    SynthGen(SynthGenArgs),
    /// Fit a model and write its archive and trace
    Fit(FitArgs),
    /// Write the subspace code of every pair in a manifest
    Project(ProjectArgs),
    /// Map a code back to a view
    Reconstruct(ReconstructArgs),
    /// Label probe matrices against a gallery
    Classify(ClassifyArgs),
    /// Classify and write error metrics
    Eval(EvalArgs),
    /// BMVCCA convergence trace on bilateral synthetic data
    #[command(name = "repro-fig1")]
    ReproFig1(Fig1Args),
    /// Latent recovery per iteration for several training sizes
    #[command(name = "repro-fig23")]
    ReproFig23(Fig23Args),
    /// True and learned UMVCCA projection vectors
    #[command(name = "repro-fig4")]
    ReproFig4(Fig4Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Cca,
    Pcca,
    #[value(name = "2dcca")]
    Tdcca,
    Umvcca,
    Bmvcca,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Cca => ModelKind::Cca,
            ModelArg::Pcca => ModelKind::Pcca,
            ModelArg::Tdcca => ModelKind::Tdcca,
            ModelArg::Umvcca => ModelKind::Umvcca,
            ModelArg::Bmvcca => ModelKind::Bmvcca,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    #[value(name = "1")]
    First,
    #[value(name = "2")]
    Second,
    Both,
}

impl ViewArg {
    fn single(self) -> CliResult<View> {
        match self {
            ViewArg::First => Ok(View::First),
            ViewArg::Second => Ok(View::Second),
            ViewArg::Both => Err(CliError::usage("a single view (1 or 2) is required here")),
        }
    }

    fn source(self) -> SourceView {
        match self {
            ViewArg::First => SourceView::First,
            ViewArg::Second => SourceView::Second,
            ViewArg::Both => SourceView::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Bilateral,
    Unilateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Nn,
    Ptest,
}

/// `--pca-pre` value: a dimension or `none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcaPre(pub Option<usize>);

fn parse_pca_pre(s: &str) -> Result<PcaPre, String> {
    if s == "none" {
        return Ok(PcaPre(None));
    }
    match s.parse::<usize>() {
        Ok(k) if k > 0 => Ok(PcaPre(Some(k))),
        _ => Err(format!("expected a positive integer or \"none\", got {s:?}")),
    }
}

fn parse_split(s: &str) -> Result<(String, usize), String> {
    let (name, count) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=COUNT, got {s:?}"))?;
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(format!("bad split name {name:?}"));
    }
    let count = count.parse::<usize>().map_err(|_| format!("bad split count {count:?}"))?;
    Ok((name.to_string(), count))
}

#[derive(Debug, Args)]
pub struct SynthGenArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Side of square views; overridden per dimension by --m1/--n1/--m2/--n2
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long)]
    pub m1: Option<usize>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub m2: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub d1: usize,
    #[arg(long, default_value_t = 1)]
    pub d2: usize,
    /// Total pairs when no --split is given
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Standard deviation of each noise entry
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed for latents and noise; defaults to --seed
    #[arg(long)]
    pub sample_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = KindArg::Bilateral)]
    pub kind: KindArg,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Frobenius norm of each class's latent offset
    #[arg(long, default_value_t = 0.0)]
    pub class_offset: f64,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
    /// NAME=COUNT; consecutive pairs go to NAME.json, in order
    #[arg(long = "split", value_parser = parse_split)]
    pub splits: Vec<(String, usize)>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Row latent dimension; the subspace size of cca and pcca
    #[arg(long, default_value_t = 1)]
    pub d1: usize,
    /// Column latent dimension
    #[arg(long, default_value_t = 1)]
    pub d2: usize,
    /// umvcca only: choose d2 so that rows × d2 is closest to this
    #[arg(long, conflicts_with = "d2")]
    pub features: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative diagonal jitter for covariance factorizations
    #[arg(long)]
    pub jitter: Option<f64>,
    /// PCA dimension applied to each vectorized view before cca/pcca, or "none"
    #[arg(long, default_value = "none", value_parser = parse_pca_pre)]
    pub pca_pre: PcaPre,
    /// umvcca only: fit on transposed views (left projection)
    #[arg(long)]
    pub transpose: bool,
    /// Model archive path
    #[arg(long)]
    pub out: PathBuf,
    /// Trace CSV path; defaults to the archive path with extension .trace.csv
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = ViewArg::Both)]
    pub view: ViewArg,
    /// Directory receiving one ID.csv per pair
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Code matrix as CSV
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, value_enum)]
    pub view: ViewArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gallery: PathBuf,
    #[arg(long)]
    pub probe: PathBuf,
    #[arg(long, value_enum, default_value_t = Criterion::Nn)]
    pub criterion: Criterion,
    /// Views projected for gallery codes
    #[arg(long, value_enum, default_value_t = ViewArg::Both)]
    pub gallery_view: ViewArg,
    #[arg(long, value_enum, default_value_t = ViewArg::Second)]
    pub probe_view: ViewArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub classify: ClassifyArgs,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 15)]
    pub d: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value = "fig1.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Fig23Args {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    /// Nested training-set sizes
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pub samples: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value = "fig23.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Fig4Args {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value = "fig4.csv")]
    pub out: PathBuf,
}

/// Classification metrics as written by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub model_kind: String,
    pub criterion: Criterion,
    pub feature_count: usize,
    pub probes: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub per_class: BTreeMap<String, ClassCounts>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub total: usize,
    pub correct: usize,
}

pub fn trace_csv(trace: &[TraceRow<f64>]) -> String {
    let names: Vec<&str> = trace.first().map(|r| r.deltas.iter().map(|d| d.0).collect()).unwrap_or_default();
    let mut out = String::from("iteration,objective");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for row in trace {
        let _ = write!(out, "{},{:?}", row.iteration, row.objective);
        for (_, d) in &row.deltas {
            let _ = write!(out, ",{d:?}");
        }
        out.push('\n');
    }
    out
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::SynthGen(a) => synth_gen(&a),
        Command::Fit(a) => fit_cmd(&a),
        Command::Project(a) => project_cmd(&a),
        Command::Reconstruct(a) => reconstruct_cmd(&a),
        Command::Classify(a) => classify_cmd(&a),
        Command::Eval(a) => eval_cmd(&a.classify),
        Command::ReproFig1(a) => {
            let setup = Fig1Setup {
                size: a.size,
                d: a.d,
                samples: a.samples,
                noise: a.noise,
                max_iters: a.max_iters,
                seed: a.seed,
            };
            let trace = fig1_trace(&setup)?;
            write_atomic(&a.out, trace_csv(&trace).as_bytes())?;
            if let Some(d) = trace.last().and_then(|r| r.max_delta()) {
                println!("{}: {} iterations, final max delta {d:.3e}", a.out.display(), trace.len());
            }
            Ok(())
        }
        Command::ReproFig23(a) => {
            let setup = Fig23Setup {
                size: a.size,
                sample_counts: a.samples.clone(),
                noise: a.noise,
                max_iters: a.max_iters,
                seed: a.seed,
            };
            let rows = fig23_rows(&setup)?;
            let mut out = String::from("samples,iteration,recovery_error,abs_correlation\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{:?},{:?}", r.samples, r.iteration, r.recovery_error, r.abs_correlation);
            }
            write_atomic(&a.out, out.as_bytes())?;
            println!("{}: {} rows", a.out.display(), rows.len());
            Ok(())
        }
        Command::ReproFig4(a) => {
            let setup = Fig4Setup {
                size: a.size,
                samples: a.samples,
                noise: a.noise,
                max_iters: a.max_iters,
                seed: a.seed,
            };
            let r = fig4(&setup)?;
            let mut out = String::from("view,index,true,learned\n");
            for (v, (t, l)) in r.vectors.iter().enumerate() {
                for (i, (a, b)) in t.iter().zip(l).enumerate() {
                    let _ = writeln!(out, "{},{},{a:?},{b:?}", v + 1, i + 1);
                }
            }
            write_atomic(&a.out, out.as_bytes())?;
            println!(
                "{}: alignment cosine view1 {:.6} view2 {:.6}",
                a.out.display(),
                r.cosines[0],
                r.cosines[1]
            );
            Ok(())
        }
    }
}

fn synth_gen(a: &SynthGenArgs) -> CliResult<()> {
    let splits = if a.splits.is_empty() {
        vec![("manifest".to_string(), a.samples)]
    } else {
        a.splits.clone()
    };
    let total: usize = splits.iter().map(|s| s.1).sum();
    let spec = SynthSpec {
        m1: a.m1.unwrap_or(a.size),
        n1: a.n1.unwrap_or(a.size),
        m2: a.m2.unwrap_or(a.size),
        n2: a.n2.unwrap_or(a.size),
        d1: a.d1,
        d2: a.d2,
        n_samples: total,
        noise_scale: a.noise,
        kind: match a.kind {
            KindArg::Bilateral => SynthKind::Bilateral,
            KindArg::Unilateral => SynthKind::Unilateral,
        },
        seed: a.seed,
        sample_seed: a.sample_seed,
        class_count: a.classes,
        class_offset_scale: a.class_offset,
        ..SynthSpec::square(a.size, a.d1, a.d2, total, a.noise, a.seed)
    };
    let (data, truth) = generate::<f64>(&spec)?;
    let ext = a.format.extension();
    let mut next = 0;
    for (name, count) in &splits {
        let mut pairs = Vec::with_capacity(*count);
        for i in next..next + count {
            let id = format!("s{i:05}");
            let (x1, x2) = data.pair(i);
            let view1 = PathBuf::from("view1").join(format!("{id}.{ext}"));
            let view2 = PathBuf::from("view2").join(format!("{id}.{ext}"));
            write_matrix(&a.out.join(&view1), x1, a.format)?;
            write_matrix(&a.out.join(&view2), x2, a.format)?;
            write_csv_matrix(&a.out.join("truth").join(format!("z_{id}.csv")), &truth.z[i])?;
            let label = match &truth.labels {
                Some(l) => format!("c{}", l[i]),
                None => "unlabeled".to_string(),
            };
            pairs.push(ManifestPair { id, view1, view2, label });
        }
        next += count;
        let manifest = DatasetManifest {
            format_version: MANIFEST_VERSION,
            pairs,
            matrix_format: a.format,
        };
        manifest.write(&a.out.join(format!("{name}.json")))?;
    }
    for (name, m) in [("l1", &truth.l1), ("l2", &truth.l2), ("r1", &truth.r1), ("r2", &truth.r2)] {
        write_csv_matrix(&a.out.join("truth").join(format!("{name}.csv")), m)?;
    }
    println!("{}: {total} pairs in {} manifest(s)", a.out.display(), splits.len());
    Ok(())
}

fn default_trace_path(out: &Path) -> PathBuf {
    out.with_extension("trace.csv")
}

fn fit_cmd(a: &FitArgs) -> CliResult<()> {
    let ds = load_dataset(&a.manifest)?;
    let kind = ModelKind::from(a.model);
    let mut d2 = a.d2;
    if let Some(budget) = a.features {
        if kind != ModelKind::Umvcca {
            return Err(CliError::usage("--features applies to umvcca only"));
        }
        let (m, n) = ds.data.shape(View::First);
        let (rows, cols) = if a.transpose { (n, m) } else { (m, n) };
        d2 = umvcca_d2_for_budget(rows, cols, budget);
    }
    let req = FitRequest {
        kind,
        d1: a.d1,
        d2,
        max_iters: a.max_iters,
        tol: a.tol,
        seed: a.seed,
        jitter: a.jitter,
        pca_pre: a.pca_pre.0,
        transpose: a.transpose,
    };
    let (trained, trace) = fit(&ds.data, &req)?;
    save_model(&trained, &a.out)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| default_trace_path(&a.out));
    write_atomic(&trace_path, trace_csv(&trace).as_bytes())?;
    println!(
        "{}: {} with {} features, {} iterations{}",
        a.out.display(),
        kind.name(),
        trained.model.feature_count(),
        trained.fit.iterations,
        if trained.fit.converged { ", converged" } else { "" }
    );
    Ok(())
}

fn project_all(p: &Projector, ds: &LoadedDataset, view: ViewArg) -> CliResult<Vec<Matrix>> {
    (0..ds.data.len())
        .map(|i| {
            let (x1, x2) = ds.data.pair(i);
            match view {
                ViewArg::First => p.project(Some(x1), None),
                ViewArg::Second => p.project(None, Some(x2)),
                ViewArg::Both => p.project(Some(x1), Some(x2)),
            }
        })
        .collect()
}

fn project_cmd(a: &ProjectArgs) -> CliResult<()> {
    let trained = load_model(&a.model)?;
    let ds = load_dataset(&a.manifest)?;
    let policy = SpdPolicy::default().with_jitter(trained.fit.jitter);
    let p = Projector::new(&trained.model, policy)?;
    let codes = project_all(&p, &ds, a.view)?;
    for (id, c) in ds.ids.iter().zip(&codes) {
        write_csv_matrix(&a.out.join(format!("{id}.csv")), c)?;
    }
    println!("{}: {} codes", a.out.display(), codes.len());
    Ok(())
}

fn reconstruct_cmd(a: &ReconstructArgs) -> CliResult<()> {
    let trained = load_model(&a.model)?;
    let code = read_csv_matrix(&a.code)?;
    let x = trained.model.reconstruct(&code, a.view.single()?)?;
    write_matrix(&a.out, &x, a.format)?;
    println!("{}: {}×{}", a.out.display(), x.nrows(), x.ncols());
    Ok(())
}

/// `(probe id, true label, predicted label)` for every probe.
pub fn predictions(a: &ClassifyArgs) -> CliResult<(Vec<(String, String, String)>, usize, ModelKind)> {
    let trained = load_model(&a.model)?;
    let gallery = load_dataset(&a.gallery)?;
    let probes = load_dataset(&a.probe)?;
    let probe_view = a.probe_view.single()?;
    let policy = SpdPolicy::default().with_jitter(trained.fit.jitter);
    let p = Projector::new(&trained.model, policy)?;
    let kind = trained.model.kind();
    let gallery_codes = project_all(&p, &gallery, a.gallery_view)?;
    let mut out = Vec::with_capacity(probes.data.len());
    match a.criterion {
        Criterion::Nn => {
            let codes = gallery_codes
                .into_iter()
                .map(|c| Ok(Code::new(c, a.gallery_view.source(), kind)?))
                .collect::<CliResult<Vec<_>>>()?;
            let g = Gallery::new(codes, gallery.labels.clone())?;
            let probe_codes = project_all(&p, &probes, a.probe_view)?;
            for (i, c) in probe_codes.into_iter().enumerate() {
                let code = Code::new(c, a.probe_view.source(), kind)?;
                let label = classify_nn(&g, &code)?;
                out.push((probes.ids[i].clone(), probes.labels[i].clone(), label.to_string()));
            }
        }
        Criterion::Ptest => {
            for (i, x) in probes.view(probe_view).iter().enumerate() {
                let label = p.classify_ptest(&gallery_codes, &gallery.labels, x, probe_view)?;
                out.push((probes.ids[i].clone(), probes.labels[i].clone(), label.to_string()));
            }
        }
    }
    Ok((out, trained.model.feature_count(), kind))
}

fn classify_cmd(a: &ClassifyArgs) -> CliResult<()> {
    let (rows, _, _) = predictions(a)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::file(&a.out, e);
    w.write_record(["id", "label", "predicted"]).map_err(io)?;
    for (id, label, pred) in &rows {
        w.write_record([id, label, pred]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::file(&a.out, e))?;
    write_atomic(&a.out, &bytes)?;
    println!("{}: {} predictions", a.out.display(), rows.len());
    Ok(())
}

pub fn metrics_from(rows: &[(String, String, String)], kind: ModelKind, criterion: Criterion, features: usize) -> Metrics {
    let mut per_class: BTreeMap<String, ClassCounts> = BTreeMap::new();
    for (_, label, pred) in rows {
        let c = per_class.entry(label.clone()).or_default();
        c.total += 1;
        c.correct += usize::from(label == pred);
    }
    let errors = rows.iter().filter(|(_, l, p)| l != p).count();
    Metrics {
        model_kind: kind.name().to_string(),
        criterion,
        feature_count: features,
        probes: rows.len(),
        errors,
        error_rate: if rows.is_empty() { 0.0 } else { errors as f64 / rows.len() as f64 },
        per_class,
    }
}

fn eval_cmd(a: &ClassifyArgs) -> CliResult<()> {
    let (rows, features, kind) = predictions(a)?;
    let m = metrics_from(&rows, kind, a.criterion, features);
    let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::file(&a.out, e))?;
    write_atomic(&a.out, text.as_bytes())?;
    println!("{}: error rate {:.4} over {} probes", a.out.display(), m.error_rate, m.probes);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn trace_header_follows_delta_names() {
        let rows = vec![TraceRow {
            iteration: 1,
            objective: -2.5,
            deltas: vec![("delta_R1", 0.25), ("delta_R2", 0.5)],
        }];
        assert_eq!(trace_csv(&rows), "iteration,objective,delta_R1,delta_R2\n1,-2.5,0.25,0.5\n");
        assert_eq!(trace_csv(&[]), "iteration,objective\n");
    }

    #[test]
    fn metrics_count_per_class() {
        let r = |a: &str, b: &str| ("x".to_string(), a.to_string(), b.to_string());
        let m = metrics_from(&[r("a", "a"), r("a", "b"), r("b", "b")], ModelKind::Cca, Criterion::Nn, 3);
        assert_eq!(m.errors, 1);
        assert!((m.error_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class["a"], ClassCounts { total: 2, correct: 1 });
    }

    #[test]
    fn pca_flag_parses_none_and_counts() {
        assert_eq!(parse_pca_pre("none"), Ok(PcaPre(None)));
        assert_eq!(parse_pca_pre("7"), Ok(PcaPre(Some(7))));
        assert!(parse_pca_pre("0").is_err());
        assert!(parse_split("train=3").is_ok());
        assert!(parse_split("train").is_err());
    }
}
