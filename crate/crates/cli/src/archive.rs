//! Versioned JSON model archives.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mvcca::{BilateralView, Bmvcca, Cca, Matrix, ModelKind, Pcca, Tdcca, Umvcca};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::write_atomic;
use crate::models::{FitInfo, FittedModel, Trained, VectorPrep};
use crate::pca::Pca;

pub const ARCHIVE_VERSION: u32 = 1;

/// Row-major entries with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Matrix> for StoredMatrix {
    fn from(m: &Matrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitMetadata {
    pub seed: u64,
    pub iterations: usize,
    pub final_objective: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArchive {
    pub format_version: u32,
    pub model_kind: String,
    pub matrices: BTreeMap<String, StoredMatrix>,
    pub hyperparameters: BTreeMap<String, f64>,
    pub fit: FitMetadata,
}

pub fn parse_kind(name: &str) -> Option<ModelKind> {
    [ModelKind::Cca, ModelKind::Pcca, ModelKind::Tdcca, ModelKind::Umvcca, ModelKind::Bmvcca]
        .into_iter()
        .find(|k| k.name() == name)
}

fn col(v: &DVector<f64>) -> Matrix {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

struct Writer {
    matrices: BTreeMap<String, StoredMatrix>,
    hyper: BTreeMap<String, f64>,
}

impl Writer {
    fn put(&mut self, name: &str, m: &Matrix) {
        self.matrices.insert(name.to_string(), m.into());
    }

    fn hyper(&mut self, name: &str, v: usize) {
        self.hyper.insert(name.to_string(), v as f64);
    }

    fn preps(&mut self, prep: &[VectorPrep; 2]) {
        for (i, p) in prep.iter().enumerate() {
            self.hyper(&format!("m{}", i + 1), p.shape.0);
            self.hyper(&format!("n{}", i + 1), p.shape.1);
            if let Some(pca) = &p.pca {
                self.hyper("pca_pre", pca.dim());
                self.put(&format!("pca{}_mean", i + 1), &col(&pca.mean));
                self.put(&format!("pca{}_basis", i + 1), &pca.basis);
            }
        }
    }
}

pub fn to_archive(t: &Trained) -> ModelArchive {
    let mut w = Writer {
        matrices: BTreeMap::new(),
        hyper: BTreeMap::new(),
    };
    w.hyper.insert("jitter".into(), t.fit.jitter);
    match &t.model {
        FittedModel::Cca { model, prep } => {
            w.hyper("d", model.dim());
            w.preps(prep);
            w.put("w1", &model.w1);
            w.put("w2", &model.w2);
            w.put("correlations", &col(&model.correlations));
            w.put("mean1", &col(&model.mean1));
            w.put("mean2", &col(&model.mean2));
        }
        FittedModel::Pcca { model, prep } => {
            w.hyper("d", model.dim());
            w.preps(prep);
            w.put("w1", &model.w1);
            w.put("w2", &model.w2);
            w.put("psi1", &model.psi1);
            w.put("psi2", &model.psi2);
            w.put("mean1", &col(&model.mean1));
            w.put("mean2", &col(&model.mean2));
        }
        FittedModel::Tdcca(m) => {
            w.hyper("d1", m.l1.ncols());
            w.hyper("d2", m.r1.ncols());
            for (name, x) in [("l1", &m.l1), ("l2", &m.l2), ("r1", &m.r1), ("r2", &m.r2), ("mean1", &m.mean1), ("mean2", &m.mean2)] {
                w.put(name, x);
            }
            w.put("correlations", &col(&m.correlations));
        }
        FittedModel::Umvcca { model, transpose } => {
            w.hyper("d2", model.d2());
            w.hyper("transpose", usize::from(*transpose));
            w.put("r", &model.r);
            w.put("psi_r1", &model.psi_r1);
            w.put("psi_r2", &model.psi_r2);
            w.put("mean1", &model.mean1);
            w.put("mean2", &model.mean2);
        }
        FittedModel::Bmvcca(m) => {
            w.hyper("d1", m.d1());
            w.hyper("d2", m.d2());
            for (i, v) in m.views.iter().enumerate() {
                let j = i + 1;
                w.put(&format!("l{j}"), &v.l);
                w.put(&format!("r{j}"), &v.r);
                w.put(&format!("psi_l{j}"), &v.psi_l);
                w.put(&format!("psi_r{j}"), &v.psi_r);
                w.put(&format!("mean{j}"), &v.mean);
            }
        }
    }
    ModelArchive {
        format_version: ARCHIVE_VERSION,
        model_kind: t.model.kind().name().to_string(),
        matrices: w.matrices,
        hyperparameters: w.hyper,
        fit: FitMetadata {
            seed: t.fit.seed,
            iterations: t.fit.iterations,
            final_objective: t.fit.final_objective,
            converged: t.fit.converged,
        },
    }
}

struct Reader {
    kind: &'static str,
    matrices: BTreeMap<String, StoredMatrix>,
    hyper: BTreeMap<String, f64>,
}

impl Reader {
    fn err(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::usage(format!("{} archive: {msg}", self.kind))
    }

    fn count(&self, name: &str) -> CliResult<usize> {
        match self.hyper.get(name) {
            Some(&v) if v >= 0.0 && v.fract() == 0.0 && v < 1e9 => Ok(v as usize),
            Some(v) => Err(self.err(format!("hyperparameter {name} = {v} is not a count"))),
            None => Err(self.err(format!("missing hyperparameter {name}"))),
        }
    }

    fn optional_count(&self, name: &str) -> CliResult<Option<usize>> {
        if self.hyper.contains_key(name) {
            self.count(name).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Removes a matrix, checking any dimension that is given.
    fn take(&mut self, name: &str, rows: Option<usize>, cols: Option<usize>) -> CliResult<Matrix> {
        let s = self
            .matrices
            .remove(name)
            .ok_or_else(|| self.err(format!("missing matrix {name}")))?;
        if s.data.len() != s.rows * s.cols {
            return Err(self.err(format!(
                "matrix {name} declares {}×{} but holds {} entries",
                s.rows,
                s.cols,
                s.data.len()
            )));
        }
        for (want, got, what) in [(rows, s.rows, "rows"), (cols, s.cols, "columns")] {
            if want.is_some_and(|w| w != got) {
                return Err(self.err(format!("matrix {name} has {got} {what}, expected {}", want.unwrap_or(0))));
            }
        }
        Ok(DMatrix::from_row_slice(s.rows, s.cols, &s.data))
    }

    fn take_vec(&mut self, name: &str, len: Option<usize>) -> CliResult<DVector<f64>> {
        let m = self.take(name, len, Some(1))?;
        Ok(m.column(0).into_owned())
    }

    fn finish(self) -> CliResult<()> {
        match self.matrices.keys().next() {
            Some(extra) => Err(self.err(format!("unexpected matrix {extra}"))),
            None => Ok(()),
        }
    }

    fn preps(&mut self) -> CliResult<([VectorPrep; 2], [usize; 2])> {
        let k = self.optional_count("pca_pre")?;
        let mut preps = Vec::new();
        let mut dims = [0; 2];
        for j in 1..=2 {
            let shape = (self.count(&format!("m{j}"))?, self.count(&format!("n{j}"))?);
            let raw = shape.0 * shape.1;
            let pca = match k {
                Some(k) => Some(Pca {
                    mean: self.take_vec(&format!("pca{j}_mean"), Some(raw))?,
                    basis: self.take(&format!("pca{j}_basis"), Some(raw), Some(k))?,
                }),
                None => None,
            };
            dims[j - 1] = k.unwrap_or(raw);
            preps.push(VectorPrep { shape, pca });
        }
        let p2 = preps.pop().expect("two views");
        let p1 = preps.pop().expect("two views");
        Ok(([p1, p2], dims))
    }
}

pub fn from_archive(a: ModelArchive) -> CliResult<Trained> {
    if a.format_version != ARCHIVE_VERSION {
        return Err(CliError::usage(format!(
            "unsupported archive format_version {} (this build reads {ARCHIVE_VERSION})",
            a.format_version
        )));
    }
    let kind = parse_kind(&a.model_kind)
        .ok_or_else(|| CliError::usage(format!("unknown model_kind {:?}", a.model_kind)))?;
    let jitter = a.hyperparameters.get("jitter").copied().unwrap_or(0.0);
    let mut r = Reader {
        kind: kind.name(),
        matrices: a.matrices,
        hyper: a.hyperparameters,
    };
    let model = match kind {
        ModelKind::Cca => {
            let d = r.count("d")?;
            let (prep, [p1, p2]) = r.preps()?;
            let model = Cca {
                w1: r.take("w1", Some(p1), Some(d))?,
                w2: r.take("w2", Some(p2), Some(d))?,
                correlations: r.take_vec("correlations", Some(d))?,
                mean1: r.take_vec("mean1", Some(p1))?,
                mean2: r.take_vec("mean2", Some(p2))?,
            };
            FittedModel::Cca { model, prep }
        }
        ModelKind::Pcca => {
            let d = r.count("d")?;
            let (prep, [p1, p2]) = r.preps()?;
            let model = Pcca {
                w1: r.take("w1", Some(p1), Some(d))?,
                w2: r.take("w2", Some(p2), Some(d))?,
                psi1: r.take("psi1", Some(p1), Some(p1))?,
                psi2: r.take("psi2", Some(p2), Some(p2))?,
                mean1: r.take_vec("mean1", Some(p1))?,
                mean2: r.take_vec("mean2", Some(p2))?,
            };
            FittedModel::Pcca { model, prep }
        }
        ModelKind::Tdcca => {
            let (d1, d2) = (r.count("d1")?, r.count("d2")?);
            let mean1 = r.take("mean1", None, None)?;
            let mean2 = r.take("mean2", None, None)?;
            FittedModel::Tdcca(Tdcca {
                l1: r.take("l1", Some(mean1.nrows()), Some(d1))?,
                l2: r.take("l2", Some(mean2.nrows()), Some(d1))?,
                r1: r.take("r1", Some(mean1.ncols()), Some(d2))?,
                r2: r.take("r2", Some(mean2.ncols()), Some(d2))?,
                correlations: r.take_vec("correlations", None)?,
                mean1,
                mean2,
            })
        }
        ModelKind::Umvcca => {
            let d2 = r.count("d2")?;
            let transpose = match r.count("transpose")? {
                0 => false,
                1 => true,
                v => return Err(r.err(format!("transpose must be 0 or 1, got {v}"))),
            };
            let mean1 = r.take("mean1", None, None)?;
            let mean2 = r.take("mean2", Some(mean1.nrows()), None)?;
            let (n1, n2) = (mean1.ncols(), mean2.ncols());
            let model = Umvcca {
                r: r.take("r", Some(n1 + n2), Some(d2))?,
                psi_r1: r.take("psi_r1", Some(n1), Some(n1))?,
                psi_r2: r.take("psi_r2", Some(n2), Some(n2))?,
                mean1,
                mean2,
            };
            FittedModel::Umvcca { model, transpose }
        }
        ModelKind::Bmvcca => {
            let (d1, d2) = (r.count("d1")?, r.count("d2")?);
            let mut views = Vec::new();
            for j in 1..=2 {
                let mean = r.take(&format!("mean{j}"), None, None)?;
                let (m, n) = mean.shape();
                views.push(BilateralView {
                    l: r.take(&format!("l{j}"), Some(m), Some(d1))?,
                    r: r.take(&format!("r{j}"), Some(n), Some(d2))?,
                    psi_l: r.take(&format!("psi_l{j}"), Some(m), Some(m))?,
                    psi_r: r.take(&format!("psi_r{j}"), Some(n), Some(n))?,
                    mean,
                });
            }
            let second = views.pop().expect("two views");
            let first = views.pop().expect("two views");
            FittedModel::Bmvcca(Bmvcca::new(first, second)?)
        }
    };
    r.finish()?;
    Ok(Trained {
        model,
        fit: FitInfo {
            seed: a.fit.seed,
            iterations: a.fit.iterations,
            final_objective: a.fit.final_objective,
            converged: a.fit.converged,
            jitter,
        },
    })
}

pub fn archive_to_string(t: &Trained) -> CliResult<String> {
    serde_json::to_string_pretty(&to_archive(t)).map_err(|e| CliError::usage(format!("cannot encode archive: {e}")))
}

pub fn save_model(t: &Trained, path: &Path) -> CliResult<()> {
    write_atomic(path, archive_to_string(t)?.as_bytes())
}

pub fn parse_archive(text: &str) -> Result<Trained, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(ARCHIVE_VERSION) => {}
        Some(v) => return Err(format!("unsupported archive format_version {v} (this build reads {ARCHIVE_VERSION})")),
        None => return Err("archive has no integer format_version".into()),
    }
    let archive: ModelArchive = serde_json::from_value(value).map_err(|e| e.to_string())?;
    from_archive(archive).map_err(|e| e.to_string())
}

pub fn load_model(path: &Path) -> CliResult<Trained> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_archive(&text).map_err(|msg| CliError::file(path, msg))
}
