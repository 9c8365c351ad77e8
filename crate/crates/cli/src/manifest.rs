//! JSON dataset manifests.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use mvcca::{Dataset, Matrix, View};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_matrix, write_atomic, MatrixFormat};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestPair {
    pub id: String,
    /// Relative paths resolve against the manifest's directory.
    pub view1: PathBuf,
    pub view2: PathBuf,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub pairs: Vec<ManifestPair>,
    pub matrix_format: MatrixFormat,
}

/// Paired matrices with their ids and labels, in manifest order.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub data: Dataset,
    pub ids: Vec<String>,
    pub labels: Vec<String>,
}

impl LoadedDataset {
    pub fn view(&self, v: View) -> &[Matrix] {
        self.data.view(v)
    }
}

impl DatasetManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        let m: DatasetManifest = serde_json::from_str(&text).map_err(|e| CliError::file(path, e))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(CliError::file(
                path,
                format!("unsupported manifest format_version {}", m.format_version),
            ));
        }
        if m.pairs.is_empty() {
            return Err(CliError::file(path, "manifest lists no pairs"));
        }
        let mut seen = HashSet::new();
        for p in &m.pairs {
            if !seen.insert(p.id.as_str()) {
                return Err(CliError::file(path, format!("duplicate pair id {:?}", p.id)));
            }
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::file(path, e))?;
        write_atomic(path, text.as_bytes())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_view(base: &Path, files: &[&Path], format: MatrixFormat) -> CliResult<Vec<Matrix>> {
    let mut out: Vec<Matrix> = Vec::with_capacity(files.len());
    for f in files {
        let path = resolve(base, f);
        if !path.is_file() {
            return Err(CliError::file(&path, "missing file"));
        }
        let m = read_matrix(&path, format)?;
        if let Some(first) = out.first() {
            if first.shape() != m.shape() {
                return Err(CliError::file(
                    &path,
                    format!("matrix is {:?} but earlier files in this view are {:?}", m.shape(), first.shape()),
                ));
            }
        }
        out.push(m);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> CliResult<LoadedDataset> {
    let manifest = DatasetManifest::read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let v1: Vec<&Path> = manifest.pairs.iter().map(|p| p.view1.as_path()).collect();
    let v2: Vec<&Path> = manifest.pairs.iter().map(|p| p.view2.as_path()).collect();
    let view1 = load_view(base, &v1, manifest.matrix_format)?;
    let view2 = load_view(base, &v2, manifest.matrix_format)?;
    let data = Dataset::new(view1, view2).map_err(|e| CliError::file(path, e))?;
    Ok(LoadedDataset {
        data,
        ids: manifest.pairs.iter().map(|p| p.id.clone()).collect(),
        labels: manifest.pairs.iter().map(|p| p.label.clone()).collect(),
    })
}
