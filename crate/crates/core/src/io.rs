//! JSON documents exchanged between pipeline stages.
//!
//! Floats are written with serde_json's shortest round-trip representation,
//! so every document reloads bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimators::{Branch, EstimateResult};
use crate::sensing::{gaussian_ensemble, MeasurementModel, MeasurementSet, SensingMatrix};
use crate::vector::{IndexSet, SparseSignal, Vector};

/// Matrices with more entries than this are stored as provenance only and
/// regenerated from their seed on load.
pub const MAX_STORED_ENTRIES: usize = 10_000_000;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDocument {
    pub d: usize,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub support: IndexSet,
    pub x: Vector,
}

impl SignalDocument {
    pub fn new(signal: &SparseSignal, seed: Option<u64>) -> Self {
        SignalDocument {
            d: signal.dim(),
            s: signal.sparsity(),
            seed,
            support: signal.support().clone(),
            x: signal.vector().clone(),
        }
    }

    pub fn signal(&self) -> Result<SparseSignal> {
        check_dim(self.d, self.x.dim())?;
        let signal = SparseSignal::new(self.x.clone())?;
        if signal.support() != &self.support || signal.sparsity() != self.s {
            return Err(Error::invalid("signal document support disagrees with its entries"));
        }
        Ok(signal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub n: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    /// Row-major CSV holding the entries, relative to this document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<String>,
}

impl MatrixDocument {
    /// Inline rows when small enough, otherwise provenance only (which needs a
    /// seed to be reloadable).
    pub fn new(a: &SensingMatrix) -> Result<Self> {
        let entries = a.rows() * a.cols();
        let rows = if entries <= MAX_STORED_ENTRIES {
            Some(a.row_vecs())
        } else if a.seed().is_some() {
            None
        } else {
            return Err(Error::Resource(format!(
                "unseeded {} x {} matrix is too large to store inline",
                a.rows(),
                a.cols()
            )));
        };
        Ok(MatrixDocument {
            n: a.rows(),
            d: a.cols(),
            seed: a.seed(),
            rows,
            sidecar: None,
        })
    }

    /// Rebuilds the matrix: inline rows, then the sidecar, then the seed.
    pub fn matrix(&self, base: &Path) -> Result<SensingMatrix> {
        let a = if let Some(rows) = &self.rows {
            SensingMatrix::from_rows(rows)?.with_seed(self.seed)
        } else if let Some(sidecar) = &self.sidecar {
            let path: PathBuf = base.join(sidecar);
            SensingMatrix::from_csv(&fs::read_to_string(&path)?)?.with_seed(self.seed)
        } else if let Some(seed) = self.seed {
            gaussian_ensemble(self.n, self.d, seed)?
        } else {
            return Err(Error::invalid("matrix document has no rows, sidecar or seed"));
        };
        check_dim(self.n, a.rows())?;
        check_dim(self.d, a.cols())?;
        Ok(a)
    }
}

/// Writes `a` to `path`, plus `{stem}.csv` next to it when `sidecar` is set.
pub fn write_matrix(a: &SensingMatrix, path: &Path, sidecar: bool) -> Result<()> {
    let mut doc = MatrixDocument::new(a)?;
    if sidecar && doc.rows.is_some() {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("matrix");
        let name = format!("{stem}.csv");
        fs::write(path.with_file_name(&name), a.to_csv())?;
        doc.rows = None;
        doc.sidecar = Some(name);
    }
    fs::write(path, to_json(&doc)?)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<SensingMatrix> {
    let doc: MatrixDocument = read_json(path)?;
    doc.matrix(path.parent().unwrap_or(Path::new(".")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementDocument {
    pub n: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: MeasurementModel,
    pub y: Vec<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dither: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl MeasurementDocument {
    pub fn new(y: &MeasurementSet, d: usize) -> Self {
        MeasurementDocument {
            n: y.len(),
            d,
            seed: y.seed,
            model: y.model.clone(),
            y: y.y.clone(),
            dither: y.dither.clone(),
            warnings: y.warnings.clone(),
        }
    }

    pub fn measurements(&self) -> Result<MeasurementSet> {
        check_dim(self.n, self.y.len())?;
        let set = MeasurementSet {
            y: self.y.clone(),
            model: self.model.clone(),
            dither: self.dither.clone(),
            seed: self.seed,
            warnings: self.warnings.clone(),
        };
        set.validate()?;
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub variant: String,
    /// `|t0|` for norm estimates, reported so tiny values can be spotted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub score_vector: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub direction: Vector,
    pub support: IndexSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    pub k: usize,
    pub meta: EstimateMeta,
}

impl EstimateDocument {
    pub fn new(est: &EstimateResult, variant: &str) -> Self {
        EstimateDocument {
            direction: est.direction.clone(),
            support: est.support.clone(),
            scaled: est.scaled.clone(),
            branch: est.branch,
            k: est.k,
            meta: EstimateMeta {
                variant: variant.to_string(),
                t0: est.t0.map(f64::abs),
                score_vector: est.score_vector.clone(),
            },
        }
    }
}
