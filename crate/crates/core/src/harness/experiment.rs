//! Monte Carlo experiment grids over `(d, n, k)`.
//!
//! Each trial's randomness is derived from `(master_seed, d, n, trial)` and a
//! purpose tag, so cells are independent, individually re-runnable, and the
//! output does not depend on the parallel schedule. All sparsity budgets of a
//! trial share the same signal, matrix and measurements.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, MetricTarget};
use super::signal::{generate_signal_with, SignalClass};
use crate::error::{Error, Result};
use crate::estimators::{estimate_direction_from_scores, estimate_with_norm_from_scores, Branch};
use crate::format::fmt_sig;
use crate::rng::{derive_seed, sub_seed, Purpose};
use crate::sensing::{streamed_scores, MeasurementModel};
use crate::theory::misspec_tail;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SparseApprox,
    SupportRecovery,
    NormEstimation,
    Misspecification,
}

/// How the dither scale of a dithered model is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    /// `R` is used as given.
    #[default]
    Absolute,
    /// `R` multiplies each trial's signal norm.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub d_grid: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<usize>>,
    pub model: MeasurementModel,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub experiment_kind: ExperimentKind,
    /// Trial CSV path; aggregates go next to it with an `_aggregate` suffix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default)]
    pub signal: SignalClass,
    #[serde(default)]
    pub radius: RadiusMode,
    /// Wall-clock times make the CSV non-reproducible, so they are opt-in.
    #[serde(default)]
    pub record_elapsed: bool,
}

fn default_trials() -> usize {
    100
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, model: MeasurementModel, s: usize, k: usize) -> Self {
        ExperimentSpec {
            d_grid: Vec::new(),
            n_grid: Vec::new(),
            s,
            k: Some(k),
            k_grid: None,
            model,
            trials: default_trials(),
            master_seed: Some(0),
            experiment_kind: kind,
            output_path: None,
            signal: SignalClass::default(),
            radius: RadiusMode::Absolute,
            record_elapsed: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Sparsity budgets, in the order given.
    pub fn ks(&self) -> Vec<usize> {
        match (&self.k_grid, self.k) {
            (Some(g), _) => g.clone(),
            (None, Some(k)) => vec![k],
            (None, None) => Vec::new(),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.master_seed
            .ok_or_else(|| Error::invalid("experiment spec has no master_seed"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_some() == self.k_grid.is_some() {
            return Err(Error::invalid("exactly one of k and k_grid must be given"));
        }
        let ks = self.ks();
        if ks.is_empty() || ks.contains(&0) {
            return Err(Error::invalid("sparsity budgets must be positive"));
        }
        if self.s == 0 {
            return Err(Error::invalid("s must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        if self.d_grid.contains(&0) || self.n_grid.contains(&0) {
            return Err(Error::invalid("grid entries must be positive"));
        }
        let kmax = ks.iter().copied().max().unwrap_or(0);
        for &d in &self.d_grid {
            if self.s > d || kmax > d {
                return Err(Error::invalid(format!(
                    "s = {} and k <= {kmax} must not exceed d = {d}",
                    self.s
                )));
            }
        }
        self.model.validate(None)?;
        if let crate::sensing::MeasurementModel::SignFlip {
            p: crate::sensing::FlipProbability::PerMeasurement(ps),
        } = &self.model
        {
            for &n in &self.n_grid {
                if ps.len() != n {
                    return Err(Error::invalid(
                        "per-measurement flip probabilities need a single matching n",
                    ));
                }
            }
        }
        let dithered = matches!(self.model, MeasurementModel::Dithered { .. });
        if self.experiment_kind == ExperimentKind::NormEstimation && !dithered {
            return Err(Error::invalid("norm estimation needs the dithered model"));
        }
        if dithered && ks.iter().any(|&k| k < 2) {
            return Err(Error::invalid("dithered experiments need k >= 2"));
        }
        Ok(())
    }

    fn trials_path(&self) -> Option<PathBuf> {
        self.output_path.as_ref().map(PathBuf::from)
    }
}

/// Where the aggregate table for a trial CSV at `path` is written.
pub fn aggregate_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_aggregate.csv"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub d: usize,
    pub n: usize,
    pub s: usize,
    pub k: usize,
    pub model: String,
    pub trial: usize,
    pub l2_error: f64,
    pub support_symdiff: usize,
    pub norm_abs_error: Option<f64>,
    pub norm_rel_error: Option<f64>,
    pub branch: Option<Branch>,
    pub elapsed_s: Option<f64>,
    /// `||z - x||_inf` between the signal and its normalized top-k
    /// truncation (misspecification runs only; not written to CSV).
    pub tail_inf: Option<f64>,
}

/// Seed for one trial of one grid cell.
pub fn trial_seed(master: u64, d: usize, n: usize, trial: usize) -> u64 {
    derive_seed(master, &[Purpose::Trial as u64, d as u64, n as u64, trial as u64])
}

/// Runs one trial for every sparsity budget of the spec.
pub fn run_trial(spec: &ExperimentSpec, d: usize, n: usize, trial: usize) -> Result<Vec<TrialResult>> {
    let wrap = |e: Error| Error::Trial {
        d,
        n,
        trial,
        source: Box::new(e),
    };
    let start = Instant::now();
    let seed = trial_seed(spec.seed()?, d, n, trial);
    let truth = generate_signal_with(d, spec.s, sub_seed(seed, Purpose::Signal), &spec.signal).map_err(wrap)?;
    let model = match (&spec.model, spec.radius) {
        (MeasurementModel::Dithered { r }, RadiusMode::Relative) => MeasurementModel::Dithered {
            r: r * truth.norm(),
        },
        (m, _) => m.clone(),
    };
    let scores = streamed_scores(
        n,
        d,
        sub_seed(seed, Purpose::Matrix),
        truth.vector(),
        &model,
        sub_seed(seed, Purpose::Flip),
    )
    .map_err(wrap)?;

    let label = model.label();
    let mut out = Vec::new();
    for k in spec.ks() {
        let estimate = match &model {
            MeasurementModel::Dithered { r } => estimate_with_norm_from_scores(scores.clone(), *r, k),
            _ => estimate_direction_from_scores(scores.clone(), k),
        }
        .map_err(wrap)?;
        let (target, tail_inf) = match spec.experiment_kind {
            ExperimentKind::Misspecification => (
                MetricTarget::TopK(k),
                Some(misspec_tail(&truth, k).map_err(wrap)?.inf_term),
            ),
            _ => (MetricTarget::Signal, None),
        };
        let m = metrics(&estimate, &truth, target).map_err(wrap)?;
        out.push(TrialResult {
            d,
            n,
            s: spec.s,
            k,
            model: label.clone(),
            trial,
            l2_error: m.l2_error,
            support_symdiff: m.support_symdiff,
            norm_abs_error: m.norm_abs_error,
            norm_rel_error: m.norm_rel_error,
            branch: estimate.branch,
            elapsed_s: None,
            tail_inf,
        });
    }
    if spec.record_elapsed {
        let elapsed = start.elapsed().as_secs_f64();
        out.iter_mut().for_each(|r| r.elapsed_s = Some(elapsed));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    /// Mean, median and sample standard deviation; `None` when empty.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let len = values.len() as f64;
        let mean = values.iter().sum::<f64>() / len;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Summary { mean, median, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub d: usize,
    pub n: usize,
    pub s: usize,
    pub k: usize,
    pub model: String,
    pub trials: usize,
    pub failures: usize,
    pub l2_error: Option<Summary>,
    pub support_symdiff: Option<Summary>,
    pub norm_abs_error: Option<Summary>,
    pub norm_rel_error: Option<Summary>,
    /// Fraction of trials with `support_symdiff == 0`.
    pub exact_support_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub d: usize,
    pub n: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GridReport {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<AggregateResult>,
    pub failures: Vec<TrialFailure>,
}

impl GridReport {
    pub fn aggregate(&self, d: usize, n: usize, k: usize) -> Option<&AggregateResult> {
        self.aggregates
            .iter()
            .find(|a| a.d == d && a.n == n && a.k == k)
    }

    pub fn cell(&self, d: usize, n: usize, k: usize) -> impl Iterator<Item = &TrialResult> {
        self.trials
            .iter()
            .filter(move |t| t.d == d && t.n == n && t.k == k)
    }
}

/// Runs every trial of every grid cell, aggregates, and writes the CSVs when
/// the spec names an output path. Failed trials are recorded and the grid
/// carries on.
pub fn run_grid(spec: &ExperimentSpec) -> Result<GridReport> {
    spec.validate()?;
    spec.seed()?;
    let jobs: Vec<(usize, usize, usize)> = spec
        .d_grid
        .iter()
        .flat_map(|&d| {
            spec.n_grid
                .iter()
                .flat_map(move |&n| (0..spec.trials).map(move |t| (d, n, t)))
        })
        .collect();
    let outcomes: Vec<Result<Vec<TrialResult>>> = jobs
        .par_iter()
        .map(|&(d, n, t)| run_trial(spec, d, n, t))
        .collect();

    let mut report = GridReport::default();
    for (&(d, n, trial), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(rows) => report.trials.extend(rows),
            Err(e) => report.failures.push(TrialFailure {
                d,
                n,
                trial,
                message: e.to_string(),
            }),
        }
    }
    report.trials.sort_by_key(|t| (t.d, t.n, t.trial, t.k));
    report.aggregates = aggregate(spec, &report);

    if let Some(path) = spec.trials_path() {
        std::fs::write(&path, trials_csv(&report.trials)?)?;
        std::fs::write(aggregate_path(&path), aggregate_csv(&report.aggregates)?)?;
    }
    Ok(report)
}

fn aggregate(spec: &ExperimentSpec, report: &GridReport) -> Vec<AggregateResult> {
    let mut groups: BTreeMap<(usize, usize, usize), Vec<&TrialResult>> = BTreeMap::new();
    for &d in &spec.d_grid {
        for &n in &spec.n_grid {
            for k in spec.ks() {
                groups.entry((d, n, k)).or_default();
            }
        }
    }
    for t in &report.trials {
        groups.entry((t.d, t.n, t.k)).or_default().push(t);
    }
    let label = spec.model.label();
    groups
        .into_iter()
        .map(|((d, n, k), rows)| {
            let pick = |f: fn(&TrialResult) -> Option<f64>| -> Option<Summary> {
                Summary::of(&rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let failures = report
                .failures
                .iter()
                .filter(|f| f.d == d && f.n == n)
                .count();
            AggregateResult {
                d,
                n,
                s: spec.s,
                k,
                model: rows.first().map_or_else(|| label.clone(), |r| r.model.clone()),
                trials: rows.len(),
                failures,
                l2_error: pick(|r| Some(r.l2_error)),
                support_symdiff: pick(|r| Some(r.support_symdiff as f64)),
                norm_abs_error: pick(|r| r.norm_abs_error),
                norm_rel_error: pick(|r| r.norm_rel_error),
                exact_support_rate: (!rows.is_empty()).then(|| {
                    rows.iter().filter(|r| r.support_symdiff == 0).count() as f64 / rows.len() as f64
                }),
            }
        })
        .collect()
}

pub const TRIAL_HEADER: [&str; 12] = [
    "d",
    "n",
    "s",
    "k",
    "model",
    "trial",
    "l2_error",
    "support_symdiff",
    "norm_abs_error",
    "norm_rel_error",
    "branch",
    "elapsed_s",
];

fn num(x: f64) -> String {
    fmt_sig(x, 9)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn trials_csv(rows: &[TrialResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRIAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.k.to_string(),
            r.model.clone(),
            r.trial.to_string(),
            num(r.l2_error),
            r.support_symdiff.to_string(),
            opt(r.norm_abs_error),
            opt(r.norm_rel_error),
            r.branch.map(|b| b.as_str().to_string()).unwrap_or_default(),
            opt(r.elapsed_s),
        ])?;
    }
    finish(w)
}

const METRICS: [&str; 4] = ["l2_error", "support_symdiff", "norm_abs_error", "norm_rel_error"];

pub fn aggregate_csv(rows: &[AggregateResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["d", "n", "s", "k", "model", "trials", "failures"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in METRICS {
        for suffix in ["mean", "median", "std"] {
            header.push(format!("{m}_{suffix}"));
        }
    }
    header.push("exact_support_rate".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.d.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.k.to_string(),
            r.model.clone(),
            r.trials.to_string(),
            r.failures.to_string(),
        ];
        for s in [r.l2_error, r.support_symdiff, r.norm_abs_error, r.norm_rel_error] {
            match s {
                Some(s) => rec.extend([num(s.mean), num(s.median), num(s.std)]),
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        rec.push(opt(r.exact_support_rate));
        w.write_record(&rec)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::FlipProbability;

    fn small(kind: ExperimentKind, model: MeasurementModel) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(kind, model, 3, 3);
        spec.d_grid = vec![30];
        spec.n_grid = vec![200];
        spec.trials = 4;
        spec.master_seed = Some(17);
        spec
    }

    #[test]
    fn spec_json_rejects_unknown_fields() {
        let ok = r#"{"d_grid":[10],"n_grid":[20],"s":2,"k":2,
            "model":{"kind":"noiseless_sign"},"master_seed":1,
            "experiment_kind":"sparse_approx"}"#;
        let spec = ExperimentSpec::from_json(ok).unwrap();
        assert_eq!(spec.trials, 100);
        let bad = ok.replace("\"s\":2", "\"s\":2,\"bogus\":1");
        assert!(ExperimentSpec::from_json(&bad).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = small(ExperimentKind::SparseApprox, MeasurementModel::NoiselessSign);
        spec.k_grid = Some(vec![1, 2]);
        assert!(spec.validate().is_err());
        spec.k = None;
        assert!(spec.validate().is_ok());
        spec.k_grid = Some(vec![31]);
        assert!(spec.validate().is_err());

        let spec = small(ExperimentKind::NormEstimation, MeasurementModel::NoiselessSign);
        assert!(spec.validate().is_err());
        let mut spec = small(ExperimentKind::SparseApprox, MeasurementModel::NoiselessSign);
        spec.s = 40;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn empty_grid_is_vacuous() {
        let mut spec = small(ExperimentKind::SparseApprox, MeasurementModel::NoiselessSign);
        spec.n_grid.clear();
        let report = run_grid(&spec).unwrap();
        assert!(report.trials.is_empty() && report.aggregates.is_empty());
    }

    #[test]
    fn trial_zero_does_not_depend_on_trial_count() {
        let mut one = small(ExperimentKind::SparseApprox, MeasurementModel::NoiselessSign);
        one.trials = 1;
        let mut many = one.clone();
        many.trials = 5;
        let a = run_grid(&one).unwrap();
        let b = run_grid(&many).unwrap();
        assert_eq!(a.trials[0], b.trials[0]);
    }

    #[test]
    fn misspecification_with_k_equal_s_matches_sparse_approx() {
        let model = MeasurementModel::SignFlip {
            p: FlipProbability::Uniform(0.1),
        };
        let a = run_grid(&small(ExperimentKind::SparseApprox, model.clone())).unwrap();
        let b = run_grid(&small(ExperimentKind::Misspecification, model)).unwrap();
        assert!(b.trials.iter().all(|t| t.tail_inf == Some(0.0)));
        let b: Vec<_> = b
            .trials
            .into_iter()
            .map(|t| TrialResult { tail_inf: None, ..t })
            .collect();
        assert_eq!(a.trials, b);
    }

    #[test]
    fn norm_estimation_fills_norm_columns() {
        let mut spec = small(ExperimentKind::NormEstimation, MeasurementModel::Dithered { r: 2.0 });
        spec.radius = RadiusMode::Relative;
        spec.k = Some(4);
        let report = run_grid(&spec).unwrap();
        assert!(report.trials.iter().all(|t| t.norm_rel_error.is_some() && t.branch.is_some()));
        let csv = trials_csv(&report.trials).unwrap();
        assert!(csv.starts_with(
            "d,n,s,k,model,trial,l2_error,support_symdiff,norm_abs_error,norm_rel_error,branch,elapsed_s\n"
        ));
        assert!(csv.contains("T0_"));
    }

    #[test]
    fn aggregates_cover_every_cell() {
        let mut spec = small(ExperimentKind::Misspecification, MeasurementModel::NoiselessSign);
        spec.k = None;
        spec.k_grid = Some(vec![1, 2, 3]);
        spec.n_grid = vec![50, 100];
        let report = run_grid(&spec).unwrap();
        assert_eq!(report.aggregates.len(), 6);
        assert!(report.aggregates.iter().all(|a| a.trials == 4 && a.failures == 0));
        let csv = aggregate_csv(&report.aggregates).unwrap();
        assert!(csv.lines().next().unwrap().contains("l2_error_mean,l2_error_median,l2_error_std"));
    }

    #[test]
    fn elapsed_is_opt_in() {
        let mut spec = small(ExperimentKind::SparseApprox, MeasurementModel::NoiselessSign);
        spec.trials = 1;
        assert!(run_grid(&spec).unwrap().trials[0].elapsed_s.is_none());
        spec.record_elapsed = true;
        assert!(run_grid(&spec).unwrap().trials[0].elapsed_s.is_some());
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 10.0]).unwrap();
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 2.5);
        assert!((s.std - 4.082482904638630).abs() < 1e-12);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn aggregate_path_sits_next_to_trials() {
        assert_eq!(
            aggregate_path(Path::new("out/fig1.csv")),
            PathBuf::from("out/fig1_aggregate.csv")
        );
    }
}
