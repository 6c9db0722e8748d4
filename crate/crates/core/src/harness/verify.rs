//! Statistical verifiers for the mean identity `E[a_i y_i] = lambda_i x` and
//! the `l_inf` concentration of `(1/n) A^T y` around `lambda x`, plus the
//! closed-form-versus-enumeration oracle sweep.

use rand::Rng;
use serde::Serialize;

use super::signal::generate_signal;
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::estimators::{
    brute_force_oracle, estimate, objective, ConstraintVariant, EstimateResult,
};
use crate::rng::{derive_seed, stream, sub_seed, Purpose};
use crate::sensing::{gaussian_ensemble, streamed_scores, MeasurementModel, MeasurementSet};
use crate::theory::lambda_closed_form;
use crate::vector::Vector;

/// Centered target `lambda x'` and the score scaling for `x` under `model`.
///
/// For the dithered model the identity lives on the augmented system, where
/// the target direction is `(x; R) / sqrt(||x||^2 + R^2)`.
fn centered_target(model: &MeasurementModel, x: &[f64], lambda: f64) -> Vec<f64> {
    match model {
        MeasurementModel::Dithered { r } => {
            let scale = (x.iter().map(|v| v * v).sum::<f64>() + r * r).sqrt();
            x.iter()
                .chain(std::iter::once(r))
                .map(|v| lambda * v / scale)
                .collect()
        }
        _ => x.iter().map(|v| lambda * v).collect(),
    }
}

fn sup_deviation(scores: &[f64], n: usize, target: &[f64]) -> f64 {
    scores
        .iter()
        .zip(target)
        .map(|(v, t)| (v / n as f64 - t).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanIdentityReport {
    pub d: usize,
    pub n: usize,
    pub lambda: f64,
    /// `||(1/n) sum_i a_i y_i - lambda x||_inf`.
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `||(1/n) sum_i a_i y_i - lambda x||_inf <= tolerance` for a unit
/// signal (generated dense from `seed` when `x` is `None`).
pub fn verify_mean_identity(
    model: &MeasurementModel,
    d: usize,
    n: usize,
    seed: u64,
    tolerance: f64,
    x: Option<&Vector>,
) -> Result<MeanIdentityReport> {
    let unit = match x {
        Some(x) => {
            crate::error::check_dim(d, x.dim())?;
            crate::vector::normalize(x)?
        }
        None => generate_signal(d, d, sub_seed(seed, Purpose::Signal), None)?
            .unit()
            .clone(),
    };
    let lambda = lambda_closed_form(model)?.lambda;
    let scores = streamed_scores(
        n,
        d,
        sub_seed(seed, Purpose::Matrix),
        &unit,
        model,
        sub_seed(seed, Purpose::Flip),
    )?;
    let deviation = sup_deviation(&scores, n, &centered_target(model, &unit, lambda));
    Ok(MeanIdentityReport {
        d,
        n,
        lambda,
        deviation,
        tolerance,
        passed: deviation <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationConfig {
    pub model: MeasurementModel,
    pub d: usize,
    pub n: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Sparsity of the random unit signal drawn for each repetition.
    pub s: usize,
    /// Centering correlation; the model's closed form when `None`.
    pub lambda: Option<f64>,
    /// Pass threshold on the largest normalized statistic.
    pub threshold: Option<f64>,
}

impl ConcentrationConfig {
    pub fn new(model: MeasurementModel, d: usize, n: usize, repetitions: usize, seed: u64) -> Self {
        ConcentrationConfig {
            model,
            d,
            n,
            repetitions,
            seed,
            s: d.min(10),
            lambda: None,
            threshold: None,
        }
    }
}

pub const MIN_REPETITIONS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub d: usize,
    pub n: usize,
    pub lambda: f64,
    /// `||(1/n) A^T y - lambda x||_inf * sqrt(n / ln d)`, one per repetition.
    pub z: Vec<f64>,
    pub max: f64,
    pub p95: f64,
    pub threshold: Option<f64>,
    pub passed: Option<bool>,
}

impl ConcentrationReport {
    /// One `rep,z` line per repetition.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rep,z\n");
        for (i, z) in self.z.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", fmt_sig(*z, 9)));
        }
        out
    }
}

/// Distribution of the normalized `l_inf` deviation over independent draws of
/// the signal and the matrix.
pub fn verify_concentration(cfg: &ConcentrationConfig) -> Result<ConcentrationReport> {
    if cfg.repetitions < MIN_REPETITIONS {
        return Err(Error::invalid(format!(
            "need at least {MIN_REPETITIONS} repetitions, got {}",
            cfg.repetitions
        )));
    }
    if cfg.d < 2 {
        return Err(Error::invalid("concentration needs d >= 2"));
    }
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => lambda_closed_form(&cfg.model)?.lambda,
    };
    let norm = (cfg.n as f64 / (cfg.d as f64).ln()).sqrt();
    let mut z = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let rep_seed = derive_seed(cfg.seed, &[rep as u64]);
        let signal = generate_signal(cfg.d, cfg.s, sub_seed(rep_seed, Purpose::Signal), None)?;
        let unit = signal.unit();
        let scores = streamed_scores(
            cfg.n,
            cfg.d,
            sub_seed(rep_seed, Purpose::Matrix),
            unit,
            &cfg.model,
            sub_seed(rep_seed, Purpose::Flip),
        )?;
        let target = centered_target(&cfg.model, unit, lambda);
        z.push(sup_deviation(&scores, cfg.n, &target) * norm);
    }
    let max = z.iter().copied().fold(0.0, f64::max);
    let p95 = percentile(&z, 0.95);
    Ok(ConcentrationReport {
        d: cfg.d,
        n: cfg.n,
        lambda,
        max,
        p95,
        threshold: cfg.threshold,
        passed: cfg.threshold.map(|t| max <= t),
        z,
    })
}

/// Reference configuration for the empirical concentration constant.
pub const CALIBRATION_D: usize = 500;
pub const CALIBRATION_N: usize = 5000;
pub const CALIBRATION_REPS: usize = 200;

/// Empirical constant `C_emp`: the largest normalized deviation over the
/// reference configuration (noiseless, d = 500, n = 5000, 200 repetitions).
pub fn calibrate_c_emp(seed: u64) -> Result<ConcentrationReport> {
    verify_concentration(&ConcentrationConfig::new(
        MeasurementModel::NoiselessSign,
        CALIBRATION_D,
        CALIBRATION_N,
        CALIBRATION_REPS,
        seed,
    ))
}

/// Nearest-rank percentile, `q` in `(0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        best = best.max((fa - fb).abs());
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub instance: usize,
    pub variant: ConstraintVariant,
    pub d: usize,
    pub n: usize,
    pub estimate_value: f64,
    pub oracle_value: f64,
    pub same_support: bool,
}

impl OracleCheck {
    /// Value gap above `1e-12` or a different support.
    pub fn is_mismatch(&self) -> bool {
        (self.estimate_value - self.oracle_value).abs() > 1e-12 || !self.same_support
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
    pub max_value_gap: f64,
}

impl OracleReport {
    pub fn mismatches(&self) -> impl Iterator<Item = &OracleCheck> {
        self.checks.iter().filter(|c| c.is_mismatch())
    }

    pub fn passed(&self) -> bool {
        self.mismatches().next().is_none()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,variant,k,d,n,estimate_value,oracle_value,same_support\n");
        for c in &self.checks {
            let variant = match c.variant {
                ConstraintVariant::UnitSparse(_) => "unit",
                ConstraintVariant::NonnegUnitSparse(_) => "nonneg",
                ConstraintVariant::TernarySparse(_) => "ternary",
            };
            out.push_str(&format!(
                "{},{variant},{},{},{},{},{},{}\n",
                c.instance,
                c.variant.k(),
                c.d,
                c.n,
                fmt_sig(c.estimate_value, 17),
                fmt_sig(c.oracle_value, 17),
                c.same_support
            ));
        }
        out
    }
}

/// Which closed forms an oracle sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleFamily {
    Unit,
    Nonneg,
    Ternary,
}

/// Random small instance: `A` Gaussian, `y` uniform random labels.
pub fn random_instance(seed: u64, max_d: usize) -> Result<(crate::sensing::SensingMatrix, MeasurementSet, usize)> {
    let mut rng = stream(seed, Purpose::Instance, 0);
    let d = rng.random_range(3..=max_d);
    let n = rng.random_range(2..=20);
    let k = rng.random_range(1..=3usize.min(d));
    let a = gaussian_ensemble(n, d, sub_seed(seed, Purpose::Matrix))?;
    let y = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let y = MeasurementSet {
        y,
        model: MeasurementModel::NoiselessSign,
        dither: None,
        seed: Some(seed),
        warnings: Vec::new(),
    };
    Ok((a, y, k))
}

/// The feasible point an estimate proposes for its own program.
fn candidate(est: &EstimateResult, variant: ConstraintVariant) -> Vector {
    match variant {
        ConstraintVariant::TernarySparse(_) => est.scaled.clone().expect("ternary keeps raw vector"),
        _ => est.direction.clone(),
    }
}

/// Compares closed-form estimators with exhaustive enumeration on
/// `instances` random problems per family.
pub fn verify_oracle(instances: usize, seed: u64, families: &[OracleFamily]) -> Result<OracleReport> {
    let mut report = OracleReport {
        checks: Vec::new(),
        max_value_gap: 0.0,
    };
    for &family in families {
        for i in 0..instances {
            let inst_seed = derive_seed(seed, &[family as u64, i as u64]);
            let max_d = if family == OracleFamily::Ternary { 8 } else { 10 };
            let (a, y, k) = random_instance(inst_seed, max_d)?;
            let variant = match family {
                OracleFamily::Unit => ConstraintVariant::UnitSparse(k),
                OracleFamily::Nonneg => ConstraintVariant::NonnegUnitSparse(k),
                OracleFamily::Ternary => ConstraintVariant::TernarySparse(k),
            };
            let est = estimate(&a, &y, variant)?;
            let x = candidate(&est, variant);
            let estimate_value = objective(&a, &y, &x)?;
            let (oracle_value, oracle_x) = brute_force_oracle(&a, &y, variant)?;
            report.max_value_gap = report.max_value_gap.max((estimate_value - oracle_value).abs());
            report.checks.push(OracleCheck {
                instance: i,
                variant,
                d: a.cols(),
                n: a.rows(),
                estimate_value,
                oracle_value,
                same_support: x.support() == oracle_x.support(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::FlipProbability;
    use crate::theory::sign_lambda;

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.95), 95.0);
        assert_eq!(percentile(&v, 1.0), 100.0);
        assert_eq!(percentile(&[3.0], 0.5), 3.0);
    }

    #[test]
    fn ks_distance_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&a, &[10.0, 11.0]), 1.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[2.0, 3.0]), 0.5);
    }

    #[test]
    fn mean_identity_passes_at_scale() {
        let r = verify_mean_identity(&MeasurementModel::NoiselessSign, 20, 200_000, 1, 0.03, None).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.lambda - sign_lambda()).abs() < 1e-15);
    }

    #[test]
    fn mean_identity_fails_when_undersampled() {
        let r = verify_mean_identity(&MeasurementModel::NoiselessSign, 20, 10, 1, 0.01, None).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn mean_identity_dithered_on_augmented_system() {
        let r = verify_mean_identity(&MeasurementModel::Dithered { r: 1.5 }, 10, 100_000, 4, 0.03, None).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn wrong_centering_diverges() {
        let flip = MeasurementModel::SignFlip {
            p: FlipProbability::Uniform(0.25),
        };
        let mut cfg = ConcentrationConfig::new(flip, 50, 2000, 30, 3);
        cfg.s = 1;
        let right = verify_concentration(&cfg).unwrap();
        cfg.lambda = Some(sign_lambda());
        let wrong_small = verify_concentration(&cfg).unwrap();
        cfg.n = 8000;
        let wrong_big = verify_concentration(&cfg).unwrap();
        assert!(wrong_small.p95 > 2.0 * right.p95);
        // the bias term grows like sqrt(n)
        assert!(wrong_big.p95 > 1.6 * wrong_small.p95);
    }

    #[test]
    fn concentration_guards_repetitions() {
        let cfg = ConcentrationConfig::new(MeasurementModel::NoiselessSign, 10, 100, 29, 1);
        assert!(verify_concentration(&cfg).is_err());
    }

    #[test]
    fn threshold_sets_pass_flag() {
        let mut cfg = ConcentrationConfig::new(MeasurementModel::NoiselessSign, 20, 500, 30, 8);
        cfg.threshold = Some(100.0);
        assert_eq!(verify_concentration(&cfg).unwrap().passed, Some(true));
        cfg.threshold = Some(1e-6);
        assert_eq!(verify_concentration(&cfg).unwrap().passed, Some(false));
    }

    #[test]
    fn oracle_sweep_small() {
        let r = verify_oracle(
            20,
            5,
            &[OracleFamily::Unit, OracleFamily::Nonneg, OracleFamily::Ternary],
        )
        .unwrap();
        assert_eq!(r.checks.len(), 60);
        assert!(r.passed(), "{:?}", r.mismatches().collect::<Vec<_>>());
    }
}
