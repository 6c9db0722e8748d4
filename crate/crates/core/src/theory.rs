//! Correlation parameter, error-bound expressions, and the misspecification
//! tail term.
//!
//! `log d` is the natural logarithm everywhere. The absolute constant `C` of
//! the bounds is a caller-supplied parameter (reports default to 1).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sensing::{FlipProbability, MeasurementModel, ResponseModel};
use crate::vector::{hard_threshold, SparseSignal, Vector};

/// `E|g| = sqrt(2 / pi)`, the correlation of the noiseless sign model.
pub fn sign_lambda() -> f64 {
    (2.0 / PI).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTheory {
    /// Average correlation.
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_measurement_lambda: Option<Vec<f64>>,
    pub model: MeasurementModel,
}

/// Closed-form correlation `lambda_i = E[g theta_i(g)]` of a shipped model.
///
/// The dithered model is a noiseless sign model on the augmented system, so
/// its correlation is that of the sign.
pub fn lambda_closed_form(model: &MeasurementModel) -> Result<ModelTheory> {
    let base = sign_lambda();
    let (lambda, per) = match model {
        MeasurementModel::NoiselessSign | MeasurementModel::Dithered { .. } => (base, None),
        MeasurementModel::SignFlip { p } => {
            if let Some(bad) = match p {
                FlipProbability::Uniform(q) => Some(*q).filter(|q| *q >= 0.5),
                FlipProbability::PerMeasurement(qs) => qs.iter().copied().find(|q| *q >= 0.5),
            } {
                return Err(Error::AssumptionViolation(format!(
                    "flip probability {bad} >= 0.5 gives non-positive correlation"
                )));
            }
            model.validate(None)?;
            let per = match p {
                FlipProbability::Uniform(_) => None,
                FlipProbability::PerMeasurement(qs) => {
                    Some(qs.iter().map(|q| base * (1.0 - 2.0 * q)).collect())
                }
            };
            (base * (1.0 - 2.0 * p.mean()), per)
        }
    };
    Ok(ModelTheory {
        lambda,
        per_measurement_lambda: per,
        model: model.clone(),
    })
}

pub const LAMBDA_MC_MIN_SAMPLES: usize = 1000;

/// Monte Carlo estimate of `E[g theta(g)]`: the mean of `g_j r_j` with
/// `g_j ~ N(0, 1)` and `r_j` a response drawn from `theta`. Sample `j` uses
/// response index `j`.
pub fn lambda_monte_carlo(theta: &dyn ResponseModel, samples: usize, seed: u64) -> Result<f64> {
    if samples < LAMBDA_MC_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {LAMBDA_MC_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let mut gs = stream(seed, Purpose::Lambda, 0);
    let mut us = stream(seed, Purpose::Lambda, 1);
    let mut acc = 0.0;
    for j in 0..samples {
        let g: f64 = gs.sample(StandardNormal);
        acc += g * theta.draw(j, g, us.random::<f64>());
    }
    Ok(acc / samples as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: f64,
    pub lambda: f64,
    pub k: usize,
    pub d: usize,
    pub n: usize,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satisfied_condition: Option<bool>,
}

/// `(C / lambda) sqrt(k ln d / n)` on real arguments, unchecked.
pub fn bound_expression(lambda: f64, k: f64, d: f64, n: f64, c: f64) -> f64 {
    c / lambda * (k * d.ln() / n).sqrt()
}

/// `(C / lambda) sqrt(k ln d / n)`.
pub fn error_bound(lambda: f64, k: usize, d: usize, n: usize, c: f64) -> Result<BoundReport> {
    if !(lambda > 0.0) {
        return Err(Error::AssumptionViolation(format!(
            "correlation must be positive, got {lambda}"
        )));
    }
    if n < 1 || d < 2 || k < 1 || !(c > 0.0) {
        return Err(Error::invalid(format!(
            "need n >= 1, d >= 2, k >= 1, C > 0; got n={n} d={d} k={k} C={c}"
        )));
    }
    let bound = bound_expression(lambda, k as f64, d as f64, n as f64, c);
    Ok(BoundReport {
        bound,
        lambda,
        k,
        d,
        n,
        c,
        x_min: None,
        satisfied_condition: None,
    })
}

/// Support-recovery condition `x_min > (C / lambda) sqrt(k ln d / n)`.
pub fn support_condition(
    x_min: f64,
    lambda: f64,
    k: usize,
    d: usize,
    n: usize,
    c: f64,
) -> Result<BoundReport> {
    if !(x_min > 0.0) {
        return Err(Error::invalid(format!("x_min must be positive, got {x_min}")));
    }
    let mut report = error_bound(lambda, k, d, n, c)?;
    report.satisfied_condition = Some(x_min > report.bound);
    report.x_min = Some(x_min);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisspecTail {
    /// `||z - x||_inf` for unit `x`.
    pub inf_term: f64,
    /// `sqrt(2k) * inf_term`.
    pub full_term: f64,
    /// `H_k(x) / ||H_k(x)||_2`.
    pub z: Vector,
    /// `||H_k(x)||_2`.
    pub alpha: f64,
}

/// Price of running with sparsity budget `k` below the true sparsity.
///
/// `x` is normalized to unit length first. With `alpha = ||H_k(x)||_2` and
/// `|x|_(j)` the `j`-th largest magnitude,
/// `||z - x||_inf = max((1/alpha - 1) |x|_(1), |x|_(k+1))`.
pub fn misspec_tail(x: &SparseSignal, k: usize) -> Result<MisspecTail> {
    let unit = x.unit();
    let full = (2.0 * k as f64).sqrt();
    if k >= x.sparsity() {
        return Ok(MisspecTail {
            inf_term: 0.0,
            full_term: 0.0,
            z: unit.clone(),
            alpha: 1.0,
        });
    }
    let h = hard_threshold(unit, k)?;
    let alpha = h.norm2();
    if alpha == 0.0 {
        return Err(Error::DegenerateInput("H_k(x) is zero".into()));
    }
    let z = h.scale(1.0 / alpha)?;
    let mut mags: Vec<f64> = unit.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let largest = mags[0];
    let next = mags.get(k).copied().unwrap_or(0.0);
    let inf_term = ((1.0 / alpha - 1.0) * largest).max(next);
    Ok(MisspecTail {
        inf_term,
        full_term: full * inf_term,
        z,
        alpha,
    })
}
