//! Closed-form global maximizers of `y^T A x` over sparse feasible sets.
//!
//! Every estimator reduces to the score vector `v = A^T y`; the `*_from_scores`
//! variants take `v` directly so that streamed simulations never need the
//! matrix. [`brute_force_oracle`] enumerates supports exhaustively and is kept
//! independent of the closed forms so it can be used to check them.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sensing::{augment, MeasurementSet, SensingMatrix};
use crate::vector::{
    hard_threshold, normalize, sign, top_k_by_value, top_k_support, IndexSet, Vector,
};

/// Which case of the norm-recovery formula produced `scaled`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    /// The augmented coordinate was thresholded away: `scaled = R x0 / ||x0||`.
    T0Zero,
    /// `scaled = (R / t0) x0`.
    T0Nonzero,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::T0Zero => "T0_ZERO",
            Branch::T0Nonzero => "T0_NONZERO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    /// Unit-norm, at most `k`-sparse direction estimate.
    pub direction: Vector,
    pub support: IndexSet,
    /// `A^T y` (augmented when the estimate came from dithered data).
    pub score_vector: Vector,
    /// Norm-carrying estimate, or the raw ternary vector for that variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    /// Last coordinate of the augmented estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "snake_case")]
pub enum ConstraintVariant {
    /// `||x||_0 <= k`, `||x||_2 = 1`.
    UnitSparse(usize),
    /// As `UnitSparse`, plus `x >= 0`.
    NonnegUnitSparse(usize),
    /// `||x||_0 <= k`, `x` in `{-1, 0, 1}^d`.
    TernarySparse(usize),
}

impl ConstraintVariant {
    pub fn k(self) -> usize {
        match self {
            ConstraintVariant::UnitSparse(k)
            | ConstraintVariant::NonnegUnitSparse(k)
            | ConstraintVariant::TernarySparse(k) => k,
        }
    }

    /// Whether `x` lies in the feasible set (unit norm checked to `tol`).
    pub fn is_feasible(self, x: &[f64], tol: f64) -> bool {
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        let unit = (crate::vector::norm2(x) - 1.0).abs() <= tol;
        match self {
            ConstraintVariant::UnitSparse(k) => nnz <= k && unit,
            ConstraintVariant::NonnegUnitSparse(k) => nnz <= k && unit && x.iter().all(|v| *v >= 0.0),
            ConstraintVariant::TernarySparse(k) => {
                nnz <= k && x.iter().all(|v| *v == 0.0 || v.abs() == 1.0)
            }
        }
    }
}

fn scores(a: &SensingMatrix, y: &MeasurementSet) -> Result<Vec<f64>> {
    a.transpose_mul(&y.labels())
}

/// Global optimum of `max y^T A x` s.t. `||x||_0 <= k`, `||x||_2 = 1`:
/// `H_k(v) / ||H_k(v)||_2` with `v = A^T y`.
pub fn estimate_direction(a: &SensingMatrix, y: &MeasurementSet, k: usize) -> Result<EstimateResult> {
    estimate_direction_from_scores(scores(a, y)?, k)
}

pub fn estimate_direction_from_scores(v: Vec<f64>, k: usize) -> Result<EstimateResult> {
    let score_vector = Vector::new(v)?;
    let support = top_k_support(&score_vector, k)?;
    let h = hard_threshold(&score_vector, k)?;
    let direction = normalize(&h).map_err(|_| Error::DegenerateScore { k })?;
    Ok(EstimateResult {
        direction,
        support,
        score_vector,
        scaled: None,
        branch: None,
        t0: None,
        k,
    })
}

/// Optimum over nonnegative `k`-sparse unit vectors.
///
/// Keeps the positive scores (at most `k` of them, largest first). With no
/// positive score the optimum is the basis vector at the largest score.
pub fn estimate_nonneg_direction(
    a: &SensingMatrix,
    y: &MeasurementSet,
    k: usize,
) -> Result<EstimateResult> {
    estimate_nonneg_from_scores(scores(a, y)?, k)
}

pub fn estimate_nonneg_from_scores(v: Vec<f64>, k: usize) -> Result<EstimateResult> {
    let score_vector = Vector::new(v)?;
    let d = score_vector.dim();
    if k < 1 || k > d {
        return Err(Error::invalid(format!("k must lie in [1, {d}], got {k}")));
    }
    let positive: Vec<usize> = (0..d).filter(|&i| score_vector[i] > 0.0).collect();
    let (support, direction) = if positive.is_empty() {
        let best = top_k_by_value(&score_vector, &(0..d).collect::<Vec<_>>(), 1)[0];
        let mut e = vec![0.0; d];
        e[best] = 1.0;
        (IndexSet::new(vec![best])?, Vector::new(e)?)
    } else {
        let chosen = top_k_by_value(&score_vector, &positive, k);
        let support = IndexSet::new(chosen)?;
        let restricted = crate::vector::restrict(&score_vector, &support);
        (support, normalize(&restricted)?)
    };
    Ok(EstimateResult {
        direction,
        support,
        score_vector,
        scaled: None,
        branch: None,
        t0: None,
        k,
    })
}

/// Optimum over `k`-sparse ternary vectors: `sign(v)` on the top-`k` support.
///
/// `scaled` holds the raw ternary vector and `direction` its normalized copy.
pub fn estimate_ternary(a: &SensingMatrix, y: &MeasurementSet, k: usize) -> Result<EstimateResult> {
    estimate_ternary_from_scores(scores(a, y)?, k)
}

pub fn estimate_ternary_from_scores(v: Vec<f64>, k: usize) -> Result<EstimateResult> {
    let score_vector = Vector::new(v)?;
    let support = top_k_support(&score_vector, k)?;
    let mut t = vec![0.0; score_vector.dim()];
    for &i in support.as_slice() {
        t[i] = sign(score_vector[i]);
    }
    let ternary = Vector::new(t)?;
    Ok(EstimateResult {
        direction: normalize(&ternary)?,
        support,
        score_vector,
        scaled: Some(ternary),
        branch: None,
        t0: None,
        k,
    })
}

/// Direction and norm from dithered measurements.
///
/// Solves the `k`-sparse program on the augmented matrix with rows
/// `(a_i, b_i / R)`, splits the optimum into `(x0; t0)` and rescales.
pub fn estimate_with_norm(
    a: &SensingMatrix,
    y: &MeasurementSet,
    b: &[f64],
    r: f64,
    k: usize,
) -> Result<EstimateResult> {
    check_dim(a.rows(), y.len())?;
    let aug = augment(a, b, r)?;
    estimate_with_norm_from_scores(scores(&aug, y)?, r, k)
}

/// As [`estimate_with_norm`], from the `d + 1` augmented scores.
pub fn estimate_with_norm_from_scores(v_aug: Vec<f64>, r: f64, k: usize) -> Result<EstimateResult> {
    if k < 2 {
        return Err(Error::invalid(format!("norm estimation needs k >= 2, got {k}")));
    }
    if !(r > 0.0) {
        return Err(Error::invalid(format!("R must be > 0, got {r}")));
    }
    if v_aug.len() < 2 {
        return Err(Error::invalid("augmented scores need at least two entries"));
    }
    let aug = estimate_direction_from_scores(v_aug, k)?;
    let d = aug.direction.dim() - 1;
    let x0 = &aug.direction.as_slice()[..d];
    let t0 = aug.direction[d];
    let direction = normalize(x0).map_err(|_| Error::DegenerateScore { k })?;
    let (scaled, branch) = if t0 != 0.0 {
        let c = r / t0;
        (Vector::new(x0.iter().map(|x| c * x).collect())?, Branch::T0Nonzero)
    } else {
        (direction.scale(r)?, Branch::T0Zero)
    };
    let support = IndexSet::new(
        aug.support
            .as_slice()
            .iter()
            .copied()
            .filter(|&i| i < d)
            .collect(),
    )?;
    Ok(EstimateResult {
        direction,
        support,
        score_vector: aug.score_vector,
        scaled: Some(scaled),
        branch: Some(branch),
        t0: Some(t0),
        k,
    })
}

/// Dispatches on the constraint variant.
pub fn estimate(a: &SensingMatrix, y: &MeasurementSet, variant: ConstraintVariant) -> Result<EstimateResult> {
    match variant {
        ConstraintVariant::UnitSparse(k) => estimate_direction(a, y, k),
        ConstraintVariant::NonnegUnitSparse(k) => estimate_nonneg_direction(a, y, k),
        ConstraintVariant::TernarySparse(k) => estimate_ternary(a, y, k),
    }
}

/// `y^T A x`, evaluated as `y . (A x)`.
pub fn objective(a: &SensingMatrix, y: &MeasurementSet, x: &[f64]) -> Result<f64> {
    let ax = crate::sensing::linear_measure(a, x)?;
    Ok(ax.iter().zip(&y.y).map(|(p, &q)| p * f64::from(q)).sum())
}

pub const ORACLE_MAX_D: usize = 14;
pub const ORACLE_MAX_K: usize = 4;

/// Exhaustive maximizer of `y^T A x` over the feasible set.
///
/// Visits every support of size `1..=k` (plus the zero vector for the ternary
/// set), takes the best point on each support, and scores each candidate by
/// evaluating the objective directly. Returns the best value and a maximizer.
pub fn brute_force_oracle(
    a: &SensingMatrix,
    y: &MeasurementSet,
    constraint: ConstraintVariant,
) -> Result<(f64, Vector)> {
    let d = a.cols();
    let k = constraint.k();
    if d > ORACLE_MAX_D || !(1..=ORACLE_MAX_K.min(d)).contains(&k) {
        return Err(Error::invalid(format!(
            "oracle needs d <= {ORACLE_MAX_D} and 1 <= k <= min(d, {ORACLE_MAX_K}), got d={d} k={k}"
        )));
    }
    check_dim(a.rows(), y.len())?;
    let v = scores(a, y)?;

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>| -> Result<()> {
        let val = objective(a, y, &x)?;
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, x));
        }
        Ok(())
    };

    if let ConstraintVariant::TernarySparse(_) = constraint {
        consider(vec![0.0; d])?;
    }
    for size in (1..=k).rev() {
        for support in combinations(d, size) {
            match constraint {
                ConstraintVariant::UnitSparse(_) => {
                    let mut x = vec![0.0; d];
                    for &i in &support {
                        x[i] = v[i];
                    }
                    let norm = crate::vector::norm2(&x);
                    if norm > 0.0 {
                        x.iter_mut().for_each(|e| *e /= norm);
                    } else {
                        x[support[0]] = 1.0;
                    }
                    consider(x)?;
                }
                ConstraintVariant::NonnegUnitSparse(_) => {
                    let mut x = vec![0.0; d];
                    for &i in &support {
                        x[i] = v[i].max(0.0);
                    }
                    let norm = crate::vector::norm2(&x);
                    if norm > 0.0 {
                        x.iter_mut().for_each(|e| *e /= norm);
                        consider(x)?;
                    } else {
                        for &i in &support {
                            let mut e = vec![0.0; d];
                            e[i] = 1.0;
                            consider(e)?;
                        }
                    }
                }
                ConstraintVariant::TernarySparse(_) => {
                    for pattern in 0u32..(1 << size) {
                        let mut x = vec![0.0; d];
                        for (bit, &i) in support.iter().enumerate() {
                            x[i] = if pattern >> bit & 1 == 1 { -1.0 } else { 1.0 };
                        }
                        consider(x)?;
                    }
                }
            }
        }
    }
    let (val, x) = best.expect("at least one support visited");
    Ok((val, Vector::new(x)?))
}

/// All size-`k` subsets of `0..d` in lexicographic order.
fn combinations(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > d {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&i| cur[i] != i + d - k) else {
            return out;
        };
        cur[pos] += 1;
        for j in pos + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
