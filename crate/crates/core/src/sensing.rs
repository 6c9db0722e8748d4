//! Gaussian sensing ensembles and the sign-quantized observation models.
//!
//! Three observation models are shipped:
//!
//! * noiseless sign: `y_i = sign(<a_i, x>)`
//! * random sign flips: `y_i = xi_i * sign(<a_i, x>)`, `P(xi_i = -1) = p_i`
//! * known Gaussian dither: `y_i = sign(<a_i, x> + b_i)`, `b_i ~ N(0, R^2)`
//!
//! `sign(0)` is `+1` throughout.
//!
//! Matrix row `i` is drawn from its own keystream, flips and dither each from
//! a single sequential keystream, so every output is a pure function of
//! `(inputs, seed)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::format::fmt_sig;
use crate::rng::{stream, Purpose};
use crate::vector::{dot, sign};

/// Dense row-major `n x d` sensing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    n: usize,
    d: usize,
    seed: Option<u64>,
    data: Vec<f64>,
}

impl SensingMatrix {
    pub fn from_row_major(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        check_dim(n * d, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(SensingMatrix {
            n,
            d,
            seed: None,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        for r in rows {
            check_dim(d, r.len())?;
        }
        Self::from_row_major(n, d, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    /// Records the seed the entries were generated from.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Seed the entries were generated from, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_vecs(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    /// `A^T y`, accumulated row by row.
    pub fn transpose_mul(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, y.len())?;
        let mut v = vec![0.0; self.d];
        for (row, &yi) in self.data.chunks(self.d).zip(y) {
            accumulate(&mut v, row, yi);
        }
        Ok(v)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut m = Self::from_row_major(self.n, self.d, self.data.iter().map(|x| c * x).collect())?;
        m.seed = self.seed;
        Ok(m)
    }

    /// Copy without the last column.
    pub fn drop_last_column(&self) -> Result<Self> {
        if self.d < 2 {
            return Err(Error::invalid("cannot drop the only column"));
        }
        let data = self
            .data
            .chunks(self.d)
            .flat_map(|r| r[..self.d - 1].iter().copied())
            .collect();
        Self::from_row_major(self.n, self.d - 1, data)
    }

    /// Row-major CSV, one matrix row per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 24);
        for row in self.data.chunks(self.d) {
            let cells: Vec<String> = row.iter().map(|x| fmt_sig(*x, 17)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::invalid(format!("bad matrix cell {c:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }
}

pub(crate) fn accumulate(v: &mut [f64], row: &[f64], y: f64) {
    for (vj, aj) in v.iter_mut().zip(row) {
        *vj += y * aj;
    }
}

/// Fills `buf` with row `i` of the ensemble generated from `seed`.
pub fn gaussian_row(seed: u64, i: usize, buf: &mut [f64]) {
    let mut rng = stream(seed, Purpose::Matrix, i as u64);
    for x in buf.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
}

/// `n x d` matrix of i.i.d. standard normal entries.
pub fn gaussian_ensemble(n: usize, d: usize, seed: u64) -> Result<SensingMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    let len = n
        .checked_mul(d)
        .ok_or_else(|| Error::Resource(format!("{n} x {d} matrix overflows usize")))?;
    let mut data = Vec::new();
    data.try_reserve_exact(len)
        .map_err(|e| Error::Resource(format!("cannot allocate {n} x {d} matrix: {e}")))?;
    data.resize(len, 0.0);
    data.par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, row)| gaussian_row(seed, i, row));
    Ok(SensingMatrix {
        n,
        d,
        seed: Some(seed),
        data,
    })
}

/// Flip probability, either shared by every measurement or one per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlipProbability {
    Uniform(f64),
    PerMeasurement(Vec<f64>),
}

impl FlipProbability {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            FlipProbability::Uniform(p) => *p,
            FlipProbability::PerMeasurement(ps) => ps[i % ps.len()],
        }
    }

    /// Average flip probability.
    pub fn mean(&self) -> f64 {
        match self {
            FlipProbability::Uniform(p) => *p,
            FlipProbability::PerMeasurement(ps) => ps.iter().sum::<f64>() / ps.len() as f64,
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            FlipProbability::Uniform(p) => std::slice::from_ref(p),
            FlipProbability::PerMeasurement(ps) => ps,
        }
    }

    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        if let (FlipProbability::PerMeasurement(ps), Some(n)) = (self, n) {
            check_dim(n, ps.len())?;
        }
        if self.values().is_empty() {
            return Err(Error::invalid("flip probability vector is empty"));
        }
        for &p in self.values() {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::invalid(format!(
                    "flip probability must lie in [0, 0.5), got {p}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementModel {
    NoiselessSign,
    SignFlip { p: FlipProbability },
    Dithered { r: f64 },
}

impl MeasurementModel {
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        match self {
            MeasurementModel::NoiselessSign => Ok(()),
            MeasurementModel::SignFlip { p } => p.validate(n),
            MeasurementModel::Dithered { r } => {
                if *r > 0.0 && r.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("dither scale R must be > 0, got {r}")))
                }
            }
        }
    }

    /// Short label used in result tables.
    pub fn label(&self) -> String {
        match self {
            MeasurementModel::NoiselessSign => "sign".into(),
            MeasurementModel::SignFlip {
                p: FlipProbability::Uniform(p),
            } => format!("flip(p={})", fmt_sig(*p, 9)),
            MeasurementModel::SignFlip { p } => format!("flip(pbar={})", fmt_sig(p.mean(), 9)),
            MeasurementModel::Dithered { r } => format!("dither(R={})", fmt_sig(*r, 9)),
        }
    }
}

/// A binary response `theta_i`: the conditional mean of `y_i` given
/// `g = <a_i, x>`.
///
/// `draw` realizes one response from a uniform variate `u` in `[0, 1)`. The
/// default draw is `+1` with probability `(1 + theta)/2`, which is a valid
/// label for any `theta` in `[-1, 1]`.
pub trait ResponseModel: Sync {
    fn theta(&self, i: usize, g: f64) -> f64;

    fn draw(&self, i: usize, g: f64, u: f64) -> f64 {
        if u < 0.5 * (1.0 + self.theta(i, g)) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Responses carrying no information about `g`; its draw is identically 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroResponse;

impl ResponseModel for ZeroResponse {
    fn theta(&self, _i: usize, _g: f64) -> f64 {
        0.0
    }

    fn draw(&self, _i: usize, _g: f64, _u: f64) -> f64 {
        0.0
    }
}

/// The dithered model acts as a noiseless sign on the augmented system.
impl ResponseModel for MeasurementModel {
    fn theta(&self, i: usize, g: f64) -> f64 {
        match self {
            MeasurementModel::SignFlip { p } => (1.0 - 2.0 * p.at(i)) * sign(g),
            _ => sign(g),
        }
    }

    fn draw(&self, i: usize, g: f64, u: f64) -> f64 {
        match self {
            MeasurementModel::SignFlip { p } if u < p.at(i) => -sign(g),
            _ => sign(g),
        }
    }
}

/// Labels plus the model that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub y: Vec<i8>,
    pub model: MeasurementModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dither: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.y.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.y.iter().position(|v| v.abs() != 1) {
            return Err(Error::invalid(format!("label {i} is not +-1")));
        }
        self.model.validate(Some(self.y.len()))?;
        match (&self.model, &self.dither) {
            (MeasurementModel::Dithered { .. }, Some(b)) => check_dim(self.y.len(), b.len()),
            (MeasurementModel::Dithered { .. }, None) => {
                Err(Error::invalid("dithered measurements must carry the dither vector"))
            }
            (_, Some(_)) => Err(Error::invalid(
                "dither vector present for a non-dithered model",
            )),
            (_, None) => Ok(()),
        }
    }
}

fn label(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// `(<a_1, x>, ..., <a_n, x>)`.
pub fn linear_measure(a: &SensingMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.d, x.len())?;
    Ok(a.data.chunks(a.d).map(|row| dot(row, x)).collect())
}

/// `y_i = sign(<a_i, x>)`.
pub fn sign_measure(a: &SensingMatrix, x: &[f64]) -> Result<MeasurementSet> {
    let y = linear_measure(a, x)?.into_iter().map(label).collect();
    Ok(MeasurementSet {
        y,
        model: MeasurementModel::NoiselessSign,
        dither: None,
        seed: None,
        warnings: Vec::new(),
    })
}

/// Labels drawn from an arbitrary response model; each label must be `+-1`.
pub fn measure_with(
    a: &SensingMatrix,
    x: &[f64],
    model: &dyn ResponseModel,
    seed: u64,
) -> Result<Vec<i8>> {
    let inner = linear_measure(a, x)?;
    let mut rng = stream(seed, Purpose::Flip, 0);
    inner
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let r = model.draw(i, g, rng.random::<f64>());
            if r == 1.0 || r == -1.0 {
                Ok(r as i8)
            } else {
                Err(Error::invalid(format!("response model produced label {r}")))
            }
        })
        .collect()
}

/// `y_i = xi_i * sign(<a_i, x>)` with independent flips `P(xi_i = -1) = p_i`.
pub fn flip_noise_measure(
    a: &SensingMatrix,
    x: &[f64],
    p: FlipProbability,
    seed: u64,
) -> Result<MeasurementSet> {
    p.validate(Some(a.n))?;
    let model = MeasurementModel::SignFlip { p };
    let y = measure_with(a, x, &model, seed)?;
    Ok(MeasurementSet {
        y,
        model,
        dither: None,
        seed: Some(seed),
        warnings: Vec::new(),
    })
}

/// `y_i = sign(<a_i, x> + b_i)` with `b_i ~ N(0, R^2)` stored in the result.
///
/// `||x||_2 <= R` is not enforced; a violation is recorded as a warning.
pub fn dithered_measure(
    a: &SensingMatrix,
    x: &[f64],
    r: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    let model = MeasurementModel::Dithered { r };
    model.validate(None)?;
    let inner = linear_measure(a, x)?;
    let mut rng = stream(seed, Purpose::Dither, 0);
    let b: Vec<f64> = (0..a.n)
        .map(|_| r * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y = inner.iter().zip(&b).map(|(g, bi)| label(g + bi)).collect();
    Ok(MeasurementSet {
        y,
        model,
        dither: Some(b),
        seed: Some(seed),
        warnings: radius_warning(x, r),
    })
}

fn radius_warning(x: &[f64], r: f64) -> Vec<String> {
    let norm = crate::vector::norm2(x);
    if norm > r {
        vec![format!(
            "signal norm {} exceeds dither scale R = {}",
            fmt_sig(norm, 9),
            fmt_sig(r, 9)
        )]
    } else {
        Vec::new()
    }
}

/// Appends `b_i / R` to every row: the `(d + 1)`-dimensional system on which
/// dithered measurements are noiseless signs.
pub fn augment(a: &SensingMatrix, b: &[f64], r: f64) -> Result<SensingMatrix> {
    check_dim(a.n, b.len())?;
    if !(r > 0.0) {
        return Err(Error::invalid(format!("R must be > 0, got {r}")));
    }
    let mut data = Vec::with_capacity(a.n * (a.d + 1));
    for (row, bi) in a.data.chunks(a.d).zip(b) {
        data.extend_from_slice(row);
        data.push(bi / r);
    }
    SensingMatrix::from_row_major(a.n, a.d + 1, data)
}

/// `A^T y` computed while streaming the rows of a seeded Gaussian ensemble,
/// without materializing the matrix.
///
/// For the dithered model the result has `d + 1` entries: the last is
/// `sum_i y_i b_i / R`, the score of the augmented coordinate. Bitwise equal
/// to generating the matrix, measuring, and calling
/// [`SensingMatrix::transpose_mul`] (on the augmented matrix when dithered).
pub fn streamed_scores(
    n: usize,
    d: usize,
    matrix_seed: u64,
    x: &[f64],
    model: &MeasurementModel,
    noise_seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    check_dim(d, x.len())?;
    model.validate(Some(n))?;
    let mut row = vec![0.0; d];
    match model {
        MeasurementModel::Dithered { r } => {
            let mut rng = stream(noise_seed, Purpose::Dither, 0);
            let mut v = vec![0.0; d + 1];
            for i in 0..n {
                gaussian_row(matrix_seed, i, &mut row);
                let b = r * rng.sample::<f64, _>(StandardNormal);
                let y = f64::from(label(dot(&row, x) + b));
                accumulate(&mut v[..d], &row, y);
                v[d] += y * (b / r);
            }
            Ok(v)
        }
        MeasurementModel::NoiselessSign => {
            let mut v = vec![0.0; d];
            for i in 0..n {
                gaussian_row(matrix_seed, i, &mut row);
                accumulate(&mut v, &row, f64::from(label(dot(&row, x))));
            }
            Ok(v)
        }
        MeasurementModel::SignFlip { .. } => {
            let mut rng = stream(noise_seed, Purpose::Flip, 0);
            let mut v = vec![0.0; d];
            for i in 0..n {
                gaussian_row(matrix_seed, i, &mut row);
                let y = model.draw(i, dot(&row, x), rng.random::<f64>());
                accumulate(&mut v, &row, y);
            }
            Ok(v)
        }
    }
}
