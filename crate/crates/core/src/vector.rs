//! Dense real vectors, index sets, sparse signals and the hard-thresholding
//! operator.
//!
//! Everything here is a pure function of its inputs. Ties in magnitude are
//! broken lexicographically (the smaller index wins), so top-k selection is a
//! total order and results are bitwise reproducible across platforms.

use std::cmp::Ordering;
use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_sig;

/// A finite real vector of dimension at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector dimension must be at least 1"));
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "vector entry {i} is not finite ({})",
                entries[i]
            )));
        }
        Ok(Vector(entries))
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Vector::new(vec![0.0; d])
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_finite(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty() && entries.iter().all(|x| x.is_finite()));
        Vector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Number of nonzero entries.
    pub fn l0(&self) -> usize {
        self.0.iter().filter(|x| **x != 0.0).count()
    }

    /// Indices of the nonzero entries.
    pub fn support(&self) -> IndexSet {
        IndexSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        crate::error::check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        crate::error::check_dim(self.dim(), other.dim())?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Result<Vector> {
        Vector::new(self.0.iter().map(|x| c * x).collect())
    }

    /// Single CSV record, one value per column, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let cells: Vec<String> = self.0.iter().map(|x| fmt_sig(*x, 17)).collect();
        let mut line = cells.join(",");
        line.push('\n');
        line
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let line = text
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::invalid("empty vector CSV"))?;
        let entries = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad vector CSV cell {c:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Vector::new(entries)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Strictly increasing list of coordinate indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet(Vec<usize>);

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        IndexSet::new(v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Self {
        s.0
    }
}

impl IndexSet {
    /// Builds a set from arbitrary indices; sorts and rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("index set contains duplicates"));
        }
        Ok(IndexSet(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Size of the symmetric difference with `other`.
    pub fn symmetric_difference(&self, other: &IndexSet) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut common) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        a.len() + b.len() - 2 * common
    }
}

/// An `s`-sparse target signal together with its support and unit direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseSignal {
    vec: Vector,
    s: usize,
    support: IndexSet,
    #[serde(skip)]
    unit: Vector,
}

impl SparseSignal {
    /// Wraps a nonzero vector; sparsity and support are read off its entries.
    pub fn new(vec: Vector) -> Result<Self> {
        let support = vec.support();
        if support.is_empty() {
            return Err(Error::DegenerateInput("signal is identically zero".into()));
        }
        let unit = normalize(&vec)?;
        Ok(SparseSignal {
            s: support.len(),
            support,
            vec,
            unit,
        })
    }

    pub fn vector(&self) -> &Vector {
        &self.vec
    }

    pub fn dim(&self) -> usize {
        self.vec.dim()
    }

    pub fn sparsity(&self) -> usize {
        self.s
    }

    pub fn support(&self) -> &IndexSet {
        &self.support
    }

    /// `x / ||x||_2`, the only quantity identifiable from sign measurements.
    pub fn unit(&self) -> &Vector {
        &self.unit
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm2()
    }

    /// Smallest nonzero magnitude.
    pub fn x_min(&self) -> f64 {
        self.support
            .as_slice()
            .iter()
            .map(|&i| self.vec[i].abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl<'de> Deserialize<'de> for SparseSignal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            vec: Vector,
        }
        let raw = Raw::deserialize(de)?;
        SparseSignal::new(raw.vec).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `sign` with the convention `sign(0) = +1`.
pub fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Magnitude-descending, index-ascending order.
fn by_magnitude(z: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        z[b].abs()
            .partial_cmp(&z[a].abs())
            .expect("finite entries")
            .then(a.cmp(&b))
    }
}

/// Indices of the `k` largest-magnitude entries of `z`, returned sorted.
///
/// Equal magnitudes go to the smaller index, so when `z` has fewer than `k`
/// nonzeros the remainder is filled with the lowest-index zero entries.
pub fn top_k_support(z: &[f64], k: usize) -> Result<IndexSet> {
    check_k(z.len(), k)?;
    let mut idx: Vec<usize> = (0..z.len()).collect();
    let cmp = by_magnitude(z);
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, &cmp);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(IndexSet(idx))
}

/// Indices of the `k` largest entries by signed value (ties to smaller index).
pub(crate) fn top_k_by_value(z: &[f64], candidates: &[usize], k: usize) -> Vec<usize> {
    let mut idx = candidates.to_vec();
    idx.sort_by(|&a, &b| {
        z[b].partial_cmp(&z[a])
            .expect("finite entries")
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Euclidean projection onto `k`-sparse vectors: keep the `k` largest
/// magnitudes, zero the rest.
pub fn hard_threshold(z: &[f64], k: usize) -> Result<Vector> {
    let support = top_k_support(z, k)?;
    Ok(restrict(z, &support))
}

/// `z` on `support`, zero elsewhere.
pub fn restrict(z: &[f64], support: &IndexSet) -> Vector {
    let mut out = vec![0.0; z.len()];
    for &i in support.as_slice() {
        out[i] = z[i];
    }
    Vector::from_finite(out)
}

/// `z / ||z||_2`.
pub fn normalize(z: &[f64]) -> Result<Vector> {
    let n = norm2(z);
    if n == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot normalize the zero vector".into(),
        ));
    }
    Vector::new(z.iter().map(|x| x / n).collect())
}

/// `sqrt(2k)`: bound on `||u||_1 / ||u||_2` over differences of two
/// `k`-sparse unit vectors.
pub fn rho_sparse_bound(k: usize) -> f64 {
    (2.0 * k as f64).sqrt()
}

fn check_k(d: usize, k: usize) -> Result<()> {
    if k < 1 || k > d {
        return Err(Error::invalid(format!("k must lie in [1, {d}], got {k}")));
    }
    Ok(())
}
