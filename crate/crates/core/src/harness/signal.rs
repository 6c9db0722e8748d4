use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::vector::{SparseSignal, Vector};

/// Half-width of the interval nonzero entries are drawn from.
pub const AMPLITUDE: f64 = 1000.0;

/// How the nonzero entries of a test signal are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalClass {
    /// i.i.d. uniform on `[-1000, 1000]`, optionally excluding
    /// `(-min_magnitude, min_magnitude)`.
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_magnitude: Option<f64>,
    },
    /// `+-1000` with random signs: the largest possible `x_min` after
    /// normalization.
    EqualMagnitude,
}

impl Default for SignalClass {
    fn default() -> Self {
        SignalClass::Uniform { min_magnitude: None }
    }
}

/// `s`-sparse signal with a uniformly random support and entries uniform on
/// `[-1000, 1000]` (magnitudes below `min_magnitude` rejected).
pub fn generate_signal(d: usize, s: usize, seed: u64, min_magnitude: Option<f64>) -> Result<SparseSignal> {
    generate_signal_with(d, s, seed, &SignalClass::Uniform { min_magnitude })
}

pub fn generate_signal_with(d: usize, s: usize, seed: u64, class: &SignalClass) -> Result<SparseSignal> {
    if s < 1 || s > d {
        return Err(Error::invalid(format!("sparsity must lie in [1, {d}], got {s}")));
    }
    let floor = match class {
        SignalClass::Uniform { min_magnitude: Some(m) } => {
            if !(*m < AMPLITUDE) || m.is_nan() {
                return Err(Error::invalid(format!(
                    "min_magnitude must be below {AMPLITUDE}, got {m}"
                )));
            }
            m.max(0.0)
        }
        _ => 0.0,
    };
    let mut support_rng = stream(seed, Purpose::Signal, 0);
    let mut value_rng = stream(seed, Purpose::Signal, 1);
    let mut support = sample(&mut support_rng, d, s).into_vec();
    support.sort_unstable();

    let mut x = vec![0.0; d];
    for &i in &support {
        x[i] = match class {
            SignalClass::EqualMagnitude => {
                if value_rng.random::<bool>() {
                    AMPLITUDE
                } else {
                    -AMPLITUDE
                }
            }
            SignalClass::Uniform { .. } => loop {
                let v: f64 = value_rng.random_range(-AMPLITUDE..=AMPLITUDE);
                if v != 0.0 && v.abs() >= floor {
                    break v;
                }
            },
        };
    }
    SparseSignal::new(Vector::new(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_support() {
        let s = generate_signal(10, 10, 3, None).unwrap();
        assert!(s.vector().iter().all(|x| *x != 0.0));
        assert_eq!(s.sparsity(), 10);
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generate_signal(50, 5, 9, None).unwrap(),
            generate_signal(50, 5, 9, None).unwrap()
        );
        assert_ne!(
            generate_signal(50, 5, 9, None).unwrap(),
            generate_signal(50, 5, 10, None).unwrap()
        );
    }

    #[test]
    fn min_magnitude_is_respected() {
        let s = generate_signal(200, 100, 1, Some(900.0)).unwrap();
        assert!(s.x_min() >= 900.0);
        assert!(s.vector().norm_inf() <= AMPLITUDE);
        assert!(generate_signal(10, 2, 1, Some(1000.0)).is_err());
        assert!(generate_signal(10, 11, 1, None).is_err());
        assert!(generate_signal(10, 0, 1, None).is_err());
    }

    #[test]
    fn equal_magnitude_class() {
        let s = generate_signal_with(100, 10, 4, &SignalClass::EqualMagnitude).unwrap();
        assert!(s.support().as_slice().iter().all(|&i| s.vector()[i].abs() == AMPLITUDE));
        assert!((s.unit().norm_inf() - 10f64.sqrt().recip()).abs() < 1e-15);
    }

    #[test]
    fn support_is_uniform() {
        // each index appears with probability s/d; count how many indices land
        // inside the 3-sigma binomial band over 1000 draws
        let (d, s, draws) = (10_000usize, 20usize, 1000usize);
        let mut counts = vec![0u32; d];
        for seed in 0..draws as u64 {
            for &i in generate_signal(d, s, seed, None).unwrap().support().as_slice() {
                counts[i] += 1;
            }
        }
        let p = s as f64 / d as f64;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        let inside = counts
            .iter()
            .filter(|&&c| (f64::from(c) - mean).abs() <= 3.0 * sd)
            .count();
        assert!(inside as f64 / d as f64 >= 0.99, "{inside}");
        assert_eq!(counts.iter().sum::<u32>() as usize, s * draws);
    }
}
