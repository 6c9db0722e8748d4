use serde::Serialize;

use crate::error::Result;
use crate::estimators::EstimateResult;
use crate::theory::misspec_tail;
use crate::vector::SparseSignal;

/// What the estimate is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricTarget {
    /// The unit direction of the signal and its support.
    Signal,
    /// `H_k(x) / ||H_k(x)||_2` and its support, for budget `k`.
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub l2_error: f64,
    pub support_symdiff: usize,
    pub norm_abs_error: Option<f64>,
    pub norm_rel_error: Option<f64>,
}

pub fn metrics(estimate: &EstimateResult, truth: &SparseSignal, target: MetricTarget) -> Result<Metrics> {
    let (reference, support) = match target {
        MetricTarget::Signal => (truth.unit().clone(), truth.support().clone()),
        MetricTarget::TopK(k) => {
            let z = misspec_tail(truth, k)?.z;
            let support = z.support();
            (z, support)
        }
    };
    let l2_error = estimate.direction.sub(&reference)?.norm2();
    let support_symdiff = estimate.direction.support().symmetric_difference(&support);
    let (norm_abs_error, norm_rel_error) = match (&estimate.scaled, estimate.branch) {
        (Some(scaled), Some(_)) => {
            let abs = (scaled.norm2() - truth.norm()).abs();
            (Some(abs), Some(abs / truth.norm()))
        }
        _ => (None, None),
    };
    Ok(Metrics {
        l2_error,
        support_symdiff,
        norm_abs_error,
        norm_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{estimate_direction_from_scores, estimate_with_norm_from_scores};
    use crate::vector::Vector;

    fn signal(x: &[f64]) -> SparseSignal {
        SparseSignal::new(Vector::new(x.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn exact_recovery_has_zero_error() {
        let truth = signal(&[0.0, 3.0, -4.0, 0.0]);
        let est = estimate_direction_from_scores(vec![0.0, 3.0, -4.0, 0.0], 2).unwrap();
        let m = metrics(&est, &truth, MetricTarget::Signal).unwrap();
        assert_eq!(m.l2_error, 0.0);
        assert_eq!(m.support_symdiff, 0);
        assert_eq!(m.norm_abs_error, None);
    }

    #[test]
    fn disjoint_supports_give_s_plus_k() {
        let mut x = vec![0.0; 60];
        let mut v = vec![0.0; 60];
        for i in 0..20 {
            x[i] = 1.0 + i as f64;
            v[59 - i] = 1.0 + i as f64;
        }
        let est = estimate_direction_from_scores(v, 20).unwrap();
        let m = metrics(&est, &signal(&x), MetricTarget::Signal).unwrap();
        assert_eq!(m.support_symdiff, 40);
        assert!(m.l2_error <= 2.0);
        assert!((m.l2_error - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norm_errors_use_scaled_estimate() {
        let truth = signal(&[3.0, -4.0, 0.0]);
        // augmented optimum (0.6, -0.8, 0, 0.5)/norm gives scaled = R/t0 * x0
        let est = estimate_with_norm_from_scores(vec![0.6, -0.8, 0.0, 0.5], 2.5, 3).unwrap();
        let m = metrics(&est, &truth, MetricTarget::Signal).unwrap();
        // ||scaled|| = R / t0 * ||x0|| = 2.5 / 0.5 * 1 = 5
        assert!(m.norm_abs_error.unwrap() < 1e-12);
        assert!(m.norm_rel_error.unwrap() < 1e-12);
        assert!(m.l2_error < 1e-15);
    }

    #[test]
    fn top_k_target_with_k_at_least_s_is_the_signal() {
        let truth = signal(&[1.0, 0.0, 2.0, 0.0]);
        let est = estimate_direction_from_scores(vec![1.0, 0.5, 2.0, 0.0], 3).unwrap();
        let a = metrics(&est, &truth, MetricTarget::Signal).unwrap();
        let b = metrics(&est, &truth, MetricTarget::TopK(3)).unwrap();
        assert_eq!(a, b);
    }
}
