//! One-bit compressed sensing with Gaussian measurements.
//!
//! A signal `x` in `R^d` is observed only through the signs `y_i = sign(<a_i, x>)`
//! of `n` Gaussian projections, possibly with random sign flips or a Gaussian
//! dither. The estimator is a single correlation step followed by hard
//! thresholding: `x_hat = H_k(A^T y) / ||H_k(A^T y)||_2`.
//!
//! ```
//! use onebit::{estimate_direction, gaussian_ensemble, sign_measure};
//!
//! let x = [0.0, 3.0, -4.0, 0.0, 0.0];
//! let a = gaussian_ensemble(2000, x.len(), 7).unwrap();
//! let y = sign_measure(&a, &x).unwrap();
//! let est = estimate_direction(&a, &y, 2).unwrap();
//! assert_eq!(est.support.as_slice(), &[1, 2]);
//! ```

pub mod cli;
pub mod error;
pub mod estimators;
pub mod format;
pub mod harness;
pub mod io;
pub mod rng;
pub mod sensing;
pub mod theory;
pub mod vector;

pub use error::{Error, Result};
pub use estimators::{
    brute_force_oracle, estimate, estimate_direction, estimate_direction_from_scores, estimate_nonneg_direction,
    estimate_ternary, estimate_with_norm, objective, Branch, ConstraintVariant, EstimateResult,
};
pub use sensing::{
    augment, dithered_measure, flip_noise_measure, gaussian_ensemble, linear_measure, sign_measure,
    FlipProbability, MeasurementModel, MeasurementSet, ResponseModel, SensingMatrix,
};
pub use theory::{error_bound, lambda_closed_form, lambda_monte_carlo, misspec_tail, sign_lambda};
pub use vector::{hard_threshold, normalize, top_k_support, IndexSet, SparseSignal, Vector};
