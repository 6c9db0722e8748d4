//! The two facts the analysis rests on: E[a_i y_i] = lambda x, and the
//! sup-norm deviation of A^T y / n scales like sqrt(ln d / n).

use onebit::harness::{verify_concentration, verify_mean_identity, ConcentrationConfig};
use onebit::{lambda_closed_form, lambda_monte_carlo, FlipProbability, MeasurementModel};

pub fn run() -> onebit::Result<()> {
    let flip = MeasurementModel::SignFlip {
        p: FlipProbability::Uniform(0.1),
    };
    for model in [MeasurementModel::NoiselessSign, flip] {
        let exact = lambda_closed_form(&model)?.lambda;
        let mc = lambda_monte_carlo(&model, 200_000, 1)?;
        let mean = verify_mean_identity(&model, 10, 50_000, 2, 0.05, None)?;
        println!(
            "{}: lambda {exact:.4} (MC {mc:.4}), mean deviation {:.4}",
            model.label(),
            mean.deviation
        );
    }
    for d in [50, 400] {
        let r = verify_concentration(&ConcentrationConfig::new(MeasurementModel::NoiselessSign, d, 1000, 30, 3))?;
        println!("d={d:>4}: normalized deviation p95 {:.3}, max {:.3}", r.p95, r.max);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
