//! A small Monte Carlo grid, aggregated to CSV.

use onebit::harness::experiment::aggregate_csv;
use onebit::harness::{run_grid, ExperimentSpec};

const SPEC: &str = r#"{
    "d_grid": [200],
    "n_grid": [100, 400, 1600],
    "s": 5,
    "k": 5,
    "model": {"kind": "sign_flip", "p": 0.1},
    "trials": 10,
    "master_seed": 9,
    "experiment_kind": "sparse_approx"
}"#;

pub fn run() -> onebit::Result<()> {
    let spec = ExperimentSpec::from_json(SPEC)?;
    let report = run_grid(&spec)?;
    print!("{}", aggregate_csv(&report.aggregates)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
