//! Generate, sense and recover through JSON files, the way the CLI does.

use std::fs;

use onebit::harness::generate_signal;
use onebit::io::{read_json, read_matrix, to_json, write_matrix, EstimateDocument, MeasurementDocument, SignalDocument};
use onebit::{estimate_direction, flip_noise_measure, gaussian_ensemble, FlipProbability};

pub fn run() -> onebit::Result<()> {
    let dir = std::env::temp_dir().join(format!("onebit-pipeline-{}", std::process::id()));
    fs::create_dir_all(&dir)?;

    let x = generate_signal(40, 3, 5, None)?;
    fs::write(dir.join("signal.json"), to_json(&SignalDocument::new(&x, Some(5)))?)?;
    write_matrix(&gaussian_ensemble(800, 40, 6)?, &dir.join("matrix.json"), true)?;

    let a = read_matrix(&dir.join("matrix.json"))?;
    let x: SignalDocument = read_json(&dir.join("signal.json"))?;
    let y = flip_noise_measure(&a, &x.x, FlipProbability::Uniform(0.05), 7)?;
    fs::write(dir.join("y.json"), to_json(&MeasurementDocument::new(&y, a.cols()))?)?;

    let y = read_json::<MeasurementDocument>(&dir.join("y.json"))?.measurements()?;
    let est = estimate_direction(&a, &y, 3)?;
    let doc = EstimateDocument::new(&est, "unit");
    println!("true support {:?}", x.support.as_slice());
    println!("recovered    {:?}", doc.support.as_slice());
    fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
