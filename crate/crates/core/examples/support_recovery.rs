//! Exact support recovery once n is large enough for the smallest nonzero
//! entry to clear the noise floor.

use onebit::harness::{generate_signal_with, SignalClass};
use onebit::theory::support_condition;
use onebit::{estimate_direction, gaussian_ensemble, sign_lambda, sign_measure};

pub fn run() -> onebit::Result<()> {
    let (d, s) = (300, 6);
    let x = generate_signal_with(d, s, 7, &SignalClass::EqualMagnitude)?;
    let x_min = x.unit().iter().filter(|v| **v != 0.0).fold(f64::INFINITY, |m, v| m.min(v.abs()));
    println!("support {:?}, x_min {x_min:.4}", x.support().as_slice());
    for n in [100, 400, 3000] {
        let a = gaussian_ensemble(n, d, 8)?;
        let y = sign_measure(&a, x.vector())?;
        let est = estimate_direction(&a, &y, s)?;
        let condition = support_condition(x_min, sign_lambda(), s, d, n, 1.0)?;
        println!(
            "n={n:>5}  symdiff={}  x_min > bound (C=1): {}",
            est.support.symmetric_difference(x.support()),
            condition.satisfied_condition.unwrap_or(false)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
