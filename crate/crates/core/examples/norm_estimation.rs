//! A known Gaussian dither makes the signal norm identifiable from signs.

use onebit::harness::generate_signal;
use onebit::{dithered_measure, estimate_with_norm, gaussian_ensemble};

pub fn run() -> onebit::Result<()> {
    let (d, s, n) = (100, 4, 20_000);
    let x = generate_signal(d, s, 3, None)?;
    let r = 2.0 * x.norm();
    let a = gaussian_ensemble(n, d, 4)?;
    let y = dithered_measure(&a, x.vector(), r, 5)?;
    let b = y.dither.clone().expect("dithered measurements keep b");
    let est = estimate_with_norm(&a, &y, &b, r, s + 1)?;
    let scaled = est.scaled.as_ref().expect("norm estimate");
    println!("true norm      {:.2}", x.norm());
    println!("estimated norm {:.2}", scaled.norm2());
    println!("branch {:?}, t0 = {:.4}", est.branch, est.t0.unwrap_or(0.0));
    println!("direction error {:.4}", est.direction.sub(x.unit())?.norm2());
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
