//! Underestimating the sparsity: with k < s the estimate tracks the
//! normalized top-k truncation z of the signal instead.

use onebit::harness::generate_signal;
use onebit::{estimate_direction, gaussian_ensemble, misspec_tail, sign_measure};

pub fn run() -> onebit::Result<()> {
    let (d, s, n) = (500, 12, 5000);
    let x = generate_signal(d, s, 11, None)?;
    let a = gaussian_ensemble(n, d, 12)?;
    let y = sign_measure(&a, x.vector())?;
    println!("{:>3} {:>12} {:>12} {:>14}", "k", "|xhat - z|", "|xhat - x|", "sqrt(2k)|z-x|inf");
    for k in [1, 4, 8, 12] {
        let est = estimate_direction(&a, &y, k)?;
        let tail = misspec_tail(&x, k)?;
        println!(
            "{k:>3} {:>12.4} {:>12.4} {:>14.4}",
            est.direction.sub(&tail.z)?.norm2(),
            est.direction.sub(x.unit())?.norm2(),
            tail.full_term
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
