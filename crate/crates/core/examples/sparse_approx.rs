//! Direction recovery from noiseless signs: the error shrinks like 1/sqrt(n)
//! and stays under the bound (C / lambda) sqrt(k ln d / n).

use onebit::harness::generate_signal;
use onebit::{error_bound, estimate_direction, gaussian_ensemble, sign_lambda, sign_measure};

pub fn run() -> onebit::Result<()> {
    let (d, s) = (200, 5);
    let x = generate_signal(d, s, 1, None)?;
    println!("{:>6} {:>10} {:>10}", "n", "l2 error", "bound C=3");
    for n in [250, 1000, 4000] {
        let a = gaussian_ensemble(n, d, 2)?;
        let y = sign_measure(&a, x.vector())?;
        let est = estimate_direction(&a, &y, s)?;
        let err = est.direction.sub(x.unit())?.norm2();
        let bound = error_bound(sign_lambda(), s, d, n, 3.0)?.bound;
        println!("{n:>6} {err:>10.4} {bound:>10.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
