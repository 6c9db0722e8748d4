//! Nonnegative and ternary feasible sets have closed-form maximizers too;
//! check them against exhaustive enumeration on a small instance.

use onebit::harness::verify::random_instance;
use onebit::{brute_force_oracle, estimate, objective, ConstraintVariant};

pub fn run() -> onebit::Result<()> {
    let (a, y, _) = random_instance(42, 8)?;
    for variant in [
        ConstraintVariant::UnitSparse(2),
        ConstraintVariant::NonnegUnitSparse(2),
        ConstraintVariant::TernarySparse(3),
    ] {
        let est = estimate(&a, &y, variant)?;
        let x = match variant {
            ConstraintVariant::TernarySparse(_) => est.scaled.clone().expect("raw ternary vector"),
            _ => est.direction.clone(),
        };
        let (best, _) = brute_force_oracle(&a, &y, variant)?;
        println!(
            "{variant:?}: closed form {:.6}, enumeration {best:.6}, x = {:?}",
            objective(&a, &y, &x)?,
            x.as_slice()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> onebit::Result<()> {
    run()
}
