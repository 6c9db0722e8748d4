//! End-to-end acceptance run. Every criterion prints one PASS/FAIL line; the
//! process exits nonzero if any fails. The last criterion reruns all the
//! others with the same seed and compares their CSV output byte for byte.
//!
//! CSVs land in `$CARGO_TARGET_TMPDIR/acceptance/`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use onebit::harness::experiment::{trials_csv, ExperimentKind, ExperimentSpec, GridReport, RadiusMode};
use onebit::harness::signal::{generate_signal, SignalClass};
use onebit::harness::verify::{
    calibrate_c_emp, verify_concentration, verify_mean_identity, verify_oracle, ConcentrationConfig, OracleFamily,
};
use onebit::harness::run_grid;
use onebit::rng::{derive_seed, stream, Purpose};
use onebit::sensing::{FlipProbability, MeasurementModel, ZeroResponse};
use onebit::theory::{lambda_monte_carlo, misspec_tail};
use rand::Rng;

const MASTER_SEED: u64 = 20_160_701;

struct Outcome {
    passed: bool,
    detail: String,
    csv: String,
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn(&mut Context) -> Outcome,
}

/// Values shared between criteria.
#[derive(Default)]
struct Context {
    c_emp: Option<f64>,
}

const fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn flip(p: f64) -> MeasurementModel {
    MeasurementModel::SignFlip {
        p: FlipProbability::Uniform(p),
    }
}

fn grid(
    kind: ExperimentKind,
    model: MeasurementModel,
    d: usize,
    n_grid: &[usize],
    s: usize,
    ks: &[usize],
    trials: usize,
) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(kind, model, s, ks[0]);
    if ks.len() > 1 {
        spec.k = None;
        spec.k_grid = Some(ks.to_vec());
    }
    spec.d_grid = vec![d];
    spec.n_grid = n_grid.to_vec();
    spec.trials = trials;
    spec.master_seed = Some(MASTER_SEED);
    spec
}

fn run(spec: &ExperimentSpec) -> GridReport {
    let report = run_grid(spec).expect("grid runs");
    assert!(report.failures.is_empty(), "trial failures: {:?}", report.failures);
    report
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = values.len() / 2;
    if values.len() % 2 == 0 {
        0.5 * (values[m - 1] + values[m])
    } else {
        values[m]
    }
}

fn oracle(families: &[OracleFamily]) -> Outcome {
    let r = verify_oracle(200, MASTER_SEED, families).unwrap();
    let bad = r.mismatches().count();
    Outcome {
        passed: bad == 0 && r.checks.len() == 200 * families.len(),
        detail: format!(
            "{} instances, {bad} mismatches, max gap {:.1e}",
            r.checks.len(),
            r.max_value_gap
        ),
        csv: r.to_csv(),
    }
}

fn c1_oracle_unit(_: &mut Context) -> Outcome {
    oracle(&[OracleFamily::Unit])
}

fn c2_oracle_constrained(_: &mut Context) -> Outcome {
    oracle(&[OracleFamily::Nonneg, OracleFamily::Ternary])
}

fn c3_lambda(_: &mut Context) -> Outcome {
    let samples = 1_000_000;
    let sign = lambda_monte_carlo(&MeasurementModel::NoiselessSign, samples, MASTER_SEED).unwrap();
    let flipped = lambda_monte_carlo(&flip(0.25), samples, MASTER_SEED).unwrap();
    let zero = lambda_monte_carlo(&ZeroResponse, samples, MASTER_SEED).unwrap();
    let passed = (sign - 0.7978845608).abs() <= 0.01 && (flipped - 0.3989422804).abs() <= 0.01 && zero == 0.0;
    Outcome {
        passed,
        detail: format!("sign {sign:.5}, flip(0.25) {flipped:.5}"),
        csv: format!("model,lambda\nsign,{sign:e}\nflip,{flipped:e}\nzero,{zero:e}\n"),
    }
}

fn c4_mean_identity(_: &mut Context) -> Outcome {
    let (d, n) = (20, 200_000);
    let sign = verify_mean_identity(&MeasurementModel::NoiselessSign, d, n, MASTER_SEED, 0.03, None).unwrap();
    let flipped = verify_mean_identity(&flip(0.25), d, n, MASTER_SEED, 0.03, None).unwrap();
    Outcome {
        passed: sign.passed && flipped.passed && (flipped.lambda - 0.3989).abs() < 1e-4,
        detail: format!(
            "deviation sign {:.4}, flip {:.4} (tolerance 0.03)",
            sign.deviation, flipped.deviation
        ),
        csv: format!(
            "model,lambda,deviation\nsign,{:e},{:e}\nflip,{:e},{:e}\n",
            sign.lambda, sign.deviation, flipped.lambda, flipped.deviation
        ),
    }
}

fn c5_concentration(ctx: &mut Context) -> Outcome {
    let z = |d| {
        verify_concentration(&ConcentrationConfig::new(
            MeasurementModel::NoiselessSign,
            d,
            5000,
            100,
            derive_seed(MASTER_SEED, &[d as u64]),
        ))
        .unwrap()
    };
    let small = z(500);
    let large = z(2000);
    let rel = (small.p95 - large.p95).abs() / small.p95.min(large.p95);
    let cal = calibrate_c_emp(MASTER_SEED).unwrap();
    ctx.c_emp = Some(cal.max);
    let mut csv = String::from("d,n,reps,p95,max\n");
    for r in [&small, &large, &cal] {
        csv.push_str(&format!("{},{},{},{:e},{:e}\n", r.d, r.n, r.z.len(), r.p95, r.max));
    }
    Outcome {
        passed: rel < 0.25,
        detail: format!(
            "p95 {:.3} (d=500) vs {:.3} (d=2000), relative gap {:.1}%; C_emp = {:.3}",
            small.p95,
            large.p95,
            100.0 * rel,
            cal.max
        ),
        csv,
    }
}

fn c6_rate(_: &mut Context) -> Outcome {
    let ns = [1000, 4000, 16000];
    let spec = grid(ExperimentKind::SparseApprox, MeasurementModel::NoiselessSign, 1000, &ns, 10, &[10], 50);
    let report = run(&spec);
    let medians: Vec<f64> = ns
        .iter()
        .map(|&n| report.aggregate(1000, n, 10).unwrap().l2_error.unwrap().median)
        .collect();
    let ratios = [medians[0] / medians[1], medians[1] / medians[2]];
    Outcome {
        passed: ratios.iter().all(|r| (1.6..=2.6).contains(r)),
        detail: format!(
            "medians {:.4} {:.4} {:.4}, ratios {:.3} {:.3}",
            medians[0], medians[1], medians[2], ratios[0], ratios[1]
        ),
        csv: trials_csv(&report.trials).unwrap(),
    }
}

fn c7_figure1(_: &mut Context) -> Outcome {
    let ns = [100, 1000, 10000];
    let spec = grid(ExperimentKind::SparseApprox, MeasurementModel::NoiselessSign, 2000, &ns, 20, &[20], 100);
    let report = run(&spec);
    let means: Vec<f64> = ns
        .iter()
        .map(|&n| report.aggregate(2000, n, 20).unwrap().l2_error.unwrap().mean)
        .collect();
    Outcome {
        passed: means[0] > means[1] && means[1] > means[2] && means[2] <= means[0] / 5.0,
        detail: format!("mean l2 error {:.4} {:.4} {:.4}", means[0], means[1], means[2]),
        csv: trials_csv(&report.trials).unwrap(),
    }
}

fn c8_support(_: &mut Context) -> Outcome {
    let mut spec = grid(
        ExperimentKind::SupportRecovery,
        MeasurementModel::NoiselessSign,
        1000,
        &[200, 4000],
        10,
        &[10],
        100,
    );
    spec.signal = SignalClass::EqualMagnitude;
    let report = run(&spec);
    let exact = |n| report.cell(1000, n, 10).filter(|t| t.support_symdiff == 0).count();
    let (low, high) = (exact(200), exact(4000));
    Outcome {
        passed: high >= 95 && low < high,
        detail: format!("exact support in {high}/100 trials at n=4000, {low}/100 at n=200"),
        csv: trials_csv(&report.trials).unwrap(),
    }
}

fn c9_norm(_: &mut Context) -> Outcome {
    let mut spec = grid(
        ExperimentKind::NormEstimation,
        MeasurementModel::Dithered { r: 2.0 },
        500,
        &[20_000, 40_000],
        5,
        &[6],
        100,
    );
    spec.radius = RadiusMode::Relative;
    let report = run(&spec);
    let medians = |n| {
        let mut norm: Vec<f64> = report.cell(500, n, 6).map(|t| t.norm_rel_error.unwrap()).collect();
        let mut dir: Vec<f64> = report.cell(500, n, 6).map(|t| t.l2_error).collect();
        (median(&mut norm), median(&mut dir))
    };
    let (norm1, dir1) = medians(20_000);
    let (norm2, dir2) = medians(40_000);
    Outcome {
        passed: norm1 <= 0.15 && dir1 <= 0.15 && norm2 < norm1 && dir2 < dir1,
        detail: format!(
            "median norm error {norm1:.4} -> {norm2:.4}, direction error {dir1:.4} -> {dir2:.4}"
        ),
        csv: trials_csv(&report.trials).unwrap(),
    }
}

fn c10_misspecification(ctx: &mut Context) -> Outcome {
    let c_emp = ctx.c_emp.expect("criterion 5 calibrates C_emp");
    let (d, n) = (2000, 10_000);
    let ks = [1, 5, 10, 15];
    let spec = grid(ExperimentKind::Misspecification, MeasurementModel::NoiselessSign, d, &[n], 20, &ks, 100);
    let report = run(&spec);
    let lambda = (2.0 / std::f64::consts::PI).sqrt();
    let mut passed = true;
    let mut parts = Vec::new();
    for k in ks {
        let stat = (c_emp / lambda) * (k as f64 * (d as f64).ln() / n as f64).sqrt();
        let (mut inside, mut inside_doubled, mut total) = (0, 0, 0);
        for t in report.cell(d, n, k) {
            let tail = (2.0 * k as f64).sqrt() * t.tail_inf.unwrap();
            total += 1;
            inside += usize::from(t.l2_error <= tail + stat);
            // the envelope that follows from the optimality inequality without
            // dropping constants: 2 sqrt(2k) tail + 2 sqrt(2) (C_emp / lambda) sqrt(k ln d / n)
            inside_doubled += usize::from(t.l2_error <= 2.0 * tail + 2.0 * 2f64.sqrt() * stat);
        }
        passed &= total == 100 && inside >= 95;
        parts.push(format!("k={k}: {inside}/{total} ({inside_doubled})"));
    }
    Outcome {
        passed,
        detail: format!(
            "within envelope {} (in parentheses: inside the envelope with constants kept)",
            parts.join(", ")
        ),
        csv: trials_csv(&report.trials).unwrap(),
    }
}

/// `||z - x||_inf` computed directly from a stable sort, independent of the
/// library's selection routine.
fn direct_tail(x: &[f64], k: usize) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let mut order: Vec<usize> = (0..unit.len()).collect();
    order.sort_by(|&a, &b| unit[b].abs().partial_cmp(&unit[a].abs()).unwrap().then(a.cmp(&b)));
    let mut z = vec![0.0; unit.len()];
    for &i in &order[..k] {
        z[i] = unit[i];
    }
    let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    z.iter()
        .zip(&unit)
        .map(|(a, b)| (a / zn - b).abs())
        .fold(0.0, f64::max)
}

fn c11_tail_closed_form(_: &mut Context) -> Outcome {
    let mut rng = stream(MASTER_SEED, Purpose::Instance, 11);
    let mut worst = 0.0f64;
    let mut checks = 0;
    let mut csv = String::from("signal,d,s,k,closed,direct\n");
    for i in 0..1000u64 {
        let d = rng.random_range(2..=60);
        let s = rng.random_range(1..=d.min(25));
        let x = generate_signal(d, s, derive_seed(MASTER_SEED, &[11, i]), None).unwrap();
        for k in 1..=s {
            let closed = misspec_tail(&x, k).unwrap().inf_term;
            let direct = direct_tail(x.vector(), k);
            worst = worst.max((closed - direct).abs());
            checks += 1;
            csv.push_str(&format!("{i},{d},{s},{k},{closed:e},{direct:e}\n"));
        }
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("{checks} (signal, k) pairs, max gap {worst:.1e}"),
        csv,
    }
}

const CRITERIA: [Criterion; 11] = [
    Criterion {
        id: 1,
        name: "oracle equivalence, unit sphere",
        limit: secs(10),
        run: c1_oracle_unit,
    },
    Criterion {
        id: 2,
        name: "oracle equivalence, nonnegative and ternary",
        limit: secs(30),
        run: c2_oracle_constrained,
    },
    Criterion {
        id: 3,
        name: "lambda closed form vs Monte Carlo",
        limit: secs(5),
        run: c3_lambda,
    },
    Criterion {
        id: 4,
        name: "mean identity",
        limit: secs(30),
        run: c4_mean_identity,
    },
    Criterion {
        id: 5,
        name: "sup-norm concentration is dimension free",
        limit: secs(120),
        run: c5_concentration,
    },
    Criterion {
        id: 6,
        name: "error rate 1/sqrt(n)",
        limit: secs(120),
        run: c6_rate,
    },
    Criterion {
        id: 7,
        name: "error decay over n",
        limit: secs(180),
        run: c7_figure1,
    },
    Criterion {
        id: 8,
        name: "exact support recovery",
        limit: None,
        run: c8_support,
    },
    Criterion {
        id: 9,
        name: "norm estimation with dither",
        limit: None,
        run: c9_norm,
    },
    Criterion {
        id: 10,
        name: "misspecified sparsity envelope",
        limit: None,
        run: c10_misspecification,
    },
    Criterion {
        id: 11,
        name: "truncation tail closed form",
        limit: secs(5),
        run: c11_tail_closed_form,
    },
];

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{verdict}] {name}: {detail}");
}

fn main() -> ExitCode {
    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&out_dir).unwrap();

    let mut ctx = Context::default();
    let mut csvs = Vec::new();
    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = (c.run)(&mut ctx);
        let elapsed = start.elapsed();
        let in_time = c.limit.is_none_or(|l| elapsed <= l);
        let limit = c.limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
        let detail = format!("{} ({:.1}s{limit})", outcome.detail, elapsed.as_secs_f64());
        let passed = outcome.passed && in_time;
        report(c.id, c.name, passed, &detail);
        failed += usize::from(!passed);
        fs::write(out_dir.join(format!("criterion_{:02}.csv", c.id)), &outcome.csv).unwrap();
        csvs.push(outcome.csv);
    }

    let mut ctx = Context::default();
    let mut differing = Vec::new();
    for (c, first) in CRITERIA.iter().zip(&csvs) {
        if (c.run)(&mut ctx).csv != *first {
            differing.push(c.id.to_string());
        }
    }
    let passed = differing.is_empty();
    let detail = if passed {
        format!("{} CSV outputs byte-identical on rerun", csvs.len())
    } else {
        format!("CSV differs on rerun for criteria {}", differing.join(", "))
    };
    report(12, "reproducibility", passed, &detail);
    failed += usize::from(!passed);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
