//! Full acceptance suite. Prints one line per criterion and exits nonzero if
//! any fails. Pass criterion numbers as arguments to run a subset, and set
//! `ACCEPTANCE_SEED` to change the master seed.

use std::process::ExitCode;
use std::time::Instant;

use coalesce::experiments::{
    run, AiryTable, Avoidance, BmDuality, Experiment, GenDuality, Marginal, NnNecessity, QvCheck, RwDuality, StaggeredDuality, Stationary,
    Wedge,
};
use coalesce::special::{airy_ai, airy_ai_prime, stationary_intensity, GAMMA_ONE_THIRD, GAMMA_TWO_THIRDS};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const DEFAULT_SEED: u64 = 20_240_601;

type Criterion = (usize, &'static str, Box<dyn Fn() -> Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn experiment<E: Experiment>(seed: u64, check: impl FnOnce(&E::Output) -> Option<String>) -> Outcome {
    match run(&E::default(), seed) {
        Ok(report) => {
            let extra = check(&report.result);
            Outcome {
                passed: report.passed() && extra.is_none(),
                detail: match extra {
                    Some(e) => format!("{}; {e}", report.summary),
                    None => report.summary,
                },
            }
        }
        Err(e) => Outcome {
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn criterion_3(seed: u64) -> Outcome {
    experiment::<RwDuality>(seed, |out| {
        let len = |v: &serde_json::Value| v.as_array().map_or(0, Vec::len);
        let sizes: Vec<usize> = out
            .tests
            .iter()
            .filter(|t| len(&t.config["x"]) == len(&t.config["y"]))
            .map(|t| len(&t.config["x"]))
            .collect();
        (!(sizes.contains(&2) && sizes.contains(&3))).then(|| "cases do not cover m = n = 2 and 3".to_string())
    })
}

fn rational(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap();
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    BigRational::new(format!("{int}{frac}").parse::<BigInt>().unwrap(), den)
}

// Maclaurin series for Ai in exact rational arithmetic, 60 terms.
fn airy_oracle(x: f64) -> f64 {
    let c1 = rational("0.3550280538878172392600631860041831763980");
    let c2 = rational("0.2588194037928067984051835601892039634791");
    let x = BigRational::from_float(x).unwrap();
    let x3 = &x * &x * &x;
    let (mut f, mut g) = (BigRational::zero(), BigRational::zero());
    let (mut a, mut b) = (BigRational::one(), x.clone());
    for k in 0..60u32 {
        if k > 0 {
            let k3 = BigInt::from(3 * k);
            a = a * &x3 / BigRational::from_integer((&k3 - 1) * &k3);
            b = b * &x3 / BigRational::from_integer(&k3 * (&k3 + 1));
        }
        f += &a;
        g += &b;
    }
    (c1 * f - c2 * g).to_f64().unwrap()
}

fn criterion_11() -> Outcome {
    let mut series_err = 0.0f64;
    for i in 0..=120 {
        let x = f64::from(i) * 0.05;
        series_err = series_err.max((airy_ai(x).unwrap() - airy_oracle(x)).abs());
    }
    let reflection = (GAMMA_ONE_THIRD * GAMMA_TWO_THIRDS - 2.0 * std::f64::consts::PI / 3f64.sqrt()).abs();
    let mut identity = 0.0f64;
    let ratio = -airy_ai_prime(0.0).unwrap() / airy_ai(0.0).unwrap();
    for lambda in [0.1f64, 1.0, 10.0] {
        let closed = (3.0 * lambda).cbrt() * GAMMA_TWO_THIRDS / GAMMA_ONE_THIRD;
        identity = identity.max((lambda.cbrt() * ratio - closed).abs());
        identity = identity.max((stationary_intensity(lambda).unwrap() - closed).abs());
    }
    let table = run(&AiryTable::default(), 0).map(|r| r.passed()).unwrap_or(false);
    Outcome {
        passed: series_err <= 1e-10 && reflection <= 1e-12 && identity <= 1e-10 && table,
        detail: format!("oracle {series_err:.1e} on [0,6], reflection {reflection:.1e}, identity {identity:.1e}, table checks {table}"),
    }
}

fn smoke_json<E: Experiment>(seed: u64, workers: usize) -> Result<String, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| run(&E::smoke(), seed).and_then(|r| r.to_json()).map_err(|e| e.to_string()))
}

fn reproducible<E: Experiment>(seed: u64) -> Result<(), String> {
    let one = smoke_json::<E>(seed, 1)?;
    let four = smoke_json::<E>(seed, 4)?;
    let again = smoke_json::<E>(seed, 4)?;
    if one == four && four == again {
        Ok(())
    } else {
        Err(E::NAME.to_string())
    }
}

fn criterion_12(seed: u64) -> Outcome {
    let checks = [
        reproducible::<GenDuality>(seed),
        reproducible::<NnNecessity>(seed),
        reproducible::<RwDuality>(seed),
        reproducible::<BmDuality>(seed),
        reproducible::<StaggeredDuality>(seed),
        reproducible::<QvCheck>(seed),
        reproducible::<Marginal>(seed),
        reproducible::<Avoidance>(seed),
        reproducible::<Wedge>(seed),
        reproducible::<Stationary>(seed),
        reproducible::<AiryTable>(seed),
    ];
    let failed: Vec<String> = checks.into_iter().filter_map(|c| c.err()).collect();
    Outcome {
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            "11 reports byte-identical across 1 and 4 workers and a rerun".to_string()
        } else {
            format!("differs: {}", failed.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let seed = std::env::var("ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: Vec<Criterion> = vec![
        (1, "generator duality", Box::new(move || experiment::<GenDuality>(seed, |_| None))),
        (
            2,
            "nearest-neighbour necessity",
            Box::new(move || experiment::<NnNecessity>(seed, |_| None)),
        ),
        (3, "lattice path duality", Box::new(move || criterion_3(seed))),
        (4, "Brownian duality", Box::new(move || experiment::<BmDuality>(seed, |_| None))),
        (
            5,
            "staggered duality",
            Box::new(move || experiment::<StaggeredDuality>(seed, |_| None)),
        ),
        (6, "quadratic covariation", Box::new(move || experiment::<QvCheck>(seed, |_| None))),
        (7, "Skellam marginal", Box::new(move || experiment::<Marginal>(seed, |_| None))),
        (8, "avoidance identity", Box::new(move || experiment::<Avoidance>(seed, |_| None))),
        (9, "Airy Laplace transform", Box::new(move || experiment::<Wedge>(seed, |_| None))),
        (
            10,
            "stationary intensity",
            Box::new(move || experiment::<Stationary>(seed, |_| None)),
        ),
        (11, "Airy kernel", Box::new(criterion_11)),
        (12, "reproducibility", Box::new(move || criterion_12(seed))),
    ];
    let mut failures = 0;
    for (id, name, f) in &criteria {
        if !wanted.is_empty() && !wanted.contains(id) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let status = if out.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {id:>2} {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), out.detail);
        if !out.passed {
            failures += 1;
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
