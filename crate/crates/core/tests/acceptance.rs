//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Criterion 7 needs the six public datasets and only runs when
//! `BENFORD_DATASETS` names a directory holding them (see README).

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use benford_severity::asymptotics::{constants, mad_moments, AsymptoticConstants};
use benford_severity::benford::{benford_probs, mad, proportions};
use benford_severity::digits::{DigitSystem, ParseOptions};
use benford_severity::mc::{replication_rng, simulate, SimulationSpec};
use benford_severity::report::load_counts;
use benford_severity::severity::{
    delta_star, generic_normal_severity, mean_test_noncentrality, n_min_for, run_test,
    severity_of_acceptance, severity_of_rejection, CalibrationConfig,
};
use benford_severity::specialfn::{central_chi2_cdf, noncentral_chi2_cdf, std_normal_cdf};

const FIRST: DigitSystem = DigitSystem::FirstDigit;
const TWO: DigitSystem = DigitSystem::FirstTwoDigits;

enum Verdict {
    Pass,
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<(), String>;

fn within(what: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} ± {tol}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Verdict {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    match result {
        Err(e) => Verdict::Fail(e),
        Ok(()) if elapsed > limit => Verdict::Fail(format!("took {elapsed:?}, limit {limit:?}")),
        Ok(()) => Verdict::Pass,
    }
}

// 1. δ* calibration.
fn calibration() -> Check {
    let first = delta_star(&CalibrationConfig {
        system: FIRST,
        threshold: 0.006,
        n_min: 110,
        n_max: 25_000,
        min_expected: 5.0,
    })
    .map_err(|e| e.to_string())?;
    within("δ*_9", first, 0.00321, 5e-5)?;
    let two = delta_star(&CalibrationConfig {
        system: TWO,
        threshold: 0.0012,
        n_min: 1146,
        n_max: 25_000,
        min_expected: 5.0,
    })
    .map_err(|e| e.to_string())?;
    within("δ*_90", two, 0.00037, 2e-5)
}

// 2. Minimum sample sizes.
fn n_min() -> Check {
    let a = n_min_for(FIRST, 5.0).map_err(|e| e.to_string())?;
    let b = n_min_for(TWO, 5.0).map_err(|e| e.to_string())?;
    ensure(a == 110 && b == 1146, || format!("n_min = ({a}, {b}), want (110, 1146)"))
}

// 3. One-sided normal mean example.
fn mean_example() -> Check {
    let at = |n| generic_normal_severity(2.0, mean_test_noncentrality(n, 0.0, 0.2, 2.0)).get();
    within("SEV(n=100)", at(100), 0.841, 0.001)?;
    within("SEV(n=1000)", at(1000), 0.123, 0.001)
}

// 4. Severity column of the results table, from (δ̃, n, k, δ*) alone.
fn table_severities() -> Check {
    let q9 = constants(FIRST).quad_form.sqrt();
    let q90 = constants(TWO).quad_form.sqrt();
    within("√(1′DRD1), k=9", q9, 0.5897, 0.002)?;
    within("√(1′DRD1), k=90", q90, 0.602, 0.003)?;

    let rows: [(&str, f64, u64, DigitSystem, f64, f64, f64); 6] = [
        ("Earthquakes 1st", 6.621, 19_451, FIRST, 0.00321, 0.41628, 0.003),
        ("USA cities 1st", 3.065, 19_509, FIRST, 0.00321, 0.00008, 0.00005),
        ("Canford 1st", 6.146, 15_194, FIRST, 0.00321, 0.54269, 0.003),
        ("Star distances 1st", 32.839, 48_111, FIRST, 0.00321, 1.0, 0.003),
        ("Earthquakes 1st-two", 4.873, 19_451, TWO, 0.00037, 0.00222, 0.0005),
        ("Canford 1st-two", 15.591, 15_194, TWO, 0.00037, 1.0, 0.003),
    ];
    for (name, td, n, system, ds, want, tol) in rows {
        let s = severity_of_rejection(td, ds, n, system).map_err(|e| e.to_string())?;
        within(name, s.severity.get(), want, tol)?;
    }
    let usa = severity_of_rejection(1.018, 0.00037, 19_509, TWO).map_err(|e| e.to_string())?;
    ensure(usa.severity.get() < 1e-4, || format!("USA cities 1st-two: {} not < 1e-4", usa.severity))
}

// 5. Monte Carlo check of the asymptotic null distribution.
fn monte_carlo() -> Check {
    let spec = SimulationSpec { system: FIRST, n: 20_000, reps: 2_000, seed: 42 };
    let r = simulate(&spec).map_err(|e| e.to_string())?;
    let mean_dev = (r.mad_mean_ratio() - 1.0).abs();
    ensure(mean_dev < 0.02, || format!("MAD mean ratio off by {mean_dev}"))?;
    let sd_dev = (r.mad_sd_ratio() - 1.0).abs();
    ensure(sd_dev < 0.06, || format!("MAD sd ratio off by {sd_dev}"))?;
    ensure(r.tilde_delta_mean.abs() < 0.08, || format!("mean(δ̃) = {}", r.tilde_delta_mean))?;
    ensure((r.tilde_delta_sd - 1.0).abs() < 0.08, || format!("sd(δ̃) = {}", r.tilde_delta_sd))?;
    let target = (2.0 / std::f64::consts::PI).sqrt();
    let misses: Vec<String> = r
        .folded_means
        .iter()
        .zip(&r.folded_mean_se)
        .enumerate()
        .filter(|(_, (m, _))| (*m / target - 1.0).abs() >= 0.02)
        .map(|(i, (m, se))| {
            format!("digit {} at {:+.2}% ({:+.2} MC s.e.)", i + 1, 100.0 * (m / target - 1.0), (m - target) / se)
        })
        .collect();
    ensure(misses.is_empty(), || format!("folded means outside 2% of √(2/π): {}", misses.join(", ")))
}

// 6. Special-function oracles.
fn special_functions() -> Check {
    for i in 0..=3600 {
        let x = i as f64 / 100.0;
        let chi = central_chi2_cdf(x, 1).map_err(|e| e.to_string())?.get();
        let normal = 2.0 * std_normal_cdf(x.sqrt()).get() - 1.0;
        within(&format!("χ²₁ identity at x = {x}"), chi, normal, 1e-10)?;
    }

    // 10^7 draws of (Z_1 + √5)² + Z_2² + … + Z_8², one ChaCha stream per chunk.
    const DRAWS: u64 = 10_000_000;
    const CHUNKS: u64 = 100;
    let shift = 5f64.sqrt();
    let below: u64 = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = replication_rng(2024, chunk);
            let mut hits = 0u64;
            for _ in 0..DRAWS / CHUNKS {
                let z: f64 = rng.sample(StandardNormal);
                let mut s = (z + shift) * (z + shift);
                for _ in 1..8 {
                    let z: f64 = rng.sample(StandardNormal);
                    s += z * z;
                }
                hits += u64::from(s <= 10.0);
            }
            hits
        })
        .sum();
    let empirical = below as f64 / DRAWS as f64;
    let se = (empirical * (1.0 - empirical) / DRAWS as f64).sqrt();
    let exact = noncentral_chi2_cdf(10.0, 8, 5.0).map_err(|e| e.to_string())?.get();
    within("noncentral χ²(10; 8, 5) vs sampling", exact, empirical, 3.0 * se)
}

// 8. Invariants, both digit systems.
fn invariants() -> Check {
    for system in DigitSystem::ALL {
        let b = benford_probs(system);
        let sum: f64 = b.b.iter().sum();
        within(&format!("Σb ({system})"), sum, 1.0, 1e-12)?;

        let c: &AsymptoticConstants = constants(system);
        let folded_var = 1.0 - 2.0 / std::f64::consts::PI;
        for i in 0..c.k() {
            within("R diagonal", c.r(i, i), folded_var, 1e-15)?;
            for j in 0..c.k() {
                ensure(c.r(i, j) == c.r(j, i), || format!("R not symmetric at ({i}, {j})"))?;
            }
        }

        let n_range = [200u64, 1_000, 5_000, 20_000, 100_000];
        let ds_range = [0.0, 0.0001, 0.0003, 0.001, 0.002];
        for td in [-1.0, 0.5, 2.0, 4.0] {
            for &n in &n_range {
                let mut last = f64::INFINITY;
                for &ds in &ds_range {
                    let r = severity_of_rejection(td, ds, n, system).map_err(|e| e.to_string())?;
                    let a = severity_of_acceptance(td, ds, n, system).map_err(|e| e.to_string())?;
                    let total = r.severity.get() + a.severity.get();
                    within("SEV(>) + SEV(≤)", total, 1.0, 1e-15)?;
                    let s = r.severity.get();
                    ensure(s <= last, || format!("SEV not decreasing in δ* at n = {n}"))?;
                    last = s;
                }
            }
            for &ds in &ds_range[1..] {
                let mut last = f64::INFINITY;
                for &n in &n_range {
                    let s = severity_of_rejection(td, ds, n, system).map_err(|e| e.to_string())?.severity.get();
                    ensure(s <= last, || format!("SEV not decreasing in n at δ* = {ds}"))?;
                    last = s;
                }
            }
        }
    }

    // Aggregation of the first-two-digit law to the first-digit law.
    let b9 = benford_probs(FIRST);
    let b90 = benford_probs(TWO);
    for d in 0..9 {
        let agg: f64 = b90.b[d * 10..d * 10 + 10].iter().sum();
        within("aggregated b", agg, b9.b[d], 1e-12)?;
    }
    Ok(())
}

const TABLE: [(&str, f64, f64); 6] = [
    ("earthquakes", 6.621, 4.873),
    ("usa_cities", 3.065, 1.018),
    ("canford", 6.146, 15.591),
    ("star_distances", 32.839, 29.267),
    ("genetic", 5.034, 3.765),
    ("oklahoma", 34.394, 293.700),
];

fn find_dataset(dir: &Path, stem: &str) -> Option<PathBuf> {
    std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| p.file_stem().and_then(|s| s.to_str()) == Some(stem))
}

// 7. Statistic column from the raw datasets (optional).
fn external_table(dir: &Path) -> Check {
    for (stem, td1, td2) in TABLE {
        let path = find_dataset(dir, stem).ok_or_else(|| format!("{stem}.* not found in {}", dir.display()))?;
        for (system, want) in [(FIRST, td1), (TWO, td2)] {
            let file = std::fs::File::open(&path).map_err(|e| e.to_string())?;
            let counts = load_counts(file, &ParseOptions::default(), system).map_err(|e| e.to_string())?;
            let outcome = run_test(&counts).map_err(|e| e.to_string())?;
            within(&format!("{stem} δ̃ ({system})"), outcome.tilde_delta, want, 0.005)?;
            if stem == "oklahoma" && system == TWO {
                let p = proportions(&counts).map_err(|e| e.to_string())?;
                let m = mad(&p, &benford_probs(TWO)).map_err(|e| e.to_string())?;
                within("oklahoma MAD (first-two)", m, 0.00208, 1e-5)?;
            }
        }
    }
    Ok(())
}

fn main() {
    // Make sure the cached constants are not charged to the first criterion.
    let _ = mad_moments(FIRST, 1);
    let _ = mad_moments(TWO, 1);

    let s = Duration::from_secs;
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Verdict>)> = vec![
        ("1 calibration of δ*", Box::new(move || timed(s(1), calibration))),
        ("2 n_min reproduction", Box::new(move || timed(s(1), n_min))),
        ("3 one-sided mean example", Box::new(move || timed(s(1), mean_example))),
        ("4 table severities from (δ̃, n, k)", Box::new(move || timed(s(1), table_severities))),
        ("5 Monte Carlo asymptotics", Box::new(move || timed(s(30), monte_carlo))),
        ("6 special-function oracles", Box::new(move || timed(s(60), special_functions))),
        (
            "7 table statistics from raw datasets",
            Box::new(|| match std::env::var_os("BENFORD_DATASETS") {
                None => Verdict::Skip("optional-external: set BENFORD_DATASETS to run".into()),
                Some(dir) => match external_table(Path::new(&dir)) {
                    Ok(()) => Verdict::Pass,
                    Err(e) => Verdict::Fail(e),
                },
            }),
        ),
        ("8 invariant suites", Box::new(move || timed(s(5), invariants))),
    ];

    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let verdict = run();
        let ms = start.elapsed().as_millis();
        match verdict {
            Verdict::Pass => println!("PASS  criterion {name} ({ms} ms)"),
            Verdict::Skip(why) => println!("SKIP  criterion {name}: {why}"),
            Verdict::Fail(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
