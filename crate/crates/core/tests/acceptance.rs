//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL but do not make the
//! process exit non-zero unless `ACCEPTANCE_STRICT=1` is set.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use walkpat::capacity::{hit_before_geometric, minimize_energy, sandwich_constant};
use walkpat::filling::{build_filling_tables, fill_samples, meander_endpoints, FillingParams, Target};
use walkpat::lattice::{count_class, enumerate_class, is_member, positive_walk_count, LatticePath, PatternClass, PatternCollection};
use walkpat::matching::{positive_walk_multiplicity, MatchingMatrix};
use walkpat::montecarlo::{
    grid_seed, simulate_waiting_time, slepian_first_level_bridge, SimConfig, WindowScanner, DEFAULT_SEED,
};
use walkpat::stats::{bessel3_cdf, biguint_ratio, half_normal_cdf, ks_statistic, rayleigh_cdf};
use walkpat::waiting::{
    brute_force_oracle, closed_form_excursion_wait, closed_form_positive_wait, expected_waits, exponent_fit,
};

const KNOWN_FAILURES: &[usize] = &[5];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < budget, format!("{:.1}s of {}s", t.as_secs_f64(), budget.as_secs()))
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

fn builtin_classes(max_len: usize) -> Vec<PatternClass> {
    let mut out = Vec::new();
    for n in 1..=max_len {
        let candidates = [
            PatternClass::excursion(n),
            PatternClass::positive(n),
            PatternClass::bridge(0.0, n),
            PatternClass::bridge(-2.0, n),
            PatternClass::bridge(3.0, n),
            PatternClass::first_passage(-1.0, n),
            PatternClass::first_passage(-3.0, n),
        ];
        out.extend(candidates.into_iter().flatten());
    }
    out
}

fn random_custom(rng: &mut ChaCha8Rng, max_len: usize, max_count: usize) -> PatternCollection {
    let n = rng.random_range(1..=max_len);
    let k = rng.random_range(1..=max_count.min(1 << n));
    let mut words = BTreeSet::new();
    while words.len() < k {
        words.insert(rng.random_range(0..1u64 << n));
    }
    PatternCollection::custom(words.into_iter().map(|w| LatticePath::from_bits(w, n)).collect()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for class in builtin_classes(12) {
        let Ok(coll) = enumerate_class(&class) else { continue };
        if coll.is_empty() {
            continue;
        }
        let solved = match expected_waits(&coll) {
            Ok(r) => r.collection,
            Err(e) => return Outcome::new(false, format!("{}: solver error {e}", class.label())),
        };
        let oracle = match brute_force_oracle(&coll) {
            Ok(v) => v,
            Err(e) => return Outcome::new(false, format!("{}: oracle error {e}", class.label())),
        };
        if solved != oracle {
            return Outcome::new(false, format!("{} n={}: {solved} vs {oracle}", class.label(), class.len()));
        }
        checked += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for i in 0..20 {
        let coll = random_custom(&mut rng, 10, 24);
        let solved = expected_waits(&coll).map(|r| r.collection);
        let oracle = brute_force_oracle(&coll);
        match (solved, oracle) {
            (Ok(a), Ok(b)) if a == b => checked += 1,
            (a, b) => return Outcome::new(false, format!("custom #{i}: {a:?} vs {b:?}")),
        }
    }
    let (fast, t) = within_budget(start, Duration::from_secs(120));
    Outcome::new(fast, format!("{checked} collections agree exactly, {t}"))
}

fn criterion_2() -> Outcome {
    let wait = |c: PatternClass| expected_waits(&enumerate_class(&c).unwrap()).unwrap().collection;
    let custom = |s: &str| expected_waits(&PatternCollection::custom(vec![LatticePath::parse(s).unwrap()]).unwrap())
        .unwrap()
        .collection;
    let got = [
        ("E^4", wait(PatternClass::excursion(4).unwrap()), 16),
        ("E^6", wait(PatternClass::excursion(6).unwrap()), 32),
        ("M^3", wait(PatternClass::positive(3).unwrap()), 7),
        ("{++}", custom("++"), 6),
        ("{+-}", custom("+-"), 4),
    ];
    let bad: Vec<String> =
        got.iter().filter(|(_, v, want)| *v != int(*want)).map(|(name, v, want)| format!("{name}={v}≠{want}")).collect();
    let shown: Vec<String> = got.iter().map(|(name, v, _)| format!("{name}={v}")).collect();
    Outcome::new(bad.is_empty(), if bad.is_empty() { shown.join(", ") } else { bad.join(", ") })
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let e = closed_form_excursion_wait(50).unwrap().to_f64().unwrap() / (4.0 * PI.sqrt() * 50f64.powf(1.5));
    let m = closed_form_positive_wait(100).unwrap().to_f64().unwrap() / 400.0;
    let ok = |r: f64| (0.95..=1.05).contains(&r);
    let (fast, t) = within_budget(start, Duration::from_secs(1));
    Outcome::new(ok(e) && ok(m) && fast, format!("excursion ratio {e:.4}, positive ratio {m:.4}, {t}"))
}

fn criterion_4() -> Outcome {
    for len in (3..=13).step_by(2) {
        let n2 = len - 1;
        // 1 + Σ_{l=1}^{2n} k(M^l)/2^l from the counts alone
        let mut want = BigRational::one();
        for l in 1..=n2 {
            want += BigRational::new(positive_walk_count(l).into(), (BigUint::one() << l).into());
        }
        if positive_walk_multiplicity(n2 / 2).unwrap() != want {
            return Outcome::new(false, format!("multiplicity mismatch at length {len}"));
        }
        let m = MatchingMatrix::build(&enumerate_class(&PatternClass::positive(len).unwrap()).unwrap()).unwrap();
        if let Some((i, s)) = m.row_sums().into_iter().enumerate().find(|(_, s)| *s != want) {
            return Outcome::new(false, format!("length {len}, row {i}: {s} vs {want}"));
        }
    }
    Outcome::new(true, "every row sum matches for lengths 3..13")
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let grid = [100usize, 200, 500, 1000, 2000];
    let published = [179.805, 358.249, 893.041, 1800.002, 3682.022];
    let published_zeta = [0.9945, 0.9968, 1.0112, 1.0375];
    let mut rows = Vec::new();
    for &n in &grid {
        let reps = if n <= 500 { 10_000 } else { 1_000 };
        let class = PatternClass::first_passage(-1.0, n).unwrap();
        let r = simulate_waiting_time(&class, &SimConfig::new(grid_seed(DEFAULT_SEED, n), reps)).unwrap();
        rows.push((n, r.mean_wait, r.std_error, r.censored));
    }
    let mut pass = true;
    let mut detail = Vec::new();
    for (&(n, mean, se, censored), want) in rows.iter().zip(published) {
        if n == 100 || n == 2000 {
            let ok = (mean - want).abs() <= 3.0 * se && censored == 0;
            pass &= ok;
            // every column sum is at least 1, so the exact wait is at least 2^n / k
            let class = PatternClass::first_passage(-1.0, n).unwrap();
            let floor = 1.0 / biguint_ratio(&count_class(&class).unwrap(), n);
            detail.push(format!("n={n}: {mean:.1}±{se:.1} vs {want} (exact wait ≥ {floor:.1})"));
        }
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.1)).collect();
    let zeta = exponent_fit(&pairs).unwrap();
    for i in 0..zeta.len() {
        let (a, b) = (&rows[i], &rows[i + 1]);
        let se = ((a.2 / a.1).powi(2) + (b.2 / b.1).powi(2)).sqrt() / (b.0 as f64 / a.0 as f64).ln();
        pass &= (zeta[i] - published_zeta[i]).abs() <= 3.0 * se;
    }
    let zs: Vec<String> = zeta.iter().map(|z| format!("{z:.4}")).collect();
    detail.push(format!("ζ [{}] vs {published_zeta:?}", zs.join(", ")));
    let (fast, t) = within_budget(start, Duration::from_secs(300));
    detail.push(t);
    Outcome::new(pass && fast, detail.join("; "))
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [100usize, 400] {
        let class = PatternClass::bridge(0.0, n).unwrap();
        let r = simulate_waiting_time(&class, &SimConfig::new(grid_seed(DEFAULT_SEED, n), 10_000)).unwrap();
        let nf = n as f64;
        let upper = r.mean_wait / nf <= 4.2;
        let lower = r.mean_wait >= 0.7 * (PI * nf).sqrt();
        let s = slepian_first_level_bridge(n, &[0.5], &SimConfig::new(grid_seed(DEFAULT_SEED + 1, n), 10_000)).unwrap();
        let slepian = s.mean_f_over_n <= 3.2;
        pass &= upper && lower && slepian && r.censored == 0;
        detail.push(format!(
            "2n={n}: E T/2n={:.3}±{:.3}, E T/√(π2n)={:.2}, mean F/n={:.3}±{:.3}",
            r.mean_wait / nf,
            r.std_error / nf,
            r.mean_wait / (PI * nf).sqrt(),
            s.mean_f_over_n,
            s.se_f_over_n
        ));
    }
    Outcome::new(pass, detail.join("; "))
}

fn criterion_7() -> Outcome {
    let sets = [
        enumerate_class(&PatternClass::excursion(6).unwrap()).unwrap(),
        enumerate_class(&PatternClass::positive(5).unwrap()).unwrap(),
        PatternCollection::custom(vec![LatticePath::parse("++").unwrap()]).unwrap(),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (s, coll) in sets.iter().enumerate() {
        for (a, alpha) in [0.5, 0.9].into_iter().enumerate() {
            let cap = match minimize_energy(coll, alpha) {
                Ok(c) => c.capacity,
                Err(e) => return Outcome::new(false, format!("{}: {e}", coll.label())),
            };
            let high = sandwich_constant(coll.n(), alpha) * cap;
            let seed = DEFAULT_SEED + (10 * s + a) as u64;
            let hit = hit_before_geometric(coll, alpha, &SimConfig::new(seed, 100_000)).unwrap();
            let ok = hit.estimate >= 0.5 * high - 3.0 * hit.std_error && hit.estimate <= high + 3.0 * hit.std_error;
            pass &= ok;
            detail.push(format!(
                "{}(n={}),α={alpha}: {:.4}±{:.4} in [{:.4}, {:.4}]",
                coll.label(),
                coll.n(),
                hit.estimate,
                hit.std_error,
                0.5 * high,
                high
            ));
        }
    }
    Outcome::new(pass, detail.join("; "))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (target, cdf) in [(Target::Bessel3, bessel3_cdf as fn(f64) -> f64), (Target::CoMeander, half_normal_cdf)] {
        let tables = build_filling_tables(target, FillingParams::default()).unwrap();
        let draws = fill_samples(&tables, 201, &SimConfig::new(DEFAULT_SEED, 2000)).unwrap();
        let xs: Vec<f64> = draws.iter().map(|d| d.endpoint).collect();
        let ks = ks_statistic(&xs, cdf);
        pass &= ks < 0.05 && tables.residual() < 0.01;
        detail.push(format!("{} KS={ks:.4} (c_K={:.4}, K={})", target.name(), tables.residual(), tables.depth()));
    }
    let xs: Vec<f64> =
        meander_endpoints(201, &SimConfig::new(DEFAULT_SEED, 5000)).unwrap().into_iter().map(|r| r.0).collect();
    let ks = ks_statistic(&xs, rayleigh_cdf);
    pass &= ks < 0.03;
    detail.push(format!("meander KS={ks:.4}"));
    let (fast, t) = within_budget(start, Duration::from_secs(600));
    detail.push(t);
    Outcome::new(pass && fast, detail.join("; "))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut classes = builtin_classes(12);
    for _ in 0..12 {
        classes.push(random_custom(&mut rng, 12, 40).class().clone());
    }
    let mut windows = 0u64;
    for class in &classes {
        let n = class.len();
        let mut scanner = WindowScanner::new(class).unwrap();
        for w in 0..1u64 << n {
            let path = LatticePath::from_bits(w, n);
            scanner.reset();
            // an arbitrary prefix must not affect the verdict on the last n steps
            for _ in 0..rng.random_range(0..8) {
                scanner.push(rng.random_bool(0.5));
            }
            let mut hit = false;
            for i in 0..n {
                hit = scanner.push(path.is_up(i));
            }
            if hit != is_member(&path, class).unwrap() {
                return Outcome::new(false, format!("{} n={n}: window {path}", class.label()));
            }
            windows += 1;
        }
    }
    let (fast, t) = within_budget(start, Duration::from_secs(60));
    Outcome::new(fast, format!("{} classes, {windows} windows agree, {t}", classes.len()))
}

fn cli(args: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = walkpat::cli::run(std::iter::once("walkpat".to_string()).chain(args.iter().cloned()), &mut out, &mut err);
    assert_eq!(code, 0, "{args:?}: {}", String::from_utf8_lossy(&err));
    out
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["enumerate", "--class", "bridge", "--n", "10", "--format", "csv"],
        vec!["count", "--class", "fp", "--lambda", "-3", "--n", "41"],
        vec!["matrix", "--class", "positive", "--n", "7", "--format", "csv"],
        vec!["wait", "--class", "excursion", "--n", "12"],
        vec!["oracle", "--class", "fp", "--lambda", "-1", "--n", "11"],
        vec!["simulate", "--class", "fp", "--lambda", "-1", "--n", "100", "--reps", "10000", "--seed", "7"],
        vec!["simulate", "--class", "bridge", "--n", "40", "--reps", "2000", "--format", "csv"],
        vec!["exponent", "--class", "fp", "--lambda", "-1", "--grid", "20,40,80", "--reps", "500"],
        vec!["slepian", "--n", "50", "--reps", "2000"],
        vec!["capacity", "--class", "excursion", "--n", "6", "--alpha", "0.9", "--reps", "5000"],
        vec!["fill-sample", "--target", "comeander", "--steps", "51", "--samples", "200"],
    ];
    let mut runs = 0;
    for cmd in &commands {
        let mut outputs = Vec::new();
        for (rep, workers) in [1, 1, 4, 7].into_iter().enumerate() {
            let mut args: Vec<String> = cmd.iter().map(|s| s.to_string()).collect();
            args.extend(["--workers".into(), workers.to_string()]);
            let paths = dir.path().join(format!("paths{rep}.csv"));
            if cmd[0] == "fill-sample" {
                args.extend(["--paths".into(), paths.display().to_string()]);
            }
            let mut bytes = cli(&args);
            if cmd[0] == "fill-sample" {
                bytes.extend(fs::read(&paths).unwrap());
            }
            outputs.push(bytes);
            runs += 1;
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return Outcome::new(false, format!("`{}` output differs across runs", cmd.join(" ")));
        }
    }
    Outcome::new(true, format!("{} subcommand runs byte-identical across worker counts 1/4/7", runs))
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut unexpected = Vec::new();
    for (i, run) in criteria.iter().enumerate() {
        let id = i + 1;
        let outcome = run();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (outcome.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2}: {tag}: {}", outcome.detail);
        if !outcome.pass && (strict || !known) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
