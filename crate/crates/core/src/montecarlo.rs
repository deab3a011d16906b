//! Monte Carlo waiting times.
//!
//! Each replication runs a fresh walk until the last `n` increments form a
//! member of the class. Replication `i` draws from ChaCha8 stream `i` of the
//! run seed, so results depend on the seed only and never on the worker count.

use std::collections::{HashSet, VecDeque};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{binomial, PatternClass};
use crate::waiting::exponent_fit;

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_MAX_STEPS: u64 = 1 << 32;
pub const MAX_STEPS_CAP: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: u64,
    pub max_steps: u64,
    pub workers: usize,
    /// Bin width of the optional wait histogram.
    pub histogram_bin: Option<u64>,
}

impl SimConfig {
    pub fn new(seed: u64, replications: u64) -> Self {
        SimConfig {
            seed,
            replications,
            max_steps: DEFAULT_MAX_STEPS,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            histogram_bin: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::param("replications must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::param("workers must be at least 1"));
        }
        if self.max_steps < n as u64 || self.max_steps > MAX_STEPS_CAP {
            return Err(Error::param(format!("max_steps must lie in [{n}, 2^40]")));
        }
        if self.histogram_bin == Some(0) {
            return Err(Error::param("histogram bin width must be positive"));
        }
        Ok(())
    }

    fn rng(&self, replication: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replication);
        rng
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::param(format!("thread pool: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimResult {
    pub mean_wait: f64,
    pub std_error: f64,
    pub replications: u64,
    pub replications_completed: u64,
    pub censored: u64,
    /// Set when censored replications pull the mean down.
    pub biased: bool,
    pub histogram: Option<Histogram>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: u64,
    pub counts: Vec<u64>,
}

impl SimResult {
    /// Mean and standard error of a sample of waits, `None` marking censoring at `max_steps`.
    pub fn from_waits(waits: &[Option<u64>], max_steps: u64, histogram_bin: Option<u64>) -> Self {
        let values: Vec<f64> = waits.iter().map(|w| w.unwrap_or(max_steps) as f64).collect();
        let (mean, se) = mean_and_se(&values);
        let censored = waits.iter().filter(|w| w.is_none()).count() as u64;
        let histogram = histogram_bin.map(|bin_width| {
            let top = waits.iter().map(|w| w.unwrap_or(max_steps)).max().unwrap_or(0);
            let mut counts = vec![0u64; (top / bin_width) as usize + 1];
            for w in waits {
                counts[(w.unwrap_or(max_steps) / bin_width) as usize] += 1;
            }
            Histogram { bin_width, counts }
        });
        SimResult {
            mean_wait: mean,
            std_error: se,
            replications: waits.len() as u64,
            replications_completed: waits.len() as u64 - censored,
            censored,
            biased: censored > 0,
            histogram,
        }
    }
}

/// Sample mean and `s / √N`.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug)]
enum Predicate {
    Excursion,
    Positive,
    Bridge { end: i64 },
    FirstPassage { end: i64 },
    Custom { members: HashSet<u64> },
}

/// Incremental membership test for the window of the last `n` increments.
#[derive(Clone, Debug)]
pub struct WindowScanner {
    pred: Predicate,
    n: usize,
    t: u64,
    s: i64,
    /// `S_j` at slot `j mod n`.
    ring: Vec<i64>,
    /// Sliding minimum candidates `(j, S_j)`, both coordinates increasing.
    deque: VecDeque<(u64, i64)>,
    window: u64,
}

impl WindowScanner {
    pub fn new(class: &PatternClass) -> Result<Self> {
        class.validate()?;
        let n = class.len();
        let pred = match class {
            PatternClass::Excursion { .. } => Predicate::Excursion,
            PatternClass::Positive { .. } => Predicate::Positive,
            PatternClass::Bridge { .. } => Predicate::Bridge { end: class.endpoint().unwrap_or_default() },
            PatternClass::FirstPassage { .. } => {
                Predicate::FirstPassage { end: class.endpoint().unwrap_or_default() }
            }
            PatternClass::Custom { paths, .. } => {
                if n > 64 {
                    return Err(Error::param("custom patterns longer than 64 steps cannot be scanned"));
                }
                Predicate::Custom { members: paths.iter().filter_map(|p| p.bits()).collect() }
            }
        };
        let mut scanner =
            WindowScanner { pred, n, t: 0, s: 0, ring: vec![0; n], deque: VecDeque::new(), window: 0 };
        scanner.reset();
        Ok(scanner)
    }

    pub fn pattern_len(&self) -> usize {
        self.n
    }

    /// Steps consumed since the last reset.
    pub fn time(&self) -> u64 {
        self.t
    }

    /// Restart at time 0 with `S_0 = 0`.
    pub fn reset(&mut self) {
        self.t = 0;
        self.s = 0;
        self.ring.iter_mut().for_each(|v| *v = 0);
        self.deque.clear();
        self.deque.push_back((0, 0));
        self.window = 0;
    }

    /// Feed one `±1` increment; true when the window ending now is a member.
    pub fn scan_step(&mut self, increment: i8) -> bool {
        self.push(increment > 0)
    }

    #[inline]
    pub fn push(&mut self, up: bool) -> bool {
        let n = self.n as u64;
        self.t += 1;
        self.s += if up { 1 } else { -1 };
        let (t, s) = (self.t, self.s);
        let slot = (t % n) as usize;
        let oldest = self.ring[slot]; // S_{t-n} when t >= n
        self.ring[slot] = s;

        if let Predicate::Custom { members } = &self.pred {
            self.window = (self.window >> 1) | ((up as u64) << (n - 1));
            return t >= n && members.contains(&self.window);
        }

        // keep indices in [t-n+1, t-1]
        while self.deque.front().is_some_and(|&(j, _)| j + n < t + 1) {
            self.deque.pop_front();
        }
        let inner_min = self.deque.front().map_or(i64::MAX, |&(_, v)| v);
        let ready = t >= n;
        let hit = match self.pred {
            Predicate::Excursion => ready && s == oldest && inner_min > oldest,
            Predicate::FirstPassage { end } => ready && s - oldest == end && oldest > s && inner_min > s,
            Predicate::Bridge { end } => ready && s - oldest == end,
            _ => false,
        };
        while self.deque.back().is_some_and(|&(_, v)| v >= s) {
            self.deque.pop_back();
        }
        self.deque.push_back((t, s));
        match self.pred {
            // window [t-n+1, t] after the push
            Predicate::Positive => ready && self.deque.front().is_some_and(|&(_, v)| v > oldest),
            _ => hit,
        }
    }
}

fn run_one(scanner: &mut WindowScanner, rng: &mut ChaCha8Rng, max_steps: u64) -> Option<u64> {
    scanner.reset();
    loop {
        let bits = rng.next_u64();
        for b in 0..64 {
            if scanner.push((bits >> b) & 1 == 1) {
                return Some(scanner.time());
            }
            if scanner.time() >= max_steps {
                return None;
            }
        }
    }
}

/// First-occurrence times, in replication order.
pub fn simulate_waits(class: &PatternClass, cfg: &SimConfig) -> Result<Vec<Option<u64>>> {
    cfg.validate(class.len())?;
    let template = WindowScanner::new(class)?;
    let pool = cfg.pool()?;
    Ok(pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map_init(
                || template.clone(),
                |scanner, i| run_one(scanner, &mut cfg.rng(i), cfg.max_steps),
            )
            .collect()
    }))
}

pub fn simulate_waiting_time(class: &PatternClass, cfg: &SimConfig) -> Result<SimResult> {
    let waits = simulate_waits(class, cfg)?;
    Ok(SimResult::from_waits(&waits, cfg.max_steps, cfg.histogram_bin))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentRow {
    pub class: String,
    pub n: usize,
    pub mean_wait: f64,
    pub std_error: f64,
    pub censored: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentTable {
    pub rows: Vec<ExponentRow>,
    /// One estimate per consecutive pair of rows.
    pub zeta: Vec<f64>,
}

/// Seed for grid size `n`, so that sizes use unrelated streams.
pub fn grid_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Simulate `family` at every length of `grid` and fit exponents between neighbours.
pub fn empirical_exponent_table(family: &PatternClass, grid: &[usize], cfg: &SimConfig) -> Result<ExponentTable> {
    if grid.len() < 2 {
        return Err(Error::param("exponent table needs at least two sizes"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &n in grid {
        let class = family.with_len(n)?;
        let run = SimConfig { seed: grid_seed(cfg.seed, n), ..cfg.clone() };
        let r = simulate_waiting_time(&class, &run)?;
        rows.push(ExponentRow {
            class: class.label(),
            n,
            mean_wait: r.mean_wait,
            std_error: r.std_error,
            censored: r.censored,
        });
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mean_wait)).collect();
    Ok(ExponentTable { zeta: exponent_fit(&pairs)?, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlepianResult {
    pub n: usize,
    /// Statistics of `T = F_n + n`, the first bridge completion.
    pub wait: SimResult,
    pub mean_f_over_n: f64,
    pub se_f_over_n: f64,
    pub mean_t_over_n: f64,
    /// Empirical and exact `P(F_n = 0)`.
    pub p_zero: f64,
    pub p_zero_se: f64,
    pub p_zero_exact: f64,
    /// `(q, empirical q-quantile of F_n / n)`.
    pub quantiles: Vec<(f64, f64)>,
}

/// `F_n = inf{k >= 0 : S_{k+n} = S_k}` over independent walks.
pub fn slepian_first_level_bridge(n: usize, quantiles: &[f64], cfg: &SimConfig) -> Result<SlepianResult> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::param("the first level bridge needs an even positive length"));
    }
    if quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::param("quantiles must lie in [0, 1]"));
    }
    let class = PatternClass::bridge(0.0, n)?;
    let waits = simulate_waits(&class, cfg)?;
    let wait = SimResult::from_waits(&waits, cfg.max_steps, cfg.histogram_bin);
    let nf = n as f64;
    let mut f: Vec<f64> = waits.iter().map(|w| (w.unwrap_or(cfg.max_steps) - n as u64) as f64 / nf).collect();
    let (mean_f, se_f) = mean_and_se(&f);
    let zeros: Vec<f64> = f.iter().map(|&v| if v == 0.0 { 1.0 } else { 0.0 }).collect();
    let (p_zero, p_zero_se) = mean_and_se(&zeros);
    let p_zero_exact = crate::stats::biguint_ratio(&binomial(n as u64, n as u64 / 2), n);
    f.sort_by(f64::total_cmp);
    let quantiles = quantiles.iter().map(|&q| (q, empirical_quantile(&f, q))).collect();
    Ok(SlepianResult {
        n,
        wait,
        mean_f_over_n: mean_f,
        se_f_over_n: se_f,
        mean_t_over_n: mean_f + 1.0,
        p_zero,
        p_zero_se,
        p_zero_exact,
        quantiles,
    })
}

/// Lower empirical quantile of sorted data.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}
