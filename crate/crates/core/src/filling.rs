//! Filling-scheme sampling of Bessel-3 and co-meander paths from i.i.d.
//! discrete meanders.
//!
//! Both targets have a density with respect to the meander law that depends
//! on the endpoint only, `r(x) = √(2/π) x` (Bessel-3) or `√(2/π) / x`
//! (co-meander). The filling recursion then stays one-dimensional: with
//! `S_0 = 1`, `S_{i+1} = S_i + c_i` and `c_{-1} = 1`,
//!
//! ```text
//! d_i(x) = clamp((S_i - r(x)) / c_{i-1}, 0, 1),   c_i = ∫ (r - S_i)^+ dμ^m,
//! ```
//!
//! so the tables are the two scalar sequences `(S_i)` and `(c_i)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::SimConfig;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Bessel3,
    CoMeander,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Bessel3 => "bessel3",
            Target::CoMeander => "comeander",
        }
    }
}

/// Discrete path on the grid `{0, 1/m, ..., 1}`, heights scaled by `1/√m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledPath {
    pub values: Vec<f64>,
}

impl ScaledPath {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn endpoint(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Endpoint density of the target relative to the meander endpoint law.
pub fn target_density_ratio(x: f64, target: Target) -> Result<f64> {
    match target {
        Target::Bessel3 if x >= 0.0 => Ok(SQRT_2_OVER_PI * x),
        Target::CoMeander if x > 0.0 => Ok(SQRT_2_OVER_PI / x),
        _ => Err(Error::param(format!("density ratio undefined at x = {x}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FillingParams {
    /// Grid spacing.
    pub h: f64,
    pub x_max: f64,
    /// Stop growing the tables once `c_K` drops below this.
    pub residual_target: f64,
    pub max_depth: usize,
}

impl Default for FillingParams {
    fn default() -> Self {
        FillingParams { h: 1e-3, x_max: 6.0, residual_target: 0.01, max_depth: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FillingTables {
    pub target: Target,
    pub h: f64,
    pub grid: Vec<f64>,
    /// `r` at the grid nodes (capped below `h` for the co-meander).
    pub ratio: Vec<f64>,
    /// `c_0, ..., c_K`.
    pub c: Vec<f64>,
    /// `S_0, ..., S_K`.
    pub s: Vec<f64>,
}

/// Trapezoid rule against the Rayleigh density on the grid.
fn integrate(grid: &[f64], h: f64, f: impl Fn(usize) -> f64) -> f64 {
    let last = grid.len() - 1;
    (0..=last)
        .map(|j| {
            let x = grid[j];
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            w * f(j) * x * (-x * x / 2.0).exp()
        })
        .sum::<f64>()
        * h
}

pub fn build_filling_tables(target: Target, params: FillingParams) -> Result<FillingTables> {
    if !(params.h > 0.0 && params.h <= 1e-3) {
        return Err(Error::param("grid spacing must lie in (0, 1e-3]"));
    }
    if params.x_max < 6.0 {
        return Err(Error::param("x_max must be at least 6"));
    }
    if !(params.residual_target > 0.0 && params.residual_target < 1.0) || params.max_depth == 0 {
        return Err(Error::param("residual target must lie in (0, 1) and depth be positive"));
    }
    let nodes = (params.x_max / params.h).round() as usize;
    let grid: Vec<f64> = (0..=nodes).map(|j| j as f64 * params.h).collect();
    let tables = FillingTables { target, h: params.h, grid, ratio: Vec::new(), c: Vec::new(), s: Vec::new() };
    let ratio: Vec<f64> = tables.grid.iter().map(|&x| tables.capped_ratio(x)).collect();
    let mut tables = FillingTables { ratio, ..tables };

    let mut s = 1.0;
    loop {
        let c = integrate(&tables.grid, tables.h, |j| (tables.ratio[j] - s).max(0.0));
        if c <= 0.0 {
            break;
        }
        tables.s.push(s);
        tables.c.push(c);
        if c < params.residual_target || tables.c.len() > params.max_depth {
            break;
        }
        s += c;
    }
    if tables.c.is_empty() {
        return Err(Error::param("target coincides with the proposal; nothing to fill"));
    }
    Ok(tables)
}

impl FillingTables {
    /// Table depth `K`.
    pub fn depth(&self) -> usize {
        self.c.len() - 1
    }

    /// `c_K`, the target mass left unassigned.
    pub fn residual(&self) -> f64 {
        self.c[self.depth()]
    }

    /// `c_{i-1}` with `c_{-1} = 1`.
    pub fn c_prev(&self, i: usize) -> f64 {
        if i == 0 {
            1.0
        } else {
            self.c[i - 1]
        }
    }

    fn capped_ratio(&self, x: f64) -> f64 {
        match self.target {
            Target::Bessel3 => SQRT_2_OVER_PI * x.max(0.0),
            Target::CoMeander => SQRT_2_OVER_PI / x.max(self.h),
        }
    }

    /// `d_i(x)` for `0 <= i <= K`.
    pub fn d(&self, i: usize, x: f64) -> f64 {
        ((self.s[i] - self.capped_ratio(x)) / self.c_prev(i)).clamp(0.0, 1.0)
    }

    /// `Σ_{k<=K} c_{k-1} (1 - d_k(x))`, which telescopes to `min(r(x), S_K)`.
    pub fn reconstruction(&self, x: f64) -> f64 {
        (0..=self.depth()).map(|k| self.c_prev(k) * (1.0 - self.d(k, x))).sum()
    }

    /// `∫ r dμ^m` over the grid.
    pub fn ratio_mass(&self) -> f64 {
        integrate(&self.grid, self.h, |j| self.ratio[j])
    }

    /// `∫ (r - reconstruction)^+ dμ^m`.
    pub fn reconstruction_gap(&self) -> f64 {
        integrate(&self.grid, self.h, |j| (self.ratio[j] - self.reconstruction(self.grid[j])).max(0.0))
    }
}

/// Walk of `m` steps conditioned to stay strictly positive, by rejection.
/// Returns the path and the number of attempts used.
pub fn sample_discrete_meander<R: RngCore>(m: usize, rng: &mut R) -> (ScaledPath, u64) {
    let scale = 1.0 / (m as f64).sqrt();
    let mut heights = vec![0i32; m + 1];
    let mut attempts = 0;
    'attempt: loop {
        attempts += 1;
        let mut s = 0i32;
        let mut bits = 0u64;
        for (j, slot) in heights.iter_mut().enumerate().skip(1) {
            if (j - 1) % 64 == 0 {
                bits = rng.next_u64();
            }
            s += if bits & 1 == 1 { 1 } else { -1 };
            bits >>= 1;
            if s <= 0 {
                continue 'attempt;
            }
            *slot = s;
        }
        let values = heights.iter().map(|&v| v as f64 * scale).collect();
        return (ScaledPath { values }, attempts);
    }
}

/// Endpoint spread uniformly over its lattice cell `(x - 1/√m, x + 1/√m)`.
pub fn smoothed_endpoint<R: RngCore>(path: &ScaledPath, rng: &mut R) -> f64 {
    let half_cell = 1.0 / (path.steps() as f64).sqrt();
    path.endpoint() + (2.0 * rng.random::<f64>() - 1.0) * half_cell
}

fn check_steps(m: usize) -> Result<()> {
    if m % 2 == 0 || m < 3 {
        Err(Error::param(format!("meander length must be odd and at least 3, got {m}")))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FillingSample {
    pub path: ScaledPath,
    /// Smoothed endpoint used by the stopping rule.
    pub endpoint: f64,
    /// Stopping index `N` of the accepted round.
    pub index: usize,
    pub meanders: u64,
    pub restarts: u64,
}

/// One draw of `m^N`: feed meanders `m^0, m^1, ...` until
/// `-Σ_{i<=N} log d_i(m^i) > ξ`, restarting with a fresh `ξ` if the tables run out.
pub fn sample_via_filling<R: RngCore>(tables: &FillingTables, m: usize, rng: &mut R) -> FillingSample {
    let mut meanders = 0;
    let mut restarts = 0;
    loop {
        let xi = -(1.0 - rng.random::<f64>()).ln();
        let mut acc = 0.0;
        for i in 0..=tables.depth() {
            let (path, _) = sample_discrete_meander(m, rng);
            meanders += 1;
            let endpoint = smoothed_endpoint(&path, rng);
            acc -= tables.d(i, endpoint).ln();
            if acc > xi {
                return FillingSample { path, endpoint, index: i, meanders, restarts };
            }
        }
        restarts += 1;
    }
}

fn stream(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

fn pool(cfg: &SimConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))
}

/// `cfg.replications` independent filling samples; sample `i` uses stream `i`.
pub fn fill_samples(tables: &FillingTables, m: usize, cfg: &SimConfig) -> Result<Vec<FillingSample>> {
    check_steps(m)?;
    cfg.validate(0)?;
    Ok(pool(cfg)?.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|i| sample_via_filling(tables, m, &mut stream(cfg.seed, i)))
            .collect()
    }))
}

/// Smoothed meander endpoints and rejection attempts, one per replication.
pub fn meander_endpoints(m: usize, cfg: &SimConfig) -> Result<Vec<(f64, u64)>> {
    check_steps(m)?;
    cfg.validate(0)?;
    Ok(pool(cfg)?.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(cfg.seed, i);
                let (path, attempts) = sample_discrete_meander(m, &mut rng);
                (smoothed_endpoint(&path, &mut rng), attempts)
            })
            .collect()
    }))
}
