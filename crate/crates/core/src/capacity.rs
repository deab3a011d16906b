//! α-potential kernels, capacities and hitting before a geometric time.
//!
//! The length-`n` window of a walk is a Markov chain on `{±1}^n`. Started
//! from its first full window (uniform), it is killed after each further step
//! with probability `1 - α`. The potential kernel `G^α` sums `α^k P^k`; the
//! capacity is the reciprocal of the least energy `gᵀ G g` over probability
//! vectors `g` supported on the target set.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticePath, PatternCollection};
use crate::matching::overlaps;
use crate::montecarlo::{mean_and_se, SimConfig, WindowScanner};

/// Largest set accepted by the energy minimiser.
pub const CAPACITY_CAP: usize = 1 << 14;
/// Sets up to this size keep the symmetrised kernel in memory.
pub const DENSE_MAX: usize = 2048;
pub const MAX_ITERATIONS: usize = 200_000;
/// Stop once the Frank-Wolfe gap falls below this fraction of the energy.
const GAP_TOL: f64 = 1e-12;
/// ... or once the energy drops by less than this fraction over `STALL_WINDOW` iterations.
const STALL_TOL: f64 = 1e-10;
const STALL_WINDOW: usize = 100;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("α must lie in (0, 1), got {alpha}")))
    }
}

/// `(α/2)^n / (1 - α)`, the contribution of times `k >= n`.
pub fn refresh_tail(n: usize, alpha: f64) -> f64 {
    (alpha / 2.0).powi(n as i32) / (1.0 - alpha)
}

fn potential(a: &LatticePath, b: &LatticePath, alpha: f64) -> f64 {
    let n = a.len();
    let mut acc = refresh_tail(n, alpha);
    let mut w = 1.0;
    for k in 0..n {
        // last n-k steps of a against the first n-k of b
        if overlaps(b, a, k) {
            acc += w;
        }
        w *= alpha / 2.0;
    }
    acc
}

/// `G^α(a, b) = Σ_{k<n} (α/2)^k 1{σ_k(a) = τ_k(b)} + (α/2)^n / (1 - α)`.
pub fn alpha_potential(a: &LatticePath, b: &LatticePath, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    if a.is_empty() {
        return Err(Error::param("empty pattern"));
    }
    Ok(potential(a, b, alpha))
}

#[derive(Clone, Debug)]
pub struct PotentialKernel {
    alpha: f64,
    n: usize,
    paths: Vec<LatticePath>,
    /// Symmetrised kernel, row-major, when small enough.
    dense: Option<Vec<f64>>,
}

impl PotentialKernel {
    pub fn new(collection: &PatternCollection, alpha: f64) -> Result<Self> {
        Self::from_paths(collection.paths().to_vec(), alpha)
    }

    /// Kernel on every string of length `n`.
    pub fn full(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 || 1usize << n > CAPACITY_CAP {
            return Err(Error::param(format!("full string space needs 1 <= n <= 14, got {n}")));
        }
        Self::from_paths((0..1u64 << n).map(|b| LatticePath::from_bits(b, n)).collect(), alpha)
    }

    fn from_paths(paths: Vec<LatticePath>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let k = paths.len();
        if k == 0 {
            return Err(Error::param("empty pattern set"));
        }
        if k > CAPACITY_CAP {
            return Err(Error::CapExceeded {
                what: "capacity set size",
                size: k.to_string(),
                cap: CAPACITY_CAP.to_string(),
            });
        }
        let n = paths[0].len();
        let mut kernel = PotentialKernel { alpha, n, paths, dense: None };
        if k <= DENSE_MAX {
            let rows: Vec<Vec<f64>> = (0..k).into_par_iter().map(|j| kernel.compute_sym_column(j)).collect();
            kernel.dense = Some(rows.concat());
        }
        Ok(kernel)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pattern_len(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.paths.len()
    }

    /// `G^α(A_i, A_j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        potential(&self.paths[i], &self.paths[j], self.alpha)
    }

    fn compute_sym_column(&self, j: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| 0.5 * (self.entry(i, j) + self.entry(j, i))).collect()
    }

    /// Column `j` of `(G + Gᵀ) / 2`.
    pub fn sym_column(&self, j: usize) -> Vec<f64> {
        match &self.dense {
            Some(d) => d[j * self.dim()..(j + 1) * self.dim()].to_vec(),
            None => self.compute_sym_column(j),
        }
    }

    fn sym_diag(&self, j: usize) -> f64 {
        match &self.dense {
            Some(d) => d[j * self.dim() + j],
            None => self.entry(j, j),
        }
    }

    /// `gᵀ G g`.
    pub fn energy(&self, g: &[f64]) -> f64 {
        (0..self.dim())
            .filter(|&j| g[j] != 0.0)
            .map(|j| g[j] * self.sym_column(j).iter().zip(g).map(|(s, x)| s * x).sum::<f64>())
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub energy: f64,
    pub equilibrium_measure: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final Frank-Wolfe gap, an upper bound on `energy - min energy`.
    pub gap: f64,
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

/// Least energy over the simplex by Frank-Wolfe with away steps and exact line search.
pub fn minimize_energy_kernel(kernel: &PotentialKernel) -> CapacityResult {
    let k = kernel.dim();
    let start = (0..k).min_by(|&a, &b| kernel.sym_diag(a).total_cmp(&kernel.sym_diag(b))).unwrap_or(0);
    let mut g = vec![0.0; k];
    g[start] = 1.0;
    let mut h = kernel.sym_column(start); // S g
    let mut f = h[start];
    let mut trace = vec![f];
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        let s = (0..k).min_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap_or(0);
        let v = (0..k).filter(|&i| g[i] > 0.0).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap_or(s);
        gap = 2.0 * (f - h[s]);
        if gap <= GAP_TOL * f {
            converged = true;
            break;
        }
        if trace.len() > STALL_WINDOW {
            let old = trace[trace.len() - 1 - STALL_WINDOW];
            if (old - f) <= STALL_TOL * f {
                converged = true;
                break;
            }
        }
        iterations += 1;
        let toward = f - h[s];
        let away = h[v] - f;
        if toward >= away {
            let col = kernel.sym_column(s);
            let curv = col[s] - 2.0 * h[s] + f;
            let gamma = if curv > 0.0 { (toward / curv).clamp(0.0, 1.0) } else { 1.0 };
            for i in 0..k {
                g[i] *= 1.0 - gamma;
                h[i] = (1.0 - gamma) * h[i] + gamma * col[i];
            }
            g[s] += gamma;
        } else {
            let col = kernel.sym_column(v);
            let curv = f - 2.0 * h[v] + col[v];
            let limit = g[v] / (1.0 - g[v]);
            let gamma = if curv > 0.0 { (away / curv).min(limit) } else { limit };
            for i in 0..k {
                g[i] *= 1.0 + gamma;
                h[i] = (1.0 + gamma) * h[i] - gamma * col[i];
            }
            g[v] -= gamma;
            if gamma >= limit {
                g[v] = 0.0;
            }
        }
        let total: f64 = g.iter().sum();
        g.iter_mut().for_each(|x| *x = (*x / total).max(0.0));
        h.iter_mut().for_each(|x| *x /= total);
        let next: f64 = g.iter().zip(&h).map(|(a, b)| a * b).sum();
        // line search never increases the energy; rounding can
        f = next.min(f);
        trace.push(f);
    }
    CapacityResult {
        capacity: 1.0 / f,
        energy: f,
        equilibrium_measure: g,
        iterations,
        converged,
        gap,
        energy_trace: trace,
    }
}

pub fn minimize_energy(collection: &PatternCollection, alpha: f64) -> Result<CapacityResult> {
    let kernel = PotentialKernel::new(collection, alpha)?;
    let result = minimize_energy_kernel(&kernel);
    if !result.converged {
        return Err(Error::NotConverged { iterations: result.iterations });
    }
    Ok(result)
}

/// `2^{-n} / (1 - α)`.
pub fn sandwich_constant(n: usize, alpha: f64) -> f64 {
    0.5f64.powi(n as i32) / (1.0 - alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: u64,
}

/// Monte Carlo estimate of `P(T(A) < T)`: after the first full window each
/// step is killed with probability `1 - α`.
pub fn hit_before_geometric(collection: &PatternCollection, alpha: f64, cfg: &SimConfig) -> Result<HitEstimate> {
    check_alpha(alpha)?;
    let class = collection.class();
    let n = collection.n();
    cfg.validate(n)?;
    let template = WindowScanner::new(class)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    let hits: Vec<f64> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map_init(
                || template.clone(),
                |sc, i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(i);
                    sc.reset();
                    let mut t = 0u64;
                    loop {
                        let bits = rng.next_u64();
                        for b in 0..64 {
                            t += 1;
                            if t > n as u64 && !rng.random_bool(alpha) {
                                return 0.0;
                            }
                            if sc.push((bits >> b) & 1 == 1) {
                                return 1.0;
                            }
                            if t >= cfg.max_steps {
                                return 0.0;
                            }
                        }
                    }
                },
            )
            .collect()
    });
    let (estimate, std_error) = mean_and_se(&hits);
    Ok(HitEstimate { estimate, std_error, replications: cfg.replications })
}

/// Exact `P(T(A) < T)` by value iteration over the `2^n` windows.
pub fn killed_chain_probability(collection: &PatternCollection, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n = collection.n();
    if n > 20 {
        return Err(Error::CapExceeded { what: "killed chain length", size: n.to_string(), cap: "20".into() });
    }
    let size = 1usize << n;
    let mut target = vec![false; size];
    for p in collection.paths() {
        target[p.bits().unwrap_or_default() as usize] = true;
    }
    let mut u: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..size)
            .map(|x| {
                if target[x] {
                    1.0
                } else {
                    let shifted = x >> 1;
                    alpha * 0.5 * (u[shifted] + u[shifted | 1 << (n - 1)])
                }
            })
            .collect();
        let delta = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = next;
        if delta < 1e-15 {
            return Ok(u.iter().sum::<f64>() / size as f64);
        }
    }
    Err(Error::NotConverged { iterations: 100_000 })
}
