//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors (bad flags, invalid class
//! parameters, malformed pattern files), 2 on computation errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::capacity::{
    hit_before_geometric, killed_chain_probability, minimize_energy_kernel, sandwich_constant, PotentialKernel,
};
use crate::error::{Error, Result};
use crate::filling::{build_filling_tables, fill_samples, FillingParams, Target};
use crate::lattice::{count_class, enumerate_class, PatternClass, PatternCollection};
use crate::matching::{rational_string, MatchingMatrix};
use crate::montecarlo::{
    empirical_exponent_table, mean_and_se, simulate_waiting_time, slepian_first_level_bridge, SimConfig,
    DEFAULT_MAX_STEPS, DEFAULT_SEED,
};
use crate::stats::{bessel3_cdf, half_normal_cdf, ks_statistic};
use crate::waiting::{brute_force_oracle, solve_expected_waits};

#[derive(Parser, Debug)]
#[command(name = "walkpat", version, about = "Patterns in simple random walks")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List every pattern of a class, one per line.
    Enumerate {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Number of patterns in a class.
    Count {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact matching matrix.
    Matrix {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact expected waiting times.
    Wait {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Expected wait from the pattern automaton, compared with the matrix solve.
    Oracle {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo waiting time.
    Simulate {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo waits over a grid of lengths with exponent estimates.
    Exponent {
        #[command(flatten)]
        class: ClassArgs,
        /// Comma-separated pattern lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// First level bridge experiment.
    Slepian {
        #[arg(long)]
        n: usize,
        /// Comma-separated probabilities for quantiles of F_n / n.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
        quantiles: Vec<f64>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// α-capacity, its hitting-probability bounds and a Monte Carlo estimate.
    Capacity {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        alpha: f64,
        /// Exit with status 2 if the minimiser does not converge.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample Bessel-3 or co-meander paths through the filling scheme.
    FillSample {
        #[arg(long, value_enum)]
        target: TargetArg,
        /// Meander length (odd).
        #[arg(long, default_value_t = 201)]
        steps: usize,
        #[arg(long, default_value_t = 2000)]
        samples: u64,
        /// Maximum table depth.
        #[arg(long, default_value_t = 100_000)]
        depth: usize,
        /// Residual mass at which the tables stop growing.
        #[arg(long, default_value_t = 0.01)]
        residual: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Write sampled paths here as CSV, one row per path.
        #[arg(long)]
        paths: Option<PathBuf>,
        /// Write the JSON summary here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ClassKind {
    Excursion,
    Positive,
    Bridge,
    Fp,
    Custom,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    Bessel3,
    Comeander,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct ClassArgs {
    #[arg(long, value_enum)]
    class: ClassKind,
    /// Pattern length.
    #[arg(long)]
    n: Option<usize>,
    /// Level λ for bridge (default 0) and fp (default -1).
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Pattern file for the custom class.
    #[arg(long)]
    patterns: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: u64,
}

#[derive(Args, Debug)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl SimArgs {
    fn config(&self, workers: Option<usize>) -> SimConfig {
        with_workers(SimConfig::new(self.seed, self.reps).with_max_steps(self.max_steps), workers)
    }
}

fn with_workers(cfg: SimConfig, workers: Option<usize>) -> SimConfig {
    match workers {
        Some(w) => cfg.with_workers(w),
        None => cfg,
    }
}

/// Read and validate a pattern file.
pub fn load_custom_patterns(path: &Path) -> Result<PatternCollection> {
    PatternCollection::parse_pattern_file(&fs::read_to_string(path)?)
}

impl ClassArgs {
    fn need_n(&self) -> Result<usize> {
        self.n.ok_or_else(|| Error::param(format!("--n is required for --class {:?}", self.class).to_lowercase()))
    }

    fn class(&self) -> Result<PatternClass> {
        match self.class {
            ClassKind::Excursion => PatternClass::excursion(self.need_n()?),
            ClassKind::Positive => PatternClass::positive(self.need_n()?),
            ClassKind::Bridge => PatternClass::bridge(self.lambda.unwrap_or(0.0), self.need_n()?),
            ClassKind::Fp => PatternClass::first_passage(self.lambda.unwrap_or(-1.0), self.need_n()?),
            ClassKind::Custom => Ok(self.collection()?.class().clone()),
        }
    }

    fn collection(&self) -> Result<PatternCollection> {
        if self.class != ClassKind::Custom {
            return enumerate_class(&self.class()?);
        }
        let path = self.patterns.as_ref().ok_or_else(|| Error::param("--patterns is required for --class custom"))?;
        let coll = load_custom_patterns(path)?;
        if let Some(n) = self.n {
            if n != coll.n() {
                return Err(Error::LengthMismatch { expected: n, actual: coll.n() });
            }
        }
        Ok(coll)
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json(out: &mut dyn Write, args: &OutArgs, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, args.output.as_deref(), &text)
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let workers = cli.workers;
    if workers == Some(0) {
        return Err(Error::param("--workers must be at least 1"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| Error::param(e.to_string()))?;
    let mut buf = Vec::new();
    pool.install(|| command(cli.command, workers, &mut buf))?;
    out.write_all(&buf)?;
    Ok(())
}

fn command(cmd: Command, workers: Option<usize>, out: &mut Vec<u8>) -> Result<()> {
    match cmd {
        Command::Enumerate { class, out: o } => {
            let coll = class.collection()?;
            match o.format {
                Format::Json => emit_json(
                    out,
                    &o,
                    &json!({
                        "class": coll.label(),
                        "n": coll.n(),
                        "count": coll.len(),
                        "patterns": coll.paths().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                    }),
                ),
                Format::Csv => emit(out, o.output.as_deref(), &coll.to_pattern_file()),
            }
        }
        Command::Count { class, out: o } => {
            let c = class.class()?;
            let count = match &c {
                PatternClass::Custom { paths, .. } => paths.len().into(),
                other => count_class(other)?,
            };
            emit_json(out, &o, &json!({ "class": c.label(), "n": c.len(), "count": count.to_string() }))
        }
        Command::Matrix { class, out: o } => {
            let m = MatchingMatrix::build(&class.collection()?)?;
            match o.format {
                Format::Json => emit_json(out, &o, &m.to_json()),
                Format::Csv => emit(out, o.output.as_deref(), &m.to_csv()),
            }
        }
        Command::Wait { class, out: o } => {
            let report = solve_expected_waits(&MatchingMatrix::build(&class.collection()?)?)?;
            emit_json(out, &o, &report.to_json())
        }
        Command::Oracle { class, out: o } => {
            let coll = class.collection()?;
            let oracle = brute_force_oracle(&coll)?;
            let solved = solve_expected_waits(&MatchingMatrix::build(&coll)?)?.collection;
            emit_json(
                out,
                &o,
                &json!({
                    "class": coll.label(),
                    "n": coll.n(),
                    "count": coll.len(),
                    "oracle_wait": rational_string(&oracle),
                    "solver_wait": rational_string(&solved),
                    "agree": oracle == solved,
                }),
            )
        }
        Command::Simulate { class, sim, out: o } => {
            let c = class.class()?;
            let cfg = sim.config(workers);
            let r = simulate_waiting_time(&c, &cfg)?;
            match o.format {
                Format::Json => emit_json(
                    out,
                    &o,
                    &json!({
                        "class": c.label(),
                        "n": c.len(),
                        "seed": cfg.seed,
                        "replications": r.replications,
                        "mean_wait": r.mean_wait,
                        "std_error": r.std_error,
                        "replications_completed": r.replications_completed,
                        "censored": r.censored,
                        "biased": r.biased,
                    }),
                ),
                Format::Csv => {
                    let row = vec![
                        c.label(),
                        c.len().to_string(),
                        r.mean_wait.to_string(),
                        r.std_error.to_string(),
                        r.censored.to_string(),
                    ];
                    emit(out, o.output.as_deref(), &csv_text(&["class", "n", "mean", "se", "censored"], &[row])?)
                }
            }
        }
        Command::Exponent { mut class, grid, sim, out: o } => {
            // the family only needs a representative length
            class.n = class.n.or(grid.first().copied());
            let family = class.class()?;
            let table = empirical_exponent_table(&family, &grid, &sim.config(workers))?;
            match o.format {
                Format::Json => emit_json(out, &o, &serde_json::to_value(&table)?),
                Format::Csv => {
                    let rows: Vec<Vec<String>> = table
                        .rows
                        .iter()
                        .enumerate()
                        .map(|(i, r)| {
                            vec![
                                r.class.clone(),
                                r.n.to_string(),
                                r.mean_wait.to_string(),
                                r.std_error.to_string(),
                                r.censored.to_string(),
                                if i == 0 { String::new() } else { table.zeta[i - 1].to_string() },
                            ]
                        })
                        .collect();
                    emit(out, o.output.as_deref(), &csv_text(&["class", "n", "mean", "se", "censored", "zeta"], &rows)?)
                }
            }
        }
        Command::Slepian { n, quantiles, sim, out: o } => {
            let r = slepian_first_level_bridge(n, &quantiles, &sim.config(workers))?;
            emit_json(out, &o, &serde_json::to_value(&r)?)
        }
        Command::Capacity { class, alpha, strict, sim, out: o } => {
            let coll = class.collection()?;
            let kernel = PotentialKernel::new(&coll, alpha)?;
            let cap = minimize_energy_kernel(&kernel);
            if strict && !cap.converged {
                return Err(Error::NotConverged { iterations: cap.iterations });
            }
            let high = sandwich_constant(coll.n(), alpha) * cap.capacity;
            let mc = hit_before_geometric(&coll, alpha, &sim.config(workers))?;
            let exact = if coll.n() <= 20 { Some(killed_chain_probability(&coll, alpha)?) } else { None };
            emit_json(
                out,
                &o,
                &json!({
                    "class": coll.label(),
                    "n": coll.n(),
                    "alpha": alpha,
                    "capacity": cap.capacity,
                    "energy": cap.energy,
                    "converged": cap.converged,
                    "iterations": cap.iterations,
                    "sandwich_low": 0.5 * high,
                    "sandwich_high": high,
                    "mc_estimate": mc.estimate,
                    "mc_se": mc.std_error,
                    "exact_probability": exact,
                }),
            )
        }
        Command::FillSample { target, steps, samples, depth, residual, seed, paths, output } => {
            let target = match target {
                TargetArg::Bessel3 => Target::Bessel3,
                TargetArg::Comeander => Target::CoMeander,
            };
            let params = FillingParams { residual_target: residual, max_depth: depth, ..Default::default() };
            let tables = build_filling_tables(target, params)?;
            let cfg = with_workers(SimConfig::new(seed, samples), workers);
            let draws = fill_samples(&tables, steps, &cfg)?;
            let endpoints: Vec<f64> = draws.iter().map(|d| d.endpoint).collect();
            let cdf = match target {
                Target::Bessel3 => bessel3_cdf,
                Target::CoMeander => half_normal_cdf,
            };
            let (mean, se) = mean_and_se(&endpoints);
            if let Some(p) = paths {
                let rows: Vec<Vec<String>> =
                    draws.iter().map(|d| d.path.values.iter().map(|v| v.to_string()).collect()).collect();
                let header: Vec<String> = (0..=steps).map(|j| format!("u{j}")).collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                fs::write(p, csv_text(&header, &rows)?)?;
            }
            let summary = json!({
                "target": target.name(),
                "steps": steps,
                "samples": samples,
                "depth": tables.depth(),
                "c_residual": tables.residual(),
                "ks_endpoint": ks_statistic(&endpoints, cdf),
                "mean_endpoint": mean,
                "mean_endpoint_se": se,
                "meanders_consumed": draws.iter().map(|d| d.meanders).sum::<u64>(),
                "restarts": draws.iter().map(|d| d.restarts).sum::<u64>(),
            });
            let o = OutArgs { format: Format::Json, output };
            emit_json(out, &o, &summary)
        }
    }
}

/// Parse `argv` and run; returns the process exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}
