//! Wall-clock comparison of the block engine with the dense references.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::cumulants::{cumulant_unchecked, outer_prod_cum_parallel};
use crate::error::{Error, Result};
use crate::moments::{center, moment_with, DataMatrix, Parallelism};
use crate::oracle::{dense_cumulant4_direct, dense_cumulants_upto};
use crate::symtensor::{BlockLayout, BlockSymTensor};

use super::generate::{generate, Covariance, Distribution, GeneratorSpec};

/// Largest `n` accepted for timed dense runs.
pub const NAIVE_MAX_N: usize = 64;
/// Largest order accepted for timed dense runs.
pub const NAIVE_MAX_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Blocked storage, central-moment recursion.
    Block,
    /// Dense order-4 cumulant from the three pairings.
    Naive4,
    /// Dense cumulants of all orders up to `m` from raw moments.
    NaiveGeneral,
}

/// How the block engine splits work when `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Samples,
    Blocks,
}

impl Split {
    pub fn with_workers(self, p: usize) -> Parallelism {
        match (self, p) {
            (_, 1) => Parallelism::None,
            (Split::Samples, p) => Parallelism::Samples(p),
            (Split::Blocks, p) => Parallelism::Blocks(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub order: usize,
    pub n_list: Vec<usize>,
    pub b_list: Vec<usize>,
    pub p_list: Vec<usize>,
    pub t: usize,
    /// Repetitions per block-engine measurement; the minimum is reported.
    pub reps: usize,
    /// Repetitions per dense measurement.
    pub naive_reps: usize,
    pub engines: Vec<Engine>,
    pub split: Split,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            order: 4,
            n_list: vec![8, 16, 24],
            b_list: vec![1, 2, 3, 4],
            p_list: vec![1],
            t: 10_000,
            reps: 3,
            naive_reps: 1,
            engines: vec![Engine::Block, Engine::Naive4],
            split: Split::Samples,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub engine: Engine,
    pub n: usize,
    pub m: usize,
    /// Block size; absent for dense engines.
    pub b: Option<usize>,
    pub p: usize,
    pub t: usize,
    /// Fastest of `reps` runs.
    pub wall_ms: f64,
    pub mean_ms: f64,
    pub reps: usize,
    /// Elements held by the result (unique blocks or `n^m`).
    pub stored: u64,
    /// Phase timings of the fastest run.
    pub phases: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub version: &'static str,
    pub host_threads: usize,
    pub rows: Vec<BenchRow>,
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Order-`m` cumulant through the block engine with phase timings:
/// centring, lower orders, the moment term and the correction term.
pub fn timed_block_cumulant(
    x: &DataMatrix,
    m: usize,
    b: usize,
    par: Parallelism,
) -> Result<(BlockSymTensor, BTreeMap<String, f64>)> {
    let mut phases = BTreeMap::new();
    let s = Instant::now();
    let xc = center(x);
    phases.insert("center".to_string(), ms_since(s));
    let s = Instant::now();
    let mut lower = Vec::new();
    for k in 2..=m.saturating_sub(2) {
        let c = cumulant_unchecked(&xc, k, &lower, b, par)?;
        lower.push(c);
    }
    phases.insert("lower".to_string(), ms_since(s));
    let s = Instant::now();
    let mut c = moment_with(&xc, m, b, par)?;
    phases.insert("moment".to_string(), ms_since(s));
    let s = Instant::now();
    let workers = match par {
        Parallelism::None => 1,
        Parallelism::Samples(p) | Parallelism::Blocks(p) => p,
    };
    for sigma in 2..=m / 2 {
        c.sub_assign(&outer_prod_cum_parallel(m, sigma, &lower, workers)?)?;
    }
    phases.insert("correction".to_string(), ms_since(s));
    Ok((c, phases))
}

fn check_naive(n: usize, m: usize) -> Result<()> {
    if n > NAIVE_MAX_N || m > NAIVE_MAX_ORDER {
        return Err(Error::ResourceGuard(format!(
            "timed dense runs need n <= {NAIVE_MAX_N} and m <= {NAIVE_MAX_ORDER}, got n={n}, m={m}"
        )));
    }
    Ok(())
}

/// Times one engine on `x`. `b` and `par` only affect the block engine.
pub fn time_engine(
    engine: Engine,
    x: &DataMatrix,
    m: usize,
    b: usize,
    par: Parallelism,
    reps: usize,
) -> Result<BenchRow> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let n = x.n();
    if engine != Engine::Block {
        check_naive(n, m)?;
    }
    if engine == Engine::Naive4 && m != 4 {
        return Err(Error::InvalidArgument(format!(
            "naive4 computes order 4 only, got {m}"
        )));
    }
    let mut best: Option<(f64, BTreeMap<String, f64>)> = None;
    let mut total = 0.0;
    let mut stored = 0;
    for _ in 0..reps {
        let s = Instant::now();
        let phases = match engine {
            Engine::Block => {
                let (c, phases) = timed_block_cumulant(x, m, b, par)?;
                stored = c.stored_len() as u64;
                phases
            }
            Engine::Naive4 => {
                stored = dense_cumulant4_direct(x)?.data().len() as u64;
                BTreeMap::new()
            }
            Engine::NaiveGeneral => {
                let all = dense_cumulants_upto(x, m)?;
                stored = all.last().map_or(0, |d| d.data().len() as u64);
                BTreeMap::new()
            }
        };
        let wall = ms_since(s);
        total += wall;
        if best.as_ref().is_none_or(|(w, _)| wall < *w) {
            best = Some((wall, phases));
        }
    }
    let (wall_ms, phases) = best.expect("at least one repetition");
    let (b, p) = match engine {
        Engine::Block => {
            let p = match par {
                Parallelism::None => 1,
                Parallelism::Samples(p) | Parallelism::Blocks(p) => p,
            };
            (Some(BlockLayout::new(n, m, b)?.block_size()), p)
        }
        _ => (None, 1),
    };
    Ok(BenchRow {
        engine,
        n,
        m,
        b,
        p,
        t: x.t(),
        wall_ms,
        mean_ms: total / reps as f64,
        reps,
        stored,
        phases,
    })
}

/// Runs the sweep on standard normal data, one dataset per `n`.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.n_list.is_empty() || cfg.b_list.is_empty() || cfg.p_list.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep lists must not be empty".into(),
        ));
    }
    if cfg.engines.iter().any(|&e| e != Engine::Block) {
        for &n in &cfg.n_list {
            check_naive(n, cfg.order)?;
        }
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let x = generate(&GeneratorSpec {
            dist: Distribution::Gaussian(Covariance::Identity),
            n,
            t: cfg.t,
            seed: cfg.seed,
        })?;
        for &engine in &cfg.engines {
            if engine == Engine::Block {
                for &b in &cfg.b_list {
                    for &p in &cfg.p_list {
                        let par = cfg.split.with_workers(p);
                        rows.push(time_engine(engine, &x, cfg.order, b, par, cfg.reps)?);
                    }
                }
            } else {
                rows.push(time_engine(
                    engine,
                    &x,
                    cfg.order,
                    0,
                    Parallelism::None,
                    cfg.naive_reps,
                )?);
            }
        }
    }
    Ok(BenchReport {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION"),
        host_threads: std::thread::available_parallelism().map_or(1, |p| p.get()),
        rows,
    })
}

/// Plain-text table of a report.
pub fn format_table(report: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14}{:>5}{:>3}{:>4}{:>4}{:>9}{:>12}{:>12}{:>6}{:>12}",
        "engine", "n", "m", "b", "p", "t", "wall_ms", "mean_ms", "reps", "stored"
    );
    for r in &report.rows {
        let engine = match r.engine {
            Engine::Block => "block",
            Engine::Naive4 => "naive4",
            Engine::NaiveGeneral => "naive-general",
        };
        let b = r.b.map_or("-".to_string(), |b| b.to_string());
        let _ = writeln!(
            s,
            "{:<14}{:>5}{:>3}{:>4}{:>4}{:>9}{:>12.3}{:>12.3}{:>6}{:>12}",
            engine, r.n, r.m, b, r.p, r.t, r.wall_ms, r.mean_ms, r.reps, r.stored
        );
    }
    s
}
