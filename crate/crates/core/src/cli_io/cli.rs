//! The `symcum` command line.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cumulants::cumulants_upto_with;
use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::moments::{moment_parallel, moment_with, DataMatrix, Parallelism};
use crate::oracle::{dense_cumulant4_direct, dense_cumulants_upto, dense_moment};
use crate::partitions::{mult_count_n, stirling2_min2};
use crate::symtensor::BlockSymTensor;
use crate::tolerance::worst_ratio;

use super::bench::{format_table, run_bench, BenchConfig, Engine, Split};
use super::csv::{ingest_csv, write_csv};
use super::generate::{generate, Covariance, Distribution, GeneratorSpec};
use super::stats::{estimator_spread_test, SpreadSpec};

#[derive(Debug, Parser)]
#[command(
    name = "symcum",
    version,
    about = "Moment and cumulant tensors in blocked symmetric storage"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment tensor of the input data.
    Moment(TensorArgs),
    /// Cumulant tensor of the given order.
    Cumulants(TensorArgs),
    /// Synthetic data as CSV.
    Generate(GenerateArgs),
    /// Timing sweep of the block engine against the dense references.
    Bench(BenchArgs),
    /// Quick built-in correctness checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParallelArg {
    None,
    Samples,
    Blocks,
}

/// Resolved settings of a `moment` or `cumulants` run.
#[derive(Debug, Args)]
pub struct TensorArgs {
    /// CSV file, one sample per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Tensor order.
    #[arg(long)]
    pub order: usize,
    #[arg(long, default_value_t = 2)]
    pub block_size: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = ParallelArg::Samples)]
    pub parallel: ParallelArg,
    #[arg(long, value_enum, default_value_t = Engine::Block)]
    pub engine: Engine,
    /// Accepted for symmetry with the other commands; the computation is
    /// deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Gaussian,
    Uniform,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovArg {
    Identity,
    Random,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = DistArg::Gaussian)]
    pub dist: DistArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long, value_enum, default_value_t = CovArg::Identity)]
    pub cov: CovArg,
    /// Row-major covariance matrix as comma-separated values; overrides --cov.
    #[arg(long, value_delimiter = ',')]
    pub cov_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,16,24")]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub b_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub p_list: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub t: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub naive_reps: usize,
    /// Dense engine to compare against; naive4 for order 4, otherwise naive-general.
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    #[arg(long)]
    pub skip_naive: bool,
    #[arg(long, value_enum, default_value_t = Split::Samples)]
    pub parallel: Split,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// JSON report file; the report goes to standard output when absent and
    /// the table to standard error.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Runs a parsed command, writing primary output to `out`.
pub fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    run_with(cli, &mut stdout.lock())
}

pub fn run_with(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Moment(a) => {
            let t = tensor_command(&a, false)?;
            write_tensor(&t, a.output.as_ref(), out)
        }
        Command::Cumulants(a) => {
            let t = tensor_command(&a, true)?;
            write_tensor(&t, a.output.as_ref(), out)
        }
        Command::Generate(a) => generate_command(&a, out),
        Command::Bench(a) => bench_command(&a, out),
        Command::Selftest(a) => selftest(a.seed, out),
    }
}

fn parallelism(a: &TensorArgs) -> Result<Parallelism> {
    match (a.parallel, a.workers) {
        (_, 0) => Err(Error::InvalidArgument(
            "--workers must be at least 1".into(),
        )),
        (_, 1) => Ok(Parallelism::None),
        (ParallelArg::None, p) => Err(Error::InvalidArgument(format!(
            "--parallel none conflicts with --workers {p}"
        ))),
        (ParallelArg::Samples, p) => Ok(Parallelism::Samples(p)),
        (ParallelArg::Blocks, p) => Ok(Parallelism::Blocks(p)),
    }
}

/// Block form of a dense tensor, read at sorted indices so that the result
/// is exactly symmetric.
fn block_from_dense(d: &DenseTensor, b: usize) -> Result<BlockSymTensor> {
    let (n, m) = (d.n(), d.order());
    let b = b.min(n);
    let mut idx = vec![0; m];
    let mut off = vec![0; m];
    BlockSymTensor::from_block_fn(n, m, b, |key, edges| {
        let mut data = Vec::with_capacity(edges.iter().product());
        off.iter_mut().for_each(|o| *o = 0);
        loop {
            for p in 0..m {
                idx[p] = key[p] * b + off[p];
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            data.push(d.get(&sorted));
            if !crate::indexing::advance(&mut off, edges) {
                break;
            }
        }
        data
    })
}

fn tensor_command(a: &TensorArgs, cumulant: bool) -> Result<BlockSymTensor> {
    if a.order == 0 {
        return Err(Error::InvalidArgument("--order must be at least 1".into()));
    }
    if a.block_size == 0 {
        return Err(Error::InvalidArgument(
            "--block-size must be at least 1".into(),
        ));
    }
    let par = parallelism(a)?;
    let x = ingest_csv(&a.input)?;
    let (m, b) = (a.order, a.block_size);
    match (cumulant, a.engine) {
        (false, Engine::Block) => moment_with(&x, m, b, par),
        (false, Engine::NaiveGeneral) => block_from_dense(&dense_moment(&x, m)?, b),
        (false, Engine::Naive4) => Err(Error::InvalidArgument(
            "naive4 computes cumulants; use naive-general for moments".into(),
        )),
        (true, Engine::Block) => {
            let set = cumulants_upto_with(&x, m, b, par)?;
            if m == 1 {
                return mean_tensor(set.mean(), b);
            }
            let (_, mut higher) = set.into_parts();
            Ok(higher.pop().expect("order >= 2 present"))
        }
        (true, Engine::Naive4) => {
            if m != 4 {
                return Err(Error::InvalidArgument(format!(
                    "naive4 computes order 4 only, got {m}"
                )));
            }
            block_from_dense(&dense_cumulant4_direct(&x)?, b)
        }
        (true, Engine::NaiveGeneral) => {
            let all = dense_cumulants_upto(&x, m)?;
            block_from_dense(all.last().expect("m >= 1"), b)
        }
    }
}

fn mean_tensor(mean: &[f64], b: usize) -> Result<BlockSymTensor> {
    let b = b.min(mean.len());
    BlockSymTensor::from_block_fn(mean.len(), 1, b, |key, edges| {
        mean[key[0] * b..key[0] * b + edges[0]].to_vec()
    })
}

fn write_tensor(t: &BlockSymTensor, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => super::emit_tensor(t, p),
        None => {
            writeln!(out, "{}", t.to_json()?)?;
            Ok(())
        }
    }
}

fn generate_command(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let dist = match (a.dist, &a.cov_values) {
        (DistArg::Gaussian, Some(v)) => Distribution::Gaussian(Covariance::Supplied(v.clone())),
        (DistArg::Gaussian, None) => Distribution::Gaussian(match a.cov {
            CovArg::Identity => Covariance::Identity,
            CovArg::Random => Covariance::Random,
        }),
        (_, Some(_)) => {
            return Err(Error::InvalidArgument(
                "--cov-values applies to the gaussian distribution only".into(),
            ))
        }
        (DistArg::Uniform, None) => Distribution::Uniform,
        (DistArg::Exponential, None) => Distribution::Exponential,
    };
    let x = generate(&GeneratorSpec {
        dist,
        n: a.n,
        t: a.t,
        seed: a.seed,
    })?;
    match &a.output {
        Some(p) => {
            let mut f = std::io::BufWriter::new(fs::File::create(p)?);
            write_csv(&x, &mut f)
        }
        None => write_csv(&x, out),
    }
}

fn bench_command(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut engines = vec![Engine::Block];
    if !a.skip_naive {
        let naive = a.engine.unwrap_or(if a.order == 4 {
            Engine::Naive4
        } else {
            Engine::NaiveGeneral
        });
        if naive != Engine::Block {
            engines.push(naive);
        }
    }
    let cfg = BenchConfig {
        order: a.order,
        n_list: a.n_list.clone(),
        b_list: a.b_list.clone(),
        p_list: a.p_list.clone(),
        t: a.t,
        reps: a.reps,
        naive_reps: a.naive_reps,
        engines,
        split: a.parallel,
        seed: a.seed,
    };
    let report = run_bench(&cfg)?;
    let json = serde_json::to_string_pretty(&report)?;
    let table = format_table(&report);
    match &a.output {
        Some(p) => {
            fs::write(p, json + "\n")?;
            write!(out, "{table}")?;
        }
        None => {
            writeln!(out, "{json}")?;
            eprint!("{table}");
        }
    }
    Ok(())
}

fn data_for(dist: Distribution, n: usize, t: usize, seed: u64) -> Result<DataMatrix> {
    generate(&GeneratorSpec { dist, n, t, seed })
}

/// Small versions of the library's correctness checks. Fails when any
/// check fails.
pub fn selftest(seed: u64, out: &mut dyn Write) -> Result<()> {
    let mut results: Vec<(&str, bool, String)> = Vec::new();

    let tables = [(4, 2, 3), (5, 2, 10), (6, 2, 25), (6, 3, 15)]
        .iter()
        .all(|&(m, s, v)| stirling2_min2(m, s).ok() == Some(v))
        && [(4, 3), (5, 10), (6, 55)]
            .iter()
            .all(|&(m, v)| mult_count_n(m).ok() == Some(v));
    results.push(("partition counts", tables, String::new()));

    let mut worst: f64 = 0.0;
    for (k, dist) in [
        Distribution::Gaussian(Covariance::Random),
        Distribution::Uniform,
        Distribution::Exponential,
    ]
    .into_iter()
    .enumerate()
    {
        let x = data_for(dist, 3, 300, seed + k as u64)?;
        let set = cumulants_upto_with(&x, 5, 2, Parallelism::None)?;
        let dense = dense_cumulants_upto(&x, 5)?;
        for (c, d) in set.higher().iter().zip(&dense[1..]) {
            worst = worst.max(worst_ratio(c.to_dense()?.data(), d.data(), 1e-9, 1e-12).0);
        }
    }
    results.push((
        "cumulants vs dense expansion",
        worst <= 1.0,
        format!("worst {worst:.3e}"),
    ));

    let x = data_for(Distribution::Exponential, 4, 400, seed)?;
    let c4 = cumulants_upto_with(&x, 4, 2, Parallelism::None)?;
    let d4 = dense_cumulant4_direct(&x)?;
    let r = worst_ratio(
        c4.tensor(4).expect("order 4").to_dense()?.data(),
        d4.data(),
        1e-10,
        1e-12,
    )
    .0;
    results.push((
        "fourth cumulant vs pairings",
        r <= 1.0,
        format!("worst {r:.3e}"),
    ));

    let serial = moment_with(&x, 3, 2, Parallelism::None)?;
    let mut par_ok = moment_parallel(&x, 3, 2, 1)? == serial;
    for p in [2, 3, 7] {
        let q = moment_parallel(&x, 3, 2, p)?;
        par_ok &= worst_ratio(
            q.to_dense()?.data(),
            serial.to_dense()?.data(),
            1e-12,
            1e-12,
        )
        .0 <= 1.0;
    }
    results.push(("parallel moments", par_ok, String::new()));

    let spread = estimator_spread_test(&SpreadSpec {
        generator: GeneratorSpec {
            dist: Distribution::Gaussian(Covariance::Identity),
            n: 1,
            t: 10_000,
            seed,
        },
        order: 2,
        margin: 0,
        replicates: 200,
    })?;
    results.push((
        "estimator spread",
        spread.pass,
        format!("std/bound {:.3}", spread.ratio),
    ));

    let mut failed = 0;
    for (name, ok, detail) in &results {
        writeln!(out, "{} {name} {detail}", if *ok { "PASS" } else { "FAIL" })?;
        failed += usize::from(!ok);
    }
    if failed > 0 {
        return Err(Error::InvalidData(format!(
            "{failed} self-test checks failed"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn selftest_passes() {
        let mut out = Vec::new();
        selftest(3, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().filter(|l| l.starts_with("PASS")).count(),
            5,
            "{text}"
        );
    }

    #[test]
    fn parallel_flags() {
        let cli = Cli::try_parse_from([
            "symcum",
            "moment",
            "--input",
            "x.csv",
            "--order",
            "2",
            "--workers",
            "3",
            "--parallel",
            "none",
        ])
        .unwrap();
        let Command::Moment(a) = cli.command else {
            panic!()
        };
        assert!(parallelism(&a).is_err());
    }

    #[test]
    fn dense_conversion_is_symmetric() {
        let d = DenseTensor::from_fn(3, 3, |i| (i[0] * 9 + i[1] * 3 + i[2]) as f64).unwrap();
        let t = block_from_dense(&d, 2).unwrap();
        assert_eq!(t.value(&[2, 0, 1]), t.value(&[0, 1, 2]));
        assert_eq!(t.value(&[2, 1, 0]), 5.0);
    }
}
