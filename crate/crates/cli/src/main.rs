use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bilevel_vi::algorithms::Algorithm;
use bilevel_vi::bench::{
    cournot_params, export_region, run_cournot_study, run_table, write_table_csv, CournotConfig, RegionOperator,
    SolveConfig, TableFamily,
};
use bilevel_vi::gap::write_region_csv;

/// Optimization over the solution set of a monotone variational inequality.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Algorithm number.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    alg: Option<u8>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance described by a TOML file and print its trace.
    Solve {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark sweep.
    Bench {
        #[arg(value_enum)]
        which: BenchKind,
        /// Instances per table cell (or Cournot markets).
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a lattice of the unit square into eps-solution regions.
    Region {
        #[arg(long, value_enum, default_value_t = RegionOp::Example21)]
        op: RegionOp,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 65.0 / 4096.0)]
        eps: f64,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    Table1,
    Table2,
    Table3,
    Table4,
    Cournot,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionOp {
    Example21,
    Gab,
}

fn algorithm(n: u8) -> Algorithm {
    match n {
        1 => Algorithm::Alg1,
        2 => Algorithm::Alg2,
        _ => Algorithm::Alg3,
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve { config, common } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = SolveConfig::from_toml(&text)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(a) = common.alg {
                cfg.algorithm = algorithm(a);
            }
            let trace = bilevel_vi::bench::solve(&cfg)?;
            trace.write_csv(output(common.out.as_deref())?)?;
            eprintln!("{}", trace.summary_json());
        }
        Command::Bench { which, instances, common } => {
            let seed = common.seed.unwrap_or(0);
            let out = output(common.out.as_deref())?;
            let family = match which {
                BenchKind::Table1 => TableFamily::Table1,
                BenchKind::Table2 => TableFamily::Table2,
                BenchKind::Table3 => TableFamily::Table3,
                BenchKind::Table4 => TableFamily::Table4,
                BenchKind::Cournot => {
                    if common.alg.is_some_and(|a| a != 3) {
                        bail!("the Cournot study runs algorithm 3 only");
                    }
                    let cfg = CournotConfig { seed, ..CournotConfig::default() };
                    run_cournot_study(&cfg, instances, &cournot_params())?.write_csv(out)?;
                    return Ok(());
                }
            };
            let result = run_table(family, instances, algorithm(common.alg.unwrap_or(3)), seed)?;
            write_table_csv(&result.rows, out)?;
        }
        Command::Region { op, a, b, eps, grid, common } => {
            let op = match op {
                RegionOp::Example21 => RegionOperator::Example21,
                RegionOp::Gab => RegionOperator::Gab { a, b },
            };
            let points = export_region(op, eps, grid)?;
            write_region_csv(&points, output(common.out.as_deref())?)?;
        }
    }
    Ok(())
}
