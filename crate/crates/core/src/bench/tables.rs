//! Parameter sweeps over random quadratic instances. Each cell fixes a set
//! shape and one swept parameter; rows report means over the seeds.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem1::{gen_problem1, Problem1Config, SetShape};
use crate::algorithms::{run_alg2, run_alg3, AlgoParams, Algorithm, RunSummary};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFamily {
    /// Sweep over `|b|` in `{0, sqrt(n), sqrt(2n), sqrt(3n)}`.
    Table1,
    /// Sweep over `L` in `{20, 50, 100}` with `|b| = 5 sqrt(6)`.
    Table2,
    /// Sweep over `eps` in `{1, 0.1, 0.01, 0.001}` with `|b| = 10`.
    Table3,
    /// Sweep over `n` in `{25, 50, 75, 100}` with `l = n / 5`, `|b| = sqrt(2n)`.
    Table4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableCell {
    pub shape: SetShape,
    /// Value of the swept parameter.
    pub param: f64,
    /// Instance template; the seed is replaced per run.
    pub config: Problem1Config,
}

pub fn table_cells(family: TableFamily) -> Vec<TableCell> {
    let mut cells = Vec::new();
    for shape in SetShape::ALL {
        let base = Problem1Config::baseline(shape);
        let n = base.n as f64;
        match family {
            TableFamily::Table1 => {
                for b in [0.0, n.sqrt(), (2.0 * n).sqrt(), (3.0 * n).sqrt()] {
                    cells.push(TableCell { shape, param: b, config: Problem1Config { b_norm: b, ..base.clone() } });
                }
            }
            TableFamily::Table2 => {
                for l in [20.0, 50.0, 100.0] {
                    let config = Problem1Config { b_norm: 5.0 * 6f64.sqrt(), lipschitz: l, ..base.clone() };
                    cells.push(TableCell { shape, param: l, config });
                }
            }
            TableFamily::Table3 => {
                for eps in [1.0, 0.1, 0.01, 0.001] {
                    let config = Problem1Config { b_norm: 10.0, epsilon: eps, ..base.clone() };
                    cells.push(TableCell { shape, param: eps, config });
                }
            }
            TableFamily::Table4 => {
                for n in [25usize, 50, 75, 100] {
                    let config = Problem1Config { n, l: n / 5, b_norm: (2.0 * n as f64).sqrt(), ..base.clone() };
                    cells.push(TableCell { shape, param: n as f64, config });
                }
            }
        }
    }
    cells
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub set: String,
    pub param: f64,
    pub time_sec: f64,
    pub rho_increments: f64,
    pub cuts: f64,
    pub eps_tilde: f64,
    #[serde(rename = "E")]
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellRun {
    pub cell: usize,
    pub seed: u64,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableResult {
    pub rows: Vec<TableRow>,
    /// Individual runs ordered by (cell, seed).
    pub runs: Vec<CellRun>,
}

/// Runs `instances` seeds (`base_seed, base_seed + 1, ...`) in every cell.
/// The same seeds are used in every cell, so cells differ only in the swept
/// parameter. Fails with [`Error::BoundViolation`] if any run ends with
/// `eps_tilde > E`.
pub fn run_cells(
    cells: &[TableCell],
    instances: usize,
    algorithm: Algorithm,
    params: &AlgoParams,
    base_seed: u64,
) -> Result<TableResult> {
    if instances == 0 {
        return Err(Error::Config("need at least one instance per cell".into()));
    }
    if algorithm == Algorithm::Alg1 {
        // random quadratic instances always carry the exponential term
        return Err(Error::NotAffine);
    }
    let jobs: Vec<(usize, u64)> =
        (0..cells.len()).flat_map(|c| (0..instances as u64).map(move |i| (c, base_seed.wrapping_add(i)))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let cfg = Problem1Config { seed, ..cells[c].config.clone() };
            let inst = gen_problem1(&cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(super::run_seed(seed));
            let trace = match algorithm {
                Algorithm::Alg2 => run_alg2(&inst, cfg.lipschitz, inst.set.diameter(), params, &mut rng)?,
                _ => run_alg3(&inst, params, &mut rng)?,
            };
            let summary = trace.summary;
            let bound = summary.bound.expect("generated operators carry their Lipschitz constant");
            if summary.eps_tilde > bound + 1e-9 {
                return Err(Error::BoundViolation { eps_tilde: summary.eps_tilde, bound });
            }
            Ok(CellRun { cell: c, seed, summary })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let mine: Vec<&RunSummary> = runs.iter().filter(|r| r.cell == c).map(|r| &r.summary).collect();
            let mean = |f: &dyn Fn(&RunSummary) -> f64| mine.iter().map(|s| f(s)).sum::<f64>() / mine.len() as f64;
            TableRow {
                set: cell.shape.label().to_string(),
                param: cell.param,
                time_sec: mean(&|s| s.elapsed_sec),
                rho_increments: mean(&|s| s.rho_increments as f64),
                cuts: mean(&|s| s.cuts as f64),
                eps_tilde: mean(&|s| s.eps_tilde),
                bound: mean(&|s| s.bound.unwrap_or(f64::NAN)),
                ratio: mean(&|s| s.ratio.unwrap_or(f64::NAN)),
            }
        })
        .collect();
    Ok(TableResult { rows, runs })
}

/// Runs a whole table with the library's default parameters.
pub fn run_table(family: TableFamily, instances: usize, algorithm: Algorithm, base_seed: u64) -> Result<TableResult> {
    run_cells(&table_cells(family), instances, algorithm, &AlgoParams::default(), base_seed)
}

pub fn write_table_csv<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(crate::algorithms::csv_err)?;
    }
    w.flush()?;
    Ok(())
}
