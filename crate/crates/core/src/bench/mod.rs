//! Instance generators, experiment runners and the solve configuration used
//! by the command-line tool.

pub mod config;
pub mod cournot;
pub mod problem1;
pub mod region;
pub mod tables;

pub use config::{solve, SolveConfig};
pub use cournot::{cournot_params, gen_cournot, run_cournot_study, CournotConfig, CournotStudy, CournotSummary};
pub use problem1::{gen_problem1, Problem1Config, SetShape};
pub use region::{export_region, RegionOperator};
pub use tables::{run_cells, run_table, table_cells, write_table_csv, TableCell, TableFamily, TableResult, TableRow};

/// Seed of the run-level stream (initial cut) derived from an instance seed,
/// kept distinct from the generator's stream.
pub fn run_seed(instance_seed: u64) -> u64 {
    instance_seed ^ 0x9e37_79b9_7f4a_7c15
}
