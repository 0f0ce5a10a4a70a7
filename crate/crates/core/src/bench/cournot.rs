//! Welfare-maximizing equilibrium selection in a Cournot market where each
//! firm produces and sells at several locations.

use std::io::Write;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_alg3, AlgoParams, PracticalStop, Termination};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::problem::{CournotModel, Objective, Operator, ProblemInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CournotConfig {
    pub firms: usize,
    pub locations: usize,
    pub sigma: f64,
    /// Demand intercepts `a_j`.
    pub a: Vec<f64>,
    /// Demand slopes `b_j`.
    pub b: Vec<f64>,
    /// Capacities `B_ij`, row-major `firms x locations`.
    pub capacity: Vec<f64>,
    /// Unit costs are drawn uniformly from this range.
    pub cost_range: [f64; 2],
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for CournotConfig {
    fn default() -> Self {
        Self {
            firms: 4,
            locations: 3,
            sigma: 1.05,
            a: vec![1.0; 3],
            b: vec![0.01; 3],
            capacity: vec![5.0; 12],
            cost_range: [0.1, 1.0],
            epsilon: 1e-6,
            seed: 0,
        }
    }
}

impl CournotConfig {
    pub fn validate(&self) -> Result<()> {
        let (n, j) = (self.firms, self.locations);
        if n == 0 || j == 0 || self.a.len() != j || self.b.len() != j || self.capacity.len() != n * j {
            return Err(Error::Config(format!(
                "cournot config needs {j} intercepts and slopes and {} capacities",
                n * j
            )));
        }
        if !(self.sigma >= 1.0) {
            return Err(Error::Config(format!("demand exponent must be >= 1, got {}", self.sigma)));
        }
        let [lo, hi] = self.cost_range;
        if !(lo >= 0.0 && lo <= hi) || !(self.epsilon > 0.0) {
            return Err(Error::Config("need 0 <= cost low <= cost high and epsilon > 0".into()));
        }
        Ok(())
    }
}

/// Operator `-grad g_i` per firm, objective `-welfare`, set the product of
/// firm sets.
pub fn gen_cournot(cfg: &CournotConfig) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let [lo, hi] = cfg.cost_range;
    let cost = (0..cfg.firms * cfg.locations)
        .map(|_| if hi > lo { rng.random_range(lo..hi) } else { lo })
        .collect();
    let model = Arc::new(CournotModel::new(cfg.firms, cfg.locations, cfg.a.clone(), cfg.b.clone(), cfg.sigma, cost)?);
    let factors = cfg
        .capacity
        .chunks(cfg.locations)
        .map(|row| FeasibleSet::cournot_firm(row.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(
        Operator::cournot(model.clone()),
        Objective::neg_welfare(model),
        FeasibleSet::product(factors)?,
        cfg.epsilon,
    )
}

/// Algorithm 3 settings of the study: practical stop and a 60 s cap per run.
/// The wall clock is the binding limit, so the outer iteration cap is lifted.
pub fn cournot_params() -> AlgoParams {
    AlgoParams {
        practical_stop: Some(PracticalStop::default()),
        time_limit_sec: Some(60.0),
        max_outer_iterations: STUDY_ITERATION_CAP,
        ..AlgoParams::default()
    }
}

/// Outer iterations allowed per study run; far beyond what fits in 60 s.
pub const STUDY_ITERATION_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CournotRun {
    pub seed: u64,
    pub time_sec: f64,
    pub eps_tilde: f64,
    pub welfare: f64,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CournotSummary {
    pub mean_time_sec: f64,
    pub max_time_sec: f64,
    pub mean_eps_tilde: f64,
    pub mean_welfare: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CournotStudy {
    pub runs: Vec<CournotRun>,
    pub summary: CournotSummary,
}

impl CournotStudy {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let s = &self.summary;
        writeln!(out, "mean_time_sec,max_time_sec,mean_eps_tilde,mean_welfare")?;
        writeln!(out, "{},{},{},{}", s.mean_time_sec, s.max_time_sec, s.mean_eps_tilde, s.mean_welfare)?;
        Ok(())
    }
}

/// Runs `instances` markets with seeds `cfg.seed, cfg.seed + 1, ...`.
pub fn run_cournot_study(cfg: &CournotConfig, instances: usize, params: &AlgoParams) -> Result<CournotStudy> {
    cfg.validate()?;
    if instances == 0 {
        return Err(Error::Config("cournot study needs at least one instance".into()));
    }
    let runs = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let inst = gen_cournot(&CournotConfig { seed, ..cfg.clone() })?;
            let mut rng = ChaCha8Rng::seed_from_u64(super::run_seed(seed));
            let trace = run_alg3(&inst, params, &mut rng)?;
            let s = trace.summary;
            Ok(CournotRun {
                seed,
                time_sec: s.elapsed_sec,
                eps_tilde: s.eps_tilde,
                welfare: -s.f_final,
                termination: s.termination,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = runs.len() as f64;
    let summary = CournotSummary {
        mean_time_sec: runs.iter().map(|r| r.time_sec).sum::<f64>() / k,
        max_time_sec: runs.iter().map(|r| r.time_sec).fold(0.0, f64::max),
        mean_eps_tilde: runs.iter().map(|r| r.eps_tilde).sum::<f64>() / k,
        mean_welfare: runs.iter().map(|r| r.welfare).sum::<f64>() / k,
    };
    Ok(CournotStudy { runs, summary })
}
