//! TOML description of a single solve.
//!
//! ```toml
//! algorithm = "alg3"
//! seed = 7
//!
//! [problem]
//! kind = "explicit"
//! epsilon = 0.01
//! set = { kind = "box", lower = [0.0], upper = [1.0] }
//! operator = { kind = "affine", matrix = [[1.0]], offset = [-0.5] }
//! objective = { kind = "quadratic", q = [[1.0]], center = [1.0] }
//! ```

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cournot::{gen_cournot, CournotConfig};
use super::problem1::{gen_problem1, Problem1Config};
use super::region::RegionOperator;
use crate::algorithms::{run_alg1, run_alg2, run_alg3, AlgoParams, Algorithm, RunTrace};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::problem::{Objective, Operator, ProblemInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: AlgoParams,
    /// Minty evaluation tolerance for Algorithm 1.
    #[serde(default = "default_minty_tol")]
    pub minty_tol: f64,
    /// Overrides the operator's Lipschitz constant for Algorithm 2.
    pub lipschitz: Option<f64>,
    /// Overrides the set diameter for Algorithm 2.
    pub diameter: Option<f64>,
    pub problem: ProblemSpec,
}

fn default_minty_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Explicit {
        epsilon: f64,
        set: SetSpec,
        operator: OperatorSpec,
        objective: ObjectiveSpec,
        lipschitz: Option<f64>,
    },
    Problem1(Problem1Config),
    Cournot(CournotConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Cube { dim: usize },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { dim: usize, #[serde(default = "one")] scale: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    LinearExp { matrix: Vec<Vec<f64>>, offset: Vec<f64>, alpha: Vec<f64>, beta: Vec<f64>, #[serde(default)] tail: usize },
    /// `(x1^2 + x2, x2^2 - x1)`.
    Example21,
    Gab { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `(x - center)^T q (x - center)`.
    Quadratic { q: Vec<Vec<f64>>, center: Vec<f64> },
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config("matrix rows must be non-empty and of equal length".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl SetSpec {
    pub fn build(&self) -> Result<FeasibleSet> {
        match self {
            SetSpec::Box { lower, upper } => FeasibleSet::boxed(lower.clone(), upper.clone()),
            SetSpec::Cube { dim } => Ok(FeasibleSet::unit_cube(*dim)),
            SetSpec::Ball { center, radius } => FeasibleSet::ball(center.clone(), *radius),
            SetSpec::Simplex { dim, scale } => FeasibleSet::simplex(*dim, *scale),
        }
    }
}

impl OperatorSpec {
    pub fn build(&self) -> Result<Operator> {
        match self {
            OperatorSpec::Affine { matrix: m, offset } => {
                Operator::affine(matrix(m)?, DVector::from_column_slice(offset))
            }
            OperatorSpec::LinearExp { matrix: m, offset, alpha, beta, tail } => Operator::linear_exp(
                matrix(m)?,
                DVector::from_column_slice(offset),
                DVector::from_column_slice(alpha),
                DVector::from_column_slice(beta),
                *tail,
            ),
            OperatorSpec::Example21 => Ok(RegionOperator::Example21.operator()),
            OperatorSpec::Gab { a, b } => Ok(RegionOperator::Gab { a: *a, b: *b }.operator()),
        }
    }
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<Objective> {
        match self {
            ObjectiveSpec::Quadratic { q, center } => Objective::quadratic(matrix(q)?, DVector::from_column_slice(center)),
        }
    }
}

impl SolveConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        match &self.problem {
            ProblemSpec::Explicit { epsilon, set, operator, objective, lipschitz } => {
                let mut op = operator.build()?;
                if let Some(l) = lipschitz {
                    op = op.with_lipschitz(*l);
                }
                ProblemInstance::new(op, objective.build()?, set.build()?, *epsilon)
            }
            ProblemSpec::Problem1(cfg) => gen_problem1(cfg),
            ProblemSpec::Cournot(cfg) => gen_cournot(cfg),
        }
    }
}

/// Builds the instance and runs the configured algorithm.
pub fn solve(config: &SolveConfig) -> Result<RunTrace> {
    let instance = config.instance()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.algorithm {
        Algorithm::Alg1 => run_alg1(&instance, &config.params, config.minty_tol, &mut rng),
        Algorithm::Alg2 => {
            let l = config.lipschitz.or(instance.operator.lipschitz()).ok_or_else(|| {
                Error::Config("algorithm 2 needs a Lipschitz constant (set `lipschitz`)".into())
            })?;
            let d = config.diameter.unwrap_or_else(|| instance.set.diameter());
            run_alg2(&instance, l, d, &config.params, &mut rng)
        }
        Algorithm::Alg3 => run_alg3(&instance, &config.params, &mut rng),
    }
}
