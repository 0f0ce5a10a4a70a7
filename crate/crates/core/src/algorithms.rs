//! Outer cutting-plane drivers. Every iteration solves the penalized problem
//! over the current cut pool, tests a stopping rule, and otherwise adds one
//! cut that separates the iterate from the eps-solution set.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::{minty_gap_affine, stampacchia_gap, CutPool, GapValue};
use crate::linesearch::{build_phi, global_max_1d, LineSearchBudget};
use crate::penalty::{exact_penalty_loop, InnerSolverConfig, PenaltyState};
use crate::problem::ProblemInstance;

/// Stop once `|f(x_{k+1}) - f(x_k)| <= f_change` and `psi_S(x_{k+1}) <= gap`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PracticalStop {
    pub f_change: f64,
    pub gap: f64,
}

impl Default for PracticalStop {
    fn default() -> Self {
        Self { f_change: 1e-3, gap: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoParams {
    pub rho0: f64,
    pub sigma: f64,
    /// `delta_k = delta0 / (k + 1)`.
    pub delta0: f64,
    pub max_outer_iterations: usize,
    pub inner: InnerSolverConfig,
    pub linesearch: LineSearchBudget,
    pub practical_stop: Option<PracticalStop>,
    pub time_limit_sec: Option<f64>,
}

impl Default for AlgoParams {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            sigma: 1.2,
            delta0: 1e-3,
            max_outer_iterations: 500,
            inner: InnerSolverConfig::default(),
            linesearch: LineSearchBudget::default(),
            practical_stop: None,
            time_limit_sec: None,
        }
    }
}

impl AlgoParams {
    pub fn delta(&self, k: usize) -> f64 {
        self.delta0 / (k + 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0) || self.max_outer_iterations == 0 {
            return Err(Error::Config(format!(
                "need delta0 > 0 and max_outer_iterations > 0 (got {}, {})",
                self.delta0, self.max_outer_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The algorithm's own stopping rule fired.
    Converged,
    PracticalStop,
    IterationCap,
    TimeLimit,
    /// The new cut duplicated an existing one, so the pool stopped changing.
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f: f64,
    /// Cut-pool gap at `x_k`, before the new cut.
    pub psi_b: f64,
    pub psi_s: f64,
    pub rho: f64,
    pub rho_increments: usize,
    pub cuts: usize,
    /// `<G(y_{k+1}), x_k - y_{k+1}>` for the candidate cut, when one was formed.
    pub cut_value: Option<f64>,
    pub elapsed_sec: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub termination: Termination,
    pub iterations: usize,
    pub cuts: usize,
    pub rho_final: f64,
    pub rho_increments: usize,
    pub f_final: f64,
    pub eps_tilde: f64,
    /// `2 D sqrt(L eps)`, available when `L` is known.
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub elapsed_sec: f64,
    pub x_final: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
}

impl RunTrace {
    /// One row per outer iteration.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "f", "psi_B", "psi_S", "rho", "rho_increments", "cuts", "cut_value", "elapsed_sec"])
            .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.k.to_string(),
                r.f.to_string(),
                r.psi_b.to_string(),
                r.psi_s.to_string(),
                r.rho.to_string(),
                r.rho_increments.to_string(),
                r.cuts.to_string(),
                r.cut_value.map(|v| v.to_string()).unwrap_or_default(),
                r.elapsed_sec.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary is plain data")
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// `2 D sqrt(L eps)`.
pub fn inexactness_bound(diameter: f64, lipschitz: f64, epsilon: f64) -> f64 {
    2.0 * diameter * (lipschitz * epsilon).sqrt()
}

enum Step {
    Stop,
    Cut { y: DVector<f64>, value: f64 },
}

fn drive<R, F>(
    algorithm: Algorithm,
    instance: &ProblemInstance,
    params: &AlgoParams,
    bound: Option<f64>,
    rng: &mut R,
    mut decide: F,
) -> Result<RunTrace>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &DVector<f64>, &GapValue) -> Result<Step>,
{
    params.validate()?;
    let start = Instant::now();
    let (op, set) = (&instance.operator, &instance.set);
    let mut pool = CutPool::new();
    pool.add_cut(&set.sample_uniform(rng), op, set)?;
    let mut state = PenaltyState::new(params.rho0, params.sigma, instance.epsilon)?;
    let mut warm = set.interior_point();
    let mut records: Vec<IterationRecord> = Vec::new();

    let mut termination = Termination::IterationCap;
    let mut last: Option<(DVector<f64>, f64, f64)> = None;
    for k in 0..params.max_outer_iterations {
        let outcome = exact_penalty_loop(instance, &pool, &mut state, &warm, &params.inner)?;
        let x = outcome.solution.x;
        let f = instance.objective.value(&x)?;
        let (psi_b, _) = pool.value(&x)?;
        let gap = stampacchia_gap(op, set, &x)?;
        let mut record = IterationRecord {
            k,
            x: x.iter().copied().collect(),
            f,
            psi_b,
            psi_s: gap.value,
            rho: state.rho,
            rho_increments: state.increments,
            cuts: pool.len(),
            cut_value: None,
            elapsed_sec: 0.0,
        };
        let prev_f = last.as_ref().map(|(_, f, _)| *f);
        last = Some((x.clone(), f, gap.value));

        let practical = match (params.practical_stop, prev_f) {
            (Some(p), Some(prev)) => (f - prev).abs() <= p.f_change && gap.value <= p.gap,
            _ => false,
        };
        if practical {
            termination = Termination::PracticalStop;
        } else {
            match decide(k, &x, &gap)? {
                Step::Stop => termination = Termination::Converged,
                Step::Cut { y, value } => {
                    record.cut_value = Some(value);
                    let before = pool.len();
                    pool.add_cut(&y, op, set)?;
                    record.cuts = pool.len();
                    if pool.len() == before {
                        termination = Termination::Stalled;
                    }
                }
            }
        }
        record.elapsed_sec = start.elapsed().as_secs_f64();
        let elapsed = record.elapsed_sec;
        records.push(record);
        let stop = practical || !matches!(termination, Termination::IterationCap);
        if stop {
            break;
        }
        if params.time_limit_sec.is_some_and(|t| elapsed >= t) {
            termination = Termination::TimeLimit;
            break;
        }
        warm = x;
    }

    let (x, f_final, eps_tilde) = last.expect("at least one outer iteration");
    let ratio = bound.map(|e| if e > 0.0 { eps_tilde / e } else { f64::INFINITY });
    let summary = RunSummary {
        algorithm,
        termination,
        iterations: records.len(),
        cuts: pool.len(),
        rho_final: state.rho,
        rho_increments: state.increments,
        f_final,
        eps_tilde,
        bound,
        ratio,
        elapsed_sec: start.elapsed().as_secs_f64(),
        x_final: x.iter().copied().collect(),
    };
    Ok(RunTrace { records, summary })
}

fn known_bound(instance: &ProblemInstance) -> Option<f64> {
    instance
        .operator
        .lipschitz()
        .map(|l| inexactness_bound(instance.set.diameter(), l, instance.epsilon))
}

/// Cuts at the Minty maximizer. Requires an affine monotone operator, the
/// only case where the Minty gap is computed exactly. The run stops once
/// `psi_M(x_k) <= eps` up to the evaluation tolerance
/// `min(minty_tol, delta_k / 2)` plus the inner feasibility tolerance.
pub fn run_alg1<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    params: &AlgoParams,
    minty_tol: f64,
    rng: &mut R,
) -> Result<RunTrace> {
    if !instance.operator.is_affine() {
        return Err(Error::NotAffine);
    }
    if !(minty_tol > 0.0) {
        return Err(Error::Config(format!("minty_tol must be positive, got {minty_tol}")));
    }
    let eps = instance.epsilon;
    let slack = params.inner.feasibility_tol;
    let decide = |k: usize, x: &DVector<f64>, _: &GapValue| -> Result<Step> {
        let tol = minty_tol.min(0.5 * params.delta(k));
        let m = minty_gap_affine(&instance.operator, &instance.set, x, tol)?;
        if m.value <= eps + tol + slack {
            Ok(Step::Stop)
        } else {
            Ok(Step::Cut { y: m.maximizer, value: m.value })
        }
    };
    drive(Algorithm::Alg1, instance, params, known_bound(instance), rng, decide)
}

/// Cuts at the fixed step `sqrt(eps) / (D sqrt(L))` towards the Stampacchia
/// maximizer and stops once `psi_S(x_k) <= 2 D sqrt(L eps)`.
pub fn run_alg2<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    lipschitz: f64,
    diameter: f64,
    params: &AlgoParams,
    rng: &mut R,
) -> Result<RunTrace> {
    let eps = instance.epsilon;
    if !(lipschitz > 0.0) || !(diameter > 0.0) {
        return Err(Error::Premise(format!("need L > 0 and D > 0 (got {lipschitz}, {diameter})")));
    }
    if eps > diameter * diameter * lipschitz {
        return Err(Error::Premise(format!("eps = {eps} exceeds D^2 L = {}", diameter * diameter * lipschitz)));
    }
    let threshold = inexactness_bound(diameter, lipschitz, eps);
    let lambda = eps.sqrt() / (diameter * lipschitz.sqrt());
    let op = &instance.operator;
    let decide = |_: usize, x: &DVector<f64>, gap: &GapValue| -> Result<Step> {
        if gap.value <= threshold {
            return Ok(Step::Stop);
        }
        let y = x + (&gap.maximizer - x) * lambda;
        let value = op.eval(&y)?.dot(&(x - &y));
        Ok(Step::Cut { y, value })
    };
    drive(Algorithm::Alg2, instance, params, Some(threshold), rng, decide)
}

/// Cuts at the exact line-search point on the segment towards the
/// Stampacchia maximizer and stops once that cut would not separate, i.e.
/// `<G(y_{k+1}), x_k - y_{k+1}> <= eps` up to the inner feasibility
/// tolerance. Needs no knowledge of `L` or `D`.
pub fn run_alg3<R: Rng + ?Sized>(instance: &ProblemInstance, params: &AlgoParams, rng: &mut R) -> Result<RunTrace> {
    let eps = instance.epsilon;
    let slack = params.inner.feasibility_tol;
    let op = &instance.operator;
    let decide = |_: usize, x: &DVector<f64>, gap: &GapValue| -> Result<Step> {
        let phi = build_phi(op, x, &gap.maximizer)?;
        let best = global_max_1d(&phi, &params.linesearch);
        let y = x + (&gap.maximizer - x) * best.lambda;
        let value = op.eval(&y)?.dot(&(x - &y));
        if value <= eps + slack {
            Ok(Step::Stop)
        } else {
            Ok(Step::Cut { y, value })
        }
    };
    drive(Algorithm::Alg3, instance, params, known_bound(instance), rng, decide)
}
