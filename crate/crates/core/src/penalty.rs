//! Penalized subproblem `min f(x) + rho * (psi_B(x) - eps)^+` over the set,
//! and the loop that grows `rho` until its solution is eps-feasible for the
//! current cut pool.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::barrier::{self, BarrierOptions, Constraints, SmoothProblem};
use crate::error::{Error, Result};
use crate::gap::{CutPool, POINT_TOL};
use crate::problem::{Objective, ProblemInstance};

/// Escalations allowed within one call of [`exact_penalty_loop`].
pub const ESCALATION_CAP: usize = 200;
/// Steps without sufficient progress before the subgradient level gap is halved.
const STALL_WINDOW: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyState {
    pub rho0: f64,
    pub rho: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub increments: usize,
}

impl PenaltyState {
    pub fn new(rho0: f64, sigma: f64, epsilon: f64) -> Result<Self> {
        if !(rho0 > 0.0) || !(sigma > 1.0) || !(epsilon > 0.0) {
            return Err(Error::Config(format!(
                "penalty needs rho0 > 0, sigma > 1, epsilon > 0 (got {rho0}, {sigma}, {epsilon})"
            )));
        }
        Ok(Self { rho0, rho: rho0, sigma, epsilon, increments: 0 })
    }

    pub fn escalate(&mut self) {
        self.increments += 1;
        self.rho = self.rho0 * self.sigma.powi(self.increments as i32);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerSolverConfig {
    /// Objective accuracy, relative to `1 + |F(warm_start)|`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Allowed excess of the pool gap over epsilon at loop exit.
    pub feasibility_tol: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self { tol: 1e-7, max_iterations: 20_000, feasibility_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenalizedSolution {
    pub x: DVector<f64>,
    /// Penalized objective `F(x)`.
    pub objective_value: f64,
    /// `psi_B(x) - eps`; nonpositive when `x` is eps-feasible for the pool.
    pub excess: f64,
    /// False when the iteration budget ran out before the stopping rule.
    pub converged: bool,
}

pub fn penalized_objective(instance: &ProblemInstance, pool: &CutPool, rho: f64, x: &DVector<f64>) -> Result<f64> {
    let (psi, _) = pool.value(x)?;
    Ok(instance.objective.value(x)? + rho * (psi - instance.epsilon).max(0.0))
}

/// Epigraph form in `z = (x, t)`: `min f(x) + rho t` s.t. `t >= 0`,
/// `<G(y_i), x> - t <= <G(y_i), y_i> + eps`.
struct Epigraph<'a> {
    objective: &'a Objective,
    rho: f64,
    n: usize,
}

impl Epigraph<'_> {
    fn split(&self, z: &DVector<f64>) -> DVector<f64> {
        z.rows(0, self.n).into_owned()
    }
}

impl SmoothProblem for Epigraph<'_> {
    fn value(&self, z: &DVector<f64>) -> f64 {
        self.objective.value_unchecked(&self.split(z)) + self.rho * z[self.n]
    }
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n + 1);
        g.rows_mut(0, self.n).copy_from(&self.objective.subgradient_unchecked(&self.split(z)));
        g[self.n] = self.rho;
        g
    }
    fn hessian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n + 1, self.n + 1);
        if let Some(fh) = self.objective.hessian(&self.split(z)) {
            h.view_mut((0, 0), (self.n, self.n)).copy_from(&fh);
        }
        h
    }
}

/// Minimizes the penalized objective for the current `rho`.
///
/// Smooth objectives are solved with the interior-point method on the
/// epigraph form; black-box objectives fall back to projected subgradient
/// steps.
pub fn solve_penalized(
    instance: &ProblemInstance,
    pool: &CutPool,
    state: &PenaltyState,
    warm_start: &DVector<f64>,
    config: &InnerSolverConfig,
) -> Result<PenalizedSolution> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let set = &instance.set;
    let violation = set.violation(warm_start)?;
    if violation > POINT_TOL {
        return Err(Error::Infeasible { violation });
    }
    let warm = set.project(warm_start)?;
    let scale = 1.0 + penalized_objective(instance, pool, state.rho, &warm)?.abs();
    let tol = config.tol * scale;

    if instance.objective.hessian(&warm).is_some() {
        solve_with_barrier(instance, pool, state, &warm, tol, config)
    } else {
        solve_with_subgradient(instance, pool, state, warm, tol, config)
    }
}

fn solve_with_barrier(
    instance: &ProblemInstance,
    pool: &CutPool,
    state: &PenaltyState,
    warm: &DVector<f64>,
    tol: f64,
    config: &InnerSolverConfig,
) -> Result<PenalizedSolution> {
    let set = &instance.set;
    let n = set.dim();
    let eps = instance.epsilon;

    let mut cons = Constraints::for_set(set, n + 1);
    cons.push_bound(n, -1.0, 0.0);
    let (normals, offsets) = pool.rows();
    let mut rows = DMatrix::zeros(normals.nrows(), n + 1);
    rows.view_mut((0, 0), (normals.nrows(), n)).copy_from(&normals);
    rows.column_mut(n).fill(-1.0);
    cons.push_dense(rows, offsets.add_scalar(eps));

    let x0 = (warm + set.interior_point()) * 0.5;
    let t0 = (pool.value(&x0)?.0 - eps).max(0.0) + 1.0;
    let mut z0 = DVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(&x0);
    z0[n] = t0;

    let problem = Epigraph { objective: &instance.objective, rho: state.rho, n };
    let feasible_enough = |z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        pool.value(&x).map(|(psi, _)| psi - eps <= 0.1 * config.feasibility_tol).unwrap_or(false)
    };
    let opts = BarrierOptions { gap_tol: tol, gap_floor: tol * 1e-6, max_newton: config.max_iterations };
    let out = barrier::minimize(&problem, &cons, z0, opts, &feasible_enough);

    let x = out.z.rows(0, n).into_owned();
    let (psi, _) = pool.value(&x)?;
    Ok(PenalizedSolution {
        objective_value: instance.objective.value_unchecked(&x) + state.rho * (psi - eps).max(0.0),
        excess: psi - eps,
        x,
        converged: out.converged,
    })
}

/// Projected subgradient with a Polyak step towards the target level
/// `best - delta`. The level gap `delta` is halved whenever a window of
/// steps fails to make half of it good, and the solver stops once it drops
/// below `tol`.
fn solve_with_subgradient(
    instance: &ProblemInstance,
    pool: &CutPool,
    state: &PenaltyState,
    warm: DVector<f64>,
    tol: f64,
    config: &InnerSolverConfig,
) -> Result<PenalizedSolution> {
    let set = &instance.set;
    let eps = instance.epsilon;
    let eval = |x: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let (psi, active) = pool.value(x)?;
        let mut g = instance.objective.subgradient_unchecked(x);
        // kink resolved toward the penalty side
        if psi >= eps {
            g += &pool.operator_values()[active] * state.rho;
        }
        Ok((instance.objective.value_unchecked(x) + state.rho * (psi - eps).max(0.0), g))
    };

    let mut x = warm;
    let (mut fx, mut g) = eval(&x)?;
    let mut best = (fx, x.clone());
    let mut delta = 0.1 * set.diameter().max(1e-12) * g.norm().max(1e-12);
    let mut anchor = fx;
    let mut since_progress = 0usize;
    let mut converged = false;
    for _ in 0..config.max_iterations {
        if delta < tol {
            converged = true;
            break;
        }
        let gnorm_sq = g.norm_squared();
        if gnorm_sq == 0.0 {
            converged = true;
            break;
        }
        let step = (fx - (best.0 - delta)) / gnorm_sq;
        x = set.project(&(&x - &g * step))?;
        (fx, g) = eval(&x)?;
        if fx < best.0 {
            best = (fx, x.clone());
        }
        since_progress += 1;
        if best.0 <= anchor - 0.5 * delta {
            anchor = best.0;
            since_progress = 0;
        } else if since_progress >= STALL_WINDOW {
            delta *= 0.5;
            anchor = best.0;
            since_progress = 0;
            x = best.1.clone();
            (fx, g) = eval(&x)?;
        }
    }
    let (value, x) = best;
    let (psi, _) = pool.value(&x)?;
    Ok(PenalizedSolution { objective_value: value, excess: psi - eps, x, converged })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopOutcome {
    pub solution: PenalizedSolution,
    pub escalations: usize,
}

/// Re-solves the penalized problem with `rho <- sigma * rho` until the
/// minimizer satisfies `psi_B(x) <= eps + feasibility_tol`.
pub fn exact_penalty_loop(
    instance: &ProblemInstance,
    pool: &CutPool,
    state: &mut PenaltyState,
    warm_start: &DVector<f64>,
    config: &InnerSolverConfig,
) -> Result<LoopOutcome> {
    let mut solution = solve_penalized(instance, pool, state, warm_start, config)?;
    let mut escalations = 0;
    while solution.excess > config.feasibility_tol {
        if escalations == ESCALATION_CAP {
            return Err(Error::EscalationCap(ESCALATION_CAP));
        }
        state.escalate();
        escalations += 1;
        let warm = solution.x.clone();
        solution = solve_penalized(instance, pool, state, &warm, config)?;
    }
    Ok(LoopOutcome { solution, escalations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use crate::problem::Operator;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    /// 1D instance on `set` with `f(x) = (x - center)^2` and operator
    /// `G(x) = slope * x + offset`.
    fn line_instance(set: FeasibleSet, center: f64, slope: f64, offset: f64, eps: f64) -> ProblemInstance {
        ProblemInstance::new(
            Operator::affine(DMatrix::from_element(1, 1, slope), v(&[offset])).unwrap(),
            Objective::quadratic(DMatrix::identity(1, 1), v(&[center])).unwrap(),
            set,
            eps,
        )
        .unwrap()
    }

    fn sym_interval() -> FeasibleSet {
        FeasibleSet::boxed(vec![-1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn inactive_penalty_interior_minimum() {
        // constant G = 1 and a cut at y = 1
        let set = sym_interval();
        let inst = line_instance(set.clone(), 0.0, 0.0, 1.0, 0.01);
        let mut pool = CutPool::new();
        pool.add_cut(&v(&[1.0]), &inst.operator, &set).unwrap();
        // psi_B(x) = x - 1 <= 0 < eps on the whole interval
        let state = PenaltyState::new(1.0, 2.0, 0.01).unwrap();
        let sol = solve_penalized(&inst, &pool, &state, &v(&[0.7]), &InnerSolverConfig::default()).unwrap();
        assert!(sol.x[0].abs() < 1e-6 && sol.objective_value < 1e-10, "{:?}", sol);
    }

    #[test]
    fn inactive_penalty_boundary_minimum() {
        let set = FeasibleSet::unit_cube(1);
        let inst = line_instance(set.clone(), 2.0, 0.0, 1.0, 0.01);
        let mut pool = CutPool::new();
        pool.add_cut(&v(&[1.0]), &inst.operator, &set).unwrap();
        let state = PenaltyState::new(1.0, 2.0, 0.01).unwrap();
        let sol = solve_penalized(&inst, &pool, &state, &v(&[0.2]), &InnerSolverConfig::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "{:?}", sol);
    }

    /// One cut with `G(y) = -1`, `<G(y), y> = -0.6`: pool gap `0.6 - x`.
    fn kink_instance(rho0: f64) -> (ProblemInstance, CutPool, PenaltyState) {
        let set = sym_interval();
        let inst = line_instance(set.clone(), 0.0, 0.0, -1.0, 0.1);
        let mut pool = CutPool::new();
        pool.add_cut(&v(&[0.6]), &inst.operator, &set).unwrap();
        (inst, pool, PenaltyState::new(rho0, 2.0, 0.1).unwrap())
    }

    fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
        (0..=steps)
            .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
            .map(|x| (x, f(x)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    #[test]
    fn kinked_penalty_matches_grid() {
        let (inst, pool, state) = kink_instance(10.0);
        let (gx, gf) = grid_min(|x| x * x + 10.0 * (0.5 - x).max(0.0), -1.0, 1.0, 200_000);
        assert!((gx - 0.5).abs() < 1e-5 && (gf - 0.25).abs() < 1e-9);
        let sol = solve_penalized(&inst, &pool, &state, &v(&[0.0]), &InnerSolverConfig::default()).unwrap();
        assert!((sol.x[0] - gx).abs() < 1e-5, "{:?}", sol);
        assert!((sol.objective_value - gf).abs() < 1e-6);
        assert!(sol.converged);
    }

    #[test]
    fn deterministic_solutions() {
        let (inst, pool, state) = kink_instance(3.0);
        let cfg = InnerSolverConfig::default();
        let a = solve_penalized(&inst, &pool, &state, &v(&[0.1]), &cfg).unwrap();
        let b = solve_penalized(&inst, &pool, &state, &v(&[0.1]), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn loop_without_escalation_when_feasible() {
        let (inst, pool, mut state) = kink_instance(10.0);
        let out = exact_penalty_loop(&inst, &pool, &mut state, &v(&[0.9]), &InnerSolverConfig::default()).unwrap();
        assert_eq!(out.escalations, 0);
        assert_eq!(state.increments, 0);
        assert!(out.solution.excess <= 1e-8);
    }

    #[test]
    fn loop_escalates_from_tiny_rho() {
        let (inst, pool, mut state) = kink_instance(1e-6);
        let out = exact_penalty_loop(&inst, &pool, &mut state, &v(&[0.0]), &InnerSolverConfig::default()).unwrap();
        assert!(out.escalations > 0 && out.escalations < ESCALATION_CAP);
        assert_eq!(state.increments, out.escalations);
        assert!((state.rho - 1e-6 * 2f64.powi(out.escalations as i32)).abs() < 1e-12 * state.rho);
        // brute-force check of the exit iterate: psi_B = 0.6 - x <= 0.1 + 1e-8
        let x = out.solution.x[0];
        assert!(0.6 - x <= 0.1 + 1e-8);
        // with rho > 1 the constrained minimizer x = 0.5 is exact
        assert!(state.rho >= 1.0 && (x - 0.5).abs() < 1e-6, "{x} at rho {}", state.rho);
    }

    #[test]
    fn subgradient_fallback_for_black_box_objectives() {
        let set = sym_interval();
        let inst = ProblemInstance::new(
            Operator::affine(DMatrix::zeros(1, 1), v(&[-1.0])).unwrap(),
            Objective::callable(
                1,
                Arc::new(|x: &DVector<f64>| x[0] * x[0]),
                Arc::new(|x: &DVector<f64>| x * 2.0),
            ),
            set.clone(),
            0.1,
        )
        .unwrap();
        let mut pool = CutPool::new();
        pool.add_cut(&v(&[0.6]), &inst.operator, &set).unwrap();
        let state = PenaltyState::new(10.0, 2.0, 0.1).unwrap();
        let sol = solve_penalized(&inst, &pool, &state, &v(&[0.0]), &InnerSolverConfig::default()).unwrap();
        assert!((sol.objective_value - 0.25).abs() < 1e-4, "{:?}", sol);
        assert!((sol.x[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn solver_preconditions() {
        let (inst, pool, state) = kink_instance(1.0);
        let cfg = InnerSolverConfig::default();
        assert!(matches!(solve_penalized(&inst, &CutPool::new(), &state, &v(&[0.0]), &cfg), Err(Error::EmptyPool)));
        assert!(matches!(solve_penalized(&inst, &pool, &state, &v(&[3.0]), &cfg), Err(Error::Infeasible { .. })));
        assert!(PenaltyState::new(1.0, 1.0, 0.1).is_err());
    }
}
