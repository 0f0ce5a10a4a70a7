//! Log-barrier interior-point method for smooth convex objectives over a
//! feasible set intersected with extra linear inequalities.
//!
//! The set constraints are expanded into sparse rows, ball constraints and
//! equalities; dense rows (the cuts of the penalized subproblem) are kept as a
//! matrix so their barrier Hessian is a single `W^T W` product.

use nalgebra::{DMatrix, DVector};

use crate::geometry::{FeasibleSet, SetKind};

pub(crate) trait SmoothProblem {
    fn value(&self, z: &DVector<f64>) -> f64;
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, z: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Clone, Debug)]
struct SparseRow {
    idx: Vec<usize>,
    coef: Vec<f64>,
    rhs: f64,
}

impl SparseRow {
    fn dot(&self, z: &DVector<f64>) -> f64 {
        self.idx.iter().zip(&self.coef).map(|(i, c)| c * z[*i]).sum()
    }
}

#[derive(Clone, Debug)]
struct BallRow {
    start: usize,
    center: Vec<f64>,
    radius_sq: f64,
}

impl BallRow {
    fn slack(&self, z: &DVector<f64>) -> f64 {
        let dist_sq: f64 = self
            .center
            .iter()
            .enumerate()
            .map(|(k, c)| (z[self.start + k] - c).powi(2))
            .sum();
        self.radius_sq - dist_sq
    }
}

/// Inequalities `row . z <= rhs`, ball constraints and equalities on `R^dim`.
#[derive(Clone, Debug)]
pub(crate) struct Constraints {
    dim: usize,
    sparse: Vec<SparseRow>,
    dense: DMatrix<f64>,
    dense_rhs: DVector<f64>,
    balls: Vec<BallRow>,
    equalities: Vec<SparseRow>,
}

impl Constraints {
    /// Constraints describing `set` on the leading `set.dim()` coordinates of
    /// a `dim`-dimensional variable.
    pub(crate) fn for_set(set: &FeasibleSet, dim: usize) -> Self {
        let mut cons = Self {
            dim,
            sparse: Vec::new(),
            dense: DMatrix::zeros(0, dim),
            dense_rhs: DVector::zeros(0),
            balls: Vec::new(),
            equalities: Vec::new(),
        };
        cons.add_set(set, 0);
        cons
    }

    fn bound(&mut self, i: usize, coef: f64, rhs: f64) {
        self.sparse.push(SparseRow { idx: vec![i], coef: vec![coef], rhs });
    }

    fn add_set(&mut self, set: &FeasibleSet, start: usize) {
        match set.kind() {
            SetKind::Box { lower, upper } => {
                for (k, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if u > l {
                        self.bound(start + k, -1.0, -l);
                        self.bound(start + k, 1.0, *u);
                    } else {
                        self.equalities.push(SparseRow { idx: vec![start + k], coef: vec![1.0], rhs: *l });
                    }
                }
            }
            SetKind::Ball { center, radius } => self.balls.push(BallRow {
                start,
                center: center.clone(),
                radius_sq: radius * radius,
            }),
            SetKind::Simplex { dim, scale } => {
                for k in 0..*dim {
                    self.bound(start + k, -1.0, 0.0);
                }
                self.equalities.push(SparseRow {
                    idx: (start..start + dim).collect(),
                    coef: vec![1.0; *dim],
                    rhs: *scale,
                });
            }
            SetKind::CournotFirm { capacity } => {
                let locations = capacity.len();
                for (j, b) in capacity.iter().enumerate() {
                    self.bound(start + j, -1.0, 0.0);
                    self.bound(start + j, 1.0, *b);
                    self.bound(start + locations + j, -1.0, 0.0);
                }
                let mut coef = vec![-1.0; locations];
                coef.extend(std::iter::repeat_n(1.0, locations));
                self.equalities.push(SparseRow { idx: (start..start + 2 * locations).collect(), coef, rhs: 0.0 });
            }
            SetKind::Product(factors) => {
                let mut off = start;
                for f in factors {
                    self.add_set(f, off);
                    off += f.dim();
                }
            }
        }
    }

    pub(crate) fn push_bound(&mut self, i: usize, coef: f64, rhs: f64) {
        self.bound(i, coef, rhs);
    }

    /// Appends dense rows `rows . z <= rhs`.
    pub(crate) fn push_dense(&mut self, rows: DMatrix<f64>, rhs: DVector<f64>) {
        assert_eq!(rows.ncols(), self.dim);
        let old = self.dense.nrows();
        let mut dense = DMatrix::zeros(old + rows.nrows(), self.dim);
        dense.rows_mut(0, old).copy_from(&self.dense);
        dense.rows_mut(old, rows.nrows()).copy_from(&rows);
        let mut dense_rhs = DVector::zeros(old + rhs.len());
        dense_rhs.rows_mut(0, old).copy_from(&self.dense_rhs);
        dense_rhs.rows_mut(old, rhs.len()).copy_from(&rhs);
        self.dense = dense;
        self.dense_rhs = dense_rhs;
    }

    fn inequality_count(&self) -> usize {
        self.sparse.len() + self.dense.nrows() + self.balls.len()
    }

    /// Slacks of every inequality, `None` if any is not strictly positive.
    fn slacks(&self, z: &DVector<f64>) -> Option<Slacks> {
        let sparse: Vec<f64> = self.sparse.iter().map(|r| r.rhs - r.dot(z)).collect();
        let dense = &self.dense_rhs - &self.dense * z;
        let balls: Vec<f64> = self.balls.iter().map(|b| b.slack(z)).collect();
        let ok = sparse.iter().chain(dense.iter()).chain(balls.iter()).all(|s| *s > 0.0);
        ok.then_some(Slacks { sparse, dense, balls })
    }

    fn equality_residual(&self, z: &DVector<f64>) -> f64 {
        self.equalities.iter().map(|r| (r.rhs - r.dot(z)).abs() / (1.0 + r.rhs.abs())).fold(0.0, f64::max)
    }

    fn barrier_value(slacks: &Slacks) -> f64 {
        -slacks.sparse.iter().chain(slacks.dense.iter()).chain(slacks.balls.iter()).map(|s| s.ln()).sum::<f64>()
    }

    fn barrier_derivatives(&self, z: &DVector<f64>, slacks: &Slacks) -> (DVector<f64>, DMatrix<f64>) {
        let mut grad = DVector::zeros(self.dim);
        let mut hess = DMatrix::zeros(self.dim, self.dim);
        for (row, s) in self.sparse.iter().zip(&slacks.sparse) {
            for (a, ca) in row.idx.iter().zip(&row.coef) {
                grad[*a] += ca / s;
                for (b, cb) in row.idx.iter().zip(&row.coef) {
                    hess[(*a, *b)] += ca * cb / (s * s);
                }
            }
        }
        if self.dense.nrows() > 0 {
            let inv = slacks.dense.map(|s| 1.0 / s);
            grad += self.dense.tr_mul(&inv);
            let mut weighted = self.dense.clone();
            for (mut r, w) in weighted.row_iter_mut().zip(inv.iter()) {
                r *= *w;
            }
            hess.gemm_tr(1.0, &weighted, &weighted, 1.0);
        }
        for (ball, s) in self.balls.iter().zip(&slacks.balls) {
            let d: Vec<f64> = ball.center.iter().enumerate().map(|(k, c)| z[ball.start + k] - c).collect();
            for a in 0..d.len() {
                grad[ball.start + a] += 2.0 * d[a] / s;
                hess[(ball.start + a, ball.start + a)] += 2.0 / s;
                for b in 0..d.len() {
                    hess[(ball.start + a, ball.start + b)] += 4.0 * d[a] * d[b] / (s * s);
                }
            }
        }
        (grad, hess)
    }
}

struct Slacks {
    sparse: Vec<f64>,
    dense: DVector<f64>,
    balls: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BarrierOptions {
    /// Duality-gap target.
    pub gap_tol: f64,
    /// Keep tightening past `gap_tol` down to this gap while the acceptance
    /// test rejects the iterate.
    pub gap_floor: f64,
    pub max_newton: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct BarrierOutcome {
    pub z: DVector<f64>,
    #[allow(dead_code)]
    pub value: f64,
    pub converged: bool,
}

const BARRIER_GROWTH: f64 = 12.0;

/// Minimizes `problem` from the strictly feasible `z0`.
///
/// Stops once the certified gap is below `gap_tol` and `accept` holds, or the
/// gap reaches `gap_floor`, or Newton stalls numerically.
pub(crate) fn minimize(
    problem: &dyn SmoothProblem,
    cons: &Constraints,
    z0: DVector<f64>,
    opts: BarrierOptions,
    accept: &dyn Fn(&DVector<f64>) -> bool,
) -> BarrierOutcome {
    let m = cons.inequality_count().max(1) as f64;
    let mut z = z0;
    let mut slacks = cons.slacks(&z).expect("barrier start must be strictly feasible");
    let mut tau = (m / (1.0 + problem.value(&z).abs())).clamp(1e-3, 1e6);
    let mut newton = 0usize;
    let mut stalled = false;

    loop {
        // centering
        for _ in 0..60 {
            if newton >= opts.max_newton {
                stalled = true;
                break;
            }
            newton += 1;
            let (bg, bh) = cons.barrier_derivatives(&z, &slacks);
            let grad = problem.gradient(&z) * tau + bg;
            let hess = problem.hessian(&z) * tau + bh;
            let Some(dz) = newton_direction(&hess, &grad, &z, cons) else {
                stalled = true;
                break;
            };
            let slope = grad.dot(&dz);
            if -slope / 2.0 <= 1e-10 && cons.equality_residual(&z) <= 1e-13 {
                break;
            }
            let current = tau * problem.value(&z) + Constraints::barrier_value(&slacks);
            let mut step = max_linear_step(cons, &slacks, &dz);
            let mut accepted = None;
            while step > 1e-16 {
                let cand = &z + &dz * step;
                if let Some(s) = cons.slacks(&cand) {
                    let val = tau * problem.value(&cand) + Constraints::barrier_value(&s);
                    if val <= current + 0.01 * step * slope {
                        accepted = Some((cand, s));
                        break;
                    }
                }
                step *= 0.5;
            }
            match accepted {
                Some((mut cand, mut s)) => {
                    if let Some(fixed) = restore_equalities(cons, &cand, &hess) {
                        if let Some(fs) = cons.slacks(&fixed) {
                            (cand, s) = (fixed, fs);
                        }
                    }
                    z = cand;
                    slacks = s;
                }
                None => {
                    stalled = true;
                    break;
                }
            }
        }
        let gap = m / tau;
        let done = (gap <= opts.gap_tol && accept(&z)) || gap <= opts.gap_floor;
        if done || stalled {
            let value = problem.value(&z);
            return BarrierOutcome { z, value, converged: gap <= opts.gap_tol };
        }
        tau *= BARRIER_GROWTH;
    }
}

/// Removes rounding drift from the equalities with a correction weighted by
/// the inverse Hessian diagonal, so coordinates pressed against a bound barely move.
fn restore_equalities(cons: &Constraints, z: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    let p = cons.equalities.len();
    if p == 0 || cons.equality_residual(z) == 0.0 {
        return None;
    }
    let n = z.len();
    let w: Vec<f64> = (0..n).map(|i| 1.0 / hess[(i, i)].abs().max(1e-300)).collect();
    let mut a = DMatrix::zeros(p, n);
    let mut r = DVector::zeros(p);
    for (k, row) in cons.equalities.iter().enumerate() {
        for (i, c) in row.idx.iter().zip(&row.coef) {
            a[(k, *i)] = *c;
        }
        r[k] = row.rhs - row.dot(z);
    }
    let mut aw = a.clone();
    for j in 0..n {
        aw.column_mut(j).scale_mut(w[j]);
    }
    let mu = (&aw * a.transpose()).lu().solve(&r)?;
    Some(z + aw.transpose() * mu)
}

fn max_linear_step(cons: &Constraints, slacks: &Slacks, dz: &DVector<f64>) -> f64 {
    let mut step: f64 = 1.0;
    for (row, s) in cons.sparse.iter().zip(&slacks.sparse) {
        let rate = row.dot(dz);
        if rate > 0.0 {
            step = step.min(0.99 * s / rate);
        }
    }
    let rates = &cons.dense * dz;
    for (rate, s) in rates.iter().zip(slacks.dense.iter()) {
        if *rate > 0.0 {
            step = step.min(0.99 * s / rate);
        }
    }
    step
}

/// Solves the equality-constrained Newton system, also pulling the iterate
/// back onto the equalities if rounding has drifted it.
fn newton_direction(
    hess: &DMatrix<f64>,
    grad: &DVector<f64>,
    z: &DVector<f64>,
    cons: &Constraints,
) -> Option<DVector<f64>> {
    let n = hess.nrows();
    let p = cons.equalities.len();
    // symmetric Jacobi scaling keeps the solve accurate when barrier terms
    // near the boundary dwarf the rest of the Hessian
    let d: Vec<f64> = (0..n).map(|i| 1.0 / hess[(i, i)].abs().max(1e-300).sqrt()).collect();
    let mut kkt = DMatrix::zeros(n + p, n + p);
    for j in 0..n {
        for i in 0..n {
            kkt[(i, j)] = hess[(i, j)] * d[i] * d[j];
        }
    }
    let mut rhs = DVector::zeros(n + p);
    for i in 0..n {
        rhs[i] = -grad[i] * d[i];
    }
    for (k, row) in cons.equalities.iter().enumerate() {
        for (i, c) in row.idx.iter().zip(&row.coef) {
            kkt[(n + k, *i)] = *c * d[*i];
            kkt[(*i, n + k)] = *c * d[*i];
        }
        rhs[n + k] = row.rhs - row.dot(z);
    }
    for attempt in 0..3 {
        let mut system = kkt.clone();
        if attempt > 0 {
            let reg = 1e-14 * 1e3f64.powi(attempt - 1);
            for i in 0..n {
                system[(i, i)] += reg;
            }
        }
        if let Some(sol) = system.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                return Some(DVector::from_iterator(n, (0..n).map(|i| sol[i] * d[i])));
            }
        }
    }
    None
}
