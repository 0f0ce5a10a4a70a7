//! Gap functions of the lower-level variational inequality.
//!
//! * Stampacchia gap `sup_y <G(x), x - y>`: one linear maximization.
//! * Minty gap `sup_y <G(y), x - y>`: convex in `x`, but only tractable here
//!   for affine monotone `G`, where the inner problem is a concave quadratic.
//! * Cut-pool gap: the Minty supremum restricted to finitely many points, a
//!   piecewise-affine convex lower bound of the Minty gap.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::barrier::{self, BarrierOptions, Constraints, SmoothProblem};
use crate::error::{check_dim, Error, Result};
use crate::geometry::FeasibleSet;
use crate::problem::{spectral_norm, Operator, OperatorKind};

/// Membership tolerance for points handed to the gap oracles.
pub const POINT_TOL: f64 = 1e-6;
/// Cuts closer than this to an existing cut are not added again.
pub const DUPLICATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GapValue {
    pub value: f64,
    pub maximizer: DVector<f64>,
}

fn require_member(set: &FeasibleSet, x: &DVector<f64>) -> Result<()> {
    let violation = set.violation(x)?;
    if violation > POINT_TOL {
        return Err(Error::Infeasible { violation });
    }
    Ok(())
}

pub fn stampacchia_gap(op: &Operator, set: &FeasibleSet, x: &DVector<f64>) -> Result<GapValue> {
    check_dim(set.dim(), op.dim())?;
    require_member(set, x)?;
    let g = op.eval_unchecked(x);
    Ok(stampacchia_from_value(set, x, &g))
}

/// Stampacchia gap with `G(x)` already evaluated.
pub(crate) fn stampacchia_from_value(set: &FeasibleSet, x: &DVector<f64>, g: &DVector<f64>) -> GapValue {
    let (maximizer, best) = set.linear_argmax(&(-g)).expect("dimension checked by caller");
    GapValue { value: g.dot(x) + best, maximizer }
}

/// `max_y <M y + b, x - y>` written as `min_y y^T Ms y - y^T (M^T x - b)`.
struct MintyInner {
    sym: DMatrix<f64>,
    linear: DVector<f64>,
}

impl SmoothProblem for MintyInner {
    fn value(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.sym * y)) - self.linear.dot(y)
    }
    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.sym * y * 2.0 - &self.linear
    }
    fn hessian(&self, _y: &DVector<f64>) -> DMatrix<f64> {
        &self.sym * 2.0
    }
}

/// Minty gap of an affine monotone operator, accurate to `tol`.
///
/// The returned maximizer is feasible, so `value` never overstates the gap.
pub fn minty_gap_affine(op: &Operator, set: &FeasibleSet, x: &DVector<f64>, tol: f64) -> Result<GapValue> {
    let OperatorKind::Affine { matrix, offset } = op.kind() else {
        return Err(Error::NotAffine);
    };
    check_dim(set.dim(), op.dim())?;
    check_dim(set.dim(), x.len())?;
    let min_eig = op.affine_monotonicity()?;
    if min_eig < -1e-10 * (1.0 + spectral_norm(matrix)) {
        return Err(Error::NotMonotone(min_eig));
    }
    let inner = MintyInner {
        sym: (matrix + matrix.transpose()) * 0.5,
        linear: matrix.tr_mul(x) - offset,
    };
    let n = set.dim();
    let cons = Constraints::for_set(set, n);
    let opts = BarrierOptions { gap_tol: tol, gap_floor: tol, max_newton: 5000 };
    let out = barrier::minimize(&inner, &cons, set.interior_point(), opts, &|_| true);
    let at = |y: &DVector<f64>| (matrix * y + offset).dot(&(x - y));
    let mut best = GapValue { value: at(&out.z), maximizer: out.z };
    if set.violation(x)? <= POINT_TOL {
        let own = at(x);
        if own > best.value {
            best = GapValue { value: own, maximizer: x.clone() };
        }
    }
    Ok(best)
}

/// Finite cut set `B = {y_0, ..., y_k}` with cached `G(y_i)` and
/// `<G(y_i), y_i>`.
#[derive(Clone, Debug, Default)]
pub struct CutPool {
    cuts: Vec<DVector<f64>>,
    values: Vec<DVector<f64>>,
    offsets: Vec<f64>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[DVector<f64>] {
        &self.cuts
    }

    pub fn operator_values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Adds `y` (projected onto `set` to remove rounding drift) and returns
    /// its index, or the index of an existing cut within [`DUPLICATE_TOL`].
    pub fn add_cut(&mut self, y: &DVector<f64>, op: &Operator, set: &FeasibleSet) -> Result<usize> {
        check_dim(set.dim(), op.dim())?;
        require_member(set, y)?;
        if let Some(first) = self.cuts.first() {
            check_dim(first.len(), y.len())?;
        }
        let y = set.project(y)?;
        if let Some(i) = self.cuts.iter().position(|c| (c - &y).norm() <= DUPLICATE_TOL) {
            return Ok(i);
        }
        let g = op.eval_unchecked(&y);
        self.offsets.push(g.dot(&y));
        self.values.push(g);
        self.cuts.push(y);
        Ok(self.cuts.len() - 1)
    }

    /// `max_i <G(y_i), x - y_i>` and the smallest attaining index.
    pub fn value(&self, x: &DVector<f64>) -> Result<(f64, usize)> {
        let first = self.values.first().ok_or(Error::EmptyPool)?;
        check_dim(first.len(), x.len())?;
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, (g, c)) in self.values.iter().zip(&self.offsets).enumerate() {
            let v = g.dot(x) - c;
            if v > best.0 {
                best = (v, i);
            }
        }
        Ok(best)
    }

    /// `G(y_i)` of the active cut, a subgradient of the pool gap at `x`.
    pub fn subgradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, i) = self.value(x)?;
        Ok(self.values[i].clone())
    }

    /// Cut normals as rows and their offsets.
    pub(crate) fn rows(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.values.first().map_or(0, |g| g.len());
        let rows = DMatrix::from_fn(self.values.len(), n, |i, j| self.values[i][j]);
        (rows, DVector::from_column_slice(&self.offsets))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionLabel {
    /// `psi_S <= eps`.
    StampacchiaFeasible,
    /// `psi_S > eps` but the Minty oracle value is `<= eps`.
    MintyFeasibleOnly,
    Infeasible,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::StampacchiaFeasible => "S_feasible",
            Self::MintyFeasibleOnly => "M_feasible_only",
            Self::Infeasible => "infeasible",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionPoint {
    pub x1: f64,
    pub x2: f64,
    pub psi_s: f64,
    pub psi_m: f64,
    pub label: RegionLabel,
}

/// Side length of the dense `y`-grid used as Minty oracle for non-affine
/// operators (10^4 points in total).
const MINTY_GRID_SIDE: usize = 100;

/// Labels a `grid x grid` lattice over the bounding box of a planar set.
///
/// For affine operators the Minty value is exact up to 1e-9; otherwise it is
/// the maximum over a 100 x 100 lattice of `y`, a lower bound of the true gap.
pub fn classify_epsilon_region(
    op: &Operator,
    set: &FeasibleSet,
    eps: f64,
    grid: usize,
) -> Result<Vec<RegionPoint>> {
    if set.dim() != 2 {
        return Err(Error::InvalidSet(format!("region classification needs a planar set, got dim {}", set.dim())));
    }
    check_dim(2, op.dim())?;
    if grid < 2 {
        return Err(Error::Config("region grid needs at least 2 points per side".into()));
    }
    let (lo, hi) = set.bounding_box();
    let lattice = |k: usize, side: usize, axis: usize| lo[axis] + (hi[axis] - lo[axis]) * k as f64 / (side - 1) as f64;

    let oracle_pool = if op.is_affine() {
        None
    } else {
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for a in 0..MINTY_GRID_SIDE {
            for b in 0..MINTY_GRID_SIDE {
                let y = DVector::from_column_slice(&[lattice(a, MINTY_GRID_SIDE, 0), lattice(b, MINTY_GRID_SIDE, 1)]);
                if set.violation(&y)? <= 1e-12 {
                    let g = op.eval_unchecked(&y);
                    offsets.push(g.dot(&y));
                    normals.push(g);
                }
            }
        }
        Some((normals, offsets))
    };

    let mut out = Vec::with_capacity(grid * grid);
    for a in 0..grid {
        for b in 0..grid {
            let x = DVector::from_column_slice(&[lattice(a, grid, 0), lattice(b, grid, 1)]);
            if set.violation(&x)? > 1e-12 {
                continue;
            }
            let psi_s = stampacchia_gap(op, set, &x)?.value;
            let psi_m = match &oracle_pool {
                None => minty_gap_affine(op, set, &x, 1e-9)?.value,
                Some((normals, offsets)) => normals
                    .iter()
                    .zip(offsets)
                    .map(|(g, c)| g.dot(&x) - c)
                    .fold(0.0, f64::max),
            };
            let label = if psi_s <= eps {
                RegionLabel::StampacchiaFeasible
            } else if psi_m <= eps {
                RegionLabel::MintyFeasibleOnly
            } else {
                RegionLabel::Infeasible
            };
            out.push(RegionPoint { x1: x[0], x2: x[1], psi_s, psi_m, label });
        }
    }
    Ok(out)
}

pub fn write_region_csv<W: Write>(points: &[RegionPoint], mut out: W) -> Result<()> {
    writeln!(out, "x1,x2,psi_S,psi_M_oracle,label")?;
    for p in points {
        writeln!(out, "{},{},{:.12e},{:.12e},{}", p.x1, p.x2, p.psi_s, p.psi_m, p.label.as_str())?;
    }
    Ok(())
}
