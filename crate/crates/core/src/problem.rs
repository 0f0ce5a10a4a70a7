//! Operators `G`, objectives `f` and the problem instance tying them to a set.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::geometry::FeasibleSet;

/// Smallest argument fed to `t^sigma` in the Cournot price function.
const PRICE_FLOOR: f64 = 1e-12;

pub type VectorFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
pub type ScalarFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;

/// Network Cournot market: `firms` firms choose production `y_ij` and sales
/// `s_ij` at `locations` locations, facing inverse demand
/// `p_j(t) = a_j - b_j t^sigma`.
#[derive(Clone, Debug, PartialEq)]
pub struct CournotModel {
    pub firms: usize,
    pub locations: usize,
    pub demand_intercept: Vec<f64>,
    pub demand_slope: Vec<f64>,
    pub sigma: f64,
    /// Unit production cost, row-major `firms x locations`.
    pub cost: Vec<f64>,
}

impl CournotModel {
    pub fn new(
        firms: usize,
        locations: usize,
        demand_intercept: Vec<f64>,
        demand_slope: Vec<f64>,
        sigma: f64,
        cost: Vec<f64>,
    ) -> Result<Self> {
        if firms == 0 || locations == 0 {
            return Err(Error::InvalidProblem("cournot market needs firms and locations".into()));
        }
        check_dim(locations, demand_intercept.len())?;
        check_dim(locations, demand_slope.len())?;
        check_dim(firms * locations, cost.len())?;
        if demand_slope.iter().any(|b| *b <= 0.0) || !(sigma > 0.0) {
            return Err(Error::InvalidProblem("demand slope and exponent must be positive".into()));
        }
        Ok(Self { firms, locations, demand_intercept, demand_slope, sigma, cost })
    }

    pub fn dim(&self) -> usize {
        2 * self.firms * self.locations
    }

    fn production(&self, x: &DVector<f64>, firm: usize, loc: usize) -> f64 {
        x[2 * self.locations * firm + loc]
    }

    fn sales_index(&self, firm: usize, loc: usize) -> usize {
        2 * self.locations * firm + self.locations + loc
    }

    fn total_sales(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..self.locations)
            .map(|j| (0..self.firms).map(|i| x[self.sales_index(i, j)]).sum::<f64>().max(0.0))
            .collect()
    }

    fn price(&self, loc: usize, total: f64) -> f64 {
        self.demand_intercept[loc] - self.demand_slope[loc] * total.max(PRICE_FLOOR).powf(self.sigma)
    }

    fn price_slope(&self, loc: usize, total: f64) -> f64 {
        -self.demand_slope[loc] * self.sigma * total.max(PRICE_FLOOR).powf(self.sigma - 1.0)
    }

    /// Profit `g_i` of one firm.
    pub fn profit(&self, x: &DVector<f64>, firm: usize) -> f64 {
        let totals = self.total_sales(x);
        (0..self.locations)
            .map(|j| {
                x[self.sales_index(firm, j)] * self.price(j, totals[j])
                    - self.cost[firm * self.locations + j] * self.production(x, firm, j)
            })
            .sum()
    }

    /// Social welfare, the sum of all profits.
    pub fn welfare(&self, x: &DVector<f64>) -> f64 {
        let totals = self.total_sales(x);
        let revenue: f64 = (0..self.locations)
            .map(|j| if totals[j] > 0.0 { totals[j] * self.price(j, totals[j]) } else { 0.0 })
            .sum();
        let costs: f64 = (0..self.firms)
            .flat_map(|i| (0..self.locations).map(move |j| (i, j)))
            .map(|(i, j)| self.cost[i * self.locations + j] * self.production(x, i, j))
            .sum();
        revenue - costs
    }
}

#[derive(Clone)]
pub enum OperatorKind {
    /// `G(x) = M x + b`.
    Affine { matrix: DMatrix<f64>, offset: DVector<f64> },
    /// `G(x) = (M x_h + b + alpha .* exp(beta .* x_h), 0)` where `x_h` holds the
    /// leading `n - tail` coordinates and the trailing `tail` entries are zero.
    LinearExp {
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
        alpha: DVector<f64>,
        beta: DVector<f64>,
        tail: usize,
    },
    /// Blockwise negated profit gradients of a Cournot market.
    Cournot(Arc<CournotModel>),
    Callable { dim: usize, eval: Arc<VectorFn> },
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Affine { matrix, .. } => write!(f, "Affine({}x{})", matrix.nrows(), matrix.ncols()),
            Self::LinearExp { matrix, tail, .. } => {
                write!(f, "LinearExp(block {}, tail {tail})", matrix.nrows())
            }
            Self::Cournot(m) => write!(f, "Cournot({} firms, {} locations)", m.firms, m.locations),
            Self::Callable { dim, .. } => write!(f, "Callable({dim})"),
        }
    }
}

/// A monotone operator with an optional known Lipschitz constant.
#[derive(Clone, Debug)]
pub struct Operator {
    kind: OperatorKind,
    dim: usize,
    lipschitz: Option<f64>,
}

impl Operator {
    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidProblem("affine operator matrix must be square".into()));
        }
        check_dim(matrix.nrows(), offset.len())?;
        let dim = offset.len();
        Ok(Self { kind: OperatorKind::Affine { matrix, offset }, dim, lipschitz: None })
    }

    pub fn linear_exp(
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
        alpha: DVector<f64>,
        beta: DVector<f64>,
        tail: usize,
    ) -> Result<Self> {
        let head = offset.len();
        if matrix.nrows() != head || matrix.ncols() != head {
            return Err(Error::InvalidProblem("linear block must be square of the head size".into()));
        }
        check_dim(head, alpha.len())?;
        check_dim(head, beta.len())?;
        if alpha.iter().chain(beta.iter()).any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidProblem("exponential coefficients must be positive".into()));
        }
        Ok(Self {
            kind: OperatorKind::LinearExp { matrix, offset, alpha, beta, tail },
            dim: head + tail,
            lipschitz: None,
        })
    }

    pub fn cournot(model: Arc<CournotModel>) -> Self {
        let dim = model.dim();
        Self { kind: OperatorKind::Cournot(model), dim, lipschitz: None }
    }

    pub fn callable(dim: usize, eval: Arc<VectorFn>) -> Self {
        Self { kind: OperatorKind::Callable { dim, eval }, dim, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, constant: f64) -> Self {
        self.lipschitz = Some(constant);
        self
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.kind, OperatorKind::Affine { .. })
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            OperatorKind::Affine { matrix, offset } => matrix * x + offset,
            OperatorKind::LinearExp { matrix, offset, alpha, beta, tail } => {
                let head = offset.len();
                let xh = x.rows(0, head);
                let mut out = DVector::zeros(head + tail);
                let lin = matrix * xh + offset;
                for i in 0..head {
                    out[i] = lin[i] + alpha[i] * (beta[i] * xh[i]).exp();
                }
                out
            }
            OperatorKind::Cournot(model) => {
                let totals = model.total_sales(x);
                let mut out = DVector::zeros(model.dim());
                for i in 0..model.firms {
                    for j in 0..model.locations {
                        out[2 * model.locations * i + j] = model.cost[i * model.locations + j];
                        let s = model.sales_index(i, j);
                        out[s] = -model.price(j, totals[j]) - x[s] * model.price_slope(j, totals[j]);
                    }
                }
                out
            }
            OperatorKind::Callable { eval, .. } => eval(x),
        }
    }

    /// Smallest eigenvalue of the symmetric part of an affine operator.
    pub fn affine_monotonicity(&self) -> Result<f64> {
        match &self.kind {
            OperatorKind::Affine { matrix, .. } => {
                let sym = (matrix + matrix.transpose()) * 0.5;
                Ok(SymmetricEigen::new(sym).eigenvalues.min())
            }
            _ => Err(Error::NotAffine),
        }
    }
}

/// Estimates a Lipschitz constant of `op` on `set`. Affine operators get the
/// exact spectral norm of their matrix; otherwise the largest difference
/// quotient over `samples` random pairs is inflated by a factor 1.5.
pub fn estimate_lipschitz<R: Rng + ?Sized>(
    op: &Operator,
    set: &FeasibleSet,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    check_dim(op.dim(), set.dim())?;
    if let OperatorKind::Affine { matrix, .. } = op.kind() {
        return Ok(spectral_norm(matrix));
    }
    Ok(1.5 * max_difference_quotient(op, set, samples, rng))
}

pub(crate) fn max_difference_quotient<R: Rng + ?Sized>(
    op: &Operator,
    set: &FeasibleSet,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let mut best: f64 = 0.0;
    for _ in 0..samples.max(2) {
        let x = set.sample_uniform(rng);
        let y = set.sample_uniform(rng);
        let dist = (&x - &y).norm();
        if dist > 0.0 {
            let diff = op.eval_unchecked(&x) - op.eval_unchecked(&y);
            best = best.max(diff.norm() / dist);
        }
    }
    best
}

pub fn spectral_norm(matrix: &DMatrix<f64>) -> f64 {
    if matrix.is_empty() {
        return 0.0;
    }
    matrix.clone().singular_values().max()
}

/// Smallest value of `<G(x) - G(y), x - y>` over random pairs; nonnegative for
/// monotone operators up to rounding.
pub fn monotonicity_residual<R: Rng + ?Sized>(
    op: &Operator,
    set: &FeasibleSet,
    pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    check_dim(op.dim(), set.dim())?;
    let mut worst = f64::INFINITY;
    for _ in 0..pairs {
        let x = set.sample_uniform(rng);
        let y = set.sample_uniform(rng);
        let d = &x - &y;
        worst = worst.min((op.eval_unchecked(&x) - op.eval_unchecked(&y)).dot(&d));
    }
    Ok(worst)
}

#[derive(Clone)]
pub enum ObjectiveKind {
    /// `<x - center, Q (x - center)>` with symmetric positive definite `Q`.
    Quadratic { q: DMatrix<f64>, center: DVector<f64> },
    /// Negated social welfare of a Cournot market.
    NegWelfare(Arc<CournotModel>),
    /// Convex black box with a subgradient oracle.
    Callable { dim: usize, value: Arc<ScalarFn>, subgradient: Arc<VectorFn> },
}

impl fmt::Debug for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic { q, .. } => write!(f, "Quadratic({})", q.nrows()),
            Self::NegWelfare(_) => write!(f, "NegWelfare"),
            Self::Callable { dim, .. } => write!(f, "Callable({dim})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Objective {
    kind: ObjectiveKind,
    dim: usize,
}

impl Objective {
    pub fn quadratic(q: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        let n = center.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: q.nrows() });
        }
        let asym = (&q - q.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + q.abs().max()) {
            return Err(Error::InvalidProblem(format!("Q is not symmetric (defect {asym:.3e})")));
        }
        let min_eig = SymmetricEigen::new(q.clone()).eigenvalues.min();
        if !(min_eig > 0.0) {
            return Err(Error::InvalidProblem(format!("Q is not positive definite ({min_eig:.3e})")));
        }
        Ok(Self { kind: ObjectiveKind::Quadratic { q, center }, dim: n })
    }

    pub fn neg_welfare(model: Arc<CournotModel>) -> Self {
        let dim = model.dim();
        Self { kind: ObjectiveKind::NegWelfare(model), dim }
    }

    pub fn callable(dim: usize, value: Arc<ScalarFn>, subgradient: Arc<VectorFn>) -> Self {
        Self { kind: ObjectiveKind::Callable { dim, value, subgradient }, dim }
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            ObjectiveKind::Quadratic { q, center } => {
                let d = x - center;
                d.dot(&(q * &d))
            }
            ObjectiveKind::NegWelfare(model) => -model.welfare(x),
            ObjectiveKind::Callable { value, .. } => value(x),
        }
    }

    pub fn subgradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.subgradient_unchecked(x))
    }

    pub(crate) fn subgradient_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            ObjectiveKind::Quadratic { q, center } => (q * (x - center)) * 2.0,
            ObjectiveKind::NegWelfare(model) => {
                let totals = model.total_sales(x);
                let mut g = DVector::zeros(model.dim());
                for j in 0..model.locations {
                    // d/dS [b S^(sigma+1) - a S]
                    let marginal = (model.sigma + 1.0)
                        * model.demand_slope[j]
                        * totals[j].max(PRICE_FLOOR).powf(model.sigma)
                        - model.demand_intercept[j];
                    for i in 0..model.firms {
                        g[2 * model.locations * i + j] = model.cost[i * model.locations + j];
                        g[model.sales_index(i, j)] = marginal;
                    }
                }
                g
            }
            ObjectiveKind::Callable { subgradient, .. } => subgradient(x),
        }
    }

    /// Hessian for smooth kinds; `None` for black boxes.
    pub fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        match &self.kind {
            ObjectiveKind::Quadratic { q, .. } => Some(q * 2.0),
            ObjectiveKind::NegWelfare(model) => {
                let totals = model.total_sales(x);
                let mut h = DMatrix::zeros(model.dim(), model.dim());
                for j in 0..model.locations {
                    let curv = (model.sigma + 1.0)
                        * model.sigma
                        * model.demand_slope[j]
                        * totals[j].max(PRICE_FLOOR).powf(model.sigma - 1.0);
                    for a in 0..model.firms {
                        for b in 0..model.firms {
                            h[(model.sales_index(a, j), model.sales_index(b, j))] = curv;
                        }
                    }
                }
                Some(h)
            }
            ObjectiveKind::Callable { .. } => None,
        }
    }
}

/// Bilevel instance: minimize `objective` over `set` subject to the
/// epsilon-relaxed Minty condition for `operator`.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub operator: Operator,
    pub objective: Objective,
    pub set: FeasibleSet,
    pub epsilon: f64,
}

impl ProblemInstance {
    pub fn new(operator: Operator, objective: Objective, set: FeasibleSet, epsilon: f64) -> Result<Self> {
        check_dim(set.dim(), operator.dim())?;
        check_dim(set.dim(), objective.dim())?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidProblem(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { operator, objective, set, epsilon })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn affine_identity() {
        let op = Operator::affine(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert_eq!(op.eval(&v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
        assert!(op.eval(&v(&[1.0])).is_err());
    }

    #[test]
    fn linear_exp_formula() {
        let op = Operator::linear_exp(
            DMatrix::from_element(1, 1, 2.0),
            v(&[0.0]),
            v(&[1.0]),
            v(&[1.0]),
            1,
        )
        .unwrap();
        assert_eq!(op.eval(&v(&[0.0, 5.0])).unwrap(), v(&[1.0, 0.0]));
        assert!(Operator::linear_exp(DMatrix::identity(1, 1), v(&[0.0]), v(&[0.0]), v(&[1.0]), 0).is_err());
    }

    fn monopoly(sigma: f64) -> Arc<CournotModel> {
        Arc::new(CournotModel::new(1, 1, vec![1.0], vec![0.01], sigma, vec![0.5]).unwrap())
    }

    #[test]
    fn cournot_gradient_sign_convention() {
        let op = Operator::cournot(monopoly(1.0));
        let g = op.eval(&v(&[1.0, 1.0])).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-12);
        assert!((g[1] + 0.98).abs() < 1e-12);
    }

    #[test]
    fn cournot_interior_first_order_point_zeroes_sales_block() {
        // two firms, one location, sigma = 1: symmetric equilibrium s = (a - c)/(3b)
        let model = Arc::new(CournotModel::new(2, 1, vec![1.0], vec![0.01], 1.0, vec![0.4, 0.4]).unwrap());
        let s = 0.6 / 0.03;
        let op = Operator::cournot(model);
        let g = op.eval(&v(&[s, s, s, s])).unwrap();
        // marginal revenue equals marginal cost: -(p + s p') = -c
        assert!((g[1] + 0.4).abs() < 1e-9 && (g[3] + 0.4).abs() < 1e-9, "{g}");
        assert!((g[1] + g[0]).abs() < 1e-9);
    }

    #[test]
    fn objective_examples() {
        let obj = Objective::quadratic(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert_eq!(obj.value(&v(&[3.0, 4.0])).unwrap(), 25.0);
        assert_eq!(obj.subgradient(&v(&[3.0, 4.0])).unwrap(), v(&[6.0, 8.0]));
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let u = v(&[0.3, -0.2]);
        let obj = Objective::quadratic(q, u.clone()).unwrap();
        assert_eq!(obj.value(&u).unwrap(), 0.0);
        assert_eq!(obj.subgradient(&u).unwrap(), DVector::zeros(2));
        let welfare = Objective::neg_welfare(monopoly(1.05));
        assert_eq!(welfare.value(&v(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_validation() {
        let nonsym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Objective::quadratic(nonsym, DVector::zeros(2)).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(Objective::quadratic(indefinite, DVector::zeros(2)).is_err());
    }

    fn central_difference(obj: &Objective, x: &DVector<f64>) -> DVector<f64> {
        let h = 1e-6;
        DVector::from_fn(x.len(), |i, _| {
            let mut p = x.clone();
            let mut m = x.clone();
            p[i] += h;
            m[i] -= h;
            (obj.value(&p).unwrap() - obj.value(&m).unwrap()) / (2.0 * h)
        })
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = Arc::new(
            CournotModel::new(2, 3, vec![1.0; 3], vec![0.01; 3], 1.05, vec![0.2, 0.5, 0.9, 0.3, 0.6, 0.1])
                .unwrap(),
        );
        let a = DMatrix::from_fn(4, 4, |_, _| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng));
        let q = a.transpose() * &a + DMatrix::identity(4, 4);
        let objectives = [
            (Objective::quadratic(q, v(&[0.1, 0.2, 0.3, 0.4])).unwrap(), FeasibleSet::unit_cube(4)),
            (
                Objective::neg_welfare(model),
                FeasibleSet::product(vec![
                    FeasibleSet::cournot_firm(vec![5.0; 3]).unwrap(),
                    FeasibleSet::cournot_firm(vec![5.0; 3]).unwrap(),
                ])
                .unwrap(),
            ),
        ];
        for (obj, set) in &objectives {
            for _ in 0..20 {
                let x = set.sample_uniform(&mut rng);
                let g = obj.subgradient(&x).unwrap();
                let fd = central_difference(obj, &x);
                assert!((&g - &fd).norm() <= 1e-4 * (1.0 + g.norm()), "{g} vs {fd}");
            }
        }
    }

    #[test]
    fn welfare_hessian_matches_gradient_differences() {
        let model = Arc::new(CournotModel::new(2, 2, vec![1.0; 2], vec![0.01; 2], 1.05, vec![0.2; 4]).unwrap());
        let obj = Objective::neg_welfare(model);
        let x = v(&[1.0, 2.0, 1.5, 1.5, 0.5, 0.5, 0.7, 0.3]);
        let h = obj.hessian(&x).unwrap();
        let step = 1e-6;
        for i in 0..x.len() {
            let mut p = x.clone();
            let mut m = x.clone();
            p[i] += step;
            m[i] -= step;
            let col = (obj.subgradient(&p).unwrap() - obj.subgradient(&m).unwrap()) / (2.0 * step);
            assert!((col - h.column(i)).norm() < 1e-6);
        }
    }

    #[test]
    fn lipschitz_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cube = FeasibleSet::unit_cube(2);
        let diag = Operator::affine(DMatrix::from_diagonal(&v(&[3.0, 1.0])), DVector::zeros(2)).unwrap();
        assert!((estimate_lipschitz(&diag, &cube, 10, &mut rng).unwrap() - 3.0).abs() < 1e-12);
        let zero = Operator::affine(DMatrix::zeros(2, 2), DVector::zeros(2)).unwrap();
        assert_eq!(estimate_lipschitz(&zero, &cube, 10, &mut rng).unwrap(), 0.0);

        let op = Operator::linear_exp(
            DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 1.0]),
            v(&[0.0, 0.0]),
            v(&[1.0, 0.5]),
            v(&[1.0, 2.0]),
            1,
        )
        .unwrap();
        let cube3 = FeasibleSet::unit_cube(3);
        let small = estimate_lipschitz(&op, &cube3, 50, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let large = estimate_lipschitz(&op, &cube3, 500, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert!(large >= small && small > 0.0);
    }

    #[test]
    fn sampled_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let op = Operator::linear_exp(
            DMatrix::from_row_slice(2, 2, &[1.0, 3.0, -3.0, 1.0]),
            v(&[0.5, -0.5]),
            v(&[1.0, 1.0]),
            v(&[1.0, 1.0]),
            2,
        )
        .unwrap();
        assert!(monotonicity_residual(&op, &FeasibleSet::unit_cube(4), 1000, &mut rng).unwrap() >= -1e-9);
        let skew = Operator::affine(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]), DVector::zeros(2)).unwrap();
        assert!(skew.affine_monotonicity().unwrap().abs() < 1e-12);
    }

    #[test]
    fn instance_validation() {
        let op = Operator::affine(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let obj = Objective::quadratic(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert!(ProblemInstance::new(op.clone(), obj.clone(), FeasibleSet::unit_cube(2), 0.0).is_err());
        assert!(ProblemInstance::new(op.clone(), obj.clone(), FeasibleSet::unit_cube(3), 0.1).is_err());
        assert!(ProblemInstance::new(op, obj, FeasibleSet::unit_cube(2), 0.1).is_ok());
    }
}
