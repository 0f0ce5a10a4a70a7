//! Convex compact feasible sets and their oracles.
//!
//! Every set exposes Euclidean projection, linear maximization, an exact (or
//! upper-bound) diameter, a tolerance-aware membership test and a sampler.
//! Sets are immutable after construction.

use nalgebra::DVector;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SetKind {
    /// Axis-aligned box `lower <= x <= upper`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x >= 0, sum x = scale}`.
    Simplex { dim: usize, scale: f64 },
    /// Decision set of one Cournot firm over `J` locations, laid out as
    /// `(y_1..y_J, s_1..s_J)`: production `0 <= y_j <= capacity_j`, sales
    /// `s_j >= 0`, and total sales equal to total production.
    CournotFirm { capacity: Vec<f64> },
    /// Cartesian product, coordinates concatenated in factor order.
    Product(Vec<FeasibleSet>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    kind: SetKind,
    dim: usize,
}

impl FeasibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidSet("box must have positive dimension".into()));
        }
        check_dim(lower.len(), upper.len())?;
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidSet(format!("box bounds [{l}, {u}] are invalid")));
            }
        }
        let dim = lower.len();
        Ok(Self { kind: SetKind::Box { lower, upper }, dim })
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self::boxed(vec![0.0; dim], vec![1.0; dim]).expect("unit cube needs dim > 0")
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidSet("ball must have positive dimension".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!("ball radius {radius} must be positive")));
        }
        let dim = center.len();
        Ok(Self { kind: SetKind::Ball { center, radius }, dim })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::ball(vec![0.0; dim], 1.0).expect("unit ball needs dim > 0")
    }

    pub fn simplex(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet("simplex must have positive dimension".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidSet(format!("simplex scale {scale} must be positive")));
        }
        Ok(Self { kind: SetKind::Simplex { dim, scale }, dim })
    }

    pub fn unit_simplex(dim: usize) -> Self {
        Self::simplex(dim, 1.0).expect("unit simplex needs dim > 0")
    }

    pub fn cournot_firm(capacity: Vec<f64>) -> Result<Self> {
        if capacity.is_empty() {
            return Err(Error::InvalidSet("cournot firm needs at least one location".into()));
        }
        if let Some(b) = capacity.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidSet(format!("capacity {b} must be positive")));
        }
        let dim = 2 * capacity.len();
        Ok(Self { kind: SetKind::CournotFirm { capacity }, dim })
    }

    pub fn product(factors: Vec<FeasibleSet>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSet("product of zero sets".into()));
        }
        let dim = factors.iter().map(|f| f.dim).sum();
        Ok(Self { kind: SetKind::Product(factors), dim })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        let mut out = x.clone();
        self.project_slice(x.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    fn project_slice(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                for i in 0..x.len() {
                    out[i] = x[i].clamp(lower[i], upper[i]);
                }
            }
            SetKind::Ball { center, radius } => {
                let dist = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                if dist <= *radius {
                    out.copy_from_slice(x);
                } else {
                    let s = radius / dist;
                    for i in 0..x.len() {
                        out[i] = center[i] + s * (x[i] - center[i]);
                    }
                }
            }
            SetKind::Simplex { scale, .. } => project_simplex(x, *scale, out),
            SetKind::CournotFirm { capacity } => project_cournot(x, capacity, out),
            SetKind::Product(factors) => {
                let mut off = 0;
                for f in factors {
                    f.project_slice(&x[off..off + f.dim], &mut out[off..off + f.dim]);
                    off += f.dim;
                }
            }
        }
    }

    /// Maximizes `<c, y>` over the set, returning the maximizer and the value.
    pub fn linear_argmax(&self, c: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        check_dim(self.dim, c.len())?;
        let mut y = DVector::zeros(self.dim);
        self.argmax_slice(c.as_slice(), y.as_mut_slice());
        let value = c.dot(&y);
        Ok((y, value))
    }

    fn argmax_slice(&self, c: &[f64], out: &mut [f64]) {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                for i in 0..c.len() {
                    out[i] = if c[i] > 0.0 { upper[i] } else { lower[i] };
                }
            }
            SetKind::Ball { center, radius } => {
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                for i in 0..c.len() {
                    out[i] = if norm > 0.0 { center[i] + radius * c[i] / norm } else { center[i] };
                }
            }
            SetKind::Simplex { scale, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[argmax_first(c)] = *scale;
            }
            SetKind::CournotFirm { capacity } => {
                let locations = capacity.len();
                let (prod, sales) = c.split_at(locations);
                let best = argmax_first(sales);
                let mut total = 0.0;
                for j in 0..locations {
                    if prod[j] + sales[best] > 0.0 {
                        out[j] = capacity[j];
                        total += capacity[j];
                    } else {
                        out[j] = 0.0;
                    }
                }
                for j in 0..locations {
                    out[locations + j] = if j == best { total } else { 0.0 };
                }
            }
            SetKind::Product(factors) => {
                let mut off = 0;
                for f in factors {
                    f.argmax_slice(&c[off..off + f.dim], &mut out[off..off + f.dim]);
                    off += f.dim;
                }
            }
        }
    }

    /// Euclidean diameter. Exact for boxes, balls, simplices and products of
    /// those; for Cournot firm sets it is the diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            SetKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            SetKind::Ball { radius, .. } => 2.0 * radius,
            SetKind::Simplex { dim, scale } => {
                if *dim < 2 {
                    0.0
                } else {
                    scale * std::f64::consts::SQRT_2
                }
            }
            SetKind::CournotFirm { .. } => {
                let (lo, hi) = self.bounding_box();
                lo.iter().zip(&hi).map(|(l, u)| (u - l) * (u - l)).sum::<f64>().sqrt()
            }
            SetKind::Product(factors) => {
                factors.iter().map(|f| f.diameter().powi(2)).sum::<f64>().sqrt()
            }
        }
    }

    /// Componentwise bounds containing the set.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            SetKind::Box { lower, upper } => (lower.clone(), upper.clone()),
            SetKind::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            SetKind::Simplex { dim, scale } => (vec![0.0; *dim], vec![*scale; *dim]),
            SetKind::CournotFirm { capacity } => {
                let total: f64 = capacity.iter().sum();
                let mut hi = capacity.clone();
                hi.extend(std::iter::repeat_n(total, capacity.len()));
                (vec![0.0; 2 * capacity.len()], hi)
            }
            SetKind::Product(factors) => {
                let mut lo = Vec::with_capacity(self.dim);
                let mut hi = Vec::with_capacity(self.dim);
                for f in factors {
                    let (l, h) = f.bounding_box();
                    lo.extend(l);
                    hi.extend(h);
                }
                (lo, hi)
            }
        }
    }

    /// Largest violation of any defining constraint (0 inside the set).
    pub fn violation(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.violation_slice(x.as_slice()))
    }

    fn violation_slice(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SetKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
                .fold(0.0, f64::max),
            SetKind::Ball { center, radius } => {
                let dist = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                (dist - radius).max(0.0)
            }
            SetKind::Simplex { scale, .. } => {
                let neg = x.iter().map(|v| -v).fold(0.0, f64::max);
                neg.max((x.iter().sum::<f64>() - scale).abs())
            }
            SetKind::CournotFirm { capacity } => {
                let locations = capacity.len();
                let (prod, sales) = x.split_at(locations);
                let mut worst: f64 = 0.0;
                for j in 0..locations {
                    worst = worst.max(-prod[j]).max(prod[j] - capacity[j]).max(-sales[j]);
                }
                let balance = sales.iter().sum::<f64>() - prod.iter().sum::<f64>();
                worst.max(balance.abs())
            }
            SetKind::Product(factors) => {
                let mut off = 0;
                let mut worst: f64 = 0.0;
                for f in factors {
                    worst = worst.max(f.violation_slice(&x[off..off + f.dim]));
                    off += f.dim;
                }
                worst
            }
        }
    }

    /// True iff every defining constraint holds within `tol`.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.violation(x)? <= tol)
    }

    /// Draws a point of the set: uniform on boxes and balls, Dirichlet(1,...,1)
    /// on simplices, and componentwise-then-projected on Cournot firm sets.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.sample_slice(rng, out.as_mut_slice());
        out
    }

    fn sample_slice<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                for i in 0..out.len() {
                    let u: f64 = rng.random();
                    out[i] = lower[i] + u * (upper[i] - lower[i]);
                }
            }
            SetKind::Ball { center, radius } => {
                let n = out.len();
                let mut norm = 0.0;
                while norm == 0.0 {
                    for v in out.iter_mut() {
                        *v = StandardNormal.sample(rng);
                    }
                    norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                }
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n as f64);
                for i in 0..n {
                    out[i] = center[i] + r * out[i] / norm;
                }
            }
            SetKind::Simplex { scale, .. } => {
                for v in out.iter_mut() {
                    *v = Exp1.sample(rng);
                }
                let total: f64 = out.iter().sum();
                out.iter_mut().for_each(|v| *v *= scale / total);
            }
            SetKind::CournotFirm { capacity } => {
                let locations = capacity.len();
                let total: f64 = capacity.iter().sum();
                let mut raw = vec![0.0; 2 * locations];
                for j in 0..locations {
                    let u: f64 = rng.random();
                    raw[j] = u * capacity[j];
                }
                for j in 0..locations {
                    let u: f64 = rng.random();
                    raw[locations + j] = u * total / locations as f64;
                }
                project_cournot(&raw, capacity, out);
            }
            SetKind::Product(factors) => {
                let mut off = 0;
                for f in factors {
                    f.sample_slice(rng, &mut out[off..off + f.dim]);
                    off += f.dim;
                }
            }
        }
    }

    /// A point in the relative interior of the set.
    pub fn interior_point(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.interior_slice(out.as_mut_slice());
        out
    }

    fn interior_slice(&self, out: &mut [f64]) {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                for i in 0..out.len() {
                    out[i] = 0.5 * (lower[i] + upper[i]);
                }
            }
            SetKind::Ball { center, .. } => out.copy_from_slice(center),
            SetKind::Simplex { dim, scale } => out.iter_mut().for_each(|v| *v = scale / *dim as f64),
            SetKind::CournotFirm { capacity } => {
                let locations = capacity.len();
                let half_total = 0.5 * capacity.iter().sum::<f64>();
                for j in 0..locations {
                    out[j] = 0.5 * capacity[j];
                    out[locations + j] = half_total / locations as f64;
                }
            }
            SetKind::Product(factors) => {
                let mut off = 0;
                for f in factors {
                    f.interior_slice(&mut out[off..off + f.dim]);
                    off += f.dim;
                }
            }
        }
    }
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Sort-and-threshold projection onto `{x >= 0, sum x = scale}`.
fn project_simplex(x: &[f64], scale: f64, out: &mut [f64]) {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - scale) / (j + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    for (o, v) in out.iter_mut().zip(x) {
        *o = (v - theta).max(0.0);
    }
}

/// Projection onto a Cournot firm set. With multiplier `nu` on the balance
/// constraint the minimizer is `y = clamp(y0 + nu, 0, B)`, `s = max(s0 - nu, 0)`;
/// the balance residual is piecewise linear and nonincreasing in `nu`, so the
/// root is located exactly between consecutive breakpoints.
fn project_cournot(x: &[f64], capacity: &[f64], out: &mut [f64]) {
    let locations = capacity.len();
    let (prod, sales) = x.split_at(locations);
    let residual = |nu: f64| -> f64 {
        let s: f64 = sales.iter().map(|s| (s - nu).max(0.0)).sum();
        let y: f64 = prod.iter().zip(capacity).map(|(y, b)| (y + nu).clamp(0.0, *b)).sum();
        s - y
    };

    let mut breaks: Vec<f64> = Vec::with_capacity(3 * locations);
    for j in 0..locations {
        breaks.push(sales[j]);
        breaks.push(-prod[j]);
        breaks.push(capacity[j] - prod[j]);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // residual > 0 to the left of every breakpoint and < 0 to the right
    let nu = {
        let first = breaks[0];
        let r_first = residual(first);
        if r_first <= 0.0 {
            // only sales are active left of the first breakpoint: slope -locations
            first + r_first / locations as f64
        } else {
            let mut lo = first;
            let mut r_lo = r_first;
            let mut found = None;
            for &b in &breaks[1..] {
                let r_b = residual(b);
                if r_b <= 0.0 {
                    found = Some(if r_lo == r_b { b } else { lo + (b - lo) * r_lo / (r_lo - r_b) });
                    break;
                }
                lo = b;
                r_lo = r_b;
            }
            // right of the last breakpoint the residual equals -sum(B) < 0
            found.unwrap_or(lo)
        }
    };

    for j in 0..locations {
        out[j] = (prod[j] + nu).clamp(0.0, capacity[j]);
        out[locations + j] = (sales[j] - nu).max(0.0);
    }
}
