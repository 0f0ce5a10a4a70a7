//! Global maximization of a scalar function on `[0, 1]`, used to place new
//! cuts along the segment from the current iterate to the Stampacchia
//! maximizer. The function need not be concave.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::problem::Operator;

const SEED_CELLS: usize = 33;
/// Jones' balance parameter for selecting potentially optimal cells.
const DIRECT_EPS: f64 = 1e-4;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearchBudget {
    pub max_evaluations: usize,
    pub refinement_tol: f64,
}

impl Default for LineSearchBudget {
    fn default() -> Self {
        Self { max_evaluations: 200, refinement_tol: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineMax {
    pub lambda: f64,
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    center: f64,
    width: f64,
    value: f64,
    /// Number of trisections that produced this cell; equal level means equal width.
    level: u32,
}

struct Tracker<F> {
    phi: F,
    evaluations: usize,
    best: (f64, f64),
}

impl<F: Fn(f64) -> f64> Tracker<F> {
    fn eval(&mut self, lambda: f64) -> f64 {
        let v = (self.phi)(lambda);
        self.evaluations += 1;
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if v > self.best.1 {
            self.best = (lambda, v);
        }
        v
    }
}

/// Maximizes `phi` over `[0, 1]`: both endpoints, a 33-cell uniform seed,
/// DIRECT trisection of potentially optimal cells, then golden-section
/// refinement around the incumbent. Deterministic for a fixed budget.
pub fn global_max_1d<F: Fn(f64) -> f64>(phi: F, budget: &LineSearchBudget) -> LineMax {
    let max_evals = budget.max_evaluations.max(3);
    let mut t = Tracker { phi, evaluations: 0, best: (0.0, f64::NEG_INFINITY) };
    t.eval(0.0);
    t.eval(1.0);

    let seeds = SEED_CELLS.min(max_evals - 2);
    let width = 1.0 / seeds as f64;
    let mut cells: Vec<Cell> = (0..seeds)
        .map(|i| {
            let center = (i as f64 + 0.5) * width;
            Cell { center, width, value: t.eval(center), level: 0 }
        })
        .collect();

    let reserve = (max_evals / 4).min(40);
    while t.evaluations + 2 <= max_evals.saturating_sub(reserve) {
        let selected = potentially_optimal(&cells, t.best.1);
        if selected.is_empty() {
            break;
        }
        let mut progressed = false;
        for idx in selected {
            if t.evaluations + 2 > max_evals.saturating_sub(reserve) {
                break;
            }
            let cell = cells[idx];
            let third = cell.width / 3.0;
            if third < budget.refinement_tol {
                continue;
            }
            let level = cell.level + 1;
            let left = Cell { center: cell.center - third, width: third, value: t.eval(cell.center - third), level };
            let right = Cell { center: cell.center + third, width: third, value: t.eval(cell.center + third), level };
            cells[idx].width = third;
            cells[idx].level = level;
            cells.push(left);
            cells.push(right);
            progressed = true;
        }
        if !progressed {
            break;
        }
    }

    // golden-section refinement inside the incumbent's neighbourhood
    let (center, _) = t.best;
    let radius = cells
        .iter()
        .filter(|c| (c.center - center).abs() <= 0.5 * c.width)
        .map(|c| c.width)
        .fold(width, f64::min);
    let (mut lo, mut hi) = ((center - radius).max(0.0), (center + radius).min(1.0));
    if t.evaluations + 2 <= max_evals && hi - lo > budget.refinement_tol {
        let mut a = hi - INV_PHI * (hi - lo);
        let mut b = lo + INV_PHI * (hi - lo);
        let mut fa = t.eval(a);
        let mut fb = t.eval(b);
        while hi - lo > budget.refinement_tol && t.evaluations < max_evals {
            if fa >= fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - INV_PHI * (hi - lo);
                fa = t.eval(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + INV_PHI * (hi - lo);
                fb = t.eval(b);
            }
        }
    }

    LineMax { lambda: t.best.0, value: t.best.1, evaluations: t.evaluations }
}

/// Indices of cells that maximize `value + K * width` for some `K >= 0`
/// while promising a nontrivial improvement over `best`.
fn potentially_optimal(cells: &[Cell], best: f64) -> Vec<usize> {
    // best cell per width class, largest width first
    let mut classes: Vec<(u32, usize)> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        match classes.iter_mut().find(|(lvl, _)| *lvl == c.level) {
            Some(entry) => {
                if c.value > cells[entry.1].value {
                    entry.1 = i;
                }
            }
            None => classes.push((c.level, i)),
        }
    }
    classes.sort_by_key(|(lvl, _)| *lvl);

    let threshold = best + DIRECT_EPS * best.abs();
    let mut out = Vec::new();
    for (k, &(_, j)) in classes.iter().enumerate() {
        let (wj, fj) = (cells[j].width, cells[j].value);
        let mut k_hi = f64::INFINITY;
        for &(_, i) in &classes[..k] {
            k_hi = k_hi.min((fj - cells[i].value) / (cells[i].width - wj));
        }
        let mut k_lo: f64 = 0.0;
        for &(_, i) in &classes[k + 1..] {
            k_lo = k_lo.max((cells[i].value - fj) / (wj - cells[i].width));
        }
        if k_lo <= k_hi && (k_hi.is_infinite() || fj + k_hi * wj >= threshold) {
            out.push(j);
        }
    }
    out
}

/// `phi(lambda) = lambda * <G(x + lambda (y_bar - x)), x - y_bar>`.
pub fn build_phi<'a>(
    op: &'a Operator,
    x: &'a DVector<f64>,
    y_bar: &'a DVector<f64>,
) -> Result<impl Fn(f64) -> f64 + 'a> {
    check_dim(op.dim(), x.len())?;
    check_dim(op.dim(), y_bar.len())?;
    let dir = y_bar - x;
    Ok(move |lambda: f64| {
        if lambda == 0.0 {
            return 0.0;
        }
        let z = x + &dir * lambda;
        -lambda * op.eval_unchecked(&z).dot(&dir)
    })
}
