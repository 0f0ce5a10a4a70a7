//! Planar eps-solution regions of `G_ab(x) = (a x1^2 + x2, b x2^2 - x1)` on
//! the unit square.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::{classify_epsilon_region, RegionPoint};
use crate::geometry::FeasibleSet;
use crate::problem::Operator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionOperator {
    /// `G_ab` with `a = b = 1`.
    Example21,
    Gab { a: f64, b: f64 },
}

impl RegionOperator {
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            RegionOperator::Example21 => (1.0, 1.0),
            RegionOperator::Gab { a, b } => (a, b),
        }
    }

    pub fn operator(self) -> Operator {
        let (a, b) = self.coefficients();
        Operator::callable(
            2,
            Arc::new(move |x: &DVector<f64>| DVector::from_column_slice(&[a * x[0] * x[0] + x[1], b * x[1] * x[1] - x[0]])),
        )
    }
}

/// Labels a `grid x grid` lattice of `[0, 1]^2`.
pub fn export_region(op: RegionOperator, eps: f64, grid: usize) -> Result<Vec<RegionPoint>> {
    if grid < 10 {
        return Err(Error::Config(format!("region grid must be at least 10, got {grid}")));
    }
    classify_epsilon_region(&op.operator(), &FeasibleSet::unit_cube(2), eps, grid)
}
