//! Random quadratic objectives over the solution set of a monotone
//! linear-plus-exponential operator, with a zero block of width `l` so the
//! solution set has dimension at least `l`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::problem::{estimate_lipschitz, spectral_norm, Objective, Operator, ProblemInstance};

/// Sample pairs used when calibrating the Lipschitz scale.
pub const LIPSCHITZ_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetShape {
    /// `[0, 1]^n`.
    Cube,
    /// Unit ball centred at the origin.
    Sphere,
    /// Unit probability simplex.
    Simplex,
}

impl SetShape {
    pub const ALL: [SetShape; 3] = [SetShape::Cube, SetShape::Sphere, SetShape::Simplex];

    pub fn set(self, n: usize) -> FeasibleSet {
        match self {
            SetShape::Cube => FeasibleSet::unit_cube(n),
            SetShape::Sphere => FeasibleSet::unit_ball(n),
            SetShape::Simplex => FeasibleSet::unit_simplex(n),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SetShape::Cube => "cube",
            SetShape::Sphere => "sphere",
            SetShape::Simplex => "simplex",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem1Config {
    pub n: usize,
    pub l: usize,
    pub shape: SetShape,
    pub b_norm: f64,
    /// Target Lipschitz constant of the operator on the set.
    pub lipschitz: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Problem1Config {
    /// `n = 50`, `l = 10`, `L = 20`, `eps = 0.01`, `b = 0`.
    pub fn baseline(shape: SetShape) -> Self {
        Self { n: 50, l: 10, shape, b_norm: 0.0, lipschitz: 20.0, epsilon: 0.01, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.l >= self.n {
            return Err(Error::Config(format!("need 0 <= l < n, got n = {}, l = {}", self.n, self.l)));
        }
        if !(self.b_norm >= 0.0) || !(self.lipschitz > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config("need b_norm >= 0, lipschitz > 0 and epsilon > 0".into()));
        }
        Ok(())
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Builds one instance. `M = S + K` with `S = A^T A + 0.1 I` and a skew `K`
/// of norm `|S| / 2`; `alpha, beta ~ U[0.1, 1]`; `b` uniform on the sphere of
/// radius `b_norm`. `(M, alpha)` share one scale chosen so the sampled
/// Lipschitz estimate equals the target. The objective is
/// `(x - u)^T Q (x - u)` with `Q = A^T A + I` and `u` uniform in the set.
pub fn gen_problem1(cfg: &Problem1Config) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, h) = (cfg.n, cfg.n - cfg.l);
    let set = cfg.shape.set(n);

    let a = gaussian_matrix(h, h, &mut rng) / (h as f64).sqrt();
    let s = a.tr_mul(&a) + DMatrix::identity(h, h) * 0.1;
    let raw = gaussian_matrix(h, h, &mut rng);
    let mut k = &raw - raw.transpose();
    let k_norm = spectral_norm(&k);
    if k_norm > 0.0 {
        k *= 0.5 * spectral_norm(&s) / k_norm;
    }
    let m = s + k;
    let alpha = DVector::from_fn(h, |_, _| rng.random_range(0.1..1.0));
    let beta = DVector::from_fn(h, |_, _| rng.random_range(0.1..1.0));
    let mut b = DVector::from_fn(h, |_, _| rng.sample::<f64, _>(StandardNormal));
    b *= cfg.b_norm / b.norm();

    // the difference quotients are linear in the common scale and blind to b
    let unit = Operator::linear_exp(m.clone(), DVector::zeros(h), alpha.clone(), beta.clone(), cfg.l)?;
    let raw_estimate = estimate_lipschitz(&unit, &set, LIPSCHITZ_SAMPLES, &mut rng)?;
    let scale = cfg.lipschitz / raw_estimate;
    let operator = Operator::linear_exp(m * scale, b, alpha * scale, beta, cfg.l)?.with_lipschitz(cfg.lipschitz);

    let a2 = gaussian_matrix(n, n, &mut rng) / (n as f64).sqrt();
    let q = a2.tr_mul(&a2) + DMatrix::identity(n, n);
    let q = (&q + q.transpose()) * 0.5;
    let u = set.sample_uniform(&mut rng);
    ProblemInstance::new(operator, Objective::quadratic(q, u)?, set, cfg.epsilon)
}
