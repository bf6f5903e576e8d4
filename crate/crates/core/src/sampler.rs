//! Hit-and-run Markov chain on the coupling polytope `𝒞(p, q)`.
//!
//! Each step draws a Gaussian direction, projects it onto the null space of
//! the marginal constraints, computes the feasible chord through the current
//! coupling and jumps to a uniform point on it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measures::{product_coupling, Coupling, NodeDistribution};
use crate::rng::{seeded, SeededRng};

const MAX_DIRECTION_RETRIES: usize = 32;
const DEGENERATE_NORM: f64 = 1e-12;

/// Marginal-constraint matrix of an `m × n` coupling in row-major
/// vectorization (`C_ij` at column `i * n + j`): `m` row-sum rows followed by
/// `n` column-sum rows.
pub fn constraint_matrix(m: usize, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m + n, m * n);
    for i in 0..m {
        for j in 0..n {
            a[(i, i * n + j)] = 1.0;
            a[(m + j, i * n + j)] = 1.0;
        }
    }
    a
}

/// State of one hit-and-run chain.
#[derive(Debug, Clone)]
pub struct SamplerState {
    constraints: DMatrix<f64>,
    /// Orthonormal basis of the constraint row space, `mn × (m + n - 1)`.
    basis: DMatrix<f64>,
    current: Coupling,
    rng: SeededRng,
    seed: u64,
}

impl SamplerState {
    pub fn new(start: Coupling, seed: u64) -> Self {
        let (m, n) = (start.rows(), start.cols());
        let constraints = constraint_matrix(m, n);
        // The row and column sums share one linear dependency; drop the last row.
        let independent = constraints.rows(0, m + n - 1).transpose();
        let basis = independent.qr().q();
        Self {
            constraints,
            basis,
            current: start,
            rng: seeded(seed),
            seed,
        }
    }

    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    pub fn current(&self) -> &Coupling {
        &self.current
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Projects a row-major direction onto the null space of the constraints.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.basis.tr_mul(v);
        v - &self.basis * coeffs
    }

    /// Draws a projected Gaussian direction, retrying degenerate draws.
    pub fn random_direction(&mut self) -> Result<DMatrix<f64>> {
        let (m, n) = (self.current.rows(), self.current.cols());
        for _ in 0..MAX_DIRECTION_RETRIES {
            let raw = DVector::from_fn(m * n, |_, _| self.rng.sample::<f64, _>(StandardNormal));
            let v = self.project(&raw);
            if v.norm() > DEGENERATE_NORM {
                return Ok(DMatrix::from_row_slice(m, n, v.as_slice()));
            }
        }
        Err(Error::DegenerateDirection(MAX_DIRECTION_RETRIES))
    }

    /// Maximal step interval `[α, β]` keeping `C + γV` nonnegative.
    pub fn chord(&self, direction: &DMatrix<f64>) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (&c, &v) in self.current.matrix().iter().zip(direction.iter()) {
            if v > 0.0 {
                lo = lo.max(-c / v);
            } else if v < 0.0 {
                hi = hi.min(-c / v);
            }
        }
        (lo, hi)
    }

    /// Moves to `C + γV`. `direction` must lie in the constraint null space.
    pub fn apply(&mut self, direction: &DMatrix<f64>, gamma: f64) {
        if gamma == 0.0 {
            return;
        }
        let next = self.current.matrix() + direction * gamma;
        self.current = Coupling::new_unchecked(next, self.current.p().clone(), self.current.q().clone());
    }

    /// One hit-and-run step.
    pub fn step(&mut self) -> Result<()> {
        let v = self.random_direction()?;
        let (lo, hi) = self.chord(&v);
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Numerical(format!("empty or unbounded chord [{lo}, {hi}]")));
        }
        let gamma = if hi > lo { self.rng.random_range(lo..=hi) } else { lo };
        self.apply(&v, gamma);
        Ok(())
    }
}

/// Advances the chain by one step and returns the new state.
pub fn mcmc_step(mut state: SamplerState) -> Result<SamplerState> {
    state.step()?;
    Ok(state)
}

/// Runs a chain from the product coupling and keeps every
/// `steps_between`-th state, starting with the state after `steps_between`
/// steps (no separate burn-in).
pub fn sample_couplings(
    p: &NodeDistribution,
    q: &NodeDistribution,
    n_samples: usize,
    steps_between: usize,
    seed: u64,
) -> Result<Vec<Coupling>> {
    if n_samples == 0 || steps_between == 0 {
        return Err(Error::InvalidParameter(
            "n_samples and steps_between must be >= 1".into(),
        ));
    }
    let mut state = SamplerState::new(product_coupling(p, q), seed);
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for _ in 0..steps_between {
            state.step()?;
        }
        out.push(state.current().clone());
    }
    Ok(out)
}
