//! Node distributions and couplings between them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Marginal tolerance for [`Coupling`] validation.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Slack allowed below zero for coupling entries.
pub const NONNEG_TOL: f64 = 1e-12;

/// A fully supported probability vector on the nodes of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDistribution {
    weights: DVector<f64>,
}

impl NodeDistribution {
    /// Normalizes strictly positive, finite weights to sum 1.
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("distribution must be nonempty".into()));
        }
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "distribution weight {i} is {}; full support requires positive finite weights",
                weights[i]
            )));
        }
        let total = weights.sum();
        Ok(Self { weights: weights / total })
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: DVector::from_element(n, 1.0 / n as f64),
        }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.weights.as_slice()
    }
}

/// Degree-based node distribution `p_j ∝ (deg(v_j) + a)^b`.
///
/// `b = 0` gives the uniform distribution and `b = 1, a = 0` the degree
/// distribution. Directed graphs use out-degree plus in-degree.
pub fn node_distribution(g: &Graph, a: f64, b: f64) -> Result<NodeDistribution> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a must be finite and >= 0, got {a}")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter(format!("b must lie in [0, 1], got {b}")));
    }
    if g.n() == 0 {
        return Err(Error::InvalidParameter("graph has no nodes".into()));
    }
    if b == 0.0 {
        return Ok(NodeDistribution::uniform(g.n()));
    }
    let deg = g.total_degrees();
    if a == 0.0 {
        if let Some(i) = deg.iter().position(|&d| d == 0) {
            return Err(Error::ZeroDegree(i));
        }
    }
    let raw = DVector::from_iterator(g.n(), deg.iter().map(|&d| (d as f64 + a).powf(b)));
    NodeDistribution::new(raw)
}

/// A joint distribution on `X × Y` with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    matrix: DMatrix<f64>,
    p: NodeDistribution,
    q: NodeDistribution,
}

impl Coupling {
    /// Validates marginals (within [`MARGINAL_TOL`]) and entry bounds.
    pub fn new(matrix: DMatrix<f64>, p: NodeDistribution, q: NodeDistribution) -> Result<Self> {
        check_marginals(&matrix, &p, &q)?;
        Ok(Self { matrix, p, q })
    }

    /// Skips validation; callers guarantee feasibility.
    pub(crate) fn new_unchecked(matrix: DMatrix<f64>, p: NodeDistribution, q: NodeDistribution) -> Self {
        debug_assert!(check_marginals(&matrix, &p, &q).is_ok());
        Self { matrix, p, q }
    }

    /// Coupling that sends node `i` to node `perm[i]` with mass `p_i`.
    /// Requires `q_{perm[i]} = p_i`.
    pub fn permutation(perm: &[usize], p: &NodeDistribution, q: &NodeDistribution) -> Result<Self> {
        let n = perm.len();
        if p.len() != n || q.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n.to_string(),
                got: format!("{} and {}", p.len(), q.len()),
            });
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in perm.iter().enumerate() {
            if j >= n {
                return Err(Error::InvalidParameter("permutation index out of range".into()));
            }
            m[(i, j)] = p.weights()[i];
        }
        Self::new(m, p.clone(), q.clone())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn p(&self) -> &NodeDistribution {
        &self.p
    }

    pub fn q(&self) -> &NodeDistribution {
        &self.q
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Entries strictly above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.matrix.iter().filter(|&&x| x > threshold).count()
    }

    /// Largest deviation of the row/column sums from `p` and `q`.
    pub fn marginal_error(&self) -> f64 {
        marginal_error(&self.matrix, &self.p, &self.q)
    }
}

pub(crate) fn marginal_error(m: &DMatrix<f64>, p: &NodeDistribution, q: &NodeDistribution) -> f64 {
    let rows = m.column_sum() - p.weights();
    let cols = m.row_sum().transpose() - q.weights();
    rows.amax().max(cols.amax())
}

fn check_marginals(m: &DMatrix<f64>, p: &NodeDistribution, q: &NodeDistribution) -> Result<()> {
    if m.nrows() != p.len() || m.ncols() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} x {}", p.len(), q.len()),
            got: format!("{} x {}", m.nrows(), m.ncols()),
        });
    }
    if let Some(x) = m.iter().find(|&&x| !(x >= -NONNEG_TOL && x <= 1.0 + NONNEG_TOL)) {
        return Err(Error::InvalidParameter(format!("coupling entry {x} outside [0, 1]")));
    }
    let err = marginal_error(m, p, q);
    if err > MARGINAL_TOL {
        return Err(Error::InvalidParameter(format!("coupling marginals off by {err:e}")));
    }
    Ok(())
}

/// The independent coupling `p qᵀ`.
pub fn product_coupling(p: &NodeDistribution, q: &NodeDistribution) -> Coupling {
    let m = p.weights() * q.weights().transpose();
    Coupling::new_unchecked(m, p.clone(), q.clone())
}
