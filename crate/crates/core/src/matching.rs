//! Permutation-recovery matching experiments scored by node correctness.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::gw::{minimize_gw, RepresentationKind, RepresentationPair, SolverOptions};
use crate::measures::{node_distribution, Coupling};
use crate::rng::{derive_seed, seeded};
use crate::spectral::LaplacianKind;

/// Default threshold relative to the largest coupling entry.
pub const DEFAULT_RELATIVE_EPSILON: f64 = 1e-9;

/// A graph and a copy with randomly permuted node labels.
#[derive(Debug, Clone)]
pub struct PermutedPair {
    pub original: Graph,
    pub permuted: Graph,
    /// Original node `i` is node `permutation[i]` of `permuted`.
    pub permutation: Vec<usize>,
    pub seed: u64,
}

pub fn permute_graph(g: &Graph, seed: u64) -> Result<PermutedPair> {
    let mut permutation: Vec<usize> = (0..g.n()).collect();
    permutation.shuffle(&mut seeded(seed));
    Ok(PermutedPair {
        original: g.clone(),
        permuted: g.permuted(&permutation)?,
        permutation,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub node_correctness: f64,
    /// Absolute threshold that defined the matched set.
    pub epsilon: f64,
}

/// `|S ∩ S_GT| / |S|` with `S = {(i, j) : C_ij > ε}` and
/// `S_GT = {(i, σ(i))}`. `epsilon = None` uses `1e-9 · max(C)`.
pub fn node_correctness(c: &Coupling, pair: &PermutedPair, epsilon: Option<f64>) -> Result<MatchScore> {
    node_correctness_matrix(c.matrix(), &pair.permutation, epsilon)
}

/// [`node_correctness`] on a bare nonnegative matrix.
pub fn node_correctness_matrix(m: &DMatrix<f64>, permutation: &[usize], epsilon: Option<f64>) -> Result<MatchScore> {
    let n = permutation.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} x {n}"),
            got: format!("{} x {}", m.nrows(), m.ncols()),
        });
    }
    let epsilon = epsilon.unwrap_or(DEFAULT_RELATIVE_EPSILON * m.max());
    let mut matched = 0usize;
    let mut correct = 0usize;
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] > epsilon {
                matched += 1;
                if permutation[i] == j {
                    correct += 1;
                }
            }
        }
    }
    if matched == 0 {
        return Err(Error::EmptyCoupling);
    }
    Ok(MatchScore {
        node_correctness: correct as f64 / matched as f64,
        epsilon,
    })
}

#[derive(Debug, Clone)]
pub struct MatchingOptions {
    pub laplacian: LaplacianKind,
    /// Node distribution parameters `(a, b)`.
    pub distribution: (f64, f64),
    pub solver: SolverOptions,
}

impl Default for MatchingOptions {
    fn default() -> Self {
        Self {
            laplacian: LaplacianKind::Normalized,
            distribution: (0.0, 0.0),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub graph_index: usize,
    pub n: usize,
    pub m_edges: usize,
    pub loss_kind: RepresentationKind,
    pub score: f64,
    pub epsilon: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub records: Vec<MatchRecord>,
    pub mean: f64,
    /// Population standard deviation of the scores.
    pub std_dev: f64,
    pub total_wall_time: f64,
}

/// Matches one graph against a seeded relabeling of itself.
pub fn match_permuted(
    g: &Graph,
    loss: RepresentationKind,
    seed: u64,
    opts: &MatchingOptions,
) -> Result<(PermutedPair, Coupling, MatchScore)> {
    let pair = permute_graph(g, seed)?;
    let rep = match loss {
        RepresentationKind::Adjacency => RepresentationPair::adjacency(&pair.original, &pair.permuted)?,
        RepresentationKind::Spectral { t } => {
            RepresentationPair::spectral(&pair.original, &pair.permuted, opts.laplacian, t)?
        }
        RepresentationKind::Generic => {
            return Err(Error::InvalidParameter(
                "matching needs an adjacency or spectral loss".into(),
            ))
        }
    };
    let (a, b) = opts.distribution;
    let p = node_distribution(&pair.original, a, b)?;
    let q = node_distribution(&pair.permuted, a, b)?;
    let result = minimize_gw(&rep, &p, &q, &opts.solver)?;
    let score = node_correctness(&result.coupling, &pair, None)?;
    Ok((pair, result.coupling, score))
}

/// Permutes every graph (seed derived from `seed` and the graph index),
/// solves the chosen loss and scores the coupling.
pub fn matching_benchmark(
    graphs: &[Graph],
    loss: RepresentationKind,
    seed: u64,
    opts: &MatchingOptions,
) -> Result<BenchmarkSummary> {
    if graphs.is_empty() {
        return Err(Error::InvalidParameter("no graphs to benchmark".into()));
    }
    let start = Instant::now();
    let records: Vec<MatchRecord> = graphs
        .par_iter()
        .enumerate()
        .map(|(idx, g)| {
            let t0 = Instant::now();
            let (_, _, score) = match_permuted(g, loss, derive_seed(seed, idx as u64), opts)?;
            Ok(MatchRecord {
                graph_index: idx,
                n: g.n(),
                m_edges: g.edge_count(),
                loss_kind: loss,
                score: score.node_correctness,
                epsilon: score.epsilon,
                wall_time: t0.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_>>()?;
    let count = records.len() as f64;
    let mean = records.iter().map(|r| r.score).sum::<f64>() / count;
    let var = records.iter().map(|r| (r.score - mean).powi(2)).sum::<f64>() / count;
    Ok(BenchmarkSummary {
        records,
        mean,
        std_dev: var.sqrt(),
        total_wall_time: start.elapsed().as_secs_f64(),
    })
}
