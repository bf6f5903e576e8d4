//! Seeded random graph models.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::seeded;

/// Cross-block edge probabilities for [`generate_sbm`].
#[derive(Debug, Clone)]
pub enum BlockProbabilities {
    /// Same probability for every pair of distinct blocks.
    Uniform(f64),
    /// `matrix[a][b]` is the probability for blocks `a != b`; must be symmetric.
    PerPair(Vec<Vec<f64>>),
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Undirected stochastic block model. Returns the graph and block labels.
pub fn generate_sbm(
    block_sizes: &[usize],
    p_in: f64,
    p_out: &BlockProbabilities,
    seed: u64,
) -> Result<(Graph, Vec<usize>)> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::InvalidParameter("block sizes must be >= 1".into()));
    }
    check_probability(p_in)?;
    let k = block_sizes.len();
    match p_out {
        BlockProbabilities::Uniform(p) => check_probability(*p)?,
        BlockProbabilities::PerPair(m) => {
            if m.len() != k || m.iter().any(|row| row.len() != k) {
                return Err(Error::InvalidParameter(format!(
                    "cross-block probability matrix must be {k} x {k}"
                )));
            }
            for a in 0..k {
                for b in 0..k {
                    check_probability(m[a][b])?;
                    if a != b && m[a][b] != m[b][a] {
                        return Err(Error::InvalidParameter(
                            "cross-block probability matrix must be symmetric".into(),
                        ));
                    }
                }
            }
        }
    }
    let labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let prob = |a: usize, b: usize| -> f64 {
        if a == b {
            p_in
        } else {
            match p_out {
                BlockProbabilities::Uniform(p) => *p,
                BlockProbabilities::PerPair(m) => m[a][b],
            }
        }
    };
    let n = labels.len();
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < prob(labels[i], labels[j]) {
                edges.push((i, j));
            }
        }
    }
    Ok((Graph::from_index_edges(n, edges, false)?, labels))
}

/// Cluster sizes for the Gaussian random partition model: draws from a normal
/// with the given mean and variance `mean / 2`, rounds, truncates at 1, and
/// trims the last cluster so the sizes sum to `n`.
pub fn gaussian_partition_sizes(n: usize, mean_cluster: usize, seed: u64) -> Result<Vec<usize>> {
    if mean_cluster == 0 || n < mean_cluster {
        return Err(Error::InvalidParameter(format!(
            "need n >= mean_cluster >= 1, got n = {n}, mean_cluster = {mean_cluster}"
        )));
    }
    let mean = mean_cluster as f64;
    let normal = Normal::new(mean, (mean / 2.0).sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = seeded(seed);
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < n {
        let s = (normal.sample(&mut rng).round() as i64).max(1) as usize;
        let s = s.min(n - total);
        sizes.push(s);
        total += s;
    }
    Ok(sizes)
}

/// Gaussian random partition graph: cluster sizes from
/// [`gaussian_partition_sizes`], then SBM-style edges with optional direction
/// (ordered pairs sampled independently when `directed`).
pub fn generate_gaussian_random_partition(
    n: usize,
    mean_cluster: usize,
    p_in: f64,
    p_out: f64,
    directed: bool,
    seed: u64,
) -> Result<(Graph, Vec<usize>)> {
    check_probability(p_in)?;
    check_probability(p_out)?;
    let sizes = gaussian_partition_sizes(n, mean_cluster, seed)?;
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let mut rng = seeded(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut edges = Vec::new();
    for i in 0..n {
        let lo = if directed { 0 } else { i + 1 };
        for j in lo..n {
            if i == j {
                continue;
            }
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok((Graph::from_index_edges(n, edges, directed)?, labels))
}

/// Undirected Erdős–Rényi graph `G(n, p)`.
pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    check_probability(p)?;
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_index_edges(n, edges, false)
}

/// Erdős–Rényi graph with exactly `m` edges drawn uniformly without replacement.
pub fn generate_gnm(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    if m > pairs.len() {
        return Err(Error::InvalidParameter(format!("{m} edges exceed the {} available pairs", pairs.len())));
    }
    let mut rng = seeded(seed);
    let chosen = rand::seq::index::sample(&mut rng, pairs.len(), m);
    Graph::from_index_edges(n, chosen.into_iter().map(|k| pairs[k]), false)
}
