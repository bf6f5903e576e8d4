//! GW barycenters (Fréchet means) of representation matrices and the
//! bootstrap stability experiment.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::gw::{minimize_gw, RepresentationKind, RepresentationPair, SolverOptions};
use crate::measures::{product_coupling, Coupling, NodeDistribution};
use crate::rng::{derive_seed, seeded};
use crate::spectral::{graph_heat_kernel, LaplacianKind};

/// Inputs `F_i` with node distributions `p_i`, weights `w_i` and a target
/// distribution `p` on `target_size` nodes.
#[derive(Debug, Clone)]
pub struct BarycenterProblem {
    representations: Vec<DMatrix<f64>>,
    input_distributions: Vec<NodeDistribution>,
    weights: Vec<f64>,
    distribution: NodeDistribution,
}

impl BarycenterProblem {
    pub fn new(
        representations: Vec<DMatrix<f64>>,
        input_distributions: Vec<NodeDistribution>,
        weights: Vec<f64>,
        distribution: NodeDistribution,
    ) -> Result<Self> {
        if representations.is_empty() {
            return Err(Error::InvalidParameter("no input representations".into()));
        }
        if input_distributions.len() != representations.len() || weights.len() != representations.len() {
            return Err(Error::DimensionMismatch {
                expected: representations.len().to_string(),
                got: format!("{} distributions, {} weights", input_distributions.len(), weights.len()),
            });
        }
        for (f, p) in representations.iter().zip(&input_distributions) {
            if !f.is_square() {
                return Err(Error::NotSquare(f.nrows(), f.ncols()));
            }
            if f.nrows() != p.len() {
                return Err(Error::DimensionMismatch {
                    expected: f.nrows().to_string(),
                    got: p.len().to_string(),
                });
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("weights must be nonnegative and sum to 1".into()));
        }
        Ok(Self {
            representations,
            input_distributions,
            weights,
            distribution,
        })
    }

    /// Equal weights, uniform input distributions and a uniform target.
    pub fn uniform(representations: Vec<DMatrix<f64>>, target_size: usize) -> Result<Self> {
        if target_size == 0 {
            return Err(Error::InvalidParameter("target size must be >= 1".into()));
        }
        let k = representations.len();
        let dists = representations.iter().map(|f| NodeDistribution::uniform(f.nrows())).collect();
        Self::new(
            representations,
            dists,
            vec![1.0 / k as f64; k],
            NodeDistribution::uniform(target_size),
        )
    }

    pub fn target_size(&self) -> usize {
        self.distribution.len()
    }

    pub fn representations(&self) -> &[DMatrix<f64>] {
        &self.representations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone)]
pub enum BarycenterInit {
    Matrix(DMatrix<f64>),
    /// Symmetrized i.i.d. uniform `[0, 1]` entries.
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct BarycenterOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub solver: SolverOptions,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-9,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarycenterResult {
    pub matrix: DMatrix<f64>,
    /// Fréchet loss after each coupling update.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
}

impl BarycenterResult {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace is never empty")
    }
}

pub fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded(seed);
    let r = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
    (&r + r.transpose()) * 0.5
}

/// Solves every input against `x`, optionally warm-started, and returns the
/// couplings (input × target) with the weighted loss.
fn solve_all(
    x: &DMatrix<f64>,
    prob: &BarycenterProblem,
    warm: Option<&[Coupling]>,
    solver: &SolverOptions,
) -> Result<(Vec<Coupling>, f64)> {
    let results: Vec<(Coupling, f64)> = (0..prob.representations.len())
        .into_par_iter()
        .map(|i| {
            let f = &prob.representations[i];
            let pi = &prob.input_distributions[i];
            let rep = RepresentationPair::new(f.clone(), x.clone(), RepresentationKind::Generic)?;
            let mut opts = solver.clone();
            opts.init = Some(match warm {
                Some(cs) => cs[i].clone(),
                None => product_coupling(pi, &prob.distribution),
            });
            let res = minimize_gw(&rep, pi, &prob.distribution, &opts)?;
            Ok((res.coupling, res.loss))
        })
        .collect::<Result<_>>()?;
    let loss = results.iter().zip(&prob.weights).map(|((_, l), w)| w * l).sum();
    Ok((results.into_iter().map(|(c, _)| c).collect(), loss))
}

/// `Σ_i w_i C_iᵀ F_i C_i / (p pᵀ)`, the minimizer over `X` for fixed couplings.
fn update(prob: &BarycenterProblem, couplings: &[Coupling]) -> DMatrix<f64> {
    let n = prob.target_size();
    let mut acc = DMatrix::zeros(n, n);
    for ((f, c), &w) in prob.representations.iter().zip(couplings).zip(&prob.weights) {
        if w > 0.0 {
            acc += (c.matrix().transpose() * f * c.matrix()) * w;
        }
    }
    let p = prob.distribution.weights();
    acc.component_div(&(p * p.transpose()))
}

/// Block-coordinate descent: solve couplings for the current barycenter,
/// then replace the barycenter by the coupling-weighted average. Couplings
/// are warm-started from the previous round, so the loss trace does not
/// increase.
pub fn gw_barycenter(
    prob: &BarycenterProblem,
    init: &BarycenterInit,
    opts: &BarycenterOptions,
) -> Result<BarycenterResult> {
    let start = Instant::now();
    let n = prob.target_size();
    let mut x = match init {
        BarycenterInit::Matrix(m) => {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n} x {n}"),
                    got: format!("{} x {}", m.nrows(), m.ncols()),
                });
            }
            m.clone()
        }
        BarycenterInit::Random(seed) => random_symmetric(n, *seed),
    };
    let (mut couplings, mut loss) = solve_all(&x, prob, None, &opts.solver)?;
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        x = update(prob, &couplings);
        let (next_couplings, next) = solve_all(&x, prob, Some(&couplings), &opts.solver)?;
        couplings = next_couplings;
        let change = loss - next;
        loss = next;
        trace.push(loss);
        if change.abs() <= opts.rel_tol * loss.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(BarycenterResult {
        matrix: x,
        loss_trace: trace,
        iterations,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `Σ_i w_i d(X, F_i)²` with each term solved from the product coupling.
pub fn frechet_loss(x: &DMatrix<f64>, prob: &BarycenterProblem, solver: &SolverOptions) -> Result<f64> {
    if x.shape() != (prob.target_size(), prob.target_size()) {
        return Err(Error::DimensionMismatch {
            expected: format!("{0} x {0}", prob.target_size()),
            got: format!("{} x {}", x.nrows(), x.ncols()),
        });
    }
    Ok(solve_all(x, prob, None, solver)?.1)
}

/// Betweenness centrality (Brandes), unnormalized. Directed graphs use
/// directed shortest paths; undirected scores count each pair once.
pub fn betweenness_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut adj = vec![Vec::new(); n];
    for (i, j) in g.edges() {
        adj[i].push(j);
        if !g.is_directed() {
            adj[j].push(i);
        }
    }
    let mut score = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds = vec![Vec::new(); n];
        let mut sigma = vec![0.0; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    if !g.is_directed() {
        for x in &mut score {
            *x /= 2.0;
        }
    }
    score
}

/// Induced subgraphs on `sample_size` nodes drawn without replacement from
/// the `pool_size` most central nodes (ties by lower index).
pub fn bootstrap_subgraphs(
    g: &Graph,
    n_samples: usize,
    sample_size: usize,
    pool_size: usize,
    centrality: &dyn Fn(&Graph) -> Vec<f64>,
    seed: u64,
) -> Result<Vec<Graph>> {
    if sample_size == 0 || sample_size > pool_size || pool_size > g.n() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= sample_size ({sample_size}) <= pool_size ({pool_size}) <= n ({})",
            g.n()
        )));
    }
    let scores = centrality(g);
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let pool = &order[..pool_size];
    let mut rng = seeded(seed);
    (0..n_samples)
        .map(|_| {
            let mut nodes: Vec<usize> = pool.choose_multiple(&mut rng, sample_size).copied().collect();
            nodes.sort_unstable();
            g.induced_subgraph(&nodes)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BootstrapRepresentation {
    Adjacency,
    HeatKernel { t: f64 },
}

impl std::fmt::Display for BootstrapRepresentation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BootstrapRepresentation::Adjacency => f.write_str("adj"),
            BootstrapRepresentation::HeatKernel { t } => write!(f, "heat{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRecord {
    pub representation: BootstrapRepresentation,
    pub init_seed: u64,
    pub final_loss: f64,
    pub iterations: usize,
    pub wall_time: f64,
}

/// Barycenters of each representation of `graphs` from `n_inits` random
/// initializations; one record per (representation, initialization).
pub fn bootstrap_experiment(
    graphs: &[Graph],
    representations: &[BootstrapRepresentation],
    laplacian: LaplacianKind,
    target_size: usize,
    n_inits: usize,
    seed: u64,
    opts: &BarycenterOptions,
) -> Result<Vec<BootstrapRecord>> {
    Ok(bootstrap_runs(graphs, representations, laplacian, target_size, n_inits, seed, opts)?
        .into_iter()
        .map(|(record, _)| record)
        .collect())
}

/// [`bootstrap_experiment`] keeping each full barycenter result.
pub fn bootstrap_runs(
    graphs: &[Graph],
    representations: &[BootstrapRepresentation],
    laplacian: LaplacianKind,
    target_size: usize,
    n_inits: usize,
    seed: u64,
    opts: &BarycenterOptions,
) -> Result<Vec<(BootstrapRecord, BarycenterResult)>> {
    let mut runs = Vec::new();
    for &rep in representations {
        let mats: Vec<DMatrix<f64>> = graphs
            .iter()
            .map(|g| match rep {
                BootstrapRepresentation::Adjacency => Ok(g.adjacency()),
                BootstrapRepresentation::HeatKernel { t } => Ok(graph_heat_kernel(g, laplacian, t)?.into_matrix()),
            })
            .collect::<Result<_>>()?;
        let prob = BarycenterProblem::uniform(mats, target_size)?;
        for k in 0..n_inits {
            let init_seed = derive_seed(seed, k as u64);
            let res = gw_barycenter(&prob, &BarycenterInit::Random(init_seed), opts)?;
            let record = BootstrapRecord {
                representation: rep,
                init_seed,
                final_loss: res.final_loss(),
                iterations: res.iterations,
                wall_time: res.wall_time,
            };
            runs.push((record, res));
        }
    }
    Ok(runs)
}

/// Population variance of the values after subtracting their mean.
pub fn centered_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}
