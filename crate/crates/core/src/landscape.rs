//! Energy-landscape experiment: descend each loss from an ensemble of
//! random couplings and measure how much the local minima disagree.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::gw::{minimize_gw, RepresentationKind, RepresentationPair, SolverOptions};
use crate::measures::{node_distribution, product_coupling, Coupling, NodeDistribution};
use crate::sampler::sample_couplings;
use crate::spectral::LaplacianKind;

#[derive(Debug, Clone)]
pub struct LandscapeOptions {
    pub laplacian: LaplacianKind,
    /// Node distribution parameters `(a, b)` for both graphs.
    pub distribution: (f64, f64),
    /// Hit-and-run steps between retained initializations.
    pub steps_between: usize,
    pub solver: SolverOptions,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self {
            laplacian: LaplacianKind::Normalized,
            distribution: (0.0, 0.0),
            steps_between: 1000,
            solver: SolverOptions::default(),
        }
    }
}

/// Statistics of one loss over the initialization ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub loss_kind: RepresentationKind,
    pub min_loss: f64,
    pub max_loss: f64,
    /// `(max - min) / min` over the ensemble.
    pub worst_error: f64,
    /// `(loss from the product coupling - min) / min`.
    pub product_error: f64,
    pub mean_wall_time: f64,
    pub mean_iterations: f64,
    pub final_losses: Vec<f64>,
}

/// Loss differences below this are roundoff. Losses of probability-weighted
/// representations are O(1), so the threshold is absolute.
const LOSS_TIE_TOL: f64 = 1e-12;

fn relative(value: f64, min: f64) -> f64 {
    let diff = value - min;
    if diff <= LOSS_TIE_TOL {
        0.0
    } else {
        diff / min.abs()
    }
}

/// Runs the adjacency loss and the spectral loss at each `t` from `n_inits`
/// sampled couplings plus the product coupling.
///
/// The product-coupling solve only feeds `product_error`; the minimum and
/// the worst error are taken over the sampled ensemble, the product loss
/// included in the minimum so that `product_error` stays nonnegative.
pub fn landscape_experiment(
    g: &Graph,
    h: &Graph,
    t_values: &[f64],
    n_inits: usize,
    seed: u64,
    opts: &LandscapeOptions,
) -> Result<Vec<LossStats>> {
    if n_inits == 0 {
        return Err(Error::InvalidParameter("n_inits must be >= 1".into()));
    }
    let (a, b) = opts.distribution;
    let p = node_distribution(g, a, b)?;
    let q = node_distribution(h, a, b)?;
    let mut reps = vec![RepresentationPair::adjacency(g, h)?];
    for &t in t_values {
        reps.push(RepresentationPair::spectral(g, h, opts.laplacian, t)?);
    }
    let inits = sample_couplings(&p, &q, n_inits, opts.steps_between, seed)?;

    reps.iter()
        .map(|rep| loss_stats(rep, &p, &q, &inits, &opts.solver))
        .collect()
}

fn loss_stats(
    rep: &RepresentationPair,
    p: &NodeDistribution,
    q: &NodeDistribution,
    inits: &[Coupling],
    solver: &SolverOptions,
) -> Result<LossStats> {
    let runs: Vec<(f64, f64, usize)> = inits
        .par_iter()
        .map(|init| {
            let res = minimize_gw(rep, p, q, &solver.clone().with_init(init.clone()))?;
            Ok((res.loss, res.wall_time, res.iterations))
        })
        .collect::<Result<_>>()?;
    let product = minimize_gw(rep, p, q, &solver.clone().with_init(product_coupling(p, q)))?;

    let final_losses: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let max_loss = final_losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sampled_min = final_losses.iter().copied().fold(f64::INFINITY, f64::min);
    let min_loss = sampled_min.min(product.loss);
    let count = runs.len() as f64;
    Ok(LossStats {
        loss_kind: rep.kind(),
        min_loss,
        max_loss,
        worst_error: relative(max_loss, sampled_min),
        product_error: relative(product.loss, min_loss),
        mean_wall_time: runs.iter().map(|r| r.1).sum::<f64>() / count,
        mean_iterations: runs.iter().map(|r| r.2 as f64).sum::<f64>() / count,
        final_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate_gnm;

    #[test]
    fn single_init_has_zero_worst_error() {
        let g = generate_gnm(8, 14, 1).unwrap();
        let h = generate_gnm(8, 14, 2).unwrap();
        let stats = landscape_experiment(&g, &h, &[5.0], 1, 3, &LandscapeOptions::default()).unwrap();
        assert_eq!(stats.len(), 2);
        for s in &stats {
            assert_eq!(s.worst_error, 0.0);
            assert!(s.product_error >= 0.0);
            assert_eq!(s.final_losses.len(), 1);
        }
        assert_eq!(stats[0].loss_kind, RepresentationKind::Adjacency);
        assert_eq!(stats[1].loss_kind, RepresentationKind::Spectral { t: 5.0 });
    }

    #[test]
    fn identical_losses_give_flat_landscape() {
        // K2 against itself: every coupling of two uniform points reaches loss 0
        let k2 = Graph::from_index_edges(2, [(0, 1)], false).unwrap();
        let stats = landscape_experiment(&k2, &k2, &[1.0], 5, 0, &LandscapeOptions::default()).unwrap();
        for s in &stats {
            assert!(s.max_loss - s.min_loss < 1e-12, "{s:?}");
            assert_eq!(s.worst_error, 0.0);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let g = generate_gnm(7, 10, 4).unwrap();
        let h = generate_gnm(7, 12, 5).unwrap();
        let opts = LandscapeOptions {
            steps_between: 50,
            ..Default::default()
        };
        let a = landscape_experiment(&g, &h, &[2.0, 4.0], 4, 9, &opts).unwrap();
        let b = landscape_experiment(&g, &h, &[2.0, 4.0], 4, 9, &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.final_losses, y.final_losses);
        }
        assert!(landscape_experiment(&g, &h, &[2.0], 0, 9, &opts).is_err());
    }
}
