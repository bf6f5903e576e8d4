//! Gromov-Wasserstein losses and the conditional-gradient coupling solver.
//!
//! For representation matrices `F^X` (`m × m`) and `F^Y` (`n × n`) the loss of
//! a coupling `C` is
//!
//! ```text
//! L(C) = Σ_{i,k} Σ_{j,l} (F^X_ik - F^Y_jl)² C_ij C_kl
//!      = aᵀ (F^X ∘ F^X) a + bᵀ (F^Y ∘ F^Y) b - 2 ⟨F^X C, C F^Y⟩
//! ```
//!
//! with `a = C 1` and `b = Cᵀ 1`. Over `𝒞(p, q)` the first two terms are
//! constant, so minimizing the loss maximizes the inner product
//! `⟨F^X C, C F^Y⟩`. When both matrices are positive semidefinite (heat
//! kernels) that inner product equals `‖U C Vᵀ‖²` for Cholesky factors
//! `F^X = UᵀU`, `F^Y = VᵀV`, a convex function of `C`; the loss is then
//! concave and has a minimizer at a vertex of the polytope.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::measures::{product_coupling, Coupling, NodeDistribution};
use crate::spectral::{graph_heat_kernel, LaplacianKind};
use crate::transport::solve_linear_ot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepresentationKind {
    Adjacency,
    Spectral { t: f64 },
    Generic,
}

impl std::fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RepresentationKind::Adjacency => f.write_str("adj"),
            RepresentationKind::Spectral { t } => write!(f, "spec{t}"),
            RepresentationKind::Generic => f.write_str("generic"),
        }
    }
}

/// Relational matrices of the two spaces being compared.
#[derive(Debug, Clone)]
pub struct RepresentationPair {
    source: DMatrix<f64>,
    target: DMatrix<f64>,
    kind: RepresentationKind,
    symmetric: bool,
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0)
}

impl RepresentationPair {
    pub fn new(source: DMatrix<f64>, target: DMatrix<f64>, kind: RepresentationKind) -> Result<Self> {
        for m in [&source, &target] {
            if !m.is_square() {
                return Err(Error::NotSquare(m.nrows(), m.ncols()));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numerical("representation has non-finite entries".into()));
            }
        }
        match kind {
            RepresentationKind::Adjacency => {
                if source.iter().chain(target.iter()).any(|&x| x != 0.0 && x != 1.0) {
                    return Err(Error::InvalidParameter("adjacency matrices must be 0/1".into()));
                }
            }
            RepresentationKind::Spectral { t } => {
                if !(t >= 0.0) {
                    return Err(Error::InvalidParameter(format!("diffusion time must be >= 0, got {t}")));
                }
                for m in [&source, &target] {
                    if !is_symmetric(m) {
                        return Err(Error::Asymmetric((m - m.transpose()).amax()));
                    }
                }
            }
            RepresentationKind::Generic => {}
        }
        let symmetric = is_symmetric(&source) && is_symmetric(&target);
        Ok(Self {
            source,
            target,
            kind,
            symmetric,
        })
    }

    /// Adjacency representations of two graphs.
    pub fn adjacency(g: &Graph, h: &Graph) -> Result<Self> {
        Self::new(g.adjacency(), h.adjacency(), RepresentationKind::Adjacency)
    }

    /// Heat kernels of two graphs with the same Laplacian kind.
    pub fn spectral(g: &Graph, h: &Graph, kind: LaplacianKind, t: f64) -> Result<Self> {
        let kg = graph_heat_kernel(g, kind, t)?.into_matrix();
        let kh = graph_heat_kernel(h, kind, t)?.into_matrix();
        Self::new(kg, kh, RepresentationKind::Spectral { t })
    }

    pub fn source(&self) -> &DMatrix<f64> {
        &self.source
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn kind(&self) -> RepresentationKind {
        self.kind
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.source.nrows(), self.target.nrows())
    }

    fn check(&self, c: &DMatrix<f64>) -> Result<()> {
        if c.shape() != self.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} x {}", self.source.nrows(), self.target.nrows()),
                got: format!("{} x {}", c.nrows(), c.ncols()),
            });
        }
        Ok(())
    }

    /// `F^X C F^Yᵀ`.
    fn conjugate(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        &self.source * c * self.target.transpose()
    }

    /// Gradient of `-2 ⟨F^X C, C F^Y⟩` with respect to `C`.
    fn cross_gradient(&self, c: &DMatrix<f64>, conj: &DMatrix<f64>) -> DMatrix<f64> {
        if self.symmetric {
            conj * -4.0
        } else {
            let other = self.source.transpose() * c * &self.target;
            (other + conj) * -2.0
        }
    }

    /// `pᵀ (F^X ∘ F^X) p + qᵀ (F^Y ∘ F^Y) q`.
    fn constant_term(&self, a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>) -> f64 {
        let sx = self.source.component_mul(&self.source);
        let sy = self.target.component_mul(&self.target);
        a.dot(&(&sx * a)) + b.dot(&(&sy * b))
    }
}

/// Loss of an arbitrary `m × n` matrix, using its own row and column sums.
pub fn gw_loss_matrix(rep: &RepresentationPair, c: &DMatrix<f64>) -> Result<f64> {
    rep.check(c)?;
    let a = c.column_sum();
    let b = c.row_sum().transpose();
    Ok(rep.constant_term(&a, &b) - 2.0 * c.dot(&rep.conjugate(c)))
}

/// `Σ (F^X_ik - F^Y_jl)² C_ij C_kl` evaluated in `O(n³)`.
pub fn gw_loss(rep: &RepresentationPair, c: &Coupling) -> Result<f64> {
    gw_loss_matrix(rep, c.matrix())
}

/// Frobenius inner product `⟨F^X C, C F^Y⟩`.
pub fn gw_inner(rep: &RepresentationPair, c: &Coupling) -> Result<f64> {
    rep.check(c.matrix())?;
    Ok(c.matrix().dot(&rep.conjugate(c.matrix())))
}

/// `‖U C Vᵀ‖²` with `F^X = UᵀU`, `F^Y = VᵀV`; requires positive definite
/// representations.
pub fn cholesky_inner(rep: &RepresentationPair, c: &Coupling) -> Result<f64> {
    rep.check(c.matrix())?;
    let factor = |m: &DMatrix<f64>| {
        m.clone()
            .cholesky()
            .map(|ch| ch.l().transpose())
            .ok_or_else(|| Error::Numerical("representation is not positive definite".into()))
    };
    let u = factor(rep.source())?;
    let v = factor(rep.target())?;
    Ok((u * c.matrix() * v.transpose()).norm_squared())
}

/// Gradient of [`gw_loss_matrix`] with respect to `C`, including the
/// dependence of the constant terms on the marginals of `C`.
pub fn gw_gradient(rep: &RepresentationPair, c: &Coupling) -> Result<DMatrix<f64>> {
    gw_gradient_matrix(rep, c.matrix())
}

pub fn gw_gradient_matrix(rep: &RepresentationPair, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    rep.check(c)?;
    let (m, n) = rep.shape();
    let a = c.column_sum();
    let b = c.row_sum().transpose();
    let sx = rep.source.component_mul(&rep.source);
    let sy = rep.target.component_mul(&rep.target);
    let row_term = &sx * &a + sx.transpose() * &a;
    let col_term = &sy * &b + sy.transpose() * &b;
    let conj = rep.conjugate(c);
    let mut grad = rep.cross_gradient(c, &conj);
    for i in 0..m {
        for j in 0..n {
            grad[(i, j)] += row_term[i] + col_term[j];
        }
    }
    Ok(grad)
}

/// The general (non-symmetric) gradient formula, used to cross-check the
/// symmetric shortcut.
pub fn gw_gradient_general(rep: &RepresentationPair, c: &Coupling) -> Result<DMatrix<f64>> {
    let general = RepresentationPair {
        symmetric: false,
        ..rep.clone()
    };
    gw_gradient(&general, c)
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Starting coupling; `None` starts from the product coupling.
    pub init: Option<Coupling>,
    pub vertex_snap: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            rel_tol: 1e-9,
            init: None,
            vertex_snap: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_init(mut self, init: Coupling) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_vertex_snap(mut self, snap: bool) -> Self {
        self.vertex_snap = snap;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub coupling: Coupling,
    /// Full loss value, constant terms included.
    pub loss: f64,
    /// `sqrt(max(loss, 0))`.
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
    /// Loss at the start and after every iteration.
    pub loss_trace: Vec<f64>,
}

/// Conditional-gradient minimization of the GW loss over `𝒞(p, q)`.
///
/// Each iteration linearizes the loss, solves the linear transport problem
/// exactly (a polytope vertex) and takes the exact line-search step toward
/// it. Row- and column-constant parts of the gradient do not change the
/// linear problem's minimizer and are left out of it.
pub fn minimize_gw(
    rep: &RepresentationPair,
    p: &NodeDistribution,
    q: &NodeDistribution,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let start = Instant::now();
    let (m, n) = rep.shape();
    if p.len() != m || q.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{m} x {n}"),
            got: format!("{} x {}", p.len(), q.len()),
        });
    }
    let mut coupling = match &opts.init {
        Some(c) => {
            rep.check(c.matrix())?;
            if c.p() != p || c.q() != q {
                Coupling::new(c.matrix().clone(), p.clone(), q.clone())?
            } else {
                c.clone()
            }
        }
        None => product_coupling(p, q),
    };
    let constant = rep.constant_term(p.weights(), q.weights());
    let mut c = coupling.matrix().clone();
    let mut conj = rep.conjugate(&c);
    let mut loss = constant - 2.0 * c.dot(&conj);
    check_finite(loss, 0)?;
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let grad = rep.cross_gradient(&c, &conj);
        let vertex = solve_linear_ot(&grad, p, q)?;
        let d = vertex.matrix() - &c;
        let slope = grad.dot(&d);
        let conj_d = rep.conjugate(&d);
        let curvature = -2.0 * d.dot(&conj_d);
        // Minimize slope·τ + curvature·τ² over [0, 1]. At a stationary point
        // of a concave loss the slope vanishes but the step may still descend.
        let tau = if curvature > 0.0 {
            (-slope / (2.0 * curvature)).clamp(0.0, 1.0)
        } else if slope + curvature < 0.0 {
            1.0
        } else {
            0.0
        };
        if !(tau > 0.0) {
            converged = true;
            break;
        }
        if tau == 1.0 {
            c = vertex.into_matrix();
        } else {
            c += &d * tau;
        }
        conj += conj_d * tau;
        let next = constant - 2.0 * c.dot(&conj);
        check_finite(next, iterations)?;
        let decrease = loss - next;
        loss = next;
        trace.push(loss);
        if decrease <= opts.rel_tol * loss.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    coupling = Coupling::new_unchecked(c, p.clone(), q.clone());
    if opts.vertex_snap {
        let grad = rep.cross_gradient(coupling.matrix(), &conj);
        let vertex = solve_linear_ot(&grad, p, q)?;
        let snapped = constant - 2.0 * vertex.matrix().dot(&rep.conjugate(vertex.matrix()));
        if snapped <= loss + opts.rel_tol * loss.abs() {
            coupling = vertex;
            loss = snapped;
            trace.push(loss);
        }
    }

    Ok(SolveResult {
        coupling,
        loss,
        distance: loss.max(0.0).sqrt(),
        iterations,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        loss_trace: trace,
    })
}

fn check_finite(loss: f64, iteration: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("loss became {loss} at iteration {iteration}")))
    }
}

/// Spectral GW distance at diffusion time `t` between two measure graphs.
pub fn spec_gw_distance(
    g: &Graph,
    p: &NodeDistribution,
    h: &Graph,
    q: &NodeDistribution,
    t: f64,
    kind: LaplacianKind,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    let rep = RepresentationPair::spectral(g, h, kind, t)?;
    minimize_gw(&rep, p, q, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn naive_loss(fx: &DMatrix<f64>, fy: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
        let (m, n) = c.shape();
        let mut total = 0.0;
        for i in 0..m {
            for k in 0..m {
                for j in 0..n {
                    for l in 0..n {
                        let d = fx[(i, k)] - fy[(j, l)];
                        total += d * d * c[(i, j)] * c[(k, l)];
                    }
                }
            }
        }
        total
    }

    fn random_matrix(rng: &mut crate::rng::SeededRng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn self_matching_has_zero_loss() {
        let f = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.1, 0.3, 1.0]);
        let rep = RepresentationPair::new(f.clone(), f, RepresentationKind::Generic).unwrap();
        let u = NodeDistribution::uniform(3);
        let c = Coupling::permutation(&[0, 1, 2], &u, &u).unwrap();
        assert!(gw_loss(&rep, &c).unwrap().abs() < 1e-15);
    }

    #[test]
    fn one_by_one_cases() {
        let one = NodeDistribution::uniform(1);
        let c = product_coupling(&one, &one);
        let rep = RepresentationPair::new(DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0), RepresentationKind::Generic).unwrap();
        assert_eq!(gw_loss(&rep, &c).unwrap(), 1.0);
        let rep = RepresentationPair::new(DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 3.0), RepresentationKind::Generic).unwrap();
        assert_eq!(gw_inner(&rep, &c).unwrap(), 6.0);
    }

    #[test]
    fn expanded_loss_matches_quadruple_sum() {
        let mut rng = seeded(1);
        for (m, n) in [(3, 2), (2, 3), (4, 4), (5, 3)] {
            let fx = random_matrix(&mut rng, m, m);
            let fy = random_matrix(&mut rng, n, n);
            let c = random_matrix(&mut rng, m, n).map(f64::abs);
            let rep = RepresentationPair::new(fx.clone(), fy.clone(), RepresentationKind::Generic).unwrap();
            let want = naive_loss(&fx, &fy, &c);
            let got = gw_loss_matrix(&rep, &c).unwrap();
            assert!((got - want).abs() <= 1e-10 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn gradient_paths_agree_for_symmetric() {
        let mut rng = seeded(2);
        let a = random_matrix(&mut rng, 4, 4);
        let b = random_matrix(&mut rng, 3, 3);
        let rep = RepresentationPair::new(&a + a.transpose(), &b + b.transpose(), RepresentationKind::Generic).unwrap();
        assert!(rep.is_symmetric());
        let p = NodeDistribution::from_slice(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let q = NodeDistribution::uniform(3);
        let c = product_coupling(&p, &q);
        let fast = gw_gradient(&rep, &c).unwrap();
        let general = gw_gradient_general(&rep, &c).unwrap();
        assert!((fast - general).amax() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let rep = RepresentationPair::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 3), RepresentationKind::Generic).unwrap();
        let u = NodeDistribution::uniform(2);
        let c = product_coupling(&u, &u);
        assert!(matches!(gw_loss(&rep, &c), Err(Error::DimensionMismatch { .. })));
        assert!(gw_gradient(&rep, &c).is_err());
        assert!(minimize_gw(&rep, &u, &u, &SolverOptions::default()).is_err());
    }

    #[test]
    fn adjacency_must_be_binary() {
        let m = DMatrix::from_element(2, 2, 0.5);
        assert!(RepresentationPair::new(m.clone(), m, RepresentationKind::Adjacency).is_err());
    }

    #[test]
    fn one_by_one_problem_is_trivial() {
        let one = NodeDistribution::uniform(1);
        let rep = RepresentationPair::new(DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 5.0), RepresentationKind::Generic).unwrap();
        let res = minimize_gw(&rep, &one, &one, &SolverOptions::default()).unwrap();
        assert_eq!(res.coupling.matrix()[(0, 0)], 1.0);
        assert!((res.loss - 9.0).abs() < 1e-12);
        assert!(res.converged);
        // the only feasible direction is zero
        let grad = gw_gradient(&rep, &res.coupling).unwrap();
        assert!(grad[(0, 0)].is_finite());
    }

    #[test]
    fn options_validation() {
        let bad = SolverOptions {
            max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn random_coupling(rng: &mut crate::rng::SeededRng, m: usize, n: usize) -> Coupling {
        let p = NodeDistribution::new(nalgebra::DVector::from_fn(m, |_, _| rng.random::<f64>() + 0.1)).unwrap();
        let q = NodeDistribution::new(nalgebra::DVector::from_fn(n, |_, _| rng.random::<f64>() + 0.1)).unwrap();
        let mut samples = crate::sampler::sample_couplings(&p, &q, 1, 5, rng.random()).unwrap();
        samples.pop().unwrap()
    }

    fn spectral_pair(seed: u64, m: usize, n: usize, t: f64) -> RepresentationPair {
        let g = crate::generators::generate_erdos_renyi(m, 0.4, seed).unwrap();
        let h = crate::generators::generate_erdos_renyi(n, 0.4, seed + 1).unwrap();
        RepresentationPair::spectral(&g, &h, LaplacianKind::Standard, t).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = seeded(3);
        let step = 1e-6;
        for trial in 0..20 {
            let m = 2 + trial % 5;
            let n = 2 + (trial * 3) % 4;
            let fx = random_matrix(&mut rng, m, m);
            let fy = random_matrix(&mut rng, n, n);
            let rep = RepresentationPair::new(fx, fy, RepresentationKind::Generic).unwrap();
            let c = random_matrix(&mut rng, m, n).map(f64::abs);
            let grad = gw_gradient_matrix(&rep, &c).unwrap();
            let fd = DMatrix::from_fn(m, n, |i, j| {
                let mut plus = c.clone();
                plus[(i, j)] += step;
                let mut minus = c.clone();
                minus[(i, j)] -= step;
                (gw_loss_matrix(&rep, &plus).unwrap() - gw_loss_matrix(&rep, &minus).unwrap()) / (2.0 * step)
            });
            let rel = (&grad - &fd).norm() / fd.norm();
            assert!(rel < 1e-5, "trial {trial}: relative error {rel}");
        }
    }

    #[test]
    fn product_coupling_inner_factorizes() {
        let rep = spectral_pair(10, 6, 5, 2.0);
        let p = NodeDistribution::from_slice(&[0.1, 0.2, 0.3, 0.1, 0.2, 0.1]).unwrap();
        let q = NodeDistribution::from_slice(&[0.3, 0.3, 0.2, 0.1, 0.1]).unwrap();
        let c = product_coupling(&p, &q);
        let pk = p.weights().dot(&(rep.source() * p.weights()));
        let qk = q.weights().dot(&(rep.target() * q.weights()));
        let inner = gw_inner(&rep, &c).unwrap();
        assert!((inner - pk * qk).abs() < 1e-12, "{inner} vs {}", pk * qk);
    }

    #[test]
    fn cholesky_identity_and_value_identity() {
        let mut rng = seeded(4);
        for seed in 0..5 {
            let rep = spectral_pair(20 + seed, 5, 4, 0.7);
            let c = random_coupling(&mut rng, 5, 4);
            let inner = gw_inner(&rep, &c).unwrap();
            assert!(inner >= 0.0);
            let chol = cholesky_inner(&rep, &c).unwrap();
            assert!((inner - chol).abs() < 1e-10 * inner.max(1.0));
            let sx = rep.source().component_mul(rep.source());
            let sy = rep.target().component_mul(rep.target());
            let constant = c.p().weights().dot(&(&sx * c.p().weights())) + c.q().weights().dot(&(&sy * c.q().weights()));
            let loss = gw_loss(&rep, &c).unwrap();
            assert!((loss - (constant - 2.0 * inner)).abs() < 1e-10);
        }
    }

    #[test]
    fn solver_trace_is_monotone_and_feasible() {
        let mut rng = seeded(5);
        for seed in 0..6 {
            let g = crate::generators::generate_erdos_renyi(9, 0.4, seed).unwrap();
            let h = crate::generators::generate_erdos_renyi(8, 0.4, seed + 50).unwrap();
            let p = NodeDistribution::uniform(9);
            let q = NodeDistribution::uniform(8);
            let init = random_coupling(&mut rng, 9, 8);
            let init = Coupling::new(init.into_matrix(), p.clone(), q.clone());
            // a random coupling with other marginals is rejected
            assert!(init.is_err());
            let start = crate::sampler::sample_couplings(&p, &q, 1, 20, seed).unwrap().pop().unwrap();
            for rep in [
                RepresentationPair::adjacency(&g, &h).unwrap(),
                RepresentationPair::spectral(&g, &h, LaplacianKind::Standard, 3.0).unwrap(),
            ] {
                let opts = SolverOptions::default().with_init(start.clone());
                let res = minimize_gw(&rep, &p, &q, &opts).unwrap();
                for w in res.loss_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "{} -> {}", w[0], w[1]);
                }
                assert!(res.coupling.marginal_error() < 1e-9);
                assert!(res.coupling.matrix().min() >= -1e-12);
                assert!((res.distance - res.loss.max(0.0).sqrt()).abs() < 1e-15);
                let direct = gw_loss(&rep, &res.coupling).unwrap();
                assert!((direct - res.loss).abs() < 1e-9 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn vertex_snap_gives_sparse_couplings() {
        for seed in 0..10 {
            let g = crate::generators::generate_erdos_renyi(10, 0.3, seed).unwrap();
            let h = crate::generators::generate_erdos_renyi(7, 0.5, seed + 100).unwrap();
            let p = NodeDistribution::uniform(10);
            let q = NodeDistribution::from_slice(&[1.0, 2.0, 1.0, 3.0, 1.0, 1.0, 2.0]).unwrap();
            let opts = SolverOptions::default().with_vertex_snap(true);
            let res = spec_gw_distance(&g, &p, &h, &q, 5.0, LaplacianKind::Standard, &opts).unwrap();
            assert!(res.coupling.support_size(1e-8) <= 10 + 7 - 1);
        }
    }

    #[test]
    fn identity_start_on_identical_graphs() {
        let g = crate::generators::generate_erdos_renyi(8, 0.5, 7).unwrap();
        let p = NodeDistribution::uniform(8);
        let id: Vec<usize> = (0..8).collect();
        let opts = SolverOptions::default().with_init(Coupling::permutation(&id, &p, &p).unwrap());
        let res = spec_gw_distance(&g, &p, &g, &p, 4.0, LaplacianKind::Standard, &opts).unwrap();
        assert!(res.loss.abs() < 1e-12);
        assert!(res.iterations <= 1);
        assert!(res.distance < 1e-6);
    }

    #[test]
    fn relabelled_edge_has_zero_distance() {
        let k2 = Graph::from_index_edges(2, [(0, 1)], false).unwrap();
        let swapped = k2.permuted(&[1, 0]).unwrap();
        let u = NodeDistribution::uniform(2);
        for t in [0.1, 1.0, 10.0] {
            let res = spec_gw_distance(&k2, &u, &swapped, &u, t, LaplacianKind::Standard, &SolverOptions::default()).unwrap();
            assert!(res.distance < 1e-8, "t={t}: {}", res.distance);
        }
    }

    #[test]
    fn distance_is_symmetric() {
        let g = crate::generators::generate_erdos_renyi(7, 0.5, 1).unwrap();
        let h = crate::generators::generate_erdos_renyi(6, 0.5, 2).unwrap();
        let p = NodeDistribution::uniform(7);
        let q = NodeDistribution::uniform(6);
        let opts = SolverOptions::default();
        let gh = spec_gw_distance(&g, &p, &h, &q, 2.0, LaplacianKind::Standard, &opts).unwrap();
        let hg = spec_gw_distance(&h, &q, &g, &p, 2.0, LaplacianKind::Standard, &opts).unwrap();
        assert!((gh.distance - hg.distance).abs() < 1e-6, "{} vs {}", gh.distance, hg.distance);
    }

    #[test]
    fn nonpositive_time_rejected() {
        let k2 = Graph::from_index_edges(2, [(0, 1)], false).unwrap();
        let u = NodeDistribution::uniform(2);
        assert!(spec_gw_distance(&k2, &u, &k2, &u, 0.0, LaplacianKind::Standard, &SolverOptions::default()).is_err());
    }
}
