//! Graph Laplacians, their eigendecompositions and heat kernels.
//!
//! Three Laplacians are supported:
//!
//! - `Standard`: `L = D - A` for undirected graphs.
//! - `Normalized`: `L = I - D^{-1/2} A D^{-1/2}` for undirected graphs without
//!   isolated nodes.
//! - `DirectedChung`: `L = I - (Ψ^{1/2} P Ψ^{-1/2} + Ψ^{-1/2} Pᵀ Ψ^{1/2}) / 2`
//!   for strongly connected digraphs, where `P` is the random-walk transition
//!   matrix (`P_ij = 1 / outdeg(i)` on edges) and `Ψ = diag(ψ)` holds its
//!   stationary distribution.
//!
//! All three are symmetric positive semidefinite, so the heat kernel
//! `K^t = exp(-tL) = Φ exp(-tΛ) Φᵀ` is symmetric positive definite.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

const SYMMETRY_TOL: f64 = 1e-8;
const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    Standard,
    Normalized,
    DirectedChung,
}

impl LaplacianKind {
    pub fn name(self) -> &'static str {
        match self {
            LaplacianKind::Standard => "standard",
            LaplacianKind::Normalized => "normalized",
            LaplacianKind::DirectedChung => "directed_chung",
        }
    }

    /// `DirectedChung` for digraphs, `Normalized` otherwise.
    pub fn default_for(g: &Graph) -> Self {
        if g.is_directed() {
            LaplacianKind::DirectedChung
        } else {
            LaplacianKind::Normalized
        }
    }
}

impl fmt::Display for LaplacianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(LaplacianKind::Standard),
            "normalized" => Ok(LaplacianKind::Normalized),
            "directed_chung" | "chung" => Ok(LaplacianKind::DirectedChung),
            other => Err(Error::InvalidParameter(format!("unknown laplacian kind '{other}'"))),
        }
    }
}

/// Builds the requested Laplacian of `g` as a dense matrix.
pub fn laplacian(g: &Graph, kind: LaplacianKind) -> Result<DMatrix<f64>> {
    let direction = if g.is_directed() { "directed" } else { "undirected" };
    let mismatch = || Error::KindMismatch {
        kind: kind.name(),
        direction,
    };
    let n = g.n();
    let a = g.adjacency();
    match kind {
        LaplacianKind::Standard => {
            if g.is_directed() {
                return Err(mismatch());
            }
            let deg = g.out_degrees();
            let mut l = -a;
            for i in 0..n {
                l[(i, i)] += deg[i] as f64;
            }
            Ok(l)
        }
        LaplacianKind::Normalized => {
            if g.is_directed() {
                return Err(mismatch());
            }
            let deg = g.out_degrees();
            if let Some(i) = deg.iter().position(|&d| d == 0) {
                return Err(Error::IsolatedNode(i));
            }
            let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
            let mut l = DMatrix::identity(n, n);
            for i in 0..n {
                for j in 0..n {
                    if a[(i, j)] != 0.0 {
                        l[(i, j)] -= inv_sqrt[i] * a[(i, j)] * inv_sqrt[j];
                    }
                }
            }
            Ok(l)
        }
        LaplacianKind::DirectedChung => {
            if !g.is_directed() {
                return Err(mismatch());
            }
            if !g.is_strongly_connected() {
                return Err(Error::NotStronglyConnected);
            }
            let p = transition_matrix(g);
            let psi = perron_vector(&p)?;
            let s: Vec<f64> = psi.iter().map(|x| x.sqrt()).collect();
            // M = Ψ^{1/2} P Ψ^{-1/2}; L = I - (M + Mᵀ)/2
            let mut l = DMatrix::identity(n, n);
            for i in 0..n {
                for j in 0..n {
                    let m_ij = s[i] * p[(i, j)] / s[j];
                    let m_ji = s[j] * p[(j, i)] / s[i];
                    l[(i, j)] -= 0.5 * (m_ij + m_ji);
                }
            }
            Ok(l)
        }
    }
}

/// Row-stochastic random-walk matrix, `P_ij = 1 / outdeg(i)` for each edge.
pub fn transition_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let deg = g.out_degrees();
    let mut p = DMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        p[(i, j)] = 1.0 / deg[i] as f64;
        if !g.is_directed() {
            p[(j, i)] = 1.0 / deg[j] as f64;
        }
    }
    p
}

/// Positive left Perron eigenvector of a row-stochastic matrix, normalized to
/// sum 1.
///
/// Power iteration runs on the lazy chain `(I + P) / 2`, which has the same
/// stationary distribution but no periodicity. If it has not converged within
/// the iteration cap the vector is obtained from a direct solve instead.
pub fn perron_vector(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let pt = p.transpose();
    let mut psi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..PERRON_MAX_ITERS {
        let mut next = (&pt * &psi + &psi) * 0.5;
        let total = next.sum();
        next /= total;
        let delta = (&next - &psi).amax();
        psi = next;
        if delta < PERRON_TOL {
            return Ok(psi);
        }
    }
    perron_direct(p)
}

fn perron_direct(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    // (Pᵀ - I) ψ = 0 with the last equation replaced by Σ ψ = 1.
    let n = p.nrows();
    let mut m = p.transpose() - DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    let psi = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Perron vector solve is singular".into()))?;
    if psi.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Numerical("Perron vector has non-positive entries".into()));
    }
    Ok(psi)
}

/// Eigendecomposition `L = Φ Λ Φᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `K^t = Φ exp(-tΛ) Φᵀ`. `t = 0` yields the identity.
    pub fn heat_kernel(&self, t: f64) -> Result<HeatKernel> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "diffusion time must be finite and nonnegative, got {t}"
            )));
        }
        let n = self.len();
        if t == 0.0 {
            return Ok(HeatKernel {
                matrix: DMatrix::identity(n, n),
                time: t,
            });
        }
        let weights = self.eigenvalues.map(|l| (-t * l).exp());
        Ok(HeatKernel {
            matrix: self.spectral_sum(&weights),
            time: t,
        })
    }

    /// `Σ_j w_j φ_j φ_jᵀ`, symmetrized.
    pub fn spectral_sum(&self, weights: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= weights[j];
        }
        let k = &scaled * self.eigenvectors.transpose();
        (&k + k.transpose()) * 0.5
    }
}

/// Computes the spectrum of a symmetric matrix with ascending eigenvalues.
///
/// Each eigenvector is signed so that its largest-magnitude entry is positive,
/// ties going to the lowest index.
pub fn eigendecompose(l: &DMatrix<f64>) -> Result<Spectrum> {
    if !l.is_square() {
        return Err(Error::NotSquare(l.nrows(), l.ncols()));
    }
    let asym = (l - l.transpose()).amax();
    if asym > SYMMETRY_TOL * l.amax().max(1.0) {
        return Err(Error::Asymmetric(asym));
    }
    if l.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let n = l.nrows();
    let sym = (l + l.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        let max = v.amax();
        let lead = v.iter().position(|x| x.abs() >= max - 1e-12 * max.max(1.0)).unwrap_or(0);
        if v[lead] < 0.0 {
            v = -v;
        }
        eigenvectors.set_column(dst, &v);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Heat kernel `K^t` of a graph Laplacian at diffusion time `t`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    matrix: DMatrix<f64>,
    time: f64,
}

impl HeatKernel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// Convenience: Laplacian, spectrum and heat kernel of `g` in one call.
pub fn graph_heat_kernel(g: &Graph, kind: LaplacianKind, t: f64) -> Result<HeatKernel> {
    eigendecompose(&laplacian(g, kind)?)?.heat_kernel(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> Graph {
        Graph::from_index_edges(2, [(0, 1)], false).unwrap()
    }

    fn path(n: usize) -> Graph {
        Graph::from_index_edges(n, (0..n - 1).map(|i| (i, i + 1)), false).unwrap()
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let d = (a - b).amax();
        assert!(d < tol, "max deviation {d:e}\n{a}\n{b}");
    }

    #[test]
    fn k2_standard_and_normalized() {
        let want = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_close(&laplacian(&k2(), LaplacianKind::Standard).unwrap(), &want, 1e-15);
        assert_close(&laplacian(&k2(), LaplacianKind::Normalized).unwrap(), &want, 1e-15);
    }

    #[test]
    fn directed_two_cycle_chung() {
        let g = Graph::from_index_edges(2, [(0, 1), (1, 0)], true).unwrap();
        let psi = perron_vector(&transition_matrix(&g)).unwrap();
        assert!((psi[0] - 0.5).abs() < 1e-12 && (psi[1] - 0.5).abs() < 1e-12);
        let l = laplacian(&g, LaplacianKind::DirectedChung).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_close(&l, &want, 1e-12);
    }

    #[test]
    fn periodic_chain_perron_vector() {
        // directed 4-cycle with a chord; stationary distribution checked by ψᵀP = ψᵀ
        let g = Graph::from_index_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], true).unwrap();
        let p = transition_matrix(&g);
        let psi = perron_vector(&p).unwrap();
        let back = p.transpose() * &psi;
        assert!((back - &psi).amax() < 1e-10);
        assert!((psi.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kind_errors() {
        let d = Graph::from_index_edges(2, [(0, 1)], true).unwrap();
        assert!(matches!(laplacian(&d, LaplacianKind::Standard), Err(Error::KindMismatch { .. })));
        assert!(matches!(laplacian(&d, LaplacianKind::DirectedChung), Err(Error::NotStronglyConnected)));
        assert!(matches!(laplacian(&k2(), LaplacianKind::DirectedChung), Err(Error::KindMismatch { .. })));
        let iso = Graph::from_index_edges(3, [(0, 1)], false).unwrap();
        assert!(matches!(laplacian(&iso, LaplacianKind::Normalized), Err(Error::IsolatedNode(2))));
    }

    #[test]
    fn k2_spectrum_closed_form() {
        let s = eigendecompose(&laplacian(&k2(), LaplacianKind::Standard).unwrap()).unwrap();
        assert!(s.eigenvalues()[0].abs() < 1e-14);
        assert!((s.eigenvalues()[1] - 2.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v = s.eigenvectors();
        assert!((v[(0, 0)] - r).abs() < 1e-14 && (v[(1, 0)] - r).abs() < 1e-14);
        // [1, -1]/√2 with the lead (index 0, tie) made positive
        assert!((v[(0, 1)] - r).abs() < 1e-14 && (v[(1, 1)] + r).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_spectrum() {
        let s = eigendecompose(&DMatrix::zeros(3, 3)).unwrap();
        assert!(s.eigenvalues().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eigendecompose(&m), Err(Error::Asymmetric(_))));
    }

    /// Characteristic polynomial coefficients via Faddeev-LeVerrier, so that
    /// det(xI - M) = Σ c_k x^k.
    fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
        let n = m.nrows();
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        let mut mk = DMatrix::<f64>::zeros(n, n);
        let id = DMatrix::<f64>::identity(n, n);
        for k in 1..=n {
            mk = m * &mk + &id * c[n - k + 1];
            c[n - k] = -(m * &mk).trace() / k as f64;
        }
        c
    }

    fn poly_roots_by_bisection(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let eval = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = lo;
        let mut f0 = eval(x0);
        for s in 1..=steps {
            let x1 = lo + s as f64 * h;
            let f1 = eval(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut a, mut b) = (x0, x1);
                for _ in 0..100 {
                    let mid = 0.5 * (a + b);
                    if eval(a) * eval(mid) <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    #[test]
    fn path4_spectrum_matches_characteristic_polynomial() {
        let l = laplacian(&path(4), LaplacianKind::Standard).unwrap();
        let s = eigendecompose(&l).unwrap();
        let roots = poly_roots_by_bisection(&char_poly(&l), -0.5, 4.5);
        assert_eq!(roots.len(), 4);
        for (k, (&ev, root)) in s.eigenvalues().iter().zip(&roots).enumerate() {
            let closed = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 4.0).cos();
            assert!((ev - root).abs() < 1e-9, "{ev} vs {root}");
            assert!((ev - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_invariants_on_random_laplacian() {
        let g = Graph::from_index_edges(
            6,
            [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (1, 4)],
            false,
        )
        .unwrap();
        for kind in [LaplacianKind::Standard, LaplacianKind::Normalized] {
            let l = laplacian(&g, kind).unwrap();
            let s = eigendecompose(&l).unwrap();
            let phi = s.eigenvectors();
            let n = g.n();
            assert!((phi.transpose() * phi - DMatrix::identity(n, n)).amax() < 1e-8);
            let lam = DMatrix::from_diagonal(s.eigenvalues());
            assert!((&l * phi - phi * lam).amax() < 1e-8);
            assert!(s.eigenvalues().iter().all(|&x| x > -1e-10));
            assert!(s.eigenvalues()[0].abs() < 1e-10);
            assert!(s.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn heat_kernel_at_zero_is_identity() {
        let s = eigendecompose(&laplacian(&path(5), LaplacianKind::Standard).unwrap()).unwrap();
        assert_eq!(s.heat_kernel(0.0).unwrap().matrix(), &DMatrix::identity(5, 5));
        assert!(s.heat_kernel(-1.0).is_err());
    }

    #[test]
    fn k2_heat_kernel_closed_form() {
        let s = eigendecompose(&laplacian(&k2(), LaplacianKind::Standard).unwrap()).unwrap();
        for t in [0.1f64, 1.0, 3.7] {
            let e = (-2.0 * t).exp();
            let want = DMatrix::from_row_slice(2, 2, &[(1.0 + e) / 2.0, (1.0 - e) / 2.0, (1.0 - e) / 2.0, (1.0 + e) / 2.0]);
            assert_close(s.heat_kernel(t).unwrap().matrix(), &want, 1e-14);
        }
    }

    #[test]
    fn heat_kernel_large_time_limit() {
        let s = eigendecompose(&laplacian(&path(5), LaplacianKind::Standard).unwrap()).unwrap();
        let k = s.heat_kernel(1e3).unwrap();
        assert!(k.matrix().iter().all(|&x| (x - 0.2).abs() < 1e-6));
    }

    #[test]
    fn heat_kernel_trace_and_psd() {
        let s = eigendecompose(&laplacian(&path(6), LaplacianKind::Normalized).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for t in [0.5, 1.0, 2.0, 5.0] {
            let k = s.heat_kernel(t).unwrap();
            let tr: f64 = s.eigenvalues().iter().map(|l| (-t * l).exp()).sum();
            assert!((k.matrix().trace() - tr).abs() < 1e-8);
            assert!(tr <= prev);
            prev = tr;
            let ks = eigendecompose(k.matrix()).unwrap();
            assert!(ks.eigenvalues().iter().all(|&x| x >= -1e-10));
        }
    }

    #[test]
    fn chung_laplacian_symmetric_psd() {
        let g = Graph::from_index_edges(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2), (1, 3)], true).unwrap();
        let l = laplacian(&g, LaplacianKind::DirectedChung).unwrap();
        assert!((&l - l.transpose()).amax() < 1e-12);
        let s = eigendecompose(&l).unwrap();
        assert!(s.eigenvalues().iter().all(|&x| x > -1e-10));
        assert!(s.eigenvalues()[0].abs() < 1e-9);
    }
}
