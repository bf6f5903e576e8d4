//! Partition quality scores: Newman modularity and adjusted mutual information.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Newman modularity of a labelling. Directed graphs are scored on the
/// symmetrized adjacency `(A + Aᵀ) / 2`.
pub fn modularity(g: &Graph, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n().to_string(),
            got: labels.len().to_string(),
        });
    }
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    // Each undirected edge contributes weight 1 in both directions; each
    // directed edge contributes 1/2 in both directions after symmetrization.
    let w = if g.is_directed() { 0.5 } else { 1.0 };
    let mut strength = vec![0.0; g.n()];
    let mut inside: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (i, j) in g.edges() {
        strength[i] += w;
        strength[j] += w;
        total += 2.0 * w;
        if labels[i] == labels[j] {
            *inside.entry(labels[i]).or_default() += 2.0 * w;
        }
    }
    let mut degree_sum: BTreeMap<usize, f64> = BTreeMap::new();
    for (i, &s) in strength.iter().enumerate() {
        *degree_sum.entry(labels[i]).or_default() += s;
    }
    Ok(degree_sum
        .iter()
        .map(|(c, &d)| inside.get(c).copied().unwrap_or(0.0) / total - (d / total).powi(2))
        .sum())
}

/// Contingency table of two labellings with dense row/column indices.
fn contingency(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    let index = |labels: &[usize]| -> (Vec<usize>, usize) {
        let mut map = BTreeMap::new();
        for &l in labels {
            let next = map.len();
            map.entry(l).or_insert(next);
        }
        (labels.iter().map(|l| map[l]).collect(), map.len())
    };
    let (ia, ka) = index(a);
    let (ib, kb) = index(b);
    let mut table = vec![vec![0; kb]; ka];
    for (&x, &y) in ia.iter().zip(&ib) {
        table[x][y] += 1;
    }
    table
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Row and column totals of a contingency table.
fn marginals(table: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let rows = table.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..table.first().map_or(0, Vec::len))
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    (rows, cols)
}

// Terms are keyed on (min, max) of the marginal pair and summed in sorted
// order so that swapping the two labellings gives bit-identical results.
fn canonical_pairs(rows: &[usize], cols: &[usize], table: Option<&[Vec<usize>]>) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (i, &a) in rows.iter().enumerate() {
        for (j, &b) in cols.iter().enumerate() {
            let nij = table.map_or(0, |t| t[i][j]);
            out.push((a.min(b), a.max(b), nij));
        }
    }
    out.sort_unstable();
    out
}

pub fn mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len().to_string(),
            got: b.len().to_string(),
        });
    }
    let table = contingency(a, b);
    let (rows, cols) = marginals(&table);
    let n = a.len() as f64;
    let mut mi = 0.0;
    for (ra, cb, nij) in canonical_pairs(&rows, &cols, Some(&table)) {
        if nij > 0 {
            let nij = nij as f64;
            mi += nij / n * (n * nij / (ra as f64 * cb as f64)).ln();
        }
    }
    Ok(mi.max(0.0))
}

/// Expected mutual information under the permutation (hypergeometric) model.
fn expected_mutual_information(rows: &[usize], cols: &[usize], n: usize) -> f64 {
    let mut log_fact = vec![0.0; n + 1];
    for k in 1..=n {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }
    let nf = n as f64;
    let mut emi = 0.0;
    for (a, b, _) in canonical_pairs(rows, cols, None) {
        let lo = (a + b).saturating_sub(n).max(1);
        let hi = a.min(b);
        for nij in lo..=hi {
            let x = nij as f64;
            let term = x / nf * (nf * x / (a as f64 * b as f64)).ln();
            let log_p = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b]
                - log_fact[n]
                - log_fact[nij]
                - log_fact[a - nij]
                - log_fact[b - nij]
                - log_fact[n + nij - a - b];
            emi += term * log_p.exp();
        }
    }
    emi
}

/// Adjusted mutual information with max-entropy normalization:
/// `(MI - E[MI]) / (max(H(a), H(b)) - E[MI])`.
pub fn adjusted_mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len().to_string(),
            got: b.len().to_string(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter("labellings are empty".into()));
    }
    let table = contingency(a, b);
    let n = a.len();
    let (rows, cols) = marginals(&table);
    if rows.len() == cols.len() && (rows.len() == 1 || rows.len() == n) {
        return Ok(1.0);
    }
    let mi = mutual_information(a, b)?;
    let emi = expected_mutual_information(&rows, &cols, n);
    let h = entropy(&rows, n as f64).max(entropy(&cols, n as f64));
    let mut denom = h - emi;
    if denom < 0.0 {
        denom = denom.min(-f64::EPSILON);
    } else {
        denom = denom.max(f64::EPSILON);
    }
    Ok((mi - emi) / denom)
}
