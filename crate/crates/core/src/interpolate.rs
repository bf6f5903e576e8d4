//! Coupling blow-up to weighted-permutation form and interpolation frames
//! between two matched graph layouts.

use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::measures::Coupling;
use crate::rng::seeded;

/// Entries below this fraction of the largest entry are dropped before splitting.
pub const BLOWUP_THRESHOLD: f64 = 1e-12;
pub const LAYOUT_ITERATIONS: usize = 200;
pub const DUMMY_JITTER: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupResult {
    /// Square, exactly one nonzero per row and per column.
    pub expanded_coupling: DMatrix<f64>,
    /// Expanded row `r` is a copy of original row `row_map[r]`.
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
    /// Expanded row `r` is matched to expanded column `assignment[r]`.
    pub assignment: Vec<usize>,
    pub expanded_p: Vec<f64>,
    pub expanded_q: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl BlowupResult {
    /// Sums the expanded entries over provenance fibers.
    pub fn aggregate(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (r, &c) in self.assignment.iter().enumerate() {
            out[(self.row_map[r], self.col_map[c])] += self.expanded_coupling[(r, c)];
        }
        out
    }

    pub fn len(&self) -> usize {
        self.row_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_map.is_empty()
    }
}

/// Splits every row with several nonzeros into one dummy row per nonzero,
/// then does the same for columns. Rows are numbered by the nonzeros in
/// row-major order, columns in column-major order.
pub fn blowup_coupling(c: &Coupling) -> Result<BlowupResult> {
    blowup_matrix(c.matrix())
}

/// [`blowup_coupling`] on a bare nonnegative matrix.
pub fn blowup_matrix(m: &DMatrix<f64>) -> Result<BlowupResult> {
    let cutoff = BLOWUP_THRESHOLD * m.max();
    let keep = |v: f64| v > 0.0 && v >= cutoff;
    let mut row_major = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if keep(m[(i, j)]) {
                row_major.push((i, j));
            }
        }
    }
    if row_major.is_empty() {
        return Err(Error::EmptyCoupling);
    }
    let mut col_major: Vec<usize> = (0..row_major.len()).collect();
    col_major.sort_by_key(|&r| (row_major[r].1, row_major[r].0));
    let mut assignment = vec![0; row_major.len()];
    for (c, &r) in col_major.iter().enumerate() {
        assignment[r] = c;
    }
    let k = row_major.len();
    let mut expanded = DMatrix::zeros(k, k);
    let mut expanded_p = vec![0.0; k];
    let mut expanded_q = vec![0.0; k];
    for (r, &(i, j)) in row_major.iter().enumerate() {
        let v = m[(i, j)];
        expanded[(r, assignment[r])] = v;
        expanded_p[r] = v;
        expanded_q[assignment[r]] = v;
    }
    Ok(BlowupResult {
        expanded_coupling: expanded,
        row_map: row_major.iter().map(|&(i, _)| i).collect(),
        col_map: col_major.iter().map(|&r| row_major[r].1).collect(),
        assignment,
        expanded_p,
        expanded_q,
        rows: m.nrows(),
        cols: m.ncols(),
    })
}

/// Fruchterman–Reingold layout in the unit square from a seeded uniform start.
pub fn force_layout(g: &Graph, iterations: usize, seed: u64) -> Vec<Vector2<f64>> {
    let n = g.n();
    let mut rng = seeded(seed);
    let mut pos: Vec<Vector2<f64>> = (0..n).map(|_| Vector2::new(rng.random(), rng.random())).collect();
    if n < 2 {
        return pos;
    }
    let k = (1.0 / n as f64).sqrt();
    let t0 = 0.1;
    for it in 0..iterations {
        let temp = t0 * (1.0 - it as f64 / iterations as f64);
        let mut disp = vec![Vector2::zeros(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let delta = pos[i] - pos[j];
                let d = delta.norm().max(1e-9);
                let f = delta / d * (k * k / d);
                disp[i] += f;
                disp[j] -= f;
            }
        }
        for (i, j) in g.edges() {
            if i == j {
                continue;
            }
            let delta = pos[i] - pos[j];
            let d = delta.norm().max(1e-9);
            let f = delta / d * (d * d / k);
            disp[i] -= f;
            disp[j] += f;
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = d.norm();
            if len > 0.0 {
                *p += d / len * len.min(temp);
            }
        }
    }
    pos
}

/// Similarity transform `y ↦ s R y + b` (R orthogonal, reflections allowed)
/// minimizing `Σ |s R y_i + b − x_i|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Matrix2<f64>,
    pub translation: Vector2<f64>,
}

impl Similarity {
    pub fn apply(&self, y: &Vector2<f64>) -> Vector2<f64> {
        self.rotation * y * self.scale + self.translation
    }
}

pub fn procrustes(x: &[Vector2<f64>], y: &[Vector2<f64>]) -> Result<Similarity> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} nonempty", x.len()),
            got: y.len().to_string(),
        });
    }
    let n = x.len() as f64;
    let xm = x.iter().sum::<Vector2<f64>>() / n;
    let ym = y.iter().sum::<Vector2<f64>>() / n;
    let mut h = Matrix2::zeros();
    let mut var_y = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let (xc, yc) = (xi - xm, yi - ym);
        h += yc * xc.transpose();
        var_y += yc.norm_squared();
    }
    if var_y == 0.0 {
        return Ok(Similarity {
            scale: 1.0,
            rotation: Matrix2::identity(),
            translation: xm - ym,
        });
    }
    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("Procrustes SVD failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("Procrustes SVD failed".into()))?;
    let rotation = v_t.transpose() * u.transpose();
    let scale = svd.singular_values.sum() / var_y;
    Ok(Similarity {
        scale,
        rotation,
        translation: xm - rotation * ym * scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(rename = "nodes")]
    pub positions: Vec<[f64; 2]>,
    /// `(i, j, opacity)` with opacity in `(0, 1]`.
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSet {
    pub frames: Vec<Frame>,
}

/// Copies of each node sit on a circle of radius [`DUMMY_JITTER`] around it;
/// nodes with a single copy stay put.
fn expand_positions(base: &[Vector2<f64>], map: &[usize]) -> Vec<Vector2<f64>> {
    let mut counts = vec![0usize; base.len()];
    for &v in map {
        counts[v] += 1;
    }
    let mut seen = vec![0usize; base.len()];
    map.iter()
        .map(|&v| {
            let c = seen[v];
            seen[v] += 1;
            if counts[v] == 1 {
                base[v]
            } else {
                let angle = std::f64::consts::TAU * c as f64 / counts[v] as f64;
                base[v] + Vector2::new(angle.cos(), angle.sin()) * DUMMY_JITTER
            }
        })
        .collect()
}

/// Expanded edge list over the frame node set `0..N` (frame node `r` is
/// expanded row `r`), with `node_of(r)` giving the original graph node.
fn expanded_edges(g: &Graph, n: usize, node_of: impl Fn(usize) -> usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..n {
        let start = if g.is_directed() { 0 } else { r + 1 };
        for s in start..n {
            if r != s && g.has_edge(node_of(r), node_of(s)) {
                out.push((r, s));
            }
        }
    }
    out
}

/// Frames interpolating from the layout of `g` to the aligned layout of `h`
/// along the blown-up matching. Source-only edges fade out linearly,
/// target-only edges fade in, shared edges stay opaque.
pub fn interpolation_frames(g: &Graph, h: &Graph, c: &Coupling, n_frames: usize, seed: u64) -> Result<Vec<Frame>> {
    if n_frames < 2 {
        return Err(Error::InvalidParameter("n_frames must be >= 2".into()));
    }
    if c.rows() != g.n() || c.cols() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} x {}", g.n(), h.n()),
            got: format!("{} x {}", c.rows(), c.cols()),
        });
    }
    let blow = blowup_coupling(c)?;
    let n = blow.len();
    let src = expand_positions(&force_layout(g, LAYOUT_ITERATIONS, seed), &blow.row_map);
    let tgt_cols = expand_positions(&force_layout(h, LAYOUT_ITERATIONS, seed), &blow.col_map);
    let tgt: Vec<Vector2<f64>> = blow.assignment.iter().map(|&col| tgt_cols[col]).collect();
    let align = procrustes(&src, &tgt)?;
    let tgt: Vec<Vector2<f64>> = tgt.iter().map(|y| align.apply(y)).collect();

    let source_edges = expanded_edges(g, n, |r| blow.row_map[r]);
    let target_edges = expanded_edges(h, n, |r| blow.col_map[blow.assignment[r]]);
    let mut union: Vec<(usize, usize, bool, bool)> = Vec::new();
    {
        let (mut a, mut b) = (0, 0);
        while a < source_edges.len() || b < target_edges.len() {
            match (source_edges.get(a), target_edges.get(b)) {
                (Some(&e), Some(&f)) if e == f => {
                    union.push((e.0, e.1, true, true));
                    a += 1;
                    b += 1;
                }
                (Some(&e), Some(&f)) if e < f => {
                    union.push((e.0, e.1, true, false));
                    a += 1;
                }
                (Some(&e), None) => {
                    union.push((e.0, e.1, true, false));
                    a += 1;
                }
                (_, Some(&f)) => {
                    union.push((f.0, f.1, false, true));
                    b += 1;
                }
                (None, None) => unreachable!(),
            }
        }
    }

    Ok((0..n_frames)
        .map(|k| {
            let t = k as f64 / (n_frames - 1) as f64;
            let positions = src
                .iter()
                .zip(&tgt)
                .map(|(x, y)| {
                    let p = x * (1.0 - t) + y * t;
                    [p.x, p.y]
                })
                .collect();
            let edges = union
                .iter()
                .filter_map(|&(i, j, in_src, in_tgt)| {
                    let opacity = match (in_src, in_tgt) {
                        (true, true) => 1.0,
                        (true, false) => 1.0 - t,
                        _ => t,
                    };
                    (opacity > 0.0).then_some((i, j, opacity))
                })
                .collect();
            Frame {
                time: t,
                positions,
                edges,
            }
        })
        .collect())
}

/// One frame as a standalone SVG document.
pub fn frame_svg(frame: &Frame, size: f64) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &frame.positions {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let margin = 0.05 * size;
    let map = |p: &[f64; 2]| {
        (
            margin + (p[0] - lo[0]) / span * (size - 2.0 * margin),
            margin + (p[1] - lo[1]) / span * (size - 2.0 * margin),
        )
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    for &(i, j, opacity) in &frame.edges {
        let (x1, y1) = map(&frame.positions[i]);
        let (x2, y2) = map(&frame.positions[j]);
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="black" stroke-opacity="{opacity:.4}"/>"#
        );
    }
    for p in &frame.positions {
        let (x, y) = map(p);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="steelblue"/>"#);
    }
    s.push_str("</svg>\n");
    s
}
