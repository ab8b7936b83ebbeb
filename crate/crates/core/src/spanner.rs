//! Geometric t-spanners over sample points in the ℓ1 metric.
//!
//! A graph on the points is a t-spanner when every pair is joined by a path
//! no longer than `t` times the pair's ℓ1 distance.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::WeightedSample;

/// Slack allowed by [`verify_spanner`].
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub l: usize,
    pub w: f64,
}

/// Undirected weighted graph over sample indices with `i < l` on every edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpannerGraph {
    n: usize,
    edges: Vec<Edge>,
    stretch: f64,
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

impl SpannerGraph {
    /// Wraps an externally supplied edge list. Edges are normalized to
    /// `i < l`; self loops, duplicates and out-of-range vertices are
    /// rejected, and weights are recomputed from the points.
    pub fn from_edges(
        sample: &WeightedSample,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        stretch: f64,
    ) -> Result<Self> {
        let n = sample.len();
        let mut edges: Vec<Edge> = Vec::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self loop at {a}")));
            }
            let (i, l) = if a < b { (a, b) } else { (b, a) };
            edges.push(Edge {
                i,
                l,
                w: l1_distance(sample.point(i), sample.point(l)),
            });
        }
        edges.sort_by(|x, y| (x.i, x.l).cmp(&(y.i, y.l)));
        if let Some(w) = edges.windows(2).find(|w| (w[0].i, w[0].l) == (w[1].i, w[1].l)) {
            return Err(Error::InvalidParameter(format!(
                "duplicate edge ({}, {})",
                w[0].i, w[0].l
            )));
        }
        Ok(Self { n, edges, stretch })
    }

    /// Every pair of points joined directly.
    pub fn complete(sample: &WeightedSample) -> Self {
        let n = sample.len();
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for l in i + 1..n {
                edges.push(Edge {
                    i,
                    l,
                    w: l1_distance(sample.point(i), sample.point(l)),
                });
            }
        }
        Self {
            n,
            edges,
            stretch: 1.0,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    /// Edge list as `i,l,w` CSV rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# i,l,w\n");
        for e in &self.edges {
            writeln!(out, "{},{},{}", e.i, e.l, e.w).unwrap();
        }
        out
    }

    /// Parses `i,l[,w]` rows; weights, when present, must match the ℓ1
    /// distance of the endpoints to within `1e-12` relative.
    pub fn from_csv_str(text: &str, sample: &WeightedSample, stretch: f64) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut given = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse_err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            if fields.len() < 2 || fields.len() > 3 {
                return Err(parse_err(format!("expected i,l[,w], got {line:?}")));
            }
            let i: usize = fields[0].parse().map_err(|e| parse_err(format!("{e}")))?;
            let l: usize = fields[1].parse().map_err(|e| parse_err(format!("{e}")))?;
            if let Some(w) = fields.get(2) {
                let w: f64 = w.parse().map_err(|e| parse_err(format!("{e}")))?;
                given.push((i, l, w));
            }
            pairs.push((i, l));
        }
        let graph = Self::from_edges(sample, pairs, stretch)?;
        for (i, l, w) in given {
            if i < sample.len() && l < sample.len() {
                let exact = l1_distance(sample.point(i), sample.point(l));
                if (w - exact).abs() > 1e-12 * exact.max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "edge ({i}, {l}) weight {w} differs from l1 distance {exact}"
                    )));
                }
            }
        }
        Ok(graph)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.l, e.w));
            adj[e.l].push((e.i, e.w));
        }
        adj
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra from `src`, settling only vertices within `cutoff`. Calls
/// `settle(v, dist)` for every settled vertex, `src` included.
fn dijkstra(
    adj: &[Vec<(usize, f64)>],
    src: usize,
    cutoff: f64,
    dist: &mut [f64],
    touched: &mut Vec<usize>,
    mut settle: impl FnMut(usize, f64),
) {
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    touched.push(src);
    heap.push(Reverse((Dist(0.0), src)));
    while let Some(Reverse((Dist(du), u))) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        settle(u, du);
        for &(v, w) in &adj[u] {
            let nd = du + w;
            if nd <= cutoff && nd < dist[v] {
                if dist[v] == f64::INFINITY {
                    touched.push(v);
                }
                dist[v] = nd;
                heap.push(Reverse((Dist(nd), v)));
            }
        }
    }
    for &v in touched.iter() {
        dist[v] = f64::INFINITY;
    }
    touched.clear();
}

/// Greedy t-spanner: candidate pairs are visited by increasing ℓ1 distance
/// (ties by `(i, l)`) and an edge is added when the current graph distance
/// exceeds `t` times the pair distance.
///
/// Graph distances found by earlier searches are cached as upper bounds so
/// most pairs are accepted without a search.
pub fn build_greedy_spanner(sample: &WeightedSample, t: f64) -> Result<SpannerGraph> {
    if !(t >= 1.0) {
        return Err(Error::InvalidParameter(format!("stretch must be >= 1, got {t}")));
    }
    let n = sample.len();
    let mut pairs: Vec<(f64, u32, u32)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for l in i + 1..n {
            pairs.push((l1_distance(sample.point(i), sample.point(l)), i as u32, l as u32));
        }
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    // bound[i * n + l]: length of some path between i and l found so far
    let mut bound = vec![f64::INFINITY; n * n];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    let mut dist = vec![f64::INFINITY; n];
    let mut touched = Vec::new();
    for (w, i, l) in pairs {
        let (i, l) = (i as usize, l as usize);
        let limit = t * w;
        if bound[i * n + l] <= limit {
            continue;
        }
        let mut reached = f64::INFINITY;
        dijkstra(&adj, i, limit, &mut dist, &mut touched, |v, dv| {
            if dv < bound[i * n + v] {
                bound[i * n + v] = dv;
                bound[v * n + i] = dv;
            }
            if v == l {
                reached = dv;
            }
        });
        if reached <= limit {
            continue;
        }
        adj[i].push((l, w));
        adj[l].push((i, w));
        bound[i * n + l] = w;
        bound[l * n + i] = w;
        edges.push(Edge { i, l, w });
    }
    edges.sort_by(|a, b| (a.i, a.l).cmp(&(b.i, b.l)));
    Ok(SpannerGraph {
        n,
        edges,
        stretch: t,
    })
}

/// Edges between sort-adjacent points of a 1-D sample: `n - 1` edges
/// forming a t-spanner for every `t ≥ 1`.
pub fn build_sorted_1d_spanner(sample: &WeightedSample) -> Result<SpannerGraph> {
    if sample.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: sample.dim(),
        });
    }
    let x = sample.flat_points();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut edges: Vec<Edge> = order
        .windows(2)
        .map(|p| {
            let (i, l) = if p[0] < p[1] { (p[0], p[1]) } else { (p[1], p[0]) };
            Edge {
                i,
                l,
                w: (x[i] - x[l]).abs(),
            }
        })
        .collect();
    edges.sort_by(|a, b| (a.i, a.l).cmp(&(b.i, b.l)));
    Ok(SpannerGraph {
        n: x.len(),
        edges,
        stretch: 1.0,
    })
}

/// Outcome of [`verify_spanner`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SpannerCheck {
    Ok,
    Violation {
        i: usize,
        l: usize,
        path: f64,
        direct: f64,
    },
}

impl SpannerCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, SpannerCheck::Ok)
    }
}

/// All-pairs shortest paths (one Dijkstra per source, run in parallel).
/// Reports the lexicographically first pair `(i, l)` whose path distance
/// exceeds `t · ‖x_i - x_l‖₁ + 1e-9`.
pub fn verify_spanner(graph: &SpannerGraph, sample: &WeightedSample, t: f64) -> SpannerCheck {
    let n = sample.len();
    if graph.n != n {
        return SpannerCheck::Violation {
            i: 0,
            l: 0,
            path: f64::INFINITY,
            direct: 0.0,
        };
    }
    let adj = graph.adjacency();
    let first = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut from_i = vec![f64::INFINITY; n];
            let mut dist = vec![f64::INFINITY; n];
            let mut touched = Vec::new();
            dijkstra(&adj, i, f64::INFINITY, &mut dist, &mut touched, |v, dv| {
                from_i[v] = dv;
            });
            (i + 1..n).find_map(|l| {
                let direct = l1_distance(sample.point(i), sample.point(l));
                let path = from_i[l];
                (path > t * direct + VERIFY_TOL).then_some(SpannerCheck::Violation {
                    i,
                    l,
                    path,
                    direct,
                })
            })
        })
        .find_first(|v| v.is_some())
        .flatten();
    first.unwrap_or(SpannerCheck::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[&[f64]]) -> WeightedSample {
        WeightedSample::uniform(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn pairs(g: &SpannerGraph) -> Vec<(usize, usize, f64)> {
        g.edges().iter().map(|e| (e.i, e.l, e.w)).collect()
    }

    #[test]
    fn greedy_on_a_line() {
        let s = pts(&[&[0.0], &[1.0], &[3.0]]);
        let g = build_greedy_spanner(&s, 2.0).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1, 1.0), (1, 2, 2.0)]);
    }

    #[test]
    fn greedy_on_a_corner() {
        let s = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let g = build_greedy_spanner(&s, 2.0).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1, 1.0), (0, 2, 1.0)]);
        // path 1 -> 0 -> 2 has length 2 = ‖x_1 - x_2‖₁, so even t = 1 skips the pair
        let g1 = build_greedy_spanner(&s, 1.0).unwrap();
        assert_eq!(g1.edges().len(), 2);
    }

    #[test]
    fn single_point_has_no_edges() {
        let s = pts(&[&[4.0, 2.0]]);
        assert!(build_greedy_spanner(&s, 2.0).unwrap().edges().is_empty());
        assert!(build_sorted_1d_spanner(&pts(&[&[5.0]])).unwrap().edges().is_empty());
    }

    #[test]
    fn stretch_below_one_rejected() {
        assert!(build_greedy_spanner(&pts(&[&[0.0]]), 0.5).is_err());
        assert!(build_greedy_spanner(&pts(&[&[0.0]]), f64::NAN).is_err());
    }

    #[test]
    fn sorted_1d() {
        let g = build_sorted_1d_spanner(&pts(&[&[3.0], &[0.0], &[1.0]])).unwrap();
        assert_eq!(pairs(&g), vec![(0, 2, 2.0), (1, 2, 1.0)]);
        let g = build_sorted_1d_spanner(&pts(&[&[0.0], &[10.0]])).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1, 10.0)]);
        assert!(build_sorted_1d_spanner(&pts(&[&[0.0, 1.0]])).is_err());
    }

    #[test]
    fn verify_detects_disconnection() {
        let s = pts(&[&[0.0], &[1.0]]);
        let empty = SpannerGraph::from_edges(&s, [], 2.0).unwrap();
        assert!(matches!(
            verify_spanner(&empty, &s, 2.0),
            SpannerCheck::Violation { i: 0, l: 1, .. }
        ));
        assert!(verify_spanner(&SpannerGraph::complete(&s), &s, 1.0).is_ok());
    }

    #[test]
    fn from_edges_validation() {
        let s = pts(&[&[0.0], &[1.0], &[2.0]]);
        assert!(SpannerGraph::from_edges(&s, [(0, 0)], 2.0).is_err());
        assert!(SpannerGraph::from_edges(&s, [(0, 3)], 2.0).is_err());
        assert!(SpannerGraph::from_edges(&s, [(0, 1), (1, 0)], 2.0).is_err());
        let g = SpannerGraph::from_edges(&s, [(2, 1), (0, 1)], 2.0).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn csv_round_trip() {
        let s = pts(&[&[0.0, 0.5], &[1.0, 2.0], &[3.0, -1.0], &[0.25, 0.125]]);
        let g = build_greedy_spanner(&s, 2.0).unwrap();
        let back = SpannerGraph::from_csv_str(&g.to_csv(), &s, 2.0).unwrap();
        assert_eq!(g, back);
        assert!(SpannerGraph::from_csv_str("0,1,7.0\n", &s, 2.0).is_err());
    }
}
