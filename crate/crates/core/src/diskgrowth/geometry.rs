//! Intrinsic distances, boundary visibility, the Fubini estimate and span.
//!
//! On segments everything is computed exactly in arclength. On surfaces the
//! intrinsic distance is the shortest path on the edge graph and measures are
//! lumped at vertices: a third of each adjacent triangle's area for `m_D`,
//! half of each adjacent boundary edge for `m_dD`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::Disk;

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // reversed: BinaryHeap pops the smallest distance first
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Edge graph in compressed adjacency form.
pub(crate) struct Graph {
    start: Vec<usize>,
    nbr: Vec<(usize, f64)>,
}

impl Graph {
    pub(crate) fn new(disk: &Disk) -> Self {
        let n = disk.vertex_count();
        let edges = disk.edges();
        let mut degree = vec![0usize; n + 1];
        for &(a, b) in &edges {
            degree[a + 1] += 1;
            degree[b + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let mut fill = degree.clone();
        let mut nbr = vec![(0, 0.0); 2 * edges.len()];
        for &(a, b) in &edges {
            let l = disk.edge_length(a, b);
            nbr[fill[a]] = (b, l);
            fill[a] += 1;
            nbr[fill[b]] = (a, l);
            fill[b] += 1;
        }
        Graph { start: degree, nbr }
    }

    fn len(&self) -> usize {
        self.start.len() - 1
    }

    fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.nbr[self.start[v]..self.start[v + 1]]
    }
}

/// Dijkstra with reusable buffers, truncated at a radius.
pub(crate) struct Search {
    dist: Vec<f64>,
    settled: Vec<usize>,
    heap: BinaryHeap<Item>,
}

impl Search {
    pub(crate) fn new(n: usize) -> Self {
        Search { dist: vec![f64::INFINITY; n], settled: Vec::new(), heap: BinaryHeap::new() }
    }

    /// Settles every vertex within `radius` of the sources; returns them with their distances.
    pub(crate) fn run(&mut self, g: &Graph, sources: &[usize], radius: f64) -> Vec<(usize, f64)> {
        for &v in &self.settled {
            self.dist[v] = f64::INFINITY;
        }
        self.settled.clear();
        self.heap.clear();
        let mut out = Vec::new();
        for &s in sources {
            if self.dist[s] > 0.0 {
                self.dist[s] = 0.0;
                self.settled.push(s);
                self.heap.push(Item(0.0, s));
            }
        }
        while let Some(Item(d, v)) = self.heap.pop() {
            if d > self.dist[v] {
                continue;
            }
            out.push((v, d));
            for &(w, l) in g.neighbors(v) {
                let nd = d + l;
                if nd <= radius && nd < self.dist[w] {
                    if self.dist[w].is_infinite() {
                        self.settled.push(w);
                    }
                    self.dist[w] = nd;
                    self.heap.push(Item(nd, w));
                }
            }
        }
        out
    }
}

/// Cumulative arclength along a polyline.
fn arclength(disk: &Disk) -> Vec<f64> {
    let mut s = Vec::with_capacity(disk.vertex_count());
    let mut acc = 0.0;
    s.push(0.0);
    for i in 1..disk.vertex_count() {
        acc += disk.edge_length(i - 1, i);
        s.push(acc);
    }
    s
}

fn full_distances(disk: &Disk, sources: &[usize]) -> Vec<f64> {
    let g = Graph::new(disk);
    let mut out = vec![f64::INFINITY; g.len()];
    for (v, d) in Search::new(g.len()).run(&g, sources, f64::INFINITY) {
        out[v] = d;
    }
    out
}

/// Intrinsic distance from `source` to every vertex.
pub fn intrinsic_distances(disk: &Disk, source: usize) -> Vec<f64> {
    if disk.k() == 1 {
        let s = arclength(disk);
        s.iter().map(|x| (x - s[source]).abs()).collect()
    } else {
        full_distances(disk, &[source])
    }
}

/// Intrinsic distance from every vertex to the boundary.
pub fn distance_to_boundary(disk: &Disk) -> Vec<f64> {
    if disk.k() == 1 {
        let s = arclength(disk);
        let total = *s.last().unwrap();
        s.iter().map(|x| x.min(total - x)).collect()
    } else {
        full_distances(disk, &disk.boundary_vertices())
    }
}

/// Lumped `m_D` weight of every vertex.
pub fn vertex_weights(disk: &Disk) -> Vec<f64> {
    let mut w = vec![0.0; disk.vertex_count()];
    if disk.k() == 1 {
        for (a, b) in disk.edges() {
            let l = 0.5 * disk.edge_length(a, b);
            w[a] += l;
            w[b] += l;
        }
    } else {
        for t in disk.triangles() {
            let a = disk.triangle_area(t) / 3.0;
            for &v in t {
                w[v] += a;
            }
        }
    }
    w
}

/// Boundary vertices with their lumped `m_dD` weight.
fn boundary_weights(disk: &Disk) -> Vec<(usize, f64)> {
    if disk.k() == 1 {
        return vec![(0, 1.0), (disk.vertex_count() - 1, 1.0)];
    }
    let mut w = std::collections::BTreeMap::new();
    for (a, b) in disk.boundary_edges() {
        let l = 0.5 * disk.edge_length(a, b);
        *w.entry(a).or_insert(0.0) += l;
        *w.entry(b).or_insert(0.0) += l;
    }
    w.into_iter().collect()
}

/// Measure of `[c - delta, c + delta]` inside `[0, total]`.
fn window(c: f64, delta: f64, total: f64) -> f64 {
    ((c + delta).min(total) - (c - delta).max(0.0)).max(0.0)
}

/// Piecewise-constant visibility on a segment: `(interval length, theta)` pieces.
fn segment_pieces(total: f64, delta: f64) -> Vec<(f64, f64)> {
    let ends = [0.0, total];
    let mut cuts = vec![0.0, total];
    for e in ends {
        for c in [e - delta, e + delta] {
            if c > 0.0 && c < total {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let theta = ends.iter().filter(|&&e| (mid - e).abs() <= delta).count() as f64;
            (w[1] - w[0], theta)
        })
        .collect()
}

/// Per-boundary-vertex data from truncated searches: `theta` at every vertex
/// and `m_D(B_delta(y))` for every boundary vertex `y`.
fn surface_visibility(disk: &Disk, delta: f64) -> (Vec<f64>, Vec<(usize, f64, f64)>) {
    let g = Graph::new(disk);
    let w = vertex_weights(disk);
    let mut search = Search::new(g.len());
    let mut theta = vec![0.0; g.len()];
    let mut balls = Vec::new();
    for (b, lb) in boundary_weights(disk) {
        let mut ball = 0.0;
        for (v, _) in search.run(&g, &[b], delta) {
            theta[v] += lb;
            ball += w[v];
        }
        balls.push((b, lb, ball));
    }
    (theta, balls)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryVisibility {
    pub delta: f64,
    pub h: f64,
    /// `theta` at every vertex.
    pub values: Vec<f64>,
    pub boundary_measure: f64,
    pub volume: f64,
    /// `m_D`-fraction of points with `theta < h`.
    pub good_fraction: f64,
    /// `m_D` of the complement of the good set.
    pub bad_mass: f64,
}

/// Boundary measure seen within intrinsic distance `delta`, and the good set for threshold `h`.
pub fn theta(disk: &Disk, delta: f64, h: f64) -> BoundaryVisibility {
    assert!(delta > 0.0, "delta must be positive");
    let boundary_measure = disk.boundary_measure();
    if disk.k() == 1 {
        let s = arclength(disk);
        let total = *s.last().unwrap();
        let values = s
            .iter()
            .map(|x| [0.0, total].iter().filter(|&&e| (x - e).abs() <= delta).count() as f64)
            .collect();
        let bad_mass: f64 = segment_pieces(total, delta).iter().filter(|p| p.1 >= h).map(|p| p.0).sum();
        return BoundaryVisibility {
            delta,
            h,
            values,
            boundary_measure,
            volume: total,
            good_fraction: 1.0 - bad_mass / total,
            bad_mass,
        };
    }
    let (values, _) = surface_visibility(disk, delta);
    let w = vertex_weights(disk);
    let volume: f64 = w.iter().sum();
    let bad_mass: f64 = values.iter().zip(&w).filter(|(t, _)| **t >= h).map(|(_, w)| w).sum();
    BoundaryVisibility { delta, h, values, boundary_measure, volume, good_fraction: 1.0 - bad_mass / volume, bad_mass }
}

#[derive(Clone, Debug, Serialize)]
pub struct FubiniCheck {
    pub delta: f64,
    /// `int theta dm_D`
    pub lhs: f64,
    /// `int m_D(B_delta(y)) dm_dD(y)`
    pub identity_rhs: f64,
    /// `K = max_y m_D(B_delta(y))` over boundary points.
    pub k_bound: f64,
    pub boundary_measure: f64,
    /// `K |m_dD|`
    pub rhs_bound: f64,
    pub relative_gap: f64,
    pub identity_holds: bool,
    pub bound_holds: bool,
}

pub const FUBINI_TOLERANCE: f64 = 1e-3;

pub fn fubini_check(disk: &Disk, delta: f64) -> FubiniCheck {
    assert!(delta > 0.0, "delta must be positive");
    let (lhs, identity_rhs, k_bound) = if disk.k() == 1 {
        let total = arclength(disk).last().copied().unwrap();
        let lhs: f64 = segment_pieces(total, delta).iter().map(|(len, t)| len * t).sum();
        let balls = [window(0.0, delta, total), window(total, delta, total)];
        (lhs, balls.iter().sum(), balls[0].max(balls[1]))
    } else {
        let (theta, balls) = surface_visibility(disk, delta);
        let w = vertex_weights(disk);
        let lhs: f64 = theta.iter().zip(&w).map(|(t, w)| t * w).sum();
        let rhs: f64 = balls.iter().map(|(_, lb, ball)| lb * ball).sum();
        let k = balls.iter().map(|b| b.2).fold(0.0, f64::max);
        (lhs, rhs, k)
    };
    let boundary_measure = disk.boundary_measure();
    let rhs_bound = k_bound * boundary_measure;
    let scale = lhs.abs().max(identity_rhs.abs());
    let relative_gap = if scale > 0.0 { (lhs - identity_rhs).abs() / scale } else { 0.0 };
    FubiniCheck {
        delta,
        lhs,
        identity_rhs,
        k_bound,
        boundary_measure,
        rhs_bound,
        relative_gap,
        identity_holds: relative_gap <= FUBINI_TOLERANCE,
        bound_holds: lhs <= rhs_bound * (1.0 + 1e-12),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpanEstimate {
    pub vertex: usize,
    /// Largest dyadic level `delta <= cap` with `B_delta` free of boundary.
    pub span: f64,
    pub resolution: f64,
    pub distance_to_boundary: f64,
}

/// Dyadic search for the span from a precomputed distance to the boundary.
pub(crate) fn span_from_distance(vertex: usize, distance: f64, cap: f64, levels: u32) -> SpanEstimate {
    let resolution = cap / (1u64 << levels) as f64;
    let span = if distance > cap {
        cap
    } else {
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..levels {
            let mid = 0.5 * (lo + hi);
            if distance > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    SpanEstimate { vertex, span, resolution, distance_to_boundary: distance }
}

/// Mesh-scale span at a vertex, searched on `levels` dyadic levels below `cap`.
pub fn span(disk: &Disk, vertex: usize, cap: f64, levels: u32) -> SpanEstimate {
    let d = distance_to_boundary(disk)[vertex];
    span_from_distance(vertex, d, cap, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diskgrowth::seed_tangent_disk;
    use crate::linalg::Mat;
    use crate::system::TorusPoint;

    fn segment() -> Disk {
        let x = TorusPoint::new(&[0.5, 0.5]).unwrap();
        let m = Mat::from_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        seed_tangent_disk(&x, &m, 0.05, 0.001).unwrap()
    }

    #[test]
    fn segment_visibility() {
        let d = segment();
        let v = theta(&d, 0.01, 0.5);
        let centre = d.basepoint().unwrap();
        assert_eq!(v.values[centre], 0.0);
        assert_eq!(v.values[0], 1.0);
        assert!((v.good_fraction - 0.8).abs() < 1e-12);
    }

    #[test]
    fn segment_fubini() {
        let d = segment();
        let f = fubini_check(&d, 0.01);
        assert!((f.lhs - 0.02).abs() < 1e-15);
        assert!((f.identity_rhs - 0.02).abs() < 1e-15);
        assert!(f.bound_holds && f.identity_holds);
    }

    #[test]
    fn dyadic_span_brackets_distance() {
        let s = span_from_distance(0, 0.1234, 0.25, 20);
        assert!(s.span <= 0.1234 && 0.1234 <= s.span + s.resolution);
        assert_eq!(span_from_distance(0, 3.0, 0.25, 20).span, 0.25);
    }
}
