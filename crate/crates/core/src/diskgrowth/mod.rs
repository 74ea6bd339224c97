//! Discretised unstable disks: seeding, iteration with adaptive refinement,
//! and the intrinsic geometry used by the balloon argument.
//!
//! A disk remembers how it was built. Every vertex carries its parameter on
//! the flat seed disk, and the disk keeps the orbit of the seed centre, so a
//! vertex inserted at generation `n` is placed by pushing its seed parameter
//! through the same `n` steps as every other vertex. Positions are stored as
//! displacements from the current image of the centre and pushed with
//! [`TorusMap::forward_offset`], which keeps them accurate even when the seed
//! radius is tiny, and gives one continuous lift of the whole disk.

mod geometry;
pub mod mesh_io;
mod series;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::linalg::Mat;
use crate::splitting::SplittingFrame;
use crate::system::{Coords, TorusMap, TorusPoint};

pub use geometry::{
    distance_to_boundary, fubini_check, intrinsic_distances, span, theta, vertex_weights, BoundaryVisibility,
    FubiniCheck, SpanEstimate,
};
pub use series::{
    disk_series, good_fraction_series, span_series, write_series_csv, GenerationStats, SeriesParams,
};

pub const DEFAULT_VERTEX_CAP: usize = 10_000_000;
/// Largest admissible seed radius.
pub const MAX_SEED_RADIUS: f64 = 0.05;

/// A 1- or 2-dimensional disk immersed in the torus.
#[derive(Clone, Debug)]
pub struct Disk {
    k: usize,
    dim: usize,
    generation: usize,
    r0: f64,
    /// `d x k` orthonormal tangent frame of the seed disk.
    frame: Mat,
    /// Reduced lifts of the images of the seed centre, one per generation.
    base_orbit: Vec<Coords>,
    offsets: Vec<Coords>,
    params: Vec<[f64; 2]>,
    /// Triangles (k = 2). For k = 1 the vertices are stored in polyline order.
    triangles: Vec<[usize; 3]>,
    h_max: f64,
    vertex_cap: usize,
}

/// A flat disk of radius `r0` through the frame's point, tangent to its
/// centre-unstable bundle, with edges of length about `resolution`.
pub fn seed_disk(frame: &SplittingFrame, r0: f64, resolution: f64) -> Result<Disk> {
    seed_tangent_disk(&frame.point, &frame.cu_basis, r0, resolution)
}

/// Like [`seed_disk`] for an arbitrary orthonormal tangent frame.
pub fn seed_tangent_disk(center: &TorusPoint, tangent: &Mat, r0: f64, resolution: f64) -> Result<Disk> {
    let k = tangent.cols();
    if !(1..=2).contains(&k) {
        return Err(LabError::UnsupportedDimension(format!("disks of dimension {k} (only 1 and 2)")));
    }
    if !(r0 > 0.0 && r0 <= MAX_SEED_RADIUS) {
        return Err(LabError::invalid("disk.r0", format!("must lie in (0, {MAX_SEED_RADIUS}]")));
    }
    if !(resolution > 0.0) {
        return Err(LabError::invalid("disk.resolution", "must be positive"));
    }
    let (params, triangles) = if k == 1 {
        let n = ((2.0 * r0 / resolution).ceil() as usize).max(1);
        let step = 2.0 * r0 / n as f64;
        let mut p: Vec<[f64; 2]> = (0..=n).map(|i| [-r0 + step * i as f64, 0.0]).collect();
        p[n][0] = r0;
        if n % 2 == 0 {
            p[n / 2][0] = 0.0;
        }
        (p, Vec::new())
    } else {
        ring_mesh(r0, ((r0 / resolution).ceil() as usize).max(1))
    };
    let mut disk = Disk {
        k,
        dim: center.dim(),
        generation: 0,
        r0,
        frame: *tangent,
        base_orbit: vec![center.lift()],
        offsets: Vec::new(),
        params,
        triangles,
        h_max: resolution,
        vertex_cap: DEFAULT_VERTEX_CAP,
    };
    disk.offsets = disk.params.iter().map(|p| disk.embed(p)).collect();
    if k == 1 && disk.basepoint().is_none() {
        // odd number of segments: add the centre explicitly
        let pos = disk.params.iter().position(|p| p[0] > 0.0).unwrap();
        disk.params.insert(pos, [0.0, 0.0]);
        disk.offsets.insert(pos, Coords::zeros(disk.dim));
    }
    Ok(disk)
}

/// Concentric rings: ring `i` has `6 i` vertices at radius `r0 i / rings`.
fn ring_mesh(r0: f64, rings: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut params = vec![[0.0, 0.0]];
    let mut triangles = Vec::new();
    let mut inner: Vec<usize> = vec![0];
    for i in 1..=rings {
        let count = 6 * i;
        let radius = r0 * i as f64 / rings as f64;
        let start = params.len();
        for j in 0..count {
            let a = std::f64::consts::TAU * j as f64 / count as f64;
            params.push([radius * a.cos(), radius * a.sin()]);
        }
        let outer: Vec<usize> = (start..start + count).collect();
        if inner.len() == 1 {
            for j in 0..count {
                triangles.push([inner[0], outer[j], outer[(j + 1) % count]]);
            }
        } else {
            let (ni, no) = (inner.len(), outer.len());
            let (mut a, mut b) = (0, 0);
            while a < ni || b < no {
                let ta = (a + 1) as f64 / ni as f64;
                let tb = (b + 1) as f64 / no as f64;
                if b < no && (a == ni || tb <= ta) {
                    triangles.push([inner[a % ni], outer[b], outer[(b + 1) % no]]);
                    b += 1;
                } else {
                    triangles.push([inner[a % ni], outer[b % no], inner[(a + 1) % ni]]);
                    a += 1;
                }
            }
        }
        inner = outer;
    }
    (params, triangles)
}

#[derive(Clone, Copy, PartialEq)]
struct EdgeItem(f64, usize, usize);

impl Eq for EdgeItem {}

impl PartialOrd for EdgeItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EdgeItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1)).then(other.2.cmp(&self.2))
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Disk {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn vertex_cap(&self) -> usize {
        self.vertex_cap
    }

    /// Sets the refinement threshold and the vertex cap used by later iterations.
    pub fn with_refinement(mut self, h_max: f64, vertex_cap: usize) -> Self {
        self.h_max = h_max;
        self.vertex_cap = vertex_cap;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn seed_params(&self) -> &[[f64; 2]] {
        &self.params
    }

    /// Displacements of the vertices from the current image of the seed centre.
    pub fn offsets(&self) -> &[Coords] {
        &self.offsets
    }

    /// Image of the seed centre, reduced.
    pub fn anchor(&self) -> Coords {
        *self.base_orbit.last().unwrap()
    }

    /// Lifted position of vertex `i`.
    pub fn vertex(&self, i: usize) -> Coords {
        self.anchor() + self.offsets[i]
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        (self.offsets[a] - self.offsets[b]).norm()
    }

    /// Index of the image of the seed centre.
    pub fn basepoint(&self) -> Option<usize> {
        self.params.iter().position(|p| p[0] == 0.0 && p[1] == 0.0)
    }

    /// Undirected edges, each once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        if self.k == 1 {
            return (1..self.vertex_count()).map(|i| (i - 1, i)).collect();
        }
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [edge_key(t[0], t[1]), edge_key(t[1], t[2]), edge_key(t[2], t[0])])
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Boundary edges in the orientation of their triangle (k = 2 only).
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                count.entry(edge_key(a, b)).or_insert((0, (a, b))).0 += 1;
            }
        }
        let mut out: Vec<(usize, usize)> = count.into_values().filter(|(c, _)| *c == 1).map(|(_, e)| e).collect();
        out.sort_unstable();
        out
    }

    /// Boundary vertices: the two endpoints (k = 1) or the boundary loop in order (k = 2).
    pub fn boundary_vertices(&self) -> Vec<usize> {
        if self.k == 1 {
            return vec![0, self.vertex_count() - 1];
        }
        let edges = self.boundary_edges();
        let next: HashMap<usize, usize> = edges.iter().copied().collect();
        let Some(&(start, _)) = edges.first() else { return Vec::new() };
        let mut out = vec![start];
        let mut cur = next[&start];
        while cur != start && out.len() <= edges.len() {
            out.push(cur);
            cur = next[&cur];
        }
        out
    }

    /// Intrinsic `k`-volume: length or area.
    pub fn volume(&self) -> f64 {
        if self.k == 1 {
            self.edges().iter().map(|&(a, b)| self.edge_length(a, b)).sum()
        } else {
            self.triangles.iter().map(|t| self.triangle_area(t)).sum()
        }
    }

    pub(crate) fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let u = self.offsets[t[1]] - self.offsets[t[0]];
        let v = self.offsets[t[2]] - self.offsets[t[0]];
        let (uu, vv, uv) = (u.dot(&u), v.dot(&v), u.dot(&v));
        0.5 * (uu * vv - uv * uv).max(0.0).sqrt()
    }

    /// Boundary measure: 2 for a segment (counting measure), the perimeter for a surface.
    pub fn boundary_measure(&self) -> f64 {
        if self.k == 1 {
            2.0
        } else {
            self.boundary_edges().iter().map(|&(a, b)| self.edge_length(a, b)).sum()
        }
    }

    /// Shortest and longest edge.
    pub fn edge_length_range(&self) -> (f64, f64) {
        self.edges()
            .iter()
            .map(|&(a, b)| self.edge_length(a, b))
            .fold((f64::INFINITY, 0.0), |(lo, hi), l| (lo.min(l), hi.max(l)))
    }

    fn embed(&self, p: &[f64; 2]) -> Coords {
        let mut o = Coords::zeros(self.dim);
        for j in 0..self.k {
            let col = self.frame.column(j);
            for i in 0..self.dim {
                o[i] += p[j] * col[i];
            }
        }
        o
    }

    /// Position (as an offset) of the seed parameter `p` at the current generation.
    fn push_param(&self, map: &TorusMap, p: &[f64; 2]) -> Coords {
        let mut o = self.embed(p);
        for base in &self.base_orbit[..self.generation] {
            o = map.forward_offset(base, &o).1;
        }
        o
    }

    fn check_cap(&self) -> Result<()> {
        if self.offsets.len() > self.vertex_cap {
            Err(LabError::MeshBlowup { vertices: self.offsets.len(), cap: self.vertex_cap })
        } else {
            Ok(())
        }
    }

    fn step(&mut self, map: &TorusMap) {
        let base = self.anchor();
        self.offsets = self.offsets.par_iter().map(|o| map.forward_offset(&base, o).1).collect();
        let (next, _) = map.forward_offset(&base, &Coords::zeros(self.dim));
        self.base_orbit.push(next);
        self.generation += 1;
    }

    fn refine(&mut self, map: &TorusMap) -> Result<()> {
        if self.k == 1 {
            self.refine_polyline(map)
        } else {
            self.refine_mesh(map)
        }
    }

    fn refine_polyline(&mut self, map: &TorusMap) -> Result<()> {
        let n = self.vertex_count();
        let mut params = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                let mut stack = vec![(self.params[i - 1], self.offsets[i - 1], self.params[i], self.offsets[i])];
                while let Some((pa, oa, pb, ob)) = stack.pop() {
                    let mid = [0.5 * (pa[0] + pb[0]), 0.0];
                    if (ob - oa).norm() <= self.h_max || mid[0] == pa[0] || mid[0] == pb[0] {
                        continue;
                    }
                    let om = self.push_param(map, &mid);
                    stack.push((mid, om, pb, ob));
                    stack.push((pa, oa, mid, om));
                    params.push(mid);
                    offsets.push(om);
                    if params.len() + n > self.vertex_cap {
                        return Err(LabError::MeshBlowup { vertices: params.len() + n, cap: self.vertex_cap });
                    }
                }
            }
            params.push(self.params[i]);
            offsets.push(self.offsets[i]);
        }
        // restore polyline order
        let mut order: Vec<usize> = (0..params.len()).collect();
        order.sort_by(|&a, &b| params[a][0].total_cmp(&params[b][0]));
        self.params = order.iter().map(|&i| params[i]).collect();
        self.offsets = order.iter().map(|&i| offsets[i]).collect();
        self.check_cap()
    }

    fn refine_mesh(&mut self, map: &TorusMap) -> Result<()> {
        const NONE: usize = usize::MAX;
        let mut adjacent: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let slot = adjacent.entry(edge_key(a, b)).or_insert([NONE, NONE]);
                if slot[0] == NONE {
                    slot[0] = ti;
                } else {
                    slot[1] = ti;
                }
            }
        }
        let mut heap: BinaryHeap<EdgeItem> = adjacent
            .keys()
            .map(|&(a, b)| EdgeItem(self.edge_length(a, b), a, b))
            .filter(|e| e.0 > self.h_max)
            .collect();

        while let Some(EdgeItem(_, a, b)) = heap.pop() {
            let Some(tris) = adjacent.remove(&(a, b)) else { continue };
            let boundary = tris[1] == NONE;
            let (pa, pb) = (self.params[a], self.params[b]);
            let mut mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            if boundary {
                let r = mid[0].hypot(mid[1]);
                if r > 0.0 {
                    mid = [mid[0] * self.r0 / r, mid[1] * self.r0 / r];
                }
            }
            let m = self.offsets.len();
            let om = self.push_param(map, &mid);
            self.params.push(mid);
            self.offsets.push(om);
            if m + 1 > self.vertex_cap {
                return Err(LabError::MeshBlowup { vertices: m + 1, cap: self.vertex_cap });
            }

            for &ti in tris.iter().filter(|&&t| t != NONE) {
                let t = self.triangles[ti];
                let rot = (0..3).find(|&r| edge_key(t[r], t[(r + 1) % 3]) == (a, b)).unwrap();
                let (u, v, c) = (t[rot], t[(rot + 1) % 3], t[(rot + 2) % 3]);
                self.triangles[ti] = [u, m, c];
                let nt = self.triangles.len();
                self.triangles.push([m, v, c]);
                // edge (v, c) now belongs to the new triangle
                if let Some(slot) = adjacent.get_mut(&edge_key(v, c)) {
                    for s in slot.iter_mut() {
                        if *s == ti {
                            *s = nt;
                        }
                    }
                }
                adjacent.insert(edge_key(m, c), [ti, nt]);
                let lc = self.edge_length(m, c);
                if lc > self.h_max {
                    let (x, y) = edge_key(m, c);
                    heap.push(EdgeItem(lc, x, y));
                }
                let (ta, tb) = if u == a { (ti, nt) } else { (nt, ti) };
                for (key, tri) in [(edge_key(a, m), ta), (edge_key(m, b), tb)] {
                    let slot = adjacent.entry(key).or_insert([NONE, NONE]);
                    if slot[0] == NONE {
                        slot[0] = tri;
                    } else {
                        slot[1] = tri;
                    }
                }
            }
            for key in [edge_key(a, m), edge_key(m, b)] {
                let l = self.edge_length(key.0, key.1);
                if l > self.h_max {
                    heap.push(EdgeItem(l, key.0, key.1));
                }
            }
        }
        Ok(())
    }
}

/// Applies `f` `steps` times, refining after every step.
pub fn iterate_disk(map: &TorusMap, disk: &Disk, steps: usize) -> Result<Disk> {
    if map.dim() != disk.dim {
        return Err(LabError::invalid("map", "dimension differs from the disk's"));
    }
    map.check_orbit((disk.generation + steps) as u64)?;
    let mut out = disk.clone();
    for _ in 0..steps {
        out.step(map);
        out.refine(map)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::{estimate_splitting, SplittingParams};
    use crate::system::catalog::system;

    fn flat(k: usize) -> (TorusPoint, Mat) {
        let x = TorusPoint::new(&[0.5, 0.5, 0.5]).unwrap();
        let m = Mat::from_fn(3, k, |i, j| if i == j { 1.0 } else { 0.0 });
        (x, m)
    }

    #[test]
    fn seed_segment_length() {
        let (x, m) = flat(1);
        let d = seed_tangent_disk(&x, &m, 0.01, 0.001).unwrap();
        assert!((d.volume() - 0.02).abs() < 1e-12);
        assert_eq!(d.boundary_vertices(), vec![0, d.vertex_count() - 1]);
        assert!(d.basepoint().is_some());
    }

    #[test]
    fn seed_odd_segments_has_centre() {
        let (x, m) = flat(1);
        let d = seed_tangent_disk(&x, &m, 0.01, 0.007).unwrap();
        assert!(d.basepoint().is_some());
        assert!((d.volume() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn ring_mesh_is_manifold() {
        let (x, m) = flat(2);
        let d = seed_tangent_disk(&x, &m, 0.01, 0.002).unwrap();
        let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
        for t in d.triangles() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *uses.entry(edge_key(a, b)).or_default() += 1;
            }
        }
        assert!(uses.values().all(|&c| c == 1 || c == 2));
        assert_eq!(d.boundary_vertices().len(), 30);
        let euler = d.vertex_count() as i64 - uses.len() as i64 + d.triangles().len() as i64;
        assert_eq!(euler, 1);
    }

    #[test]
    fn unsupported_dimension() {
        let x = TorusPoint::new(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        let m = Mat::from_fn(4, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!(matches!(seed_tangent_disk(&x, &m, 0.01, 0.001), Err(LabError::UnsupportedDimension(_))));
    }

    #[test]
    fn cat_segment_grows_by_eigenvalue() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.1, 0.3]).unwrap();
        let frame = estimate_splitting(&cat, &x, 1, &SplittingParams::default()).unwrap();
        let d0 = seed_disk(&frame, 0.001, 0.0005).unwrap().with_refinement(0.01, 1_000_000);
        let d = iterate_disk(&cat, &d0, 6).unwrap();
        let lu = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((d.volume() / (0.002 * lu.powi(6)) - 1.0).abs() < 1e-9);
        assert!(d.edge_length_range().1 <= 0.01);
        assert_eq!(d.generation(), 6);
    }

    #[test]
    fn blowup_is_reported() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.1, 0.3]).unwrap();
        let frame = estimate_splitting(&cat, &x, 1, &SplittingParams::default()).unwrap();
        let d0 = seed_disk(&frame, 0.01, 0.001).unwrap().with_refinement(0.001, 100);
        assert!(matches!(iterate_disk(&cat, &d0, 5), Err(LabError::MeshBlowup { .. })));
    }
}
