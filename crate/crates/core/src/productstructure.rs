//! Product structure: constant cone fields containing the bundles, and a
//! direct chart-local test that cs- and cu-disks intersect.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{grassmann_distance, min_principal_angle, Mat};
use crate::rng::{Module, SeedStream};
use crate::splitting::{estimate_cs, estimate_cu, estimate_splitting, SplittingParams};
use crate::system::{uniform_grid, Coords, TorusMap};

pub const DEFAULT_SAFETY_MARGIN: f64 = 0.01;
/// Largest span for which the intersection test stays inside one chart.
pub const CHART_CAP: f64 = 0.4;
/// Polygon sides used for 2-dimensional test disks.
const POLYGON_SIDES: usize = 24;

#[derive(Clone, Debug, Serialize)]
pub struct Cone {
    /// Orthonormal axis subspace.
    pub axis: Mat,
    pub half_angle: f64,
    /// Largest Grassmannian distance from the axis to a sampled bundle.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConefieldCertificate {
    pub cs: Cone,
    pub cu: Cone,
    /// Per grid point: smallest gap between a bundle and its cone boundary.
    pub containment_margins: Vec<f64>,
    pub min_containment_margin: f64,
    /// Smallest principal angle between the axes minus both half-angles.
    pub transversality_margin: f64,
    pub valid: bool,
    pub grid_resolution: usize,
}

impl ConefieldCertificate {
    /// Basepoint separations up to `c * K` are admissible, `c = sin(transversality margin)`.
    pub fn admissible_ratio(&self) -> f64 {
        if self.valid {
            self.transversality_margin.sin()
        } else {
            0.0
        }
    }
}

/// Chordal mean: leading eigenvectors of the averaged projection matrices.
fn mean_subspace(frames: &[Mat]) -> Mat {
    let d = frames[0].rows();
    let k = frames[0].cols();
    let mut p = Mat::zeros(d, d);
    for f in frames {
        p = p.add(&f.mul(&f.transpose()));
    }
    let (_, vecs) = p.scale(1.0 / frames.len() as f64).symmetric_eigen();
    Mat::from_fn(d, k, |i, j| vecs[(i, j)])
}

fn fit_cone(frames: &[Mat], safety: f64) -> (Cone, Vec<f64>) {
    let axis = mean_subspace(frames);
    let deviations: Vec<f64> = frames.iter().map(|f| grassmann_distance(&axis, f)).collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let half_angle = max_deviation + safety;
    let margins = deviations.iter().map(|d| half_angle - d).collect();
    (Cone { axis, half_angle, max_deviation }, margins)
}

/// Fits constant cones around the bundles estimated on a uniform grid.
pub fn fit_constant_cones(
    map: &TorusMap,
    cu_dim: usize,
    grid_resolution: usize,
    safety: f64,
    splitting: &SplittingParams,
) -> Result<ConefieldCertificate> {
    if grid_resolution == 0 {
        return Err(LabError::invalid("product_structure.grid_resolution", "must be positive"));
    }
    if !(safety >= 0.0) {
        return Err(LabError::invalid("product_structure.safety_margin", "must be nonnegative"));
    }
    let grid = uniform_grid(map.dim(), grid_resolution);
    let frames: Vec<(Mat, Mat)> = grid
        .par_iter()
        .map(|x| estimate_splitting(map, x, cu_dim, splitting).map(|f| (f.cs_basis, f.cu_basis)))
        .collect::<Result<_>>()?;
    let (cs_frames, cu_frames): (Vec<Mat>, Vec<Mat>) = frames.into_iter().unzip();
    let (cs, cs_margins) = fit_cone(&cs_frames, safety);
    let (cu, cu_margins) = fit_cone(&cu_frames, safety);
    let containment_margins: Vec<f64> = cs_margins.iter().zip(&cu_margins).map(|(a, b)| a.min(*b)).collect();
    let min_containment_margin = containment_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let transversality_margin = min_principal_angle(&cs.axis, &cu.axis) - cs.half_angle - cu.half_angle;
    Ok(ConefieldCertificate {
        valid: min_containment_margin > 0.0 && transversality_margin > 0.0,
        cs,
        cu,
        containment_margins,
        min_containment_margin,
        transversality_margin,
        grid_resolution,
    })
}

/// Simplices (as vertex lists) of a flat disk of radius at least `radius`
/// around `center`, tangent to the orthonormal frame `tangent`.
fn flat_disk(center: &Coords, tangent: &Mat, radius: f64) -> Vec<Vec<Coords>> {
    let at = |a: f64, b: f64| {
        let mut p = *center;
        for i in 0..center.dim() {
            p[i] += a * tangent[(i, 0)] + if tangent.cols() > 1 { b * tangent[(i, 1)] } else { 0.0 };
        }
        p
    };
    if tangent.cols() == 1 {
        return vec![vec![at(-radius, 0.0), at(radius, 0.0)]];
    }
    // circumscribed polygon, so the round disk of this radius is covered
    let r = radius / (std::f64::consts::PI / POLYGON_SIDES as f64).cos();
    let corner = |j: usize| {
        let t = std::f64::consts::TAU * j as f64 / POLYGON_SIDES as f64;
        at(r * t.cos(), r * t.sin())
    };
    (0..POLYGON_SIDES).map(|j| vec![*center, corner(j), corner(j + 1)]).collect()
}

/// Barycentric slack accepted by the intersection test.
const INTERSECTION_TOLERANCE: f64 = 1e-6;

/// Whether a `a`-simplex and a `b`-simplex with `a + b = d` meet, by solving
/// `p_0 + sum s_i (p_i - p_0) = q_0 + sum t_j (q_j - q_0)`.
pub(crate) fn simplices_meet(p: &[Coords], q: &[Coords]) -> bool {
    let d = p[0].dim();
    let (a, b) = (p.len() - 1, q.len() - 1);
    debug_assert_eq!(a + b, d);
    let m = Mat::from_fn(d, d, |i, j| if j < a { p[j + 1][i] - p[0][i] } else { q[0][i] - q[j - a + 1][i] });
    let Some(inv) = m.inverse() else { return false };
    let rhs: Vec<f64> = (0..d).map(|i| q[0][i] - p[0][i]).collect();
    let sol = inv.mul_vec(&rhs);
    let inside = |c: &[f64]| {
        c.iter().all(|&x| x >= -INTERSECTION_TOLERANCE) && c.iter().sum::<f64>() <= 1.0 + INTERSECTION_TOLERANCE
    };
    inside(&sol[..a]) && inside(&sol[a..d])
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IntersectionStats {
    pub k_span: f64,
    pub separation: f64,
    pub trials: usize,
    pub hits: usize,
    pub hit_rate: f64,
    /// Trials dropped because a bundle estimate failed to converge.
    pub skipped: usize,
}

/// For each trial, a flat cs-disk of radius `k_span` at a random point `x`
/// and a flat cu-disk at a point `y` at distance `separation` from `x` (in
/// one chart), tangent to the bundles estimated there; reports how often
/// they intersect.
#[allow(clippy::too_many_arguments)]
pub fn disk_intersection_test(
    map: &TorusMap,
    cu_dim: usize,
    k_span: f64,
    separation: f64,
    trials: usize,
    seed: u64,
    splitting: &SplittingParams,
) -> Result<IntersectionStats> {
    let d = map.dim();
    if cu_dim == 0 || cu_dim >= d || cu_dim > 2 || d - cu_dim > 2 {
        return Err(LabError::UnsupportedDimension(format!("cs = {}, cu = {cu_dim}: both must be 1 or 2", d - cu_dim)));
    }
    if !(k_span > 0.0 && k_span <= CHART_CAP) {
        return Err(LabError::invalid("product_structure.k_span", format!("must lie in (0, {CHART_CAP}]")));
    }
    if !(separation >= 0.0 && separation <= 2.0 * k_span) {
        return Err(LabError::invalid("product_structure.separation", "must lie in [0, 2 k_span]"));
    }
    let stream = SeedStream::new(seed);
    let outcomes: Vec<Option<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(Module::Product, i as u64);
            let x = crate::rng::random_point(&mut rng, d);
            let mut dir = Coords::zeros(d);
            loop {
                for j in 0..d {
                    dir[j] = rng.gen_range(-1.0..1.0);
                }
                let n = dir.norm();
                if n > 1e-3 && n <= 1.0 {
                    dir = dir * (1.0 / n);
                    break;
                }
            }
            let y = x.translate(&(dir * separation));
            let cs = match estimate_cs(map, &x, d - cu_dim, splitting) {
                Ok(e) => e.basis,
                Err(LabError::NoConvergence { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let cu = match estimate_cu(map, &y, cu_dim, splitting) {
                Ok(e) => e.basis,
                Err(LabError::NoConvergence { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let xl = x.lift();
            let yl = xl + dir * separation;
            let d1 = flat_disk(&xl, &cs, k_span);
            let d2 = flat_disk(&yl, &cu, k_span);
            Ok(Some(d1.iter().any(|s| d2.iter().any(|t| simplices_meet(s, t)))))
        })
        .collect::<Result<_>>()?;
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
    let run = trials - skipped;
    Ok(IntersectionStats {
        k_span,
        separation,
        trials,
        hits,
        hit_rate: if run == 0 { 0.0 } else { hits as f64 / run as f64 },
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::catalog::system;

    #[test]
    fn crossing_segments_meet() {
        let p = [Coords::from_slice(&[-1.0, 0.0]), Coords::from_slice(&[1.0, 0.0])];
        let q = [Coords::from_slice(&[0.0, -1.0]), Coords::from_slice(&[0.0, 1.0])];
        assert!(simplices_meet(&p, &q));
        let far = [Coords::from_slice(&[2.0, -1.0]), Coords::from_slice(&[2.0, 1.0])];
        assert!(!simplices_meet(&p, &far));
    }

    #[test]
    fn cat_map_certificate() {
        let cat = system("cat2").unwrap();
        let c = fit_constant_cones(&cat, 1, 4, DEFAULT_SAFETY_MARGIN, &SplittingParams::default()).unwrap();
        assert!(c.valid);
        assert!(c.cs.max_deviation < 1e-9 && c.cu.max_deviation < 1e-9);
        assert!((c.transversality_margin - (std::f64::consts::FRAC_PI_2 - 0.02)).abs() < 1e-9);
    }

    #[test]
    fn tiny_disks_miss() {
        let cat = system("cat2").unwrap();
        let s = disk_intersection_test(&cat, 1, 0.01, 0.02, 20, 3, &SplittingParams::default()).unwrap();
        assert_eq!(s.hits, 0);
    }
}
