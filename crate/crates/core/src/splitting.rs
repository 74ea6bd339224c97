//! Estimation of the dominated splitting `E^cs + E^cu` by power iteration.
//!
//! The centre-unstable bundle at `x` is the limit of `Df^N V` for a generic
//! frame `V` placed at `f^{-N}(x)`; the centre-stable bundle is the same
//! construction for `f^{-1}`. Two independent random frames are pushed along
//! the same backward-started orbit segment and their Grassmannian distance at
//! `x` is the convergence residual: with domination rate `tau` it decays like
//! `tau^N`, without domination it stays of order one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::transport_observe;
use crate::error::{LabError, Result};
use crate::linalg::{grassmann_distance, min_principal_angle, Mat};
use crate::system::{TorusMap, TorusPoint};

/// Fits with an RMS log-residual above this are flagged as not dominated.
pub const DOMINATION_FIT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplittingParams {
    pub burn_in: usize,
    pub iters: usize,
    /// Grassmannian distance (radians) below which a frame counts as converged.
    pub tolerance: f64,
    /// Seed for the random initial frames.
    pub init_seed: u64,
}

impl Default for SplittingParams {
    fn default() -> Self {
        SplittingParams { burn_in: 100, iters: 200, tolerance: 1e-9, init_seed: 0x5eed_f4a3 }
    }
}

/// One estimated bundle at a point.
#[derive(Clone, Debug, Serialize)]
pub struct BundleEstimate {
    pub point: TorusPoint,
    pub basis: Mat,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingFrame {
    pub point: TorusPoint,
    pub cs_basis: Mat,
    pub cu_basis: Mat,
    pub convergence_residual: f64,
    /// Smallest principal angle between the two bundles, radians.
    pub angle: f64,
}

impl SplittingFrame {
    pub fn cs_dim(&self) -> usize {
        self.cs_basis.cols()
    }

    pub fn cu_dim(&self) -> usize {
        self.cu_basis.cols()
    }

    /// The same splitting seen as a splitting for `f^{-1}` (bundles exchanged).
    pub fn swapped(&self) -> SplittingFrame {
        SplittingFrame {
            point: self.point,
            cs_basis: self.cu_basis,
            cu_basis: self.cs_basis,
            convergence_residual: self.convergence_residual,
            angle: self.angle,
        }
    }
}

fn hash_point(x: &TorusPoint, k: usize) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15 ^ k as u64;
    for c in x.coords() {
        h ^= c.to_bits();
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h >> 24
}

fn random_frame<R: Rng>(rng: &mut R, d: usize, k: usize) -> Result<Mat> {
    for _ in 0..8 {
        let m = Mat::from_fn(d, k, |_, _| rng.gen_range(-1.0..1.0));
        if let Some((q, _)) = m.qr() {
            return Ok(q);
        }
    }
    Err(LabError::SingularRestriction)
}

/// Centre-unstable bundle of dimension `dim_cu` at `x`.
pub fn estimate_cu(map: &TorusMap, x: &TorusPoint, dim_cu: usize, params: &SplittingParams) -> Result<BundleEstimate> {
    let d = map.dim();
    if dim_cu == 0 || dim_cu >= d {
        return Err(LabError::invalid("cu_dim", format!("must lie in 1..={} for dimension {d}", d - 1)));
    }
    let total = params.burn_in + params.iters;
    if total == 0 {
        return Err(LabError::invalid("splitting.iters", "burn_in + iters must be positive"));
    }
    map.check_orbit(total as u64)?;

    let mut orbit = Vec::with_capacity(total + 1);
    let mut p = *x;
    orbit.push(p);
    for _ in 0..total {
        p = map.evaluate_inverse(&p);
        orbit.push(p);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.init_seed);
    rng.set_stream(hash_point(x, dim_cu));
    let mut a = random_frame(&mut rng, d, dim_cu)?;
    let mut b = random_frame(&mut rng, d, dim_cu)?;
    for i in (1..=total).rev() {
        let jac = map.differential(&orbit[i].lift());
        a = jac.mul(&a).qr().ok_or(LabError::SingularRestriction)?.0;
        b = jac.mul(&b).qr().ok_or(LabError::SingularRestriction)?.0;
    }
    let residual = grassmann_distance(&a, &b);
    if !(residual <= params.tolerance) {
        return Err(LabError::NoConvergence { residual, tolerance: params.tolerance });
    }
    Ok(BundleEstimate { point: *x, basis: a, residual })
}

/// Centre-stable bundle of dimension `dim_cs`: the centre-unstable bundle of `f^{-1}`.
pub fn estimate_cs(map: &TorusMap, x: &TorusPoint, dim_cs: usize, params: &SplittingParams) -> Result<BundleEstimate> {
    estimate_cu(&map.inverse(), x, dim_cs, params)
}

/// Both bundles at `x` for a split with `dim_cu` centre-unstable directions.
pub fn estimate_splitting(
    map: &TorusMap,
    x: &TorusPoint,
    dim_cu: usize,
    params: &SplittingParams,
) -> Result<SplittingFrame> {
    let cu = estimate_cu(map, x, dim_cu, params)?;
    let cs = estimate_cs(map, x, map.dim() - dim_cu, params)?;
    let angle = min_principal_angle(&cs.basis, &cu.basis);
    Ok(SplittingFrame {
        point: *x,
        cs_basis: cs.basis,
        cu_basis: cu.basis,
        convergence_residual: cu.residual.max(cs.residual),
        angle,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitScan {
    pub cu_dim: usize,
    pub cu_residual: f64,
    pub cs_residual: f64,
}

/// Residuals of both bundle estimates for every candidate split at `x`.
pub fn scan_splits(map: &TorusMap, x: &TorusPoint, params: &SplittingParams) -> Vec<SplitScan> {
    let relaxed = SplittingParams { tolerance: f64::INFINITY, ..*params };
    let residual = |r: Result<BundleEstimate>| r.map(|e| e.residual).unwrap_or(f64::NAN);
    (1..map.dim())
        .map(|cu_dim| SplitScan {
            cu_dim,
            cu_residual: residual(estimate_cu(map, x, cu_dim, &relaxed)),
            cs_residual: residual(estimate_cs(map, x, map.dim() - cu_dim, &relaxed)),
        })
        .collect()
}

/// `log` of the domination ratio for `n = 0..=horizon`.
fn log_ratio_series(map: &TorusMap, frame: &SplittingFrame, horizon: usize) -> Result<Vec<f64>> {
    let mut cs_top = vec![0.0; horizon + 1];
    let mut cu_min = vec![0.0; horizon + 1];
    transport_observe(map, &frame.point, &frame.cs_basis, horizon, |n, c| cs_top[n] = c.log_exterior_norm(1))?;
    transport_observe(map, &frame.point, &frame.cu_basis, horizon, |n, c| {
        cu_min[n] = *c.log_singular_values().last().unwrap()
    })?;
    let out: Vec<f64> = cs_top.iter().zip(&cu_min).map(|(a, b)| a - b).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(LabError::SingularRestriction);
    }
    Ok(out)
}

/// `||Df^n|E^cs|| * ||(Df^n|E^cu)^{-1}||`.
pub fn domination_ratio(map: &TorusMap, frame: &SplittingFrame, n: usize) -> Result<f64> {
    Ok(log_ratio_series(map, frame, n)?[n].exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationEstimate {
    pub horizon: usize,
    /// Max over frames of the ratio at the horizon.
    pub ratio_sup: f64,
    /// Max over frames of the ratio for `n = 1..=horizon`.
    pub ratios: Vec<f64>,
    pub c: f64,
    pub tau: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    /// `tau < 1` and the fit residual below [`DOMINATION_FIT_THRESHOLD`].
    pub dominated: bool,
}

/// Fits `ratio(n) <= C tau^n` to the max-over-frames ratios for `n = 1..=horizon`.
pub fn fit_domination(map: &TorusMap, frames: &[SplittingFrame], horizon: usize) -> Result<DominationEstimate> {
    if horizon < 3 {
        return Err(LabError::invalid("horizon", "domination fit needs at least 3 horizons"));
    }
    if frames.is_empty() {
        return Err(LabError::invalid("frames", "no frames to fit"));
    }
    let mut log_sup = vec![f64::NEG_INFINITY; horizon + 1];
    for frame in frames {
        let series = log_ratio_series(map, frame, horizon)?;
        for (acc, v) in log_sup.iter_mut().zip(series) {
            *acc = acc.max(v);
        }
    }
    let ns: Vec<f64> = (1..=horizon).map(|n| n as f64).collect();
    let ys = &log_sup[1..];
    let (intercept, slope, residual) = linear_fit(&ns, ys);
    let tau = slope.exp();
    Ok(DominationEstimate {
        horizon,
        ratio_sup: log_sup[horizon].exp(),
        ratios: ys.iter().map(|v| v.exp()).collect(),
        c: intercept.exp(),
        tau,
        residual,
        dominated: tau < 1.0 && residual <= DOMINATION_FIT_THRESHOLD,
    })
}

/// Least-squares line `y = a + b x`; returns `(a, b, rms residual)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::catalog::system;

    #[test]
    fn cat_map_bundles_are_eigenvectors() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.3, 0.6]).unwrap();
        let frame = estimate_splitting(&cat, &x, 1, &SplittingParams::default()).unwrap();
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let u = frame.cu_basis.column(0);
        // expanding eigenvector of [[2,1],[1,1]] is (g, 1)
        assert!((u[0] / u[1] - g).abs() < 1e-10);
        assert!(frame.convergence_residual < 1e-10);
        assert!((frame.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn identity_does_not_converge() {
        let id = system("id2").unwrap();
        let x = TorusPoint::new(&[0.3, 0.6]).unwrap();
        assert!(matches!(
            estimate_cu(&id, &x, 1, &SplittingParams::default()),
            Err(LabError::NoConvergence { .. })
        ));
    }

    #[test]
    fn bad_dimension_rejected() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.3, 0.6]).unwrap();
        assert!(matches!(estimate_cu(&cat, &x, 2, &SplittingParams::default()), Err(LabError::InvalidParameter { .. })));
    }

    #[test]
    fn zero_horizon_ratio_is_one() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.1, 0.2]).unwrap();
        let frame = estimate_splitting(&cat, &x, 1, &SplittingParams::default()).unwrap();
        assert_eq!(domination_ratio(&cat, &frame, 0).unwrap(), 1.0);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (a, b, r) = linear_fit(&xs, &ys);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && r < 1e-12);
    }
}
