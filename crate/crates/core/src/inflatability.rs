//! The inflatability inequality `int xi_n dm > Xi_n` on either bundle.
//!
//! On the cu side `xi_n(x) = log |det Df^n|E^cu_x|` and `Xi_n` is the log of
//! the sup over `x` of the `(cu-1)`-th exterior power norm of `Df^n|E^cu_x`.
//! The cs side is the same construction for `f^{-1}` on `E^cs`, with the
//! `(cs-1)`-th exterior power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::transport_observe;
use crate::error::{LabError, Result};
use crate::rng::{Module, SeedStream};
use crate::splitting::{estimate_cu, linear_fit, SplittingFrame, SplittingParams};
use crate::system::catalog::SystemCatalogEntry;
use crate::system::{grid_neighbors, uniform_grid, TorusMap, TorusPoint};

/// Relative floating-point resolution folded into every standard error.
pub const NUMERICAL_FLOOR: f64 = 1e-12;

pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Cu,
    Cs,
}

impl Side {
    /// The map to iterate and the bundle dimension for this side.
    fn setup(self, map: &TorusMap, cu_dim: usize) -> Result<(TorusMap, usize)> {
        let d = map.dim();
        if cu_dim == 0 || cu_dim >= d {
            return Err(LabError::invalid("system.cu_dim", format!("must lie in 1..={}", d - 1)));
        }
        Ok(match self {
            Side::Cu => (map.clone(), cu_dim),
            Side::Cs => (map.inverse(), d - cu_dim),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InflatabilityParams {
    pub samples: usize,
    /// Points per axis of the grid used for `Xi_n`; `None` picks 64 (16 in dimension 4).
    pub grid_resolution: Option<usize>,
}

impl Default for InflatabilityParams {
    fn default() -> Self {
        InflatabilityParams { samples: 10_000, grid_resolution: None }
    }
}

impl InflatabilityParams {
    pub fn resolution(&self, dim: usize) -> usize {
        self.grid_resolution.unwrap_or(if dim >= 4 { 16 } else { 64 })
    }
}

/// `xi_n` at the frame's point.
pub fn xi_n(map: &TorusMap, frame: &SplittingFrame, n: usize, side: Side) -> Result<f64> {
    let t = match side {
        Side::Cu => transport_observe(map, &frame.point, &frame.cu_basis, n, |_, _| {})?,
        Side::Cs => transport_observe(&map.inverse(), &frame.point, &frame.cs_basis, n, |_, _| {})?,
    };
    Ok(t.cocycle.log_det())
}

/// Per-step `(xi_j, log ||wedge^{k-1}||)` for `j = 0..=n` at `x`, or `None`
/// when the bundle estimate does not converge there.
fn side_series(
    target: &TorusMap,
    x: &TorusPoint,
    k: usize,
    n: usize,
    splitting: &SplittingParams,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let basis = match estimate_cu(target, x, k, splitting) {
        Ok(e) => e.basis,
        Err(LabError::NoConvergence { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut xi = vec![0.0; n + 1];
    let mut ext = vec![0.0; n + 1];
    transport_observe(target, x, &basis, n, |j, c| {
        xi[j] = c.log_det();
        ext[j] = c.log_exterior_norm(k - 1);
    })?;
    Ok(Some((xi, ext)))
}

fn skip_check(skipped: usize, total: usize) -> Result<()> {
    if skipped * 100 > total {
        Err(LabError::TooManySkipped { skipped, total })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct XiEstimate {
    pub horizon: usize,
    /// Grid max of `log ||wedge^{k-1} Df^n|E||`.
    pub value: f64,
    /// Largest difference between neighbouring grid values.
    pub grid_modulus: f64,
    pub grid_resolution: usize,
    pub evaluated: usize,
    pub skipped: usize,
}

/// `Xi_n` for every `n = 0..=max_n`, from one transport per grid point.
pub fn xi_cap_series(
    map: &TorusMap,
    side: Side,
    cu_dim: usize,
    max_n: usize,
    grid_resolution: usize,
    splitting: &SplittingParams,
) -> Result<Vec<XiEstimate>> {
    let (target, k) = side.setup(map, cu_dim)?;
    if k == 1 {
        return Ok((0..=max_n)
            .map(|n| XiEstimate { horizon: n, value: 0.0, grid_modulus: 0.0, grid_resolution: 0, evaluated: 0, skipped: 0 })
            .collect());
    }
    if grid_resolution == 0 {
        return Err(LabError::invalid("inflatability.grid_resolution", "must be positive"));
    }
    let grid = uniform_grid(map.dim(), grid_resolution);
    let values: Vec<Option<Vec<f64>>> = grid
        .par_iter()
        .map(|x| Ok(side_series(&target, x, k, max_n, splitting)?.map(|(_, ext)| ext)))
        .collect::<Result<_>>()?;
    let skipped = values.iter().filter(|v| v.is_none()).count();
    skip_check(skipped, grid.len())?;

    Ok((0..=max_n)
        .map(|n| {
            let mut value = f64::NEG_INFINITY;
            let mut modulus: f64 = 0.0;
            for (i, v) in values.iter().enumerate() {
                let Some(v) = v else { continue };
                value = value.max(v[n]);
                for j in grid_neighbors(map.dim(), grid_resolution, i) {
                    if let Some(w) = &values[j] {
                        modulus = modulus.max((v[n] - w[n]).abs());
                    }
                }
            }
            XiEstimate {
                horizon: n,
                value,
                grid_modulus: modulus,
                grid_resolution,
                evaluated: grid.len() - skipped,
                skipped,
            }
        })
        .collect())
}

/// `Xi_n` on a uniform grid.
pub fn xi_cap(
    map: &TorusMap,
    n: usize,
    side: Side,
    cu_dim: usize,
    grid_resolution: usize,
    splitting: &SplittingParams,
) -> Result<XiEstimate> {
    Ok(xi_cap_series(map, side, cu_dim, n, grid_resolution, splitting)?.pop().unwrap())
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityCheck {
    pub n: usize,
    pub m: usize,
    pub xi_sum: f64,
    pub xi_joint: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// `Xi_{n+m} <= Xi_n + Xi_m + modulus_n + modulus_m` for all `n, m` with
/// `n + m` inside the series.
pub fn subadditivity(series: &[XiEstimate], max_each: usize) -> Vec<SubadditivityCheck> {
    let mut out = Vec::new();
    for n in 1..=max_each {
        for m in 1..=max_each {
            if n + m >= series.len() {
                continue;
            }
            let tolerance = series[n].grid_modulus + series[m].grid_modulus;
            let xi_sum = series[n].value + series[m].value;
            let xi_joint = series[n + m].value;
            out.push(SubadditivityCheck { n, m, xi_sum, xi_joint, tolerance, holds: xi_joint <= xi_sum + tolerance });
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct InflatabilityReport {
    pub side: Side,
    pub horizon: usize,
    pub bundle_dim: usize,
    /// Monte Carlo mean of `xi_n`.
    pub lhs: f64,
    /// Standard error of `lhs`: sampling error combined with the numerical floor.
    pub standard_error: f64,
    pub mc_standard_error: f64,
    /// `Xi_n`: max of the grid and sample-point values.
    pub rhs: f64,
    pub rhs_grid: f64,
    pub rhs_grid_modulus: f64,
    pub margin: f64,
    /// `margin > 2 * standard_error` (never at `n = 0`).
    pub inflatable: bool,
    pub samples: usize,
    pub skipped: usize,
    pub grid_resolution: usize,
    pub seed: u64,
}

pub fn check_inflatable(
    map: &TorusMap,
    side: Side,
    cu_dim: usize,
    n: usize,
    params: &InflatabilityParams,
    splitting: &SplittingParams,
    seed: u64,
) -> Result<InflatabilityReport> {
    if params.samples < MIN_SAMPLES {
        return Err(LabError::invalid("inflatability.samples", format!("must be at least {MIN_SAMPLES}")));
    }
    let (target, k) = side.setup(map, cu_dim)?;
    let stream = SeedStream::new(seed);
    let values: Vec<Option<(f64, f64)>> = (0..params.samples)
        .into_par_iter()
        .map(|i| {
            let x = stream.uniform_point(Module::Inflatability, i as u64, map.dim());
            Ok(side_series(&target, &x, k, n, splitting)?.map(|(xi, ext)| (xi[n], ext[n])))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<(f64, f64)> = values.iter().flatten().copied().collect();
    let skipped = params.samples - kept.len();
    skip_check(skipped, params.samples)?;

    let count = kept.len() as f64;
    let lhs = kept.iter().map(|v| v.0).sum::<f64>() / count;
    let var = kept.iter().map(|v| (v.0 - lhs).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
    let mc_se = (var / count).sqrt();

    let resolution = params.resolution(map.dim());
    let (rhs_grid, modulus, grid_resolution) = if k == 1 {
        (0.0, 0.0, 0)
    } else {
        let est = xi_cap(map, n, side, cu_dim, resolution, splitting)?;
        (est.value, est.grid_modulus, resolution)
    };
    let rhs_samples = if k == 1 { 0.0 } else { kept.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max) };
    let rhs = rhs_grid.max(rhs_samples);

    let floor = NUMERICAL_FLOOR * (1.0 + lhs.abs() + rhs.abs());
    let se = mc_se.hypot(floor);
    let margin = lhs - rhs;
    Ok(InflatabilityReport {
        side,
        horizon: n,
        bundle_dim: k,
        lhs,
        standard_error: se,
        mc_standard_error: mc_se,
        rhs,
        rhs_grid,
        rhs_grid_modulus: modulus,
        margin,
        inflatable: n >= 1 && margin > 2.0 * se,
        samples: params.samples,
        skipped,
        grid_resolution,
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BiInflatability {
    pub cs: InflatabilityReport,
    pub cu: InflatabilityReport,
    pub bi_inflatable: bool,
}

pub fn check_bi_inflatable(
    map: &TorusMap,
    cu_dim: usize,
    n_cs: usize,
    n_cu: usize,
    params: &InflatabilityParams,
    splitting: &SplittingParams,
    seed: u64,
) -> Result<BiInflatability> {
    let cs = check_inflatable(map, Side::Cs, cu_dim, n_cs, params, splitting, seed)?;
    let cu = check_inflatable(map, Side::Cu, cu_dim, n_cu, params, splitting, seed)?;
    let bi_inflatable = cs.inflatable && cu.inflatable;
    Ok(BiInflatability { cs, cu, bi_inflatable })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub report: InflatabilityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub system: String,
    pub amplitude: String,
    pub points: Vec<SweepPoint>,
    /// Largest amplitude on the grid with a positive verdict.
    pub largest_inflatable: Option<f64>,
    /// Largest amplitude up to which every verdict agrees with the smallest amplitude's.
    pub verdict_stable_up_to: Option<f64>,
    /// Largest `|margin(e) - margin(e')| / |e - e'|` between neighbours.
    pub lipschitz: f64,
    /// Slope of a least-squares line through `(e, margin(e))`.
    pub margin_slope: f64,
    pub margin_range: f64,
}

/// Re-runs [`check_inflatable`] for each amplitude of a catalog family with
/// the same seed, so every run sees the same sample points.
#[allow(clippy::too_many_arguments)]
pub fn perturbation_sweep(
    entry: &SystemCatalogEntry,
    base_params: &std::collections::BTreeMap<String, f64>,
    epsilons: &[f64],
    side: Side,
    cu_dim: usize,
    n: usize,
    params: &InflatabilityParams,
    splitting: &SplittingParams,
    seed: u64,
) -> Result<SweepReport> {
    let amplitude = entry
        .amplitude
        .ok_or_else(|| LabError::invalid("system.id", format!("`{}` has no perturbation amplitude", entry.id)))?;
    if epsilons.is_empty() {
        return Err(LabError::invalid("sweep.epsilons", "must not be empty"));
    }
    let mut eps: Vec<f64> = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();

    let mut points = Vec::with_capacity(eps.len());
    for &e in &eps {
        let mut p = base_params.clone();
        p.insert(amplitude.to_string(), e);
        let map = entry.build(&p)?;
        let report = check_inflatable(&map, side, cu_dim, n, params, splitting, seed)?;
        points.push(SweepPoint { epsilon: e, report });
    }

    let largest_inflatable = points.iter().filter(|p| p.report.inflatable).map(|p| p.epsilon).last();
    let first = points[0].report.inflatable;
    let verdict_stable_up_to = points.iter().take_while(|p| p.report.inflatable == first).map(|p| p.epsilon).last();
    let lipschitz = points
        .windows(2)
        .map(|w| (w[1].report.margin - w[0].report.margin).abs() / (w[1].epsilon - w[0].epsilon))
        .fold(0.0, f64::max);
    let margins: Vec<f64> = points.iter().map(|p| p.report.margin).collect();
    let margin_slope = if eps.len() >= 2 { linear_fit(&eps, &margins).1 } else { 0.0 };
    let margin_range = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - margins.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SweepReport {
        system: entry.id.to_string(),
        amplitude: amplitude.to_string(),
        points,
        largest_inflatable,
        verdict_stable_up_to,
        lipschitz,
        margin_slope,
        margin_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::catalog::system;

    fn small() -> InflatabilityParams {
        InflatabilityParams { samples: 100, grid_resolution: Some(4) }
    }

    #[test]
    fn cat_map_cu_side() {
        let cat = system("cat2").unwrap();
        let r = check_inflatable(&cat, Side::Cu, 1, 10, &small(), &SplittingParams::default(), 1).unwrap();
        let lu = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert_eq!(r.rhs, 0.0);
        assert!((r.lhs / 10.0 - lu).abs() < 1e-9);
        assert!(r.inflatable);
    }

    #[test]
    fn zero_horizon_is_not_inflatable() {
        let cat = system("cat2").unwrap();
        let r = check_inflatable(&cat, Side::Cs, 1, 0, &small(), &SplittingParams::default(), 1).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(!r.inflatable);
    }

    #[test]
    fn too_few_samples() {
        let cat = system("cat2").unwrap();
        let p = InflatabilityParams { samples: 10, grid_resolution: None };
        assert!(check_inflatable(&cat, Side::Cu, 1, 1, &p, &SplittingParams::default(), 1).is_err());
    }

    #[test]
    fn one_dimensional_cap_is_zero() {
        let cat = system("cat2").unwrap();
        let s = xi_cap_series(&cat, Side::Cu, 1, 3, 8, &SplittingParams::default()).unwrap();
        assert!(s.iter().all(|e| e.value == 0.0));
    }
}
