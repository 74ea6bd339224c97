//! Per-generation statistics of an iterated disk.

use std::io::Write;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use serde::{Deserialize, Serialize};

use super::geometry::{distance_to_boundary, fubini_check, span_from_distance, theta, vertex_weights};
use super::{iterate_disk, Disk};
use crate::error::{LabError, Result};
use crate::rng::{Module, SeedStream};
use crate::system::TorusMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesParams {
    pub delta: f64,
    /// Good-set threshold on `theta`.
    pub h: f64,
    pub generations: usize,
    /// Vertices sampled (by `m_D` weight) for span quantiles.
    pub span_samples: usize,
    pub span_cap: f64,
    pub span_levels: u32,
    pub seed: u64,
}

impl Default for SeriesParams {
    fn default() -> Self {
        SeriesParams { delta: 0.05, h: 0.5, generations: 12, span_samples: 200, span_cap: 0.25, span_levels: 20, seed: 0 }
    }
}

impl SeriesParams {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(LabError::invalid("disk.delta", "must be positive"));
        }
        if !(self.h > 0.0) {
            return Err(LabError::invalid("disk.h", "must be positive"));
        }
        if !(self.span_cap > 0.0) || self.span_levels == 0 || self.span_levels > 60 {
            return Err(LabError::invalid("disk.span_cap", "needs a positive cap and 1..=60 levels"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationStats {
    pub n: usize,
    pub vertices: usize,
    pub volume: f64,
    pub boundary_measure: f64,
    pub good_fraction: f64,
    pub bad_mass: f64,
    /// `int theta dm_D`
    pub theta_integral: f64,
    pub k_bound: f64,
    /// `(K / h) |m_dD| / |m_D|`: Chebyshev bound on the bad fraction.
    pub chebyshev_bound: f64,
    /// `m_D(G^c) <= (K / h) |m_dD|`
    pub chebyshev_holds: bool,
    pub fubini_gap: f64,
    pub span_basepoint: f64,
    pub span_q25: f64,
    pub span_q50: f64,
    pub span_q75: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn stats(disk: &Disk, params: &SeriesParams) -> Result<GenerationStats> {
    let vis = theta(disk, params.delta, params.h);
    let fub = fubini_check(disk, params.delta);
    let dist = distance_to_boundary(disk);
    let w = vertex_weights(disk);
    let span_at = |v: usize| span_from_distance(v, dist[v], params.span_cap, params.span_levels).span;

    let mut spans: Vec<f64> = if params.span_samples == 0 {
        Vec::new()
    } else {
        let pick = WeightedIndex::new(&w).map_err(|e| LabError::invalid("disk", e.to_string()))?;
        let mut rng = SeedStream::new(params.seed).rng(Module::Disk, disk.generation() as u64);
        (0..params.span_samples).map(|_| span_at(pick.sample(&mut rng))).collect()
    };
    spans.sort_by(f64::total_cmp);
    let chebyshev_mass = fub.k_bound / params.h * fub.boundary_measure;
    Ok(GenerationStats {
        n: disk.generation(),
        vertices: disk.vertex_count(),
        volume: vis.volume,
        boundary_measure: vis.boundary_measure,
        good_fraction: vis.good_fraction,
        bad_mass: vis.bad_mass,
        theta_integral: fub.lhs,
        k_bound: fub.k_bound,
        chebyshev_bound: chebyshev_mass / vis.volume,
        chebyshev_holds: vis.bad_mass <= chebyshev_mass * (1.0 + 1e-12),
        fubini_gap: fub.relative_gap,
        span_basepoint: disk.basepoint().map_or(f64::NAN, span_at),
        span_q25: quantile(&spans, 0.25),
        span_q50: quantile(&spans, 0.5),
        span_q75: quantile(&spans, 0.75),
    })
}

/// Statistics of the seed and of each of `generations` successive images.
pub fn disk_series(map: &TorusMap, seed: &Disk, params: &SeriesParams) -> Result<(Vec<GenerationStats>, Disk)> {
    params.validate()?;
    let mut disk = seed.clone();
    let mut rows = vec![stats(&disk, params)?];
    for _ in 0..params.generations {
        disk = iterate_disk(map, &disk, 1)?;
        rows.push(stats(&disk, params)?);
    }
    Ok((rows, disk))
}

/// `(n, |m_dD_n|, good fraction, Chebyshev bound)` for `n = 0..=generations`.
pub fn good_fraction_series(map: &TorusMap, seed: &Disk, params: &SeriesParams) -> Result<Vec<(usize, f64, f64, f64)>> {
    let (rows, _) = disk_series(map, seed, params)?;
    Ok(rows.iter().map(|r| (r.n, r.boundary_measure, r.good_fraction, r.chebyshev_bound)).collect())
}

/// `(n, span at the basepoint, [q25, q50, q75])` for `n = 0..=generations`.
pub fn span_series(map: &TorusMap, seed: &Disk, params: &SeriesParams) -> Result<Vec<(usize, f64, [f64; 3])>> {
    let (rows, _) = disk_series(map, seed, params)?;
    Ok(rows.iter().map(|r| (r.n, r.span_basepoint, [r.span_q25, r.span_q50, r.span_q75])).collect())
}

/// CSV with columns `n, volume, boundary_measure, good_fraction, chebyshev_bound, span_q25, span_q50, span_q75`.
pub fn write_series_csv<W: Write>(rows: &[GenerationStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "volume",
        "boundary_measure",
        "good_fraction",
        "chebyshev_bound",
        "span_q25",
        "span_q50",
        "span_q75",
    ])?;
    for r in rows {
        w.write_record(&[
            r.n.to_string(),
            r.volume.to_string(),
            r.boundary_measure.to_string(),
            r.good_fraction.to_string(),
            r.chebyshev_bound.to_string(),
            r.span_q25.to_string(),
            r.span_q50.to_string(),
            r.span_q75.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
