//! Run configuration: one JSON document with a section per module.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diskgrowth::{SeriesParams, DEFAULT_VERTEX_CAP, MAX_SEED_RADIUS};
use crate::error::{LabError, Result};
use crate::hopf::{TransferParams, MIN_PROFILE_HORIZON};
use crate::inflatability::{InflatabilityParams, MIN_SAMPLES};
use crate::productstructure::{CHART_CAP, DEFAULT_SAFETY_MARGIN};
use crate::splitting::SplittingParams;
use crate::system::catalog::lookup;
use crate::system::TorusMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Dimension of the centre-unstable bundle; defaults to the catalog's choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cu_dim: Option<usize>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig { id: "cat2".into(), params: BTreeMap::new(), cu_dim: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Splitting,
    Lyapunov,
    Inflatability,
    Hopf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovConfig {
    pub horizon: usize,
    /// Random sample points.
    pub points: usize,
    pub margin_threshold: f64,
    /// Horizon of the domination fit.
    pub domination_horizon: usize,
    /// Frames used in the domination fit.
    pub domination_frames: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig { horizon: 1000, points: 200, margin_threshold: 0.05, domination_horizon: 10, domination_frames: 20 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideSelection {
    Cu,
    Cs,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InflatabilityConfig {
    /// Horizons to scan; the report keeps the best margin per side.
    pub horizons: Vec<usize>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
    pub side: SideSelection,
}

impl Default for InflatabilityConfig {
    fn default() -> Self {
        InflatabilityConfig { horizons: vec![10], samples: 10_000, grid_resolution: None, side: SideSelection::Both }
    }
}

impl InflatabilityConfig {
    pub fn params(&self) -> InflatabilityParams {
        InflatabilityParams { samples: self.samples, grid_resolution: self.grid_resolution }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiskConfig {
    /// Seed point; a random point when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub r0: f64,
    /// Edge length of the seed mesh; `h_max` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    pub h_max: f64,
    pub vertex_cap: usize,
    pub delta: f64,
    pub h: f64,
    pub generations: usize,
    pub span_samples: usize,
    pub span_cap: f64,
    pub span_levels: u32,
    /// Grid used for `Xi_n` in the boundary-growth check (2-dimensional disks).
    pub xi_grid_resolution: usize,
}

impl Default for DiskConfig {
    fn default() -> Self {
        DiskConfig {
            point: None,
            r0: 0.001,
            resolution: None,
            h_max: 0.01,
            vertex_cap: DEFAULT_VERTEX_CAP,
            delta: 0.05,
            h: 0.5,
            generations: 12,
            span_samples: 200,
            span_cap: 0.25,
            span_levels: 20,
            xi_grid_resolution: 16,
        }
    }
}

impl DiskConfig {
    pub fn series(&self, seed: u64) -> SeriesParams {
        SeriesParams {
            delta: self.delta,
            h: self.h,
            generations: self.generations,
            span_samples: self.span_samples,
            span_cap: self.span_cap,
            span_levels: self.span_levels,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfConfig {
    pub points: usize,
    pub horizon: usize,
    pub radius: f64,
    /// Base points for the stable-transfer check.
    pub pairs: usize,
    pub candidates_per_point: usize,
    pub t_scale: f64,
    pub horizon_conv: usize,
    pub convergence_ratio: f64,
    pub tolerance: f64,
}

impl Default for HopfConfig {
    fn default() -> Self {
        let t = TransferParams::default();
        HopfConfig {
            points: 500,
            horizon: 100_000,
            radius: 0.1,
            pairs: 25,
            candidates_per_point: 4,
            t_scale: 1e-3,
            horizon_conv: t.horizon_conv,
            convergence_ratio: t.convergence_ratio,
            tolerance: t.tolerance,
        }
    }
}

impl HopfConfig {
    pub fn transfer(&self) -> TransferParams {
        TransferParams {
            horizon_conv: self.horizon_conv,
            convergence_ratio: self.convergence_ratio,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProductConfig {
    pub grid_resolution: usize,
    pub safety_margin: f64,
    pub k_span: f64,
    /// Basepoint separation; the certificate's admissible separation when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    pub trials: usize,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig { grid_resolution: 16, safety_margin: DEFAULT_SAFETY_MARGIN, k_span: 0.4, separation: None, trials: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub side: SideSelection,
    pub horizon: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { epsilons: (0..=8).map(|i| 0.0025 * i as f64).collect(), side: SideSelection::Cu, horizon: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; machine parallelism when absent. Never echoed in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Stages run by `analyze`; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modules: Option<Vec<Stage>>,
    #[serde(default)]
    pub splitting: SplittingParams,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
    #[serde(default)]
    pub inflatability: InflatabilityConfig,
    #[serde(default)]
    pub disk: DiskConfig,
    #[serde(default)]
    pub hopf: HopfConfig,
    #[serde(default)]
    pub product_structure: ProductConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("domlab-out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemConfig::default(),
            seed: 0,
            output_dir: default_output_dir(),
            threads: None,
            modules: None,
            splitting: SplittingParams::default(),
            lyapunov: LyapunovConfig::default(),
            inflatability: InflatabilityConfig::default(),
            disk: DiskConfig::default(),
            hopf: HopfConfig::default(),
            product_structure: ProductConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn check(ok: bool, field: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(LabError::invalid(field, message))
    }
}

impl RunConfig {
    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            LabError::invalid(if path == "." { "config".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn build_system(&self) -> Result<TorusMap> {
        lookup(&self.system.id)?.build(&self.system.params)
    }

    pub fn cu_dim(&self) -> Result<usize> {
        let entry = lookup(&self.system.id)?;
        let cu = self
            .system
            .cu_dim
            .or(entry.default_cu)
            .ok_or_else(|| LabError::invalid("system.cu_dim", format!("`{}` has no default splitting; set cu_dim", entry.id)))?;
        check(cu >= 1 && cu < entry.dim, "system.cu_dim", "must lie strictly between 0 and the dimension")?;
        Ok(cu)
    }

    pub fn validate(&self) -> Result<()> {
        let entry = lookup(&self.system.id)?;
        entry.build(&self.system.params)?;
        if let Some(cu) = self.system.cu_dim {
            check(cu >= 1 && cu < entry.dim, "system.cu_dim", "must lie strictly between 0 and the dimension")?;
        }
        if let Some(t) = self.threads {
            check(t >= 1, "threads", "must be at least 1")?;
        }
        let s = &self.splitting;
        check(s.iters >= 1, "splitting.iters", "must be at least 1")?;
        check(s.tolerance > 0.0, "splitting.tolerance", "must be positive")?;

        let l = &self.lyapunov;
        check(l.horizon >= 1, "lyapunov.horizon", "must be at least 1")?;
        check(l.points >= 1, "lyapunov.points", "must be at least 1")?;
        check(l.margin_threshold >= 0.0, "lyapunov.margin_threshold", "must be nonnegative")?;
        check(l.domination_horizon >= 3, "lyapunov.domination_horizon", "must be at least 3")?;
        check(l.domination_frames >= 1, "lyapunov.domination_frames", "must be at least 1")?;

        let i = &self.inflatability;
        check(!i.horizons.is_empty(), "inflatability.horizons", "must not be empty")?;
        check(i.samples >= MIN_SAMPLES, "inflatability.samples", "must be at least 100")?;
        check(i.grid_resolution.map_or(true, |r| r >= 1), "inflatability.grid_resolution", "must be at least 1")?;

        let d = &self.disk;
        check(d.r0 > 0.0 && d.r0 <= MAX_SEED_RADIUS, "disk.r0", "must lie in (0, 0.05]")?;
        check(d.resolution.map_or(true, |r| r > 0.0), "disk.resolution", "must be positive")?;
        check(d.h_max > 0.0, "disk.h_max", "must be positive")?;
        check(d.vertex_cap >= 1, "disk.vertex_cap", "must be at least 1")?;
        check(d.delta > 0.0, "disk.delta", "must be positive")?;
        check(d.h > 0.0, "disk.h", "must be positive")?;
        check(d.span_cap > 0.0, "disk.span_cap", "must be positive")?;
        check((1..=60).contains(&d.span_levels), "disk.span_levels", "must lie in 1..=60")?;
        check(d.xi_grid_resolution >= 1, "disk.xi_grid_resolution", "must be at least 1")?;
        if let Some(p) = &d.point {
            check(p.len() == entry.dim, "disk.point", "length must equal the system dimension")?;
        }

        let h = &self.hopf;
        check(h.points >= 1, "hopf.points", "must be at least 1")?;
        check(h.horizon >= MIN_PROFILE_HORIZON, "hopf.horizon", "must be at least 1000")?;
        check(h.radius > 0.0, "hopf.radius", "must be positive")?;
        check(h.t_scale > 0.0, "hopf.t_scale", "must be positive")?;
        check(h.horizon_conv >= 1, "hopf.horizon_conv", "must be at least 1")?;
        check(h.convergence_ratio > 0.0 && h.convergence_ratio < 1.0, "hopf.convergence_ratio", "must lie in (0, 1)")?;
        check(h.tolerance > 0.0, "hopf.tolerance", "must be positive")?;

        let p = &self.product_structure;
        check(p.grid_resolution >= 1, "product_structure.grid_resolution", "must be at least 1")?;
        check(p.safety_margin >= 0.0, "product_structure.safety_margin", "must be nonnegative")?;
        check(p.k_span > 0.0 && p.k_span <= CHART_CAP, "product_structure.k_span", "must lie in (0, 0.4]")?;
        check(
            p.separation.map_or(true, |s| s >= 0.0 && s <= 2.0 * p.k_span),
            "product_structure.separation",
            "must lie in [0, 2 k_span]",
        )?;
        check(p.trials >= 1, "product_structure.trials", "must be at least 1")?;

        let w = &self.sweep;
        check(!w.epsilons.is_empty(), "sweep.epsilons", "must not be empty")?;
        check(w.epsilons.iter().all(|e| e.is_finite()), "sweep.epsilons", "must be finite")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn field_level_errors() {
        let err = RunConfig::from_json(r#"{"inflatability": {"samples": -5}}"#).unwrap_err();
        assert!(err.to_string().starts_with("inflatability.samples"), "{err}");
        let err = RunConfig::from_json(r#"{"lyapunov": {"horizon": 10, "bogus": 1}}"#).unwrap_err();
        assert!(err.to_string().starts_with("lyapunov"), "{err}");
        let err = RunConfig::from_json(r#"{"disk": {"r0": 0.5}}"#).unwrap_err();
        assert!(err.to_string().starts_with("disk.r0"), "{err}");
    }
}
