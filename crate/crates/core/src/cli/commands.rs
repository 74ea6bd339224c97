use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{RunConfig, SideSelection, Stage};
use super::report::Report;
use crate::diskgrowth::mesh_io::{write_mesh, MeshData};
use crate::diskgrowth::{disk_series, seed_disk, write_series_csv};
use crate::error::{LabError, Result};
use crate::hopf::{cluster_components, profiles, stable_candidates, stable_transfer_check, ObservableBank};
use crate::inflatability::{check_inflatable, perturbation_sweep, xi_cap_series, InflatabilityReport, Side};
use crate::lyapunov::{classify_hyperbolic, finite_time_exponents, LyapunovEstimate, Verdict};
use crate::productstructure::{disk_intersection_test, fit_constant_cones};
use crate::rng::{Module, SeedStream};
use crate::splitting::{estimate_splitting, fit_domination, SplittingFrame};
use crate::system::catalog::lookup;
use crate::system::{TorusMap, TorusPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Lyapunov,
    Inflatability,
    DiskGrow,
    Hopf,
    ProductStructure,
    Sweep,
    Report,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Analyze,
        Command::Lyapunov,
        Command::Inflatability,
        Command::DiskGrow,
        Command::Hopf,
        Command::ProductStructure,
        Command::Sweep,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Lyapunov => "lyapunov",
            Command::Inflatability => "inflatability",
            Command::DiskGrow => "disk-grow",
            Command::Hopf => "hopf",
            Command::ProductStructure => "product-structure",
            Command::Sweep => "sweep",
            Command::Report => "report",
        }
    }
}

impl FromStr for Command {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| LabError::invalid("command", format!("unknown command `{s}`")))
    }
}

/// Everything the front end can override on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub system: Option<String>,
}

pub const THREADS_ENV: &str = "DOMLAB_THREADS";

/// Loads the config file (or defaults) and applies flag and environment overrides.
pub fn resolve_config(inv: &Invocation) -> Result<RunConfig> {
    let mut cfg = match &inv.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &inv.out {
        cfg.output_dir = out.clone();
    }
    if let Some(id) = &inv.system {
        if *id != cfg.system.id {
            cfg.system.id = id.clone();
            cfg.system.params.clear();
            cfg.system.cu_dim = None;
        }
    }
    if let Some(t) = inv.threads {
        cfg.threads = Some(t);
    } else if let Ok(v) = std::env::var(THREADS_ENV) {
        let t = v.trim().parse().map_err(|_| LabError::invalid(THREADS_ENV, "must be a positive integer"))?;
        cfg.threads = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(command: Command, inv: &Invocation) -> Result<Report> {
    run(command, &resolve_config(inv)?)
}

/// Runs one command, writing `<command>.json` and its side files into the output directory.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    fs::create_dir_all(&cfg.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| LabError::invalid("threads", e.to_string()))?;
    let mut report = Report::new(command.name(), cfg);
    pool.install(|| dispatch(command, cfg, &mut report))?;
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    report.write(&cfg.output_dir.join(format!("{}.json", command.name())))?;
    Ok(report)
}

fn dispatch(command: Command, cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let mut ctx = Context::new(cfg, report)?;
    match command {
        Command::Analyze => {
            let all = [Stage::Splitting, Stage::Lyapunov, Stage::Inflatability, Stage::Hopf];
            let stages = cfg.modules.clone().unwrap_or_else(|| all.to_vec());
            if stages.contains(&Stage::Splitting) || stages.contains(&Stage::Lyapunov) {
                let frames = ctx.splitting()?;
                if stages.contains(&Stage::Lyapunov) {
                    ctx.lyapunov(&frames)?;
                }
            }
            if stages.contains(&Stage::Inflatability) {
                ctx.inflatability()?;
            }
            if stages.contains(&Stage::Hopf) {
                ctx.hopf()?;
            }
        }
        Command::Lyapunov => {
            let frames = ctx.splitting()?;
            ctx.lyapunov(&frames)?;
        }
        Command::Inflatability => ctx.inflatability()?,
        Command::DiskGrow => ctx.disk_grow()?,
        Command::Hopf => ctx.hopf()?,
        Command::ProductStructure => ctx.product_structure()?,
        Command::Sweep => ctx.sweep()?,
        Command::Report => ctx.summary()?,
    }
    Ok(())
}

struct Context<'a> {
    cfg: &'a RunConfig,
    map: TorusMap,
    stream: SeedStream,
    report: &'a mut Report,
}

fn sides(sel: SideSelection) -> Vec<Side> {
    match sel {
        SideSelection::Cu => vec![Side::Cu],
        SideSelection::Cs => vec![Side::Cs],
        SideSelection::Both => vec![Side::Cs, Side::Cu],
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Cu => "cu",
        Side::Cs => "cs",
    }
}

fn coords_csv(p: &TorusPoint) -> String {
    p.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn coord_header(d: usize, prefix: &str) -> String {
    (0..d).map(|i| format!("{prefix}x{i}")).collect::<Vec<_>>().join(",")
}

#[derive(Serialize)]
struct Moments {
    mean: f64,
    standard_error: f64,
    min: f64,
    max: f64,
}

fn moments(values: &[f64]) -> Moments {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Moments {
        mean,
        standard_error: (var / n).sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig, report: &'a mut Report) -> Result<Self> {
        Ok(Context { cfg, map: cfg.build_system()?, stream: SeedStream::new(cfg.seed), report })
    }

    fn write_file(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        fs::write(self.cfg.output_dir.join(name), contents)?;
        self.report.files.push(name.to_string());
        Ok(())
    }

    fn frames_at(&self, points: &[TorusPoint], cu: usize) -> Result<(Vec<SplittingFrame>, usize)> {
        let results: Vec<Option<SplittingFrame>> = points
            .par_iter()
            .map(|x| match estimate_splitting(&self.map, x, cu, &self.cfg.splitting) {
                Ok(f) => Ok(Some(f)),
                Err(LabError::NoConvergence { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let skipped = results.iter().filter(|r| r.is_none()).count();
        if skipped * 100 > points.len() {
            return Err(LabError::TooManySkipped { skipped, total: points.len() });
        }
        Ok((results.into_iter().flatten().collect(), skipped))
    }

    fn splitting(&mut self) -> Result<Vec<SplittingFrame>> {
        let cu = self.cfg.cu_dim()?;
        let d = self.map.dim();
        let points: Vec<TorusPoint> =
            (0..self.cfg.lyapunov.points).map(|i| self.stream.uniform_point(Module::Splitting, i as u64, d)).collect();
        let (frames, skipped) = self.frames_at(&points, cu)?;
        let l = &self.cfg.lyapunov;
        let fit_frames = &frames[..frames.len().min(l.domination_frames)];
        let domination = fit_domination(&self.map, fit_frames, l.domination_horizon)?;
        let max_residual = frames.iter().map(|f| f.convergence_residual).fold(0.0, f64::max);
        let min_angle = frames.iter().map(|f| f.angle).fold(f64::INFINITY, f64::min);
        self.report.insert(
            "splitting",
            &serde_json::json!({
                "cu_dim": cu,
                "points": points.len(),
                "skipped": skipped,
                "tolerance": self.cfg.splitting.tolerance,
                "max_residual": max_residual,
                "min_angle": min_angle,
                "domination": domination,
            }),
        );
        self.report.verdict("dominated", domination.dominated);
        Ok(frames)
    }

    fn lyapunov(&mut self, frames: &[SplittingFrame]) -> Result<()> {
        let l = &self.cfg.lyapunov;
        let results: Vec<Option<LyapunovEstimate>> = frames
            .par_iter()
            .map(|f| match finite_time_exponents(&self.map, f, l.horizon, &self.cfg.splitting) {
                Ok(e) => Ok(Some(e)),
                Err(LabError::NoConvergence { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let skipped = results.iter().filter(|r| r.is_none()).count();
        if skipped * 100 > frames.len() {
            return Err(LabError::TooManySkipped { skipped, total: frames.len() });
        }
        let estimates: Vec<LyapunovEstimate> = results.into_iter().flatten().collect();
        let class = classify_hyperbolic(&estimates, l.margin_threshold)?;
        let cu: Vec<f64> = estimates.iter().map(|e| e.lambda_cu).collect();
        let cs: Vec<f64> = estimates.iter().map(|e| e.lambda_cs).collect();
        let max_sum = estimates.iter().map(|e| e.spectrum_sum().abs()).fold(0.0, f64::max);
        let spectrum: Vec<Moments> = (0..self.map.dim())
            .map(|i| moments(&estimates.iter().map(|e| e.spectrum[i]).collect::<Vec<_>>()))
            .collect();
        self.report.insert(
            "lyapunov",
            &serde_json::json!({
                "horizon": l.horizon,
                "points": estimates.len(),
                "skipped": skipped,
                "lambda_cu": moments(&cu),
                "lambda_cs": moments(&cs),
                "spectrum": spectrum,
                "max_abs_spectrum_sum": max_sum,
                "margin_threshold": l.margin_threshold,
                "hyperbolic_fraction": class.hyperbolic_fraction,
            }),
        );
        self.report.verdict("hyperbolic_everywhere_sampled", class.hyperbolic_fraction == 1.0);
        self.report.note("hyperbolic fraction is a finite-horizon proxy for the measure of the hyperbolic set");

        let d = self.map.dim();
        let mut csv = format!("{},lambda_cs,lambda_cu,margin,verdict\n", coord_header(d, ""));
        for (e, v) in estimates.iter().zip(&class.verdicts) {
            let verdict = if v.verdict == Verdict::Hyperbolic { "hyperbolic" } else { "undecided" };
            writeln!(csv, "{},{},{},{},{}", coords_csv(&e.point), e.lambda_cs, e.lambda_cu, v.margin, verdict).unwrap();
        }
        self.write_file("lyapunov.csv", csv.as_bytes())
    }

    fn inflatability(&mut self) -> Result<()> {
        let cu = self.cfg.cu_dim()?;
        let inf = &self.cfg.inflatability;
        let mut by_side = serde_json::Map::new();
        let mut inflatable = Vec::new();
        for side in sides(inf.side) {
            let reports: Vec<InflatabilityReport> = inf
                .horizons
                .iter()
                .map(|&n| check_inflatable(&self.map, side, cu, n, &inf.params(), &self.cfg.splitting, self.cfg.seed))
                .collect::<Result<_>>()?;
            let best = reports.iter().max_by(|a, b| a.margin.total_cmp(&b.margin)).unwrap().clone();
            self.report.verdict(&format!("{}_inflatable", side_name(side)), best.inflatable);
            inflatable.push(best.inflatable);
            by_side.insert(side_name(side).into(), serde_json::json!({ "reports": reports, "best": best }));
        }
        if inf.side == SideSelection::Both {
            self.report.verdict("bi_inflatable", inflatable.iter().all(|&b| b));
        }
        self.report.insert("inflatability", &by_side);
        self.report.note("inflatability is checked for the whole torus with Lebesgue measure, at the listed horizons only");
        Ok(())
    }

    fn hopf(&mut self) -> Result<()> {
        let h = &self.cfg.hopf;
        let d = self.map.dim();
        let bank = ObservableBank::default_for(d);
        let points: Vec<TorusPoint> = (0..h.points).map(|i| self.stream.uniform_point(Module::Hopf, i as u64, d)).collect();
        let profs = profiles(&self.map, &points, &bank, h.horizon)?;
        let clusters = cluster_components(&profs, h.radius)?;

        let mut transfer = serde_json::Value::Null;
        let mut pairs_csv = None;
        match self.cfg.cu_dim() {
            Ok(cu) => {
                let base = &points[..h.pairs.min(points.len())];
                let (frames, skipped) = self.frames_at(base, cu)?;
                let mut pairs = Vec::new();
                for f in &frames {
                    for y in stable_candidates(&self.map, &f.point, f, h.candidates_per_point, h.t_scale, &h.transfer())? {
                        pairs.push((f.point, y));
                    }
                }
                let check = stable_transfer_check(&self.map, &pairs, &bank, h.horizon, &h.transfer())?;
                let max_gap = check.pairs.iter().filter_map(|p| p.profile_gap).fold(0.0, f64::max);
                transfer = serde_json::json!({
                    "base_points": base.len(),
                    "skipped": skipped,
                    "pairs": pairs.len(),
                    "converging": check.converging,
                    "not_converging": check.not_converging,
                    "passed": check.passed,
                    "tolerance": check.tolerance,
                    "max_profile_gap": max_gap,
                });
                self.report.verdict("stable_transfer", check.all_pass);
                let mut csv = format!("{},{},d0,d_final,rate,converged,profile_gap\n", coord_header(d, ""), coord_header(d, "y_"));
                for p in &check.pairs {
                    let c = &p.convergence;
                    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                    writeln!(
                        csv,
                        "{},{},{},{},{},{},{}",
                        coords_csv(&p.x),
                        coords_csv(&p.y),
                        c.initial_distance,
                        c.final_distance,
                        opt(c.rate),
                        c.converged,
                        opt(p.profile_gap)
                    )
                    .unwrap();
                }
                pairs_csv = Some(csv);
            }
            Err(LabError::InvalidParameter { .. }) => {
                self.report.note("no splitting configured: stable-transfer check skipped");
            }
            Err(e) => return Err(e),
        }

        self.report.insert(
            "hopf",
            &serde_json::json!({
                "horizon": h.horizon,
                "points": points.len(),
                "observables": bank.names(),
                "radius": h.radius,
                "component_count": clusters.component_count,
                "fractions": clusters.fractions,
                "transfer": transfer,
            }),
        );
        self.report.verdict("single_component", clusters.component_count == 1);
        self.report.note("components are clusters of finite-horizon Birkhoff profiles, a numerical proxy");

        let names = bank.names();
        let fwd: Vec<String> = names.iter().map(|n| format!("fwd_{n}")).collect();
        let bwd: Vec<String> = names.iter().map(|n| format!("bwd_{n}")).collect();
        let mut csv = format!("{},cluster,{},{}\n", coord_header(d, ""), fwd.join(","), bwd.join(","));
        for (p, c) in clusters.profiles.iter().zip(&clusters.assignment) {
            let vals: Vec<String> = p.forward.iter().chain(&p.backward).map(|v| v.to_string()).collect();
            writeln!(csv, "{},{},{}", coords_csv(&p.point), c, vals.join(",")).unwrap();
        }
        self.write_file("hopf_profiles.csv", csv.as_bytes())?;
        if let Some(csv) = pairs_csv {
            self.write_file("hopf_pairs.csv", csv.as_bytes())?;
        }
        Ok(())
    }

    fn disk_grow(&mut self) -> Result<()> {
        let cu = self.cfg.cu_dim()?;
        let dc = &self.cfg.disk;
        let d = self.map.dim();
        let x = match &dc.point {
            Some(p) => TorusPoint::new(p).map_err(|e| LabError::invalid("disk.point", e.to_string()))?,
            None => self.stream.uniform_point(Module::Disk, 1 << 39, d),
        };
        if cu > 2 {
            return Err(LabError::UnsupportedDimension(format!("disks of dimension {cu} (only 1 and 2)")));
        }
        let frame = estimate_splitting(&self.map, &x, cu, &self.cfg.splitting)?;
        let seed = seed_disk(&frame, dc.r0, dc.resolution.unwrap_or(dc.h_max))?.with_refinement(dc.h_max, dc.vertex_cap);
        let (rows, last) = disk_series(&self.map, &seed, &dc.series(self.cfg.seed))?;

        let xi: Vec<f64> = if cu == 1 {
            vec![0.0; rows.len()]
        } else {
            xi_cap_series(&self.map, Side::Cu, cu, dc.generations, dc.xi_grid_resolution, &self.cfg.splitting)?
                .iter()
                .map(|e| e.value)
                .collect()
        };
        let b0 = rows[0].boundary_measure.ln();
        let growth: Vec<serde_json::Value> = rows
            .iter()
            .zip(&xi)
            .map(|(r, xi)| {
                let lhs = r.boundary_measure.ln();
                serde_json::json!({ "n": r.n, "log_boundary": lhs, "bound": b0 + xi, "holds": lhs <= b0 + xi + 1e-2 })
            })
            .collect();
        let growth_ok = growth.iter().all(|g| g["holds"] == true);

        self.report.insert(
            "disk",
            &serde_json::json!({
                "point": x,
                "k": cu,
                "r0": dc.r0,
                "h_max": dc.h_max,
                "delta": dc.delta,
                "h": dc.h,
                "generations": rows,
                "boundary_growth": growth,
                "final_vertices": last.vertex_count(),
            }),
        );
        self.report.verdict("chebyshev_bound", rows.iter().all(|r| r.chebyshev_holds));
        self.report.verdict("fubini_identity", rows.iter().all(|r| r.fubini_gap <= 1e-3));
        self.report.verdict("boundary_growth_bound", growth_ok);
        self.report.note("span is mesh-scale: distance to the mesh boundary, capped at the chart size");
        self.report.note("the seed radius r0 is a fixed parameter, not a Pesin size function");

        let mut buf = Vec::new();
        write_series_csv(&rows, &mut buf)?;
        self.write_file("disk_series.csv", &buf)?;
        for (name, disk) in [("disk_seed.mesh", &seed), ("disk_final.mesh", &last)] {
            let mut buf = Vec::new();
            write_mesh(&MeshData::from_disk(disk), &mut buf)?;
            self.write_file(name, &buf)?;
        }
        Ok(())
    }

    fn product_structure(&mut self) -> Result<()> {
        let cu = self.cfg.cu_dim()?;
        let p = &self.cfg.product_structure;
        let cert = fit_constant_cones(&self.map, cu, p.grid_resolution, p.safety_margin, &self.cfg.splitting)?;
        let separation = p.separation.unwrap_or(cert.admissible_ratio() * p.k_span);
        let test = if separation > 0.0 || p.separation.is_some() {
            Some(disk_intersection_test(&self.map, cu, p.k_span, separation, p.trials, self.cfg.seed, &self.cfg.splitting)?)
        } else {
            self.report.note("certificate invalid and no separation given: intersection test skipped");
            None
        };
        self.report.insert(
            "product_structure",
            &serde_json::json!({
                "cs_axis": cert.cs.axis,
                "cu_axis": cert.cu.axis,
                "cs_half_angle": cert.cs.half_angle,
                "cu_half_angle": cert.cu.half_angle,
                "cs_max_deviation": cert.cs.max_deviation,
                "cu_max_deviation": cert.cu.max_deviation,
                "min_containment_margin": cert.min_containment_margin,
                "transversality_margin": cert.transversality_margin,
                "admissible_ratio": cert.admissible_ratio(),
                "grid_resolution": cert.grid_resolution,
                "intersection": test,
            }),
        );
        self.report.verdict("certificate_valid", cert.valid);
        if let Some(t) = &test {
            self.report.verdict("disks_intersect", t.hit_rate == 1.0);
        }
        self.report.note("the intersection test is chart-local: basepoints are at most 2 k_span apart");
        Ok(())
    }

    fn sweep(&mut self) -> Result<()> {
        let cu = self.cfg.cu_dim()?;
        let entry = lookup(&self.cfg.system.id)?;
        let w = &self.cfg.sweep;
        let mut csv = String::from("side,epsilon,lhs,standard_error,rhs,margin,inflatable\n");
        let mut stable = true;
        let mut all = serde_json::Map::new();
        for side in sides(w.side) {
            let mut base = self.cfg.system.params.clone();
            if let Some(a) = entry.amplitude {
                base.remove(a);
            }
            let sweep = perturbation_sweep(
                &entry,
                &base,
                &w.epsilons,
                side,
                cu,
                w.horizon,
                &self.cfg.inflatability.params(),
                &self.cfg.splitting,
                self.cfg.seed,
            )?;
            for p in &sweep.points {
                let r = &p.report;
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    side_name(side),
                    p.epsilon,
                    r.lhs,
                    r.standard_error,
                    r.rhs,
                    r.margin,
                    r.inflatable
                )
                .unwrap();
            }
            stable &= sweep.points.iter().all(|p| p.report.inflatable == sweep.points[0].report.inflatable);
            all.insert(side_name(side).into(), serde_json::to_value(&sweep).unwrap());
        }
        self.report.insert("sweep", &all);
        self.report.verdict("verdict_unchanged", stable);
        self.write_file("sweep.csv", csv.as_bytes())
    }

    fn summary(&mut self) -> Result<()> {
        let dir: &Path = &self.cfg.output_dir;
        let mut entries = serde_json::Map::new();
        for c in Command::ALL {
            if c == Command::Report {
                continue;
            }
            let path = dir.join(format!("{}.json", c.name()));
            if path.exists() {
                let r = Report::read(&path)?;
                entries.insert(
                    c.name().into(),
                    serde_json::json!({ "system": r.config.system, "seed": r.rng.seed, "verdicts": r.verdicts }),
                );
            }
        }
        if entries.is_empty() {
            self.report.note("no reports found in the output directory");
        }
        self.report.insert("reports", &entries);
        Ok(())
    }
}
