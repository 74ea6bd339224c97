//! Hopf-argument probes: Birkhoff profiles, clustering of profiles into
//! numerical ergodic components, and transfer of forward averages along
//! sampled stable sets.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::transport;
use crate::error::{LabError, Result};
use crate::rng::{Module, SeedStream};
use crate::splitting::{linear_fit, SplittingFrame};
use crate::system::{Coords, TorusMap, TorusPoint};

pub type ObservableFn = Arc<dyn Fn(&TorusPoint) -> f64 + Send + Sync>;

/// A continuous scalar function on the torus.
#[derive(Clone)]
pub enum Observable {
    Cos(usize),
    Sin(usize),
    /// `cos 2 pi (x_i + x_j)`
    CosSum(usize, usize),
    Constant(f64),
    Custom { name: String, f: ObservableFn },
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Cos(i) => format!("cos2pi_x{i}"),
            Observable::Sin(i) => format!("sin2pi_x{i}"),
            Observable::CosSum(i, j) => format!("cos2pi_x{i}+x{j}"),
            Observable::Constant(c) => format!("const_{c}"),
            Observable::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, x: &TorusPoint) -> f64 {
        let c = x.coords();
        match self {
            Observable::Cos(i) => (TAU * c[*i]).cos(),
            Observable::Sin(i) => (TAU * c[*i]).sin(),
            Observable::CosSum(i, j) => {
                let (si, ci) = (TAU * c[*i]).sin_cos();
                let (sj, cj) = (TAU * c[*j]).sin_cos();
                ci * cj - si * sj
            }
            Observable::Constant(v) => *v,
            Observable::Custom { f, .. } => f(x),
        }
    }

    fn max_index(&self) -> Option<usize> {
        match self {
            Observable::Cos(i) | Observable::Sin(i) => Some(*i),
            Observable::CosSum(i, j) => Some(*i.max(j)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ObservableBank {
    observables: Vec<Observable>,
}

impl ObservableBank {
    pub fn new(observables: Vec<Observable>) -> Result<Self> {
        for o in &observables {
            if let Observable::Constant(c) = o {
                if c.abs() > 1.0 {
                    return Err(LabError::invalid("bank", "observables must take values in [-1, 1]"));
                }
            }
        }
        Ok(ObservableBank { observables })
    }

    /// `cos 2 pi x_i`, `sin 2 pi x_i` for every coordinate and
    /// `cos 2 pi (x_i + x_j)` for every pair `i < j`.
    pub fn default_for(dim: usize) -> Self {
        let mut obs = Vec::new();
        for i in 0..dim {
            obs.push(Observable::Cos(i));
            obs.push(Observable::Sin(i));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                obs.push(Observable::CosSum(i, j));
            }
        }
        ObservableBank { observables: obs }
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn names(&self) -> Vec<String> {
        self.observables.iter().map(Observable::name).collect()
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.len() < dim {
            return Err(LabError::invalid("bank", format!("needs at least {dim} observables")));
        }
        if self.observables.iter().filter_map(Observable::max_index).any(|i| i >= dim) {
            return Err(LabError::invalid("bank", "observable refers to a missing coordinate"));
        }
        Ok(())
    }

    /// Evaluates every observable at `x`, sharing one `sin_cos` per coordinate.
    fn eval_into(&self, x: &TorusPoint, trig: &mut [(f64, f64)], out: &mut [f64]) {
        for (t, c) in trig.iter_mut().zip(x.coords()) {
            *t = (TAU * c).sin_cos();
        }
        for (o, slot) in self.observables.iter().zip(out.iter_mut()) {
            *slot = match o {
                Observable::Cos(i) => trig[*i].1,
                Observable::Sin(i) => trig[*i].0,
                Observable::CosSum(i, j) => trig[*i].1 * trig[*j].1 - trig[*i].0 * trig[*j].0,
                other => other.eval(x),
            };
        }
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Forward time averages `(1/n) sum_{k<n} phi(f^k x)` of every observable.
pub fn forward_averages(map: &TorusMap, x: &TorusPoint, bank: &ObservableBank, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(LabError::invalid("n", "averaging horizon must be positive"));
    }
    map.check_orbit(n as u64)?;
    let mut acc = vec![Accumulator::default(); bank.len()];
    let mut trig = vec![(0.0, 0.0); x.dim()];
    let mut vals = vec![0.0; bank.len()];
    let mut p = *x;
    for _ in 0..n {
        bank.eval_into(&p, &mut trig, &mut vals);
        for (a, v) in acc.iter_mut().zip(&vals) {
            a.add(*v);
        }
        p = map.evaluate(&p);
    }
    Ok(acc.iter().map(|a| a.total() / n as f64).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BirkhoffProfile {
    pub point: TorusPoint,
    pub horizon: usize,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

impl BirkhoffProfile {
    /// Sup-norm distance over forward and backward entries.
    pub fn distance(&self, other: &BirkhoffProfile) -> f64 {
        self.forward
            .iter()
            .zip(&other.forward)
            .chain(self.backward.iter().zip(&other.backward))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub const MIN_PROFILE_HORIZON: usize = 1000;

/// Forward and backward Birkhoff averages of the bank at `x`.
pub fn profile(map: &TorusMap, x: &TorusPoint, bank: &ObservableBank, n: usize) -> Result<BirkhoffProfile> {
    if n < MIN_PROFILE_HORIZON {
        return Err(LabError::invalid("hopf.horizon", format!("must be at least {MIN_PROFILE_HORIZON}")));
    }
    bank.check(map.dim())?;
    let forward = forward_averages(map, x, bank, n)?;
    let backward = forward_averages(&map.inverse(), x, bank, n)?;
    Ok(BirkhoffProfile { point: *x, horizon: n, forward, backward })
}

/// Profiles at many points, evaluated in parallel, returned in input order.
pub fn profiles(map: &TorusMap, points: &[TorusPoint], bank: &ObservableBank, n: usize) -> Result<Vec<BirkhoffProfile>> {
    points.par_iter().map(|x| profile(map, x, bank, n)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentClustering {
    /// Profiles in the canonical (lexicographic by point) order.
    pub profiles: Vec<BirkhoffProfile>,
    /// Cluster index of each profile.
    pub assignment: Vec<usize>,
    /// Index (into `profiles`) of each cluster's leader.
    pub centers: Vec<usize>,
    pub radius: f64,
    pub component_count: usize,
    /// Fraction of sample points (Lebesgue proxy) per cluster.
    pub fractions: Vec<f64>,
}

fn lexicographic(a: &TorusPoint, b: &TorusPoint) -> std::cmp::Ordering {
    for (x, y) in a.coords().iter().zip(b.coords()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Greedy leader clustering in the sup-norm on profiles.
pub fn cluster_components(profiles: &[BirkhoffProfile], radius: f64) -> Result<ComponentClustering> {
    if !(radius > 0.0) {
        return Err(LabError::invalid("hopf.radius", "must be positive"));
    }
    if let Some(first) = profiles.first() {
        if profiles
            .iter()
            .any(|p| p.horizon != first.horizon || p.forward.len() != first.forward.len())
        {
            return Err(LabError::invalid("profiles", "profiles must share horizon and bank"));
        }
    }
    let mut sorted = profiles.to_vec();
    sorted.sort_by(|a, b| lexicographic(&a.point, &b.point));

    let mut centers: Vec<usize> = Vec::new();
    let mut assignment = Vec::with_capacity(sorted.len());
    for (i, p) in sorted.iter().enumerate() {
        match centers.iter().position(|&c| sorted[c].distance(p) <= radius) {
            Some(k) => assignment.push(k),
            None => {
                assignment.push(centers.len());
                centers.push(i);
            }
        }
    }
    let mut counts = vec![0usize; centers.len()];
    for &a in &assignment {
        counts[a] += 1;
    }
    let total = sorted.len().max(1) as f64;
    Ok(ComponentClustering {
        component_count: centers.len(),
        fractions: counts.iter().map(|&c| c as f64 / total).collect(),
        profiles: sorted,
        assignment,
        centers,
        radius,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferParams {
    /// Steps over which the pair distance must shrink.
    pub horizon_conv: usize,
    /// A pair converges when `d_H <= ratio * d_0`.
    pub convergence_ratio: f64,
    /// Allowed sup-norm gap of forward profiles.
    pub tolerance: f64,
}

impl Default for TransferParams {
    fn default() -> Self {
        TransferParams { horizon_conv: 20, convergence_ratio: 1e-3, tolerance: 5e-2 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairConvergence {
    pub initial_distance: f64,
    pub final_distance: f64,
    /// Fitted exponential rate of `d(f^k x, f^k y)`, when the distance is nonzero.
    pub rate: Option<f64>,
    pub converged: bool,
}

/// Follows `d(f^k x, f^k y)` for `k <= horizon` by pushing the displacement
/// with [`TorusMap::forward_offset`].
pub fn pair_convergence(map: &TorusMap, x: &TorusPoint, y: &TorusPoint, params: &TransferParams) -> Result<PairConvergence> {
    map.check_orbit(params.horizon_conv as u64)?;
    let mut base = x.lift();
    let mut offset = Coords::zeros(x.dim());
    for i in 0..x.dim() {
        let d = y.coords()[i] - x.coords()[i];
        offset[i] = d - d.round();
    }
    let d0 = offset.torus_norm();
    if d0 == 0.0 {
        return Ok(PairConvergence { initial_distance: 0.0, final_distance: 0.0, rate: None, converged: true });
    }
    let mut ks = vec![0.0];
    let mut logs = vec![d0.ln()];
    let mut dist = d0;
    for k in 1..=params.horizon_conv {
        (base, offset) = map.forward_offset(&base, &offset);
        dist = offset.torus_norm();
        if dist > 0.0 {
            ks.push(k as f64);
            logs.push(dist.ln());
        }
    }
    let rate = (ks.len() >= 2).then(|| linear_fit(&ks, &logs).1);
    Ok(PairConvergence {
        initial_distance: d0,
        final_distance: dist,
        rate,
        converged: dist <= params.convergence_ratio * d0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub x: TorusPoint,
    pub y: TorusPoint,
    pub convergence: PairConvergence,
    /// Sup-norm gap of forward profiles (converging pairs only).
    pub profile_gap: Option<f64>,
    pub within_tolerance: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub horizon: usize,
    pub tolerance: f64,
    pub pairs: Vec<PairReport>,
    pub converging: usize,
    /// Pairs excluded because their distance did not shrink.
    pub not_converging: usize,
    pub passed: usize,
    pub all_pass: bool,
}

fn point_key(p: &TorusPoint) -> Vec<u64> {
    p.coords().iter().map(|c| c.to_bits()).collect()
}

/// Checks that forward profiles coincide along converging pairs.
pub fn stable_transfer_check(
    map: &TorusMap,
    pairs: &[(TorusPoint, TorusPoint)],
    bank: &ObservableBank,
    n: usize,
    params: &TransferParams,
) -> Result<TransferReport> {
    bank.check(map.dim())?;
    let conv: Vec<PairConvergence> =
        pairs.iter().map(|(x, y)| pair_convergence(map, x, y, params)).collect::<Result<_>>()?;

    let mut unique: Vec<TorusPoint> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for ((x, y), c) in pairs.iter().zip(&conv) {
        if !c.converged {
            continue;
        }
        for p in [x, y] {
            index.entry(point_key(p)).or_insert_with(|| {
                unique.push(*p);
                unique.len() - 1
            });
        }
    }
    let averages: Vec<Vec<f64>> =
        unique.par_iter().map(|p| forward_averages(map, p, bank, n)).collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(pairs.len());
    let (mut converging, mut passed) = (0, 0);
    for ((x, y), c) in pairs.iter().zip(conv) {
        let (gap, ok) = if c.converged {
            converging += 1;
            let ax = &averages[index[&point_key(x)]];
            let ay = &averages[index[&point_key(y)]];
            let gap = ax.iter().zip(ay).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let ok = gap <= params.tolerance;
            passed += ok as usize;
            (Some(gap), Some(ok))
        } else {
            (None, None)
        };
        reports.push(PairReport { x: *x, y: *y, convergence: c, profile_gap: gap, within_tolerance: ok });
    }
    Ok(TransferReport {
        horizon: n,
        tolerance: params.tolerance,
        not_converging: pairs.len() - converging,
        all_pass: passed == converging,
        converging,
        passed,
        pairs: reports,
    })
}

/// Steps used to pull candidate displacements back onto the stable manifold.
pub const PULLBACK_STEPS: usize = 10;

fn pull_back(inv: &TorusMap, far: &Coords, v: &Coords) -> Coords {
    let (mut base, mut off) = (*far, *v);
    for _ in 0..PULLBACK_STEPS {
        (base, off) = inv.forward_offset(&base, &off);
    }
    off
}

/// Points near `x` on its local stable manifold, at distances about
/// `t_scale (i + 1) / count`, kept only if they pass the convergence test.
/// A displacement along the centre-stable bundle at `f^N x` is pulled back
/// by `N` steps, so curvature of the manifold is followed instead of the
/// tangent line.
pub fn stable_candidates(
    map: &TorusMap,
    x: &TorusPoint,
    frame: &SplittingFrame,
    count: usize,
    t_scale: f64,
    params: &TransferParams,
) -> Result<Vec<TorusPoint>> {
    let cs = frame.cs_dim();
    let pushed = transport(map, x, &frame.cs_basis, PULLBACK_STEPS)?;
    let far = pushed.end_point.lift();
    let inv = map.inverse();
    let stream = SeedStream::new(0x4f9a);
    let mut out = Vec::new();
    for i in 0..count {
        let magnitude = t_scale * (i + 1) as f64 / count as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut rng = stream.rng(Module::Hopf, i as u64);
        let mut coef: Vec<f64> = (0..cs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if cs == 1 {
            coef[0] = 1.0;
        }
        let norm = coef.iter().map(|c| c * c).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let mut v = Coords::zeros(map.dim());
        for (j, c) in coef.iter().enumerate() {
            let col = pushed.end_basis.column(j);
            for k in 0..map.dim() {
                v[k] += c / norm * col[k];
            }
        }
        const PROBE: f64 = 1e-12;
        let gain = pull_back(&inv, &far, &(v * PROBE)).norm() / PROBE;
        let offset = pull_back(&inv, &far, &(v * (sign * magnitude / gain)));
        let y = x.translate(&offset);
        if pair_convergence(map, x, &y, params)?.converged {
            out.push(y);
        }
    }
    Ok(out)
}

/// Stable candidates of the inverse map: samples along the centre-unstable bundle.
pub fn unstable_candidates(
    map: &TorusMap,
    x: &TorusPoint,
    frame: &SplittingFrame,
    count: usize,
    t_scale: f64,
    params: &TransferParams,
) -> Result<Vec<TorusPoint>> {
    stable_candidates(&map.inverse(), x, &frame.swapped(), count, t_scale, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::catalog::system;

    #[test]
    fn default_bank_shape() {
        assert_eq!(ObservableBank::default_for(2).len(), 5);
        assert_eq!(ObservableBank::default_for(3).len(), 9);
    }

    #[test]
    fn fixed_point_profile_is_pointwise() {
        let cat = system("cat2").unwrap();
        let origin = TorusPoint::new(&[0.0, 0.0]).unwrap();
        let bank = ObservableBank::default_for(2);
        let prof = profile(&cat, &origin, &bank, 1000).unwrap();
        let pointwise: Vec<f64> = bank.observables().iter().map(|o| o.eval(&origin)).collect();
        assert_eq!(prof.forward, pointwise);
        assert_eq!(prof.backward, pointwise);
    }

    #[test]
    fn short_horizon_rejected() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.1, 0.2]).unwrap();
        assert!(profile(&cat, &x, &ObservableBank::default_for(2), 999).is_err());
    }

    #[test]
    fn huge_radius_gives_one_cluster() {
        let cat = system("cat2").unwrap();
        let bank = ObservableBank::default_for(2);
        let pts: Vec<TorusPoint> =
            (0..5).map(|i| TorusPoint::new(&[0.1 * i as f64, 0.37]).unwrap()).collect();
        let profs = profiles(&cat, &pts, &bank, 1000).unwrap();
        let c = cluster_components(&profs, 2.0).unwrap();
        assert_eq!(c.component_count, 1);
        assert_eq!(c.fractions, vec![1.0]);
    }

    #[test]
    fn accumulator_is_exact_for_constants() {
        let mut a = Accumulator::default();
        for _ in 0..1000 {
            a.add(0.1);
        }
        assert_eq!(a.total() / 1000.0, 0.1);
    }
}
