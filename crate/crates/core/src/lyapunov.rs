//! Finite-time Lyapunov exponents on the estimated bundles.

use serde::{Deserialize, Serialize};

use crate::cocycle::transport;
use crate::error::{LabError, Result};
use crate::hopf::{Accumulator, Observable};
use crate::linalg::Mat;
use crate::splitting::{estimate_cs, estimate_cu, SplittingFrame, SplittingParams};
use crate::system::{TorusMap, TorusPoint};

/// Default margin separating hyperbolic points from undecided ones.
pub const DEFAULT_MARGIN_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovEstimate {
    pub point: TorusPoint,
    pub horizon: usize,
    /// `(1/n) log ||Df^n|E^cs||`
    pub lambda_cs: f64,
    /// `-(1/n) log ||Df^{-n}|E^cu||`
    pub lambda_cu: f64,
    /// `(1/n) log` of the singular values of `Df^n|E^cs`, descending.
    pub cs_spectrum: Vec<f64>,
    /// `(1/n) log` of the singular values of `Df^n|E^cu`, descending.
    pub cu_spectrum: Vec<f64>,
    /// All `d` exponents from the flag `E^cu`, `E^cu + E^cs` pushed jointly, descending.
    pub spectrum: Vec<f64>,
}

impl LyapunovEstimate {
    pub fn spectrum_sum(&self) -> f64 {
        self.spectrum.iter().sum()
    }

    pub fn margin(&self) -> f64 {
        (-self.lambda_cs).min(self.lambda_cu)
    }
}

/// Averaged `log |R_ii|` of a full frame pushed with QR, in frame order.
fn flag_exponents(map: &TorusMap, x: &TorusPoint, frame: &Mat, n: usize) -> Result<Vec<f64>> {
    let d = frame.rows();
    let (mut q, _) = frame.qr().ok_or(LabError::SingularRestriction)?;
    let mut sums = vec![Accumulator::default(); d];
    let mut p = *x;
    for _ in 0..n {
        let (q_next, r) = map.differential(&p.lift()).mul(&q).qr().ok_or(LabError::SingularRestriction)?;
        for (i, s) in sums.iter_mut().enumerate() {
            s.add(r[(i, i)].abs().ln());
        }
        q = q_next;
        p = map.evaluate(&p);
    }
    Ok(sums.iter().map(|s| s.total() / n as f64).collect())
}

fn descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Exponents over `n` steps. Each bundle is only pushed in the direction that
/// contracts the estimation error: `E^cu` forward from `f^{-n} x`, `E^cs`
/// backward from `f^n x`, so both endpoints are re-estimated.
pub fn finite_time_exponents(
    map: &TorusMap,
    frame: &SplittingFrame,
    n: usize,
    splitting: &SplittingParams,
) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(LabError::invalid("lyapunov.horizon", "must be at least 1"));
    }
    map.check_orbit(n as u64)?;
    let nf = n as f64;
    let x = &frame.point;
    let (mut back, mut ahead) = (*x, *x);
    for _ in 0..n {
        back = map.evaluate_inverse(&back);
        ahead = map.evaluate(&ahead);
    }
    // Df^n | E^cu(f^{-n} x), whose inverse is Df^{-n} | E^cu(x)
    let cu_in = estimate_cu(map, &back, frame.cu_dim(), splitting)?;
    let cu_in = transport(map, &back, &cu_in.basis, n)?.cocycle.log_singular_values();
    // Df^{-n} | E^cs(f^n x), whose inverse is Df^n | E^cs(x)
    let cs_out = estimate_cs(map, &ahead, frame.cs_dim(), splitting)?;
    let cs_out = transport(&map.inverse(), &ahead, &cs_out.basis, n)?.cocycle.log_singular_values();
    let cu = transport(map, x, &frame.cu_basis, n)?.cocycle;

    // columns in order of forward dominance: the cs basis comes out of
    // orthogonal iteration for f^{-1}, so its order is reversed
    let d = map.dim();
    let (ku, ks) = (frame.cu_dim(), frame.cs_dim());
    let joint = Mat::from_fn(d, d, |i, j| if j < ku { frame.cu_basis[(i, j)] } else { frame.cs_basis[(i, ks - 1 - (j - ku))] });
    let spectrum = descending(flag_exponents(map, x, &joint, n)?);

    Ok(LyapunovEstimate {
        point: *x,
        horizon: n,
        lambda_cs: -cs_out.last().unwrap() / nf,
        lambda_cu: cu_in.last().unwrap() / nf,
        cs_spectrum: cs_out.iter().rev().map(|s| -s / nf).collect(),
        cu_spectrum: cu.log_singular_values().into_iter().map(|s| s / nf).collect(),
        spectrum,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Hyperbolic,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityVerdict {
    pub point: TorusPoint,
    pub verdict: Verdict,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub horizon: usize,
    pub threshold: f64,
    pub verdicts: Vec<HyperbolicityVerdict>,
    /// Finite-horizon proxy for the measure of the hyperbolic set.
    pub hyperbolic_fraction: f64,
}

pub fn classify_hyperbolic(estimates: &[LyapunovEstimate], margin_threshold: f64) -> Result<Classification> {
    let horizon = estimates.first().map_or(0, |e| e.horizon);
    if estimates.iter().any(|e| e.horizon != horizon) {
        return Err(LabError::invalid("estimates", "estimates must share a horizon"));
    }
    let verdicts: Vec<HyperbolicityVerdict> = estimates
        .iter()
        .map(|e| {
            let margin = e.margin();
            HyperbolicityVerdict {
                point: e.point,
                verdict: if margin > margin_threshold { Verdict::Hyperbolic } else { Verdict::Undecided },
                margin,
            }
        })
        .collect();
    let hits = verdicts.iter().filter(|v| v.verdict == Verdict::Hyperbolic).count();
    Ok(Classification {
        horizon,
        threshold: margin_threshold,
        hyperbolic_fraction: if verdicts.is_empty() { 0.0 } else { hits as f64 / verdicts.len() as f64 },
        verdicts,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// `(1/n) sum_{k<n} phi(f^{+-k} x)`.
pub fn birkhoff_average(map: &TorusMap, x: &TorusPoint, observable: &Observable, n: usize, direction: Direction) -> Result<f64> {
    if n == 0 {
        return Err(LabError::invalid("n", "averaging horizon must be positive"));
    }
    map.check_orbit(n as u64)?;
    let mut acc = Accumulator::default();
    let mut p = *x;
    for _ in 0..n {
        acc.add(observable.eval(&p));
        p = match direction {
            Direction::Forward => map.evaluate(&p),
            Direction::Backward => map.evaluate_inverse(&p),
        };
    }
    Ok(acc.total() / n as f64)
}

/// Change of `lambda_cu` and `lambda_cs` when the horizon doubles.
#[derive(Clone, Debug, Serialize)]
pub struct Stabilization {
    pub horizon: usize,
    pub change: f64,
    /// `n * change`: the constant `C'` in `|lambda(n) - lambda(2n)| <= C'/n`.
    pub constant: f64,
}

pub fn stabilization(map: &TorusMap, frame: &SplittingFrame, n: usize, splitting: &SplittingParams) -> Result<Stabilization> {
    let a = finite_time_exponents(map, frame, n, splitting)?;
    let b = finite_time_exponents(map, frame, 2 * n, splitting)?;
    let change = (a.lambda_cu - b.lambda_cu).abs().max((a.lambda_cs - b.lambda_cs).abs());
    Ok(Stabilization { horizon: n, change, constant: change * n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::estimate_splitting;
    use crate::system::catalog::system;

    #[test]
    fn cat_map_exponents() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.21, 0.77]).unwrap();
        let frame = estimate_splitting(&cat, &x, 1, &SplittingParams::default()).unwrap();
        let est = finite_time_exponents(&cat, &frame, 100, &SplittingParams::default()).unwrap();
        let lu = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((est.lambda_cu - lu).abs() < 1e-9);
        assert!((est.lambda_cs + lu).abs() < 1e-9);
        assert!(est.spectrum_sum().abs() < 1e-12);
    }

    #[test]
    fn constant_average_is_exact() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.21, 0.77]).unwrap();
        let c = birkhoff_average(&cat, &x, &Observable::Constant(0.3), 777, Direction::Backward).unwrap();
        assert_eq!(c, 0.3);
    }

    #[test]
    fn threshold_above_margin_gives_nothing() {
        let cat = system("cat2").unwrap();
        let x = TorusPoint::new(&[0.21, 0.77]).unwrap();
        let frame = estimate_splitting(&cat, &x, 1, &SplittingParams::default()).unwrap();
        let est = finite_time_exponents(&cat, &frame, 10, &SplittingParams::default()).unwrap();
        let c = classify_hyperbolic(&[est], 5.0).unwrap();
        assert_eq!(c.hyperbolic_fraction, 0.0);
    }
}
