//! Tangent cocycles restricted to a bundle.
//!
//! A `k`-dimensional bundle frame is pushed along an orbit with `Df` and
//! re-orthonormalised at every step, so `Df^n Q_0 = Q_n R_n ... R_1`. The
//! singular values of the restricted cocycle are those of the triangular
//! product. They are recovered through exterior powers: the top singular value
//! of the `j`-th compound of the product equals `s_1 ... s_j`, and each
//! compound product is accumulated with a running log-scale so horizons of
//! 10^4 and more neither overflow nor lose the leading direction.

use crate::error::{LabError, Result};
use crate::linalg::Mat;
use crate::system::{TorusMap, TorusPoint};

#[derive(Clone, Debug)]
struct ScaledProduct {
    mat: Mat,
    log_scale: f64,
}

impl ScaledProduct {
    fn identity(n: usize) -> Self {
        ScaledProduct { mat: Mat::identity(n), log_scale: 0.0 }
    }

    fn push(&mut self, m: &Mat) {
        self.mat = m.mul(&self.mat);
        let s = self.mat.max_abs();
        if s > 0.0 && s.is_finite() {
            self.mat = self.mat.scale(1.0 / s);
            self.log_scale += s.ln();
        }
    }

    fn log_norm(&self) -> f64 {
        self.log_scale + self.mat.norm2().ln()
    }
}

/// Accumulated restricted cocycle `Df^n` on a `k`-dimensional bundle.
#[derive(Clone, Debug)]
pub struct RestrictedCocycle {
    k: usize,
    steps: usize,
    log_det: f64,
    exterior: Vec<ScaledProduct>,
}

impl RestrictedCocycle {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "bundle dimension must be positive");
        let exterior = (1..k).map(|j| ScaledProduct::identity(binomial(k, j))).collect();
        RestrictedCocycle { k, steps: 0, log_det: 0.0, exterior }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Multiplies by one triangular step factor.
    pub fn push(&mut self, r: &Mat) -> Result<()> {
        debug_assert_eq!(r.rows(), self.k);
        let mut log_det = 0.0;
        for i in 0..self.k {
            let d = r[(i, i)].abs();
            if d == 0.0 || !d.is_finite() {
                return Err(LabError::SingularRestriction);
            }
            log_det += d.ln();
        }
        self.log_det += log_det;
        for (idx, prod) in self.exterior.iter_mut().enumerate() {
            let j = idx + 1;
            if j == 1 {
                prod.push(r);
            } else {
                prod.push(&r.compound(j));
            }
        }
        self.steps += 1;
        Ok(())
    }

    /// `log |det|` of the restricted cocycle.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `log` of the norm of the `j`-th exterior power (`j = 0` gives 0, `j = k` the log-determinant).
    pub fn log_exterior_norm(&self, j: usize) -> f64 {
        assert!(j <= self.k);
        match j {
            0 => 0.0,
            j if j == self.k => self.log_det,
            j => self.exterior[j - 1].log_norm(),
        }
    }

    /// Log singular values, descending.
    pub fn log_singular_values(&self) -> Vec<f64> {
        let mut prev = 0.0;
        (1..=self.k)
            .map(|j| {
                let cur = self.log_exterior_norm(j);
                let s = cur - prev;
                prev = cur;
                s
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Result of pushing a frame `n` steps.
#[derive(Clone, Debug)]
pub struct Transport {
    pub cocycle: RestrictedCocycle,
    pub end_point: TorusPoint,
    pub end_basis: Mat,
}

/// Pushes the orthonormal frame `basis` at `x` along `n` steps of `map`.
pub fn transport(map: &TorusMap, x: &TorusPoint, basis: &Mat, n: usize) -> Result<Transport> {
    transport_observe(map, x, basis, n, |_, _| {})
}

/// Like [`transport`], calling `observe(step, cocycle)` after every step.
pub fn transport_observe(
    map: &TorusMap,
    x: &TorusPoint,
    basis: &Mat,
    n: usize,
    mut observe: impl FnMut(usize, &RestrictedCocycle),
) -> Result<Transport> {
    map.check_orbit(n as u64)?;
    let mut cocycle = RestrictedCocycle::new(basis.cols());
    let mut q = *basis;
    let mut p = *x;
    for step in 1..=n {
        let pushed = map.differential(&p.lift()).mul(&q);
        let (q_next, r) = pushed.qr().ok_or(LabError::SingularRestriction)?;
        cocycle.push(&r)?;
        q = q_next;
        p = map.evaluate(&p);
        observe(step, &cocycle);
    }
    Ok(Transport { cocycle, end_point: p, end_basis: q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_product() {
        let a = Mat::from_rows(&[&[3.0, 1.0], &[0.0, 0.5]]);
        let mut c = RestrictedCocycle::new(2);
        let mut direct = Mat::identity(2);
        for _ in 0..6 {
            c.push(&a).unwrap();
            direct = a.mul(&direct);
        }
        let sv = direct.singular_values();
        let logs = c.log_singular_values();
        assert!((logs[0] - sv[0].ln()).abs() < 1e-12);
        assert!((logs[1] - sv[1].ln()).abs() < 1e-12);
        assert!((c.log_det() - 6.0 * 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn long_products_do_not_overflow() {
        let a = Mat::from_rows(&[&[10.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.1]]);
        let mut c = RestrictedCocycle::new(3);
        for _ in 0..1000 {
            c.push(&a).unwrap();
        }
        let logs = c.log_singular_values();
        let l10 = 10f64.ln();
        assert!((logs[0] - 1000.0 * l10).abs() < 1e-9);
        assert!(logs[1].abs() < 1e-9);
        assert!((logs[2] + 1000.0 * l10).abs() < 1e-9);
    }

    #[test]
    fn zero_diagonal_is_singular() {
        let mut c = RestrictedCocycle::new(2);
        let r = Mat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(c.push(&r), Err(LabError::SingularRestriction)));
    }
}
