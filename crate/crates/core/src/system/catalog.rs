//! Built-in example systems.
//!
//! The collection is this crate's own choice: hyperbolic automorphisms of
//! `T^2`, `T^3` and `T^4`, derived-from-Anosov style perturbations obtained by
//! composing an automorphism with a volume-preserving shear, and a few
//! negative controls (identity, pure shear, a product with a neutral circle).

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Layer, TorusMap};
use crate::error::{LabError, Result};
use crate::linalg::Mat;

/// An analytically known quantity attached to a catalog entry.
#[derive(Clone, Debug, Serialize)]
pub struct KnownFact {
    pub name: &'static str,
    pub value: f64,
    pub tag: &'static str,
}

#[derive(Clone, Debug)]
pub struct SystemCatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub dim: usize,
    /// Dimension of the centre-unstable bundle used by default, if the map
    /// has a dominated splitting at all.
    pub default_cu: Option<usize>,
    /// Parameter names and default values.
    pub parameters: &'static [(&'static str, f64)],
    /// Name of the perturbation amplitude, for families used in sweeps.
    pub amplitude: Option<&'static str>,
    pub facts: Vec<KnownFact>,
    constructor: fn(&BTreeMap<String, f64>) -> Result<TorusMap>,
}

impl SystemCatalogEntry {
    /// Builds the map. Missing parameters take their defaults; unknown ones are rejected.
    pub fn build(&self, params: &BTreeMap<String, f64>) -> Result<TorusMap> {
        for key in params.keys() {
            if !self.parameters.iter().any(|(name, _)| name == key) {
                return Err(LabError::invalid(
                    format!("system.params.{key}"),
                    format!("unknown parameter for system `{}`", self.id),
                ));
            }
        }
        let mut full: BTreeMap<String, f64> =
            self.parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in params {
            if !v.is_finite() {
                return Err(LabError::invalid(format!("system.params.{k}"), "must be finite"));
            }
            full.insert(k.clone(), *v);
        }
        Ok((self.constructor)(&full)?.with_params(full))
    }
}

const CAT2: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 1.0]];
const HEPTAGON: [[f64; 3]; 3] = [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 1.0]];
const HEPTAGON_INV: [[f64; 3]; 3] = [[1.0, -1.0, 1.0], [-1.0, 2.0, -2.0], [1.0, -2.0, 3.0]];

fn mat<const N: usize>(rows: [[f64; N]; N]) -> Mat {
    Mat::from_fn(N, N, |i, j| rows[i][j])
}

fn cat2x2() -> Mat {
    Mat::from_fn(4, 4, |i, j| if i / 2 == j / 2 { CAT2[i % 2][j % 2] } else { 0.0 })
}

fn cat2xid() -> Mat {
    Mat::from_fn(3, 3, |i, j| match (i, j) {
        (2, 2) => 1.0,
        (2, _) | (_, 2) => 0.0,
        _ => CAT2[i][j],
    })
}

fn eps(p: &BTreeMap<String, f64>) -> f64 {
    p.get("eps").copied().unwrap_or(0.0)
}

/// The three eigenvalues of the heptagon matrix, descending.
fn heptagon_eigenvalues() -> [f64; 3] {
    let (vals, _) = mat(HEPTAGON).symmetric_eigen();
    [vals[0], vals[1], vals[2]]
}

pub fn catalog() -> Vec<SystemCatalogEntry> {
    let golden2 = (3.0 + 5f64.sqrt()) / 2.0;
    let lu = golden2.ln();
    let [m1, m2, m3] = heptagon_eigenvalues();
    vec![
        SystemCatalogEntry {
            id: "cat2",
            description: "Arnold cat map [[2,1],[1,1]] on T^2",
            dim: 2,
            default_cu: Some(1),
            parameters: &[],
            amplitude: None,
            facts: vec![
                KnownFact { name: "lambda_cu", value: lu, tag: "analytic: log((3+sqrt5)/2)" },
                KnownFact { name: "lambda_cs", value: -lu, tag: "analytic" },
                KnownFact { name: "domination_tau", value: 1.0 / (golden2 * golden2), tag: "analytic" },
            ],
            constructor: |_| TorusMap::linear("cat2", mat(CAT2)),
        },
        SystemCatalogEntry {
            id: "cat3",
            description: "symmetric automorphism of T^3 with one expanding eigenvalue",
            dim: 3,
            default_cu: Some(1),
            parameters: &[],
            amplitude: None,
            facts: vec![
                KnownFact { name: "lambda_cu", value: (1.0 / m3).ln(), tag: "analytic" },
                KnownFact { name: "log_mu_cs_top", value: (1.0 / m2).ln(), tag: "analytic" },
            ],
            constructor: |_| TorusMap::linear("cat3", mat(HEPTAGON_INV)),
        },
        SystemCatalogEntry {
            id: "cat3u2",
            description: "symmetric automorphism [[2,1,0],[1,2,1],[0,1,1]] of T^3 with a 2-dimensional expanding bundle",
            dim: 3,
            default_cu: Some(2),
            parameters: &[],
            amplitude: None,
            facts: vec![
                KnownFact { name: "log_mu1", value: m1.ln(), tag: "analytic" },
                KnownFact { name: "log_mu2", value: m2.ln(), tag: "analytic" },
                KnownFact { name: "log_mu3", value: m3.ln(), tag: "analytic" },
            ],
            constructor: |_| TorusMap::linear("cat3u2", mat(HEPTAGON)),
        },
        SystemCatalogEntry {
            id: "cat2x2",
            description: "product of two cat maps on T^4",
            dim: 4,
            default_cu: Some(2),
            parameters: &[],
            amplitude: None,
            facts: vec![KnownFact { name: "lambda_cu", value: lu, tag: "analytic" }],
            constructor: |_| TorusMap::linear("cat2x2", cat2x2()),
        },
        SystemCatalogEntry {
            id: "cat2xid",
            description: "cat map times the identity circle on T^3 (not ergodic)",
            dim: 3,
            default_cu: Some(1),
            parameters: &[],
            amplitude: None,
            facts: vec![
                KnownFact { name: "lambda_cu", value: lu, tag: "analytic" },
                KnownFact { name: "neutral_exponent", value: 0.0, tag: "analytic" },
            ],
            constructor: |_| TorusMap::linear("cat2xid", cat2xid()),
        },
        SystemCatalogEntry {
            id: "da2",
            description: "cat map composed with the shear (x, y + eps sin 2 pi x)",
            dim: 2,
            default_cu: Some(1),
            parameters: &[("eps", 0.01)],
            amplitude: Some("eps"),
            facts: vec![KnownFact { name: "lambda_cu_at_eps0", value: lu, tag: "analytic at eps = 0" }],
            constructor: |p| {
                TorusMap::new("da2", 2, vec![Layer::shear(1, 0, eps(p))?, Layer::linear(mat(CAT2))?])
            },
        },
        SystemCatalogEntry {
            id: "da3",
            description: "cat3u2 composed with the shear (x, y + eps sin 2 pi x, z)",
            dim: 3,
            default_cu: Some(2),
            parameters: &[("eps", 0.01)],
            amplitude: Some("eps"),
            facts: vec![KnownFact { name: "log_det_cu_at_eps0", value: (m1 * m2).ln(), tag: "analytic at eps = 0" }],
            constructor: |p| {
                TorusMap::new("da3", 3, vec![Layer::shear(1, 0, eps(p))?, Layer::linear(mat(HEPTAGON))?])
            },
        },
        SystemCatalogEntry {
            id: "shear2",
            description: "pure shear (x, y + eps sin 2 pi x); identity at eps = 0",
            dim: 2,
            default_cu: None,
            parameters: &[("eps", 0.0)],
            amplitude: Some("eps"),
            facts: Vec::new(),
            constructor: |p| TorusMap::new("shear2", 2, vec![Layer::shear(1, 0, eps(p))?]),
        },
        SystemCatalogEntry {
            id: "id2",
            description: "identity on T^2",
            dim: 2,
            default_cu: None,
            parameters: &[],
            amplitude: None,
            facts: Vec::new(),
            constructor: |_| TorusMap::identity(2),
        },
        SystemCatalogEntry {
            id: "id3",
            description: "identity on T^3",
            dim: 3,
            default_cu: None,
            parameters: &[],
            amplitude: None,
            facts: Vec::new(),
            constructor: |_| TorusMap::identity(3),
        },
    ]
}

pub fn lookup(id: &str) -> Result<SystemCatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| LabError::UnknownSystem(id.to_string()))
}

/// Convenience: look up an entry and build it.
pub fn build(id: &str, params: &BTreeMap<String, f64>) -> Result<TorusMap> {
    lookup(id)?.build(params)
}

/// Build with default parameters.
pub fn system(id: &str) -> Result<TorusMap> {
    build(id, &BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        let cat = system("cat2").unwrap();
        assert_eq!(cat.dim(), 2);
        assert!(cat.is_linear());
        let prod = system("cat2xid").unwrap();
        assert_eq!(prod.dim(), 3);
        assert!(matches!(lookup("nosuch"), Err(LabError::UnknownSystem(_))));
    }

    #[test]
    fn unknown_param_rejected() {
        let mut p = BTreeMap::new();
        p.insert("bogus".to_string(), 1.0);
        assert!(build("da2", &p).is_err());
        p.clear();
        p.insert("eps".to_string(), 0.02);
        assert_eq!(build("da2", &p).unwrap().params()["eps"], 0.02);
    }

    #[test]
    fn heptagon_inverse_is_exact() {
        let prod = mat(HEPTAGON).mul(&mat(HEPTAGON_INV));
        assert_eq!(prod, Mat::identity(3));
    }
}
