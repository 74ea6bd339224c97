//! Independent oracles: nalgebra eigen/SVD, finite differences of the lift,
//! brute-force geometry.

#![allow(dead_code)]

use domlab::linalg::Mat;
use domlab::system::{Coords, TorusMap};
use nalgebra::DMatrix;

pub fn to_na(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Central differences of the lift; exact up to rounding for linear maps.
pub fn fd_jacobian(map: &TorusMap, x: &Coords, h: f64) -> DMatrix<f64> {
    let d = map.dim();
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut a = *x;
        let mut b = *x;
        a[j] += h;
        b[j] -= h;
        let (fa, fb) = (map.forward_lift(&a), map.forward_lift(&b));
        for i in 0..d {
            jac[(i, j)] = (fa[i] - fb[i]) / (2.0 * h);
        }
    }
    jac
}

/// The matrix of a linear automorphism, read off by finite differences at the origin.
pub fn linear_part(map: &TorusMap) -> DMatrix<f64> {
    fd_jacobian(map, &Coords::zeros(map.dim()), 1e-3)
}

/// Eigenvalue moduli, descending.
pub fn eigen_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Eigenvectors (as columns) for the eigenvalues with modulus above or below 1,
/// for a symmetric matrix.
pub fn symmetric_bundle(m: &DMatrix<f64>, expanding: bool) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let cols: Vec<_> = (0..m.nrows())
        .filter(|&i| (eig.eigenvalues[i].abs() > 1.0) == expanding)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Sine of the largest principal angle between two column spans.
pub fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let s = (qa.transpose() * &qb).singular_values();
    let cmin = s.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    (1.0 - cmin * cmin).max(0.0).sqrt()
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.singular_values().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Brute-force Bellman-Ford style relaxation over an edge list.
pub fn brute_distances(n: usize, edges: &[(usize, usize, f64)], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    loop {
        let mut changed = false;
        for &(a, b, w) in edges {
            if dist[a] + w < dist[b] - 1e-15 {
                dist[b] = dist[a] + w;
                changed = true;
            }
            if dist[b] + w < dist[a] - 1e-15 {
                dist[a] = dist[b] + w;
                changed = true;
            }
        }
        if !changed {
            return dist;
        }
    }
}
