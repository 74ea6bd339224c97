//! Phase space, conservative torus maps and orbit iteration.
//!
//! Maps are compositions of integer automorphisms and volume-preserving
//! shears. Every layer comes with an exact inverse and an exact Jacobian, so
//! the forward rule, inverse rule and differential never drift apart.
//! Points are carried in lifted (real) coordinates inside the maps and only
//! reduced modulo 1 when a [`TorusPoint`] is produced.

pub mod catalog;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::Mat;

pub const MAX_DIM: usize = 4;
pub const DEFAULT_MAX_ORBIT: u64 = 1_000_000;

/// A vector of `dim <= 4` reals: a lifted point of the torus or a tangent vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coords {
    dim: usize,
    v: [f64; MAX_DIM],
}

impl Coords {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Coords { dim, v: [0.0; MAX_DIM] }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut c = Coords::zeros(xs.len());
        c.v[..xs.len()].copy_from_slice(xs);
        c
    }

    pub fn from_array(dim: usize, v: [f64; MAX_DIM]) -> Self {
        let mut c = Coords::zeros(dim);
        c.v[..dim].copy_from_slice(&v[..dim]);
        c
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.dim]
    }

    #[inline]
    pub fn raw(&self) -> [f64; MAX_DIM] {
        self.v
    }

    pub fn dot(&self, other: &Coords) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Length of the shortest representative of this displacement on the torus.
    pub fn torus_norm(&self) -> f64 {
        self.as_slice()
            .iter()
            .map(|&d| {
                let r = d - d.round();
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn reduce(&self) -> TorusPoint {
        let mut c = *self;
        for x in c.v[..c.dim].iter_mut() {
            *x = reduce_unit(*x);
        }
        TorusPoint(c)
    }
}

#[inline]
fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl Index<usize> for Coords {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.v[..self.dim][i]
    }
}

impl IndexMut<usize> for Coords {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.v[..self.dim][i]
    }
}

impl Add for Coords {
    type Output = Coords;
    fn add(mut self, rhs: Coords) -> Coords {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.v[i] += rhs.v[i];
        }
        self
    }
}

impl Sub for Coords {
    type Output = Coords;
    fn sub(mut self, rhs: Coords) -> Coords {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.v[i] -= rhs.v[i];
        }
        self
    }
}

impl Mul<f64> for Coords {
    type Output = Coords;
    fn mul(mut self, s: f64) -> Coords {
        for x in self.v[..self.dim].iter_mut() {
            *x *= s;
        }
        self
    }
}

/// A point of the flat torus `T^d`, every coordinate in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct TorusPoint(Coords);

impl TorusPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&coords.len()) {
            return Err(LabError::UnsupportedDimension(format!(
                "torus dimension {} (supported: 2..=4)",
                coords.len()
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(LabError::invalid("point", "coordinates must be finite"));
        }
        Ok(Coords::from_slice(coords).reduce())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// The canonical lift in `[0,1)^d`.
    #[inline]
    pub fn lift(&self) -> Coords {
        self.0
    }

    /// Flat torus distance.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        (self.0 - other.0).torus_norm()
    }

    /// `self + v`, reduced.
    pub fn translate(&self, v: &Coords) -> TorusPoint {
        (self.0 + *v).reduce()
    }
}

impl From<TorusPoint> for Vec<f64> {
    fn from(p: TorusPoint) -> Vec<f64> {
        p.coords().to_vec()
    }
}

impl TryFrom<Vec<f64>> for TorusPoint {
    type Error = LabError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TorusPoint::new(&v)
    }
}

/// One invertible building block of a torus map.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// `x -> A x` for an integer matrix with `|det A| = 1`.
    Linear { matrix: Mat, inverse: Mat },
    /// `x_target -> x_target + amplitude * sin(2 pi x_source)`, other coordinates fixed.
    Shear { target: usize, source: usize, amplitude: f64 },
}

impl Layer {
    pub fn linear(matrix: Mat) -> Result<Layer> {
        let n = matrix.rows();
        if n != matrix.cols() {
            return Err(LabError::invalid("matrix", "must be square"));
        }
        for i in 0..n {
            for j in 0..n {
                let a = matrix[(i, j)];
                if a.fract() != 0.0 || !a.is_finite() {
                    return Err(LabError::invalid("matrix", "entries must be integers"));
                }
            }
        }
        let det = matrix.det();
        if (det.abs() - 1.0).abs() > 1e-9 {
            return Err(LabError::invalid("matrix", format!("|det| must be 1, got {det}")));
        }
        let inverse = matrix.inverse().expect("unimodular matrix is invertible");
        let inverse = Mat::from_fn(n, n, |i, j| inverse[(i, j)].round());
        Ok(Layer::Linear { matrix, inverse })
    }

    pub fn shear(target: usize, source: usize, amplitude: f64) -> Result<Layer> {
        if target == source {
            return Err(LabError::invalid("shear", "target and source must differ"));
        }
        if !amplitude.is_finite() {
            return Err(LabError::invalid("shear", "amplitude must be finite"));
        }
        Ok(Layer::Shear { target, source, amplitude })
    }

    pub fn inverted(&self) -> Layer {
        match self {
            Layer::Linear { matrix, inverse } => Layer::Linear { matrix: *inverse, inverse: *matrix },
            Layer::Shear { target, source, amplitude } => {
                Layer::Shear { target: *target, source: *source, amplitude: -*amplitude }
            }
        }
    }

    fn max_index(&self) -> usize {
        match self {
            Layer::Linear { matrix, .. } => matrix.rows(),
            Layer::Shear { target, source, .. } => target.max(source) + 1,
        }
    }

    #[inline]
    fn apply(&self, x: &Coords) -> Coords {
        match self {
            Layer::Linear { matrix, .. } => apply_linear(matrix, x),
            Layer::Shear { target, source, amplitude } => {
                let mut y = *x;
                y.v[*target] += *amplitude * (TAU * x.v[*source]).sin();
                y
            }
        }
    }

    #[inline]
    fn apply_inverse(&self, x: &Coords) -> Coords {
        match self {
            Layer::Linear { inverse, .. } => apply_linear(inverse, x),
            Layer::Shear { target, source, amplitude } => {
                let mut y = *x;
                y.v[*target] += (-*amplitude) * (TAU * x.v[*source]).sin();
                y
            }
        }
    }

    fn jacobian(&self, x: &Coords, inverse: bool) -> Mat {
        match self {
            Layer::Linear { matrix, inverse: inv } => {
                if inverse {
                    *inv
                } else {
                    *matrix
                }
            }
            Layer::Shear { target, source, amplitude } => {
                let amp = if inverse { -*amplitude } else { *amplitude };
                let mut j = Mat::identity(x.dim);
                j[(*target, *source)] = amp * TAU * (TAU * x.v[*source]).cos();
                j
            }
        }
    }

    #[inline]
    fn apply_offset(&self, base: &Coords, offset: &Coords, inverse: bool) -> (Coords, Coords) {
        match self {
            Layer::Linear { matrix, inverse: inv } => {
                let m = if inverse { inv } else { matrix };
                (apply_linear(m, base), apply_linear(m, offset))
            }
            Layer::Shear { target, source, amplitude } => {
                let amp = if inverse { -*amplitude } else { *amplitude };
                let (b, o) = (base.v[*source], offset.v[*source]);
                let mut nb = *base;
                let mut no = *offset;
                nb.v[*target] += amp * (TAU * b).sin();
                // sin(2pi(b+o)) - sin(2pi b) without cancellation
                no.v[*target] += amp * 2.0 * (TAU * b + PI * o).cos() * (PI * o).sin();
                (nb, no)
            }
        }
    }
}

#[inline]
fn apply_linear(m: &Mat, x: &Coords) -> Coords {
    let mut y = Coords::zeros(x.dim);
    for i in 0..x.dim {
        let mut s = 0.0;
        for j in 0..x.dim {
            s += m[(i, j)] * x.v[j];
        }
        y.v[i] = s;
    }
    y
}

/// A conservative diffeomorphism of `T^d` given as a composition of layers
/// (the first layer is applied first).
#[derive(Clone, Debug)]
pub struct TorusMap {
    name: String,
    dim: usize,
    layers: Vec<Layer>,
    params: BTreeMap<String, f64>,
    max_orbit: u64,
}

impl TorusMap {
    pub fn new(name: impl Into<String>, dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(LabError::UnsupportedDimension(format!("torus dimension {dim}")));
        }
        for layer in &layers {
            if layer.max_index() > dim {
                return Err(LabError::invalid("layers", "layer does not fit the torus dimension"));
            }
            if let Layer::Linear { matrix, .. } = layer {
                if matrix.rows() != dim {
                    return Err(LabError::invalid("layers", "matrix size differs from dimension"));
                }
            }
        }
        Ok(TorusMap { name: name.into(), dim, layers, params: BTreeMap::new(), max_orbit: DEFAULT_MAX_ORBIT })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        TorusMap::new(format!("id{dim}"), dim, Vec::new())
    }

    pub fn linear(name: impl Into<String>, matrix: Mat) -> Result<Self> {
        let dim = matrix.rows();
        TorusMap::new(name, dim, vec![Layer::linear(matrix)?])
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn with_max_orbit(mut self, cap: u64) -> Self {
        self.max_orbit = cap;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn max_orbit(&self) -> u64 {
        self.max_orbit
    }

    /// True when every layer is linear, so the differential is constant.
    pub fn is_linear(&self) -> bool {
        self.layers.iter().all(|l| matches!(l, Layer::Linear { .. }))
    }

    /// The inverse map, with layers reversed and inverted.
    pub fn inverse(&self) -> TorusMap {
        TorusMap {
            name: format!("inv({})", self.name),
            dim: self.dim,
            layers: self.layers.iter().rev().map(Layer::inverted).collect(),
            params: self.params.clone(),
            max_orbit: self.max_orbit,
        }
    }

    #[inline]
    pub fn forward_lift(&self, x: &Coords) -> Coords {
        let mut y = *x;
        for layer in &self.layers {
            y = layer.apply(&y);
        }
        y
    }

    #[inline]
    pub fn backward_lift(&self, x: &Coords) -> Coords {
        let mut y = *x;
        for layer in self.layers.iter().rev() {
            y = layer.apply_inverse(&y);
        }
        y
    }

    /// `f(x)` reduced modulo 1.
    #[inline]
    pub fn evaluate(&self, x: &TorusPoint) -> TorusPoint {
        self.forward_lift(&x.lift()).reduce()
    }

    /// `f^{-1}(x)` reduced modulo 1.
    #[inline]
    pub fn evaluate_inverse(&self, x: &TorusPoint) -> TorusPoint {
        self.backward_lift(&x.lift()).reduce()
    }

    /// Exact Jacobian of the lifted map.
    pub fn differential(&self, x: &Coords) -> Mat {
        let mut jac = Mat::identity(self.dim);
        let mut y = *x;
        for layer in &self.layers {
            jac = layer.jacobian(&y, false).mul(&jac);
            y = layer.apply(&y);
        }
        jac
    }

    /// Exact Jacobian of the lifted inverse map.
    pub fn inverse_differential(&self, x: &Coords) -> Mat {
        let mut jac = Mat::identity(self.dim);
        let mut y = *x;
        for layer in self.layers.iter().rev() {
            jac = layer.jacobian(&y, true).mul(&jac);
            y = layer.apply_inverse(&y);
        }
        jac
    }

    /// Pushes a base point and a displacement from it: returns `f(base)`
    /// reduced and `f(base + offset) - f(base)` computed without cancellation.
    pub fn forward_offset(&self, base: &Coords, offset: &Coords) -> (Coords, Coords) {
        let (mut b, mut o) = (*base, *offset);
        for layer in &self.layers {
            (b, o) = layer.apply_offset(&b, &o, false);
        }
        (b.reduce().lift(), o)
    }

    /// Forward orbit `(x, f(x), ..., f^n(x))` for `n >= 0`, or the backward
    /// orbit `(x, f^{-1}(x), ..., f^{n}(x))` for `n < 0`.
    pub fn iterate_orbit(&self, x: &TorusPoint, n: i64) -> Result<Vec<TorusPoint>> {
        self.check_orbit(n.unsigned_abs())?;
        let mut out = Vec::with_capacity(n.unsigned_abs() as usize + 1);
        let mut cur = *x;
        out.push(cur);
        for _ in 0..n.unsigned_abs() {
            cur = if n >= 0 { self.evaluate(&cur) } else { self.evaluate_inverse(&cur) };
            out.push(cur);
        }
        Ok(out)
    }

    /// `f^n(x)` (negative `n` iterates the inverse).
    pub fn iterate(&self, x: &TorusPoint, n: i64) -> Result<TorusPoint> {
        self.check_orbit(n.unsigned_abs())?;
        let mut cur = *x;
        for _ in 0..n.unsigned_abs() {
            cur = if n >= 0 { self.evaluate(&cur) } else { self.evaluate_inverse(&cur) };
        }
        Ok(cur)
    }

    pub fn check_orbit(&self, len: u64) -> Result<()> {
        if len > self.max_orbit {
            Err(LabError::OrbitLengthExceeded { requested: len, cap: self.max_orbit })
        } else {
            Ok(())
        }
    }
}

/// Points `i / resolution` of the uniform grid on `T^dim`, in lexicographic order.
pub fn uniform_grid(dim: usize, resolution: usize) -> Vec<TorusPoint> {
    let total = resolution.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = Coords::zeros(dim);
            for i in (0..dim).rev() {
                c[i] = (idx % resolution) as f64 / resolution as f64;
                idx /= resolution;
            }
            TorusPoint(c)
        })
        .collect()
}

/// Index offsets of the grid neighbours (one step along each axis, periodic).
pub fn grid_neighbors(dim: usize, resolution: usize, index: usize) -> Vec<usize> {
    let mut digits = vec![0usize; dim];
    let mut idx = index;
    for i in (0..dim).rev() {
        digits[i] = idx % resolution;
        idx /= resolution;
    }
    (0..dim)
        .map(|axis| {
            let mut d = digits.clone();
            d[axis] = (d[axis] + 1) % resolution;
            d.iter().fold(0, |acc, &x| acc * resolution + x)
        })
        .collect()
}
