//! Dimension-generic vectors, points on the sphere of radius `R`, and the
//! orthogonal-complement machinery used to pick collision directions.

use std::fmt;
use std::ops::{Add, Index, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative on-sphere tolerance: `| |x|^2 - R^2 | <= SPHERE_EPS * R^2`.
pub const SPHERE_EPS: f64 = 1e-9;

/// Tolerance on `| |n| - 1 |` for a [`Direction`].
pub const UNIT_EPS: f64 = 1e-12;

/// `|m| <= DEGENERATE_EPS * (1 + |m|)` is treated as the zero vector.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// A point of `R^d` (velocity units).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    /// The standard basis vector `e_axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[axis] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * k).collect())
    }

    /// `self + k * other`
    pub fn add_scaled(&self, k: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + k * b).collect())
    }

    /// Copy with the sign of coordinate `axis` flipped.
    pub fn flip(&self, axis: usize) -> Vector {
        let mut v = self.clone();
        v.0[axis] = -v.0[axis];
        v
    }

    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Errors unless both vectors have the same dimension.
    pub fn ensure_same_dim(&self, other: &Vector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.add_scaled(-1.0, rhs)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|x| -x).collect())
    }
}

/// A velocity on the sphere `|x| = R`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coords: Vector,
    radius: f64,
}

impl SpherePoint {
    /// Checks `d >= 2`, `R > 0`, and the on-sphere invariant.
    pub fn new(coords: impl Into<Vector>, radius: f64) -> Result<Self> {
        let coords = coords.into();
        check_dim_radius(coords.dim(), radius)?;
        let residual = sphere_residual(&coords, radius);
        if residual > SPHERE_EPS * radius * radius {
            return Err(Error::invalid(format!(
                "point {coords:?} is off the sphere of radius {radius} (| |x|^2 - R^2 | = {residual:e})"
            )));
        }
        Ok(SpherePoint { coords, radius })
    }

    /// Wraps coordinates without checking the on-sphere invariant. Used for
    /// perturbed quadruples and admissibility diagnostics.
    pub fn new_unchecked(coords: impl Into<Vector>, radius: f64) -> Self {
        SpherePoint {
            coords: coords.into(),
            radius,
        }
    }

    /// Radially projects `coords` onto the sphere of radius `radius`.
    pub fn project(coords: impl Into<Vector>, radius: f64) -> Result<Self> {
        let coords = coords.into();
        check_dim_radius(coords.dim(), radius)?;
        let norm = coords.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("cannot project the zero vector onto a sphere"));
        }
        Ok(SpherePoint {
            coords: coords.scale(radius / norm),
            radius,
        })
    }

    /// Re-projects onto the sphere, removing accumulated rounding drift.
    pub fn renormalized(&self) -> SpherePoint {
        let norm = self.coords.norm();
        SpherePoint {
            coords: self.coords.scale(self.radius / norm),
            radius: self.radius,
        }
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }

    /// `| |x|^2 - R^2 |`
    pub fn residual(&self) -> f64 {
        sphere_residual(&self.coords, self.radius)
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint {
            coords: -&self.coords,
            radius: self.radius,
        }
    }

    /// Flipping a coordinate sign keeps the point on the sphere.
    pub fn flip(&self, axis: usize) -> SpherePoint {
        SpherePoint {
            coords: self.coords.flip(axis),
            radius: self.radius,
        }
    }
}

impl fmt::Debug for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}@R={}", self.coords, self.radius)
    }
}

fn sphere_residual(coords: &Vector, radius: f64) -> f64 {
    (coords.norm_sq() - radius * radius).abs()
}

fn check_dim_radius(dim: usize, radius: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "sphere points need d >= 2",
        });
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}

/// A unit vector (dimensionless).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(Vector);

impl Direction {
    pub fn new(coords: impl Into<Vector>) -> Result<Self> {
        let coords = coords.into();
        let norm = coords.norm();
        if (norm - 1.0).abs() > UNIT_EPS {
            return Err(Error::invalid(format!(
                "direction {coords:?} is not a unit vector (|n| = {norm})"
            )));
        }
        Ok(Direction(coords))
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(coords: impl Into<Vector>) -> Result<Self> {
        let coords = coords.into();
        let norm = coords.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        Ok(Direction(coords.scale(1.0 / norm)))
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl fmt::Debug for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Whether `m` is numerically zero under the degenerate-momentum rule.
pub fn is_degenerate(m: &Vector) -> bool {
    let norm = m.norm();
    norm <= DEGENERATE_EPS * (1.0 + norm)
}

/// Uniform point on the sphere of radius `radius` in `R^dim`: an isotropic
/// Gaussian draw, normalized.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Result<SpherePoint> {
    check_dim_radius(dim, radius)?;
    loop {
        let g = gaussian_vector(dim, rng);
        let norm = g.norm();
        // Probability zero, but a zero draw cannot be normalized.
        if norm > 0.0 {
            return Ok(SpherePoint {
                coords: g.scale(radius / norm),
                radius,
            });
        }
    }
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    Vector((0..dim).map(|_| rng.sample(StandardNormal)).collect())
}

/// Householder reflection `H = I - 2 w w^T / (w . w)` sending `m/|m|` to a
/// multiple of `e_pivot`, where `pivot` is the largest-magnitude coordinate.
/// Columns of `H` other than `pivot` span the orthogonal complement of `m`.
struct Householder {
    w: Vec<f64>,
    w_norm_sq: f64,
    pivot: usize,
}

impl Householder {
    fn for_vector(m: &Vector) -> Self {
        let norm = m.norm();
        let pivot = m
            .as_slice()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut w: Vec<f64> = m.as_slice().iter().map(|x| x / norm).collect();
        // Adding sign(u_k) e_k avoids cancellation.
        w[pivot] += if w[pivot] >= 0.0 { 1.0 } else { -1.0 };
        let w_norm_sq = dot(&w, &w);
        Householder { w, w_norm_sq, pivot }
    }

    fn apply(&self, x: &[f64]) -> Vector {
        let k = 2.0 * dot(&self.w, x) / self.w_norm_sq;
        Vector(x.iter().zip(&self.w).map(|(xi, wi)| xi - k * wi).collect())
    }
}

/// Orthonormal basis of the orthogonal complement of `m`.
///
/// Returns `d - 1` directions when `m` is non-degenerate, and the full
/// standard basis (`d` directions) when `m` is numerically zero.
pub fn orthonormal_complement_basis(m: &Vector) -> Vec<Direction> {
    let dim = m.dim();
    if is_degenerate(m) {
        return (0..dim).map(|i| Direction(Vector::basis(dim, i))).collect();
    }
    let h = Householder::for_vector(m);
    (0..dim)
        .filter(|&j| j != h.pivot)
        .map(|j| Direction(h.apply(Vector::basis(dim, j).as_slice())))
        .collect()
}

/// Uniform unit vector in the orthogonal complement of `m` (the whole sphere
/// when `m` is degenerate). Drawn as a standard Gaussian in the complement
/// basis and normalized; in `d = 2` this is `+n0` or `-n0` with probability
/// 1/2 each.
pub fn sample_orthogonal_direction<R: Rng + ?Sized>(m: &Vector, rng: &mut R) -> Direction {
    let dim = m.dim();
    if is_degenerate(m) {
        loop {
            let g = gaussian_vector(dim, rng);
            if let Ok(n) = Direction::normalize(g) {
                return n;
            }
        }
    }
    let h = Householder::for_vector(m);
    loop {
        // Coefficients in the basis {H e_j : j != pivot}; H is linear, so the
        // combination is H applied to the coefficient vector.
        let mut coeffs = gaussian_vector(dim, rng).into_inner();
        coeffs[h.pivot] = 0.0;
        let n = h.apply(&coeffs);
        if let Ok(n) = Direction::normalize(n) {
            return n;
        }
    }
}
