//! Uniform cell-centered lattices over `[-L, L]^n` and the functions sampled
//! on them.
//!
//! Every function is piecewise constant on cells. Region membership is
//! decided by the cell center, so restricting and integrating over a region
//! always touch exactly the same cells.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Truncated box `[-half_width, half_width]^n` split into `points_per_axis^n`
/// equal cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    n: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl Domain {
    pub fn new(n: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::InvalidDomain(format!("dimension {n} not in {{1, 2}}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidDomain(format!("half width {half_width} must be positive")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidDomain(format!(
                "points per axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        Ok(Self { n, half_width, points_per_axis })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Cell width `h = 2L / N`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    /// Same box, twice the points per axis.
    pub fn refined(&self) -> Self {
        Self { points_per_axis: self.points_per_axis * 2, ..*self }
    }

    /// Coordinate of the center of cell `i` along one axis.
    #[inline]
    pub fn axis_center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Coordinate of lattice vertex `k` (cell edge) along one axis, `k` in `0..=N`.
    #[inline]
    pub fn axis_vertex(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    /// Per-axis indices of a flat cell index (axis 0 is the fast axis).
    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx % n, idx / n]
        }
    }

    #[inline]
    pub fn ravel(&self, ij: [usize; 2]) -> usize {
        if self.n == 1 {
            ij[0]
        } else {
            ij[0] + self.points_per_axis * ij[1]
        }
    }

    /// Center of a cell; unused trailing coordinates are zero.
    #[inline]
    pub fn cell_center(&self, idx: usize) -> [f64; 2] {
        let ij = self.unravel(idx);
        let mut x = [0.0; 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.n) {
            *xa = self.axis_center(ij[a]);
        }
        x
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            Err(Error::Dimension { expected: self.n, got: n })
        } else {
            Ok(())
        }
    }
}

/// Scalar type a grid function can carry.
pub trait Sample:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
    fn finite(self) -> bool;
    fn mul_sample(self, other: Self) -> Self;
    fn from_real(x: f64) -> Self;
    /// Bytes hashed for content fingerprints.
    fn hash_bytes(self, out: &mut Vec<u8>);
}

impl Sample for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn finite(self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn mul_sample(self, other: Self) -> Self {
        self * other
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    fn hash_bytes(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl Sample for Complex64 {
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn mul_sample(self, other: Self) -> Self {
        self * other
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn hash_bytes(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }
}

/// A function sampled once per cell, at the cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T = f64> {
    domain: Domain,
    samples: Vec<T>,
}

pub type ComplexGridFunction = GridFunction<Complex64>;

impl<T: Sample> GridFunction<T> {
    pub fn new(domain: Domain, samples: Vec<T>) -> Result<Self> {
        if samples.len() != domain.cell_count() {
            return Err(Error::SampleCount { expected: domain.cell_count(), got: samples.len() });
        }
        if let Some(i) = samples.iter().position(|s| !s.finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { domain, samples })
    }

    pub fn zeros(domain: Domain) -> Self {
        Self { domain, samples: vec![T::zero(); domain.cell_count()] }
    }

    /// Samples `f` at every cell center. `f` receives a slice of length `n`.
    pub fn from_fn(domain: Domain, mut f: impl FnMut(&[f64]) -> T) -> Result<Self> {
        let n = domain.n();
        let samples = (0..domain.cell_count())
            .map(|idx| {
                let x = domain.cell_center(idx);
                f(&x[..n])
            })
            .collect();
        Self::new(domain, samples)
    }

    #[inline]
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    #[inline]
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|s| s.modulus() == 0.0)
    }

    /// `|f|` as a real grid function.
    pub fn abs(&self) -> GridFunction<f64> {
        GridFunction { domain: self.domain, samples: self.samples.iter().map(|s| s.modulus()).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { domain: self.domain, samples: self.samples.iter().map(|&s| s * c).collect() }
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Result<GridFunction<U>> {
        GridFunction::new(self.domain, self.samples.iter().map(|&s| f(s)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::InvalidDomain("grid functions live on different domains".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.domain, samples)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.mul_sample(b))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.modulus()))
    }

    /// SHA-256 over the domain parameters and the little-endian sample bytes.
    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::with_capacity(self.samples.len() * 8 + 24);
        bytes.extend_from_slice(&(self.domain.n() as u64).to_le_bytes());
        bytes.extend_from_slice(&self.domain.half_width().to_le_bytes());
        bytes.extend_from_slice(&(self.domain.points_per_axis() as u64).to_le_bytes());
        for &s in &self.samples {
            s.hash_bytes(&mut bytes);
        }
        hex::encode(Sha256::digest(&bytes))
    }
}

impl GridFunction<f64> {
    /// Cell averages of a 1-D function given its antiderivative. Exact for
    /// integrable singularities that sit on cell edges.
    pub fn from_antiderivative_1d(domain: Domain, antiderivative: impl Fn(f64) -> f64) -> Result<Self> {
        domain.check_dim(1)?;
        let h = domain.spacing();
        let samples = (0..domain.points_per_axis())
            .map(|i| {
                let a = domain.axis_vertex(i);
                let b = domain.axis_vertex(i + 1);
                (antiderivative(b) - antiderivative(a)) / h
            })
            .collect();
        Self::new(domain, samples)
    }

    pub fn to_complex(&self) -> ComplexGridFunction {
        GridFunction {
            domain: self.domain,
            samples: self.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl ComplexGridFunction {
    pub fn re(&self) -> GridFunction<f64> {
        GridFunction { domain: self.domain, samples: self.samples.iter().map(|z| z.re).collect() }
    }

    pub fn max_imag(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_validation() {
        assert!(Domain::new(1, 1.0, 8).is_ok());
        assert!(Domain::new(3, 1.0, 8).is_err());
        assert!(Domain::new(1, 0.0, 8).is_err());
        assert!(Domain::new(1, 1.0, 4).is_err());
        assert!(Domain::new(1, 1.0, 12).is_err());
    }

    #[test]
    fn spacing_times_points_is_box_width() {
        for &(l, n) in &[(1.0, 8usize), (8.0, 4096), (3.0, 64)] {
            let d = Domain::new(1, l, n).unwrap();
            assert_eq!(d.spacing() * n as f64, 2.0 * l);
        }
    }

    #[test]
    fn ravel_roundtrip_2d() {
        let d = Domain::new(2, 1.0, 16).unwrap();
        for idx in 0..d.cell_count() {
            assert_eq!(d.ravel(d.unravel(idx)), idx);
        }
    }

    #[test]
    fn rejects_nan_and_wrong_length() {
        let d = Domain::new(1, 1.0, 8).unwrap();
        assert!(matches!(GridFunction::new(d, vec![0.0; 7]), Err(Error::SampleCount { .. })));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(GridFunction::new(d, v), Err(Error::NonFinite(3)));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let d = Domain::new(1, 1.0, 8).unwrap();
        let f = GridFunction::from_fn(d, |x| x[0]).unwrap();
        let g = GridFunction::from_fn(d, |x| x[0]).unwrap();
        assert_eq!(f.content_hash(), g.content_hash());
        assert_ne!(f.content_hash(), f.scale(2.0).content_hash());
    }

    #[test]
    fn log_cell_average_at_origin() {
        let d = Domain::new(1, 1.0, 8).unwrap();
        let f = GridFunction::from_antiderivative_1d(d, |x: f64| {
            if x == 0.0 { 0.0 } else { x * x.abs().ln() - x }
        })
        .unwrap();
        let h = d.spacing();
        // cell [0, h]
        assert!((f.samples()[4] - (h.ln() - 1.0)).abs() < 1e-12);
    }
}
