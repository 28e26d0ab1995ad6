//! Dyadic cube geometry, cell index boxes and finite cube families.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Domain;

/// Slack, in cell units, used when deciding whether a cell center lies on a
/// region boundary.
const CELL_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CubeVariant {
    /// `2^{-J}(M + [-1, 1]^n)`, side `2^{-J+1}`.
    Closed,
    /// `2^{-J}(M + [0, 1)^n)`, side `2^{-J}`.
    HalfOpen,
    /// `x + 2^{-J}[-1, 1]^n`.
    Centered { center: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub j: i32,
    /// Lattice index; empty for the centered variant.
    pub m: Vec<i64>,
    pub variant: CubeVariant,
}

impl DyadicCube {
    pub fn closed(j: i32, m: &[i64]) -> Self {
        Self { j, m: m.to_vec(), variant: CubeVariant::Closed }
    }

    pub fn half_open(j: i32, m: &[i64]) -> Self {
        Self { j, m: m.to_vec(), variant: CubeVariant::HalfOpen }
    }

    pub fn centered(j: i32, center: &[f64]) -> Self {
        Self { j, m: Vec::new(), variant: CubeVariant::Centered { center: center.to_vec() } }
    }

    pub fn n(&self) -> usize {
        match &self.variant {
            CubeVariant::Centered { center } => center.len(),
            _ => self.m.len(),
        }
    }

    /// Unclipped center and side length.
    pub fn geometry(&self) -> (Vec<f64>, f64) {
        let s = pow2(-self.j);
        match &self.variant {
            CubeVariant::Closed => (self.m.iter().map(|&m| s * m as f64).collect(), 2.0 * s),
            CubeVariant::HalfOpen => (self.m.iter().map(|&m| s * (m as f64 + 0.5)).collect(), s),
            CubeVariant::Centered { center } => (center.clone(), 2.0 * s),
        }
    }

    pub fn side(&self) -> f64 {
        self.geometry().1
    }

    /// Lebesgue measure of the unclipped cube.
    pub fn volume(&self) -> f64 {
        self.side().powi(self.n() as i32)
    }

    pub fn bounds(&self) -> AxisBox {
        let (c, side) = self.geometry();
        let half_open = matches!(self.variant, CubeVariant::HalfOpen);
        AxisBox::around(&c, side, half_open)
    }

    /// The concentric cube with `factor` times the side length (closed).
    pub fn dilate(&self, factor: f64) -> AxisBox {
        let (c, side) = self.geometry();
        AxisBox::around(&c, side * factor, false)
    }

    /// The `2^n` closed cubes of half the side that tile a closed cube.
    pub fn children(&self) -> Vec<DyadicCube> {
        debug_assert!(matches!(self.variant, CubeVariant::Closed));
        let n = self.m.len();
        let mut out = Vec::with_capacity(1 << n);
        for bits in 0..(1usize << n) {
            let m: Vec<i64> = (0..n)
                .map(|a| {
                    let e = if bits >> (n - 1 - a) & 1 == 1 { 1 } else { -1 };
                    2 * self.m[a] + e
                })
                .collect();
            out.push(DyadicCube::closed(self.j + 1, &m));
        }
        out
    }

    /// Geometric containment of closed boxes.
    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        self.bounds().contains_box(&other.bounds())
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variant {
            CubeVariant::Closed => write!(f, "Q[J={};M={:?}]", self.j, self.m),
            CubeVariant::HalfOpen => write!(f, "Q~[J={};M={:?}]", self.j, self.m),
            CubeVariant::Centered { center } => write!(f, "Q(x={:?};J={})", center, self.j),
        }
    }
}

/// Axis-parallel box, closed unless `half_open` (then `[lo, hi)` per axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub n: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub half_open: bool,
}

impl AxisBox {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        let n = lo.len();
        let mut b = Self { n, lo: [0.0; 2], hi: [0.0; 2], half_open: false };
        b.lo[..n].copy_from_slice(lo);
        b.hi[..n].copy_from_slice(hi);
        b
    }

    pub fn around(center: &[f64], side: f64, half_open: bool) -> Self {
        let n = center.len();
        let mut b = Self { n, lo: [0.0; 2], hi: [0.0; 2], half_open };
        for a in 0..n {
            b.lo[a] = center[a] - side / 2.0;
            b.hi[a] = center[a] + side / 2.0;
        }
        b
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        (0..self.n).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    /// Interior meets `(-L, L)^n`.
    pub fn interior_meets(&self, d: &Domain) -> bool {
        let l = d.half_width();
        (0..self.n).all(|a| self.lo[a] < l && self.hi[a] > -l && self.lo[a] < self.hi[a])
    }

    pub fn inside_domain(&self, d: &Domain) -> bool {
        let l = d.half_width();
        (0..self.n).all(|a| self.lo[a] >= -l && self.hi[a] <= l)
    }

    /// Cells whose centers lie in the box.
    pub fn index_box(&self, d: &Domain) -> Option<IndexBox> {
        let mut lo = [0usize; 2];
        let mut hi = [0usize; 2];
        for a in 0..self.n {
            let (i0, i1) = axis_range(d, self.lo[a], self.hi[a], self.half_open)?;
            lo[a] = i0;
            hi[a] = i1;
        }
        Some(IndexBox { n: self.n, lo, hi })
    }
}

fn axis_range(d: &Domain, lo: f64, hi: f64, half_open: bool) -> Option<(usize, usize)> {
    let h = d.spacing();
    let l = d.half_width();
    let last = (d.points_per_axis() - 1) as f64;
    let t_lo = (lo + l) / h - 0.5;
    let t_hi = (hi + l) / h - 0.5;
    let i_min = (t_lo - CELL_TOL).ceil().max(0.0);
    let i_max = if half_open { (t_hi - CELL_TOL).ceil() - 1.0 } else { (t_hi + CELL_TOL).floor() };
    let i_max = i_max.min(last);
    if i_min > i_max || i_max < 0.0 || i_min > last {
        None
    } else {
        Some((i_min as usize, i_max as usize))
    }
}

/// Inclusive per-axis ranges of cell indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBox {
    pub n: usize,
    pub lo: [usize; 2],
    pub hi: [usize; 2],
}

impl IndexBox {
    pub fn whole(d: &Domain) -> Self {
        let last = d.points_per_axis() - 1;
        let mut b = Self { n: d.n(), lo: [0; 2], hi: [0; 2] };
        for a in 0..d.n() {
            b.hi[a] = last;
        }
        b
    }

    pub fn count(&self) -> usize {
        (0..self.n).map(|a| self.hi[a] - self.lo[a] + 1).product()
    }

    pub fn contains(&self, ij: [usize; 2]) -> bool {
        (0..self.n).all(|a| self.lo[a] <= ij[a] && ij[a] <= self.hi[a])
    }

    pub fn is_subset_of(&self, other: &IndexBox) -> bool {
        (0..self.n).all(|a| other.lo[a] <= self.lo[a] && self.hi[a] <= other.hi[a])
    }

    pub fn intersect(&self, other: &IndexBox) -> Option<IndexBox> {
        let mut b = *self;
        for a in 0..self.n {
            b.lo[a] = self.lo[a].max(other.lo[a]);
            b.hi[a] = self.hi[a].min(other.hi[a]);
            if b.lo[a] > b.hi[a] {
                return None;
            }
        }
        Some(b)
    }

    /// Calls `f` on each flat index, rows in order.
    #[inline]
    pub fn for_each(&self, d: &Domain, mut f: impl FnMut(usize)) {
        if self.n == 1 {
            (self.lo[0]..=self.hi[0]).for_each(f);
        } else {
            for i1 in self.lo[1]..=self.hi[1] {
                let base = i1 * d.points_per_axis();
                for i0 in self.lo[0]..=self.hi[0] {
                    f(base + i0);
                }
            }
        }
    }

    /// Sum of `values` over the box, accumulated row by row.
    #[inline]
    pub fn sum(&self, d: &Domain, values: &[f64]) -> f64 {
        if self.n == 1 {
            values[self.lo[0]..=self.hi[0]].iter().sum()
        } else {
            let np = d.points_per_axis();
            (self.lo[1]..=self.hi[1])
                .map(|i1| values[i1 * np + self.lo[0]..=i1 * np + self.hi[0]].iter().sum::<f64>())
                .sum()
        }
    }

    pub fn indices(&self, d: &Domain) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.count());
        self.for_each(d, |i| v.push(i));
        v
    }
}

/// Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius {radius} must be positive")));
        }
        Ok(Self { center: center.to_vec(), radius })
    }

    pub fn bounding_box(&self) -> AxisBox {
        AxisBox::around(&self.center, 2.0 * self.radius, false)
    }

    /// Cells whose centers lie in the closed ball.
    pub fn cells(&self, d: &Domain) -> Vec<usize> {
        let Some(bb) = self.bounding_box().index_box(d) else { return Vec::new() };
        let r2 = (self.radius + CELL_TOL * d.spacing()).powi(2);
        let mut out = Vec::new();
        bb.for_each(d, |idx| {
            let x = d.cell_center(idx);
            let dist2: f64 = (0..d.n()).map(|a| (x[a] - self.center[a]).powi(2)).sum();
            if dist2 <= r2 {
                out.push(idx);
            }
        });
        out
    }
}

/// Finite set of cubes together with their clipped cell boxes.
#[derive(Debug, Clone)]
pub struct CubeFamily {
    domain: Domain,
    j_min: i32,
    j_max: i32,
    cubes: Vec<DyadicCube>,
    boxes: Vec<IndexBox>,
}

impl CubeFamily {
    /// Builds a family from arbitrary cubes; cubes missing every cell center
    /// are dropped.
    pub fn from_cubes(domain: Domain, cubes: Vec<DyadicCube>) -> Result<Self> {
        let mut kept = Vec::with_capacity(cubes.len());
        let mut boxes = Vec::with_capacity(cubes.len());
        for c in cubes {
            domain.check_dim(c.n())?;
            if let Some(b) = c.bounds().index_box(&domain) {
                kept.push(c);
                boxes.push(b);
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let j_min = kept.iter().map(|c| c.j).min().unwrap_or(0);
        let j_max = kept.iter().map(|c| c.j).max().unwrap_or(0);
        Ok(Self { domain, j_min, j_max, cubes: kept, boxes })
    }

    /// Centered cubes `x + 2^{-J}[-1,1]^n` for lattice vertices `x` taken
    /// every `stride` cells along each axis.
    pub fn centered(domain: Domain, j_min: i32, j_max: i32, stride: usize) -> Result<Self> {
        check_scales(&domain, j_min, j_max)?;
        let centers = vertex_centers(&domain, stride)?;
        let mut cubes = Vec::new();
        for j in j_min..=j_max {
            for x in &centers {
                cubes.push(DyadicCube::centered(j, x));
            }
        }
        Self::from_cubes(domain, cubes)
    }

    #[inline]
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    #[inline]
    pub fn j_min(&self) -> i32 {
        self.j_min
    }
    #[inline]
    pub fn j_max(&self) -> i32 {
        self.j_max
    }
    #[inline]
    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }
    #[inline]
    pub fn boxes(&self) -> &[IndexBox] {
        &self.boxes
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.cubes.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Sub-family with scales in `[j_min, j_max]`.
    pub fn restrict_scales(&self, j_min: i32, j_max: i32) -> Result<Self> {
        let mut cubes = Vec::new();
        let mut boxes = Vec::new();
        for (c, b) in self.cubes.iter().zip(&self.boxes) {
            if (j_min..=j_max).contains(&c.j) {
                cubes.push(c.clone());
                boxes.push(*b);
            }
        }
        if cubes.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(Self { domain: self.domain, j_min, j_max, cubes, boxes })
    }
}

/// Largest `J` whose closed cubes span at least two cells per axis.
pub fn finest_scale(d: &Domain) -> i32 {
    (1.0 - (2.0 * d.spacing()).log2() + 1e-9).floor() as i32
}

fn check_scales(d: &Domain, j_min: i32, j_max: i32) -> Result<()> {
    if j_min > j_max {
        return Err(Error::ScaleRange { j_min, j_max });
    }
    let side = pow2(-j_max + 1);
    if side < 2.0 * d.spacing() * (1.0 - 1e-12) {
        return Err(Error::ScaleTooFine { j: j_max, side, spacing: d.spacing() });
    }
    Ok(())
}

pub(crate) fn vertex_centers(d: &Domain, stride: usize) -> Result<Vec<Vec<f64>>> {
    if stride == 0 {
        return Err(Error::InvalidParameter("center stride must be positive".into()));
    }
    let axis: Vec<f64> = (0..=d.points_per_axis()).step_by(stride).map(|k| d.axis_vertex(k)).collect();
    Ok(if d.n() == 1 {
        axis.iter().map(|&x| vec![x]).collect()
    } else {
        let mut v = Vec::with_capacity(axis.len() * axis.len());
        for &y in &axis {
            for &x in &axis {
                v.push(vec![x, y]);
            }
        }
        v
    })
}

/// Which lattice the family enumerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Closed,
    HalfOpen,
}

/// All lattice cubes with scale in `[j_min, j_max]` whose interior meets the
/// domain, ordered by `J` ascending and then `M` lexicographically.
pub fn enumerate_cubes(d: &Domain, j_min: i32, j_max: i32) -> Result<CubeFamily> {
    enumerate_lattice(d, j_min, j_max, LatticeKind::Closed)
}

pub fn enumerate_lattice(d: &Domain, j_min: i32, j_max: i32, kind: LatticeKind) -> Result<CubeFamily> {
    check_scales(d, j_min, j_max)?;
    let l = d.half_width();
    let mut cubes = Vec::new();
    for j in j_min..=j_max {
        let scaled = pow2(j) * l;
        // closed: M - 1 < 2^J L and M + 1 > -2^J L; half-open: M < 2^J L and M + 1 > -2^J L
        let (m_lo, m_hi) = match kind {
            LatticeKind::Closed => ((-scaled - 1.0).floor() as i64 + 1, (scaled + 1.0).ceil() as i64 - 1),
            LatticeKind::HalfOpen => ((-scaled - 1.0).floor() as i64 + 1, scaled.ceil() as i64 - 1),
        };
        let make = |m: &[i64]| match kind {
            LatticeKind::Closed => DyadicCube::closed(j, m),
            LatticeKind::HalfOpen => DyadicCube::half_open(j, m),
        };
        if d.n() == 1 {
            for m in m_lo..=m_hi {
                cubes.push(make(&[m]));
            }
        } else {
            for m0 in m_lo..=m_hi {
                for m1 in m_lo..=m_hi {
                    cubes.push(make(&[m0, m1]));
                }
            }
        }
    }
    cubes.retain(|c| c.bounds().interior_meets(d));
    CubeFamily::from_cubes(*d, cubes)
}
