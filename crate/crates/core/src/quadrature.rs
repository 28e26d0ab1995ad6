//! Cell-center quadrature over cubes, boxes, balls and the whole domain.

use crate::cube::{AxisBox, Ball, DyadicCube, IndexBox};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, Sample};

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Cube(DyadicCube),
    Box(AxisBox),
    Ball(Ball),
    Whole,
}

impl From<DyadicCube> for Region {
    fn from(c: DyadicCube) -> Self {
        Region::Cube(c)
    }
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Self {
        Region::Ball(b)
    }
}

impl From<AxisBox> for Region {
    fn from(b: AxisBox) -> Self {
        Region::Box(b)
    }
}

/// Cells selected by a region.
#[derive(Debug, Clone, PartialEq)]
pub enum CellSet {
    Box(IndexBox),
    List(Vec<usize>),
}

impl CellSet {
    pub fn count(&self) -> usize {
        match self {
            CellSet::Box(b) => b.count(),
            CellSet::List(v) => v.len(),
        }
    }

    pub fn sum(&self, d: &Domain, values: &[f64]) -> f64 {
        match self {
            CellSet::Box(b) => b.sum(d, values),
            CellSet::List(v) => v.iter().map(|&i| values[i]).sum(),
        }
    }

    pub fn for_each(&self, d: &Domain, mut f: impl FnMut(usize)) {
        match self {
            CellSet::Box(b) => b.for_each(d, f),
            CellSet::List(v) => v.iter().for_each(|&i| f(i)),
        }
    }

    pub fn indices(&self, d: &Domain) -> Vec<usize> {
        match self {
            CellSet::Box(b) => b.indices(d),
            CellSet::List(v) => v.clone(),
        }
    }
}

impl Region {
    /// Cells of `d` whose centers lie in the region.
    pub fn cells(&self, d: &Domain) -> Result<CellSet> {
        let set = match self {
            Region::Cube(c) => {
                d.check_dim(c.n())?;
                c.bounds().index_box(d).map(CellSet::Box)
            }
            Region::Box(b) => {
                d.check_dim(b.n)?;
                b.index_box(d).map(CellSet::Box)
            }
            Region::Ball(b) => {
                d.check_dim(b.center.len())?;
                let v = b.cells(d);
                (!v.is_empty()).then_some(CellSet::List(v))
            }
            Region::Whole => Some(CellSet::Box(IndexBox::whole(d))),
        };
        set.ok_or(Error::EmptyIntersection)
    }
}

/// `h^n * sum of samples` over the cells of `region`.
pub fn integrate<T: Sample>(f: &GridFunction<T>, region: &Region) -> Result<T> {
    let d = f.domain();
    let cells = region.cells(d)?;
    let s = f.samples();
    let mut acc = T::zero();
    cells.for_each(d, |i| acc = acc + s[i]);
    Ok(acc * d.cell_volume())
}

/// Zeroes every sample outside the cube.
pub fn restrict<T: Sample>(f: &GridFunction<T>, cube: &DyadicCube) -> Result<GridFunction<T>> {
    let d = *f.domain();
    let cells = Region::Cube(cube.clone()).cells(&d)?;
    let mut out = vec![T::zero(); d.cell_count()];
    let s = f.samples();
    cells.for_each(&d, |i| out[i] = s[i]);
    GridFunction::new(d, out)
}

/// Indicator of the cells of a region.
pub fn indicator(d: Domain, region: &Region) -> Result<GridFunction<f64>> {
    let cells = region.cells(&d)?;
    let mut out = vec![0.0; d.cell_count()];
    cells.for_each(&d, |i| out[i] = 1.0);
    GridFunction::new(d, out)
}

/// Smallest index box containing every nonzero sample.
pub fn support_box<T: Sample>(f: &GridFunction<T>) -> Option<IndexBox> {
    let d = f.domain();
    let mut lo = [usize::MAX; 2];
    let mut hi = [0usize; 2];
    let mut any = false;
    for (idx, s) in f.samples().iter().enumerate() {
        if s.modulus() != 0.0 {
            any = true;
            let ij = d.unravel(idx);
            for a in 0..d.n() {
                lo[a] = lo[a].min(ij[a]);
                hi[a] = hi[a].max(ij[a]);
            }
        }
    }
    any.then(|| {
        let mut b = IndexBox::whole(d);
        for a in 0..d.n() {
            b.lo[a] = lo[a];
            b.hi[a] = hi[a];
        }
        b
    })
}

/// Pairing `∫ f g` by cell-center quadrature.
pub fn pairing<T: Sample>(f: &GridFunction<T>, g: &GridFunction<T>) -> T {
    let mut acc = T::zero();
    for (&a, &b) in f.samples().iter().zip(g.samples()) {
        acc = acc + a.mul_sample(b);
    }
    acc * f.domain().cell_volume()
}

/// `∫ |f g|`.
pub fn abs_pairing<T: Sample>(f: &GridFunction<T>, g: &GridFunction<T>) -> f64 {
    let s: f64 = f.samples().iter().zip(g.samples()).map(|(a, b)| a.modulus() * b.modulus()).sum();
    s * f.domain().cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d1(l: f64, n: usize) -> Domain {
        Domain::new(1, l, n).unwrap()
    }

    #[test]
    fn constant_over_unit_cube() {
        let d = d1(1.0, 64);
        let f = GridFunction::from_fn(d, |_| 1.0).unwrap();
        let v = integrate(&f, &Region::Cube(DyadicCube::closed(0, &[0]))).unwrap();
        assert!((v - 2.0).abs() <= d.spacing());
    }

    #[test]
    fn odd_function_integrates_to_zero() {
        let d = d1(4.0, 256);
        let f = GridFunction::from_fn(d, |x| x[0]).unwrap();
        let v = integrate(&f, &Region::Cube(DyadicCube::closed(-1, &[0]))).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn half_indicator_area() {
        let d = d1(2.0, 128);
        let f = GridFunction::from_fn(d, |x| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        let v = integrate(&f, &Region::Cube(DyadicCube::closed(0, &[0]))).unwrap();
        assert!((v - 1.0).abs() <= d.spacing());
    }

    #[test]
    fn restrict_examples() {
        let d = d1(2.0, 128);
        let f = GridFunction::from_fn(d, |x| (x[0] * 3.0).sin()).unwrap();
        let whole = DyadicCube::closed(-1, &[0]); // [-2, 2]
        assert_eq!(restrict(&f, &whole).unwrap(), f);
        let z = GridFunction::<f64>::zeros(d);
        assert!(restrict(&z, &DyadicCube::closed(1, &[1])).unwrap().is_zero());

        let chi = GridFunction::from_fn(d, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let r = restrict(&chi, &DyadicCube::closed(0, &[1])).unwrap(); // [0, 2]
        let v = integrate(&r, &Region::Whole).unwrap();
        assert!((v - 1.0).abs() <= d.spacing());
    }

    #[test]
    fn empty_intersection_errors() {
        let d = d1(1.0, 16);
        let far = DyadicCube::closed(0, &[10]);
        let f = GridFunction::<f64>::zeros(d);
        assert_eq!(integrate(&f, &Region::Cube(far)), Err(Error::EmptyIntersection));
    }

    #[test]
    fn monotone_in_region() {
        let d = d1(4.0, 128);
        let f = GridFunction::from_fn(d, |x| (-x[0] * x[0]).exp()).unwrap();
        let small = integrate(&f, &Region::Cube(DyadicCube::closed(1, &[0]))).unwrap();
        let big = integrate(&f, &Region::Cube(DyadicCube::closed(0, &[0]))).unwrap();
        assert!(small <= big);
    }

    #[test]
    fn refinement_is_first_order_or_better() {
        // ∫_{[0,2]} exp(x) over the closed cube Q_{0,1}
        let exact = 2f64.exp() - 1.0;
        let errs: Vec<f64> = [64usize, 128, 256, 512]
            .iter()
            .map(|&n| {
                let d = d1(4.0, n);
                let f = GridFunction::from_fn(d, |x| x[0].exp()).unwrap();
                (integrate(&f, &Region::Cube(DyadicCube::closed(0, &[1]))).unwrap() - exact).abs()
            })
            .collect();
        let hs: Vec<f64> = [64usize, 128, 256, 512].iter().map(|&n| 8.0 / n as f64).collect();
        let slope = crate::stats::loglog_slope(&hs, &errs);
        assert!(slope >= 0.9, "slope {slope}");
    }
}
