//! Calderón–Zygmund kernels and truncated singular integrals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};

/// Seed of the construction-time spot checks.
pub const KERNEL_CHECK_SEED: u64 = 0x5eed_c21c;
const KERNEL_CHECK_PAIRS: usize = 1000;

type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Translation-invariant kernel `K(x, y) = k(x - y)`.
#[derive(Clone)]
pub struct CZKernel {
    name: String,
    n: usize,
    c2: f64,
    delta: f64,
    k: KernelFn,
    /// `+1` for even kernels, `-1` for odd ones, `0` otherwise.
    parity: i8,
}

impl fmt::Debug for CZKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CZKernel").field("name", &self.name).field("n", &self.n).field("c2", &self.c2).field("delta", &self.delta).finish()
    }
}

/// Largest observed ratios of the size and smoothness conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCheck {
    pub size: f64,
    pub smoothness: f64,
}

impl CZKernel {
    /// Builds a kernel and spot-checks both conditions against `c2`.
    pub fn custom(name: &str, n: usize, c2: f64, delta: f64, parity: i8, k: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) || !(c2 > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel constants c2 = {c2}, delta = {delta}")));
        }
        let kern = Self { name: name.into(), n, c2, delta, k: Arc::new(k), parity };
        let chk = kern.spot_check(KERNEL_CHECK_SEED, KERNEL_CHECK_PAIRS);
        if chk.size > 1.0 + 1e-12 || chk.smoothness > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("kernel {name} violates its constants: {chk:?}")));
        }
        Ok(kern)
    }

    /// `1 / (π (x - y))`.
    pub fn hilbert() -> Self {
        Self::custom("hilbert", 1, 2.0, 1.0, -1, |z| 1.0 / (PI * z[0])).expect("Hilbert kernel constants")
    }

    /// `(x_j - y_j) / (2π |x - y|^3)` in the plane, `j` in `{1, 2}`.
    pub fn riesz(j: usize) -> Result<Self> {
        if !(1..=2).contains(&j) {
            return Err(Error::UnknownIdentifier(format!("riesz{j}")));
        }
        Self::custom(&format!("riesz{j}"), 2, 4.0, 1.0, -1, move |z| {
            let r2 = z[0] * z[0] + z[1] * z[1];
            z[j - 1] / (2.0 * PI * r2 * r2.sqrt())
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn parity(&self) -> i8 {
        self.parity
    }

    /// `K(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        (self.k)(&z)
    }

    /// Samples random off-diagonal pairs and returns the largest ratio of
    /// each side to its bound.
    pub fn spot_check(&self, seed: u64, pairs: usize) -> KernelCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n;
        let mut size = 0.0f64;
        let mut smooth = 0.0f64;
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        for _ in 0..pairs {
            let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
            let r = dist(&x, &y);
            if r == 0.0 {
                continue;
            }
            size = size.max(self.eval(&x, &y).abs() * r.powi(n as i32) / self.c2);
            // x' with 2|x - x'| <= |x - y|
            let t = rng.gen_range(0.0..0.5) * r;
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dn = dist(&dir, &vec![0.0; n]).max(1e-300);
            let xp: Vec<f64> = x.iter().zip(&dir).map(|(a, u)| a + t * u / dn).collect();
            let dxx = dist(&x, &xp);
            if dxx == 0.0 {
                continue;
            }
            let lhs = (self.eval(&x, &y) - self.eval(&xp, &y)).abs();
            let rhs = self.c2 * dxx.powf(self.delta) / (r + dist(&xp, &y)).powf(n as f64 + self.delta);
            smooth = smooth.max(lhs / rhs);
        }
        KernelCheck { size, smoothness: smooth }
    }
}

/// Kernel values on all lattice offsets with `|offset| h >= eps`, zero
/// elsewhere. Indexed by `offset + (N - 1)` per axis.
struct OffsetTable {
    width: usize,
    values: Vec<f64>,
    /// Squared offset length in cell units.
    dist2: Vec<u64>,
}

impl OffsetTable {
    fn new(k: &CZKernel, d: &Domain) -> Self {
        let np = d.points_per_axis() as i64;
        let width = (2 * np - 1) as usize;
        let h = d.spacing();
        let count = if d.n() == 1 { width } else { width * width };
        let mut values = vec![0.0; count];
        let mut dist2 = vec![0u64; count];
        for idx in 0..count {
            let (a, b) = ((idx % width) as i64 - (np - 1), (idx / width) as i64 - (np - 1));
            let z = if d.n() == 1 { vec![a as f64 * h] } else { vec![a as f64 * h, b as f64 * h] };
            let r2 = if d.n() == 1 { (a * a) as u64 } else { (a * a + b * b) as u64 };
            dist2[idx] = r2;
            values[idx] = if r2 == 0 { 0.0 } else { (k.k)(&z) };
        }
        Self { width, values, dist2 }
    }

    #[inline]
    fn at(&self, np: usize, y: [usize; 2], x: [usize; 2], n: usize) -> usize {
        let a = y[0] + np - 1 - x[0];
        if n == 1 {
            a
        } else {
            a + (y[1] + np - 1 - x[1]) * self.width
        }
    }
}

fn check_eps(d: &Domain, eps: f64) -> Result<()> {
    let min = 2.0 * d.spacing();
    if eps < min * (1.0 - 1e-12) {
        return Err(Error::BelowResolution { eps, min });
    }
    Ok(())
}

fn threshold(d: &Domain, eps: f64) -> u64 {
    // smallest squared cell distance with |Δ| h >= eps
    let t = eps / d.spacing();
    let t2 = t * t;
    let c = t2.ceil();
    if c - t2 > 1.0 - 1e-9 { (c - 1.0) as u64 } else { c as u64 }
}

/// `(T_ε f)(y) = Σ_{|y - x| >= ε} K(y, x) f(x) h^n`.
pub fn cz_apply(k: &CZKernel, f: &GridFunction, eps: f64) -> Result<GridFunction> {
    let d = *f.domain();
    d.check_dim(k.n)?;
    check_eps(&d, eps)?;
    let table = OffsetTable::new(k, &d);
    let t2 = threshold(&d, eps);
    let np = d.points_per_axis();
    let vol = d.cell_volume();
    let src = f.samples();
    let out: Vec<f64> = (0..d.cell_count())
        .into_par_iter()
        .map(|yi| {
            let y = d.unravel(yi);
            let mut acc = 0.0;
            for (xi, &fx) in src.iter().enumerate() {
                if fx == 0.0 {
                    continue;
                }
                let o = table.at(np, y, d.unravel(xi), d.n());
                if table.dist2[o] >= t2 {
                    acc += table.values[o] * fx;
                }
            }
            acc * vol
        })
        .collect();
    GridFunction::new(d, out)
}

/// `max over ε in eps_list of |T_ε f|`, computed in one pass by shells.
pub fn cz_maximal_truncation(k: &CZKernel, f: &GridFunction, eps_list: &[f64]) -> Result<GridFunction> {
    let d = *f.domain();
    d.check_dim(k.n)?;
    if eps_list.is_empty() {
        return Err(Error::EmptyTruncationList);
    }
    for &e in eps_list {
        check_eps(&d, e)?;
        if e > 2.0 * d.half_width() * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("truncation {e} exceeds the domain diameter bound 2L")));
        }
    }
    let table = OffsetTable::new(k, &d);
    let mut t2: Vec<u64> = eps_list.iter().map(|&e| threshold(&d, e)).collect();
    t2.sort_unstable();
    let np = d.points_per_axis();
    let vol = d.cell_volume();
    let src = f.samples();
    let out: Vec<f64> = (0..d.cell_count())
        .into_par_iter()
        .map(|yi| {
            let y = d.unravel(yi);
            // shell[s]: contributions with t2[s-1] <= dist2 < t2[s]
            let mut shell = vec![0.0; t2.len() + 1];
            for (xi, &fx) in src.iter().enumerate() {
                if fx == 0.0 {
                    continue;
                }
                let o = table.at(np, y, d.unravel(xi), d.n());
                let s = t2.partition_point(|&t| t <= table.dist2[o]);
                shell[s] += table.values[o] * fx;
            }
            let mut best = 0.0f64;
            let mut tail = 0.0;
            for s in (1..shell.len()).rev() {
                tail += shell[s];
                best = best.max((tail * vol).abs());
            }
            best
        })
        .collect();
    GridFunction::new(d, out)
}

/// `4h, 8h, ...` up to `2L`.
pub fn default_eps_list(d: &Domain) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = 4.0 * d.spacing();
    while e <= 2.0 * d.half_width() * (1.0 + 1e-12) {
        out.push(e);
        e *= 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::pairing;

    #[test]
    fn builtin_kernels_pass_spot_checks() {
        let h = CZKernel::hilbert();
        let c = h.spot_check(1, 2000);
        assert!(c.size <= 1.0 && c.smoothness <= 1.0, "{c:?}");
        for j in 1..=2 {
            let r = CZKernel::riesz(j).unwrap();
            let c = r.spot_check(2, 2000);
            assert!(c.size <= 1.0 && c.smoothness <= 1.0, "{c:?}");
        }
        assert!(CZKernel::custom("bad", 1, 0.01, 1.0, -1, |z| 1.0 / z[0]).is_err());
    }

    #[test]
    fn hilbert_of_interval_matches_log_formula() {
        let d = Domain::new(1, 8.0, 2048).unwrap();
        let f = GridFunction::from_fn(d, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let t = cz_apply(&CZKernel::hilbert(), &f, 4.0 * d.spacing()).unwrap();
        let mut worst = 0.0f64;
        for i in 0..d.cell_count() {
            let x = d.axis_center(i);
            if (x.abs() - 1.0).abs() >= 0.25 && x.abs() < 7.0 {
                let exact = ((x + 1.0) / (x - 1.0)).abs().ln() / PI;
                worst = worst.max((t.samples()[i] - exact).abs() / exact.abs());
            }
        }
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn resolution_and_linearity() {
        let d = Domain::new(1, 4.0, 256).unwrap();
        let k = CZKernel::hilbert();
        let f = GridFunction::from_fn(d, |x| (-x[0] * x[0]).exp()).unwrap();
        assert!(matches!(cz_apply(&k, &f, d.spacing()), Err(Error::BelowResolution { .. })));
        assert!(cz_apply(&k, &GridFunction::zeros(d), 4.0 * d.spacing()).unwrap().is_zero());
        let g = GridFunction::from_fn(d, |x| x[0].sin()).unwrap();
        let e = 4.0 * d.spacing();
        let lhs = cz_apply(&k, &f.scale(2.0).add(&g.scale(-3.0)).unwrap(), e).unwrap();
        let rhs = cz_apply(&k, &f, e).unwrap().scale(2.0).add(&cz_apply(&k, &g, e).unwrap().scale(-3.0)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10 * rhs.max_abs());
    }

    #[test]
    fn even_input_gives_odd_output_and_skew_pairing() {
        let d = Domain::new(1, 4.0, 256).unwrap();
        let k = CZKernel::hilbert();
        let e = 4.0 * d.spacing();
        let f = GridFunction::from_fn(d, |x| (-x[0] * x[0]).exp()).unwrap();
        let t = cz_apply(&k, &f, e).unwrap();
        let n = d.points_per_axis();
        for i in 0..n {
            assert!((t.samples()[i] + t.samples()[n - 1 - i]).abs() < 1e-10);
        }
        let g = GridFunction::from_fn(d, |x| (x[0] - 0.5).cos() * (-x[0].abs()).exp()).unwrap();
        let a = pairing(&t, &g);
        let b = pairing(&f, &cz_apply(&k, &g, e).unwrap());
        assert!((a + b).abs() < 1e-10);
    }

    #[test]
    fn maximal_truncation_properties() {
        let d = Domain::new(1, 4.0, 256).unwrap();
        let k = CZKernel::hilbert();
        let f = GridFunction::from_fn(d, |x| (3.0 * x[0]).sin() * (-x[0] * x[0]).exp()).unwrap();
        let e = 4.0 * d.spacing();
        let one = cz_maximal_truncation(&k, &f, &[e]).unwrap();
        assert!(one.sub(&cz_apply(&k, &f, e).unwrap().abs()).unwrap().max_abs() < 1e-12);
        let list = default_eps_list(&d);
        let all = cz_maximal_truncation(&k, &f, &list).unwrap();
        let fewer = cz_maximal_truncation(&k, &f, &list[..3]).unwrap();
        for i in 0..d.cell_count() {
            assert!(all.samples()[i] >= fewer.samples()[i] - 1e-15);
        }
        assert!(cz_maximal_truncation(&k, &GridFunction::zeros(d), &list).unwrap().is_zero());
        assert_eq!(cz_maximal_truncation(&k, &f, &[]).unwrap_err(), Error::EmptyTruncationList);
    }
}
