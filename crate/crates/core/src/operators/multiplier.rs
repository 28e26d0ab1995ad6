//! Fourier multipliers on the periodized grid.
//!
//! Frequencies are `ξ_k = k / (2L)` for `k` in `[-N/2, N/2)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{ComplexGridFunction, Domain, GridFunction};

type Symbol = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierClass {
    /// Hörmander–Mikhlin with integrability exponent `s`.
    HormanderMikhlin { s: f64 },
    Marcinkiewicz,
    Unclassified,
}

#[derive(Clone)]
pub struct Multiplier {
    name: String,
    n: usize,
    class: MultiplierClass,
    symbol: Symbol,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier").field("name", &self.name).field("n", &self.n).field("class", &self.class).finish()
    }
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn block_index(r: f64) -> Option<i32> {
    (r > 0.0).then(|| r.log2().floor() as i32)
}

impl Multiplier {
    pub fn custom(name: &str, n: usize, class: MultiplierClass, m: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), n, class, symbol: Arc::new(m) }
    }

    /// Built-in symbols: `identity`, `hilbert`, `riesz1`, `riesz2`,
    /// `smooth` (`|ξ|²/(1+|ξ|²)`), `alternating` (`±1` on successive dyadic
    /// annuli) and `block:<j>` (indicator of `2^j <= |ξ| < 2^{j+1}`).
    pub fn named(name: &str, n: usize) -> Result<Self> {
        let hm = MultiplierClass::HormanderMikhlin { s: 2.0 };
        let m = match name {
            "identity" => Self::custom(name, n, hm, |_| Complex64::new(1.0, 0.0)),
            "hilbert" => {
                if n != 1 {
                    return Err(Error::Dimension { expected: 1, got: n });
                }
                Self::custom(name, n, hm, |xi| Complex64::new(0.0, -xi[0].signum() * (xi[0] != 0.0) as u8 as f64))
            }
            "riesz1" | "riesz2" => {
                if n != 2 {
                    return Err(Error::Dimension { expected: 2, got: n });
                }
                let j = if name == "riesz1" { 0 } else { 1 };
                Self::custom(name, n, hm, move |xi| {
                    let r = norm(xi);
                    if r == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, -xi[j] / r)
                    }
                })
            }
            "smooth" => Self::custom(name, n, hm, |xi| {
                let r2 = xi.iter().map(|v| v * v).sum::<f64>();
                Complex64::new(r2 / (1.0 + r2), 0.0)
            }),
            "alternating" => Self::custom(name, n, MultiplierClass::Marcinkiewicz, |xi| {
                let v = match block_index(norm(xi)) {
                    Some(j) if j.rem_euclid(2) == 0 => 1.0,
                    Some(_) => -1.0,
                    None => 0.0,
                };
                Complex64::new(v, 0.0)
            }),
            _ => {
                let j: i32 = name
                    .strip_prefix("block:")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::UnknownIdentifier(format!("multiplier:{name}")))?;
                Self::custom(name, n, MultiplierClass::Marcinkiewicz, move |xi| {
                    Complex64::new((block_index(norm(xi)) == Some(j)) as u8 as f64, 0.0)
                })
            }
        };
        Ok(m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn class(&self) -> MultiplierClass {
        self.class
    }
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        (self.symbol)(xi)
    }
}

/// Lattice frequency of FFT index `k`.
pub fn frequency(d: &Domain, k: usize) -> f64 {
    let np = d.points_per_axis();
    let kk = if k < np / 2 { k as i64 } else { k as i64 - np as i64 };
    kk as f64 / (2.0 * d.half_width())
}

fn fft_nd(d: &Domain, data: &mut [Complex64], inverse: bool) {
    let np = d.points_per_axis();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(np) } else { planner.plan_fft_forward(np) };
    for row in data.chunks_mut(np) {
        fft.process(row);
    }
    if d.n() == 2 {
        let mut col = vec![Complex64::new(0.0, 0.0); np];
        for c in 0..np {
            for r in 0..np {
                col[r] = data[r * np + c];
            }
            fft.process(&mut col);
            for r in 0..np {
                data[r * np + c] = col[r];
            }
        }
    }
}

/// `F^{-1}(m · F f)` on the grid.
pub fn apply_multiplier(m: &Multiplier, f: &ComplexGridFunction) -> Result<ComplexGridFunction> {
    apply_symbol(m, f, false)
}

fn apply_symbol(m: &Multiplier, f: &ComplexGridFunction, hermitian: bool) -> Result<ComplexGridFunction> {
    let d = *f.domain();
    d.check_dim(m.n)?;
    let mut data = f.samples().to_vec();
    fft_nd(&d, &mut data, false);
    let np = d.points_per_axis();
    for (idx, v) in data.iter_mut().enumerate() {
        let xi = if d.n() == 1 { vec![frequency(&d, idx)] } else { vec![frequency(&d, idx % np), frequency(&d, idx / np)] };
        let mut s = m.eval(&xi);
        if hermitian {
            // lattice partner of ξ; the Nyquist coordinate is its own partner
            let nyq = frequency(&d, np / 2);
            let neg: Vec<f64> = xi.iter().map(|&a| if a == nyq { a } else { -a }).collect();
            s = (s + m.eval(&neg).conj()) * 0.5;
        }
        *v *= s;
    }
    fft_nd(&d, &mut data, true);
    let scale = 1.0 / d.cell_count() as f64;
    for v in &mut data {
        *v *= scale;
    }
    GridFunction::new(d, data)
}

/// Real-valued version: the symbol is replaced by its Hermitian part
/// `(m(ξ) + conj m(-ξ))/2`, which changes it only at Nyquist frequencies for
/// real-kernel symbols.
pub fn apply_multiplier_real(m: &Multiplier, f: &GridFunction) -> Result<GridFunction> {
    Ok(apply_symbol(m, &f.to_complex(), true)?.re())
}

/// Per-annulus values of `(R^{s|α|-n} ∫_{R<|ξ|<2R} |D^α m|^s dξ)^{1/s}`,
/// maximized over `|α| <= n`, with central differences on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct HmReport {
    pub s: f64,
    pub annuli: Vec<(f64, f64)>,
    pub sup: f64,
}

/// Sup of `|m|` and the largest total variation over a dyadic block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcinkiewiczReport {
    pub sup_abs: f64,
    pub max_variation: f64,
}

fn symbol_table(m: &Multiplier, d: &Domain) -> (Vec<f64>, Vec<Complex64>) {
    let np = d.points_per_axis() as i64;
    let dxi = 1.0 / (2.0 * d.half_width());
    let axis: Vec<f64> = (-np / 2..np / 2).map(|k| k as f64 * dxi).collect();
    let vals = if d.n() == 1 {
        axis.iter().map(|&a| m.eval(&[a])).collect()
    } else {
        let mut v = Vec::with_capacity(axis.len() * axis.len());
        for &b in &axis {
            for &a in &axis {
                v.push(m.eval(&[a, b]));
            }
        }
        v
    };
    (axis, vals)
}

fn multi_indices(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        vec![vec![0], vec![1]]
    } else {
        vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 0], vec![0, 2]]
    }
}

pub fn hm_check(m: &Multiplier, d: &Domain, s: f64) -> Result<HmReport> {
    d.check_dim(m.n)?;
    if !(s > 1.0) {
        return Err(Error::InvalidParameter(format!("HM exponent s = {s} must exceed 1")));
    }
    let n = d.n();
    let (axis, vals) = symbol_table(m, d);
    let w = axis.len();
    let dxi = axis[1] - axis[0];
    let at = |i: usize, j: usize| vals[i + j * if n == 1 { 0 } else { w }];
    // central difference of order a along one axis, applied to g
    let diff = |g: &dyn Fn(usize, usize) -> Complex64, i: usize, j: usize, a: usize, axis_id: usize| -> Option<Complex64> {
        let (ii, jj) = (i as i64, j as i64);
        let step = |k: i64| if axis_id == 0 { (ii + k, jj) } else { (ii, jj + k) };
        let ok = |(x, y): (i64, i64)| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < if n == 1 { 1 } else { w };
        match a {
            0 => Some(g(i, j)),
            1 => {
                let (p, q) = (step(1), step(-1));
                (ok(p) && ok(q)).then(|| (g(p.0 as usize, p.1 as usize) - g(q.0 as usize, q.1 as usize)) / (2.0 * dxi))
            }
            _ => {
                let (p, q) = (step(1), step(-1));
                (ok(p) && ok(q)).then(|| (g(p.0 as usize, p.1 as usize) - g(i, j) * 2.0 + g(q.0 as usize, q.1 as usize)) / (dxi * dxi))
            }
        }
    };
    let xi_max = axis[w - 1];
    let mut annuli = Vec::new();
    let mut r = 2f64.powi((2.0 * dxi).log2().ceil() as i32);
    while 2.0 * r <= xi_max {
        let mut best = 0.0f64;
        for alpha in multi_indices(n) {
            let order: usize = alpha.iter().sum();
            let mut integral = 0.0;
            let rows = if n == 1 { 1 } else { w };
            for j in 0..rows {
                for i in 0..w {
                    let xi = if n == 1 { axis[i].abs() } else { axis[i].hypot(axis[j]) };
                    if !(xi > r && xi < 2.0 * r) {
                        continue;
                    }
                    let inner = |x: usize, y: usize| diff(&at, x, y, alpha[0], 0).unwrap_or(Complex64::new(f64::NAN, 0.0));
                    let v = if n == 1 { diff(&at, i, j, alpha[0], 0) } else { diff(&inner, i, j, alpha[1], 1) };
                    if let Some(v) = v.filter(|v| v.re.is_finite()) {
                        integral += v.norm().powf(s) * dxi.powi(n as i32);
                    }
                }
            }
            let val = (r.powf(s * order as f64 - n as f64) * integral).powf(1.0 / s);
            best = best.max(val);
        }
        annuli.push((r, best));
        r *= 2.0;
    }
    let sup = annuli.iter().map(|a| a.1).fold(0.0, f64::max);
    Ok(HmReport { s, annuli, sup })
}

pub fn marcinkiewicz_check(m: &Multiplier, d: &Domain) -> Result<MarcinkiewiczReport> {
    d.check_dim(m.n)?;
    let n = d.n();
    let (axis, vals) = symbol_table(m, d);
    let w = axis.len();
    let sup_abs = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let block = |x: f64| block_index(x.abs()).map(|b| (b, x > 0.0));
    let mut max_variation = 0.0f64;
    if n == 1 {
        let mut cur = None;
        let mut var = 0.0;
        for i in 1..w {
            let b = block(axis[i]);
            if b.is_some() && b == block(axis[i - 1]) {
                var += (vals[i] - vals[i - 1]).norm();
            } else {
                var = 0.0;
            }
            if b != cur {
                cur = b;
            }
            max_variation = max_variation.max(var);
        }
    } else {
        // rectangle blocks: edge variations plus mixed differences
        let at = |i: usize, j: usize| vals[i + j * w];
        let mut acc: std::collections::BTreeMap<((i32, bool), (i32, bool)), (f64, f64, f64)> = Default::default();
        for j in 0..w {
            for i in 0..w {
                let (Some(bx), Some(by)) = (block(axis[i]), block(axis[j])) else { continue };
                let e = acc.entry((bx, by)).or_default();
                if i > 0 && block(axis[i - 1]) == Some(bx) {
                    e.0 = e.0.max((at(i, j) - at(i - 1, j)).norm());
                    if j > 0 && block(axis[j - 1]) == Some(by) {
                        e.2 += (at(i, j) - at(i - 1, j) - at(i, j - 1) + at(i - 1, j - 1)).norm();
                    }
                }
                if j > 0 && block(axis[j - 1]) == Some(by) {
                    e.1 = e.1.max((at(i, j) - at(i, j - 1)).norm());
                }
            }
        }
        for (_, (a, b, c)) in acc {
            max_variation = max_variation.max(a + b + c);
        }
    }
    Ok(MarcinkiewiczReport { sup_abs, max_variation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::kernel::{cz_apply, CZKernel};

    #[test]
    fn identity_roundtrip() {
        let d = Domain::new(2, 4.0, 32).unwrap();
        let f = GridFunction::from_fn(d, |x| (x[0] - x[1]).sin() + 0.2).unwrap();
        let g = apply_multiplier_real(&Multiplier::named("identity", 2).unwrap(), &f).unwrap();
        assert!(g.sub(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn hilbert_multiplier_matches_kernel_on_smooth_data() {
        let d = Domain::new(1, 16.0, 2048).unwrap();
        let f = GridFunction::from_fn(d, |x| (-x[0] * x[0]).exp()).unwrap();
        let a = apply_multiplier_real(&Multiplier::named("hilbert", 1).unwrap(), &f).unwrap();
        let b = cz_apply(&CZKernel::hilbert(), &f, 2.0 * d.spacing()).unwrap();
        let mut worst = 0.0f64;
        for i in 0..d.cell_count() {
            if d.axis_center(i).abs() < 3.0 {
                worst = worst.max((a.samples()[i] - b.samples()[i]).abs());
            }
        }
        assert!(worst < 0.02 * a.max_abs(), "{worst}");
        // H^2 = -I on mean-free data
        let h = Multiplier::named("hilbert", 1).unwrap();
        let g = GridFunction::from_fn(d, |x| x[0] * (-x[0] * x[0]).exp()).unwrap();
        let hh = apply_multiplier_real(&h, &apply_multiplier_real(&h, &g).unwrap()).unwrap();
        assert!(hh.add(&g).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity() {
        let d = Domain::new(2, 4.0, 64).unwrap();
        let f = GridFunction::from_fn(d, |x| (x[0] + 2.0 * x[1]).sin() * (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let mut acc = GridFunction::zeros(d);
        for name in ["riesz1", "riesz2"] {
            let r = Multiplier::named(name, 2).unwrap();
            acc = acc.add(&apply_multiplier_real(&r, &apply_multiplier_real(&r, &f).unwrap()).unwrap()).unwrap();
        }
        let mean = f.samples().iter().sum::<f64>() / d.cell_count() as f64;
        for (a, b) in acc.samples().iter().zip(f.samples()) {
            assert!((a + b - mean).abs() < 1e-6 * f.max_abs(), "{a} {b} {mean}");
        }
    }

    #[test]
    fn class_checks_separate_smooth_from_rough() {
        // the frequency step is 1/(2L), so refinement in ξ doubles L
        let coarse = Domain::new(1, 8.0, 256).unwrap();
        let fine = Domain::new(1, 16.0, 512).unwrap();
        let smooth = Multiplier::named("smooth", 1).unwrap();
        let a = hm_check(&smooth, &coarse, 2.0).unwrap().sup;
        let b = hm_check(&smooth, &fine, 2.0).unwrap().sup;
        assert!(a.is_finite() && (b / a) < 1.5, "{a} {b}");
        let block = Multiplier::named("block:1", 1).unwrap();
        let c = hm_check(&block, &coarse, 2.0).unwrap().sup;
        let e = hm_check(&block, &fine, 2.0).unwrap().sup;
        assert!(e > 1.3 * c, "{c} {e}");
        let mk = marcinkiewicz_check(&Multiplier::named("alternating", 1).unwrap(), &fine).unwrap();
        assert_eq!(mk.sup_abs, 1.0);
        assert!(mk.max_variation < 1e-12);
        let mk2 = marcinkiewicz_check(&smooth, &fine).unwrap();
        assert!(mk2.max_variation <= 1.0 + 1e-12);
        assert!(Multiplier::named("bogus", 1).is_err());
        assert!(Multiplier::named("hilbert", 2).is_err());
    }
}
