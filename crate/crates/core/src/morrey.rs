//! Weighted Morrey norms over dyadic, half-open, centered and ball families,
//! the embedding chain, and the sign-sequence witnesses.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{enumerate_lattice, pow2, vertex_centers, Ball, CubeFamily, DyadicCube, IndexBox, LatticeKind};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::muckenhoupt::{check_p, Weight};
use crate::quadrature::Region;
use crate::report::{GridMeta, VerificationReport};
use crate::stats::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyParams {
    p: f64,
    r: f64,
    n: usize,
}

impl MorreyParams {
    /// Requires `1 < p < inf` and `-n/p <= r < 0`.
    pub fn new(p: f64, r: f64, n: usize) -> Result<Self> {
        check_p(p)?;
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidParameter(format!("dimension {n}")));
        }
        let lo = -(n as f64) / p;
        if !(r < 0.0 && r >= lo * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("r = {r} must lie in [{lo}, 0)")));
        }
        Ok(Self { p, r: r.max(lo), n })
    }

    /// The endpoint `r = -n/p`, where the norm is the weighted `L_p` norm.
    pub fn lp_endpoint(p: f64, n: usize) -> Result<Self> {
        Self::new(p, -(n as f64) / p, n)
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// `1/p + r/n`, in `[0, 1/p)`.
    pub fn exponent(&self) -> f64 {
        (1.0 / self.p + self.r / self.n as f64).max(0.0)
    }

    pub fn is_endpoint(&self) -> bool {
        self.exponent() == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorreyNorm {
    pub value: f64,
    /// First cube in family order attaining the maximum.
    pub attained: DyadicCube,
}

/// Per-cell `w` masses and `|f|^p w` masses.
pub(crate) fn cell_data(f: &GridFunction, w: &Weight, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = f.domain();
    let wm = w.cell_masses(d)?;
    let fw = f.samples().iter().zip(&wm).map(|(v, m)| v.abs().powf(p) * m).collect();
    Ok((wm, fw))
}

#[inline]
fn quotient(wq: f64, fq: f64, mp: &MorreyParams) -> f64 {
    if fq == 0.0 {
        0.0
    } else {
        wq.powf(-mp.exponent()) * fq.powf(1.0 / mp.p)
    }
}

fn check_family(f: &GridFunction, mp: &MorreyParams, fam: &CubeFamily) -> Result<()> {
    if f.domain() != fam.domain() {
        return Err(Error::InvalidDomain("function and family live on different grids".into()));
    }
    f.domain().check_dim(mp.n)?;
    if fam.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(())
}

/// `max over fam of w(Q)^{-(1/p + r/n)} (∫_Q |f|^p w)^{1/p}`.
pub fn morrey_norm(f: &GridFunction, w: &Weight, mp: &MorreyParams, fam: &CubeFamily) -> Result<MorreyNorm> {
    check_family(f, mp, fam)?;
    let d = fam.domain();
    let (wm, fw) = cell_data(f, w, mp.p)?;
    let vals: Vec<f64> = fam.boxes().par_iter().map(|b| quotient(b.sum(d, &wm), b.sum(d, &fw), mp)).collect();
    let (i, value) = argmax(&vals).ok_or(Error::EmptyFamily)?;
    Ok(MorreyNorm { value, attained: fam.cubes()[i].clone() })
}

/// Norm over precomputed per-cell masses, with summed-area tables.
pub(crate) fn morrey_norm_masses(d: &Domain, wm: &[f64], fw: &[f64], mp: &MorreyParams, boxes: &[IndexBox]) -> Vec<f64> {
    let pw = Prefix::new(d, wm);
    let pf = Prefix::new(d, fw);
    boxes.par_iter().map(|b| quotient(pw.sum(b), pf.sum(b), mp)).collect()
}

/// Half-open lattice `2^{-J}(M + [0,1)^n)` with sides matching the closed
/// family `[j_min, j_max]`.
pub fn morrey_norm_halfopen(f: &GridFunction, w: &Weight, mp: &MorreyParams, j_min: i32, j_max: i32) -> Result<MorreyNorm> {
    let fam = enumerate_lattice(f.domain(), j_min - 1, j_max - 1, LatticeKind::HalfOpen)?;
    morrey_norm(f, w, mp, &fam)
}

/// Centered cubes `x + 2^{-J}[-1,1]^n` over lattice vertices at `stride`.
pub fn morrey_norm_centered(
    f: &GridFunction,
    w: &Weight,
    mp: &MorreyParams,
    j_min: i32,
    j_max: i32,
    stride: usize,
) -> Result<MorreyNorm> {
    let fam = CubeFamily::centered(*f.domain(), j_min, j_max, stride)?;
    check_family(f, mp, &fam)?;
    let (wm, fw) = cell_data(f, w, mp.p)?;
    let vals = morrey_norm_masses(fam.domain(), &wm, &fw, mp, fam.boxes());
    let (i, value) = argmax(&vals).ok_or(Error::EmptyFamily)?;
    Ok(MorreyNorm { value, attained: fam.cubes()[i].clone() })
}

/// Balls of radius `2^{-J}` and `1.5 * 2^{-J}` around lattice vertices at
/// `stride`, keeping those that contain a cell center.
pub fn ball_family(d: &Domain, j_min: i32, j_max: i32, stride: usize) -> Result<Vec<Ball>> {
    if j_min > j_max {
        return Err(Error::ScaleRange { j_min, j_max });
    }
    let centers = vertex_centers(d, stride)?;
    let mut out = Vec::new();
    for j in j_min..=j_max {
        for factor in [1.0, 1.5] {
            for c in &centers {
                let b = Ball::new(c, factor * pow2(-j))?;
                if !b.cells(d).is_empty() {
                    out.push(b);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(out)
}

/// Ball form of the norm. Returns the value and the index of the first
/// maximizing ball.
pub fn morrey_norm_balls(f: &GridFunction, w: &Weight, mp: &MorreyParams, balls: &[Ball]) -> Result<(f64, usize)> {
    f.domain().check_dim(mp.n)?;
    let d = f.domain();
    let (wm, fw) = cell_data(f, w, mp.p)?;
    let vals: Vec<f64> = balls
        .par_iter()
        .map(|b| {
            let cells = b.cells(d);
            let wq: f64 = cells.iter().map(|&i| wm[i]).sum();
            let fq: f64 = cells.iter().map(|&i| fw[i]).sum();
            if cells.is_empty() { 0.0 } else { quotient(wq, fq, mp) }
        })
        .collect();
    argmax(&vals).map(|(i, v)| (v, i)).ok_or(Error::EmptyFamily)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormVariant {
    Closed,
    HalfOpen,
    Centered,
    Balls,
}

impl NormVariant {
    pub const ALL: [NormVariant; 4] = [NormVariant::Closed, NormVariant::HalfOpen, NormVariant::Centered, NormVariant::Balls];

    pub fn name(&self) -> &'static str {
        match self {
            NormVariant::Closed => "closed",
            NormVariant::HalfOpen => "half_open",
            NormVariant::Centered => "centered",
            NormVariant::Balls => "balls",
        }
    }
}

/// Scale range and center stride shared by the four variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantSetup {
    pub j_min: i32,
    pub j_max: i32,
    pub stride: usize,
}

impl Default for VariantSetup {
    fn default() -> Self {
        Self { j_min: -2, j_max: 5, stride: 4 }
    }
}

/// All four variant norms for each function of a corpus, with the geometric
/// families built once.
pub fn variant_norms(corpus: &[GridFunction], w: &Weight, mp: &MorreyParams, s: &VariantSetup) -> Result<Vec<[f64; 4]>> {
    let d = *corpus.first().ok_or(Error::EmptyCorpus)?.domain();
    let closed = enumerate_lattice(&d, s.j_min, s.j_max, LatticeKind::Closed)?;
    let half = enumerate_lattice(&d, s.j_min - 1, s.j_max - 1, LatticeKind::HalfOpen)?;
    let centered = CubeFamily::centered(d, s.j_min, s.j_max, s.stride)?;
    let balls = ball_family(&d, s.j_min, s.j_max, s.stride)?;
    let ball_cells: Vec<Vec<usize>> = balls.iter().map(|b| b.cells(&d)).collect();
    let wm = w.cell_masses(&d)?;
    let ball_w: Vec<f64> = ball_cells.iter().map(|c| c.iter().map(|&i| wm[i]).sum()).collect();
    corpus
        .iter()
        .map(|f| {
            if f.domain() != &d {
                return Err(Error::InvalidDomain("corpus members on different grids".into()));
            }
            let fw: Vec<f64> = f.samples().iter().zip(&wm).map(|(v, m)| v.abs().powf(mp.p) * m).collect();
            let direct = |fam: &CubeFamily| -> f64 {
                let v: Vec<f64> = fam.boxes().par_iter().map(|b| quotient(b.sum(&d, &wm), b.sum(&d, &fw), mp)).collect();
                argmax(&v).map(|x| x.1).unwrap_or(0.0)
            };
            let cen = morrey_norm_masses(&d, &wm, &fw, mp, centered.boxes());
            let bv: Vec<f64> = ball_cells
                .par_iter()
                .zip(&ball_w)
                .map(|(c, &wq)| quotient(wq, c.iter().map(|&i| fw[i]).sum(), mp))
                .collect();
            Ok([
                direct(&closed),
                direct(&half),
                argmax(&cen).map(|x| x.1).unwrap_or(0.0),
                argmax(&bv).map(|x| x.1).unwrap_or(0.0),
            ])
        })
        .collect()
}

/// Largest ratio between two variants over a corpus, for each ordered pair,
/// and the overall constant `C` with every ratio in `[1/C, C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantEquivalence {
    pub constant: f64,
    /// `(a, b, max over corpus of max(‖f‖_a/‖f‖_b, ‖f‖_b/‖f‖_a))`.
    pub pairs: Vec<(NormVariant, NormVariant, f64)>,
    pub norms: Vec<[f64; 4]>,
}

pub fn variant_equivalence(corpus: &[GridFunction], w: &Weight, mp: &MorreyParams, s: &VariantSetup) -> Result<VariantEquivalence> {
    let norms = variant_norms(corpus, w, mp, s)?;
    let mut pairs = Vec::new();
    for a in 0..4 {
        for b in a + 1..4 {
            let mut c = 1.0f64;
            for (k, row) in norms.iter().enumerate() {
                if row[a] == 0.0 && row[b] == 0.0 {
                    continue;
                }
                if row[a] == 0.0 || row[b] == 0.0 {
                    return Err(Error::DegenerateNorm(k));
                }
                c = c.max(row[a] / row[b]).max(row[b] / row[a]);
            }
            pairs.push((NormVariant::ALL[a], NormVariant::ALL[b], c));
        }
    }
    let constant = pairs.iter().map(|p| p.2).fold(1.0, f64::max);
    Ok(VariantEquivalence { constant, pairs, norms })
}

/// `(∫_region |f|^p w)^{1/p}`.
pub fn weighted_lp_norm(f: &GridFunction, w: &Weight, p: f64, region: &Region) -> Result<f64> {
    let d = f.domain();
    let cells = region.cells(d)?;
    let (_, fw) = cell_data(f, w, p)?;
    Ok(cells.sum(d, &fw).powf(1.0 / p))
}

/// Checks `‖f‖_{L^r_p(w)} <= ‖f‖_{L^r_{p̃}(w)} <= ‖f‖_{L_{u,w}}` with
/// `u = -n/r`.
pub fn embedding_check(f: &GridFunction, w: &Weight, mp: &MorreyParams, p_tilde: f64, fam: &CubeFamily) -> Result<VerificationReport> {
    let n = mp.n as f64;
    let u = -n / mp.r;
    if !(mp.p <= p_tilde && p_tilde <= u * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("need p = {} <= p~ = {p_tilde} <= u = {u}", mp.p)));
    }
    let mid = MorreyParams::new(p_tilde, mp.r, mp.n)?;
    let a = morrey_norm(f, w, mp, fam)?;
    let b = morrey_norm(f, w, &mid, fam)?;
    let c = weighted_lp_norm(f, w, u, &Region::Whole)?;
    let tol = 1e-12;
    let first = a.value <= b.value * (1.0 + tol);
    let second = b.value <= c * (1.0 + tol);
    Ok(VerificationReport::new("embedding", "Morrey embedding chain ending in L_u, u = -n/r", GridMeta::of(fam.domain()).with_family(fam))
        .sides(a.value, c)
        .constant(if a.value > 0.0 { c / a.value } else { 1.0 })
        .pass(first && second)
        .witness(a.attained.to_string())
        .witness(b.attained.to_string())
        .witness(f.content_hash())
        .detail("norm_p", a.value)
        .detail("norm_p_tilde", b.value)
        .detail("norm_lu", c)
        .detail("u", u))
}

/// `Q_l = 2^{-l}((2, ..., 2) + [0, 1]^n)`.
pub fn witness_cube(l: i32, n: usize) -> DyadicCube {
    DyadicCube::half_open(l, &vec![2; n])
}

/// Depth at which `Q_l` spans exactly two cells per axis.
pub fn default_witness_depth(d: &Domain) -> i32 {
    (-(2.0 * d.spacing()).log2()).floor() as i32
}

fn check_witness(mp: &MorreyParams, d: &Domain, l_max: i32) -> Result<()> {
    if mp.is_endpoint() {
        return Err(Error::InvalidParameter("witnesses need r > -n/p".into()));
    }
    if l_max < 2 {
        return Err(Error::InvalidParameter(format!("witness depth {l_max} below 2")));
    }
    if pow2(-l_max) < 2.0 * d.spacing() * (1.0 - 1e-12) {
        return Err(Error::ScaleTooFine { j: l_max, side: pow2(-l_max), spacing: d.spacing() });
    }
    if 3.0 * pow2(-2) > d.half_width() {
        return Err(Error::InvalidDomain("witness cubes leave the domain".into()));
    }
    Ok(())
}

/// `f^λ = Σ_l λ_l w(Q_l)^{r/n} χ_{Q_l}` for `l = 2, ..., 1 + λ.len()`.
pub fn nonseparability_witness(lambda: &[i8], w: &Weight, mp: &MorreyParams, d: &Domain) -> Result<GridFunction> {
    let l_max = 1 + lambda.len() as i32;
    check_witness(mp, d, l_max)?;
    d.check_dim(mp.n)?;
    let wm = w.cell_masses(d)?;
    let mut out = vec![0.0; d.cell_count()];
    for (k, &s) in lambda.iter().enumerate() {
        if s != 1 && s != -1 {
            return Err(Error::InvalidParameter(format!("sign {s} at position {k}")));
        }
        let q = witness_cube(2 + k as i32, mp.n);
        let b = q.bounds().index_box(d).ok_or(Error::EmptyIntersection)?;
        let coef = s as f64 * b.sum(d, &wm).powf(mp.r / mp.n as f64);
        b.for_each(d, |i| out[i] = coef);
    }
    GridFunction::new(*d, out)
}

/// Geometric-series bound on the half-open norm of any witness of depth
/// `l_max`: `max(1, max_{l0} (Σ_{l>=l0} (w(Q_l)/w(2^{2-l0}[0,1]^n))^{(1/p+r/n)p})^{1/p})`.
pub fn witness_norm_bound(w: &Weight, mp: &MorreyParams, d: &Domain, l_max: i32) -> Result<f64> {
    check_witness(mp, d, l_max)?;
    let wm = w.cell_masses(d)?;
    let mass = |c: &DyadicCube| -> Result<f64> { Ok(c.bounds().index_box(d).ok_or(Error::EmptyIntersection)?.sum(d, &wm)) };
    let e = mp.exponent() * mp.p;
    let mut bound = 1.0f64;
    for l0 in 2..=l_max {
        let outer = mass(&DyadicCube::half_open(l0 - 2, &vec![0; mp.n]))?;
        let mut s = 0.0;
        for l in l0..=l_max {
            s += (mass(&witness_cube(l, mp.n))? / outer).powf(e);
        }
        bound = bound.max(s.powf(1.0 / mp.p));
    }
    Ok(bound)
}

/// Summed-area table over cells, in dimension 1 or 2.
pub(crate) struct Prefix {
    n: usize,
    stride: usize,
    table: Vec<f64>,
}

impl Prefix {
    pub(crate) fn new(d: &Domain, values: &[f64]) -> Self {
        let np = d.points_per_axis();
        let stride = np + 1;
        if d.n() == 1 {
            let mut table = vec![0.0; stride];
            for i in 0..np {
                table[i + 1] = table[i] + values[i];
            }
            Self { n: 1, stride, table }
        } else {
            let mut table = vec![0.0; stride * stride];
            for j in 0..np {
                let mut row = 0.0;
                for i in 0..np {
                    row += values[j * np + i];
                    table[(j + 1) * stride + i + 1] = table[j * stride + i + 1] + row;
                }
            }
            Self { n: 2, stride, table }
        }
    }

    pub(crate) fn sum(&self, b: &IndexBox) -> f64 {
        if self.n == 1 {
            self.table[b.hi[0] + 1] - self.table[b.lo[0]]
        } else {
            let s = self.stride;
            let at = |i: usize, j: usize| self.table[j * s + i];
            at(b.hi[0] + 1, b.hi[1] + 1) - at(b.lo[0], b.hi[1] + 1) - at(b.hi[0] + 1, b.lo[1]) + at(b.lo[0], b.lo[1])
        }
    }
}
