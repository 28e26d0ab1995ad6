//! Atomic decompositions of the predual spaces and two-sided bounds on their
//! norms.
//!
//! The norm is an infimum over all representations `h = Σ h_Q`, so it is
//! bracketed. The upper bound is the cheapest decomposition found by a
//! dynamic program over dyadic children. The lower bound is the largest
//! pairing against functions of Morrey norm at most one.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::corpus::{generate_corpus, CorpusSpec, FunctionKind};
use crate::cube::{CubeFamily, DyadicCube, IndexBox};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::morrey::{morrey_norm, weighted_lp_norm, MorreyParams, Prefix};
use crate::muckenhoupt::{check_p, Weight};
use crate::quadrature::{abs_pairing, support_box, Region};
use crate::report::{GridMeta, VerificationReport};
use crate::stats::{argmax, conjugate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredualParams {
    p: f64,
    varrho: f64,
    n: usize,
}

impl PredualParams {
    /// Requires `1 < p < inf` and `-n < ϱ < -n/p`.
    pub fn new(p: f64, varrho: f64, n: usize) -> Result<Self> {
        check_p(p)?;
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidParameter(format!("dimension {n}")));
        }
        let nf = n as f64;
        if !(varrho > -nf && varrho < -nf / p) {
            return Err(Error::InvalidParameter(format!("varrho = {varrho} must lie in ({}, {})", -nf, -nf / p)));
        }
        Ok(Self { p, varrho, n })
    }

    /// The predual of `L^r_p(w)`: exponent `p'` and `ϱ = -n - r`.
    pub fn dual_of(mp: &MorreyParams) -> Result<Self> {
        Self::new(conjugate(mp.p()), -(mp.n() as f64) - mp.r(), mp.n())
    }

    /// The Morrey space this space is a predual of.
    pub fn morrey(&self) -> Result<MorreyParams> {
        MorreyParams::new(conjugate(self.p), -(self.n as f64) - self.varrho, self.n)
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn varrho(&self) -> f64 {
        self.varrho
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// `1/p + ϱ/n`, negative.
    pub fn exponent(&self) -> f64 {
        1.0 / self.p + self.varrho / self.n as f64
    }
}

/// Requires `p_H = p_M'` and `r + ϱ = -n`.
pub fn check_duality(mp: &MorreyParams, pp: &PredualParams) -> Result<()> {
    let ok = mp.n() == pp.n
        && (conjugate(mp.p()) - pp.p).abs() <= 1e-12 * pp.p
        && (mp.r() + pp.varrho + mp.n() as f64).abs() <= 1e-12;
    if ok {
        Ok(())
    } else {
        Err(Error::ParameterMismatch(format!(
            "Morrey (p = {}, r = {}) and predual (p = {}, varrho = {}) are not paired",
            mp.p(),
            mp.r(),
            pp.p,
            pp.varrho
        )))
    }
}

/// One piece of a decomposition: samples on the cells of its cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub cube: DyadicCube,
    pub cells: IndexBox,
    /// Values in the row-major order of `cells`.
    pub values: Vec<f64>,
}

impl Piece {
    pub fn to_grid(&self, d: &Domain) -> GridFunction {
        let mut out = vec![0.0; d.cell_count()];
        for (k, idx) in self.cells.indices(d).into_iter().enumerate() {
            out[idx] = self.values[k];
        }
        GridFunction::new(*d, out).expect("piece values are finite")
    }

    fn hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    domain: Domain,
    params: PredualParams,
    weight: Weight,
    pieces: Vec<Piece>,
}

impl Decomposition {
    /// Validates that every piece vanishes outside its cube.
    pub fn new(domain: Domain, params: PredualParams, weight: Weight, pieces: Vec<(DyadicCube, GridFunction)>) -> Result<Self> {
        domain.check_dim(params.n)?;
        let mut out = Vec::with_capacity(pieces.len());
        for (k, (cube, g)) in pieces.into_iter().enumerate() {
            if g.domain() != &domain {
                return Err(Error::InvalidDomain(format!("piece {k} lives on another grid")));
            }
            let Some(cells) = cube.bounds().index_box(&domain) else {
                if g.is_zero() {
                    continue;
                }
                return Err(Error::SupportViolation { index: k });
            };
            for (idx, v) in g.samples().iter().enumerate() {
                if *v != 0.0 && !cells.contains(domain.unravel(idx)) {
                    return Err(Error::SupportViolation { index: k });
                }
            }
            let values = cells.indices(&domain).into_iter().map(|i| g.samples()[i]).collect();
            out.push(Piece { cube, cells, values });
        }
        Ok(Self { domain, params, weight, pieces: out })
    }

    pub fn empty(domain: Domain, params: PredualParams, weight: Weight) -> Self {
        Self { domain, params, weight, pieces: Vec::new() }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn params(&self) -> &PredualParams {
        &self.params
    }
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }
    pub fn len(&self) -> usize {
        self.pieces.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `Σ_Q h_Q`.
    pub fn reconstruct(&self) -> GridFunction {
        let d = &self.domain;
        let mut out = vec![0.0; d.cell_count()];
        for piece in &self.pieces {
            for (k, idx) in piece.cells.indices(d).into_iter().enumerate() {
                out[idx] += piece.values[k];
            }
        }
        GridFunction::new(*d, out).expect("sums of finite pieces are finite")
    }

    /// Cost of each piece, `w(Q)^{-(1/p + ϱ/n)} (∫ |h_Q|^p w^{1-p})^{1/p}`.
    pub fn piece_costs(&self) -> Result<Vec<f64>> {
        let d = &self.domain;
        let p = self.params.p;
        let wm = self.weight.cell_masses(d)?;
        let vm = self.weight.pow_unchecked(1.0 - p).cell_masses(d)?;
        let e = -self.params.exponent();
        Ok(self
            .pieces
            .iter()
            .map(|piece| {
                let idx = piece.cells.indices(d);
                let lp: f64 = idx.iter().zip(&piece.values).map(|(&i, v)| v.abs().powf(p) * vm[i]).sum();
                if lp == 0.0 {
                    0.0
                } else {
                    piece.cells.sum(d, &wm).powf(e) * lp.powf(1.0 / p)
                }
            })
            .collect())
    }

    pub fn cost(&self) -> Result<f64> {
        Ok(self.piece_costs()?.iter().sum())
    }

    /// Scales every piece by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.values.iter_mut().for_each(|v| *v *= c);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pieces: Vec<_> = self
            .pieces
            .iter()
            .map(|p| json!({ "j": p.cube.j, "m": p.cube.m, "variant": p.cube.variant, "samples_ref": p.hash() }))
            .collect();
        json!({
            "params": self.params,
            "weight": self.weight.label(),
            "grid": GridMeta::of(&self.domain),
            "pieces": pieces,
            "content_hash": self.content_hash(),
        })
    }

    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.reconstruct().content_hash().as_bytes());
        for p in &self.pieces {
            h.update(p.cube.to_string().as_bytes());
            h.update(p.hash().as_bytes());
        }
        hex::encode(h.finalize())
    }
}

pub fn decomposition_cost(d: &Decomposition) -> Result<f64> {
    d.cost()
}

/// Dynamic program over dyadic children with memoized subtree costs.
struct Search<'a> {
    d: &'a Domain,
    j_max: i32,
    pw: Prefix,
    ph: Prefix,
    p: f64,
    e: f64,
    memo: HashMap<(i32, Vec<i64>, u32), (f64, bool)>,
}

impl Search<'_> {
    fn single(&self, b: &IndexBox) -> f64 {
        let hq = self.ph.sum(b).max(0.0);
        if hq == 0.0 {
            0.0
        } else {
            self.pw.sum(b).powf(self.e) * hq.powf(1.0 / self.p)
        }
    }

    fn best(&mut self, cube: &DyadicCube, depth: u32) -> f64 {
        let key = (cube.j, cube.m.clone(), depth);
        if let Some(&(c, _)) = self.memo.get(&key) {
            return c;
        }
        let Some(b) = cube.bounds().index_box(self.d) else {
            self.memo.insert(key, (0.0, false));
            return 0.0;
        };
        let single = self.single(&b);
        let mut result = (single, false);
        if single > 0.0 && depth > 0 && cube.j < self.j_max {
            let split: f64 = cube.children().iter().map(|c| self.best(c, depth - 1)).sum();
            if split < single {
                result = (split, true);
            }
        }
        self.memo.insert(key, result);
        result.0
    }

    fn leaves(&self, cube: &DyadicCube, depth: u32, out: &mut Vec<DyadicCube>) {
        match self.memo.get(&(cube.j, cube.m.clone(), depth)) {
            Some(&(c, true)) if c > 0.0 => {
                for child in cube.children() {
                    self.leaves(&child, depth - 1, out);
                }
            }
            Some(&(c, false)) if c > 0.0 => out.push(cube.clone()),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    pub cost: f64,
    pub decomposition: Decomposition,
}

/// Cheapest decomposition found. Every family cube containing the support is
/// a candidate root; below a root, a cube is split into its dyadic children
/// when that strictly lowers the cost, at most `search_depth` levels deep and
/// never below the family's finest scale.
pub fn predual_norm_upper(h: &GridFunction, pp: &PredualParams, w: &Weight, fam: &CubeFamily, search_depth: u32) -> Result<UpperBound> {
    let d = fam.domain();
    if h.domain() != d {
        return Err(Error::InvalidDomain("function and family live on different grids".into()));
    }
    d.check_dim(pp.n)?;
    let Some(supp) = support_box(h) else {
        return Ok(UpperBound { cost: 0.0, decomposition: Decomposition::empty(*d, *pp, w.clone()) });
    };
    let wm = w.cell_masses(d)?;
    let vm = w.pow_unchecked(1.0 - pp.p).cell_masses(d)?;
    let hv: Vec<f64> = h.samples().iter().zip(&vm).map(|(v, m)| v.abs().powf(pp.p) * m).collect();
    let mut search = Search {
        d,
        j_max: fam.j_max(),
        pw: Prefix::new(d, &wm),
        ph: Prefix::new(d, &hv),
        p: pp.p,
        e: -pp.exponent(),
        memo: HashMap::new(),
    };
    let roots: Vec<&DyadicCube> = fam
        .cubes()
        .iter()
        .zip(fam.boxes())
        .filter(|(_, b)| supp.is_subset_of(b))
        .map(|(c, _)| c)
        .collect();
    if roots.is_empty() {
        return Err(Error::NotCovered);
    }
    let costs: Vec<f64> = roots.iter().map(|r| search.best(r, search_depth)).collect();
    let (i, _) = argmax(&costs.iter().map(|c| -c).collect::<Vec<_>>()).ok_or(Error::NotCovered)?;
    let mut leaves = Vec::new();
    search.leaves(roots[i], search_depth, &mut leaves);
    let pieces = leaves
        .into_iter()
        .map(|c| {
            let cells = c.bounds().index_box(d).expect("leaf meets the grid");
            let values = cells.indices(d).into_iter().map(|k| h.samples()[k]).collect();
            Piece { cube: c, cells, values }
        })
        .collect();
    let decomposition = Decomposition { domain: *d, params: *pp, weight: w.clone(), pieces };
    let cost = decomposition.cost()?;
    Ok(UpperBound { cost, decomposition })
}

/// Functions of Morrey norm one (after normalization) used as test
/// functions for the lower bound.
#[derive(Debug, Clone)]
pub struct DualityCorpus {
    domain: Domain,
    mp: MorreyParams,
    weight: Weight,
    family: CubeFamily,
    /// Cube indicators with their Morrey norms.
    cubes: Vec<(DyadicCube, IndexBox, f64)>,
    functions: Vec<(String, GridFunction, f64)>,
}

impl DualityCorpus {
    pub fn empty(w: &Weight, mp: &MorreyParams, fam: &CubeFamily) -> Self {
        Self { domain: *fam.domain(), mp: *mp, weight: w.clone(), family: fam.clone(), cubes: Vec::new(), functions: Vec::new() }
    }

    /// Indicators of every family cube plus `random` seeded piecewise
    /// constants.
    pub fn standard(w: &Weight, mp: &MorreyParams, fam: &CubeFamily, seed: u64, random: usize) -> Result<Self> {
        let mut c = Self::empty(w, mp, fam);
        c.add_family_indicators()?;
        let spec = CorpusSpec::new(seed, random).with_kinds(&[FunctionKind::PiecewiseConstant]);
        for m in generate_corpus(&spec, fam.domain())? {
            c.add_function(m.label, m.function)?;
        }
        Ok(c)
    }

    pub fn add_family_indicators(&mut self) -> Result<()> {
        let d = self.domain;
        let wm = self.weight.cell_masses(&d)?;
        let pw = Prefix::new(&d, &wm);
        let boxes = self.family.boxes();
        let e = self.mp.exponent();
        let p = self.mp.p();
        let norms: Vec<f64> = boxes
            .par_iter()
            .map(|b| {
                boxes
                    .iter()
                    .filter_map(|q| q.intersect(b).map(|i| pw.sum(q).powf(-e) * pw.sum(&i).powf(1.0 / p)))
                    .fold(0.0, f64::max)
            })
            .collect();
        for ((c, b), n) in self.family.cubes().iter().zip(boxes).zip(norms) {
            self.cubes.push((c.clone(), *b, n));
        }
        Ok(())
    }

    /// Adds `g`, normalized in the Morrey norm; zero functions are skipped.
    pub fn add_function(&mut self, label: impl Into<String>, g: GridFunction) -> Result<()> {
        let n = morrey_norm(&g, &self.weight, &self.mp, &self.family)?.value;
        if n > 0.0 {
            self.functions.push((label.into(), g, n));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cubes.len() + self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn params(&self) -> &MorreyParams {
        &self.mp
    }

    /// Normalized members as grid functions, indicators first.
    pub fn normalized_members(&self) -> Vec<(String, GridFunction)> {
        let d = self.domain;
        let mut out = Vec::with_capacity(self.len());
        for (c, b, n) in &self.cubes {
            let mut s = vec![0.0; d.cell_count()];
            b.for_each(&d, |i| s[i] = 1.0 / n);
            out.push((c.to_string(), GridFunction::new(d, s).expect("finite")));
        }
        for (l, g, n) in &self.functions {
            out.push((l.clone(), g.scale(1.0 / n)));
        }
        out
    }

    /// `max over members of |∫ h g| / ‖g‖`, with the maximizing label.
    pub fn pairing_max(&self, h: &GridFunction, absolute: bool) -> Result<(f64, String)> {
        if self.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let d = self.domain;
        if h.domain() != &d {
            return Err(Error::InvalidDomain("function and corpus live on different grids".into()));
        }
        let vol = d.cell_volume();
        let hv: Vec<f64> = if absolute { h.samples().iter().map(|v| v.abs()).collect() } else { h.samples().to_vec() };
        let ph = Prefix::new(&d, &hv);
        let mut vals: Vec<f64> = self.cubes.par_iter().map(|(_, b, n)| (ph.sum(b) * vol).abs() / n).collect();
        vals.extend(self.functions.iter().map(|(_, g, n)| {
            let s: f64 = hv.iter().zip(g.samples()).map(|(a, b)| if absolute { a * b.abs() } else { a * b }).sum();
            (s * vol).abs() / n
        }));
        let (i, v) = argmax(&vals).ok_or(Error::EmptyCorpus)?;
        let label = if i < self.cubes.len() { self.cubes[i].0.to_string() } else { self.functions[i - self.cubes.len()].0.clone() };
        Ok((v, label))
    }
}

/// `max over the corpus of |∫ h g|` with `‖g‖_{L^r_{p'}(w)} <= 1`.
pub fn predual_norm_lower(h: &GridFunction, pp: &PredualParams, corpus: &DualityCorpus) -> Result<(f64, String)> {
    check_duality(corpus.params(), pp)?;
    corpus.pairing_max(h, false)
}

/// The function attaining equality in Hölder's inequality against `h` for
/// the pairing of `L_p(w^{1-p})` with `L_{p'}(w)`, restricted to `cells`.
pub fn holder_extremal(h: &GridFunction, w: &Weight, pp: &PredualParams, cells: Option<&IndexBox>) -> Result<GridFunction> {
    let d = h.domain();
    let p = pp.p;
    let q = conjugate(p);
    let wm = w.cell_masses(d)?;
    let vm = w.pow_unchecked(1.0 - p).cell_masses(d)?;
    let mut out = vec![0.0; d.cell_count()];
    let mut fill = |i: usize| {
        let v = h.samples()[i];
        if v != 0.0 {
            out[i] = v.signum() * (v.abs().powf(p) * vm[i] / wm[i]).powf(1.0 / q);
        }
    };
    match cells {
        Some(b) => b.for_each(d, fill),
        None => (0..d.cell_count()).for_each(&mut fill),
    }
    GridFunction::new(*d, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredualNormBracket {
    pub upper: f64,
    pub lower: f64,
    pub witness_upper: Decomposition,
    /// Label of the pairing function attaining the lower bound.
    pub witness_lower: String,
}

impl PredualNormBracket {
    pub fn ratio(&self) -> f64 {
        if self.upper == 0.0 && self.lower == 0.0 { 1.0 } else { self.upper / self.lower }
    }
}

/// Pieces whose Hölder extremals are tried, largest cost first.
const EXTREMAL_PIECES: usize = 64;

/// Upper and lower bound together. The lower bound also tries the Hölder
/// extremals of `h` and of the most expensive pieces of the upper witness.
pub fn predual_bracket(
    h: &GridFunction,
    pp: &PredualParams,
    w: &Weight,
    fam: &CubeFamily,
    search_depth: u32,
    corpus: &DualityCorpus,
) -> Result<PredualNormBracket> {
    check_duality(corpus.params(), pp)?;
    let up = predual_norm_upper(h, pp, w, fam, search_depth)?;
    if up.cost == 0.0 {
        return Ok(PredualNormBracket { upper: 0.0, lower: 0.0, witness_upper: up.decomposition, witness_lower: String::new() });
    }
    let (mut lower, mut label) = corpus.pairing_max(h, false)?;
    let mp = corpus.params();
    let costs = up.decomposition.piece_costs()?;
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[b].total_cmp(&costs[a]).then(a.cmp(&b)));
    let mut candidates: Vec<(String, Option<IndexBox>)> = vec![("extremal:h".into(), None)];
    for &k in order.iter().take(EXTREMAL_PIECES) {
        let piece = &up.decomposition.pieces()[k];
        candidates.push((format!("extremal:{}", piece.cube), Some(piece.cells)));
    }
    let vol = fam.domain().cell_volume();
    let found: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|(_, cells)| {
            let g = holder_extremal(h, w, pp, cells.as_ref())?;
            let n = morrey_norm(&g, w, mp, fam)?.value;
            if n == 0.0 {
                return Ok(0.0);
            }
            let s: f64 = h.samples().iter().zip(g.samples()).map(|(a, b)| a * b).sum();
            Ok((s * vol).abs() / n)
        })
        .collect();
    for ((l, _), v) in candidates.iter().zip(found) {
        let v = v?;
        if v > lower {
            lower = v;
            label = l.clone();
        }
    }
    if lower > up.cost * (1.0 + 1e-6) {
        return Err(Error::Inconsistency(format!("predual lower bound {lower} exceeds upper bound {}", up.cost)));
    }
    Ok(PredualNormBracket { upper: up.cost, lower, witness_upper: up.decomposition, witness_lower: label })
}

/// `∫ |g h| <= ‖g‖_{L^r_p(w)} · upper(h)`.
pub fn holder_pairing_check(
    g: &GridFunction,
    h: &GridFunction,
    mp: &MorreyParams,
    pp: &PredualParams,
    w: &Weight,
    fam: &CubeFamily,
    search_depth: u32,
) -> Result<VerificationReport> {
    check_duality(mp, pp)?;
    let lhs = abs_pairing(g, h);
    let mg = morrey_norm(g, w, mp, fam)?;
    let up = predual_norm_upper(h, pp, w, fam, search_depth)?;
    let rhs = mg.value * up.cost;
    Ok(VerificationReport::new("holder_pairing", "Hölder-type pairing of Morrey and predual norms", GridMeta::of(fam.domain()).with_family(fam))
        .sides(lhs, rhs)
        .constant(if rhs > 0.0 { lhs / rhs } else { 0.0 })
        .pass(lhs <= rhs * (1.0 + 1e-9))
        .witness(mg.attained.to_string())
        .witness(g.content_hash())
        .witness(up.decomposition.content_hash())
        .detail("slack", rhs - lhs))
}

/// Lattice property: for `|f| <= |g|`, `lower(f) <= upper(g)` and the
/// brackets of `f` and `|f|` agree.
pub fn lattice_check(
    f: &GridFunction,
    g: &GridFunction,
    pp: &PredualParams,
    w: &Weight,
    fam: &CubeFamily,
    search_depth: u32,
    corpus: &DualityCorpus,
) -> Result<VerificationReport> {
    if let Some(i) = f.samples().iter().zip(g.samples()).position(|(a, b)| a.abs() > b.abs()) {
        return Err(Error::Domination(i));
    }
    let bf = predual_bracket(f, pp, w, fam, search_depth, corpus)?;
    let bg = predual_bracket(g, pp, w, fam, search_depth, corpus)?;
    let babs = predual_bracket(&f.abs(), pp, w, fam, search_depth, corpus)?;
    let c = if bg.upper > 0.0 { bf.lower / bg.upper } else { 0.0 };
    let abs_ratio = if bf.upper > 0.0 { babs.upper / bf.upper } else { 1.0 };
    Ok(VerificationReport::new("lattice", "lattice property of the predual norm", GridMeta::of(fam.domain()).with_family(fam))
        .sides(bf.lower, bg.upper)
        .constant(c)
        .pass(bf.lower <= bg.upper * (1.0 + 1e-9) && bf.upper <= bg.upper * (1.0 + 1e-9))
        .witness(f.content_hash())
        .witness(g.content_hash())
        .detail("upper_f", bf.upper)
        .detail("lower_g", bg.lower)
        .detail("upper_abs_f", babs.upper)
        .detail("lower_abs_f", babs.lower)
        .detail("abs_upper_ratio", abs_ratio))
}

/// Lower estimate of `sup {∫|f g| : ‖g‖_{L^r_p(w)} <= 1}` over a corpus.
pub fn associated_norm_morrey(f: &GridFunction, w: &Weight, mp: &MorreyParams, fam: &CubeFamily, corpus: &[GridFunction]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut c = DualityCorpus::empty(w, mp, fam);
    for (k, g) in corpus.iter().enumerate() {
        c.add_function(k.to_string(), g.clone())?;
    }
    Ok(c.pairing_max(f, true)?.0)
}

/// Lower estimate of `sup {∫|f g| : ‖g‖_{H^ϱ L_p(w)} <= 1}`, normalizing
/// each corpus member by its upper bound.
pub fn associated_norm_predual(
    f: &GridFunction,
    w: &Weight,
    pp: &PredualParams,
    fam: &CubeFamily,
    search_depth: u32,
    corpus: &[GridFunction],
) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vals: Vec<Result<f64>> = corpus
        .par_iter()
        .map(|g| {
            let up = predual_norm_upper(g, pp, w, fam, search_depth)?.cost;
            Ok(if up > 0.0 { abs_pairing(f, g) / up } else { 0.0 })
        })
        .collect();
    let mut best = 0.0f64;
    for v in vals {
        best = best.max(v?);
    }
    Ok(best)
}

/// Weighted `L_p(w^{1-p})` norm, the endpoint of the predual scale.
pub fn predual_endpoint_norm(h: &GridFunction, w: &Weight, p: f64) -> Result<f64> {
    weighted_lp_norm(h, &w.pow_unchecked(1.0 - p), p, &Region::Whole)
}

/// Seeded random piecewise-constant functions supported in one cube.
pub fn random_in_cube(cube: &DyadicCube, d: &Domain, seed: u64, count: usize) -> Result<Vec<GridFunction>> {
    use rand::Rng;
    let b = cube.bounds().index_box(d).ok_or(Error::EmptyIntersection)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = b.indices(d);
    (0..count)
        .map(|_| {
            let mut s = vec![0.0; d.cell_count()];
            // constant on blocks of 2^k cells so the function is resolved
            let k = rng.gen_range(0..4u32);
            let mut blocks: HashMap<(usize, usize), f64> = HashMap::new();
            for &i in &idx {
                let ij = d.unravel(i);
                let key = ((ij[0] - b.lo[0]) >> k, (ij[1] - b.lo[1]) >> k);
                s[i] = *blocks.entry(key).or_insert_with(|| rng.gen_range(-1.0..=1.0));
            }
            GridFunction::new(*d, s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{enumerate_cubes, finest_scale};
    use crate::quadrature::indicator;

    fn setup(n_pts: usize) -> (Domain, CubeFamily) {
        let d = Domain::new(1, 8.0, n_pts).unwrap();
        let fam = enumerate_cubes(&d, -2, finest_scale(&d).min(6)).unwrap();
        (d, fam)
    }

    #[test]
    fn params_and_pairing() {
        let mp = MorreyParams::new(2.0, -0.25, 1).unwrap();
        let pp = PredualParams::dual_of(&mp).unwrap();
        assert_eq!(pp.p(), 2.0);
        assert!((pp.varrho() + 0.75).abs() < 1e-15);
        assert!(check_duality(&mp, &pp).is_ok());
        assert_eq!(pp.morrey().unwrap(), mp);
        assert!((mp.exponent() + pp.exponent()).abs() < 1e-15);
        assert!(PredualParams::new(2.0, -0.5, 1).is_err());
        assert!(PredualParams::new(2.0, -1.0, 1).is_err());
        let other = PredualParams::new(2.0, -0.6, 1).unwrap();
        assert!(matches!(check_duality(&mp, &other), Err(Error::ParameterMismatch(_))));
        assert!(PredualParams::dual_of(&MorreyParams::lp_endpoint(2.0, 1).unwrap()).is_err());
    }

    #[test]
    fn single_piece_cost_law() {
        let (d, _) = setup(4096);
        let pp = PredualParams::new(2.0, -0.6, 1).unwrap();
        let q0 = DyadicCube::closed(1, &[1]);
        let h = indicator(d, &Region::Cube(q0.clone())).unwrap();
        let dec = Decomposition::new(d, pp, Weight::lebesgue(1), vec![(q0.clone(), h.clone())]).unwrap();
        let oracle = q0.volume().powf(0.6);
        assert!((dec.cost().unwrap() / oracle - 1.0).abs() < 0.03);
        assert_eq!(dec.reconstruct(), h);
        let kids: Vec<_> = q0.children().into_iter().map(|c| {
            let r = crate::quadrature::restrict(&h, &c).unwrap();
            (c, r)
        }).collect();
        let split = Decomposition::new(d, pp, Weight::lebesgue(1), kids).unwrap();
        assert_eq!(split.reconstruct(), h);
        assert!(split.cost().unwrap() >= dec.cost().unwrap());
        assert_eq!(Decomposition::empty(d, pp, Weight::lebesgue(1)).cost().unwrap(), 0.0);
    }

    #[test]
    fn support_violation_is_rejected() {
        let (d, _) = setup(256);
        let pp = PredualParams::new(2.0, -0.6, 1).unwrap();
        let h = indicator(d, &Region::Cube(DyadicCube::closed(0, &[0]))).unwrap();
        let r = Decomposition::new(d, pp, Weight::lebesgue(1), vec![(DyadicCube::closed(1, &[1]), h)]);
        assert_eq!(r.unwrap_err(), Error::SupportViolation { index: 0 });
    }

    #[test]
    fn upper_bound_examples() {
        let (d, fam) = setup(4096);
        let pp = PredualParams::new(2.0, -0.6, 1).unwrap();
        let one = Weight::lebesgue(1);
        let q0 = DyadicCube::closed(2, &[1]);
        let h = indicator(d, &Region::Cube(q0.clone())).unwrap();
        let up = predual_norm_upper(&h, &pp, &one, &fam, 8).unwrap();
        assert!(up.cost <= q0.volume().powf(0.6) * 1.03);
        assert_eq!(up.decomposition.reconstruct(), h);
        let z = GridFunction::zeros(d);
        assert_eq!(predual_norm_upper(&z, &pp, &one, &fam, 8).unwrap().cost, 0.0);

        // two equal cubes five sides apart; splitting pays off once
        // (S/s)^{-(1/p + ϱ/n) n} > 2^{1/p'}
        let pp = PredualParams::new(2.0, -0.9, 1).unwrap();
        let q1 = DyadicCube::closed(3, &[-3]);
        let q2 = DyadicCube::closed(3, &[9]);
        let h2 = indicator(d, &Region::Cube(q1.clone())).unwrap().add(&indicator(d, &Region::Cube(q2)).unwrap()).unwrap();
        let up2 = predual_norm_upper(&h2, &pp, &one, &fam, 12).unwrap();
        let single_piece = q1.volume().powf(0.9);
        assert!(up2.cost <= 2.0 * single_piece * 1.03, "{} vs {}", up2.cost, single_piece);
        assert_eq!(up2.decomposition.len(), 2);
        let cover = DyadicCube::closed(-1, &[0]);
        let one_piece = Decomposition::new(d, pp, one.clone(), vec![(cover, h2.clone())]).unwrap();
        assert!(one_piece.cost().unwrap() > up2.cost);
    }

    #[test]
    fn upper_is_monotone_in_depth() {
        let (d, fam) = setup(1024);
        let pp = PredualParams::new(1.5, -0.8, 1).unwrap();
        let w = Weight::power(1, 0.2).unwrap();
        let h = GridFunction::from_fn(d, |x| if x[0].abs() < 2.0 { (3.0 * x[0]).sin() } else { 0.0 }).unwrap();
        let mut last = f64::INFINITY;
        for depth in 0..8 {
            let c = predual_norm_upper(&h, &pp, &w, &fam, depth).unwrap().cost;
            assert!(c <= last * (1.0 + 1e-12));
            last = c;
        }
    }

    #[test]
    fn indicator_bracket_is_tight() {
        let (d, fam) = setup(1024);
        let mp = MorreyParams::new(2.0, -0.4, 1).unwrap();
        let pp = PredualParams::dual_of(&mp).unwrap();
        let one = Weight::lebesgue(1);
        let corpus = DualityCorpus::standard(&one, &mp, &fam, 3, 10).unwrap();
        let q0 = DyadicCube::closed(1, &[1]);
        let h = indicator(d, &Region::Cube(q0.clone())).unwrap();
        let (lo, _) = predual_norm_lower(&h, &pp, &corpus).unwrap();
        assert!((lo / q0.volume().powf(-pp.varrho()) - 1.0).abs() < 0.05);
        let b = predual_bracket(&h, &pp, &one, &fam, 10, &corpus).unwrap();
        assert!(b.lower <= b.upper * (1.0 + 1e-9));
        assert!(b.ratio() < 1.05);
        let z = GridFunction::zeros(d);
        assert_eq!(predual_norm_lower(&z, &pp, &corpus).unwrap().0, 0.0);
    }

    #[test]
    fn holder_pairing_equality_case() {
        let (d, fam) = setup(2048);
        let mp = MorreyParams::new(2.0, -0.3, 1).unwrap();
        let pp = PredualParams::dual_of(&mp).unwrap();
        let one = Weight::lebesgue(1);
        let q0 = DyadicCube::closed(1, &[-1]);
        let chi = indicator(d, &Region::Cube(q0.clone())).unwrap();
        let r = holder_pairing_check(&chi, &chi, &mp, &pp, &one, &fam, 8).unwrap();
        assert!(r.pass);
        assert!((r.left / q0.volume() - 1.0).abs() < 0.01);
        assert!((r.right / r.left - 1.0).abs() < 0.03);
        let z = GridFunction::zeros(d);
        let r = holder_pairing_check(&z, &chi, &mp, &pp, &one, &fam, 8).unwrap();
        assert!(r.pass && r.left == 0.0 && r.right == 0.0);
    }

    #[test]
    fn lattice_examples() {
        let (d, fam) = setup(1024);
        let mp = MorreyParams::new(2.0, -0.4, 1).unwrap();
        let pp = PredualParams::dual_of(&mp).unwrap();
        let one = Weight::lebesgue(1);
        let corpus = DualityCorpus::standard(&one, &mp, &fam, 1, 4).unwrap();
        let q0 = DyadicCube::closed(0, &[0]);
        let g = indicator(d, &Region::Cube(q0.clone())).unwrap();
        let r = lattice_check(&g, &g, &pp, &one, &fam, 8, &corpus).unwrap();
        assert!(r.pass);
        let half = g.scale(0.5);
        let uf = predual_norm_upper(&half, &pp, &one, &fam, 8).unwrap().cost;
        let ug = predual_norm_upper(&g, &pp, &one, &fam, 8).unwrap().cost;
        assert!((uf / ug - 0.5).abs() < 1e-12);
        let f = indicator(d, &Region::Cube(DyadicCube::closed(1, &[1]))).unwrap();
        let r = lattice_check(&f, &g, &pp, &one, &fam, 8, &corpus).unwrap();
        assert!(r.pass && r.left < r.right);
        assert!(matches!(lattice_check(&g, &f, &pp, &one, &fam, 8, &corpus), Err(Error::Domination(_))));
    }

    #[test]
    fn associated_norms_are_homogeneous() {
        let (d, fam) = setup(512);
        let mp = MorreyParams::new(2.0, -0.4, 1).unwrap();
        let pp = PredualParams::dual_of(&mp).unwrap();
        let one = Weight::lebesgue(1);
        let corpus = crate::corpus::corpus_functions(&CorpusSpec::new(2, 8), &d).unwrap();
        let f = indicator(d, &Region::Cube(DyadicCube::closed(1, &[0]))).unwrap();
        let a = associated_norm_morrey(&f, &one, &mp, &fam, &corpus).unwrap();
        let b = associated_norm_morrey(&f.scale(-3.0), &one, &mp, &fam, &corpus).unwrap();
        assert!((b / a - 3.0).abs() < 1e-12);
        let c = associated_norm_predual(&f, &one, &pp, &fam, 8, &corpus).unwrap();
        let e = associated_norm_predual(&f.scale(2.0), &one, &pp, &fam, 8, &corpus).unwrap();
        assert!((e / c - 2.0).abs() < 1e-12);
        let z = GridFunction::zeros(d);
        assert_eq!(associated_norm_morrey(&z, &one, &mp, &fam, &corpus).unwrap(), 0.0);
    }

    #[test]
    fn decomposition_json_has_hash() {
        let (d, fam) = setup(256);
        let pp = PredualParams::new(2.0, -0.6, 1).unwrap();
        let h = indicator(d, &Region::Cube(DyadicCube::closed(1, &[1]))).unwrap();
        let up = predual_norm_upper(&h, &pp, &Weight::lebesgue(1), &fam, 4).unwrap();
        let v = up.decomposition.to_json();
        assert_eq!(v["content_hash"].as_str().unwrap().len(), 64);
        assert_eq!(v["pieces"].as_array().unwrap().len(), up.decomposition.len());
    }
}
