//! Rubio de Francia iteration, empirical operator norms and the
//! extrapolation harness.
//!
//! A [`PairFamily`] is a list of nonnegative pairs `(g, f)`; nothing about
//! it refers to an operator, so pairs from any source can be checked.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::corpus::{corpus_functions, CorpusSpec};
use crate::cube::{enumerate_cubes, finest_scale, CubeFamily, DyadicCube};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::morrey::{morrey_norm, weighted_lp_norm, MorreyParams};
use crate::muckenhoupt::Weight;
use crate::operators::{apply, maximal, Operator, OperatorContext};
use crate::predual::{holder_extremal, predual_norm_lower, predual_norm_upper, DualityCorpus, PredualParams};
use crate::quadrature::Region;
use crate::report::{GridMeta, VerificationReport};
use crate::stats::{argmax, rel_change};

/// Default number of maximal iterations.
pub const RDF_DEFAULT_K: usize = 12;
/// Allowed relative change of a constant under one refinement.
pub const STABILITY_TOL: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct PairFamily {
    pairs: Vec<(GridFunction, GridFunction)>,
    provenance: String,
}

impl PairFamily {
    /// Pairs are `(g, f)`; every sample must be nonnegative.
    pub fn new(pairs: Vec<(GridFunction, GridFunction)>, provenance: impl Into<String>) -> Result<Self> {
        if let Some((g0, _)) = pairs.first() {
            let d = g0.domain();
            for (i, (g, f)) in pairs.iter().enumerate() {
                if g.domain() != d || f.domain() != d {
                    return Err(Error::InvalidDomain(format!("pair {i} lives on another grid")));
                }
                if g.min() < 0.0 || f.min() < 0.0 {
                    return Err(Error::NegativePair(i));
                }
            }
        }
        Ok(Self { pairs, provenance: provenance.into() })
    }

    /// `(|Tφ|, |φ|)` for `φ` in the corpus.
    pub fn from_operator(op: &Operator, ctx: &OperatorContext, corpus: &[GridFunction]) -> Result<Self> {
        let pairs = corpus
            .par_iter()
            .map(|phi| Ok((apply(op, phi, ctx)?.abs(), phi.abs())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs, format!("(|Tφ|, |φ|) for φ in corpus, T = {op}"))
    }

    /// `(|φ|, |φ|)`.
    pub fn identity(corpus: &[GridFunction]) -> Result<Self> {
        Self::new(corpus.iter().map(|f| (f.abs(), f.abs())).collect(), "(|φ|, |φ|) for φ in corpus")
    }

    pub fn pairs(&self) -> &[(GridFunction, GridFunction)] {
        &self.pairs
    }
    pub fn provenance(&self) -> &str {
        &self.provenance
    }
    pub fn len(&self) -> usize {
        self.pairs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RdFConfig {
    k: usize,
    m_norm: f64,
    family: CubeFamily,
}

impl RdFConfig {
    pub fn new(k: usize, m_norm: f64, family: CubeFamily) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("Rubio de Francia depth K must be at least 1".into()));
        }
        if !(m_norm >= 1.0) || !m_norm.is_finite() {
            return Err(Error::InvalidParameter(format!("maximal operator norm {m_norm} must be finite and >= 1")));
        }
        Ok(Self { k, m_norm, family })
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn m_norm(&self) -> f64 {
        self.m_norm
    }
    pub fn family(&self) -> &CubeFamily {
        &self.family
    }
}

/// `M^k|h|` for `k = 0, ..., K + 1`.
fn iterates(h: &GridFunction, cfg: &RdFConfig) -> Result<Vec<GridFunction>> {
    let mut out = vec![h.abs()];
    for _ in 0..=cfg.k {
        let next = maximal(out.last().expect("nonempty"), &cfg.family)?;
        out.push(next);
    }
    Ok(out)
}

fn rdf_sum(terms: &[GridFunction], cfg: &RdFConfig) -> GridFunction {
    let d = *terms[0].domain();
    let mut acc = vec![0.0; d.cell_count()];
    for (k, t) in terms.iter().take(cfg.k + 1).enumerate() {
        let c = (2.0 * cfg.m_norm).powi(-(k as i32));
        for (a, v) in acc.iter_mut().zip(t.samples()) {
            *a += c * v;
        }
    }
    GridFunction::new(d, acc).expect("finite")
}

/// `R|h| = Σ_{k=0}^{K} M^k|h| / (2 M_norm)^k`.
pub fn rubio_de_francia(h: &GridFunction, cfg: &RdFConfig) -> Result<GridFunction> {
    Ok(rdf_sum(&iterates(h, cfg)?, cfg))
}

/// Measured sides of the three properties of `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdfProperties {
    /// `max (|h| - R|h|)_+`.
    pub i_violation: f64,
    pub ii_lhs: f64,
    pub ii_rhs: f64,
    /// `(‖R|h|‖ / (2‖h‖) - 1)_+`.
    pub ii_slack: f64,
    /// `(1/2)^{K+1} ‖M^{K+1}|h|‖`.
    pub ii_tail: f64,
    /// `max (M(R|h|) - 2 M_norm R|h| - tail)_+`, pointwise tail
    /// `M^{K+1}|h| / (2 M_norm)^K`.
    pub iii_violation: f64,
    /// The violation relative to the right side at the worst cell.
    pub iii_relative: f64,
    /// `(1/2)^K max M^{K+1}|h|`.
    pub iii_tail_bound: f64,
    /// Largest pointwise tail relative to the right side.
    pub iii_tail_relative: f64,
}

pub fn rdf_properties(h: &GridFunction, cfg: &RdFConfig, norm: impl Fn(&GridFunction) -> Result<f64>) -> Result<RdfProperties> {
    let terms = iterates(h, cfg)?;
    let r = rdf_sum(&terms, cfg);
    let habs = &terms[0];
    let last = &terms[cfg.k + 1];
    let i_violation = habs.samples().iter().zip(r.samples()).map(|(a, b)| (a - b).max(0.0)).fold(0.0, f64::max);
    let hn = norm(habs)?;
    let ii_lhs = norm(&r)?;
    let ii_rhs = 2.0 * hn;
    let ii_slack = if ii_rhs > 0.0 { (ii_lhs / ii_rhs - 1.0).max(0.0) } else { 0.0 };
    let ii_tail = 0.5f64.powi(cfg.k as i32 + 1) * norm(last)?;
    let mr = maximal(&r, &cfg.family)?;
    let scale = (2.0 * cfg.m_norm).powi(-(cfg.k as i32));
    let mut iii_violation = 0.0f64;
    let mut iii_relative = 0.0f64;
    let mut iii_tail_relative = 0.0f64;
    for i in 0..r.samples().len() {
        let tail = last.samples()[i] * scale;
        let rhs = 2.0 * cfg.m_norm * r.samples()[i] + tail;
        let v = (mr.samples()[i] - rhs).max(0.0);
        iii_violation = iii_violation.max(v);
        if rhs > 0.0 {
            iii_relative = iii_relative.max(v / rhs);
            iii_tail_relative = iii_tail_relative.max(tail / rhs);
        }
    }
    let iii_tail_bound = 0.5f64.powi(cfg.k as i32) * last.max_abs();
    Ok(RdfProperties { i_violation, ii_lhs, ii_rhs, ii_slack, ii_tail, iii_violation, iii_relative, iii_tail_bound, iii_tail_relative })
}

/// Norm in which an operator norm is estimated.
#[derive(Debug, Clone)]
pub enum NormSpace {
    WeightedLp { p: f64, weight: Weight },
    Morrey { params: MorreyParams, weight: Weight, family: CubeFamily },
    /// Upper bounds from the decomposition search, lower bounds from the
    /// duality corpus together with Hölder extremals.
    Predual { params: PredualParams, weight: Weight, family: CubeFamily, depth: u32, corpus: DualityCorpus },
}

impl NormSpace {
    /// The norm, or for the predual the certified `(lower, upper)` pair
    /// collapsed to its upper end.
    pub fn norm(&self, f: &GridFunction) -> Result<f64> {
        Ok(self.bracket(f)?.1)
    }

    /// `(lower, upper)`; equal for the directly computable norms.
    pub fn bracket(&self, f: &GridFunction) -> Result<(f64, f64)> {
        match self {
            NormSpace::WeightedLp { p, weight } => {
                let v = weighted_lp_norm(f, weight, *p, &Region::Whole)?;
                Ok((v, v))
            }
            NormSpace::Morrey { params, weight, family } => {
                let v = morrey_norm(f, weight, params, family)?.value;
                Ok((v, v))
            }
            NormSpace::Predual { params, weight, family, depth, corpus } => {
                let up = predual_norm_upper(f, params, weight, family, *depth)?.cost;
                let lo = predual_lower(f, params, weight, family, corpus)?;
                Ok((lo.min(up), up))
            }
        }
    }
}

/// Corpus lower bound improved by the Hölder extremal of `h` itself.
pub fn predual_lower(h: &GridFunction, pp: &PredualParams, w: &Weight, fam: &CubeFamily, corpus: &DualityCorpus) -> Result<f64> {
    if h.is_zero() {
        return Ok(0.0);
    }
    let (lo, _) = predual_norm_lower(h, pp, corpus)?;
    let g = holder_extremal(h, w, pp, None)?;
    let n = morrey_norm(&g, w, corpus.params(), fam)?.value;
    let s: f64 = h.samples().iter().zip(g.samples()).map(|(a, b)| a * b).sum::<f64>() * h.domain().cell_volume();
    Ok(if n > 0.0 { lo.max(s.abs() / n) } else { lo })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    /// `max ‖Tf‖ / ‖f‖`; for the predual, `max lower(Tf) / upper(f)`.
    pub value: f64,
    /// For the predual, `max upper(Tf) / lower(f)`; otherwise `value`.
    pub upper: f64,
    /// Corpus index attaining `value`.
    pub attained: usize,
}

pub fn estimate_operator_norm(op: &Operator, ctx: &OperatorContext, space: &NormSpace, corpus: &[GridFunction]) -> Result<NormEstimate> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let rows: Vec<(f64, f64)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            if f.is_zero() {
                return Err(Error::InvalidParameter(format!("corpus member {i} is zero")));
            }
            let (flo, fup) = space.bracket(f)?;
            if fup == 0.0 {
                return Err(Error::DegenerateNorm(i));
            }
            let (tlo, tup) = space.bracket(&apply(op, f, ctx)?)?;
            Ok((tlo / fup, if flo > 0.0 { tup / flo } else { f64::INFINITY }))
        })
        .collect::<Result<_>>()?;
    let lows: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (attained, value) = argmax(&lows).expect("nonempty");
    let upper = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(NormEstimate { value, upper, attained })
}

/// One Morrey space of the conclusion.
#[derive(Debug, Clone)]
pub struct ExtrapolationTarget {
    pub params: MorreyParams,
    pub weight: Weight,
}

impl ExtrapolationTarget {
    pub fn label(&self) -> String {
        format!("p={},r={},w={}", self.params.p(), self.params.r(), self.weight.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationMeasurement {
    /// `(weight label, c₁)` per distinct target weight.
    pub c1: Vec<(String, f64)>,
    /// `c₂` per target.
    pub c2: Vec<f64>,
    /// Pair index attaining each `c₂`.
    pub attained: Vec<usize>,
}

fn ratio_max(pairs: &[(GridFunction, GridFunction)], norm: impl Fn(&GridFunction) -> Result<f64> + Sync) -> Result<(f64, usize)> {
    let vals: Vec<f64> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (g, f))| {
            if f.is_zero() {
                return if g.is_zero() { Ok(0.0) } else { Err(Error::UnverifiablePair(i)) };
            }
            let nf = norm(f)?;
            if nf == 0.0 {
                return Err(Error::DegenerateNorm(i));
            }
            Ok(norm(g)? / nf)
        })
        .collect::<Result<_>>()?;
    let (i, v) = argmax(&vals).ok_or(Error::EmptyCorpus)?;
    Ok((v, i))
}

/// `c₁` in `L_{p1}(w)` for each distinct target weight and `c₂` in each
/// target Morrey space, over the pairs of `family`.
pub fn measure_extrapolation(family: &PairFamily, p1: f64, targets: &[ExtrapolationTarget], fam: &CubeFamily) -> Result<ExtrapolationMeasurement> {
    if family.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut weights: BTreeMap<String, &Weight> = BTreeMap::new();
    for t in targets {
        weights.entry(t.weight.label()).or_insert(&t.weight);
    }
    let mut c1 = Vec::new();
    for (label, w) in weights {
        let (v, _) = ratio_max(family.pairs(), |f| weighted_lp_norm(f, w, p1, &Region::Whole))?;
        c1.push((label, v));
    }
    let mut c2 = Vec::new();
    let mut attained = Vec::new();
    for t in targets {
        let (v, i) = ratio_max(family.pairs(), |f| Ok(morrey_norm(f, &t.weight, &t.params, fam)?.value))?;
        c2.push(v);
        attained.push(i);
    }
    Ok(ExtrapolationMeasurement { c1, c2, attained })
}

/// Measures on `d` and on `d.refined()` with the same cube scales, using
/// `build` to produce the pairs on each grid. Passes when every `c₂` is
/// finite and moves by less than 25%.
pub fn extrapolation_check(
    build: impl Fn(&Domain) -> Result<PairFamily>,
    d: &Domain,
    p1: f64,
    targets: &[ExtrapolationTarget],
    j_min: i32,
) -> Result<VerificationReport> {
    let j_max = finest_scale(d);
    let coarse_fam = enumerate_cubes(d, j_min, j_max)?;
    let fine = d.refined();
    let fine_fam = enumerate_cubes(&fine, j_min, j_max)?;
    let fc = build(d)?;
    let ff = build(&fine)?;
    let a = measure_extrapolation(&fc, p1, targets, &coarse_fam)?;
    let b = measure_extrapolation(&ff, p1, targets, &fine_fam)?;
    let mut rep = VerificationReport::new("extrapolation", "weighted L_p bounds for a pair family imply weighted Morrey bounds", GridMeta::of(d).with_family(&coarse_fam))
        .note(format!("pairs: {}", fc.provenance()))
        .note(format!("p1 = {p1}"));
    let mut pass = true;
    let mut worst_change = 0.0f64;
    for ((label, v), (_, vf)) in a.c1.iter().zip(&b.c1) {
        pass &= v.is_finite();
        rep = rep.detail(format!("c1[{label}]"), *v).detail(format!("c1_refined[{label}]"), *vf);
    }
    for (k, t) in targets.iter().enumerate() {
        let label = t.label();
        let change = rel_change(a.c2[k], b.c2[k]);
        worst_change = worst_change.max(change);
        pass &= a.c2[k].is_finite() && b.c2[k].is_finite() && change < STABILITY_TOL;
        let c1 = a.c1.iter().find(|(l, _)| *l == t.weight.label()).map(|x| x.1).unwrap_or(f64::NAN);
        rep = rep
            .detail(format!("c2[{label}]"), a.c2[k])
            .detail(format!("c2_refined[{label}]"), b.c2[k])
            .detail(format!("c2_change[{label}]"), change)
            .detail(format!("c2_over_c1[{label}]"), a.c2[k] / c1)
            .witness(format!("{label}:{}", fc.pairs()[a.attained[k]].1.content_hash()));
    }
    let max_c2 = a.c2.iter().cloned().fold(0.0, f64::max);
    let max_c1 = a.c1.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(rep.sides(max_c2, max_c1).constant(worst_change).pass(pass))
}

/// Sup and inf of `|Th|` over one annulus `2^{l+1}Q0 \ 2^l Q0`, scaled by
/// `|2^l Q0| / ∫|h|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusValue {
    pub l: i32,
    pub c_sup: f64,
    pub c_inf: f64,
}

/// Annular size constants of `T χ_{Q0}` for `l` in `levels`; annuli that
/// leave the domain are skipped.
pub fn annular_decay(op: &Operator, ctx: &OperatorContext, q0: &DyadicCube, levels: &[i32]) -> Result<Vec<AnnulusValue>> {
    let d = *ctx.domain();
    let mut s = vec![0.0; d.cell_count()];
    let cells = q0.bounds().index_box(&d).ok_or(Error::EmptyIntersection)?;
    cells.for_each(&d, |i| s[i] = 1.0);
    let h = GridFunction::new(d, s)?;
    let mass = cells.count() as f64 * d.cell_volume();
    let th = apply(op, &h, ctx)?;
    let (center, side) = q0.geometry();
    let mut out = Vec::new();
    for &l in levels {
        let (inner, outer) = (side * 2f64.powi(l) / 2.0, side * 2f64.powi(l + 1) / 2.0);
        if center.iter().any(|c| c - outer < -d.half_width() || c + outer > d.half_width()) {
            continue;
        }
        let mut sup = 0.0f64;
        let mut inf = f64::INFINITY;
        for i in 0..d.cell_count() {
            let x = d.cell_center(i);
            let t = (0..d.n()).map(|a| (x[a] - center[a]).abs()).fold(0.0, f64::max);
            if t > inner && t <= outer {
                let v = th.samples()[i].abs();
                sup = sup.max(v);
                inf = inf.min(v);
            }
        }
        let vol = (side * 2f64.powi(l)).powi(d.n() as i32);
        out.push(AnnulusValue { l, c_sup: sup * vol / mass, c_inf: inf * vol / mass });
    }
    Ok(out)
}

/// Largest `lower(Th) / upper(h)` over the corpus.
fn predual_ratio(op: &Operator, pp: &PredualParams, w: &Weight, d: &Domain, spec: &CorpusSpec, fam: &CubeFamily, depth: u32) -> Result<(f64, usize)> {
    let mut ctx = OperatorContext::new(d)?;
    ctx.family = fam.clone();
    let corpus = DualityCorpus::standard(w, &pp.morrey()?, fam, spec.seed, 10)?;
    let hs = corpus_functions(spec, d)?;
    let vals: Vec<f64> = hs
        .par_iter()
        .map(|h| {
            let up = predual_norm_upper(h, pp, w, fam, depth)?.cost;
            if up == 0.0 {
                return Ok(0.0);
            }
            Ok(predual_lower(&apply(op, h, &ctx)?, pp, w, fam, &corpus)? / up)
        })
        .collect::<Result<_>>()?;
    argmax(&vals).map(|(i, v)| (v, i)).ok_or(Error::EmptyCorpus)
}

/// Empirical predual boundedness of `op` plus its annular decay for
/// `h = χ_{[0,1]^n}` at `l = 1, 2, 3`.
pub fn predual_boundedness_check(
    op: &Operator,
    pp: &PredualParams,
    w: &Weight,
    d: &Domain,
    spec: &CorpusSpec,
    j_min: i32,
    depth: u32,
) -> Result<VerificationReport> {
    if !matches!(op, Operator::Maximal | Operator::Hilbert | Operator::HilbertMax) {
        return Err(Error::UnsupportedOperator(op.to_string()));
    }
    let j_max = finest_scale(d);
    let fam = enumerate_cubes(d, j_min, j_max)?;
    let fine = d.refined();
    let fine_fam = enumerate_cubes(&fine, j_min, j_max)?;
    let (ratio, at) = predual_ratio(op, pp, w, d, spec, &fam, depth)?;
    let (ratio_fine, _) = predual_ratio(op, pp, w, &fine, spec, &fine_fam, depth)?;
    let change = rel_change(ratio, ratio_fine);
    let q0 = DyadicCube::closed(1, &vec![1; d.n()]);
    let mut ctx = OperatorContext::new(d)?;
    ctx.family = fam.clone();
    let annuli = annular_decay(op, &ctx, &q0, &[1, 2, 3])?;
    let mut rep = VerificationReport::new(
        "predual_boundedness",
        "operator bounded on the predual space, with annular size decay of T χ_Q",
        GridMeta::of(d).with_family(&fam).with_seed(spec.seed),
    )
    .detail("ratio", ratio)
    .detail("ratio_refined", ratio_fine)
    .detail("ratio_change", change)
    .witness(format!("corpus:{at}"));
    let mut pass = ratio.is_finite() && ratio_fine.is_finite() && change < STABILITY_TOL;
    for a in &annuli {
        rep = rep.detail(format!("annulus_c_sup[l={}]", a.l), a.c_sup).detail(format!("annulus_c_inf[l={}]", a.l), a.c_inf);
        pass &= a.c_sup.is_finite();
    }
    let law = annuli.iter().filter(|a| a.l >= 2).map(|a| a.c_inf).collect::<Vec<_>>();
    if law.len() == 2 {
        let spread = rel_change(law[0], law[1]);
        rep = rep.detail("annulus_law_spread", spread);
        pass &= spread < STABILITY_TOL;
        if matches!(op, Operator::Hilbert) {
            let dev = law.iter().map(|c| (c * std::f64::consts::PI - 1.0).abs()).fold(0.0, f64::max);
            rep = rep.detail("annulus_hilbert_deviation", dev);
            pass &= dev < STABILITY_TOL;
        }
    } else {
        rep = rep.note("annuli l = 2, 3 do not fit in the domain; size law not checked");
    }
    let c = annuli.iter().map(|a| a.c_sup).fold(0.0, f64::max);
    Ok(rep.sides(ratio, ratio_fine).constant(c).pass(pass))
}
