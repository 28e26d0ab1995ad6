//! Runs one configured check and returns its report.

use morrey_core::corpus::corpus_functions;
use morrey_core::cube::enumerate_cubes;
use morrey_core::extrapolation::{
    estimate_operator_norm, extrapolation_check, predual_boundedness_check, rdf_properties, ExtrapolationTarget, NormSpace, PairFamily, RdFConfig,
    RDF_DEFAULT_K,
};
use morrey_core::morrey::{embedding_check, weighted_lp_norm};
use morrey_core::muckenhoupt::{ap_refinement_profile, check_reverse_doubling};
use morrey_core::predual::{holder_pairing_check, predual_bracket, predual_norm_upper, DualityCorpus};
use morrey_core::report::timed;
use morrey_core::stats::rel_change;
use morrey_core::{CubeFamily, Domain, Error, GridFunction, GridMeta, Operator, OperatorContext, Region, VerificationReport};

use crate::config::{Check, CheckKind, Setup, SpaceKind};

pub const AP_TOL: f64 = 0.02;
pub const DEFAULT_DEPTH: u32 = 4;
pub const BRACKET_MAX_RATIO: f64 = 1.25;
pub const DUALITY_SIZE: usize = 10;
pub const REFINE_TOL: f64 = 0.25;
pub const DEFAULT_P1: f64 = 2.0;
pub const RDF_SLACK: f64 = 0.05;
pub const RDF_TAIL: f64 = 0.01;

type R = morrey_core::Result<VerificationReport>;

/// Runs the check and stamps the report with its id, seed and settings.
pub fn run_check(s: &Setup, c: &Check) -> R {
    let mut rep = timed(|| match &c.kind {
        CheckKind::Ap { p, tol } => ap(s, p.unwrap_or(s.morrey.p()), tol.unwrap_or(AP_TOL)),
        CheckKind::ReverseDoubling {} => check_reverse_doubling(&s.weight, &s.family),
        CheckKind::Embedding { p_tilde } => embedding(s, *p_tilde),
        CheckKind::Holder { depth } => holder(s, depth.unwrap_or(DEFAULT_DEPTH)),
        CheckKind::Bracket { depth, max_ratio, duality_size } => bracket(
            s,
            depth.unwrap_or(DEFAULT_DEPTH),
            max_ratio.unwrap_or(BRACKET_MAX_RATIO),
            duality_size.unwrap_or(DUALITY_SIZE),
        ),
        CheckKind::OperatorNorm { space, depth, tol, .. } => {
            operator_norm(s, op(c), *space, depth.unwrap_or(DEFAULT_DEPTH), tol.unwrap_or(REFINE_TOL))
        }
        CheckKind::Extrapolation { p1, .. } => extrapolation(s, op(c), p1.unwrap_or(DEFAULT_P1)),
        CheckKind::PredualBoundedness { depth, .. } => predual_boundedness_check(
            op(c),
            &s.predual.expect("validated"),
            &s.weight,
            &s.domain,
            &s.corpus,
            s.family.j_min(),
            depth.unwrap_or(DEFAULT_DEPTH),
        ),
        CheckKind::Rdf { k } => rdf(s, k.unwrap_or(RDF_DEFAULT_K)),
    })?;
    rep.check_id = c.id.clone();
    rep.grid.seed = Some(s.seed);
    let settings = serde_json::to_string(&c.kind).expect("check serializes");
    rep.notes.push(format!("check: {settings}"));
    rep.notes.push(format!("weight: {}", s.weight.label()));
    rep.notes.push(format!("morrey: p = {}, r = {}", s.morrey.p(), s.morrey.r()));
    if let Some(pp) = &s.predual {
        rep.notes.push(format!("predual: p = {}, varrho = {}", pp.p(), pp.varrho()));
    }
    rep.notes.push(format!("corpus: size = {}, kinds = {:?}", s.corpus.size, s.corpus.kinds));
    rep.notes.push(format!("refine: {}", s.refine));
    Ok(rep)
}

fn op(c: &Check) -> &Operator {
    c.operator.as_ref().expect("validated")
}

fn meta(s: &Setup) -> GridMeta {
    GridMeta::of(&s.domain).with_family(&s.family)
}

fn ap(s: &Setup, p: f64, tol: f64) -> R {
    let d = &s.domain;
    let j_max = s.family.j_max();
    let levels: Vec<i32> = (0..=s.refine as i32).map(|k| j_max + k).collect();
    let prof = ap_refinement_profile(&s.weight, p, d.n(), d.half_width(), s.family.j_min(), &levels, 2)?;
    let first = &prof.levels[0].2;
    let last = &prof.levels[prof.levels.len() - 1];
    let spread = prof.spread();
    let dual = prof.dual_integrable();
    let overflow = prof.levels.iter().any(|l| l.2.overflow);
    let max = prof.levels.iter().map(|l| l.2.value).fold(0.0, f64::max);
    let mut rep = VerificationReport::new("ap", "A_p constant (lower estimate) bounded under refinement", GridMeta::of(&last.1).with_family(&s.family))
        .sides(last.2.value, first.value)
        .constant(max)
        .pass(dual && !overflow && spread <= tol)
        .witness(last.2.attained.to_string())
        .detail("p", p)
        .detail("spread", spread)
        .detail("tolerance", tol)
        .detail("dual_integrable", if dual { 1.0 } else { 0.0 });
    for (j, _, est) in &prof.levels {
        rep = rep.detail(format!("estimate[J_max={j}]"), est.value);
    }
    for (w, g) in prof.levels.windows(2).zip(prof.growth_factors()) {
        rep = rep.detail(format!("growth[J_max={}]", w[1].0), g);
    }
    if !dual {
        rep = rep.note("w^{1-p'} is not locally integrable: the estimate grows without bound under refinement");
    }
    Ok(rep)
}

fn embedding(s: &Setup, p_tilde: Option<f64>) -> R {
    let mp = &s.morrey;
    let u = -(mp.n() as f64) / mp.r();
    let pt = p_tilde.unwrap_or(0.5 * (mp.p() + u));
    let corpus = corpus_functions(&s.corpus, &s.domain)?;
    let mut worst: Option<(f64, VerificationReport)> = None;
    let mut failures = 0;
    for f in corpus.iter().filter(|f| !f.is_zero()) {
        let r = embedding_check(f, &s.weight, mp, pt, &s.family)?;
        failures += usize::from(!r.pass);
        let tight = r.left / r.right;
        if worst.as_ref().is_none_or(|(t, _)| tight > *t) {
            worst = Some((tight, r));
        }
    }
    let (_, rep) = worst.ok_or(Error::EmptyCorpus)?;
    Ok(rep.pass(failures == 0).detail("p_tilde", pt).detail("functions", corpus.len() as f64).detail("failures", failures as f64))
}

/// Corpus members that fit in a single family cube, so that the predual
/// decomposition search applies to them.
fn covered(s: &Setup, corpus: &[GridFunction], depth: u32) -> morrey_core::Result<Vec<usize>> {
    let pp = s.predual.expect("validated");
    let mut out = Vec::new();
    for (i, h) in corpus.iter().enumerate() {
        match predual_norm_upper(h, &pp, &s.weight, &s.family, depth) {
            Ok(_) => out.push(i),
            Err(Error::NotCovered) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn holder(s: &Setup, depth: u32) -> R {
    let pp = s.predual.expect("validated");
    let corpus = corpus_functions(&s.corpus, &s.domain)?;
    let hs = covered(s, &corpus, depth)?;
    let mut worst: Option<VerificationReport> = None;
    let mut failures = 0;
    for (i, g) in corpus.iter().enumerate() {
        for &j in &hs {
            let r = holder_pairing_check(g, &corpus[j], &s.morrey, &pp, &s.weight, &s.family, depth)?;
            failures += usize::from(!r.pass);
            if worst.as_ref().is_none_or(|w| r.constant > w.constant) {
                worst = Some(r.witness(format!("pair:{i},{j}")));
            }
        }
    }
    match worst {
        Some(rep) => Ok(rep
            .pass(failures == 0)
            .detail("pairs", (corpus.len() * hs.len()) as f64)
            .detail("failures", failures as f64)
            .detail("uncovered_members", (corpus.len() - hs.len()) as f64)),
        None => Ok(VerificationReport::new("holder_pairing", "Hölder-type pairing of Morrey and predual norms", meta(s))
            .note("no corpus member fits inside a family cube")),
    }
}

fn bracket(s: &Setup, depth: u32, max_ratio: f64, size: usize) -> R {
    let pp = s.predual.expect("validated");
    let corpus = corpus_functions(&s.corpus, &s.domain)?;
    let dual = DualityCorpus::standard(&s.weight, &s.morrey, &s.family, s.seed, size)?;
    let mut rep = VerificationReport::new("bracket", "two-sided bracket of the predual norm", meta(s));
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in covered(s, &corpus, depth)? {
        let b = predual_bracket(&corpus[i], &pp, &s.weight, &s.family, depth, &dual)?;
        count += 1;
        if b.ratio() > worst || count == 1 {
            worst = b.ratio();
            rep.witnesses = vec![format!("corpus:{i}"), b.witness_upper.content_hash(), b.witness_lower.clone()];
            rep.left = b.lower;
            rep.right = b.upper;
        }
    }
    if count == 0 {
        return Ok(rep.note("no corpus member fits inside a family cube"));
    }
    Ok(rep
        .constant(worst)
        .pass(worst <= max_ratio)
        .detail("max_ratio", max_ratio)
        .detail("functions", count as f64)
        .detail("duality_corpus", dual.len() as f64))
}

fn operator_context(d: &Domain, fam: &CubeFamily) -> morrey_core::Result<OperatorContext> {
    let mut ctx = OperatorContext::new(d)?;
    ctx.family = fam.clone();
    Ok(ctx)
}

fn operator_norm(s: &Setup, op: &Operator, space: SpaceKind, depth: u32, tol: f64) -> R {
    let mut d = s.domain;
    let mut values = Vec::new();
    let mut rep = VerificationReport::new("operator_norm", "operator norm estimate stable under grid refinement", meta(s))
        .note(format!("operator: {op}"))
        .note(format!("space: {space:?}"));
    for level in 0..=s.refine {
        let fam = enumerate_cubes(&d, s.family.j_min(), s.family.j_max())?;
        let ctx = operator_context(&d, &fam)?;
        let corpus: Vec<GridFunction> = corpus_functions(&s.corpus, &d)?.into_iter().filter(|f| !f.is_zero()).collect();
        let ns = match space {
            SpaceKind::Lp => NormSpace::WeightedLp { p: s.morrey.p(), weight: s.weight.clone() },
            SpaceKind::Morrey => NormSpace::Morrey { params: s.morrey, weight: s.weight.clone(), family: fam.clone() },
            SpaceKind::Predual => {
                let pp = s.predual.expect("validated");
                let corpus = DualityCorpus::standard(&s.weight, &s.morrey, &fam, s.seed, DUALITY_SIZE)?;
                NormSpace::Predual { params: pp, weight: s.weight.clone(), family: fam.clone(), depth, corpus }
            }
        };
        let est = estimate_operator_norm(op, &ctx, &ns, &corpus)?;
        rep = rep.detail(format!("value[refine={level}]"), est.value).detail(format!("upper[refine={level}]"), est.upper);
        if level == 0 {
            rep = rep.witness(format!("corpus:{}", est.attained));
        }
        values.push(est.value);
        d = d.refined();
    }
    let change = values.windows(2).map(|w| rel_change(w[0], w[1])).fold(0.0, f64::max);
    let finite = values.iter().all(|v| v.is_finite());
    let max = values.iter().cloned().fold(0.0, f64::max);
    Ok(rep
        .sides(values[values.len() - 1], values[0])
        .constant(max)
        .pass(finite && change <= tol)
        .detail("change", change)
        .detail("tolerance", tol))
}

fn extrapolation(s: &Setup, op: &Operator, p1: f64) -> R {
    let targets = [ExtrapolationTarget { params: s.morrey, weight: s.weight.clone() }];
    let build = |g: &Domain| {
        let ctx = OperatorContext::new(g)?;
        let corpus: Vec<GridFunction> = corpus_functions(&s.corpus, g)?.into_iter().filter(|f| !f.is_zero()).collect();
        PairFamily::from_operator(op, &ctx, &corpus)
    };
    extrapolation_check(build, &s.domain, p1, &targets, s.family.j_min())
}

fn rdf(s: &Setup, k: usize) -> R {
    let ctx = operator_context(&s.domain, &s.family)?;
    let corpus: Vec<GridFunction> = corpus_functions(&s.corpus, &s.domain)?.into_iter().filter(|f| !f.is_zero()).collect();
    let p = s.morrey.p();
    let space = NormSpace::WeightedLp { p, weight: s.weight.clone() };
    let m = estimate_operator_norm(&Operator::Maximal, &ctx, &space, &corpus)?.value;
    let cfg = RdFConfig::new(k, (1.1 * m).max(1.0), s.family.clone())?;
    let (mut i_ok, mut slack, mut tail, mut at) = (true, 0.0f64, 0.0f64, 0);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (i, h) in corpus.iter().enumerate() {
        let pr = rdf_properties(h, &cfg, |f| weighted_lp_norm(f, &s.weight, p, &Region::Whole))?;
        i_ok &= pr.i_violation == 0.0;
        tail = tail.max(pr.iii_relative);
        if pr.ii_slack > slack || i == 0 {
            slack = pr.ii_slack;
            (lhs, rhs, at) = (pr.ii_lhs, pr.ii_rhs, i);
        }
    }
    Ok(VerificationReport::new("rdf", "Rubio de Francia iteration: domination, norm doubling, A_1-type bound", meta(s))
        .sides(lhs, rhs)
        .constant(cfg.m_norm())
        .pass(i_ok && slack <= RDF_SLACK && tail < RDF_TAIL)
        .witness(corpus[at].content_hash())
        .detail("k", k as f64)
        .detail("m_norm", cfg.m_norm())
        .detail("ii_slack", slack)
        .detail("iii_relative", tail)
        .detail("i_exact", if i_ok { 1.0 } else { 0.0 }))
}
