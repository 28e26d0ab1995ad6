//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Runs as a plain binary so the lines are always printed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use morrey_core::corpus::{corpus_functions, generate_corpus, CorpusSpec, FunctionKind};
use morrey_core::cube::{enumerate_cubes, finest_scale};
use morrey_core::extrapolation::{
    estimate_operator_norm, extrapolation_check, predual_boundedness_check, rdf_properties, ExtrapolationTarget, NormSpace, PairFamily, RdFConfig,
};
use morrey_core::morrey::{
    embedding_check, morrey_norm_halfopen, nonseparability_witness, variant_equivalence, weighted_lp_norm, witness_norm_bound, VariantSetup,
};
use morrey_core::muckenhoupt::{ap_refinement_profile, ap_scale_profile};
use morrey_core::operators::{apply, apply_multiplier_real, cz_apply, CZKernel, Multiplier, Operator, OperatorContext};
use morrey_core::predual::{holder_pairing_check, predual_bracket, random_in_cube, DualityCorpus, PredualParams};
use morrey_core::quadrature::indicator;
use morrey_core::stats::rel_change;
use morrey_core::{ap_constant, morrey_norm, Domain, DyadicCube, GridFunction, MorreyParams, Region, VerificationReport, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AP_STABLE_TOL: f64 = 0.02;
const AP_GROWTH_MIN: f64 = 1.5;
const AP_RUNTIME_S: f64 = 10.0;
const EQUIV_STABLE_TOL: f64 = 0.10;
const EQUIV_RUNTIME_S: f64 = 60.0;
const INDICATOR_TOL: f64 = 0.03;
const BRACKET_MAX_RATIO: f64 = 1.25;
const HILBERT_POINT_TOL: f64 = 0.05;
const HILBERT_L2_TOL: f64 = 0.10;
const RDF_SLACK: f64 = 0.05;
const RDF_TAIL: f64 = 0.01;
const RDF_RUNTIME_S: f64 = 120.0;
const REFINE_TOL: f64 = 0.25;
const COMMUTATOR_ZERO: f64 = 1e-12;
const SEED: u64 = 20_240_917;

type Outcome = Result<(bool, String), morrey_core::Error>;

fn d1(l: f64, n: usize) -> Domain {
    Domain::new(1, l, n).unwrap()
}

fn c1_ap() -> Outcome {
    let t = Instant::now();
    let d = d1(8.0, 4096);
    let fam = enumerate_cubes(&d, -3, 7)?;
    let mut exact = true;
    for p in [1.5, 2.0, 3.0] {
        exact &= ap_constant(&Weight::lebesgue(1), p, &fam)?.value == 1.0;
    }
    let stab = ap_scale_profile(&Weight::power(1, 0.5)?, 2.0, &d, -3, &[5, 6, 7])?;
    let spread = stab.spread();
    let grow = ap_refinement_profile(&Weight::power(1, 1.5)?, 2.0, 1, 8.0, -3, &[4, 5, 6, 7], 2)?;
    let factors = grow.growth_factors();
    let min_growth = factors.iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = t.elapsed().as_secs_f64();
    let pass = exact && spread <= AP_STABLE_TOL && min_growth >= AP_GROWTH_MIN && secs < AP_RUNTIME_S;
    Ok((pass, format!("unit weight exact = {exact}; |x|^0.5 spread = {spread:.4}; |x|^1.5 growth per J = {factors:.4?} (need >= {AP_GROWTH_MIN}); {secs:.2}s")))
}

fn c2_equivalence() -> Outcome {
    let t = Instant::now();
    let mp = MorreyParams::new(2.0, -0.25, 1)?;
    let s = VariantSetup::default();
    let mut worst = 0.0f64;
    let mut cs = Vec::new();
    for w in [Weight::lebesgue(1), Weight::power(1, 0.5)?] {
        let d = d1(8.0, 1024);
        let spec = CorpusSpec::new(SEED, 20);
        let a = variant_equivalence(&corpus_functions(&spec, &d)?, &w, &mp, &s)?.constant;
        let b = variant_equivalence(&corpus_functions(&spec, &d.refined())?, &w, &mp, &s)?.constant;
        worst = worst.max(rel_change(a, b));
        cs.push((a, b));
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst <= EQUIV_STABLE_TOL && cs.iter().all(|c| c.0.is_finite()) && secs < EQUIV_RUNTIME_S;
    Ok((pass, format!("C (coarse, refined) per weight = {cs:.4?}; max change {worst:.4}; {secs:.2}s")))
}

fn c3_indicator_law() -> Outcome {
    let d = d1(8.0, 4096);
    let fam = enumerate_cubes(&d, -3, finest_scale(&d))?;
    let w = Weight::lebesgue(1);
    let cubes = [(0, 0), (1, 1), (2, -3), (-1, 1), (3, 5)];
    let mut worst = 0.0f64;
    for r in [-0.125, -0.25, -0.375, -0.5] {
        let mp = MorreyParams::new(2.0, r, 1)?;
        for &(j, m) in &cubes {
            let q = DyadicCube::closed(j, &[m]);
            let f = indicator(d, &Region::Cube(q.clone()))?;
            let v = morrey_norm(&f, &w, &mp, &fam)?.value;
            worst = worst.max(rel_change(v, q.volume().powf(-r)));
        }
    }
    Ok((worst < INDICATOR_TOL, format!("max relative error {worst:.2e} over 5 cubes x r in {{-0.125, -0.25, -0.375, -0.5}}")))
}

fn c4_bracket() -> Outcome {
    let d = d1(8.0, 4096);
    let fam = enumerate_cubes(&d, -3, 6)?;
    let w = Weight::lebesgue(1);
    let pp = PredualParams::new(2.0, -0.6, 1)?;
    let mp = pp.morrey()?;
    let corpus = DualityCorpus::standard(&w, &mp, &fam, SEED, 10)?;
    let mut worst = 1.0f64;
    for (j, m) in [(0, 0), (1, 1), (2, 3), (-1, 0)] {
        let cube = DyadicCube::closed(j, &[m]);
        let mut hs = vec![indicator(d, &Region::Cube(cube.clone()))?];
        hs.extend(random_in_cube(&cube, &d, SEED.wrapping_add(j as u64), 3)?);
        for h in hs {
            worst = worst.max(predual_bracket(&h, &pp, &w, &fam, 6, &corpus)?.ratio());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let gs = corpus_functions(&CorpusSpec::new(SEED, 50), &d)?;
    let mut violations = 0;
    for g in &gs {
        let j = rng.gen_range(-1..=3);
        let m = rng.gen_range(-(1i64 << (j + 1)).max(1)..(1i64 << (j + 1)).max(1));
        let h = random_in_cube(&DyadicCube::closed(j, &[m]), &d, rng.gen(), 1)?.remove(0);
        if !holder_pairing_check(g, &h, &mp, &pp, &w, &fam, 6)?.pass {
            violations += 1;
        }
    }
    Ok((worst <= BRACKET_MAX_RATIO && violations == 0, format!("worst upper/lower = {worst:.4}; Hölder violations {violations}/50")))
}

fn c5_hilbert() -> Outcome {
    let d = d1(8.0, 8192);
    let f = indicator(d, &Region::Box(morrey_core::AxisBox::new(&[-1.0], &[1.0])))?;
    let t = cz_apply(&CZKernel::hilbert(), &f, 4.0 * d.spacing())?;
    let mut worst = 0.0f64;
    for i in 0..d.cell_count() {
        let x = d.axis_center(i);
        if (x.abs() - 1.0).abs() >= 0.25 {
            let exact = ((x + 1.0) / (x - 1.0)).abs().ln() / PI;
            worst = worst.max((t.samples()[i] - exact).abs() / exact.abs());
        }
    }
    // gated inputs have (nearly) zero mean, so the periodic images of the
    // 1/x tail do not enter; the plain Gaussian is reported only
    let db = d1(16.0, 8192);
    let h = Multiplier::named("hilbert", 1)?;
    let l2 = |v: &GridFunction| v.samples().iter().map(|s| s * s).sum::<f64>().sqrt();
    let discrepancy = |f: &dyn Fn(f64) -> f64| -> Result<f64, morrey_core::Error> {
        let g = GridFunction::from_fn(db, |x| f(x[0]))?;
        let pv = cz_apply(&CZKernel::hilbert(), &g, 4.0 * db.spacing())?;
        let mu = apply_multiplier_real(&h, &g)?;
        Ok(l2(&pv.sub(&mu)?) / l2(&mu))
    };
    let mut worst_l2 = 0.0f64;
    for f in [&(|x: f64| x * (-x * x).exp()) as &dyn Fn(f64) -> f64, &|x: f64| (-0.5 * x * x).exp() * (3.0 * x).cos(), &|x: f64| (1.0 - 2.0 * x * x) * (-x * x).exp()] {
        worst_l2 = worst_l2.max(discrepancy(f)?);
    }
    let gauss = discrepancy(&|x: f64| (-x * x).exp())?;
    Ok((worst < HILBERT_POINT_TOL && worst_l2 < HILBERT_L2_TOL, format!("PV vs log formula max rel err {worst:.2e}; PV vs multiplier rel L2 {worst_l2:.4} (Gaussian, nonzero mean: {gauss:.4})")))
}

fn c6_rdf() -> Outcome {
    let t = Instant::now();
    let d = d1(8.0, 1024);
    let ctx = OperatorContext::new(&d)?;
    let corpus = corpus_functions(&CorpusSpec::new(SEED, 10), &d)?;
    let w = Weight::lebesgue(1);
    let space = NormSpace::WeightedLp { p: 2.0, weight: w.clone() };
    let m = estimate_operator_norm(&Operator::Maximal, &ctx, &space, &corpus)?.value;
    let cfg = RdFConfig::new(12, (1.1 * m).max(1.0), ctx.family.clone())?;
    let (mut i_ok, mut slack, mut tail) = (true, 0.0f64, 0.0f64);
    for h in &corpus {
        let pr = rdf_properties(h, &cfg, |f| weighted_lp_norm(f, &w, 2.0, &Region::Whole))?;
        i_ok &= pr.i_violation == 0.0;
        slack = slack.max(pr.ii_slack);
        tail = tail.max(pr.iii_relative);
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = i_ok && slack <= RDF_SLACK && tail < RDF_TAIL && secs < RDF_RUNTIME_S;
    Ok((pass, format!("M_norm = {:.4}; (i) exact = {i_ok}; (ii) slack {slack:.4}; (iii) violation/rhs {tail:.2e}; {secs:.2}s", cfg.m_norm())))
}

fn c7_extrapolation() -> Outcome {
    let d = d1(8.0, 1024);
    let mut targets = Vec::new();
    for w in [Weight::lebesgue(1), Weight::power(1, 0.5)?] {
        for p in [1.5, 2.0, 3.0] {
            for theta in [0.25, 0.5, 0.75] {
                targets.push(ExtrapolationTarget { params: MorreyParams::new(p, -theta / p, 1)?, weight: w.clone() });
            }
        }
    }
    let mut lines = Vec::new();
    let mut pass = true;
    for op in [Operator::Maximal, Operator::Hilbert] {
        let build = |g: &Domain| {
            let ctx = OperatorContext::new(g)?;
            PairFamily::from_operator(&op, &ctx, &corpus_functions(&CorpusSpec::new(SEED, 20), g)?)
        };
        let rep = extrapolation_check(build, &d, 2.0, &targets, -3)?;
        pass &= rep.pass;
        lines.push(format!("{op}: max c2 = {:.4}, worst change {:.4}", rep.left, rep.constant));
    }
    Ok((pass, lines.join("; ")))
}

fn c8_witnesses() -> Outcome {
    let d = d1(8.0, 4096);
    let fam = enumerate_cubes(&d, -2, 8)?;
    let mp = MorreyParams::new(2.0, -0.25, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let c = 1.0;
    let (mut min_dist, mut worst_norm) = (f64::INFINITY, 0.0f64);
    for w in [Weight::lebesgue(1), Weight::power(1, 0.5)?] {
        let bound = witness_norm_bound(&w, &mp, &d, 7)?;
        for _ in 0..10 {
            let a: Vec<i8> = (0..6).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let mut b: Vec<i8> = (0..6).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            if a == b {
                let k = rng.gen_range(0..6);
                b[k] = -b[k];
            }
            let (fa, fb) = (nonseparability_witness(&a, &w, &mp, &d)?, nonseparability_witness(&b, &w, &mp, &d)?);
            min_dist = min_dist.min(morrey_norm(&fa.sub(&fb)?, &w, &mp, &fam)?.value);
            for f in [&fa, &fb] {
                worst_norm = worst_norm.max(morrey_norm_halfopen(f, &w, &mp, -2, 8)?.value / bound);
            }
        }
    }
    let pass = min_dist >= 2.0 * c * (1.0 - 1e-9) && worst_norm <= 1.0 + 1e-9;
    Ok((pass, format!("min pairwise distance {min_dist:.4} (2c = {}); max norm / series bound {worst_norm:.4}", 2.0 * c)))
}

fn c9_annular() -> Outcome {
    let d = d1(16.0, 1024);
    let pp = PredualParams::new(2.0, -0.6, 1)?;
    let spec = CorpusSpec::new(SEED, 10);
    let mut pass = true;
    let mut lines = Vec::new();
    for op in [Operator::Maximal, Operator::Hilbert] {
        let rep = predual_boundedness_check(&op, &pp, &Weight::lebesgue(1), &d, &spec, -4, 4)?;
        pass &= rep.pass;
        let g = |k: &str| rep.details.get(k).copied().unwrap_or(f64::NAN);
        lines.push(format!(
            "{op}: c_inf(l=2,3) = ({:.4}, {:.4}), law spread {:.4}, ratio {:.4} -> {:.4}",
            g("annulus_c_inf[l=2]"),
            g("annulus_c_inf[l=3]"),
            g("annulus_law_spread"),
            g("ratio"),
            g("ratio_refined")
        ));
    }
    Ok((pass, lines.join("; ")))
}

fn commutator_ratio(d: &Domain, shifts: &[i64], w: &Weight) -> Result<f64, morrey_core::Error> {
    let ctx = OperatorContext::new(d)?;
    let op: Operator = "commutator:log:hilbert".parse()?;
    let mut best = 0.0f64;
    for &m in shifts {
        let f = indicator(*d, &Region::Cube(DyadicCube::half_open(0, &[m])))?;
        let c = apply(&op, &f, &ctx)?;
        best = best.max(weighted_lp_norm(&c, w, 2.0, &Region::Whole)? / weighted_lp_norm(&f, w, 2.0, &Region::Whole)?);
    }
    Ok(best)
}

fn c10_commutator() -> Outcome {
    let d = d1(8.0, 1024);
    let ctx = OperatorContext::new(&d)?;
    let f = indicator(d, &Region::Cube(DyadicCube::half_open(0, &[0])))?;
    let zero = apply(&"commutator:const=2.5:hilbert".parse()?, &f, &ctx)?.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let shifts: Vec<i64> = (0..10).map(|_| rng.gen_range(-4..4)).collect();
    let w = Weight::power(1, 0.5)?;
    let a = commutator_ratio(&d, &shifts, &w)?;
    let b = commutator_ratio(&d.refined(), &shifts, &w)?;
    let change = rel_change(a, b);
    Ok((zero <= COMMUTATOR_ZERO && a.is_finite() && change < REFINE_TOL, format!("constant symbol max |[b,H]f| = {zero:.1e}; ln|x| ratio {a:.4} -> {b:.4} (change {change:.4})")))
}

fn determinism_reports() -> Result<Vec<VerificationReport>, morrey_core::Error> {
    let d = d1(8.0, 256);
    let fam = enumerate_cubes(&d, -3, finest_scale(&d))?;
    let w = Weight::power(1, 0.5)?;
    let mp = MorreyParams::new(2.0, -0.25, 1)?;
    let pp = PredualParams::dual_of(&mp)?;
    let corpus = generate_corpus(&CorpusSpec::new(SEED, 6).with_kinds(&[FunctionKind::Bump, FunctionKind::PiecewiseConstant]), &d)?;
    let mut out = Vec::new();
    out.push(embedding_check(&corpus[0].function, &w, &mp, 3.0, &fam)?);
    let h = random_in_cube(&DyadicCube::closed(1, &[1]), &d, SEED, 1)?.remove(0);
    out.push(holder_pairing_check(&corpus[1].function, &h, &mp, &pp, &w, &fam, 4)?);
    let targets = [ExtrapolationTarget { params: mp, weight: w.clone() }];
    let build = |g: &Domain| PairFamily::from_operator(&Operator::Hilbert, &OperatorContext::new(g)?, &corpus_functions(&CorpusSpec::new(SEED, 6), g)?);
    out.push(extrapolation_check(build, &d, 2.0, &targets, -3)?);
    out.push(predual_boundedness_check(&Operator::Maximal, &PredualParams::new(2.0, -0.6, 1)?, &Weight::lebesgue(1), &d1(16.0, 256), &CorpusSpec::new(SEED, 4), -4, 3)?);
    Ok(out)
}

fn c11_determinism() -> Outcome {
    let run = |threads: usize| -> Result<Vec<String>, morrey_core::Error> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        Ok(pool.install(determinism_reports)?.iter().map(|r| r.numeric_json()).collect())
    };
    let a = run(1)?;
    let b = run(4)?;
    let same = a == b;
    Ok((same, format!("{} reports, 1 vs 4 threads byte-identical = {same}", a.len())))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 A_p sanity", c1_ap),
        ("2 norm equivalence", c2_equivalence),
        ("3 indicator norm law", c3_indicator_law),
        ("4 duality bracket", c4_bracket),
        ("5 Hilbert oracle", c5_hilbert),
        ("6 Rubio de Francia", c6_rdf),
        ("7 extrapolation", c7_extrapolation),
        ("8 non-separability", c8_witnesses),
        ("9 predual annular decay", c9_annular),
        ("10 commutator", c10_commutator),
        ("11 determinism", c11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let (pass, msg) = match f() {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} criterion {name}: {msg}", if pass { "PASS" } else { "FAIL" });
        failed += !pass as usize;
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
