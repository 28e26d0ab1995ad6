//! Weights, their per-cell masses, and A_p / doubling probes.
//!
//! Power weights integrate the cells that touch the origin in closed form.
//! Sampling `|x|^α` at the nearest cell center would misstate every average
//! over a cube containing the origin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{enumerate_cubes, CubeFamily, DyadicCube};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::quadrature::Region;
use crate::report::{GridMeta, VerificationReport};
use crate::stats::{argmax, conjugate};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    Constant { c: f64 },
    /// `|x|^alpha`.
    Power { alpha: f64 },
    /// `prod_i |x_i|^{alpha_i}`.
    AxisPower { alphas: Vec<f64> },
    /// Arbitrary positive cell values on a fixed domain.
    Grid(GridFunction<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    kind: WeightKind,
    n: usize,
    exact_cell_integrals: bool,
}

/// Serializable description of a weight, used in configs and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { c: f64 },
    Power { alpha: f64 },
    AxisPower { alphas: Vec<f64> },
}

impl WeightSpec {
    pub fn build(&self, n: usize) -> Result<Weight> {
        match self {
            WeightSpec::Constant { c } => Weight::constant(n, *c),
            WeightSpec::Power { alpha } => Weight::power(n, *alpha),
            WeightSpec::AxisPower { alphas } => {
                if alphas.len() != n {
                    return Err(Error::Dimension { expected: n, got: alphas.len() });
                }
                Weight::axis_power(alphas)
            }
        }
    }
}

impl Weight {
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::NonPositiveWeight(format!("constant {c}")));
        }
        Ok(Self { kind: WeightKind::Constant { c }, n, exact_cell_integrals: true })
    }

    /// Lebesgue measure.
    pub fn lebesgue(n: usize) -> Self {
        Self { kind: WeightKind::Constant { c: 1.0 }, n, exact_cell_integrals: true }
    }

    pub fn power(n: usize, alpha: f64) -> Result<Self> {
        let w = Self { kind: WeightKind::Power { alpha }, n, exact_cell_integrals: true };
        if !alpha.is_finite() || !w.locally_integrable() {
            return Err(Error::NonIntegrable(format!("|x|^{alpha} in dimension {n} needs alpha > -{n}")));
        }
        Ok(w)
    }

    pub fn axis_power(alphas: &[f64]) -> Result<Self> {
        let w = Self {
            kind: WeightKind::AxisPower { alphas: alphas.to_vec() },
            n: alphas.len(),
            exact_cell_integrals: true,
        };
        if alphas.is_empty() || alphas.len() > 2 || alphas.iter().any(|a| !a.is_finite()) || !w.locally_integrable() {
            return Err(Error::NonIntegrable(format!("axis powers {alphas:?} need every alpha_i > -1")));
        }
        Ok(w)
    }

    pub fn from_grid(g: GridFunction<f64>) -> Result<Self> {
        if let Some(i) = g.samples().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveWeight(format!("cell {i} has value {}", g.samples()[i])));
        }
        let n = g.domain().n();
        Ok(Self { kind: WeightKind::Grid(g), n, exact_cell_integrals: false })
    }

    /// Switches closed-form cell integration on or off for power kinds.
    pub fn with_exact_cells(mut self, exact: bool) -> Self {
        self.exact_cell_integrals = exact;
        self
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, WeightKind::Constant { .. })
    }

    pub fn locally_integrable(&self) -> bool {
        match &self.kind {
            WeightKind::Power { alpha } => *alpha > -(self.n as f64),
            WeightKind::AxisPower { alphas } => alphas.iter().all(|&a| a > -1.0),
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            WeightKind::Constant { c } => format!("const({c})"),
            WeightKind::Power { alpha } => format!("|x|^{alpha}"),
            WeightKind::AxisPower { alphas } => format!("prod|x_i|^{alphas:?}"),
            WeightKind::Grid(g) => format!("grid({})", &g.content_hash()[..12]),
        }
    }

    /// Pointwise value.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            WeightKind::Constant { c } => *c,
            WeightKind::Power { alpha } => x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(*alpha),
            WeightKind::AxisPower { alphas } => x.iter().zip(alphas).map(|(v, a)| v.abs().powf(*a)).product(),
            WeightKind::Grid(g) => {
                let d = g.domain();
                let h = d.spacing();
                let l = d.half_width();
                let mut ij = [0usize; 2];
                for (a, v) in x.iter().enumerate() {
                    ij[a] = (((v + l) / h).floor().max(0.0) as usize).min(d.points_per_axis() - 1);
                }
                g.samples()[d.ravel(ij)]
            }
        }
    }

    /// `w^s`, without checking local integrability.
    pub fn pow_unchecked(&self, s: f64) -> Weight {
        let kind = match &self.kind {
            WeightKind::Constant { c } => WeightKind::Constant { c: c.powf(s) },
            WeightKind::Power { alpha } => WeightKind::Power { alpha: alpha * s },
            WeightKind::AxisPower { alphas } => WeightKind::AxisPower { alphas: alphas.iter().map(|a| a * s).collect() },
            WeightKind::Grid(g) => WeightKind::Grid(g.map(|v| v.powf(s)).expect("powers of positive finite values")),
        };
        Weight { kind, n: self.n, exact_cell_integrals: self.exact_cell_integrals }
    }

    pub fn pow(&self, s: f64) -> Result<Weight> {
        let w = self.pow_unchecked(s);
        if !w.locally_integrable() {
            return Err(Error::NonIntegrable(format!("{} raised to {s}", self.label())));
        }
        if let WeightKind::Grid(g) = &w.kind {
            if g.samples().iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::NonIntegrable(format!("{} raised to {s} overflows", self.label())));
            }
        }
        Ok(w)
    }

    /// The dual weight `w^{1 - p'}`.
    pub fn dual(&self, p: f64) -> Result<Weight> {
        check_p(p)?;
        self.pow(1.0 - conjugate(p))
    }

    /// `∫_cell w` for every cell. Cells at a non-integrable singularity are
    /// sampled at their centers, so the result is always finite.
    pub fn cell_masses(&self, d: &Domain) -> Result<Vec<f64>> {
        d.check_dim(self.n)?;
        let h = d.spacing();
        let vol = d.cell_volume();
        let masses = match &self.kind {
            WeightKind::Constant { c } => vec![c * vol; d.cell_count()],
            WeightKind::Grid(g) => {
                if g.domain() != d {
                    return Err(Error::InvalidDomain("grid weight sampled on another domain".into()));
                }
                g.samples().iter().map(|v| v * vol).collect()
            }
            WeightKind::Power { alpha } if d.n() == 1 => {
                let exact = self.exact_cell_integrals;
                (0..d.points_per_axis())
                    .map(|i| {
                        let (a, b) = (d.axis_vertex(i), d.axis_vertex(i + 1));
                        exact
                            .then(|| power_integral_1d(a, b, *alpha))
                            .flatten()
                            .unwrap_or_else(|| d.axis_center(i).abs().powf(*alpha) * h)
                    })
                    .collect()
            }
            WeightKind::Power { alpha } => radial_masses_2d(d, *alpha, self.exact_cell_integrals),
            WeightKind::AxisPower { alphas } => {
                let per_axis: Vec<Vec<f64>> = alphas
                    .iter()
                    .map(|&a| {
                        (0..d.points_per_axis())
                            .map(|i| {
                                let (lo, hi) = (d.axis_vertex(i), d.axis_vertex(i + 1));
                                self.exact_cell_integrals
                                    .then(|| power_integral_1d(lo, hi, a))
                                    .flatten()
                                    .unwrap_or_else(|| d.axis_center(i).abs().powf(a) * h)
                            })
                            .collect()
                    })
                    .collect();
                (0..d.cell_count())
                    .map(|idx| {
                        let ij = d.unravel(idx);
                        (0..d.n()).map(|a| per_axis[a][ij[a]]).product()
                    })
                    .collect()
            }
        };
        Ok(masses)
    }

    /// `w(region)`.
    pub fn measure(&self, d: &Domain, region: &Region) -> Result<f64> {
        let cells = region.cells(d)?;
        let masses = self.cell_masses(d)?;
        Ok(cells.sum(d, &masses))
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent p = {p} must lie in (1, inf)")))
    }
}

/// `∫_a^b |x|^beta dx`, or `None` when the singularity at 0 is not
/// integrable and `[a, b]` touches it.
pub fn power_integral_1d(a: f64, b: f64, beta: f64) -> Option<f64> {
    debug_assert!(a <= b);
    // ∫_0^x t^beta dt for x >= 0
    let prim = |x: f64| -> Option<f64> {
        if x == 0.0 {
            if beta > -1.0 { Some(0.0) } else { None }
        } else if beta == -1.0 {
            Some(x.ln())
        } else {
            Some(x.powf(beta + 1.0) / (beta + 1.0))
        }
    };
    if a >= 0.0 {
        if a == 0.0 && beta <= -1.0 {
            return None;
        }
        Some(prim(b)? - prim(a)?)
    } else if b <= 0.0 {
        power_integral_1d(-b, -a, beta)
    } else {
        if beta <= -1.0 {
            return None;
        }
        Some(prim(-a)? + prim(b)?)
    }
}

/// `∫_{[0,h]^2} |x|^beta dx` for `beta > -2`.
pub fn corner_cell_integral_2d(h: f64, beta: f64) -> f64 {
    // 2 * h^{beta+2}/(beta+2) * ∫_0^{π/4} sec^{beta+2}θ dθ, composite Simpson
    let k = 512;
    let t = std::f64::consts::FRAC_PI_4;
    let g = |th: f64| th.cos().powf(-(beta + 2.0));
    let step = t / k as f64;
    let mut s = g(0.0) + g(t);
    for i in 1..k {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * step);
    }
    let angular = s * step / 3.0;
    2.0 * h.powf(beta + 2.0) / (beta + 2.0) * angular
}

fn radial_masses_2d(d: &Domain, alpha: f64, exact: bool) -> Vec<f64> {
    let h = d.spacing();
    let vol = d.cell_volume();
    let mid = d.points_per_axis() / 2;
    // cells within this many cells of the origin get a refined quadrature
    const NEAR: usize = 3;
    const SUB: usize = 8;
    (0..d.cell_count())
        .map(|idx| {
            let ij = d.unravel(idx);
            let c = d.cell_center(idx);
            let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
            if !exact {
                return r.powf(alpha) * vol;
            }
            let touches = (ij[0] == mid || ij[0] + 1 == mid) && (ij[1] == mid || ij[1] + 1 == mid);
            if touches {
                if alpha > -2.0 {
                    corner_cell_integral_2d(h, alpha)
                } else {
                    r.powf(alpha) * vol
                }
            } else if ij[0].abs_diff(mid) <= NEAR && ij[1].abs_diff(mid) <= NEAR {
                let x0 = d.axis_vertex(ij[0]);
                let y0 = d.axis_vertex(ij[1]);
                let sh = h / SUB as f64;
                let mut acc = 0.0;
                for a in 0..SUB {
                    for b in 0..SUB {
                        let x = x0 + (a as f64 + 0.5) * sh;
                        let y = y0 + (b as f64 + 0.5) * sh;
                        acc += (x * x + y * y).sqrt().powf(alpha);
                    }
                }
                acc * sh * sh
            } else {
                r.powf(alpha) * vol
            }
        })
        .collect()
}

/// Lower estimate of `[w]_{A_p}` over a finite family.
#[derive(Debug, Clone, PartialEq)]
pub struct ApEstimate {
    pub p: f64,
    pub value: f64,
    pub attained: DyadicCube,
    /// `false` when `w^{1-p'}` is not locally integrable; the singular cells
    /// were then sampled at their centers and the value depends on resolution.
    pub dual_integrable: bool,
    /// Some cube produced a non-finite product.
    pub overflow: bool,
    pub family_len: usize,
}

/// `max over fam of (w(Q)/|Q|) (w^{1-p'}(Q)/|Q|)^{p-1}`.
pub fn ap_constant(w: &Weight, p: f64, fam: &CubeFamily) -> Result<ApEstimate> {
    check_p(p)?;
    let d = fam.domain();
    let dual = w.pow_unchecked(1.0 - conjugate(p));
    let per_cube: Vec<f64> = if let WeightKind::Constant { c } = w.kind {
        vec![c * c.powf(1.0 - conjugate(p)).powf(p - 1.0); fam.len()]
    } else {
        let wm = w.cell_masses(d)?;
        let vm = dual.cell_masses(d)?;
        let vol = d.cell_volume();
        fam.boxes()
            .par_iter()
            .map(|b| {
                let q = b.count() as f64 * vol;
                (b.sum(d, &wm) / q) * (b.sum(d, &vm) / q).powf(p - 1.0)
            })
            .collect()
    };
    let overflow = per_cube.iter().any(|v| !v.is_finite());
    let (i, value) = if overflow {
        let i = per_cube.iter().position(|v| !v.is_finite()).unwrap_or(0);
        (i, f64::INFINITY)
    } else {
        argmax(&per_cube).ok_or(Error::EmptyFamily)?
    };
    Ok(ApEstimate {
        p,
        value,
        attained: fam.cubes()[i].clone(),
        dual_integrable: dual.locally_integrable(),
        overflow,
        family_len: fam.len(),
    })
}

/// Dense oracle for `n = 1`: the A_p quotient over every run of consecutive
/// cells, `O(N^2)`.
pub fn ap_constant_dense(w: &Weight, p: f64, d: &Domain) -> Result<f64> {
    check_p(p)?;
    d.check_dim(1)?;
    let dual = w.pow_unchecked(1.0 - conjugate(p));
    let wm = w.cell_masses(d)?;
    let vm = dual.cell_masses(d)?;
    let prefix = |m: &[f64]| {
        let mut s = Vec::with_capacity(m.len() + 1);
        s.push(0.0);
        for v in m {
            s.push(s.last().unwrap() + v);
        }
        s
    };
    let (sw, sv) = (prefix(&wm), prefix(&vm));
    let h = d.spacing();
    let n = d.points_per_axis();
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut m = 0.0f64;
            for j in i..n {
                let q = (j - i + 1) as f64 * h;
                let v = ((sw[j + 1] - sw[i]) / q) * ((sv[j + 1] - sv[i]) / q).powf(p - 1.0);
                m = m.max(v);
            }
            m
        })
        .collect::<Vec<_>>();
    Ok(best.into_iter().fold(0.0, f64::max))
}

/// A_p estimates at several finest scales, with the grid refined alongside
/// so the finest cube always spans `cells_at_finest` cells per axis.
#[derive(Debug, Clone)]
pub struct ApProfile {
    pub levels: Vec<(i32, Domain, ApEstimate)>,
}

impl ApProfile {
    /// Ratios of consecutive estimates.
    pub fn growth_factors(&self) -> Vec<f64> {
        self.levels.windows(2).map(|w| w[1].2.value / w[0].2.value).collect()
    }

    /// Largest relative deviation from the first level.
    pub fn spread(&self) -> f64 {
        let first = self.levels[0].2.value;
        self.levels.iter().map(|l| (l.2.value / first - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn dual_integrable(&self) -> bool {
        self.levels.iter().all(|l| l.2.dual_integrable)
    }
}

pub fn ap_refinement_profile(
    w: &Weight,
    p: f64,
    n: usize,
    half_width: f64,
    j_min: i32,
    j_maxes: &[i32],
    cells_at_finest: usize,
) -> Result<ApProfile> {
    let mut levels = Vec::with_capacity(j_maxes.len());
    for &j_max in j_maxes {
        let side = 2f64.powi(-j_max + 1);
        let pts = (2.0 * half_width * cells_at_finest as f64 / side).round() as usize;
        let d = Domain::new(n, half_width, pts)?;
        let fam = enumerate_cubes(&d, j_min, j_max)?;
        levels.push((j_max, d, ap_constant(w, p, &fam)?));
    }
    Ok(ApProfile { levels })
}

/// Estimates at several `J_max` on one fixed grid.
pub fn ap_scale_profile(w: &Weight, p: f64, d: &Domain, j_min: i32, j_maxes: &[i32]) -> Result<ApProfile> {
    let mut levels = Vec::with_capacity(j_maxes.len());
    for &j_max in j_maxes {
        let fam = enumerate_cubes(d, j_min, j_max)?;
        levels.push((j_max, *d, ap_constant(w, p, &fam)?));
    }
    Ok(ApProfile { levels })
}

/// Checks `w(Q)/w(S) <= c (|Q|/|S|)^p` for `S ⊆ Q`.
pub fn check_doubling(w: &Weight, d: &Domain, q: &DyadicCube, s: &DyadicCube, p: f64, c: f64) -> Result<VerificationReport> {
    check_p(p)?;
    if !q.contains_cube(s) {
        return Err(Error::Containment(format!("{s} is not inside {q}")));
    }
    let wm = w.cell_masses(d)?;
    let qc = Region::Cube(q.clone()).cells(d)?;
    let sc = Region::Cube(s.clone()).cells(d)?;
    let ratio = qc.sum(d, &wm) / sc.sum(d, &wm);
    let bound = c * (qc.count() as f64 / sc.count() as f64).powf(p);
    Ok(VerificationReport::new("doubling", "doubling of A_p weights", GridMeta::of(d))
        .sides(ratio, bound)
        .constant(c)
        .pass(ratio <= bound * (1.0 + 1e-12))
        .witness(q.to_string())
        .witness(s.to_string()))
}

/// `sup w(Q)/w(2Q)` over family cubes whose double lies inside the domain.
pub fn check_reverse_doubling(w: &Weight, fam: &CubeFamily) -> Result<VerificationReport> {
    let d = fam.domain();
    let wm = w.cell_masses(d)?;
    let mut ratios = Vec::new();
    let mut used = Vec::new();
    for (cube, b) in fam.cubes().iter().zip(fam.boxes()) {
        let twice = cube.dilate(2.0);
        if !twice.inside_domain(d) {
            continue;
        }
        let Some(tb) = twice.index_box(d) else { continue };
        ratios.push(b.sum(d, &wm) / tb.sum(d, &wm));
        used.push(cube);
    }
    let skipped = fam.len() - used.len();
    let (i, sup) = argmax(&ratios).ok_or(Error::EmptyFamily)?;
    Ok(VerificationReport::new("reverse_doubling", "reverse doubling w(Q) <= c w(2Q), c < 1", GridMeta::of(d).with_family(fam))
        .sides(sup, 1.0)
        .constant(sup)
        .pass(sup < 1.0)
        .witness(used[i].to_string())
        .detail("delta", 1.0 - sup)
        .detail("cubes_used", used.len() as f64)
        .detail("cubes_skipped_at_boundary", skipped as f64))
}
