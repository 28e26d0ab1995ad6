//! Seeded test-function corpora.
//!
//! Members are drawn as continuum objects (cubes, bump centers, breakpoints)
//! and only then sampled, so the same spec on a refined grid yields the same
//! functions at higher resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cube::{pow2, AxisBox, DyadicCube};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    CubeIndicator,
    Bump,
    PiecewiseConstant,
    Witness,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 4] =
        [FunctionKind::CubeIndicator, FunctionKind::Bump, FunctionKind::PiecewiseConstant, FunctionKind::Witness];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub size: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<FunctionKind>,
}

fn default_kinds() -> Vec<FunctionKind> {
    FunctionKind::ALL.to_vec()
}

impl CorpusSpec {
    pub fn new(seed: u64, size: usize) -> Self {
        Self { seed, size, kinds: default_kinds() }
    }

    pub fn with_kinds(mut self, kinds: &[FunctionKind]) -> Self {
        self.kinds = kinds.to_vec();
        self
    }
}

/// Continuum description of one member.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Indicator(DyadicCube),
    /// `(1 + a·(x-c)_0/ρ)(1 - |x-c|²/ρ²)²` inside the ball of radius `ρ`.
    Bump { center: Vec<f64>, radius: f64, tilt: f64 },
    /// Values on the cells of a uniform partition of `[-a, a]^n` with step `step`.
    PiecewiseConstant { half_width: f64, step: f64, values: Vec<f64> },
    /// `Σ_l λ_l 2^{l n / 4} χ_{Q_l}`.
    Witness { signs: Vec<i8> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusMember {
    pub label: String,
    pub kind: FunctionKind,
    pub shape: Shape,
    /// Box outside which the member vanishes.
    pub support: AxisBox,
    pub function: GridFunction,
}

/// Deepest witness cube used in corpora.
pub const CORPUS_WITNESS_DEPTH: i32 = 5;

impl Shape {
    pub fn support(&self, n: usize) -> AxisBox {
        match self {
            Shape::Indicator(c) => c.bounds(),
            Shape::Bump { center, radius, .. } => AxisBox::around(center, 2.0 * radius, false),
            Shape::PiecewiseConstant { half_width, .. } => AxisBox::around(&vec![0.0; n], 2.0 * half_width, false),
            Shape::Witness { .. } => AxisBox::around(&vec![0.5; n], 1.0, false),
        }
    }

    pub fn sample(&self, d: &Domain) -> Result<GridFunction> {
        let n = d.n();
        match self {
            Shape::Indicator(c) => {
                let mut out = vec![0.0; d.cell_count()];
                if let Some(b) = c.bounds().index_box(d) {
                    b.for_each(d, |i| out[i] = 1.0);
                }
                GridFunction::new(*d, out)
            }
            Shape::Bump { center, radius, tilt } => GridFunction::from_fn(*d, |x| {
                let t2: f64 = (0..n).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>() / (radius * radius);
                if t2 >= 1.0 {
                    0.0
                } else {
                    (1.0 + tilt * (x[0] - center[0]) / radius) * (1.0 - t2).powi(2)
                }
            }),
            Shape::PiecewiseConstant { half_width, step, values } => {
                let k = (2.0 * half_width / step).round() as usize;
                GridFunction::from_fn(*d, |x| {
                    let mut idx = 0usize;
                    let mut mul = 1usize;
                    for &xa in x.iter().take(n) {
                        let t = ((xa + half_width) / step).floor();
                        if t < 0.0 || t >= k as f64 {
                            return 0.0;
                        }
                        idx += t as usize * mul;
                        mul *= k;
                    }
                    values[idx]
                })
            }
            Shape::Witness { signs } => {
                let mut out = vec![0.0; d.cell_count()];
                for (k, &s) in signs.iter().enumerate() {
                    let l = 2 + k as i32;
                    if pow2(-l) < 2.0 * d.spacing() * (1.0 - 1e-12) {
                        break;
                    }
                    let coef = s as f64 * pow2(l * n as i32).powf(0.25);
                    if let Some(b) = DyadicCube::half_open(l, &vec![2; n]).bounds().index_box(d) {
                        b.for_each(d, |i| out[i] = coef);
                    }
                }
                GridFunction::new(*d, out)
            }
        }
    }
}

fn draw(kind: FunctionKind, d: &Domain, rng: &mut ChaCha8Rng) -> Shape {
    let n = d.n();
    let l = d.half_width();
    match kind {
        FunctionKind::CubeIndicator => {
            let j: i32 = rng.gen_range(0..=3);
            let m_max = ((pow2(j) * l / 2.0) as i64 - 1).max(0);
            let m: Vec<i64> = (0..n).map(|_| rng.gen_range(-m_max..=m_max)).collect();
            Shape::Indicator(DyadicCube::closed(j, &m))
        }
        FunctionKind::Bump => {
            let radius = [0.25, 0.5, 1.0, 2.0][rng.gen_range(0..4)];
            let span = (l / 4.0 * 16.0) as i64;
            let center = (0..n).map(|_| rng.gen_range(-span..=span) as f64 / 16.0).collect();
            let tilt = rng.gen_range(-0.5..=0.5);
            Shape::Bump { center, radius, tilt }
        }
        FunctionKind::PiecewiseConstant => {
            let step = pow2(-(rng.gen_range(0..=2)));
            let half_width = 2f64.min(l / 2.0);
            let k = (2.0 * half_width / step).round() as usize;
            let values = (0..k.pow(n as u32)).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            Shape::PiecewiseConstant { half_width, step, values }
        }
        FunctionKind::Witness => {
            let signs = (2..=CORPUS_WITNESS_DEPTH).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            Shape::Witness { signs }
        }
    }
}

/// Members cycle through `spec.kinds`; a member that samples to zero on the
/// grid is redrawn.
pub fn generate_corpus(spec: &CorpusSpec, d: &Domain) -> Result<Vec<CorpusMember>> {
    if spec.size > 0 && spec.kinds.is_empty() {
        return Err(Error::InvalidParameter("corpus kinds list is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.size);
    for i in 0..spec.size {
        let kind = spec.kinds[i % spec.kinds.len()];
        let mut tries = 0;
        loop {
            let shape = draw(kind, d, &mut rng);
            let function = shape.sample(d)?;
            tries += 1;
            if !function.is_zero() || tries >= 64 {
                out.push(CorpusMember {
                    label: format!("{i}:{kind:?}"),
                    kind,
                    support: shape.support(d.n()),
                    shape,
                    function,
                });
                break;
            }
        }
    }
    Ok(out)
}

/// Just the sampled functions.
pub fn corpus_functions(spec: &CorpusSpec, d: &Domain) -> Result<Vec<GridFunction>> {
    Ok(generate_corpus(spec, d)?.into_iter().map(|m| m.function).collect())
}

/// Hash over the member hashes, in order.
pub fn corpus_hash(functions: &[GridFunction]) -> String {
    let mut h = Sha256::new();
    for f in functions {
        h.update(f.content_hash().as_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_gives_empty_corpus() {
        let d = Domain::new(1, 8.0, 256).unwrap();
        assert!(generate_corpus(&CorpusSpec::new(1, 0), &d).unwrap().is_empty());
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let d = Domain::new(1, 8.0, 1024).unwrap();
        let a = corpus_functions(&CorpusSpec::new(7, 12), &d).unwrap();
        let b = corpus_functions(&CorpusSpec::new(7, 12), &d).unwrap();
        let c = corpus_functions(&CorpusSpec::new(8, 12), &d).unwrap();
        assert_eq!(corpus_hash(&a), corpus_hash(&b));
        assert_ne!(corpus_hash(&a), corpus_hash(&c));
    }

    #[test]
    fn members_vanish_outside_support() {
        for d in [Domain::new(1, 8.0, 1024).unwrap(), Domain::new(2, 4.0, 128).unwrap()] {
            for m in generate_corpus(&CorpusSpec::new(3, 24), &d).unwrap() {
                assert!(!m.function.is_zero(), "{}", m.label);
                let inside = m.support.index_box(&d).unwrap();
                for (idx, v) in m.function.samples().iter().enumerate() {
                    if !inside.contains(d.unravel(idx)) {
                        assert_eq!(*v, 0.0, "{} leaks at {idx}", m.label);
                    }
                }
            }
        }
    }

    #[test]
    fn refinement_keeps_the_same_shapes() {
        let d = Domain::new(1, 8.0, 1024).unwrap();
        let a = generate_corpus(&CorpusSpec::new(5, 8), &d).unwrap();
        let b = generate_corpus(&CorpusSpec::new(5, 8), &d.refined()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.shape, y.shape);
        }
    }
}
