//! Experiment configuration: a TOML file, parsed fail-closed and validated
//! against the parameter ranges of the core crate.

use std::path::{Path, PathBuf};

use morrey_core::corpus::{CorpusSpec, FunctionKind};
use morrey_core::cube::{enumerate_cubes, finest_scale};
use morrey_core::predual::{check_duality, PredualParams};
use morrey_core::{CubeFamily, Domain, MorreyParams, Operator, Weight, WeightSpec};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub operators: Vec<String>,
    pub domain: DomainSpec,
    #[serde(default)]
    pub scales: ScaleSpec,
    pub weight: WeightSpec,
    pub morrey: MorreySpec,
    pub predual: Option<PredualSpec>,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub n: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    pub points: usize,
}

fn default_half_width() -> f64 {
    8.0
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    /// Defaults to the scale whose cubes have side `2L`.
    pub j_min: Option<i32>,
    /// Defaults to the finest scale the grid resolves.
    pub j_max: Option<i32>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MorreySpec {
    pub p: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PredualSpec {
    pub p: f64,
    pub varrho: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(default = "default_corpus_size")]
    pub size: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<FunctionKind>,
}

fn default_corpus_size() -> usize {
    8
}

fn default_kinds() -> Vec<FunctionKind> {
    FunctionKind::ALL.to_vec()
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { size: default_corpus_size(), kinds: default_kinds() }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("reports")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Lp,
    Morrey,
    Predual,
}

/// One requested check. Optional fields fall back to the defaults listed
/// in the README.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckKind {
    Ap { p: Option<f64>, tol: Option<f64> },
    ReverseDoubling {},
    Embedding { p_tilde: Option<f64> },
    Holder { depth: Option<u32> },
    Bracket { depth: Option<u32>, max_ratio: Option<f64>, duality_size: Option<usize> },
    OperatorNorm { operator: String, space: SpaceKind, depth: Option<u32>, tol: Option<f64> },
    Extrapolation { operator: String, p1: Option<f64> },
    PredualBoundedness { operator: String, depth: Option<u32> },
    Rdf { k: Option<usize> },
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Ap { .. } => "ap",
            CheckKind::ReverseDoubling {} => "reverse_doubling",
            CheckKind::Embedding { .. } => "embedding",
            CheckKind::Holder { .. } => "holder",
            CheckKind::Bracket { .. } => "bracket",
            CheckKind::OperatorNorm { .. } => "operator_norm",
            CheckKind::Extrapolation { .. } => "extrapolation",
            CheckKind::PredualBoundedness { .. } => "predual_boundedness",
            CheckKind::Rdf { .. } => "rdf",
        }
    }

    pub fn operator(&self) -> Option<&str> {
        match self {
            CheckKind::OperatorNorm { operator, .. } | CheckKind::Extrapolation { operator, .. } | CheckKind::PredualBoundedness { operator, .. } => {
                Some(operator)
            }
            _ => None,
        }
    }

    fn needs_predual(&self) -> bool {
        matches!(
            self,
            CheckKind::Holder { .. } | CheckKind::Bracket { .. } | CheckKind::PredualBoundedness { .. } | CheckKind::OperatorNorm { space: SpaceKind::Predual, .. }
        )
    }
}

/// A check with its report id. Deserialized in two steps so that the
/// `id` key can sit next to the kind-specific keys without giving up
/// unknown-key rejection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSpec {
    pub id: Option<String>,
    #[serde(flatten)]
    pub kind: CheckKind,
}

impl<'de> Deserialize<'de> for CheckSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut table = toml::Table::deserialize(d)?;
        let id = match table.remove("id") {
            None => None,
            Some(toml::Value::String(s)) => Some(s),
            Some(other) => return Err(serde::de::Error::custom(format!("check id must be a string, got {other}"))),
        };
        let kind = toml::Value::Table(table).try_into().map_err(serde::de::Error::custom)?;
        Ok(Self { id, kind })
    }
}

/// A check ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub kind: CheckKind,
    pub operator: Option<Operator>,
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct Setup {
    pub seed: u64,
    pub domain: Domain,
    pub family: CubeFamily,
    pub weight: Weight,
    pub morrey: MorreyParams,
    pub predual: Option<PredualParams>,
    pub corpus: CorpusSpec,
    pub operators: Vec<Operator>,
    pub checks: Vec<Check>,
    pub refine: u32,
    pub out: PathBuf,
}

/// Refinement levels above this would exhaust memory on 2D grids.
pub const MAX_REFINE: u32 = 4;
pub const MAX_DEPTH: u32 = 12;

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub refine: Option<u32>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self, ov: &Overrides) -> Result<Setup, CliError> {
        let bad = |m: String| CliError::Config(m);
        let core = |e: morrey_core::Error| CliError::Config(e.to_string());
        let seed = ov.seed.unwrap_or(self.seed);
        let refine = ov.refine.unwrap_or(2);
        if refine > MAX_REFINE {
            return Err(bad(format!("refine = {refine} exceeds {MAX_REFINE}")));
        }
        let ds = &self.domain;
        let domain = Domain::new(ds.n, ds.half_width, ds.points).map_err(core)?;
        let j_min = self.scales.j_min.unwrap_or(1 - (2.0 * ds.half_width).log2().ceil() as i32);
        let j_max = self.scales.j_max.unwrap_or_else(|| finest_scale(&domain));
        let family = enumerate_cubes(&domain, j_min, j_max).map_err(core)?;
        let weight = self.weight.build(ds.n).map_err(core)?;
        let morrey = MorreyParams::new(self.morrey.p, self.morrey.r, ds.n).map_err(core)?;
        let predual = match &self.predual {
            Some(ps) => {
                let pp = PredualParams::new(ps.p, ps.varrho, ds.n).map_err(core)?;
                check_duality(&morrey, &pp).map_err(core)?;
                Some(pp)
            }
            None => PredualParams::dual_of(&morrey).ok(),
        };
        if self.corpus.size > 0 && self.corpus.kinds.is_empty() {
            return Err(bad("corpus.kinds is empty".into()));
        }
        let corpus = CorpusSpec::new(seed, self.corpus.size).with_kinds(&self.corpus.kinds);

        let mut operators = Vec::with_capacity(self.operators.len());
        for id in &self.operators {
            let op: Operator = id.parse().map_err(core)?;
            if let Some(n) = op.dimension() {
                if n != ds.n {
                    return Err(bad(format!("operator {op} needs n = {n}, domain has n = {}", ds.n)));
                }
            }
            if let Operator::Commutator { inner, .. } = &op {
                if !inner.is_linear() {
                    return Err(bad(format!("operator {op}: inner operator is not linear")));
                }
            }
            operators.push(op);
        }

        let mut checks = Vec::with_capacity(self.checks.len());
        for (i, c) in self.checks.iter().enumerate() {
            let id = c.id.clone().unwrap_or_else(|| format!("{:02}_{}", i + 1, c.kind.name()));
            if id.is_empty() || !id.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                return Err(bad(format!("check id `{id}` must be nonempty and use only [A-Za-z0-9_-]")));
            }
            if checks.iter().any(|k: &Check| k.id == id) {
                return Err(bad(format!("duplicate check id `{id}`")));
            }
            let operator = match c.kind.operator() {
                Some(name) => {
                    let op: Operator = name.parse().map_err(core)?;
                    if !operators.contains(&op) {
                        return Err(bad(format!("check `{id}` uses operator `{name}`, which is not in the operators list")));
                    }
                    Some(op)
                }
                None => None,
            };
            if c.kind.needs_predual() && predual.is_none() {
                return Err(bad(format!("check `{id}` needs a predual space, but r = -n/p has none")));
            }
            validate_kind(&c.kind, &morrey, refine, self.corpus.size, operator.as_ref()).map_err(|m| bad(format!("check `{id}`: {m}")))?;
            checks.push(Check { id, kind: c.kind.clone(), operator });
        }

        Ok(Setup {
            seed,
            domain,
            family,
            weight,
            morrey,
            predual,
            corpus,
            operators,
            checks,
            refine,
            out: ov.out.clone().unwrap_or_else(|| self.output.dir.clone()),
        })
    }
}

fn validate_kind(kind: &CheckKind, mp: &MorreyParams, refine: u32, corpus_size: usize, op: Option<&Operator>) -> Result<(), String> {
    let depth_ok = |d: &Option<u32>| match d {
        Some(d) if *d > MAX_DEPTH => Err(format!("depth {d} exceeds {MAX_DEPTH}")),
        _ => Ok(()),
    };
    let positive = |name: &str, v: &Option<f64>| match v {
        Some(v) if !(v.is_finite() && *v > 0.0) => Err(format!("{name} must be positive, got {v}")),
        _ => Ok(()),
    };
    let exponent = |name: &str, v: &Option<f64>| match v {
        Some(v) if !(v.is_finite() && *v > 1.0) => Err(format!("{name} must lie in (1, inf), got {v}")),
        _ => Ok(()),
    };
    let uses_corpus = !matches!(kind, CheckKind::Ap { .. } | CheckKind::ReverseDoubling {});
    if uses_corpus && corpus_size == 0 {
        return Err("needs a nonempty corpus".into());
    }
    match kind {
        CheckKind::Ap { p, tol } => {
            exponent("p", p)?;
            positive("tol", tol)?;
            if refine == 0 {
                return Err("needs refine >= 1".into());
            }
        }
        CheckKind::ReverseDoubling {} => {}
        CheckKind::Embedding { p_tilde } => {
            let u = -(mp.n() as f64) / mp.r();
            if let Some(pt) = p_tilde {
                if !(*pt >= mp.p() && *pt <= u) {
                    return Err(format!("p_tilde = {pt} must lie in [{}, {u}]", mp.p()));
                }
            }
        }
        CheckKind::Holder { depth } => depth_ok(depth)?,
        CheckKind::Bracket { depth, max_ratio, duality_size } => {
            depth_ok(depth)?;
            match max_ratio {
                Some(m) if !(m.is_finite() && *m >= 1.0) => return Err(format!("max_ratio must be >= 1, got {m}")),
                _ => {}
            }
            if duality_size == &Some(0) {
                return Err("duality_size must be positive".into());
            }
        }
        CheckKind::OperatorNorm { depth, tol, .. } => {
            depth_ok(depth)?;
            positive("tol", tol)?;
        }
        CheckKind::Extrapolation { p1, .. } => exponent("p1", p1)?,
        CheckKind::PredualBoundedness { depth, .. } => {
            depth_ok(depth)?;
            if !matches!(op, Some(Operator::Maximal | Operator::Hilbert | Operator::HilbertMax)) {
                return Err("predual boundedness supports maximal, hilbert and hilbert_max".into());
            }
        }
        CheckKind::Rdf { k } => {
            if k == &Some(0) {
                return Err("k must be at least 1".into());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 1
        operators = ["identity"]
        [domain]
        n = 1
        points = 256
        [weight]
        kind = "constant"
        c = 1.0
        [morrey]
        p = 2.0
        r = -0.25
        [[checks]]
        kind = "holder"
    "#;

    #[test]
    fn minimal_config_validates() {
        let s = ExperimentConfig::parse(MINIMAL).unwrap().validate(&Overrides::default()).unwrap();
        assert_eq!(s.checks.len(), 1);
        assert_eq!(s.checks[0].id, "01_holder");
        assert_eq!(s.family.j_min(), -3);
        assert!(s.predual.is_some());
    }

    #[test]
    fn unknown_keys_and_missing_seed_are_rejected() {
        assert!(ExperimentConfig::parse(&MINIMAL.replace("seed = 1", "")).is_err());
        assert!(ExperimentConfig::parse(&MINIMAL.replace("points = 256", "points = 256\nextra = 3")).is_err());
        assert!(ExperimentConfig::parse(&MINIMAL.replace("kind = \"holder\"", "kind = \"holder\"\np1 = 2.0")).is_err());
        assert!(ExperimentConfig::parse(&MINIMAL.replace("c = 1.0", "c = 1.0\nalpha = 2.0")).is_err());
    }

    #[test]
    fn parameter_ranges_are_revalidated() {
        let v = |text: String| ExperimentConfig::parse(&text).unwrap().validate(&Overrides::default());
        assert!(v(MINIMAL.replace("r = -0.25", "r = -0.75")).is_err());
        assert!(v(MINIMAL.replace("\"identity\"", "\"riesz1\"")).is_err());
        assert!(v(MINIMAL.replace("\"identity\"", "\"commutator:log:maximal\"")).is_err());
        assert!(v(MINIMAL.replace("kind = \"holder\"", "kind = \"operator_norm\"\noperator = \"maximal\"\nspace = \"lp\"")).is_err());
        assert!(v(MINIMAL.replace("r = -0.25", "r = -0.5")).is_err(), "endpoint has no predual");
        assert!(v(MINIMAL.replace("[[checks]]", "[corpus]\nsize = 0\n[[checks]]")).is_err());
    }

    #[test]
    fn overrides_apply() {
        let ov = Overrides { seed: Some(9), out: Some("x".into()), refine: Some(1) };
        let s = ExperimentConfig::parse(MINIMAL).unwrap().validate(&ov).unwrap();
        assert_eq!((s.seed, s.corpus.seed, s.refine), (9, 9, 1));
        assert_eq!(s.out, PathBuf::from("x"));
        assert!(ExperimentConfig::parse(MINIMAL).unwrap().validate(&Overrides { refine: Some(9), ..Default::default() }).is_err());
    }
}
