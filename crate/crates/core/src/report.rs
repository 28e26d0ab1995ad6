//! Structured records of inequality checks and their JSON form.
//!
//! Floating values are written with 17 significant digits so two runs can be
//! compared byte for byte. Non-finite values are written as the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::cube::CubeFamily;
use crate::grid::Domain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n: usize,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub half_width: f64,
    pub points_per_axis: usize,
    pub j_min: Option<i32>,
    pub j_max: Option<i32>,
    pub seed: Option<u64>,
}

impl GridMeta {
    pub fn of(d: &Domain) -> Self {
        Self {
            n: d.n(),
            half_width: d.half_width(),
            points_per_axis: d.points_per_axis(),
            j_min: None,
            j_max: None,
            seed: None,
        }
    }

    pub fn with_family(mut self, fam: &CubeFamily) -> Self {
        self.j_min = Some(fam.j_min());
        self.j_max = Some(fam.j_max());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_id: String,
    /// Which inequality or identity the check exercises.
    pub anchor: String,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub left: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub right: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub constant: f64,
    pub pass: bool,
    /// Cube ids and function hashes that attain the reported values.
    pub witnesses: Vec<String>,
    pub grid: GridMeta,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub runtime_s: f64,
    #[serde(serialize_with = "ser_map", deserialize_with = "de_map", default)]
    pub details: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(check_id: impl Into<String>, anchor: impl Into<String>, grid: GridMeta) -> Self {
        Self {
            check_id: check_id.into(),
            anchor: anchor.into(),
            left: 0.0,
            right: 0.0,
            constant: f64::NAN,
            pass: false,
            witnesses: Vec::new(),
            grid,
            runtime_s: 0.0,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn sides(mut self, left: f64, right: f64) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn witness(mut self, w: impl Into<String>) -> Self {
        self.witnesses.push(w.into());
        self
    }

    pub fn detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall-clock runtime blanked, for determinism checks.
    pub fn numeric_json(&self) -> String {
        let mut r = self.clone();
        r.runtime_s = 0.0;
        serde_json::to_string(&r).expect("report serializes")
    }

    /// One line for summary tables and test logs.
    pub fn summary_line(&self) -> String {
        format!(
            "[{}] {}: left = {}, right = {}, constant = {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check_id,
            fmt17(self.left),
            fmt17(self.right),
            fmt17(self.constant)
        )
    }
}

/// Runs `f` and stores the elapsed wall time in the returned report.
pub fn timed<E>(f: impl FnOnce() -> Result<VerificationReport, E>) -> Result<VerificationReport, E> {
    let t = Instant::now();
    let mut r = f()?;
    r.runtime_s = t.elapsed().as_secs_f64();
    Ok(r)
}

/// 17 significant digits, or `inf` / `-inf` / `nan`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub(crate) fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = RawValue::from_string(fmt17(*x)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_str(&fmt17(*x))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

fn parse_num(v: NumOrStr) -> Result<f64, String> {
    match v {
        NumOrStr::Num(x) => Ok(x),
        NumOrStr::Str(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => other.parse().map_err(|_| format!("not a number: {other}")),
        },
    }
}

pub(crate) fn de_f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    parse_num(NumOrStr::deserialize(d)?).map_err(de::Error::custom)
}

fn ser_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    struct V(f64);
    impl Serialize for V {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_f64(&self.0, s)
        }
    }
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &V(*v))?;
    }
    map.end()
}

fn de_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    let raw: BTreeMap<String, NumOrStr> = BTreeMap::deserialize(d)?;
    raw.into_iter().map(|(k, v)| parse_num(v).map(|x| (k, x)).map_err(de::Error::custom)).collect()
}
