//! Orchestration: runs the selected checks, writes one JSON report per
//! check and a summary table.

use std::fs;
use std::path::Path;

use morrey_core::corpus::{corpus_hash, generate_corpus};
use morrey_core::report::fmt17;
use morrey_core::VerificationReport;
use rayon::prelude::*;
use serde_json::json;

use crate::checks::run_check;
use crate::config::{Check, CheckKind, Setup};
use crate::error::{CliError, Status};

/// Which checks a subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Ap,
    Norm,
    Predual,
    Operator,
    Extrapolate,
    All,
}

impl Selection {
    pub fn includes(self, kind: &CheckKind) -> bool {
        use CheckKind as K;
        match self {
            Selection::All => true,
            Selection::Ap => matches!(kind, K::Ap { .. } | K::ReverseDoubling {}),
            Selection::Norm => matches!(kind, K::Embedding { .. }),
            Selection::Predual => matches!(kind, K::Holder { .. } | K::Bracket { .. } | K::PredualBoundedness { .. }),
            Selection::Operator => matches!(kind, K::OperatorNorm { .. } | K::Rdf { .. }),
            Selection::Extrapolate => matches!(kind, K::Extrapolation { .. }),
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub reports: Vec<VerificationReport>,
    /// Set when a check aborted; the reports before it were still written.
    pub error: Option<CliError>,
}

impl Outcome {
    pub fn status(&self) -> Status {
        match &self.error {
            Some(e) => e.status(),
            None if self.reports.iter().all(|r| r.pass) => Status::Ok,
            None => Status::FailedCheck,
        }
    }
}

/// Runs the selected checks in declared order. With `parallel` the checks
/// run concurrently; results are identical because every check is
/// deterministic on its own.
pub fn run_checks(s: &Setup, sel: Selection, parallel: bool) -> Result<Outcome, CliError> {
    let chosen: Vec<&Check> = s.checks.iter().filter(|c| sel.includes(&c.kind)).collect();
    let results: Vec<_> = if parallel {
        chosen.par_iter().map(|c| run_check(s, c)).collect()
    } else {
        let mut out = Vec::with_capacity(chosen.len());
        for c in &chosen {
            let r = run_check(s, c);
            let stop = r.is_err();
            out.push(r);
            if stop {
                break;
            }
        }
        out
    };
    let mut reports = Vec::new();
    let mut error = None;
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                error = Some(CliError::from_core(e));
                break;
            }
        }
    }
    write_reports(&s.out, &reports)?;
    Ok(Outcome { reports, error })
}

pub fn write_reports(dir: &Path, reports: &[VerificationReport]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for r in reports {
        fs::write(dir.join(format!("{}.json", r.check_id)), r.to_json() + "\n")?;
    }
    let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(csv_err)?;
    w.write_record(["check_id", "pass", "left", "right", "constant", "runtime_s", "anchor"]).map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.check_id.as_str(),
            if r.pass { "true" } else { "false" },
            &fmt17(r.left),
            &fmt17(r.right),
            &fmt17(r.constant),
            &fmt17(r.runtime_s),
            &r.anchor,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Writes `corpus.csv` (cell centers, then one column per member) and
/// `corpus.json` (member descriptions and hashes).
pub fn write_corpus(s: &Setup) -> Result<usize, CliError> {
    let d = &s.domain;
    let members = generate_corpus(&s.corpus, d).map_err(CliError::from_core)?;
    fs::create_dir_all(&s.out)?;
    let mut w = csv::Writer::from_path(s.out.join("corpus.csv")).map_err(csv_err)?;
    let mut header: Vec<String> = (0..d.n()).map(|a| format!("x{a}")).collect();
    header.extend((0..members.len()).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..d.cell_count() {
        let x = d.cell_center(i);
        let mut row: Vec<String> = x[..d.n()].iter().map(|v| fmt17(*v)).collect();
        row.extend(members.iter().map(|m| fmt17(m.function.samples()[i])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    let functions: Vec<_> = members.iter().map(|m| m.function.clone()).collect();
    let desc = json!({
        "seed": s.corpus.seed,
        "size": s.corpus.size,
        "hash": corpus_hash(&functions),
        "grid": { "n": d.n(), "half_width": d.half_width(), "points_per_axis": d.points_per_axis() },
        "members": members.iter().map(|m| json!({
            "label": m.label,
            "kind": m.kind,
            "support_lo": &m.support.lo[..d.n()],
            "support_hi": &m.support.hi[..d.n()],
            "hash": m.function.content_hash(),
        })).collect::<Vec<_>>(),
    });
    fs::write(s.out.join("corpus.json"), serde_json::to_string_pretty(&desc).expect("corpus serializes") + "\n")?;
    Ok(members.len())
}
