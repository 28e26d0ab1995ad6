use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use morrey_cli::{run_checks, write_corpus, CliError, ExperimentConfig, Overrides, Selection, Status};

#[derive(Parser)]
#[command(name = "morrey", version, about = "Weighted Morrey space experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// A_p constants and reverse doubling.
    Ap(Common),
    /// Morrey norm embeddings.
    Norm(Common),
    /// Hölder pairings, predual brackets and predual boundedness.
    Predual(Common),
    /// Operator norm estimates and the Rubio de Francia iteration.
    Operator(Common),
    /// Extrapolation constants.
    Extrapolate(Common),
    /// Every configured check.
    Report(Common),
    /// Writes the seeded test-function corpus as CSV and JSON.
    Corpus(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid refinements used by refinement-stability checks (default 2).
    #[arg(long)]
    refine: Option<u32>,
    /// Runs checks concurrently instead of one after another.
    #[arg(long)]
    parallel_checks: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sel, args) = match cli.command {
        Command::Ap(a) => (Some(Selection::Ap), a),
        Command::Norm(a) => (Some(Selection::Norm), a),
        Command::Predual(a) => (Some(Selection::Predual), a),
        Command::Operator(a) => (Some(Selection::Operator), a),
        Command::Extrapolate(a) => (Some(Selection::Extrapolate), a),
        Command::Report(a) => (Some(Selection::All), a),
        Command::Corpus(a) => (None, a),
    };
    match execute(sel, &args) {
        Ok(s) => s.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.status().into()
        }
    }
}

fn execute(sel: Option<Selection>, a: &Common) -> Result<Status, CliError> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let setup = cfg.validate(&Overrides { seed: a.seed, out: a.out.clone(), refine: a.refine })?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| {
        let Some(sel) = sel else {
            let n = write_corpus(&setup)?;
            println!("wrote {n} corpus members to {}", setup.out.display());
            return Ok(Status::Ok);
        };
        let outcome = run_checks(&setup, sel, a.parallel_checks)?;
        for r in &outcome.reports {
            println!("{}", r.summary_line());
        }
        println!("wrote {} reports to {}", outcome.reports.len(), setup.out.display());
        if let Some(e) = &outcome.error {
            eprintln!("error: {e}");
        }
        Ok(outcome.status())
    })
}
