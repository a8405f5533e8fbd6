//! `oar-evalkit`: harmonize label sets, evaluate predictions, run the
//! statistical comparisons, generate splits and host contour review.

mod batch;
mod review;
mod stats;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oar_evalkit::{ErrorClass, OrganSchema};

#[derive(Parser, Debug)]
#[command(name = "oar-evalkit", version, about = "Organ-at-risk contour evaluation toolkit")]
struct Cli {
    /// Worker threads for per-case parallelism (default: all cores).
    #[arg(long, global = true, env = "OAR_EVALKIT_THREADS")]
    threads: Option<usize>,
    /// Print errors to stderr as one JSON object.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Merge, complement and resolve label sets; filter cases.
    Harmonize(batch::HarmonizeArgs),
    /// Compute DSC, HD95 and MSD of predictions against references.
    Evaluate(batch::EvaluateArgs),
    /// Compare two metric tables organ by organ.
    Compare(stats::CompareArgs),
    /// Rank-sum tests between case subgroups.
    Subgroup(stats::SubgroupArgs),
    /// Seeded patient-level train/val/test splits.
    Split(stats::SplitArgs),
    /// Keep the largest connected component of every predicted label.
    Postprocess(batch::PostprocessArgs),
    /// Clinician review: select cases, serve the review UI, submit and
    /// summarize scores.
    Review(review::ReviewArgs),
    /// Print the built-in organ schema as JSON.
    Schema,
}

#[derive(Args, Debug, Clone)]
pub struct SchemaArg {
    /// Organ schema JSON (default: the manifest's schema_ref, else built in).
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

impl SchemaArg {
    pub fn load(&self, manifest: Option<(&oar_evalkit::Manifest, &Path)>) -> Result<OrganSchema, Failure> {
        if let Some(p) = &self.schema {
            return Ok(OrganSchema::load(p)?);
        }
        match manifest {
            Some((m, path)) => Ok(OrganSchema::resolve(&m.schema_ref, path.parent())?),
            None => Ok(OrganSchema::default()),
        }
    }
}

/// A failure with its exit-code class.
#[derive(Debug)]
pub struct Failure {
    pub class: ErrorClass,
    pub message: String,
}

impl Failure {
    pub fn new(class: ErrorClass, message: impl Into<String>) -> Failure {
        Failure {
            class,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Failure {
        Failure::new(ErrorClass::Validation, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<oar_evalkit::Error> for Failure {
    fn from(e: oar_evalkit::Error) -> Failure {
        Failure::new(e.class(), e.to_string())
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| oar_evalkit::Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| oar_evalkit::Error::io(path, e).into())
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(oar_evalkit::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(ErrorClass::Computation, e.to_string()))?;
    }
    match cli.command {
        Command::Harmonize(a) => batch::harmonize(a),
        Command::Evaluate(a) => batch::evaluate(a),
        Command::Compare(a) => stats::compare(a),
        Command::Subgroup(a) => stats::subgroup(a),
        Command::Split(a) => stats::split(a),
        Command::Postprocess(a) => batch::postprocess(a),
        Command::Review(a) => review::review(a),
        Command::Schema => {
            print!("{}", OrganSchema::default().to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ErrorClass::Validation.exit_code()
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let json_errors = cli.json_errors;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.class.exit_code();
            if json_errors {
                let doc = serde_json::json!({ "error": f.message, "class": f.class, "exit_code": code });
                eprintln!("{doc}");
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(code as u8)
        }
    }
}
