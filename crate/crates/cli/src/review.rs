use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Subcommand};
use oar_evalkit::report::{likert_summarize, parse_likert_lines, ScoreSubmission};
use oar_evalkit::review::{LikertReport, USABILITY_RULE};
use oar_evalkit::stats::sample_cases;
use oar_evalkit::{load_manifest, Error, ErrorClass};
use oar_evalkit_client::{ClientError, ReviewClient};
use oar_evalkit_service::{AppState, ServiceConfig};

use crate::{to_json, write_file, Failure, SchemaArg};

#[derive(Args, Debug)]
pub struct ReviewArgs {
    #[command(subcommand)]
    command: ReviewCommand,
}

#[derive(Subcommand, Debug)]
enum ReviewCommand {
    /// Randomly pick cases for review (seeded).
    Select {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 15)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON list of selected case ids.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the review service.
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        schema: SchemaArg,
        /// Labels to review, `<case_id>.nii.gz` (default: manifest multilabel).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// JSON-lines score file; created if missing, replayed if present.
        #[arg(long)]
        scores: PathBuf,
        /// Selection written by `review select`.
        #[arg(long)]
        cases: Option<PathBuf>,
        /// Built frontend assets.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = oar_evalkit::review::DEFAULT_WINDOW)]
        window: f64,
        #[arg(long, default_value_t = oar_evalkit::review::DEFAULT_LEVEL)]
        level: f64,
    },
    /// Submit one score to a running service.
    Score {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
        #[arg(long = "case")]
        case_id: String,
        #[arg(long)]
        organ: String,
        #[arg(long)]
        score: i64,
        #[arg(long)]
        rater: String,
        #[arg(long)]
        comment: Option<String>,
    },
    /// Likert summaries from a running service, or replayed from a score file.
    Summary {
        #[arg(long, default_value = "http://127.0.0.1:8080", conflicts_with = "scores")]
        url: String,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn client_failure(e: ClientError) -> Failure {
    let class = match e.status() {
        Some(s) if s.is_client_error() => ErrorClass::Validation,
        Some(_) => ErrorClass::Computation,
        None => ErrorClass::Io,
    };
    Failure::new(class, e.to_string())
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new(ErrorClass::Io, e.to_string()))
}

pub fn review(args: ReviewArgs) -> Result<(), Failure> {
    match args.command {
        ReviewCommand::Select { manifest, n, seed, out } => {
            let m = load_manifest(&manifest)?;
            let ids: Vec<String> = m.cases.iter().map(|c| c.case_id.clone()).collect();
            let picked = sample_cases(&ids, n, seed);
            write_file(&out, to_json(&picked)?)?;
            println!("selected {} of {} cases", picked.len(), ids.len());
            Ok(())
        }
        ReviewCommand::Serve {
            manifest,
            schema,
            labels,
            scores,
            cases,
            static_dir,
            addr,
            window,
            level,
        } => {
            let m = load_manifest(&manifest)?;
            let schema = schema.load(Some((&m, &manifest)))?;
            let cases = match cases {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    Some(serde_json::from_str::<Vec<String>>(&text).map_err(Error::from)?)
                }
                None => None,
            };
            let mut config = ServiceConfig::new(m, schema, scores);
            config.labels_dir = labels;
            config.static_dir = static_dir;
            config.cases = cases;
            config.window = window;
            config.level = level;
            let state = Arc::new(AppState::new(config)?);
            runtime()?.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .map_err(|e| Failure::new(ErrorClass::Io, format!("binding {addr}: {e}")))?;
                println!(
                    "review service on http://{}",
                    listener
                        .local_addr()
                        .map_err(|e| Failure::new(ErrorClass::Io, e.to_string()))?
                );
                oar_evalkit_service::serve(state, listener)
                    .await
                    .map_err(|e| Failure::new(ErrorClass::Io, e.to_string()))
            })
        }
        ReviewCommand::Score {
            url,
            case_id,
            organ,
            score,
            rater,
            comment,
        } => {
            let sub = ScoreSubmission {
                rater_id: rater,
                organ,
                score,
                comment,
            };
            let record = runtime()?
                .block_on(ReviewClient::new(url).submit_score(&case_id, &sub))
                .map_err(client_failure)?;
            println!("{}", serde_json::to_string(&record).map_err(Error::from)?);
            Ok(())
        }
        ReviewCommand::Summary { url, scores, out } => {
            let report = match scores {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    let (records, rejected) = parse_likert_lines(&text);
                    for r in &rejected {
                        eprintln!("skipped {}", r);
                    }
                    LikertReport {
                        summaries: likert_summarize(&records),
                        n_records: records.len(),
                        usability_rule: USABILITY_RULE.into(),
                    }
                }
                None => runtime()?
                    .block_on(ReviewClient::new(url).likert_summary())
                    .map_err(client_failure)?,
            };
            match out {
                Some(p) => write_file(&p, to_json(&report)?)?,
                None => print!("{}", to_json(&report)?),
            }
            Ok(())
        }
    }
}
