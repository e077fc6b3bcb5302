//! Offline replay of exported session logs: final state, metrics and an
//! optional per-operation visualization trajectory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::Parser;
use thiserror::Error;
use translucent_core::corpus::CorpusError;
use translucent_core::metrics::{analyze, AnalyzeOptions};
use translucent_core::sync::{LogError, ReplayError};
use translucent_core::{Corpus, SessionLog};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";
pub const STATE_FILE: &str = "state.json";

#[derive(Debug, Clone, Parser)]
#[command(
    name = "translucent-replay",
    version,
    about = "Replay a session log and report metrics"
)]
pub struct ReplayArgs {
    /// Exported session log (JSON lines).
    #[arg(long)]
    pub log: PathBuf,
    /// Corpus directory containing manifest.json.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory for report.json, summary.txt and the optional outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the visualization after every sampled operation.
    #[arg(long)]
    pub trajectory: bool,
    /// Sample every k-th operation for the trajectory.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub sample_every: u64,
    /// Write the final workspace state.
    #[arg(long)]
    pub dump_state: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    CorpusMismatch(ReplayError),
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::CorpusMismatch(_) => 3,
            CliError::MalformedLog(_) => 4,
            CliError::Corpus(_) | CliError::Io { .. } => 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: String,
    pub written: Vec<PathBuf>,
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

fn read_log(path: &Path) -> Result<SessionLog, CliError> {
    SessionLog::read(path).map_err(|e| match e {
        LogError::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::MalformedLog(other.to_string()),
    })
}

pub fn run(args: &ReplayArgs) -> Result<RunOutput, CliError> {
    if args.out.is_none() && (args.trajectory || args.dump_state) {
        return Err(CliError::Usage(
            "--trajectory and --dump-state need --out".into(),
        ));
    }
    let corpus = Corpus::load(&args.corpus)?;
    let log = read_log(&args.log)?;
    let options = AnalyzeOptions {
        trajectory: args.trajectory,
        sample_every: args.sample_every,
    };
    let analysis = analyze(&log, &corpus, options).map_err(|e| match e {
        ReplayError::CorpusMismatch { .. } => CliError::CorpusMismatch(e),
        other => CliError::MalformedLog(other.to_string()),
    })?;
    let summary = analysis.report.summary_text();

    let mut written = Vec::new();
    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(|source| CliError::Io {
            path: out.clone(),
            source,
        })?;
        write(
            out.join(REPORT_FILE),
            &analysis.report.to_json(),
            &mut written,
        )?;
        write(out.join(SUMMARY_FILE), &summary, &mut written)?;
        if args.trajectory {
            let mut lines = String::new();
            for step in &analysis.trajectory {
                lines.push_str(&serde_json::to_string(step).expect("trajectory serializes"));
                lines.push('\n');
            }
            write(out.join(TRAJECTORY_FILE), &lines, &mut written)?;
        }
        if args.dump_state {
            let mut state =
                serde_json::to_string_pretty(&analysis.final_state).expect("state serializes");
            state.push('\n');
            write(out.join(STATE_FILE), &state, &mut written)?;
        }
    }
    Ok(RunOutput { summary, written })
}
