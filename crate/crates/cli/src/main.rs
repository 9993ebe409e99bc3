//! `fpplab <subcommand> [--config FILE] [--seed N] [--out PATH] [--workers W]`
//!
//! Parameters come from the `[params]` table of the config file, overridden
//! by flags. Exit codes: 0 success, 1 runtime failure, 2 invalid input,
//! 3 conditioning too rare, 4 state grid over its cap.

mod commands;
mod params;
mod record;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use fpplab::{Exec, FppError};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use commands::{run, Experiment};
use record::{Body, RunRecord, VERSION};

#[derive(Parser)]
#[command(name = "fpplab", version, about = "First-passage percolation and conditioned random sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with `seed`, `workers`, `out`, `csv` and a `[params]` table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where to write the JSON-lines record; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Where to write the CSV table of partition.q.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    #[command(flatten)]
    Run(Experiment),
    /// Reruns every record in a JSON-lines file and checks the payloads match.
    Replay {
        #[arg(long)]
        record: PathBuf,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Option<String>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Core(FppError),
    Runtime(String),
}

impl From<FppError> for Failure {
    fn from(e: FppError) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 1,
            Failure::Core(e) => match e {
                FppError::ConditioningTooRare { .. } => 3,
                FppError::GridOverflow { .. } => 4,
                FppError::UndecidableTail(_) => 1,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k, strip_nulls(v))).collect()),
        v => v,
    }
}

fn read_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

/// Lays the flags over the config file's params and revalidates the result.
fn merge(exp: &Experiment, file: &FileConfig) -> Result<Experiment, Failure> {
    let cli = strip_nulls(serde_json::to_value(exp).expect("params serialize"));
    let name = cli["subcommand"].as_str().expect("tagged").to_string();
    if let Some(s) = &file.subcommand {
        if *s != name {
            return Err(Failure::Validation(format!("config is for {s}, not {name}")));
        }
    }
    let mut params: Map<String, Value> = match serde_json::to_value(&file.params) {
        Ok(Value::Object(m)) => m,
        _ => return Err(Failure::Validation("params must be a table".into())),
    };
    if let Some(Value::Object(flags)) = cli.get("params") {
        params.extend(flags.clone());
    }
    serde_json::from_value(json!({ "subcommand": name, "params": params }))
        .map_err(|e| Failure::Validation(format!("{name}: {e}")))
}

fn exec_for(workers: Option<usize>) -> Exec {
    workers.map_or_else(Exec::parallel, Exec::with_workers)
}

fn execute(exp: &Experiment, seed: u64, exec: Exec) -> Result<(RunRecord, Option<String>), Failure> {
    let start = Instant::now();
    let out = run(exp, seed, exec)?;
    let mut config = strip_nulls(serde_json::to_value(exp).expect("params serialize"));
    config["seed"] = json!(seed);
    let body = Body {
        version: VERSION.to_string(),
        config,
        seed_schedule: record::seed_schedule(seed),
        payload: out.payload,
    };
    Ok((RunRecord::new(body, start.elapsed().as_secs_f64()), out.csv))
}

fn write_lines(out: Option<&Path>, lines: &[String]) -> Result<(), Failure> {
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn replay(path: &Path, workers: Option<usize>) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let at = format!("{}:{}", path.display(), i + 1);
        let stored: RunRecord =
            serde_json::from_str(line).map_err(|e| Failure::Validation(format!("{at}: not a run record: {e}")))?;
        if record::checksum(&stored.body) != stored.checksum {
            return Err(Failure::Runtime(format!("{at}: checksum mismatch; the record was modified")));
        }
        if stored.body.version != VERSION {
            return Err(Failure::Runtime(format!(
                "{at}: recorded with {}, this is {VERSION}; refusing to replay",
                stored.body.version
            )));
        }
        let config = &stored.body.config;
        let seed = config["seed"]
            .as_u64()
            .ok_or_else(|| Failure::Validation(format!("{at}: config has no seed")))?;
        let mut tagged = config.clone();
        tagged.as_object_mut().expect("object").remove("seed");
        let exp: Experiment =
            serde_json::from_value(tagged).map_err(|e| Failure::Validation(format!("{at}: {e}")))?;
        let (fresh, _) = execute(&exp, seed, exec_for(workers))?;
        let want = serde_json::to_string(&stored.body.payload).expect("serializes");
        let got = serde_json::to_string(&fresh.body.payload).expect("serializes");
        if want != got {
            return Err(Failure::Runtime(format!("{at}: replayed payload differs from the record")));
        }
        lines.push(fresh.to_line());
    }
    Ok(lines)
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    let file = read_config(cli.config.as_deref())?;
    let workers = cli.workers.or(file.workers);
    if workers == Some(0) {
        return Err(Failure::Validation("workers must be at least 1".into()));
    }
    let out = cli.out.clone().or(file.out.clone());
    match &cli.command {
        Command::Replay { record } => {
            let lines = replay(record, workers)?;
            write_lines(out.as_deref(), &lines)
        }
        Command::Run(exp) => {
            let exp = merge(exp, &file)?;
            let csv_path = cli.csv.clone().or(file.csv.clone());
            if csv_path.is_some() && !matches!(exp, Experiment::PartitionQ(_)) {
                return Err(Failure::Validation("--csv only applies to partition.q".into()));
            }
            let seed = cli.seed.or(file.seed).unwrap_or(1);
            let (rec, csv) = execute(&exp, seed, exec_for(workers))?;
            if let (Some(path), Some(csv)) = (&csv_path, csv) {
                fs::write(path, csv).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            }
            write_lines(out.as_deref(), &[rec.to_line()])
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fpplab: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
