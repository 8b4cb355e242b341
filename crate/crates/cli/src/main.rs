//! `kinschauder`: configuration-driven runner for the kinetic Schauder probes.
//!
//! Exit codes: 0 all asserted checks hold, 1 a check failed, 2 invalid configuration,
//! 3 runtime or numerical failure. Codes 2 and 3 come with a JSON error record on stderr
//! (and in `error.json` when the output directory is writable).

mod config;
mod corpus;
mod experiments;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use kinschauder::kolmogorov::cache_dir_from_env;
use kinschauder::report::{CheckReport, Verdict};

use config::{CachePolicy, ExperimentConfig};
use corpus::{write_json, CorpusSpec};
use experiments::{execute, Table};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const GIT_REV: &str = env!("KINSCHAUDER_GIT_REV");

#[derive(Parser)]
#[command(name = "kinschauder", version, about = "Numerical probes for kinetic Schauder estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on the worker pool.
        #[arg(long)]
        threads: Option<usize>,
        /// Ignore the fundamental-solution cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Generate manufactured-solution bundles from a JSON spec.
    Corpus {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(Vec<String>),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn record(&self) -> Value {
        match self {
            Failure::Config(errs) => json!({ "status": "config_invalid", "exit_code": 2, "errors": errs }),
            Failure::Runtime(msg) => json!({ "status": "runtime_failure", "exit_code": 3, "errors": [msg] }),
        }
    }
}

impl From<kinschauder::Error> for Failure {
    fn from(e: kinschauder::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Serialize)]
struct CacheSummary {
    enabled: bool,
    hits: usize,
    builds: usize,
}

#[derive(Serialize)]
struct RunReport<'a> {
    tool: &'static str,
    version: &'static str,
    git_rev: &'static str,
    config_hash: String,
    name: Option<&'a str>,
    experiment: &'static str,
    seed: u64,
    cache: CacheSummary,
    verdict: Verdict,
    reports: &'a [CheckReport],
}

/// Parse JSON text into `T`, reporting syntax and schema errors as configuration errors.
fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, Value), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Config(vec![format!("invalid JSON: {e}")]))?;
    let parsed = serde_json::from_value(value.clone()).map_err(|e| Failure::Config(vec![e.to_string()]))?;
    Ok((parsed, value))
}

/// SHA-256 of the canonical (key-sorted, compact) form of the configuration.
fn config_hash(v: &Value) -> String {
    format!("{:x}", Sha256::digest(v.to_string().as_bytes()))
}

fn write_table(dir: &Path, t: &Table) -> std::io::Result<()> {
    let mut s = t.header.join(",");
    s.push('\n');
    for row in &t.rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(dir.join(&t.file), s)
}

fn measured_table(reports: &[CheckReport]) -> Table {
    let mut t = Table { file: "measured.csv".into(), header: vec!["report", "key", "value"], rows: Vec::new() };
    for (i, r) in reports.iter().enumerate() {
        for (k, v) in &r.measured {
            t.rows.push(vec![format!("{i}:{}", r.op), k.clone(), format!("{v:?}")]);
        }
    }
    t
}

fn summary(run: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kinschauder {} ({})", run.version, run.git_rev);
    let _ = writeln!(s, "experiment: {}{}", run.experiment, run.name.map(|n| format!(" [{n}]")).unwrap_or_default());
    let _ = writeln!(s, "config sha256: {}", run.config_hash);
    let _ = writeln!(s, "seed: {}", run.seed);
    let _ = writeln!(s, "cache: enabled={} hits={} builds={}", run.cache.enabled, run.cache.hits, run.cache.builds);
    for r in run.reports {
        let _ = writeln!(s, "\n{}: {:?}", r.op, r.verdict);
        for a in &r.assertions {
            let _ = writeln!(s, "  {:<28} measured {:<14.6e} bound {:<12.4e} {}", a.name, a.measured, a.bound, if a.holds { "ok" } else { "VIOLATED" });
        }
        for n in &r.notes {
            let _ = writeln!(s, "  note: {n}");
        }
    }
    let _ = writeln!(s, "\nverdict: {:?}", run.verdict);
    s
}

fn run(config: &Path, out: Option<PathBuf>, threads: Option<usize>, no_cache: bool) -> Result<(u8, PathBuf), (Failure, Option<PathBuf>)> {
    let (cfg, raw): (ExperimentConfig, Value) = parse(config).map_err(|e| (e, out.clone()))?;
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut errs = cfg.experiment.validate();
    if threads == Some(0) {
        errs.push("--threads must be positive".into());
    }
    if !errs.is_empty() {
        return Err((Failure::Config(errs), Some(out)));
    }
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (Failure::Runtime(e.to_string()), Some(out.clone())))?;
    }
    let use_cache = !no_cache && cfg.cache == CachePolicy::Use;
    let cache_dir = use_cache.then(cache_dir_from_env);
    let inner = || -> Result<u8, Failure> {
        fs::create_dir_all(&out)?;
        let outcome = execute(&cfg.experiment, cfg.seed, cache_dir.as_deref())?;
        let verdict = outcome.reports.iter().fold(Verdict::Pass, |v, r| v.and(r.verdict));
        let run = RunReport {
            tool: "kinschauder",
            version: VERSION,
            git_rev: GIT_REV,
            config_hash: config_hash(&raw),
            name: cfg.name.as_deref(),
            experiment: cfg.experiment.kind(),
            seed: cfg.seed,
            cache: CacheSummary { enabled: use_cache, hits: outcome.cache.hits, builds: outcome.cache.builds },
            verdict,
            reports: &outcome.reports,
        };
        let value = serde_json::to_value(&run).map_err(|e| Failure::Runtime(e.to_string()))?;
        write_json(&out.join("report.json"), &value)?;
        for t in &outcome.tables {
            write_table(&out, t)?;
        }
        write_table(&out, &measured_table(&outcome.reports))?;
        fs::write(out.join("summary.txt"), summary(&run))?;
        print!("{}", summary(&run));
        Ok(if verdict == Verdict::Fail { 1 } else { 0 })
    };
    inner().map(|c| (c, out.clone())).map_err(|e| (e, Some(out)))
}

fn corpus_cmd(spec: &Path, out: &Path) -> Result<(), Failure> {
    let (spec, _): (CorpusSpec, Value) = parse(spec)?;
    let errs = spec.validate();
    if !errs.is_empty() {
        return Err(Failure::Config(errs));
    }
    let manifest = corpus::generate(&spec, out)?;
    let n = manifest["bundles"].as_array().map_or(0, Vec::len);
    println!("wrote {n} bundle(s) to {}", out.display());
    Ok(())
}

fn report_failure(f: &Failure, dir: Option<&Path>) -> ExitCode {
    let record = f.record();
    eprintln!("{}", serde_json::to_string_pretty(&record).unwrap_or_default());
    if let Some(d) = dir {
        if fs::create_dir_all(d).is_ok() {
            let _ = write_json(&d.join("error.json"), &record);
        }
    }
    ExitCode::from(f.code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, threads, no_cache } => match run(&config, out, threads, no_cache) {
            Ok((code, _)) => ExitCode::from(code),
            Err((f, dir)) => report_failure(&f, dir.as_deref()),
        },
        Command::Corpus { spec, out } => match corpus_cmd(&spec, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(f) => report_failure(&f, Some(&out)),
        },
    }
}
