//! `mupf`: simulate tactile contacts, localize an object from them, and run
//! repeated trials.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use mupf_core::harness::{batch, run_trial, sweep_memory};
use mupf_core::metrics::{
    index_trace_csv, summarize, sweep_csv, BatchReport, LocalizeReport, ReportHeader, SweepEntry,
    SweepReport, SweepRow,
};
use mupf_core::simulate::{
    load_measurements, sample_contacts, write_measurements_csv, GroundTruth,
};
use serde::Serialize;

use manifest::{Invalid, Overrides, RunManifest};

#[derive(Parser)]
#[command(
    name = "mupf",
    version,
    about = "6-DOF tactile localization with a memory unscented particle filter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample contact points on a posed mesh; writes `x,y,z` CSV and a
    /// `<stem>.truth.json` ground-truth file next to it.
    Simulate(Common),
    /// Localize the mesh from a measurement CSV; writes a JSON report.
    Localize {
        #[command(flatten)]
        common: Common,
        /// Measurement CSV with header `x,y,z`.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Ground-truth JSON written by `simulate`, for pose errors.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Also write the per-step performance index as `t,index` CSV.
        #[arg(long, value_name = "CSV")]
        emit_trace: Option<PathBuf>,
    },
    /// Simulate and localize `trials` times with seeds `seed + i`.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        /// Repeat the batch for each memory length in `a..b` (inclusive).
        #[arg(long, value_name = "A..B", value_parser = parse_range)]
        sweep_m: Option<(usize, usize)>,
        /// Also write `m,mean_index,successes,trials` CSV.
        #[arg(long, value_name = "CSV")]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wavefront OBJ mesh; the built-in 0.1 x 0.3 x 0.2 m box when absent.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated contacts L.
    #[arg(long)]
    contacts: Option<usize>,
    /// Output file; reports go to stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Leave wall-clock times out of reports so they are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            mesh: self.mesh.clone(),
            seed: self.seed,
            contacts: self.contacts,
            output: self.output.clone(),
            no_timing: self.no_timing,
            ..Default::default()
        }
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let a: usize = a
        .trim()
        .parse()
        .map_err(|e| format!("bad range start: {e}"))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|e| format!("bad range end: {e}"))?;
    if a == 0 || b < a {
        return Err(format!("expected 1 <= a <= b, got {a}..{b}"));
    }
    Ok((a, b))
}

/// Failure with its exit code: 2 for bad input, 3 for failures while running
/// or writing results.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Invalid> for Failure {
    fn from(e: Invalid) -> Self {
        Failure {
            code: 2,
            error: e.0,
        }
    }
}

impl From<mupf_core::Error> for Failure {
    fn from(e: mupf_core::Error) -> Self {
        use mupf_core::Error::*;
        let code = match e {
            NotPositiveDefinite | SingularInnovation | DegenerateWeights { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 3,
        error: e.into(),
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)
        .and_then(|_| fs::rename(&tmp, path))
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), Failure> {
    let mut json = serde_json::to_string_pretty(value).map_err(runtime)?;
    json.push('\n');
    match output {
        Some(p) => write_atomic(p, json.as_bytes()),
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .context("writing to stdout")
            .map_err(runtime),
    }
}

fn simulate(common: &Common) -> Result<(), Failure> {
    let m = RunManifest::load(common.config.as_deref(), &common.overrides())?;
    let out = m
        .output
        .clone()
        .ok_or_else(|| Invalid(anyhow!("simulate needs --output <CSV>")))?;
    let sim = sample_contacts(&m.scenario, &m.mesh)?;
    let mut csv = Vec::new();
    write_measurements_csv(&mut csv, &sim.measurements).map_err(runtime)?;
    write_atomic(&out, &csv)?;
    let truth = out.with_extension("truth.json");
    emit(&GroundTruth::new(&m.scenario, &sim), Some(&truth))
}

fn localize(
    common: &Common,
    measurements: Option<PathBuf>,
    truth: Option<PathBuf>,
    emit_trace: Option<PathBuf>,
) -> Result<(), Failure> {
    let flags = Overrides {
        measurements,
        ..common.overrides()
    };
    let m = RunManifest::load(common.config.as_deref(), &flags)?;
    let path = m
        .measurements
        .clone()
        .ok_or_else(|| Invalid(anyhow!("localize needs --measurements <CSV>")))?;
    let ys = load_measurements(&path)?;
    if ys.is_empty() {
        return Err(mupf_core::Error::NoMeasurements.into());
    }
    let truth = match truth {
        Some(p) => {
            let text = fs::read_to_string(&p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(Invalid)?;
            let gt: GroundTruth = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(Invalid)?;
            Some(gt.true_pose)
        }
        None => None,
    };
    let (report, _) = run_trial(
        m.mesh.clone(),
        &ys,
        truth,
        &m.scenario.symmetries,
        &m.config,
        &m.options,
    )?;
    if let Some(p) = emit_trace {
        write_atomic(&p, index_trace_csv(&report.index_trace).as_bytes())?;
    }
    let report = LocalizeReport {
        header: ReportHeader::new(&m.config, None, m.seed),
        report,
    };
    emit(&report, m.output.as_deref())
}

fn run_batch(
    common: &Common,
    trials: Option<usize>,
    sweep_m: Option<(usize, usize)>,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let flags = Overrides {
        trials,
        ..common.overrides()
    };
    let m = RunManifest::load(common.config.as_deref(), &flags)?;
    let header = ReportHeader::new(&m.config, Some(&m.scenario), m.seed);
    match sweep_m {
        Some((a, b)) => {
            let results = sweep_memory(
                m.mesh.clone(),
                &m.scenario,
                &m.config,
                a..=b,
                m.trials,
                m.seed,
                &m.options,
            )?;
            if let Some(p) = csv {
                let rows: Vec<SweepRow> = results.iter().map(|(r, _)| r.clone()).collect();
                write_atomic(&p, sweep_csv(&rows).as_bytes())?;
            }
            let report = SweepReport {
                header,
                trials: m.trials,
                rows: results
                    .into_iter()
                    .map(|(r, summary)| SweepEntry {
                        memory: r.memory,
                        summary,
                    })
                    .collect(),
            };
            emit(&report, m.output.as_deref())
        }
        None => {
            let reports = batch(
                m.mesh.clone(),
                &m.scenario,
                &m.config,
                m.trials,
                m.seed,
                &m.options,
            )?;
            let summary = summarize(&reports);
            if let Some(p) = csv {
                let row = SweepRow {
                    memory: m.config.memory,
                    mean_final_index: summary.mean_final_index,
                    successes: summary.successes,
                    trials: summary.trials,
                };
                write_atomic(&p, sweep_csv(&[row]).as_bytes())?;
            }
            let report = BatchReport {
                header,
                summary,
                trials: reports,
            };
            emit(&report, m.output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(common) => simulate(&common),
        Command::Localize {
            common,
            measurements,
            truth,
            emit_trace,
        } => localize(&common, measurements, truth, emit_trace),
        Command::Batch {
            common,
            trials,
            sweep_m,
            csv,
        } => run_batch(&common, trials, sweep_m, csv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
