//! The `replisync` command line: simulate, analyze, replay, paper-check.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use replisync_core::metrics::SessionMetrics;
use replisync_core::net::Trace;
use replisync_core::published::PublishedFigures;
use replisync_core::scenario::checks::{god_view, hmd_pairing};
use replisync_core::scenario::{Condition, ProfileSet};
use replisync_core::session::apply_commit;
use replisync_core::{Payload, SceneModel};
use sha2::{Digest, Sha256};

use crate::config::{read_json, to_json_pretty, Inputs, RunConfig};
use crate::corpus::{plan_batch, run_batch};
use crate::error::CliError;
use crate::logfile::{read_log, read_trace, write_log, write_trace};
use crate::plot::histogram;
use crate::report::{analyze, markdown, tests_csv, MEASURES};
use crate::table::{read_metrics, write_metrics};

#[derive(Debug, Parser)]
#[command(name = "replisync", version, about = "Simulate and analyze remote expert/operator inspection sessions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    Tablet,
    Hmd,
    Both,
}

impl ConditionArg {
    fn conditions(self) -> Vec<Condition> {
        match self {
            ConditionArg::Tablet => vec![Condition::Tablet],
            ConditionArg::Hmd => vec![Condition::Hmd],
            ConditionArg::Both => vec![Condition::Tablet, Condition::Hmd],
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play sessions and write their logs, traces and the metrics CSV.
    Simulate {
        /// Master seed; every session seed is derived from it.
        #[arg(long, env = "REPLICA_SYNC_SEED", default_value_t = 0)]
        seed: u64,
        /// Sessions per condition [default: 19 tablet, 20 HMD].
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long, value_enum, default_value_t = ConditionArg::Both)]
        condition: ConditionArg,
        /// Inspection plan JSON.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Operator/expert/network profile JSON.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Plant routing, effectiveness and inlet temperatures JSON.
        #[arg(long)]
        routing: Option<PathBuf>,
        /// Plant descriptor JSON.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Analyze a metrics CSV and write a markdown report.
    Analyze {
        csv: PathBuf,
        /// Report directory [default: next to the CSV].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG histograms of the timing measurements.
        #[arg(long)]
        svg: bool,
    },
    /// Re-check a session log and, optionally, rebuild the shared model
    /// from its trace.
    Replay {
        log: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Plant descriptor the session started from.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Profiles used for the session (for the avatar elevation).
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Recompute the published figures from their inputs and list each check.
    PaperCheck {
        /// Alternative figures JSON, in the same shape as the built-in table.
        #[arg(long)]
        constants: Option<PathBuf>,
    },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn run(command: Command, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    match command {
        Command::Simulate { seed, sessions, condition, plan, profile, routing, model, out: dir } => {
            let config =
                RunConfig { conditions: condition.conditions(), sessions, seed, model, plan, routing, profile, out: dir };
            let rows = simulate(&config)?;
            writeln!(out, "wrote {} sessions to {}", rows.len(), config.out.display()).ok();
            Ok(())
        }
        Command::Analyze { csv, out: dir, svg } => {
            let dir = dir.unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
            let text = analyze_file(&csv, &dir, svg)?;
            out.write_all(text.as_bytes()).ok();
            Ok(())
        }
        Command::Replay { log, trace, model, profile } => replay(&log, trace.as_deref(), model.as_deref(), profile.as_deref(), out),
        Command::PaperCheck { constants } => {
            let figures = match constants {
                Some(p) => read_json(&p)?,
                None => PublishedFigures::default(),
            };
            paper_check(&figures, out)
        }
    }
}

/// Runs the configured batch and writes `metrics.csv`, `profiles.json`,
/// `logs/<id>.jsonl` and `traces/<id>.jsonl` under the output directory.
pub fn simulate(config: &RunConfig) -> Result<Vec<SessionMetrics>, CliError> {
    config.validate()?;
    let inputs = Inputs::load(config)?;
    let groups: Vec<(Condition, usize)> = config.conditions.iter().map(|&c| (c, config.sessions_for(c))).collect();
    let specs = plan_batch(config.seed, &groups);
    let runs = run_batch(&inputs.setup, &inputs.plan, &inputs.profiles, &specs)?;
    let mut rows = Vec::with_capacity(runs.len());
    for (spec, run) in specs.iter().zip(&runs) {
        write(&config.out.join("logs").join(format!("{}.jsonl", spec.id)), write_log(&spec.id, &run.log))?;
        write(&config.out.join("traces").join(format!("{}.jsonl", spec.id)), write_trace(&run.trace))?;
        rows.push(SessionMetrics::from_log(spec.id.clone(), &run.log).map_err(|e| CliError::Run(format!("{}: {e}", spec.id)))?);
    }
    write(&config.out.join("metrics.csv"), write_metrics(&rows))?;
    write(&config.out.join("profiles.json"), to_json_pretty(&inputs.profiles))?;
    Ok(rows)
}

/// Writes `report.md`, `tests.csv` and optionally histograms into `dir`;
/// returns the markdown.
pub fn analyze_file(csv: &Path, dir: &Path, svg: bool) -> Result<String, CliError> {
    let rows = read_metrics(&read(csv)?)?;
    if rows.is_empty() {
        return Err(CliError::config(format!("{}: no data rows", csv.display())));
    }
    let report = analyze(&rows);
    let md = markdown(&report);
    write(&dir.join("report.md"), &md)?;
    if !report.tests.is_empty() {
        write(&dir.join("tests.csv"), tests_csv(&report))?;
    }
    if svg {
        for m in MEASURES.iter().take(3) {
            let groups: Vec<(&str, Vec<f64>)> = [(Condition::Tablet, "Tablet"), (Condition::Hmd, "HMD")]
                .into_iter()
                .map(|(c, label)| (label, rows.iter().filter(|r| r.condition == c).map(m.get).collect::<Vec<f64>>()))
                .filter(|(_, v)| !v.is_empty())
                .collect();
            write(&dir.join(format!("hist_{}.svg", m.column)), histogram(m.label, &groups, 10))?;
        }
    }
    Ok(md)
}

/// Canonical digest of a model: SHA-256 of its JSON form.
pub fn model_digest(model: &SceneModel) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(model).expect("models serialize")))
}

/// Replays host-sequenced commits from a trace onto `initial`.
pub fn rebuild_shared(trace: &Trace, initial: &SceneModel) -> Result<SceneModel, CliError> {
    let mut by_seq = BTreeMap::new();
    let mut last_seen: BTreeMap<&str, u64> = BTreeMap::new();
    for e in trace {
        let seq = e.envelope.host_seq;
        if seq == 0 {
            continue;
        }
        let last = last_seen.entry(e.to.as_str()).or_insert(0);
        if seq <= *last {
            return Err(CliError::Check(format!("{} saw host_seq {seq} after {last}", e.to)));
        }
        *last = seq;
        by_seq.insert(seq, &e.envelope.payload);
    }
    let mut model = initial.clone();
    for (seq, payload) in by_seq {
        match payload {
            Payload::Snapshot(s) if s.version >= model.version => model = s.clone(),
            Payload::SyncCommit(c) => {
                apply_commit(&mut model, c).map_err(|e| CliError::Check(format!("host_seq {seq}: {e}")))?
            }
            _ => {}
        }
    }
    Ok(model)
}

fn replay(
    log: &Path,
    trace: Option<&Path>,
    model: Option<&Path>,
    profile: Option<&Path>,
    out: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let (header, log) = read_log(&read(log)?).map_err(|e| CliError::config(format!("{}: {e}", log.display())))?;
    let mut failures = Vec::new();
    if let Err(e) = log.check() {
        failures.push(format!("log framing: {e}"));
    }
    match SessionMetrics::from_log(header.session_id.clone(), &log) {
        Ok(m) => {
            writeln!(out, "session {} ({}, seed {})", m.session_id, m.condition.as_str(), m.seed).ok();
            writeln!(out, "  total {:.3} s, one-handed {:.3} s, two-handed {:.3} s", m.total_s, m.one_handed_s, m.two_handed_s).ok();
            writeln!(out, "  errors simple {} critical {} repetition {} weighted {}", m.simple, m.critical, m.repetition, m.weighted_total).ok();
        }
        Err(e) => failures.push(format!("metrics: {e}")),
    }
    match hmd_pairing(&log) {
        Ok(n) if log.condition == Condition::Hmd => {
            writeln!(out, "  {n} instructions paired with an indication commit").ok();
        }
        Ok(_) => {}
        Err(e) => failures.push(format!("indication pairing: {e}")),
    }
    if let Some(trace) = trace {
        let trace = read_trace(&read(trace)?).map_err(|e| CliError::config(format!("{}: {e}", trace.display())))?;
        let config = RunConfig {
            conditions: vec![log.condition],
            sessions: Some(1),
            seed: log.seed,
            model: model.map(Path::to_path_buf),
            plan: None,
            routing: None,
            profile: profile.map(Path::to_path_buf),
            out: PathBuf::new(),
        };
        let inputs = Inputs::load(&config)?;
        let shared = rebuild_shared(&trace, &inputs.setup.model)?;
        writeln!(out, "  shared model version {} sha256 {}", shared.version, model_digest(&shared)).ok();
        let profiles: &ProfileSet = &inputs.profiles;
        let anchor = inputs.setup.model.world_anchor.position;
        match god_view(&trace, profiles.expert.avatar_elevation_m, anchor) {
            Ok(n) => {
                writeln!(out, "  {n} expert avatar placements above the operator").ok();
            }
            Err(e) => failures.push(format!("god view: {e}")),
        }
    }
    if failures.is_empty() {
        writeln!(out, "replay OK").ok();
        Ok(())
    } else {
        Err(CliError::Check(failures.join("; ")))
    }
}

/// Prints one PASS/FAIL line per check; fails if any check fails.
pub fn paper_check(figures: &PublishedFigures, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let checks = figures.checks();
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let line = if c.upper_bound {
            format!("{verdict}  {:<34} expected < {:<8} got {:.3e}", c.name, c.expected, c.got)
        } else {
            format!("{verdict}  {:<34} expected {:<10} got {:<12.6} tolerance {}", c.name, c.expected, c.got, c.tolerance)
        };
        writeln!(out, "{line}").ok();
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        writeln!(out, "all {} checks passed", checks.len()).ok();
        Ok(())
    } else {
        Err(CliError::Check(format!("{failed} of {} checks failed", checks.len())))
    }
}
