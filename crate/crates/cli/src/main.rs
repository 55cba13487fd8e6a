use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use crafteam_cli::policy::{self, HumanPolicy};
use crafteam_cli::stats::{self, StatsError};
use crafteam_cli::{simulate, SimOptions};
use crafteam_core::llm::{
    CompletionRequest, HttpProvider, LlmProvider, MockProvider, ProviderConfig, ProviderError, SchemaId,
};
use crafteam_core::persistence::{read_log, replay, JsonlWriter, LogHeader, PersistError};
use crafteam_core::presets;
use crafteam_core::reflection::reflect;
use crafteam_core::session::{derive_session_id, SessionError, SessionState};
use crafteam_core::team::{classify_structure, validate_team, TeamConfig};

#[derive(Parser)]
#[command(name = "crafteam", version, about = "Simulate, replay and analyse human-agent ideation sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a session with a scripted human and write the sealed log and reflection.
    Simulate {
        #[arg(long)]
        team: PathBuf,
        /// Policy file or preset name (evaluator-heavy, requester-heavy, passive).
        #[arg(long, default_value = "passive")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Virtual seconds to run.
        #[arg(long, default_value_t = 600.0)]
        duration: f64,
        /// Multiplier on agent waits; 0 lets agents act every quantum.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        #[arg(long, value_enum, default_value_t = Provider::Mock)]
        provider: Provider,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-fold a log, check it, and print its summary.
    Replay { log: PathBuf },
    /// Formation and ideation tables. Each input (a log, or a directory of logs) is one cycle.
    Stats {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Table printed by csv output on stdout.
        #[arg(long, value_enum, default_value_t = Table::Formation)]
        table: Table,
        /// Write formation.csv and ideation.csv (or stats.json) here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a team file and print its structure class.
    Validate {
        #[arg(long)]
        team: PathBuf,
    },
    /// Print a ready-made team configuration.
    Team {
        #[arg(long, value_enum)]
        preset: TeamPreset,
        #[arg(long, default_value_t = 3)]
        agents: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Mock,
    Http,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Formation,
    Ideation,
}

#[derive(Clone, Copy, ValueEnum)]
enum TeamPreset {
    Flat,
    SingleTier,
    MultiTier,
    Mixed,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("provider unreachable: {0}")]
    Provider(ProviderError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Provider(_) => 3,
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let body = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&body).map_err(|e| CliError::Invalid(format!("{}: not a {what}: {e}", path.display())))
}

fn load_team(path: &Path) -> Result<TeamConfig, CliError> {
    let config: TeamConfig = read_json(path, "team configuration")?;
    let report = validate_team(&config);
    if !report.is_ok() {
        let detail = serde_json::to_string_pretty(&report).expect("report serializes");
        return Err(CliError::Invalid(format!("invalid team configuration: {report}\n{detail}")));
    }
    Ok(config)
}

fn load_policy(arg: &str, config: &TeamConfig) -> Result<HumanPolicy, CliError> {
    let policy = match policy::preset(arg) {
        Some(p) => p,
        None => read_json(Path::new(arg), "policy")?,
    };
    policy
        .validate(config)
        .map_err(|p| CliError::Invalid(format!("invalid policy:\n  {}", p.join("\n  "))))?;
    Ok(policy)
}

fn provider(kind: Provider, seed: u64) -> Result<Arc<dyn LlmProvider>, CliError> {
    match kind {
        Provider::Mock => Ok(Arc::new(MockProvider::new(seed))),
        Provider::Http => {
            let p = HttpProvider::new(ProviderConfig::from_env()).map_err(CliError::Provider)?;
            let probe = CompletionRequest::new(SchemaId::Plan, "Reply with a JSON object.".into(), "ping".into());
            match p.complete(&probe) {
                Err(e @ (ProviderError::ProviderUnreachable(_) | ProviderError::ProviderTimeout)) => {
                    Err(CliError::Provider(e))
                }
                _ => Ok(Arc::new(p)),
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    team: &Path,
    policy_arg: &str,
    seed: u64,
    duration: f64,
    time_scale: f64,
    kind: Provider,
    out: &Path,
) -> Result<(), CliError> {
    let config = load_team(team)?;
    let policy = load_policy(policy_arg, &config)?;
    if !duration.is_finite() || duration < 0.0 {
        return Err(CliError::Invalid("--duration must be a non-negative number".into()));
    }
    if !time_scale.is_finite() || time_scale < 0.0 {
        return Err(CliError::Invalid("--time-scale must be a non-negative number".into()));
    }
    let provider = provider(kind, seed)?;
    let id = derive_session_id(&config, seed, time_scale);
    let log_path = out.join(format!("{id}.events.jsonl"));
    let writer = JsonlWriter::create(&log_path, &LogHeader::new(&id, &config)).map_err(failed)?;
    let opts = SimOptions {
        seed,
        duration_secs: duration,
        time_scale,
    };
    let (session, report) = simulate(config, &policy, provider, opts, Some(Box::new(writer))).map_err(|e| match e {
        SessionError::InvalidConfig(r) => CliError::Invalid(format!("invalid team configuration: {r}")),
        other => failed(other),
    })?;
    let reflection = reflect(session.log()).map_err(failed)?;
    let reflection_path = out.join(format!("{id}.reflection.json"));
    let mut body = serde_json::to_string_pretty(&reflection).expect("reflection serializes");
    body.push('\n');
    fs::write(&reflection_path, body).map_err(failed)?;
    let s = reflection.summary;
    println!("session {id}: {} events", session.log().len());
    println!(
        "ideas {}, evaluations {}, feedback sessions {}, requests {}",
        s.total_ideas, s.evaluations, s.feedback_sessions, s.requests
    );
    println!(
        "human policy: {} actions submitted, {} rejected, {} dropped",
        report.submitted,
        report.rejected,
        report.dropped.len()
    );
    println!("log: {}", log_path.display());
    println!("reflection: {}", reflection_path.display());
    Ok(())
}

fn run_replay(path: &Path) -> Result<(), CliError> {
    let replayed = replay(path).map_err(|e| match e {
        PersistError::CorruptLog { line, detail } => {
            failed(format!("{}: corrupt at line {line}: {detail}", path.display()))
        }
        other => failed(format!("{}: {other}", path.display())),
    })?;
    let (_, events) = read_log(path).map_err(failed)?;
    let mut stepwise = SessionState::fold(events.iter().take(1)).map_err(failed)?;
    for e in events.iter().skip(1) {
        stepwise.apply(e).map_err(failed)?;
    }
    if stepwise != replayed.state {
        return Err(failed("stepwise state differs from the folded state"));
    }
    if replayed.state.session_id != replayed.header.session_id {
        return Err(failed("header names a different session"));
    }
    println!("session {}: {} events", replayed.header.session_id, replayed.log.len());
    match reflect(&replayed.log) {
        Ok(r) => println!(
            "participants {}, ideas {}, evaluations {}, feedback sessions {}, requests {}",
            r.summary.participants,
            r.summary.total_ideas,
            r.summary.evaluations,
            r.summary.feedback_sessions,
            r.summary.requests
        ),
        Err(_) => println!("log is not sealed; summary unavailable"),
    }
    println!("replay OK");
    Ok(())
}

fn run_stats(inputs: &[PathBuf], format: Format, table: Table, out: Option<&Path>) -> Result<(), CliError> {
    let cycles = stats::load_cycles(inputs).map_err(|e| match e {
        StatsError::Read { path, source: PersistError::CorruptLog { line, detail } } => {
            failed(format!("{}: corrupt at line {line}: {detail}", path.display()))
        }
        other => failed(other),
    })?;
    let t = stats::tables(&cycles).map_err(failed)?;
    match (format, out) {
        (Format::Json, None) => {
            println!("{}", serde_json::to_string_pretty(&t).expect("stats serialize"));
        }
        (Format::Json, Some(dir)) => {
            fs::create_dir_all(dir).map_err(failed)?;
            let body = serde_json::to_string_pretty(&t).expect("stats serialize") + "\n";
            fs::write(dir.join("stats.json"), body).map_err(failed)?;
        }
        (Format::Csv, None) => match table {
            Table::Formation => stats::formation_csv(&t, io::stdout()).map_err(failed)?,
            Table::Ideation => stats::ideation_csv(&t, io::stdout()).map_err(failed)?,
        },
        (Format::Csv, Some(dir)) => {
            fs::create_dir_all(dir).map_err(failed)?;
            let f = fs::File::create(dir.join("formation.csv")).map_err(failed)?;
            stats::formation_csv(&t, f).map_err(failed)?;
            let f = fs::File::create(dir.join("ideation.csv")).map_err(failed)?;
            stats::ideation_csv(&t, f).map_err(failed)?;
        }
    }
    Ok(())
}

fn run_validate(path: &Path) -> Result<(), CliError> {
    let config = load_team(path)?;
    let class = classify_structure(&config).map_err(|e| CliError::Invalid(e.to_string()))?;
    println!("{}: valid, {}", config.team_name, serde_json::to_value(class).expect("class serializes"));
    Ok(())
}

fn run_team(preset: TeamPreset, agents: usize) -> Result<(), CliError> {
    let config = match preset {
        TeamPreset::Flat => presets::flat_team(agents),
        TeamPreset::SingleTier => presets::single_tier_team(agents),
        TeamPreset::MultiTier if agents < 2 => {
            return Err(CliError::Invalid("a multi-tier team needs at least 2 agents".into()))
        }
        TeamPreset::MultiTier => presets::multi_tier_team(agents),
        TeamPreset::Mixed => presets::mixed_team(),
    };
    println!("{}", serde_json::to_string_pretty(&config).expect("config serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            team,
            policy,
            seed,
            duration,
            time_scale,
            provider,
            out,
        } => run_simulate(team, policy, *seed, *duration, *time_scale, *provider, out),
        Command::Replay { log } => run_replay(log),
        Command::Stats {
            inputs,
            format,
            table,
            out,
        } => run_stats(inputs, *format, *table, out.as_deref()),
        Command::Validate { team } => run_validate(team),
        Command::Team { preset, agents } => run_team(*preset, *agents),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
