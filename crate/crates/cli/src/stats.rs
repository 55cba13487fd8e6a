use std::io::Write;
use std::path::{Path, PathBuf};

use crafteam_core::persistence::{replay, PersistError};
use crafteam_core::reflection::{
    formation_rows, formation_stats, ideation_rows, ideation_stats, FormationStats, IdeationStats,
    ReflectionError,
};
use crafteam_core::session::EventLog;
use crafteam_core::team::TeamConfig;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: PersistError },
    #[error("{0}: log has no session_started event")]
    NoConfig(PathBuf),
    #[error("{0}: no *.events.jsonl files")]
    EmptyCycle(PathBuf),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tables {
    pub formation: FormationStats,
    pub ideation: IdeationStats,
}

/// Log files of one input: the file itself, or every `*.events.jsonl`
/// directly inside a directory, sorted by name.
pub fn cycle_files(input: &Path) -> Result<Vec<PathBuf>, StatsError> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".events.jsonl"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(StatsError::EmptyCycle(input.to_path_buf()));
    }
    Ok(files)
}

/// Each input is one formation cycle.
pub fn load_cycles(inputs: &[PathBuf]) -> Result<Vec<Vec<(EventLog, TeamConfig)>>, StatsError> {
    inputs
        .iter()
        .map(|input| {
            cycle_files(input)?
                .into_iter()
                .map(|path| {
                    let log = replay(&path)
                        .map_err(|source| StatsError::Read { path: path.clone(), source })?
                        .log;
                    let config = log.config().cloned().ok_or(StatsError::NoConfig(path))?;
                    Ok((log, config))
                })
                .collect()
        })
        .collect()
}

pub fn tables(cycles: &[Vec<(EventLog, TeamConfig)>]) -> Result<Tables, StatsError> {
    let configs: Vec<Vec<TeamConfig>> = cycles
        .iter()
        .map(|c| c.iter().map(|(_, t)| t.clone()).collect())
        .collect();
    Ok(Tables {
        formation: formation_stats(&configs)?,
        ideation: ideation_stats(cycles)?,
    })
}

pub fn write_csv(out: impl Write, (header, rows): (Vec<String>, Vec<Vec<String>>)) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn formation_csv(t: &Tables, out: impl Write) -> Result<(), StatsError> {
    write_csv(out, formation_rows(&t.formation))
}

pub fn ideation_csv(t: &Tables, out: impl Write) -> Result<(), StatsError> {
    write_csv(out, ideation_rows(&t.ideation))
}
