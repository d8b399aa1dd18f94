use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::metrics::{AgentEpisode, EpisodeRow, GainTable, MetricsLog};
use super::run::{RoundRecord, RunOutput};
use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 11] = [
    "episode",
    "agent_id",
    "episode_return",
    "team_return",
    "sum_rate_mean_bps",
    "flight_energy_j",
    "compute_energy_j",
    "violations_boundary",
    "violations_collision",
    "violations_obstacle",
    "wallclock_s",
];

pub const ROUNDS_HEADER: [&str; 7] = ["round", "episode", "slot", "mode", "alpha", "agent_id", "distance_to_global"];

pub const GAINS_HEADER: [&str; 9] = [
    "baseline",
    "candidate",
    "baseline_tail_return",
    "candidate_tail_return",
    "return_gain_pct",
    "baseline_convergence_block",
    "candidate_convergence_block",
    "convergence_gain_pct",
    "convergence_metric",
];

/// Label written next to convergence gains; the metric is this crate's own
/// definition.
pub const CONVERGENCE_METRIC: &str = "first smoothed block reaching fraction of own tail mean";

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(header).map_err(&err)?;
    for row in rows {
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_metrics(path: &Path, log: &MetricsLog) -> Result<()> {
    let rows = log.rows.iter().flat_map(|row| {
        row.agents.iter().enumerate().map(move |(i, a)| {
            vec![
                row.episode.to_string(),
                i.to_string(),
                a.episode_return.to_string(),
                row.team_return.to_string(),
                a.sum_rate_mean_bps.to_string(),
                a.flight_energy_j.to_string(),
                a.compute_energy_j.to_string(),
                a.violations_boundary.to_string(),
                a.violations_collision.to_string(),
                a.violations_obstacle.to_string(),
                row.wallclock_s.map(|w| w.to_string()).unwrap_or_default(),
            ]
        })
    });
    write_csv(path, &METRICS_HEADER, rows)
}

/// Reads a metrics.csv back into a log, grouping rows by episode.
pub fn read_metrics(path: &Path) -> Result<MetricsLog> {
    let err = csv_err(path);
    let bad = |line: usize, what: &str| Error::Parse {
        path: path.to_path_buf(),
        message: format!("record {line}: {what}"),
    };
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let header = r.headers().map_err(&err)?.clone();
    if header.iter().ne(METRICS_HEADER) {
        return Err(bad(0, "unexpected header"));
    }
    let mut log = MetricsLog::default();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(&err)?;
        let f = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(line + 1, METRICS_HEADER[i])) };
        let u = |i: usize| -> Result<usize> { rec[i].parse().map_err(|_| bad(line + 1, METRICS_HEADER[i])) };
        let episode = u(0)?;
        let agent = AgentEpisode {
            episode_return: f(2)?,
            sum_rate_mean_bps: f(4)?,
            flight_energy_j: f(5)?,
            compute_energy_j: f(6)?,
            violations_boundary: u(7)?,
            violations_collision: u(8)?,
            violations_obstacle: u(9)?,
        };
        let wallclock_s = if rec[10].is_empty() { None } else { Some(f(10)?) };
        match log.rows.last_mut() {
            Some(row) if row.episode == episode => {
                if u(1)? != row.agents.len() {
                    return Err(bad(line + 1, "agent rows out of order"));
                }
                row.agents.push(agent);
            }
            _ => {
                if u(1)? != 0 {
                    return Err(bad(line + 1, "episode does not start at agent 0"));
                }
                log.push(EpisodeRow {
                    episode,
                    agents: vec![agent],
                    team_return: f(3)?,
                    wallclock_s,
                });
            }
        }
    }
    Ok(log)
}

pub fn write_rounds(path: &Path, rounds: &[RoundRecord]) -> Result<()> {
    let rows = rounds.iter().flat_map(|r| {
        r.report.distances.iter().enumerate().map(move |(i, d)| {
            vec![
                r.report.round.to_string(),
                r.episode.to_string(),
                r.slot.to_string(),
                r.report.mode.to_string(),
                r.report.alpha.map(|a| a.to_string()).unwrap_or_default(),
                i.to_string(),
                d.to_string(),
            ]
        })
    });
    write_csv(path, &ROUNDS_HEADER, rows)
}

pub fn write_gains(path: &Path, gains: &[GainTable]) -> Result<()> {
    let rows = gains.iter().map(|g| {
        vec![
            g.baseline.clone(),
            g.candidate.clone(),
            g.baseline_tail_return.to_string(),
            g.candidate_tail_return.to_string(),
            g.return_gain_pct.to_string(),
            g.baseline_convergence_block.to_string(),
            g.candidate_convergence_block.to_string(),
            g.convergence_gain_pct.to_string(),
            CONVERGENCE_METRIC.to_string(),
        ]
    });
    write_csv(path, &GAINS_HEADER, rows)
}

pub fn write_manifest(path: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let text = serde_json::to_string_pretty(&cfg.manifest()).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn checkpoint_path(dir: &Path, episodes_done: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("ep{episodes_done:06}.ckpt"))
}

/// Writes metrics.csv, rounds.csv, gains.csv, run.json and the checkpoints
/// of one run into `dir`.
pub fn emit_outputs(dir: &Path, cfg: &ExperimentConfig, run: &RunOutput, gains: &[GainTable]) -> Result<()> {
    let ckpt_dir = dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
    write_metrics(&dir.join("metrics.csv"), &run.metrics)?;
    write_rounds(&dir.join("rounds.csv"), &run.rounds)?;
    write_gains(&dir.join("gains.csv"), gains)?;
    write_manifest(&dir.join("run.json"), cfg)?;
    for (done, ckpt) in &run.checkpoints {
        ckpt.save(&checkpoint_path(dir, *done))?;
    }
    Ok(())
}
