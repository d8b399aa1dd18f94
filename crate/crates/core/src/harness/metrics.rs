use serde::Serialize;

use super::config::ReportConfig;
use crate::error::{Error, Result};

/// Per-agent statistics of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEpisode {
    pub episode_return: f64,
    /// Mean over slots of the UAV's served sum-rate (bit/s).
    pub sum_rate_mean_bps: f64,
    /// Flight energy summed over the episode (J).
    pub flight_energy_j: f64,
    /// Computation energy summed over the episode (J).
    pub compute_energy_j: f64,
    pub violations_boundary: usize,
    pub violations_collision: usize,
    pub violations_obstacle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub agents: Vec<AgentEpisode>,
    /// Mean of the agents' episode returns.
    pub team_return: f64,
    pub wallclock_s: Option<f64>,
}

/// Append-only log with one row per episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLog {
    pub rows: Vec<EpisodeRow>,
}

impl MetricsLog {
    pub fn push(&mut self, row: EpisodeRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn team_returns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.team_return).collect()
    }
}

/// Non-overlapping block means of `values`; a trailing partial block is
/// dropped.
pub fn block_means(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0, "smoothing window must be positive");
    values
        .chunks_exact(window)
        .map(|c| c.iter().sum::<f64>() / window as f64)
        .collect()
}

/// Block means of the team return.
pub fn smoothed_returns(log: &MetricsLog, window: usize) -> Vec<f64> {
    block_means(&log.team_returns(), window)
}

/// Number of trailing blocks forming the plateau: `ceil(len * fraction)`,
/// at least one.
pub fn tail_len(len: usize, tail_fraction: f64) -> usize {
    ((len as f64 * tail_fraction).ceil() as usize).clamp(1, len.max(1))
}

pub fn tail_mean(smoothed: &[f64], tail_fraction: f64) -> Result<f64> {
    if smoothed.is_empty() {
        return Err(Error::Empty("smoothed returns"));
    }
    let k = tail_len(smoothed.len(), tail_fraction);
    Ok(smoothed[smoothed.len() - k..].iter().sum::<f64>() / k as f64)
}

pub fn head_mean(smoothed: &[f64], fraction: f64) -> Result<f64> {
    if smoothed.is_empty() {
        return Err(Error::Empty("smoothed returns"));
    }
    let k = tail_len(smoothed.len(), fraction);
    Ok(smoothed[..k].iter().sum::<f64>() / k as f64)
}

/// First block whose value reaches `fraction * plateau`, where the plateau is
/// the mean of the trailing `tail_fraction` of blocks. Returns the last index
/// if no block qualifies.
pub fn convergence_episode(smoothed: &[f64], fraction: f64, tail_fraction: f64) -> Result<usize> {
    let plateau = tail_mean(smoothed, tail_fraction)?;
    let threshold = fraction * plateau;
    Ok(smoothed
        .iter()
        .position(|&v| v >= threshold)
        .unwrap_or(smoothed.len() - 1))
}

/// Relative performance of a candidate run against a baseline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainTable {
    pub baseline: String,
    pub candidate: String,
    pub baseline_tail_return: f64,
    pub candidate_tail_return: f64,
    /// `(candidate - baseline) / |baseline| * 100` over the tail means.
    pub return_gain_pct: f64,
    pub baseline_convergence_block: usize,
    pub candidate_convergence_block: usize,
    /// Convergence-speed gain. A block index `b` stands for `(b + 1) * window`
    /// episodes, so the gain is `((b_base + 1) / (b_cand + 1) - 1) * 100`.
    pub convergence_gain_pct: f64,
}

pub fn return_gain(baseline_tail: f64, candidate_tail: f64) -> Result<f64> {
    if candidate_tail == baseline_tail {
        return Ok(0.0);
    }
    if baseline_tail == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok((candidate_tail - baseline_tail) / baseline_tail.abs() * 100.0)
}

pub fn convergence_gain(baseline_block: usize, candidate_block: usize) -> f64 {
    ((baseline_block + 1) as f64 / (candidate_block + 1) as f64 - 1.0) * 100.0
}

/// Gains computed from already smoothed curves.
pub fn gain_from_curves(
    baseline_name: &str,
    baseline: &[f64],
    candidate_name: &str,
    candidate: &[f64],
    report: &ReportConfig,
) -> Result<GainTable> {
    let bt = tail_mean(baseline, report.tail_fraction)?;
    let ct = tail_mean(candidate, report.tail_fraction)?;
    let bc = convergence_episode(baseline, report.convergence_fraction, report.tail_fraction)?;
    let cc = convergence_episode(candidate, report.convergence_fraction, report.tail_fraction)?;
    Ok(GainTable {
        baseline: baseline_name.to_string(),
        candidate: candidate_name.to_string(),
        baseline_tail_return: bt,
        candidate_tail_return: ct,
        return_gain_pct: return_gain(bt, ct)?,
        baseline_convergence_block: bc,
        candidate_convergence_block: cc,
        convergence_gain_pct: convergence_gain(bc, cc),
    })
}

pub fn gain_table(
    baseline_name: &str,
    baseline: &MetricsLog,
    candidate_name: &str,
    candidate: &MetricsLog,
    report: &ReportConfig,
) -> Result<GainTable> {
    let w = report.smoothing_window;
    if baseline.len().min(candidate.len()) < w {
        return Err(Error::config(
            "report.smoothing_window",
            format!("{w} exceeds the number of logged episodes"),
        ));
    }
    gain_from_curves(
        baseline_name,
        &smoothed_returns(baseline, w),
        candidate_name,
        &smoothed_returns(candidate, w),
        report,
    )
}
