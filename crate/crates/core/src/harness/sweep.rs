use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::smoothed_returns;
use super::run::run_experiment;
use crate::error::{Error, Result};
use crate::federation::FederationMode;

/// Smoothed team-return curves of one configuration across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub alpha: Option<f64>,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl Curve {
    fn from_runs(label: String, alpha: Option<f64>, seeds: &[u64], per_seed: Vec<Vec<f64>>) -> Self {
        let len = per_seed.iter().map(Vec::len).min().unwrap_or(0);
        let mean = (0..len)
            .map(|b| per_seed.iter().map(|c| c[b]).sum::<f64>() / per_seed.len() as f64)
            .collect();
        Curve {
            label,
            alpha,
            seeds: seeds.to_vec(),
            per_seed,
            mean,
        }
    }

    /// CSV with one row per block: `block,mean,seed_<s>...`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header = vec!["block".to_string(), "mean".to_string()];
        header.extend(self.seeds.iter().map(|s| format!("seed_{s}")));
        w.write_record(&header).map_err(io)?;
        for (b, m) in self.mean.iter().enumerate() {
            let mut row = vec![b.to_string(), m.to_string()];
            row.extend(self.per_seed.iter().map(|c| c[b].to_string()));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn file_name(&self) -> String {
        format!("curve_{}.csv", self.label)
    }
}

/// Runs every `(config, seed)` pair in parallel and returns the smoothed
/// team-return curves in input order.
pub fn run_seeds(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ExperimentConfig { seed, ..cfg.clone() };
            run_experiment(&cfg).map(|r| smoothed_returns(&r.metrics, cfg.report.smoothing_window))
        })
        .collect()
}

/// Personalized-federation runs for every `alpha` and seed; one mean curve
/// per `alpha`.
pub fn alpha_sweep(cfg: &ExperimentConfig, alphas: &[f64], seeds: &[u64]) -> Result<Vec<Curve>> {
    if alphas.is_empty() {
        return Err(Error::Empty("alpha list"));
    }
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let jobs: Vec<(usize, u64)> = (0..alphas.len())
        .flat_map(|a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let curves: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(a, seed)| {
            let mut c = cfg.clone();
            c.seed = seed;
            c.federation.mode = FederationMode::PfMaddpg;
            c.federation.mix_weight = alphas[a];
            run_experiment(&c).map(|r| smoothed_returns(&r.metrics, c.report.smoothing_window))
        })
        .collect::<Result<_>>()?;
    let mut it = curves.into_iter();
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let per_seed = it.by_ref().take(seeds.len()).collect();
            Curve::from_runs(format!("alpha{alpha}"), Some(alpha), seeds, per_seed)
        })
        .collect())
}

/// Mean curve of a non-personalized mode over `seeds`.
pub fn mode_curve(cfg: &ExperimentConfig, mode: FederationMode, seeds: &[u64]) -> Result<Curve> {
    let mut c = cfg.clone();
    c.federation.mode = mode;
    let per_seed = run_seeds(&c, seeds)?;
    Ok(Curve::from_runs(mode.to_string(), None, seeds, per_seed))
}

pub fn write_curves(dir: &Path, curves: &[Curve]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    curves
        .iter()
        .map(|c| {
            let p = dir.join(c.file_name());
            c.write(&p).map(|_| p)
        })
        .collect()
}
