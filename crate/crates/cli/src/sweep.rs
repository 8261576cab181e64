//! Phase-diagram sweeps over (λ, p) cells with per-cell checkpointing.

use crate::{cell_stream, CliError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use torusboot::dynamics::{mf_chain_run, run, ActivationConfig, RunStatus};
use torusboot::graph::{build_graph, RngSeed};
use torusboot::meanfield::{p_c, MeanFieldModel};
use torusboot::torus::TorusParams;

pub const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepBackend {
    /// Replicated activation runs on sampled graph instances.
    Graph,
    /// Replicated mean-field density chains.
    Mfchain,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepSpec {
    pub backend: SweepBackend,
    pub k: u32,
    pub n: u32,
    pub replicas: u64,
    pub max_steps: u64,
    pub seed: u64,
}

/// One completed sweep cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellResult {
    pub lambda: f64,
    pub k: u32,
    pub n: u32,
    pub p: f64,
    pub replicas: u64,
    pub frac_all_active: f64,
    pub mean_steps: f64,
    pub pc_mf: f64,
    /// Replicas that ran out of budget before absorbing; recorded, not fatal.
    pub budget_exhausted: u64,
}

impl CellResult {
    pub fn csv_header() -> &'static str {
        "lambda,k,N,p,replicas,frac_all_active,mean_steps,pc_mf"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.lambda,
            self.k,
            self.n,
            self.p,
            self.replicas,
            self.frac_all_active,
            self.mean_steps,
            self.pc_mf
        )
    }

    fn cell_key(lambda: f64, p: f64) -> String {
        format!("{:x}:{:x}", lambda.to_bits(), p.to_bits())
    }
}

fn run_cell(spec: &SweepSpec, lambda: f64, p: f64) -> Result<CellResult> {
    let k = spec.k;
    let pc_mf = p_c(lambda, k)?;
    let outcomes: Vec<(RunStatus, u64)> = match spec.backend {
        SweepBackend::Mfchain => {
            let model = MeanFieldModel::poisson(k, lambda).or_else(|_| {
                // λ = 0 has no Poisson backend; fall back to the exact
                // law of the bare torus (degenerate degree 0)
                MeanFieldModel::exact(k, &TorusParams::new(spec.n.max(3), 0.0)?)
            })?;
            (0..spec.replicas)
                .into_par_iter()
                .map(|r| {
                    let cfg = ActivationConfig::new(k, p).with_max_steps(spec.max_steps);
                    let seed =
                        RngSeed::with_stream(spec.seed, cell_stream(k, spec.n, lambda, p, r));
                    mf_chain_run(spec.n, &cfg, &model, seed)
                        .map(|o| (o.status, o.steps_taken))
                        .map_err(CliError::from)
                })
                .collect::<Result<_>>()?
        }
        SweepBackend::Graph => {
            let c = lambda / (4.0 * LN2);
            let params = TorusParams::new(spec.n, c)?;
            (0..spec.replicas)
                .into_par_iter()
                .map(|r| {
                    let graph_seed =
                        RngSeed::with_stream(spec.seed, cell_stream(k, spec.n, lambda, p, r));
                    let g = build_graph(&params, graph_seed);
                    let cfg = ActivationConfig::new(k, p).with_max_steps(spec.max_steps);
                    let init_seed = RngSeed::with_stream(
                        spec.seed,
                        cell_stream(k, spec.n, lambda, p, r) ^ 0x5eed,
                    );
                    run(&g, &cfg, init_seed)
                        .map(|o| (o.status, o.steps_taken))
                        .map_err(CliError::from)
                })
                .collect::<Result<_>>()?
        }
    };
    let all_active = outcomes
        .iter()
        .filter(|(s, _)| *s == RunStatus::AllActive)
        .count() as f64;
    let exhausted = outcomes
        .iter()
        .filter(|(s, _)| *s == RunStatus::BudgetExhausted)
        .count() as u64;
    let mean_steps = outcomes.iter().map(|&(_, t)| t as f64).sum::<f64>() / outcomes.len() as f64;
    Ok(CellResult {
        lambda,
        k,
        n: spec.n,
        p,
        replicas: spec.replicas,
        frac_all_active: all_active / outcomes.len() as f64,
        mean_steps,
        pc_mf,
        budget_exhausted: exhausted,
    })
}

fn checkpoint_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".ckpt");
    PathBuf::from(p)
}

fn load_checkpoint(path: &Path) -> HashMap<String, CellResult> {
    let mut done = HashMap::new();
    if let Ok(text) = std::fs::read_to_string(path) {
        for line in text.lines() {
            if let Ok(cell) = serde_json::from_str::<CellResult>(line) {
                done.insert(CellResult::cell_key(cell.lambda, cell.p), cell);
            }
        }
    }
    done
}

/// Run every (λ, p) cell, resuming from `<out>.ckpt` when present. Results
/// come back in grid order; the checkpoint is removed by the caller after
/// the final output is written.
pub fn run_sweep(
    spec: &SweepSpec,
    lambda_grid: &[f64],
    p_grid: &[f64],
    out_path: Option<&Path>,
) -> Result<Vec<CellResult>> {
    for &p in p_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Validation(format!(
                "p grid entries must lie in [0,1] (got {p})"
            )));
        }
    }
    if spec.replicas == 0 {
        return Err(CliError::Validation("replicas must be ≥ 1".into()));
    }
    let ckpt = out_path.map(checkpoint_path);
    let mut done = ckpt
        .as_ref()
        .map(|p| load_checkpoint(p))
        .unwrap_or_default();

    let mut results = Vec::with_capacity(lambda_grid.len() * p_grid.len());
    for &lambda in lambda_grid {
        for &p in p_grid {
            let key = CellResult::cell_key(lambda, p);
            let cell = if let Some(cell) = done.remove(&key) {
                cell
            } else {
                let cell = run_cell(spec, lambda, p)?;
                if let Some(ckpt) = &ckpt {
                    use std::io::Write;
                    let mut f = std::fs::OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(ckpt)?;
                    writeln!(f, "{}", serde_json::to_string(&cell)?)?;
                }
                cell
            };
            results.push(cell);
        }
    }
    Ok(results)
}

/// Remove the checkpoint after a successful final write.
pub fn clear_checkpoint(out_path: &Path) {
    let _ = std::fs::remove_file(checkpoint_path(out_path));
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json: {e}"))
    }
}
