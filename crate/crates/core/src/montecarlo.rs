//! Replication harness: runs seeded experiments, aggregates per-grid-point
//! statistics, and compares them against theoretical targets.
//!
//! The seed schedule is part of the public contract: replication `i` uses
//! seed `base_seed + i`, so any single replication can be re-run in
//! isolation. Replications are aggregated in fixed-size chunks merged in
//! index order, which makes the parallel reduction bit-identical to the
//! serial one.

use crate::conditions::{self, VerdictTolerances};
use crate::error::{Error, Result};
use crate::estimators::hill_ratio;
use crate::evt_process::{simulate_wk, AlphaRule, EvtProcessParams, WeightFunction};
use crate::rng::SeededStream;
use crate::sampling::{sample_weibull_domain, ExponentMode, QuantileRep};
use crate::stats::{self, Accumulator};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

fn default_y0() -> f64 {
    1.0
}

fn default_mode() -> ExponentMode {
    ExponentMode::InverseGamma
}

/// What to run; the `experiment` tag selects the variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentSpec {
    /// Replications of the normalized weighted spacing statistic, recorded
    /// at every index in `k_grid`.
    WkConvergence {
        gamma: f64,
        tau: f64,
        k_grid: Vec<u64>,
    },
    /// Replications of the normalized spacing-estimator ratio on samples of
    /// size `n` from the power quantile representation.
    HillRatio {
        gamma: f64,
        tau: f64,
        n: u64,
        k_grid: Vec<u64>,
        #[serde(default = "default_y0")]
        y0: f64,
        #[serde(default = "default_mode")]
        mode: ExponentMode,
    },
    /// Deterministic sweep of the prefix variance-growth ratio for the
    /// exact spacing-process covariance oracle.
    GcipSweep {
        gamma: f64,
        tau: f64,
        delta: f64,
        q_max: u64,
    },
    /// Monte Carlo max-variance probe on iid standard normals.
    MaxvarProbe { r: f64, n: u64, lambdas: Vec<f64> },
    /// Deterministic evaluation of the five spacing-process conditions.
    ConditionSuite {
        gamma: f64,
        tau: f64,
        delta: f64,
        k_max: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub spec: ExperimentSpec,
    pub replications: u64,
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InsufficientReplications { got: 0, need: 1 });
        }
        let grid: &[u64] = match &self.spec {
            ExperimentSpec::WkConvergence { k_grid, .. } => k_grid,
            ExperimentSpec::HillRatio { k_grid, n, .. } => {
                if k_grid.iter().any(|&k| k + 1 > *n) {
                    return Err(Error::InvalidParameter(
                        "hill_ratio requires every k <= n - 1".into(),
                    ));
                }
                k_grid
            }
            _ => &[],
        };
        if matches!(
            &self.spec,
            ExperimentSpec::WkConvergence { .. } | ExperimentSpec::HillRatio { .. }
        ) {
            if grid.is_empty() {
                return Err(Error::EmptyRequest("experiment k_grid"));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(
                    "k_grid must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Stable hash of the canonical JSON serialization.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: u64,
    pub mean: f64,
    pub std_error: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub target: Option<f64>,
    /// `(mean - target) / std_error`.
    pub deviation_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub experiment_id: String,
    pub replications: u64,
    pub base_seed: u64,
    pub config_hash: String,
    pub points: Vec<GridPoint>,
    /// Scalar extras (probe constants, verdict codes, ...).
    pub summary: BTreeMap<String, f64>,
    pub wall_time_ms: u64,
}

/// Caps the global worker pool; call once, before the first `run`.
pub fn configure_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Contract(format!("thread pool already configured: {e}")))
}

/// Quantiles are exact when every replication value is retained; past this
/// many replications a deterministic stride subsample is kept instead.
const QUANTILE_CAP: u64 = 65_536;

struct ChunkAgg {
    accs: Vec<Accumulator>,
    kept: Vec<Vec<f64>>,
}

/// Runs the replication loop for a per-replication evaluator returning one
/// value per grid point, with deterministic chunked aggregation.
fn replicate<F>(
    n_points: usize,
    replications: u64,
    base_seed: u64,
    eval: F,
) -> Result<(Vec<Accumulator>, Vec<Vec<f64>>)>
where
    F: Fn(&mut SeededStream) -> Result<Vec<f64>> + Sync,
{
    let stride = replications.div_ceil(QUANTILE_CAP).max(1);
    const CHUNK: u64 = 1_024;
    let n_chunks = replications.div_ceil(CHUNK);
    let chunks: Vec<Result<ChunkAgg>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(replications);
            let mut accs = vec![Accumulator::default(); n_points];
            let mut kept = vec![Vec::new(); n_points];
            for rep in lo..hi {
                let mut stream = SeededStream::new(base_seed + rep);
                let values = eval(&mut stream)?;
                debug_assert_eq!(values.len(), n_points);
                for (p, &v) in values.iter().enumerate() {
                    accs[p].push(v);
                    if rep % stride == 0 {
                        kept[p].push(v);
                    }
                }
            }
            Ok(ChunkAgg { accs, kept })
        })
        .collect();
    let mut accs = vec![Accumulator::default(); n_points];
    let mut kept = vec![Vec::new(); n_points];
    for chunk in chunks {
        let chunk = chunk?;
        for p in 0..n_points {
            accs[p].merge(&chunk.accs[p]);
            kept[p].extend_from_slice(&chunk.kept[p]);
        }
    }
    Ok((accs, kept))
}

fn points_from(accs: Vec<Accumulator>, kept: Vec<Vec<f64>>, indices: &[u64]) -> Vec<GridPoint> {
    accs.into_iter()
        .zip(kept)
        .zip(indices)
        .map(|((acc, mut vals), &index)| {
            vals.sort_by(f64::total_cmp);
            GridPoint {
                index,
                mean: acc.mean,
                std_error: if acc.count > 1 { acc.std_error() } else { 0.0 },
                q05: stats::quantile_sorted(&vals, 0.05),
                median: stats::quantile_sorted(&vals, 0.50),
                q95: stats::quantile_sorted(&vals, 0.95),
                target: None,
                deviation_se: None,
            }
        })
        .collect()
}

pub fn run(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let mut summary = BTreeMap::new();
    let (experiment_id, points) = match &config.spec {
        ExperimentSpec::WkConvergence { gamma, tau, k_grid } => {
            let params = EvtProcessParams {
                gamma: *gamma,
                f: WeightFunction::power(*tau),
                alpha: AlphaRule::matched_power(*tau),
                cutoff: 1,
                delta: 1.0,
            };
            let k_max = *k_grid.last().unwrap();
            let grid = k_grid.clone();
            let eval = move |stream: &mut SeededStream| -> Result<Vec<f64>> {
                let path = simulate_wk(stream, &params, k_max)?;
                Ok(grid
                    .iter()
                    .map(|&k| path.values[(k - 1) as usize])
                    .collect())
            };
            let (accs, kept) =
                replicate(k_grid.len(), config.replications, config.base_seed, eval)?;
            ("wk_convergence", points_from(accs, kept, k_grid))
        }
        ExperimentSpec::HillRatio {
            gamma,
            tau,
            n,
            k_grid,
            y0,
            mode,
        } => {
            let rep = QuantileRep::simplest(*y0, *gamma, *mode);
            let f = WeightFunction::power(*tau);
            let n = *n as usize;
            let grid = k_grid.clone();
            let y0 = *y0;
            let eval = move |stream: &mut SeededStream| -> Result<Vec<f64>> {
                let sample = sample_weibull_domain(stream, n, &rep)?;
                grid.iter()
                    .map(|&k| Ok(hill_ratio(&sample, &f, k, y0)?.ratio))
                    .collect()
            };
            let (accs, kept) =
                replicate(k_grid.len(), config.replications, config.base_seed, eval)?;
            ("hill_ratio", points_from(accs, kept, k_grid))
        }
        ExperimentSpec::GcipSweep {
            gamma,
            tau,
            delta,
            q_max,
        } => {
            let params = EvtProcessParams::power_case(*gamma, *tau, *delta);
            let model = conditions::CovarianceModel::EvtOracle { params };
            let (r1, r2) =
                conditions::eval_gcip(&model, *delta, *q_max, &VerdictTolerances::default())?;
            summary.insert("gcip1_sup".into(), r1.running_sup);
            summary.insert("gcip1_slope".into(), r1.loglog_slope);
            summary.insert("gcip2_sup".into(), r2.running_sup);
            summary.insert("gcip2_slope".into(), r2.loglog_slope);
            let points = r1
                .grid
                .iter()
                .map(|&(q, v)| GridPoint {
                    index: q,
                    mean: v,
                    std_error: 0.0,
                    q05: v,
                    median: v,
                    q95: v,
                    target: None,
                    deviation_se: None,
                })
                .collect();
            ("gcip_sweep", points)
        }
        ExperimentSpec::MaxvarProbe { r, n, lambdas } => {
            let sampler = |s: &mut SeededStream, n: usize| -> Result<Vec<f64>> {
                Ok((0..n).map(|_| s.normal()).collect())
            };
            let probe = conditions::maxvar_probe(
                sampler,
                *r,
                *n as usize,
                lambdas,
                config.replications,
                config.base_seed,
            )?;
            summary.insert("c_estimate".into(), probe.c_estimate);
            summary.insert("c_std_error".into(), probe.c_std_error);
            summary.insert("e_max_ratio".into(), probe.e_max_ratio);
            summary.insert("var_sn".into(), probe.var_sn);
            let points = probe
                .lambda_curve
                .iter()
                .enumerate()
                .map(|(i, &(_, v))| GridPoint {
                    index: (i + 1) as u64,
                    mean: v,
                    std_error: probe.c_std_error,
                    q05: v,
                    median: v,
                    q95: v,
                    target: None,
                    deviation_se: None,
                })
                .collect();
            ("maxvar_probe", points)
        }
        ExperimentSpec::ConditionSuite {
            gamma,
            tau,
            delta,
            k_max,
        } => {
            let params = EvtProcessParams::power_case(*gamma, *tau, *delta);
            let reports = conditions::eval_prop2(&params, *k_max, &VerdictTolerances::default())?;
            let points = reports
                .iter()
                .enumerate()
                .map(|(i, rep)| {
                    let code = match rep.verdict {
                        conditions::Verdict::Bounded => 0.0,
                        conditions::Verdict::Diverging => 1.0,
                        conditions::Verdict::Inconclusive => 2.0,
                    };
                    summary.insert(format!("{}_verdict", rep.condition_id), code);
                    GridPoint {
                        index: (i + 1) as u64,
                        mean: rep.running_sup,
                        std_error: 0.0,
                        q05: rep.running_sup,
                        median: rep.running_sup,
                        q95: rep.running_sup,
                        target: None,
                        deviation_se: None,
                    }
                })
                .collect();
            ("condition_suite", points)
        }
    };
    Ok(RunResult {
        experiment_id: experiment_id.to_string(),
        replications: config.replications,
        base_seed: config.base_seed,
        config_hash: config.config_hash(),
        points,
        summary,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

/// Theoretical target per grid index.
#[derive(Clone)]
pub enum TargetRule {
    Rule(Arc<dyn Fn(u64) -> f64 + Send + Sync>),
    Table(Vec<(u64, f64)>),
}

impl TargetRule {
    pub fn constant(c: f64) -> Self {
        TargetRule::Rule(Arc::new(move |_| c))
    }

    fn eval(&self, index: u64) -> Option<f64> {
        match self {
            TargetRule::Rule(f) => Some(f(index)),
            TargetRule::Table(t) => t.iter().find(|&&(i, _)| i == index).map(|&(_, v)| v),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviationTable {
    /// `(index, mean - target, z)` with `z` in standard-error units.
    pub rows: Vec<(u64, f64, f64)>,
    pub worst_z: f64,
}

/// Fills in targets and deviations; errors when the rule misses a grid index.
pub fn compare_to_target(result: &mut RunResult, rule: &TargetRule) -> Result<DeviationTable> {
    let mut rows = Vec::with_capacity(result.points.len());
    let mut worst: f64 = 0.0;
    for p in &mut result.points {
        let t = rule.eval(p.index).ok_or_else(|| {
            Error::GridMismatch(format!("target rule undefined at index {}", p.index))
        })?;
        let dev = p.mean - t;
        let z = if p.std_error > 0.0 {
            dev / p.std_error
        } else {
            f64::INFINITY * dev.signum()
        };
        let z = if dev == 0.0 { 0.0 } else { z };
        p.target = Some(t);
        p.deviation_se = Some(z);
        worst = worst.max(z.abs());
        rows.push((p.index, dev, z));
    }
    Ok(DeviationTable {
        rows,
        worst_z: worst,
    })
}
