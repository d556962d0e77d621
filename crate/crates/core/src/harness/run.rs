//! Simulation driver: replicated runs, cross-replicate aggregation, and
//! closed-form bound tables.

use nalgebra::DVector;
use rayon::prelude::*;

use super::config::{AlgoConfig, AlgoKind, EnvConfig, ExperimentConfig, ExperimentKind};
use super::{HarnessError, HarnessResult};
use crate::bandits::{pseudo_regret, DiscountedBanditAgent, LinearBanditAgent};
use crate::bounds::{self, BoundParams, Estimator};
use crate::env::{
    derive_replicate_seed, BanditEnv, BanditEnvSpec, RegressionEnv, RegressionEnvSpec,
};
use crate::regressors::{batch_ols, Algo, OnlineRegressor};

/// One recorded step of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    /// Oracle regret increment (regression) or instantaneous pseudo-regret
    /// (bandit runs).
    pub instant_regret: f64,
    /// Prefix sum of `instant_regret`.
    pub cum_regret: f64,
    /// First diagnostic term of the per-step regret decomposition
    /// (regression runs only).
    pub first_term: Option<f64>,
    /// Second diagnostic term; becomes known one step later for the forward
    /// family and is identically zero for ridge and for the final step.
    pub second_term: Option<f64>,
    /// Instantaneous pseudo-regret (bandit runs only).
    pub pseudo_regret: Option<f64>,
    /// Matching closed-form bound at this step, where one applies.
    pub bound_overlay: Option<f64>,
}

/// Per-(algorithm, replicate) trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub algo: AlgoConfig,
    pub replicate: u32,
    pub rows: Vec<TraceRow>,
}

/// Batch-regret checkpoint: cumulative online loss against the best batch
/// fit in hindsight, next to the oracle regret at the same step.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRow {
    pub algo: AlgoConfig,
    pub replicate: u32,
    pub t: u64,
    pub batch_regret: f64,
    pub oracle_regret: f64,
}

/// Cross-replicate aggregate at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algo: AlgoConfig,
    pub t: u64,
    pub mean_instant_regret: f64,
    pub mean_first_term: Option<f64>,
    pub mean_second_term: Option<f64>,
    pub mean_cum_regret: f64,
    pub std_cum_regret: f64,
    pub q1_cum_regret: f64,
    pub median_cum_regret: f64,
    pub q3_cum_regret: f64,
    pub bound_overlay: Option<f64>,
}

/// One closed-form bound value on the horizon grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub algo: AlgoConfig,
    pub t: u64,
    pub bound: &'static str,
    pub value: f64,
}

/// Everything a simulation run produces.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub traces: Vec<Trace>,
    pub summary: Vec<SummaryRow>,
    pub checkpoints: Vec<CheckpointRow>,
}

/// Logarithmic checkpoint grid: powers of two up to the horizon, then the
/// horizon itself.
pub fn checkpoint_grid(horizon: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut t = 1u64;
    while t <= horizon {
        grid.push(t);
        t = t.saturating_mul(2);
    }
    if grid.last() != Some(&horizon) {
        grid.push(horizon);
    }
    grid
}

/// Run every (algorithm, replicate) pair of a simulation config and
/// aggregate. Tasks execute in parallel; outputs are ordered by
/// (algorithm, replicate) index, never by completion time.
pub fn run_experiment(config: &ExperimentConfig) -> HarnessResult<ExperimentResult> {
    config.validate()?;
    let traces_and_checkpoints: Vec<HarnessResult<(Trace, Vec<CheckpointRow>)>> = match config.kind
    {
        ExperimentKind::Regression => {
            let EnvConfig::Regression(spec) = &config.env else {
                unreachable!("validated");
            };
            let grid = checkpoint_grid(spec.horizon);
            let overlays: Vec<Option<Vec<f64>>> = config
                .algos
                .iter()
                .map(|a| regression_overlay(config, a, spec.horizon))
                .collect();
            tasks(config)
                .into_par_iter()
                .map(|(ai, rep)| {
                    run_regression_replicate(config, spec, ai, rep, overlays[ai].as_deref(), &grid)
                })
                .collect()
        }
        ExperimentKind::Bandit | ExperimentKind::Nonstationary => {
            let EnvConfig::Bandit(spec) = &config.env else {
                unreachable!("validated");
            };
            let overlays: Vec<Option<Vec<f64>>> = {
                // The drift path is seed-independent, so any replicate's
                // env yields the variation prefix for the overlays.
                let env =
                    BanditEnv::new(spec.clone(), derive_replicate_seed(config.master_seed, 0))?;
                let variation = variation_prefix(&env);
                config
                    .algos
                    .iter()
                    .map(|a| bandit_overlay(config, a, spec.horizon, &variation))
                    .collect()
            };
            tasks(config)
                .into_par_iter()
                .map(|(ai, rep)| {
                    run_bandit_replicate(config, spec.clone(), ai, rep, overlays[ai].as_deref())
                        .map(|t| (t, Vec::new()))
                })
                .collect()
        }
        ExperimentKind::BoundsTable => {
            return Err(HarnessError::Config(
                "bounds_table configs tabulate closed forms; call bounds_table".into(),
            ));
        }
    };

    let mut traces = Vec::with_capacity(traces_and_checkpoints.len());
    let mut checkpoints = Vec::new();
    for item in traces_and_checkpoints {
        let (trace, mut rows) = item?;
        traces.push(trace);
        checkpoints.append(&mut rows);
    }
    let summary = aggregate(&traces)?;
    Ok(ExperimentResult {
        kind: config.kind,
        traces,
        summary,
        checkpoints,
    })
}

/// (algorithm index, replicate) pairs in output order.
fn tasks(config: &ExperimentConfig) -> Vec<(usize, u32)> {
    (0..config.algos.len())
        .flat_map(|ai| (0..config.replicates).map(move |rep| (ai, rep)))
        .collect()
}

fn regression_overlay(
    config: &ExperimentConfig,
    algo: &AlgoConfig,
    horizon: u64,
) -> Option<Vec<f64>> {
    let p = config.bound_params(algo)?;
    let eval: fn(&BoundParams, u64) -> f64 = match algo.algo {
        AlgoKind::Ridge => bounds::regret_bound_ridge,
        AlgoKind::Forward => bounds::regret_bound_forward,
        _ => return None,
    };
    Some((1..=horizon).map(|t| eval(&p, t)).collect())
}

/// Cumulative variation of the target: entry `t-1` holds the path length up
/// to round `t`.
fn variation_prefix(env: &BanditEnv) -> Vec<f64> {
    let horizon = env.spec().horizon;
    let mut prefix = Vec::with_capacity(horizon as usize);
    let mut total = 0.0;
    let mut prev = env.theta_at(1);
    prefix.push(0.0);
    for t in 2..=horizon {
        let cur = env.theta_at(t);
        total += (&cur - &prev).norm();
        prefix.push(total);
        prev = cur;
    }
    prefix
}

fn bandit_overlay(
    config: &ExperimentConfig,
    algo: &AlgoConfig,
    horizon: u64,
    variation: &[f64],
) -> Option<Vec<f64>> {
    let p = config.bound_params(algo)?;
    match algo.algo {
        AlgoKind::Oful => Some(
            (1..=horizon)
                .map(|t| bounds::oful_regret_bound(Estimator::Ridge, &p, t))
                .collect(),
        ),
        AlgoKind::OfulForward => Some(
            (1..=horizon)
                .map(|t| bounds::oful_regret_bound(Estimator::Forward, &p, t))
                .collect(),
        ),
        AlgoKind::Dlinucb | AlgoKind::DlinucbForward => {
            let gamma = algo.gamma?;
            // The drift bound needs strict discounting.
            if gamma >= 1.0 {
                return None;
            }
            let window = algo
                .window
                .unwrap_or(((horizon as f64).ln() / (1.0 - gamma)).ceil() as u64)
                .max(1);
            let estimator = if algo.algo == AlgoKind::Dlinucb {
                Estimator::Ridge
            } else {
                Estimator::Forward
            };
            let curve = (1..=horizon)
                .map(|t| {
                    bounds::dlinucb_regret_bound(
                        estimator,
                        &p,
                        t,
                        gamma,
                        window,
                        variation[(t - 1) as usize],
                    )
                    .map(|b| b.total())
                })
                .collect::<crate::Result<Vec<f64>>>()
                .ok()?;
            Some(curve)
        }
        _ => None,
    }
}

fn run_regression_replicate(
    config: &ExperimentConfig,
    spec: &RegressionEnvSpec,
    algo_idx: usize,
    replicate: u32,
    overlay: Option<&[f64]>,
    grid: &[u64],
) -> HarnessResult<(Trace, Vec<CheckpointRow>)> {
    let algo_cfg = config.algos[algo_idx];
    let seed = derive_replicate_seed(config.master_seed, replicate as u64);
    let env = RegressionEnv::new(spec.clone(), seed)?;
    let algo = match algo_cfg.algo {
        AlgoKind::Ridge => Algo::Ridge,
        AlgoKind::Forward => Algo::Forward,
        AlgoKind::UnregularizedForward => Algo::UnregularizedForward,
        _ => unreachable!("validated"),
    };
    let mut regressor = OnlineRegressor::new(algo, spec.dim, algo_cfg.lambda)?;

    let mut rows: Vec<TraceRow> = Vec::with_capacity(spec.horizon as usize);
    let mut checkpoints = Vec::with_capacity(grid.len());
    let mut features: Vec<DVector<f64>> = Vec::with_capacity(spec.horizon as usize);
    let mut labels: Vec<f64> = Vec::with_capacity(spec.horizon as usize);
    let mut cum_regret = 0.0;
    let mut cum_loss = 0.0;
    let mut grid_next = 0usize;

    for t in 1..=spec.horizon {
        let round = env.round(t)?;
        // The prediction at t reveals the previous step's second term for
        // the forward family.
        let prediction = regressor.predict(&round.x)?;
        if let Some(second) = prediction.prev_second_term {
            rows[(t - 2) as usize].second_term = Some(second);
        }
        let (_, diag) = regressor.observe(&round.x, round.y, Some(env.theta_star()))?;
        let instant = diag.instant_oracle_regret.expect("theta_star was supplied");
        cum_regret += instant;
        cum_loss += diag.loss;
        rows.push(TraceRow {
            t,
            instant_regret: instant,
            cum_regret,
            first_term: Some(diag.first_term),
            second_term: Some(diag.second_term),
            pseudo_regret: None,
            bound_overlay: overlay.map(|o| o[(t - 1) as usize]),
        });
        features.push(round.x);
        labels.push(round.y);
        if grid.get(grid_next) == Some(&t) {
            grid_next += 1;
            let fit = batch_ols(&features, &labels)?;
            checkpoints.push(CheckpointRow {
                algo: algo_cfg,
                replicate,
                t,
                batch_regret: cum_loss - fit.loss,
                oracle_regret: cum_regret,
            });
        }
    }
    Ok((
        Trace {
            algo: algo_cfg,
            replicate,
            rows,
        },
        checkpoints,
    ))
}

enum BanditAgent {
    Stationary(LinearBanditAgent),
    Discounted(DiscountedBanditAgent),
}

impl BanditAgent {
    fn select(&self, arms: &[DVector<f64>]) -> crate::Result<(usize, f64)> {
        match self {
            BanditAgent::Stationary(a) => a.select(arms),
            BanditAgent::Discounted(a) => a.select(arms),
        }
    }

    fn update(&mut self, arm: &DVector<f64>, reward: f64) -> crate::Result<()> {
        match self {
            BanditAgent::Stationary(a) => a.update(arm, reward),
            BanditAgent::Discounted(a) => a.update(arm, reward),
        }
    }
}

fn run_bandit_replicate(
    config: &ExperimentConfig,
    spec: BanditEnvSpec,
    algo_idx: usize,
    replicate: u32,
    overlay: Option<&[f64]>,
) -> HarnessResult<Trace> {
    let algo_cfg = config.algos[algo_idx];
    let seed = derive_replicate_seed(config.master_seed, replicate as u64);
    let horizon = spec.horizon;
    let env = BanditEnv::new(spec, seed)?;
    let params = config.bound_params(&algo_cfg).ok_or_else(|| {
        HarnessError::Config(format!(
            "{} has no valid bound parameters",
            algo_cfg.algo.label()
        ))
    })?;
    let mut agent = match algo_cfg.algo {
        AlgoKind::Oful => {
            BanditAgent::Stationary(LinearBanditAgent::new(Estimator::Ridge, params)?)
        }
        AlgoKind::OfulForward => {
            BanditAgent::Stationary(LinearBanditAgent::new(Estimator::Forward, params)?)
        }
        AlgoKind::Dlinucb => BanditAgent::Discounted(DiscountedBanditAgent::new(
            Estimator::Ridge,
            params,
            algo_cfg.gamma.expect("validated"),
        )?),
        AlgoKind::DlinucbForward => BanditAgent::Discounted(DiscountedBanditAgent::new(
            Estimator::Forward,
            params,
            algo_cfg.gamma.expect("validated"),
        )?),
        _ => unreachable!("validated"),
    };

    let mut rows = Vec::with_capacity(horizon as usize);
    let mut cum = 0.0;
    for t in 1..=horizon {
        let round = env.round(t)?;
        let (chosen, _) = agent.select(&round.arms)?;
        let reward = env.reward(&round, chosen)?;
        agent.update(&round.arms[chosen], reward)?;
        let instant = pseudo_regret(&round.arms, chosen, &round.theta)?;
        cum += instant;
        rows.push(TraceRow {
            t,
            instant_regret: instant,
            cum_regret: cum,
            first_term: None,
            second_term: None,
            pseudo_regret: Some(instant),
            bound_overlay: overlay.map(|o| o[(t - 1) as usize]),
        });
    }
    Ok(Trace {
        algo: algo_cfg,
        replicate,
        rows,
    })
}

/// Linear-interpolation quantile of a sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
}

/// Collapse traces into per-(algorithm, step) aggregates. Traces must form
/// complete replicate sets: same number of rows for every replicate of an
/// algorithm.
pub fn aggregate(traces: &[Trace]) -> HarnessResult<Vec<SummaryRow>> {
    if traces.is_empty() {
        return Err(HarnessError::Config("no traces to aggregate".into()));
    }
    // Group by algorithm, preserving first-appearance order.
    let mut groups: Vec<(AlgoConfig, Vec<&Trace>)> = Vec::new();
    for trace in traces {
        match groups.iter_mut().find(|(a, _)| *a == trace.algo) {
            Some((_, list)) => list.push(trace),
            None => groups.push((trace.algo, vec![trace])),
        }
    }

    let mut summary = Vec::new();
    for (algo, group) in groups {
        let steps = group[0].rows.len();
        if group.iter().any(|t| t.rows.len() != steps) {
            return Err(HarnessError::Config(format!(
                "replicates of {} disagree on the horizon",
                algo.algo.label()
            )));
        }
        let n = group.len() as f64;
        let mut cums = vec![0.0; group.len()];
        for step in 0..steps {
            let mut mean_instant = 0.0;
            let mut first_sum = 0.0;
            let mut second_sum = 0.0;
            let mut has_terms = true;
            for (i, trace) in group.iter().enumerate() {
                let row = &trace.rows[step];
                mean_instant += row.instant_regret;
                cums[i] = row.cum_regret;
                match (row.first_term, row.second_term) {
                    (Some(f), Some(s)) => {
                        first_sum += f;
                        second_sum += s;
                    }
                    _ => has_terms = false,
                }
            }
            mean_instant /= n;
            let mean_cum = cums.iter().sum::<f64>() / n;
            let std_cum = if cums.len() > 1 {
                let var = cums.iter().map(|c| (c - mean_cum).powi(2)).sum::<f64>() / (n - 1.0);
                var.sqrt()
            } else {
                0.0
            };
            let mut sorted = cums.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("regret values are ordered"));
            let row0 = &group[0].rows[step];
            summary.push(SummaryRow {
                algo,
                t: row0.t,
                mean_instant_regret: mean_instant,
                mean_first_term: has_terms.then_some(first_sum / n),
                mean_second_term: has_terms.then_some(second_sum / n),
                mean_cum_regret: mean_cum,
                std_cum_regret: std_cum,
                q1_cum_regret: quantile(&sorted, 0.25),
                median_cum_regret: quantile(&sorted, 0.5),
                q3_cum_regret: quantile(&sorted, 0.75),
                bound_overlay: row0.bound_overlay,
            });
        }
    }
    Ok(summary)
}

/// Tabulate the closed-form bounds that match each configured algorithm on
/// `{0} ∪ checkpoint_grid(horizon)`. Every tabulated evaluator vanishes at
/// `t = 0`. Regression algorithms contribute their leading-order regret
/// bound and elliptical-potential budget; bandit algorithms their
/// pseudo-regret bound (drift bounds use the target's realized variation
/// prefix).
pub fn bounds_table(config: &ExperimentConfig) -> HarnessResult<Vec<BoundsRow>> {
    config.validate()?;
    let horizon = config.env.horizon();
    let mut grid = vec![0u64];
    grid.extend(checkpoint_grid(horizon));
    let variation: Vec<f64> = match &config.env {
        EnvConfig::Bandit(spec) => {
            let env = BanditEnv::new(spec.clone(), derive_replicate_seed(config.master_seed, 0))?;
            variation_prefix(&env)
        }
        EnvConfig::Regression(_) => Vec::new(),
    };

    let mut rows = Vec::new();
    for algo in &config.algos {
        let Some(p) = config.bound_params(algo) else {
            continue;
        };
        let mut push = |t: u64, bound: &'static str, value: f64| {
            rows.push(BoundsRow {
                algo: *algo,
                t,
                bound,
                value,
            });
        };
        for &t in &grid {
            match algo.algo {
                AlgoKind::Ridge => {
                    push(t, "regret_bound", bounds::regret_bound_ridge(&p, t));
                    push(
                        t,
                        "feature_budget",
                        bounds::feature_budget(Estimator::Ridge, &p, t, None)?,
                    );
                }
                AlgoKind::Forward => {
                    push(t, "regret_bound", bounds::regret_bound_forward(&p, t));
                    push(
                        t,
                        "feature_budget",
                        bounds::feature_budget(Estimator::Forward, &p, t, None)?,
                    );
                }
                AlgoKind::UnregularizedForward => {}
                AlgoKind::Oful => {
                    push(
                        t,
                        "pseudo_regret_bound",
                        bounds::oful_regret_bound(Estimator::Ridge, &p, t),
                    );
                }
                AlgoKind::OfulForward => {
                    push(
                        t,
                        "pseudo_regret_bound",
                        bounds::oful_regret_bound(Estimator::Forward, &p, t),
                    );
                }
                AlgoKind::Dlinucb | AlgoKind::DlinucbForward => {
                    let gamma = algo.gamma.expect("validated");
                    if gamma >= 1.0 {
                        continue;
                    }
                    let window = algo
                        .window
                        .unwrap_or(((horizon as f64).ln() / (1.0 - gamma)).ceil() as u64)
                        .max(1);
                    let estimator = if algo.algo == AlgoKind::Dlinucb {
                        Estimator::Ridge
                    } else {
                        Estimator::Forward
                    };
                    let b_t = if t == 0 {
                        0.0
                    } else {
                        variation[(t - 1) as usize]
                    };
                    let bound = bounds::dlinucb_regret_bound(estimator, &p, t, gamma, window, b_t)?;
                    push(t, "pseudo_regret_bound", bound.total());
                }
            }
        }
    }
    Ok(rows)
}
