//! Monte Carlo estimates of the events the bounds control.
//!
//! Trajectory `i` of an experiment always uses stream `i` of the master seed
//! and results are gathered in index order, so every estimate is bit-exact
//! regardless of the worker count.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{compute_cn, concentration_rhs, BoundInputs, Horizon};
use crate::error::{param, Error, Result};
use crate::sgd::{run_summary, SgdConfig, TrajectorySummary};
use crate::stats::{loglog_fit, wilson_interval, CONFIDENCE};

/// Smallest accepted number of trials.
pub const MIN_TRIALS: usize = 100;
/// Rate fits refuse horizons where fewer trajectories than this fraction stayed.
pub const MIN_STAYED_FRACTION: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sgd: SgdConfig,
    pub trials: usize,
    pub epsilon_grid: Vec<f64>,
    pub bound_inputs: BoundInputs,
    /// Hex digest identifying the experiment file, carried into failure reports.
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sgd.validate()?;
        self.bound_inputs.validate()?;
        if self.trials < MIN_TRIALS {
            return Err(param("trials", format!("need at least {MIN_TRIALS}, got {}", self.trials)));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(param("epsilon_grid", format!("entries must be positive, got {e}")));
        }
        let b = &self.bound_inputs;
        let d1 = self.sgd.landscape.distance(&self.sgd.x1);
        let consistent = b.r == self.sgd.spec.radius
            && b.schedule == self.sgd.schedule
            && b.batch_size == self.sgd.batch_size
            && b.horizon == Horizon::Finite(self.sgd.horizon)
            && (b.dist1 - d1).abs() <= 1e-12 * (1.0 + d1);
        if !consistent {
            return Err(param(
                "bound_inputs",
                "r, schedule, batch size, horizon and dist(x1, X) must match the SGD configuration",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    Holds,
    Fails,
    /// The bound carries no information (e.g. `C_N >= 1`).
    Vacuous,
    /// Only an exponent is predicted, so there is no absolute bound to compare with.
    NotApplicable,
}

impl fmt::Display for Dominance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dominance::Holds => "true",
            Dominance::Fails => "false",
            Dominance::Vacuous => "vacuous",
            Dominance::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCResult {
    pub event: String,
    /// `eps` for concentration events; absent for stability.
    pub parameter: Option<f64>,
    pub successes: usize,
    pub trials: usize,
    pub empirical_p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theoretical_bound: Option<f64>,
    pub dominated: Dominance,
}

impl MCResult {
    fn new(event: &str, parameter: Option<f64>, successes: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, CONFIDENCE);
        Self {
            event: event.to_string(),
            parameter,
            successes,
            trials,
            empirical_p: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            theoretical_bound: None,
            dominated: Dominance::NotApplicable,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

pub const EVENT_STABILITY: &str = "stay_in_neighborhood";
pub const EVENT_MIN_SUPPORT: &str = "min_h_above_eps";
pub const EVENT_FINAL_GAP: &str = "final_gap_above_eps";

/// Runs `trials` trajectories of `sgd`, recording gaps at `checkpoints`.
pub fn simulate(sgd: &SgdConfig, trials: usize, checkpoints: &[usize]) -> Result<Vec<TrajectorySummary>> {
    sgd.validate()?;
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.iter().any(|&c| c == 0 || c > sgd.horizon) {
        return Err(param("checkpoints", "must be strictly increasing within 1..=horizon"));
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_summary(sgd, i, checkpoints))
        .collect()
}

/// Stay frequency against `1 - C_N`.
pub fn stability_from_runs(runs: &[TrajectorySummary], bounds: &BoundInputs) -> Result<MCResult> {
    let stayed = runs.iter().filter(|s| s.stayed).count();
    let mut res = MCResult::new(EVENT_STABILITY, None, stayed, runs.len());
    let report = compute_cn(bounds)?;
    res.theoretical_bound = Some(report.stability_lower_bound);
    res.dominated = if report.vacuous {
        Dominance::Vacuous
    } else if res.empirical_p >= report.stability_lower_bound - res.half_width() {
        Dominance::Holds
    } else {
        Dominance::Fails
    };
    Ok(res)
}

/// Per `eps`: `min_n h > eps` against its explicit bound, and the final gap
/// event (exponent-only, reported without a bound).
pub fn concentration_from_runs(runs: &[TrajectorySummary], bounds: &BoundInputs, epsilon_grid: &[f64]) -> Result<Vec<MCResult>> {
    if epsilon_grid.is_empty() {
        return Err(param("epsilon_grid", "must not be empty"));
    }
    let mut out = Vec::with_capacity(2 * epsilon_grid.len());
    for &eps in epsilon_grid {
        let hits = runs.iter().filter(|s| s.min_h > eps).count();
        let mut res = MCResult::new(EVENT_MIN_SUPPORT, Some(eps), hits, runs.len());
        let rhs = concentration_rhs(bounds, eps)?.total;
        res.theoretical_bound = Some(rhs);
        res.dominated = if !(rhs < 1.0) {
            Dominance::Vacuous
        } else if res.empirical_p <= rhs + res.half_width() {
            Dominance::Holds
        } else {
            Dominance::Fails
        };
        out.push(res);

        let hits = runs.iter().filter(|s| s.final_gap > eps).count();
        out.push(MCResult::new(EVENT_FINAL_GAP, Some(eps), hits, runs.len()));
    }
    Ok(out)
}

pub fn estimate_stability(config: &ExperimentConfig) -> Result<MCResult> {
    config.validate()?;
    let runs = simulate(&config.sgd, config.trials, &[])?;
    stability_from_runs(&runs, &config.bound_inputs)
}

pub fn estimate_concentration(config: &ExperimentConfig) -> Result<Vec<MCResult>> {
    config.validate()?;
    if config.epsilon_grid.is_empty() {
        return Err(param("epsilon_grid", "must not be empty"));
    }
    let runs = simulate(&config.sgd, config.trials, &[])?;
    concentration_from_runs(&runs, &config.bound_inputs, &config.epsilon_grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub horizons: Vec<usize>,
    /// Mean of `f(x_N) - f*` over trajectories still inside at `N`.
    pub means: Vec<f64>,
    pub stayed_fractions: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Log-log slope of the conditioned mean gap. One trajectory per trial is
/// read at every horizon; the run length is the largest horizon.
pub fn fit_rate_slope(sgd: &SgdConfig, trials: usize, horizons: &[usize]) -> Result<RateFit> {
    if horizons.len() < 4 {
        return Err(param("horizons", "need at least four horizons"));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(param("horizons", "must be positive and strictly increasing"));
    }
    let span = (*horizons.last().unwrap() as f64 / horizons[0] as f64).log10();
    if span < 1.5 - 1e-9 {
        return Err(param("horizons", format!("must span at least 1.5 decades, got {span:.3}")));
    }
    if trials < MIN_TRIALS {
        return Err(param("trials", format!("need at least {MIN_TRIALS}, got {trials}")));
    }
    let cfg = SgdConfig {
        horizon: *horizons.last().unwrap(),
        ..sgd.clone()
    };
    let runs = simulate(&cfg, trials, horizons)?;
    let mut means = Vec::with_capacity(horizons.len());
    let mut fractions = Vec::with_capacity(horizons.len());
    for (k, &n) in horizons.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for s in &runs {
            if s.exit_time.is_none_or(|tau| tau > n) {
                sum += s.checkpoint_gaps[k];
                count += 1;
            }
        }
        let frac = count as f64 / trials as f64;
        if frac < MIN_STAYED_FRACTION {
            return Err(Error::Refused(format!(
                "only {:.1}% of trajectories stayed through N = {n}",
                100.0 * frac
            )));
        }
        fractions.push(frac);
        means.push(sum / count as f64);
    }
    let xs: Vec<f64> = horizons.iter().map(|&n| n as f64).collect();
    let fit = loglog_fit(&xs, &means).map_err(|_| Error::Refused("conditioned mean gap vanished at some horizon".into()))?;
    Ok(RateFit {
        horizons: horizons.to_vec(),
        means,
        stayed_fractions: fractions,
        slope: fit.slope,
        intercept: fit.intercept,
        stderr: fit.stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub event: String,
    pub parameter: Option<f64>,
    pub empirical_p: f64,
    pub theoretical_bound: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub passed: usize,
    pub failed: usize,
    pub vacuous: usize,
    pub not_applicable: usize,
    pub failures: Vec<FailureRecord>,
}

impl ComparisonSummary {
    pub fn all_dominated(&self) -> bool {
        self.failed == 0
    }
}

pub fn compare_to_bounds(results: &[MCResult], seed: u64, config_hash: &str) -> ComparisonSummary {
    let mut s = ComparisonSummary {
        passed: 0,
        failed: 0,
        vacuous: 0,
        not_applicable: 0,
        failures: Vec::new(),
    };
    for r in results {
        match r.dominated {
            Dominance::Holds => s.passed += 1,
            Dominance::Vacuous => s.vacuous += 1,
            Dominance::NotApplicable => s.not_applicable += 1,
            Dominance::Fails => {
                s.failed += 1;
                s.failures.push(FailureRecord {
                    event: r.event.clone(),
                    parameter: r.parameter,
                    empirical_p: r.empirical_p,
                    theoretical_bound: r.theoretical_bound,
                    seed,
                    config_hash: config_hash.to_string(),
                });
            }
        }
    }
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

/// Writes `preamble` verbatim, then rows
/// `event,parameter,empirical,ci_low,ci_high,bound,dominated`.
pub fn write_results_csv<W: Write>(results: &[MCResult], preamble: &str, mut out: W) -> Result<(), csv::Error> {
    out.write_all(preamble.as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event", "parameter", "empirical", "ci_low", "ci_high", "bound", "dominated"])?;
    for r in results {
        w.write_record([
            r.event.clone(),
            fmt_opt(r.parameter),
            format!("{:e}", r.empirical_p),
            format!("{:e}", r.ci_low),
            format!("{:e}", r.ci_high),
            fmt_opt(r.theoretical_bound),
            r.dominated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `preamble`, then one row per horizon with the fitted slope repeated.
pub fn write_rate_csv<W: Write>(fit: &RateFit, preamble: &str, mut out: W) -> Result<(), csv::Error> {
    out.write_all(preamble.as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["horizon", "mean_gap", "stayed_fraction", "slope", "stderr"])?;
    for ((n, m), f) in fit.horizons.iter().zip(&fit.means).zip(&fit.stayed_fractions) {
        w.write_record([
            n.to_string(),
            format!("{m:e}"),
            format!("{f:e}"),
            format!("{:e}", fit.slope),
            format!("{:e}", fit.stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}
