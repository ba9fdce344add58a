//! Simulated annealing over group partitions.
//!
//! Each iteration proposes a neighbour, scores it, and moves there when the
//! score does not drop, or otherwise when `exp((new - old) / T)` beats a
//! uniform draw from `[0, 1)`. The temperature then shrinks by `alpha`. A run
//! stops at the first of: temperature at or below `t_min`, the iteration cap,
//! or the runtime cap.
//!
//! [`anneal_with_restarts`] repeats the run from fresh random partitions and
//! keeps the best score seen, preferring the earliest restart on ties.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cohort::{initial_partition, propose_neighbor, Cohort, Partition};
use crate::objective::{evaluate, ObjectiveError, ObjectiveSpec};

#[derive(Debug, Error, PartialEq)]
pub enum AnnealError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("at least one restart is required")]
    NoRestarts,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Returns `exp((score_new - score_old) / temperature)`.
///
/// The value is not capped at 1.
pub fn acceptance_probability(
    score_new: f64,
    score_old: f64,
    temperature: f64,
) -> Result<f64, AnnealError> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(AnnealError::NonPositiveTemperature(temperature));
    }
    Ok(((score_new - score_old) / temperature).exp())
}

/// The move decision: improvements and ties are taken outright, worse
/// candidates are taken when the acceptance probability beats a uniform draw.
pub fn accept<R: Rng + ?Sized>(
    score_new: f64,
    score_old: f64,
    temperature: f64,
    rng: &mut R,
) -> Result<bool, AnnealError> {
    let a = acceptance_probability(score_new, score_old, temperature)?;
    if score_new >= score_old {
        return Ok(true);
    }
    Ok(a > rng.gen::<f64>())
}

/// Number of `T *= alpha` steps needed to bring `t0` down to `t_min`:
/// the smallest `k` with `t0 * alpha^k <= t_min`.
///
/// Starts from `ceil((ln t_min - ln t0) / ln alpha)` and nudges the result
/// by one when rounding in the logarithms lands on the wrong side of an
/// exact power.
pub fn cooling_steps(t0: f64, t_min: f64, alpha: f64) -> Result<u64, AnnealError> {
    if !(t0 > 0.0 && t_min > 0.0 && t0.is_finite()) {
        return Err(AnnealError::InvalidSchedule(format!(
            "temperatures must be positive and finite (t0={t0}, t_min={t_min})"
        )));
    }
    if t_min >= t0 {
        return Err(AnnealError::InvalidSchedule(format!(
            "t_min {t_min} must be below t0 {t0}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnnealError::InvalidSchedule(format!(
            "alpha {alpha} must lie strictly between 0 and 1"
        )));
    }
    let real = (t_min.ln() - t0.ln()) / alpha.ln();
    let mut k = real.ceil().max(1.0) as u64;
    let temp = |k: u64| t0 * alpha.powf(k as f64);
    while temp(k) > t_min {
        k += 1;
    }
    while k > 1 && temp(k - 1) <= t_min {
        k -= 1;
    }
    Ok(k)
}

/// Geometric cooling parameters and stopping caps.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub t0: f64,
    pub alpha: f64,
    pub t_min: f64,
    pub max_iterations: u64,
    pub max_runtime: Duration,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            t0: 10.0,
            alpha: 0.7,
            t_min: 1e-4,
            max_iterations: 100_000,
            max_runtime: Duration::from_secs(60),
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<(), AnnealError> {
        cooling_steps(self.t0, self.t_min, self.alpha)?;
        if self.max_runtime.is_zero() {
            return Err(AnnealError::InvalidSchedule(
                "max runtime must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `t0 * alpha^k`.
    pub fn temperature_at(&self, k: u64) -> f64 {
        self.t0 * self.alpha.powf(k as f64)
    }

    /// Whether alpha falls in the 0.5..0.8 band suited to a hot start.
    pub fn is_rapid_cooling(&self) -> bool {
        self.alpha > 0.5 && self.alpha < 0.8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TemperatureFloor,
    IterationCap,
    RuntimeCap,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TemperatureFloor => "temperature_floor",
            StopReason::IterationCap => "iteration_cap",
            StopReason::RuntimeCap => "runtime_cap",
        })
    }
}

/// One annealing step. `temperature` is the value the step was decided at.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub temperature: f64,
    pub candidate_score: f64,
    pub current_score: f64,
    pub best_score: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub restart: usize,
    pub best_score: f64,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    /// Canonically relabeled best partition.
    pub best_partition: Partition,
    pub best_score: f64,
    pub initial_score: f64,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceRow>,
    pub restart_summaries: Vec<RestartSummary>,
    /// Restart the best partition came from; 0 for a single run.
    pub best_restart: usize,
}

/// Live state of a run.
#[derive(Debug, Clone)]
pub struct AnnealState {
    pub current_partition: Partition,
    pub current_score: f64,
    pub best_partition: Partition,
    pub best_score: f64,
    pub temperature: f64,
    pub iteration: u64,
    pub elapsed: Duration,
}

impl AnnealState {
    fn stop_reason(&self, schedule: &Schedule) -> Option<StopReason> {
        if self.temperature <= schedule.t_min {
            Some(StopReason::TemperatureFloor)
        } else if self.iteration >= schedule.max_iterations {
            Some(StopReason::IterationCap)
        } else if self.elapsed >= schedule.max_runtime {
            Some(StopReason::RuntimeCap)
        } else {
            None
        }
    }
}

/// Anneals with an arbitrary score function (higher is better).
///
/// `score` must be deterministic for the run to be reproducible.
pub fn anneal_by<F>(
    initial: Partition,
    mut score: F,
    schedule: &Schedule,
    seed: u64,
) -> Result<AnnealResult, AnnealError>
where
    F: FnMut(&Partition) -> Result<f64, AnnealError>,
{
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let started = Instant::now();
    let initial_score = score(&initial)?;
    let mut state = AnnealState {
        current_partition: initial.clone(),
        current_score: initial_score,
        best_partition: initial,
        best_score: initial_score,
        temperature: schedule.t0,
        iteration: 0,
        elapsed: Duration::ZERO,
    };
    let mut trace = Vec::new();

    let stop_reason = loop {
        if let Some(reason) = state.stop_reason(schedule) {
            break reason;
        }
        let (candidate, candidate_score) =
            match propose_neighbor(&state.current_partition, &mut rng) {
                Some((_, p)) => {
                    let s = score(&p)?;
                    (Some(p), s)
                }
                None => (None, state.current_score),
            };
        let accepted = match candidate {
            Some(p) => {
                let take = accept(
                    candidate_score,
                    state.current_score,
                    state.temperature,
                    &mut rng,
                )?;
                if take {
                    state.current_partition = p;
                    state.current_score = candidate_score;
                    if candidate_score > state.best_score {
                        state.best_score = candidate_score;
                        state.best_partition = state.current_partition.clone();
                    }
                }
                take
            }
            None => false,
        };
        trace.push(TraceRow {
            iteration: state.iteration,
            temperature: state.temperature,
            candidate_score,
            current_score: state.current_score,
            best_score: state.best_score,
            accepted,
        });
        state.temperature *= schedule.alpha;
        state.iteration += 1;
        state.elapsed = started.elapsed();
    };

    Ok(AnnealResult {
        best_partition: state.best_partition.relabeled(),
        best_score: state.best_score,
        initial_score,
        stop_reason,
        restart_summaries: vec![RestartSummary {
            restart: 0,
            best_score: state.best_score,
            stop_reason,
        }],
        trace,
        best_restart: 0,
    })
}

/// Anneals `initial` under the objective described by `spec`.
pub fn anneal(
    cohort: &Cohort,
    initial: Partition,
    spec: &ObjectiveSpec,
    schedule: &Schedule,
    seed: u64,
) -> Result<AnnealResult, AnnealError> {
    spec.validate()?;
    anneal_by(
        initial,
        |p| evaluate(cohort, p, spec).map_err(AnnealError::from),
        schedule,
        seed,
    )
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds for one restart, derived from the master seed.
///
/// Restart `i` uses the SplitMix64 outputs at stream positions `2i + 1`
/// (initial partition) and `2i + 2` (annealing moves) of a generator started
/// at `master`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestartSeeds {
    pub partition: u64,
    pub anneal: u64,
}

impl RestartSeeds {
    pub fn derive(master: u64, restart: usize) -> Self {
        let base = 2 * restart as u64;
        let at = |k: u64| mix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(k)));
        RestartSeeds {
            partition: at(base + 1),
            anneal: at(base + 2),
        }
    }
}

/// Options for the multi-restart driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestartPlan {
    pub n_restarts: usize,
    pub max_group_size: usize,
    pub master_seed: u64,
    pub parallel: bool,
}

/// Runs every restart and returns the individual results in restart order.
pub fn run_restarts(
    cohort: &Cohort,
    spec: &ObjectiveSpec,
    schedule: &Schedule,
    plan: &RestartPlan,
) -> Result<Vec<AnnealResult>, AnnealError> {
    if plan.n_restarts == 0 {
        return Err(AnnealError::NoRestarts);
    }
    if plan.max_group_size == 0 {
        return Err(AnnealError::InvalidSchedule(
            "max group size must be positive".into(),
        ));
    }
    spec.validate()?;
    schedule.validate()?;
    let one = |i: usize| {
        let seeds = RestartSeeds::derive(plan.master_seed, i);
        let start = initial_partition(cohort, plan.max_group_size, seeds.partition);
        anneal(cohort, start, spec, schedule, seeds.anneal)
    };
    if plan.parallel {
        (0..plan.n_restarts).into_par_iter().map(one).collect()
    } else {
        (0..plan.n_restarts).map(one).collect()
    }
}

/// Best score across restarts and the restart that first reached it.
///
/// Tracking starts at 0.0 and only a strictly higher score replaces the
/// running best. Returns `None` for an empty slice.
pub fn best_of_restarts(bests: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &score) in bests.iter().enumerate() {
        match best {
            Some((_, b)) if score <= b => {}
            _ => best = Some((i, score)),
        }
    }
    best
}

/// Running maximum of restart bests.
pub fn running_best(bests: &[f64]) -> Vec<f64> {
    bests
        .iter()
        .scan(f64::NEG_INFINITY, |acc, &s| {
            *acc = acc.max(s);
            Some(*acc)
        })
        .collect()
}

/// Folds per-restart results into one. The winner's partition, trace and
/// stop reason are kept.
pub fn merge_restarts(runs: Vec<AnnealResult>) -> Result<AnnealResult, AnnealError> {
    let bests: Vec<f64> = runs.iter().map(|r| r.best_score).collect();
    let (winner, _) = best_of_restarts(&bests).ok_or(AnnealError::NoRestarts)?;
    let summaries = runs
        .iter()
        .enumerate()
        .map(|(i, r)| RestartSummary {
            restart: i,
            best_score: r.best_score,
            stop_reason: r.stop_reason,
        })
        .collect();
    let mut best = runs
        .into_iter()
        .nth(winner)
        .ok_or(AnnealError::NoRestarts)?;
    best.restart_summaries = summaries;
    best.best_restart = winner;
    Ok(best)
}

/// Anneals from `n_restarts` fresh initial partitions and keeps the best.
pub fn anneal_with_restarts(
    cohort: &Cohort,
    spec: &ObjectiveSpec,
    schedule: &Schedule,
    n_restarts: usize,
    max_group_size: usize,
    master_seed: u64,
) -> Result<AnnealResult, AnnealError> {
    let plan = RestartPlan {
        n_restarts,
        max_group_size,
        master_seed,
        parallel: false,
    };
    merge_restarts(run_restarts(cohort, spec, schedule, &plan)?)
}
