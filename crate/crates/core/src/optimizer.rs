//! Integer schedule search maximizing throughput, and fixed schemes.
//!
//! The search is coordinate descent over the increments `I_1..I_m`: each
//! coordinate tries `±1, ±2, ±4, ...` and moves to the best candidate only on
//! strict improvement. Sweeps repeat until a full sweep changes nothing or
//! the evaluation budget runs out. Evaluations are memoized, so revisiting a
//! schedule is free. Global optimality is not claimed.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint::{joint_series_bounds, BoundPolicy};
use crate::performance::{expected_latency, expected_throughput, mc_performance};
use crate::schedule::{radii, ChannelConfig, MessageSet, RadiusAssumption, TransmissionSchedule};

/// Largest single move tried on one coordinate.
pub const MAX_STEP: u32 = 64;

/// What the search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Certified throughput lower bound `k / E L` with `E L` from upper ends
    /// of the joint-error series ([`BoundPolicy::upper_only`]).
    BoundLower,
    /// Monte Carlo throughput with common random numbers across candidates.
    McEstimate { samples: u64, seed: u64 },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::BoundLower => "bound_lower",
            Objective::McEstimate { .. } => "mc_estimate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub schedule: TransmissionSchedule,
    /// Throughput of `schedule` under `method`.
    pub objective: f64,
    pub method: Objective,
    /// Distinct schedules evaluated.
    pub evaluations: usize,
    /// The search stopped because the budget ran out, not at a local optimum.
    pub budget_exhausted: bool,
}

/// Scheme setting shared by every candidate schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub messages: MessageSet,
    pub channel: ChannelConfig,
    pub assumption: RadiusAssumption,
}

impl SearchSpace {
    pub fn new(messages: MessageSet, channel: ChannelConfig) -> Self {
        Self {
            messages,
            channel,
            assumption: RadiusAssumption::Optimistic,
        }
    }

    pub fn with_assumption(mut self, assumption: RadiusAssumption) -> Self {
        self.assumption = assumption;
        self
    }

    /// Throughput of `sched` under `objective`.
    pub fn evaluate(&self, sched: &TransmissionSchedule, objective: &Objective) -> Result<f64> {
        let r = radii(&self.channel, self.messages, sched, self.assumption)?;
        let k = self.messages.k_bits();
        match *objective {
            Objective::BoundLower => {
                let series = joint_series_bounds(sched, &r, &BoundPolicy::upper_only());
                let latency = expected_latency(&series.uppers(), sched.increments())?;
                expected_throughput(k, latency)
            }
            Objective::McEstimate { samples, seed } => Ok(mc_performance(sched, &r, k, samples, seed)?.throughput),
        }
    }

    /// `I_1 = round(0.9 k / C)` (first rate slightly above capacity) and the
    /// remaining `m - 1` increments equal to `max(1, round(0.15 k / C))`.
    pub fn initial_schedule(&self, m: usize) -> Result<TransmissionSchedule> {
        if m == 0 {
            return Err(Error::InvalidSchedule("at least one transmission is required".into()));
        }
        let per_bit = self.messages.k_bits() as f64 / self.channel.capacity();
        let first = ((0.9 * per_bit).round() as u32).max(1);
        let rest = ((0.15 * per_bit).round() as u32).max(1);
        let mut inc = vec![rest; m];
        inc[0] = first;
        TransmissionSchedule::new(inc)
    }

    pub fn optimize(&self, m: usize, objective: &Objective, budget: usize) -> Result<OptimizationResult> {
        self.optimize_from(&self.initial_schedule(m)?, objective, budget)
    }

    /// Coordinate descent starting at `start`. Returns `start` itself if no
    /// neighbour is strictly better.
    pub fn optimize_from(
        &self,
        start: &TransmissionSchedule,
        objective: &Objective,
        budget: usize,
    ) -> Result<OptimizationResult> {
        if budget == 0 {
            return Err(Error::Domain("the evaluation budget must be at least 1".into()));
        }
        let mut memo: HashMap<Vec<u32>, f64> = HashMap::new();
        let score = |inc: &[u32]| -> f64 {
            TransmissionSchedule::new(inc.to_vec())
                .and_then(|s| self.evaluate(&s, objective))
                .unwrap_or(f64::NEG_INFINITY)
        };

        let mut x = start.increments().to_vec();
        let mut best = score(&x);
        memo.insert(x.clone(), best);
        let mut exhausted = false;

        'search: loop {
            let mut moved = false;
            for i in 0..x.len() {
                loop {
                    let candidates = neighbours(&x, i);
                    let fresh: Vec<Vec<u32>> = candidates.iter().filter(|c| !memo.contains_key(*c)).cloned().collect();
                    let room = budget.saturating_sub(memo.len());
                    if fresh.len() > room {
                        exhausted = true;
                    }
                    let values: Vec<f64> = fresh[..fresh.len().min(room)].par_iter().map(|c| score(c)).collect();
                    for (c, v) in fresh.into_iter().zip(values) {
                        memo.insert(c, v);
                    }
                    // Candidates are ordered +1, -1, +2, -2, ...: ties go to the smaller move.
                    let mut step: Option<(&Vec<u32>, f64)> = None;
                    for c in &candidates {
                        if let Some(&v) = memo.get(c) {
                            if v > best && step.is_none_or(|(_, b)| v > b) {
                                step = Some((c, v));
                            }
                        }
                    }
                    match step {
                        Some((c, v)) => {
                            x = c.clone();
                            best = v;
                            moved = true;
                        }
                        None => break,
                    }
                    if exhausted {
                        break 'search;
                    }
                }
                if exhausted {
                    break 'search;
                }
            }
            if !moved {
                break;
            }
        }

        Ok(OptimizationResult {
            schedule: TransmissionSchedule::new(x)?,
            objective: best,
            method: *objective,
            evaluations: memo.len(),
            budget_exhausted: exhausted,
        })
    }
}

fn neighbours(x: &[u32], i: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut s = 1u32;
    while s <= MAX_STEP {
        let mut up = x.to_vec();
        up[i] += s;
        out.push(up);
        if x[i] > s {
            let mut down = x.to_vec();
            down[i] -= s;
            out.push(down);
        }
        s *= 2;
    }
    out
}

/// Searches `m`-transmission schedules under optimistic radii.
pub fn optimize_increments(
    k_bits: u32,
    m: usize,
    channel: &ChannelConfig,
    objective: &Objective,
    budget: usize,
) -> Result<OptimizationResult> {
    SearchSpace::new(MessageSet::new(k_bits)?, *channel).optimize(m, objective, budget)
}

/// Like [`optimize_increments`] but starting from a given schedule.
pub fn optimize_increments_from(
    k_bits: u32,
    start: &TransmissionSchedule,
    channel: &ChannelConfig,
    objective: &Objective,
    budget: usize,
) -> Result<OptimizationResult> {
    SearchSpace::new(MessageSet::new(k_bits)?, *channel).optimize_from(start, objective, budget)
}

/// `[k, s, s, ..., s, rest]` with total `3k` symbols: a first attempt at
/// rate 1, then steps of `s` symbols down to rate 1/3. The final step is
/// shortened if `s` does not divide `2k`.
pub fn fixed_step_scheme(k_bits: u32, step: u32) -> Result<TransmissionSchedule> {
    if k_bits == 0 || step == 0 {
        return Err(Error::InvalidSchedule(format!(
            "fixed-step scheme needs k >= 1 and step >= 1 (k = {k_bits}, step = {step})"
        )));
    }
    let mut inc = vec![k_bits];
    let mut left = 2 * k_bits;
    while left > 0 {
        let s = step.min(left);
        inc.push(s);
        left -= s;
    }
    TransmissionSchedule::new(inc)
}

/// `[k, 1, 1, ..., 1]` with `2k` one-symbol steps: `m = 2k + 1` attempts and
/// terminal blocklength `3k` (lowest rate 1/3).
pub fn one_bit_scheme(k_bits: u32) -> Result<TransmissionSchedule> {
    fixed_step_scheme(k_bits, 1)
}
