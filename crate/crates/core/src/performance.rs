//! Expected latency and throughput of the zero-error retransmission scheme.
//!
//! With `P_i = Pr(zeta_1 ∩ ... ∩ zeta_i)`, `P_0 = 1`, a message costs
//! `E L = sum_i I_i P_{i-1} / (1 - P_m)` symbols on average and the
//! throughput is `E R_t = k / E L` bits per symbol. After `m` failed attempts
//! the transmitter restarts with fresh noise.

use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{BoundInterval, Interval};
use crate::oracle::{chunk_rng, increment_distributions, mc_joint_series, MC_CHUNK};
use crate::schedule::{DecodingRadii, TransmissionSchedule};

/// Restart cycles allowed per simulated message before the scheme is
/// declared degenerate.
pub const MAX_RESTARTS: u64 = 1_000_000;

fn check_series(series: &[f64], increments: &[u32]) -> Result<()> {
    if series.len() != increments.len() + 1 {
        return Err(Error::Domain(format!(
            "series has {} entries, expected {} (P_0..P_m)",
            series.len(),
            increments.len() + 1
        )));
    }
    if series[0] != 1.0 {
        return Err(Error::Domain(format!("P_0 must be 1, got {}", series[0])));
    }
    if let Some(p) = series.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("{p} is not a probability")));
    }
    if series.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Domain("joint error series must be nonincreasing".into()));
    }
    Ok(())
}

/// `sum_{i=1}^m I_i P_{i-1} / (1 - P_m)` for `series = [P_0, ..., P_m]`.
pub fn expected_latency(series: &[f64], increments: &[u32]) -> Result<f64> {
    check_series(series, increments)?;
    let m = increments.len();
    let p_m = series[m];
    if p_m >= 1.0 {
        return Err(Error::DegenerateScheme(m));
    }
    let numerator: f64 = increments.iter().zip(series).map(|(&i, &p)| i as f64 * p).sum();
    Ok(numerator / (1.0 - p_m))
}

/// `k / latency`.
pub fn expected_throughput(k_bits: u32, latency: f64) -> Result<f64> {
    if !(latency > 0.0) {
        return Err(Error::Domain(format!("latency must be positive, got {latency}")));
    }
    Ok(k_bits as f64 / latency)
}

/// Latency and throughput intervals implied by a joint-error interval series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceEstimate {
    pub latency: Interval,
    pub throughput: Interval,
    pub series_used: Vec<BoundInterval>,
}

impl PerformanceEstimate {
    /// The throughput upper bound exceeds capacity, so it carries no information.
    pub fn is_vacuous(&self, capacity: f64) -> bool {
        self.throughput.upper > capacity
    }
}

/// Propagates interval series through the latency formula. `E L` is
/// nondecreasing in every `P_i`, so all lower ends give the latency lower
/// bound and all upper ends the upper bound.
pub fn performance_interval(series: &[BoundInterval], increments: &[u32], k_bits: u32) -> Result<PerformanceEstimate> {
    let lowers: Vec<f64> = series.iter().map(|b| b.lower).collect();
    let uppers: Vec<f64> = series.iter().map(|b| b.upper).collect();
    let lat_lo = expected_latency(&lowers, increments)?;
    let lat_hi = expected_latency(&uppers, increments)?;
    Ok(PerformanceEstimate {
        latency: Interval::new(lat_lo, lat_hi),
        throughput: Interval::new(expected_throughput(k_bits, lat_hi)?, expected_throughput(k_bits, lat_lo)?),
        series_used: series.to_vec(),
    })
}

/// Monte Carlo latency and throughput with delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPerformance {
    pub latency: f64,
    pub latency_std_error: f64,
    pub throughput: f64,
    pub throughput_std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Estimates `E L` and `E R_t` from one Monte Carlo pass over the joint
/// error series.
///
/// Per sample path, `X` is the number of symbols spent in one cycle and `Y`
/// flags a cycle in which all `m` attempts fail; `E L = E X / (1 - E Y)`.
/// The standard error follows from the sample covariance of `(X, Y)`.
pub fn mc_performance(
    sched: &TransmissionSchedule,
    radii: &DecodingRadii,
    k_bits: u32,
    samples: u64,
    seed: u64,
) -> Result<McPerformance> {
    let est = mc_joint_series(sched, radii, samples, seed)?;
    let m = sched.m();
    let n = samples as f64;
    let cum = sched.cumulative();
    let counts: Vec<u64> = est.iter().map(|e| e.count()).collect();
    if counts[m - 1] == samples {
        return Err(Error::DegenerateScheme(m));
    }
    // Paths that stop (succeed) at attempt i, plus the all-fail paths.
    let mut groups: Vec<(f64, f64, f64)> = Vec::with_capacity(m + 1);
    let mut prev = samples;
    for i in 0..m {
        groups.push(((prev - counts[i]) as f64, cum[i] as f64, 0.0));
        prev = counts[i];
    }
    groups.push((counts[m - 1] as f64, cum[m - 1] as f64, 1.0));

    let ex: f64 = groups.iter().map(|(c, x, _)| c * x).sum::<f64>() / n;
    let ey = counts[m - 1] as f64 / n;
    let (mut vxx, mut vyy, mut vxy) = (0.0, 0.0, 0.0);
    for &(c, x, y) in &groups {
        vxx += c * (x - ex) * (x - ex);
        vyy += c * (y - ey) * (y - ey);
        vxy += c * (x - ex) * (y - ey);
    }
    let (vxx, vyy, vxy) = (vxx / n, vyy / n, vxy / n);
    let latency = ex / (1.0 - ey);
    let (ga, gb) = (1.0 / (1.0 - ey), ex / ((1.0 - ey) * (1.0 - ey)));
    let var = (ga * ga * vxx + 2.0 * ga * gb * vxy + gb * gb * vyy).max(0.0) / n;
    let latency_std_error = var.sqrt();
    let throughput = k_bits as f64 / latency;
    Ok(McPerformance {
        latency,
        latency_std_error,
        throughput,
        throughput_std_error: throughput / latency * latency_std_error,
        samples,
        seed,
    })
}

/// Outcome of delivering one message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodingTimeSample {
    /// Attempt (1-based) within the final cycle at which decoding succeeded.
    pub tau: u32,
    /// Number of complete failed cycles before the final one.
    pub restarts: u64,
    /// Total symbols sent: `restarts * N_m + N_tau`.
    pub latency_symbols: u64,
}

/// Summary statistics of a decoding-time simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingTimeSummary {
    pub cycles: u64,
    pub seed: u64,
    pub mean_latency: f64,
    pub std_error: f64,
    pub mean_restarts: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
    /// `tau_histogram[i]` counts messages decoded at attempt `i + 1`.
    pub tau_histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingTimeReport {
    pub samples: Vec<DecodingTimeSample>,
    pub summary: DecodingTimeSummary,
}

fn nearest_rank(sorted: &[u64], q: f64) -> u64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Simulates `cycles` messages under the restart rule: attempt `i` adds
/// `I_i` fresh noise symbols and succeeds iff the cumulative noise energy is
/// at most `r_i^2`; after `m` failures the message starts over with new noise.
///
/// Deterministic given `seed`, independent of the rayon pool size. Fails with
/// [`Error::DegenerateScheme`] if no attempt can succeed or a message needs
/// more than [`MAX_RESTARTS`] restarts.
pub fn simulate_decoding_time(
    sched: &TransmissionSchedule,
    radii: &DecodingRadii,
    cycles: u64,
    seed: u64,
) -> Result<DecodingTimeReport> {
    assert_eq!(sched.m(), radii.len(), "schedule and radii lengths differ");
    let m = sched.m();
    if cycles == 0 {
        return Err(Error::Domain("simulation needs at least one cycle".into()));
    }
    let r2 = radii.r_squared();
    if r2.iter().all(|&r| r == 0.0) {
        return Err(Error::DegenerateScheme(m));
    }
    let dists = increment_distributions(sched);
    let cum = sched.cumulative();
    let n_m = sched.total() as u64;
    let chunks = cycles.div_ceil(MC_CHUNK);

    let per_chunk: Vec<Result<Vec<DecodingTimeSample>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let len = MC_CHUNK.min(cycles - c * MC_CHUNK);
            let mut out = Vec::with_capacity(len as usize);
            for _ in 0..len {
                let mut restarts = 0u64;
                let tau = 'message: loop {
                    let mut energy = 0.0;
                    for i in 0..m {
                        energy += dists[i].sample(&mut rng);
                        if energy <= r2[i] {
                            break 'message i;
                        }
                    }
                    restarts += 1;
                    if restarts > MAX_RESTARTS {
                        return Err(Error::DegenerateScheme(m));
                    }
                };
                out.push(DecodingTimeSample {
                    tau: tau as u32 + 1,
                    restarts,
                    latency_symbols: restarts * n_m + cum[tau] as u64,
                });
            }
            Ok(out)
        })
        .collect();

    let mut samples = Vec::with_capacity(cycles as usize);
    for chunk in per_chunk {
        samples.extend(chunk?);
    }
    let summary = summarize(&samples, m, seed);
    Ok(DecodingTimeReport { samples, summary })
}

fn summarize(samples: &[DecodingTimeSample], m: usize, seed: u64) -> DecodingTimeSummary {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.latency_symbols as f64).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|s| (s.latency_symbols as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let mut sorted: Vec<u64> = samples.iter().map(|s| s.latency_symbols).collect();
    sorted.sort_unstable();
    let mut tau_histogram = vec![0u64; m];
    for s in samples {
        tau_histogram[s.tau as usize - 1] += 1;
    }
    DecodingTimeSummary {
        cycles: samples.len() as u64,
        seed,
        mean_latency: mean,
        std_error: (var / n).sqrt(),
        mean_restarts: samples.iter().map(|s| s.restarts as f64).sum::<f64>() / n,
        p50: nearest_rank(&sorted, 0.5),
        p90: nearest_rank(&sorted, 0.9),
        p99: nearest_rank(&sorted, 0.99),
        max: *sorted.last().unwrap(),
        tau_histogram,
    }
}
