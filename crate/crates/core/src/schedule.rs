//! Channel, message set, incremental-redundancy schedule and decoding radii.
//!
//! The noise is normalized to unit variance per real dimension, so the
//! received power over `n` symbols is at most `n (1 + eta)`. The message count
//! `M = 2^k` is never materialized: every `M^{2/N}` is evaluated as
//! `exp(2 k ln 2 / N)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real AWGN channel with linear SNR `eta` and unit noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    snr_db: f64,
    eta: f64,
}

impl ChannelConfig {
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        let eta = 10f64.powf(snr_db / 10.0);
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("SNR {snr_db} dB is not usable")));
        }
        Ok(Self { snr_db, eta })
    }

    pub fn from_linear(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("linear SNR must be positive, got {eta}")));
        }
        Ok(Self {
            snr_db: 10.0 * eta.log10(),
            eta,
        })
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Capacity in bits per real symbol.
    pub fn capacity(&self) -> f64 {
        0.5 * self.eta.ln_1p() / LN_2
    }
}

/// `1/2 log2(1 + eta)` bits per real symbol.
pub fn capacity(eta: f64) -> Result<f64> {
    Ok(ChannelConfig::from_linear(eta)?.capacity())
}

/// `M = 2^k_bits` equiprobable messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageSet {
    k_bits: u32,
}

impl MessageSet {
    pub fn new(k_bits: u32) -> Result<Self> {
        if k_bits == 0 {
            return Err(Error::Domain("message set needs at least one bit".into()));
        }
        Ok(Self { k_bits })
    }

    pub fn k_bits(&self) -> u32 {
        self.k_bits
    }

    /// `ln M`.
    pub fn ln_m(&self) -> f64 {
        self.k_bits as f64 * LN_2
    }
}

/// Increments `I_1..I_m` and cumulative blocklengths `N_1 < N_2 < ... < N_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransmissionSchedule {
    increments: Vec<u32>,
    cumulative: Vec<u32>,
}

impl TransmissionSchedule {
    pub fn new(increments: Vec<u32>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidSchedule("schedule needs at least one transmission".into()));
        }
        let mut cumulative = Vec::with_capacity(increments.len());
        let mut total: u32 = 0;
        for (i, &inc) in increments.iter().enumerate() {
            if inc == 0 {
                return Err(Error::InvalidSchedule(format!(
                    "increment {} is 0; every increment must be at least one symbol",
                    i + 1
                )));
            }
            total = total
                .checked_add(inc)
                .ok_or_else(|| Error::InvalidSchedule("total blocklength overflows".into()))?;
            cumulative.push(total);
        }
        Ok(Self {
            increments,
            cumulative,
        })
    }

    /// Number of transmissions `m`.
    pub fn m(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self) -> &[u32] {
        &self.increments
    }

    pub fn cumulative(&self) -> &[u32] {
        &self.cumulative
    }

    /// Final blocklength `N_m`.
    pub fn total(&self) -> u32 {
        *self.cumulative.last().expect("schedule is never empty")
    }
}

/// Which sphere-packing argument supplies the decoding radii.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RadiusAssumption {
    /// Perfect packing of `M` spheres in the received-power ball.
    #[default]
    Optimistic,
    /// Radii guaranteed by a packing density of at least `c 2^{-n}`.
    /// `c = 1` is the conservative default.
    Minkowski {
        #[serde(default = "default_minkowski_c")]
        c: f64,
    },
}

fn default_minkowski_c() -> f64 {
    1.0
}

impl RadiusAssumption {
    pub fn minkowski(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("Minkowski constant must be positive, got {c}")));
        }
        Ok(RadiusAssumption::Minkowski { c })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            RadiusAssumption::Optimistic => Ok(()),
            RadiusAssumption::Minkowski { c } => Self::minkowski(c).map(|_| ()),
        }
    }
}

/// Squared decoding radii `r_1^2..r_m^2`.
///
/// Zero and `+inf` are accepted: they model an attempt that always fails or
/// always succeeds.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingRadii {
    r_squared: Vec<f64>,
}

impl DecodingRadii {
    pub fn new(r_squared: Vec<f64>) -> Result<Self> {
        if r_squared.is_empty() {
            return Err(Error::Domain("radii list is empty".into()));
        }
        if let Some((i, r)) = r_squared.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::Domain(format!("squared radius {} is {r}", i + 1)));
        }
        Ok(Self { r_squared })
    }

    pub fn r_squared(&self) -> &[f64] {
        &self.r_squared
    }

    pub fn len(&self) -> usize {
        self.r_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_squared.is_empty()
    }
}

fn ln_optimistic_r2(eta: f64, msgs: MessageSet, n: u32) -> f64 {
    let n = n as f64;
    n.ln() + eta.ln_1p() - 2.0 * msgs.ln_m() / n
}

/// `r_i^2 = N_i (1 + eta) / M^{2/N_i}`.
pub fn optimistic_radii(config: &ChannelConfig, msgs: MessageSet, sched: &TransmissionSchedule) -> DecodingRadii {
    let r_squared = sched
        .cumulative()
        .iter()
        .map(|&n| ln_optimistic_r2(config.eta(), msgs, n).exp())
        .collect();
    DecodingRadii { r_squared }
}

/// `r_i^2 = c N_i (1 + eta) / (2 M^{2/N_i})`, half the optimistic radii when `c = 1`.
pub fn minkowski_radii(
    config: &ChannelConfig,
    msgs: MessageSet,
    sched: &TransmissionSchedule,
    c: f64,
) -> Result<DecodingRadii> {
    RadiusAssumption::minkowski(c)?;
    let shift = (c / 2.0).ln();
    let r_squared = sched
        .cumulative()
        .iter()
        .map(|&n| (ln_optimistic_r2(config.eta(), msgs, n) + shift).exp())
        .collect();
    Ok(DecodingRadii { r_squared })
}

pub fn radii(
    config: &ChannelConfig,
    msgs: MessageSet,
    sched: &TransmissionSchedule,
    assumption: RadiusAssumption,
) -> Result<DecodingRadii> {
    match assumption {
        RadiusAssumption::Optimistic => Ok(optimistic_radii(config, msgs, sched)),
        RadiusAssumption::Minkowski { c } => minkowski_radii(config, msgs, sched, c),
    }
}

/// Rate `k / N_i` after the `i`-th transmission (1-based).
pub fn per_transmission_rate(msgs: MessageSet, sched: &TransmissionSchedule, i: usize) -> Result<f64> {
    if i == 0 || i > sched.m() {
        return Err(Error::Index {
            index: i,
            len: sched.m(),
        });
    }
    Ok(msgs.k_bits() as f64 / sched.cumulative()[i - 1] as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ETA_2DB: f64 = 1.584893192461113;

    #[test]
    fn capacity_values() {
        assert!((capacity(10f64.powf(0.2)).unwrap() - 0.6851).abs() < 1e-4);
        assert_relative_eq!(capacity(1.0).unwrap(), 0.5, max_relative = 1e-15);
        assert!((capacity(10f64.powf(0.3)).unwrap() - 0.79134).abs() < 1e-4);
        assert!(capacity(0.0).is_err());
        assert!(capacity(-1.0).is_err());
    }

    #[test]
    fn optimistic_examples() {
        let ch = ChannelConfig::from_linear(ETA_2DB).unwrap();
        let msgs = MessageSet::new(16).unwrap();
        let s = TransmissionSchedule::new(vec![32, 16]).unwrap();
        let r = optimistic_radii(&ch, msgs, &s);
        assert_relative_eq!(r.r_squared()[0], 32.0 * (1.0 + ETA_2DB) / 2.0, max_relative = 1e-13);
        assert!((r.r_squared()[0] - 41.35829).abs() < 1e-4);
        // 48 * (1 + eta) * 2^{-2/3}
        assert!((r.r_squared()[1] - 78.16227).abs() < 1e-4);
    }

    #[test]
    fn large_blocklength_limit() {
        let ch = ChannelConfig::from_linear(ETA_2DB).unwrap();
        let msgs = MessageSet::new(16).unwrap();
        let s = TransmissionSchedule::new(vec![1_000_000]).unwrap();
        let r = optimistic_radii(&ch, msgs, &s);
        assert!((r.r_squared()[0] / 1e6 - (1.0 + ETA_2DB)).abs() < 1e-4);
    }

    #[test]
    fn minkowski_scaling() {
        let ch = ChannelConfig::from_linear(ETA_2DB).unwrap();
        let msgs = MessageSet::new(16).unwrap();
        let s = TransmissionSchedule::new(vec![32, 5, 7]).unwrap();
        let opt = optimistic_radii(&ch, msgs, &s);
        let half = minkowski_radii(&ch, msgs, &s, 1.0).unwrap();
        let same = minkowski_radii(&ch, msgs, &s, 2.0).unwrap();
        for i in 0..3 {
            assert_relative_eq!(half.r_squared()[i], opt.r_squared()[i] / 2.0, max_relative = 1e-14);
            assert_relative_eq!(same.r_squared()[i], opt.r_squared()[i], max_relative = 1e-14);
        }
        assert!((half.r_squared()[0] - 20.67915).abs() < 1e-4);
        assert!(minkowski_radii(&ch, msgs, &s, 0.0).is_err());
    }

    #[test]
    fn schedule_validation() {
        let s = TransmissionSchedule::new(vec![4, 1, 2]).unwrap();
        assert_eq!(s.cumulative(), &[4, 5, 7]);
        assert_eq!(s.total(), 7);
        let e = TransmissionSchedule::new(vec![3, 0, 1]).unwrap_err();
        assert!(e.to_string().contains("increment 2"));
        assert!(TransmissionSchedule::new(vec![]).is_err());
        assert!(TransmissionSchedule::new(vec![u32::MAX, 1]).is_err());
    }

    #[test]
    fn rates() {
        let msgs = MessageSet::new(16).unwrap();
        let s = TransmissionSchedule::new(vec![32, 8, 24]).unwrap();
        assert_eq!(per_transmission_rate(msgs, &s, 1).unwrap(), 0.5);
        assert_eq!(per_transmission_rate(msgs, &s, 3).unwrap(), 0.25);
        assert!(matches!(per_transmission_rate(msgs, &s, 0), Err(Error::Index { .. })));
        assert!(matches!(per_transmission_rate(msgs, &s, 4), Err(Error::Index { .. })));
        let m64 = MessageSet::new(64).unwrap();
        let s64 = TransmissionSchedule::new(vec![64]).unwrap();
        assert_eq!(per_transmission_rate(m64, &s64, 1).unwrap(), 1.0);
    }

    #[test]
    fn radius_above_blocklength_iff_rate_below_capacity() {
        for &db in &[-2.0, 0.0, 2.0, 3.0, 6.0] {
            let ch = ChannelConfig::from_snr_db(db).unwrap();
            for k in [1u32, 8, 16, 33, 64, 128] {
                let msgs = MessageSet::new(k).unwrap();
                let incs: Vec<u32> = (0..40).map(|j| if j == 0 { 1 } else { 1 + j % 7 }).collect();
                let s = TransmissionSchedule::new(incs).unwrap();
                let r = optimistic_radii(&ch, msgs, &s);
                for (i, &n) in s.cumulative().iter().enumerate() {
                    let rate = k as f64 / n as f64;
                    if (rate - ch.capacity()).abs() < 1e-12 {
                        continue;
                    }
                    assert_eq!(r.r_squared()[i] / n as f64 > 1.0, rate < ch.capacity(), "db {db} k {k} n {n}");
                }
                assert!(r.r_squared().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
