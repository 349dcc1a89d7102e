//! Ground truth for joint error probabilities.
//!
//! * Deterministic nested quadrature for up to three transmissions.
//! * Seeded Monte Carlo for any number of transmissions.
//!
//! The Monte Carlo estimator splits the sample budget into chunks of
//! [`MC_CHUNK`] paths. Chunk `c` draws from a ChaCha8 generator seeded with
//! the user seed and switched to stream `c`, so the estimate does not depend
//! on how many threads run the chunks. The energy of each increment is drawn
//! directly as a chi-square variate with `I_i` degrees of freedom
//! (`rand_distr::ChiSquared`), which has the same law as the sum of `I_i`
//! squared standard normals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_split;
use crate::schedule::{DecodingRadii, TransmissionSchedule};
use crate::special::{chi2_pdf, chi2_tail, chi_pdf};

/// Absolute tolerance of the two-transmission integral.
pub const PAIR_TOL: f64 = 1e-11;
/// Absolute tolerance of the outer integral for three transmissions.
pub const OUTER_TOL: f64 = 1e-9;
/// Paths per Monte Carlo chunk.
pub const MC_CHUNK: u64 = 1 << 16;

fn tail(dof: u32, x: f64) -> f64 {
    chi2_tail(dof, x).value()
}

/// `Pr(Y1 > a, Y1 + Y2 > b)` for independent `Y1 ~ chi2_d1`, `Y2 ~ chi2_d2`.
/// Thresholds may be negative.
pub(crate) fn pair_probability(d1: u32, d2: u32, a: f64, b: f64, tol: f64) -> Result<f64> {
    let a = a.max(0.0);
    if b <= a {
        return Ok(tail(d1, a));
    }
    if b == f64::INFINITY {
        return Ok(0.0);
    }
    // Below the midpoint integrate in s = sqrt(t), above it in w = sqrt(b - t):
    // both substitutions leave bounded, smooth integrands even for one degree
    // of freedom on either side.
    let c = 0.5 * (a + b);
    let interesting = [d1 as f64 - 2.0, d1 as f64 - 1.0, b - d2 as f64];

    let lower_pts: Vec<f64> = interesting.iter().filter(|&&t| t > 0.0).map(|t| t.sqrt()).collect();
    let lower = integrate_split(
        |s| chi_pdf(d1, s) * tail(d2, b - s * s),
        a.sqrt(),
        c.sqrt(),
        &lower_pts,
        0.5 * tol,
    )?;

    let upper_pts: Vec<f64> = interesting
        .iter()
        .filter(|&&t| t < b)
        .map(|t| (b - t).sqrt())
        .collect();
    let upper = integrate_split(
        |w| 2.0 * w * chi2_pdf(d1, b - w * w) * tail(d2, w * w),
        0.0,
        (b - c).sqrt(),
        &upper_pts,
        0.5 * tol,
    )?;

    Ok((lower + upper + tail(d1, b)).clamp(0.0, 1.0))
}

/// `Pr(chi2_{N1} > r1^2, chi2_{N1} + chi2_{I2} > r2^2)` by adaptive quadrature
/// to absolute tolerance [`PAIR_TOL`].
pub fn exact_pair_integral(n1: u32, i2: u32, r1_sq: f64, r2_sq: f64) -> Result<f64> {
    pair_probability(n1, i2, r1_sq, r2_sq, PAIR_TOL)
}

/// `Pr(zeta_1 ∩ ... ∩ zeta_m)` by nested quadrature, `m <= 3`.
pub fn exact_joint_integral(sched: &TransmissionSchedule, radii: &DecodingRadii) -> Result<f64> {
    assert_eq!(sched.m(), radii.len(), "schedule and radii lengths differ");
    let inc = sched.increments();
    let r = radii.r_squared();
    match sched.m() {
        1 => Ok(tail(inc[0], r[0])),
        2 => exact_pair_integral(inc[0], inc[1], r[0], r[1]),
        3 => {
            let top = r[0].max(r[1]).max(r[2]);
            if top == f64::INFINITY {
                return Ok(0.0);
            }
            let (d1, d2, d3) = (inc[0], inc[1], inc[2]);
            let (r1, r2, r3) = (r[0], r[1], r[2]);
            let inner = |t1: f64| -> f64 {
                match pair_probability(d2, d3, r2 - t1, r3 - t1, PAIR_TOL) {
                    Ok(p) => p,
                    Err(Error::Convergence { estimate, .. }) => estimate,
                    Err(_) => f64::NAN,
                }
            };
            let pts: Vec<f64> = [r2, r3, d1 as f64 - 1.0]
                .iter()
                .filter(|&&t| t > 0.0)
                .map(|t| t.sqrt())
                .collect();
            let body = integrate_split(|s| chi_pdf(d1, s) * inner(s * s), r1.sqrt(), top.sqrt(), &pts, OUTER_TOL)?;
            Ok((body + tail(d1, top)).clamp(0.0, 1.0))
        }
        m => Err(Error::UnsupportedTransmissions(m)),
    }
}

/// Monte Carlo estimate of one joint error probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_count(count: u64, samples: u64, seed: u64) -> Self {
        let mean = count as f64 / samples as f64;
        Self {
            mean,
            std_error: (mean * (1.0 - mean) / samples as f64).sqrt(),
            samples,
            seed,
        }
    }

    /// Number of paths in the event.
    pub fn count(&self) -> u64 {
        (self.mean * self.samples as f64).round() as u64
    }
}

/// Deterministic generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

pub(crate) fn increment_distributions(sched: &TransmissionSchedule) -> Vec<ChiSquared<f64>> {
    sched
        .increments()
        .iter()
        .map(|&i| ChiSquared::new(i as f64).expect("increments are positive"))
        .collect()
}

/// Estimates `Pr(zeta_1 ∩ ... ∩ zeta_i)` for every `i = 1..m` from the same
/// sample paths. Results are identical for identical inputs regardless of the
/// size of the rayon pool.
pub fn mc_joint_series(
    sched: &TransmissionSchedule,
    radii: &DecodingRadii,
    samples: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    assert_eq!(sched.m(), radii.len(), "schedule and radii lengths differ");
    if samples == 0 {
        return Err(Error::Domain("Monte Carlo needs at least one sample".into()));
    }
    let m = sched.m();
    let dists = increment_distributions(sched);
    let r2 = radii.r_squared();
    let chunks = samples.div_ceil(MC_CHUNK);

    let per_chunk: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut counts = vec![0u64; m];
            for _ in 0..n {
                let mut energy = 0.0;
                for i in 0..m {
                    energy += dists[i].sample(&mut rng);
                    if energy > r2[i] {
                        counts[i] += 1;
                    } else {
                        break;
                    }
                }
            }
            counts
        })
        .collect();

    let mut totals = vec![0u64; m];
    for counts in &per_chunk {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(totals
        .into_iter()
        .map(|c| McEstimate::from_count(c, samples, seed))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sched(v: &[u32]) -> TransmissionSchedule {
        TransmissionSchedule::new(v.to_vec()).unwrap()
    }

    fn radii(v: &[f64]) -> DecodingRadii {
        DecodingRadii::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pair_with_sure_first_event_is_sum_tail() {
        for &(n1, i2, r2) in &[(1u32, 1u32, 3.0), (32, 16, 78.16), (3, 7, 4.0), (10, 1, 25.0)] {
            let v = exact_pair_integral(n1, i2, 0.0, r2).unwrap();
            assert!((v - tail(n1 + i2, r2)).abs() < 1e-11, "{n1} {i2}: {v}");
        }
    }

    #[test]
    fn pair_limits() {
        assert_eq!(exact_pair_integral(4, 4, 3.0, f64::INFINITY).unwrap(), 0.0);
        assert!(exact_pair_integral(4, 4, 3.0, 1e4).unwrap() < 1e-300);
        // Second radius below the first: only the first event matters.
        let v = exact_pair_integral(5, 3, 6.0, 2.0).unwrap();
        assert_relative_eq!(v, tail(5, 6.0), max_relative = 1e-15);
    }

    /// Two dof-2 chi-squares are exponentials with mean 2, so the joint tail
    /// has a closed form: for a < b,
    /// Pr(X > a, X + Y > b) = e^{-b/2} (1 + (b - a)/2).
    #[test]
    fn pair_matches_exponential_closed_form() {
        for &(a, b) in &[(0.5, 3.0), (2.0, 2.5), (10.0, 40.0), (0.0, 1.0)] {
            let want = (-b / 2.0f64).exp() * (1.0 + (b - a) / 2.0);
            let v = exact_pair_integral(2, 2, a, b).unwrap();
            assert!((v - want).abs() < 1e-12, "{a} {b}: {v} vs {want}");
        }
    }

    #[test]
    fn joint_small_m_consistency() {
        let s1 = sched(&[7]);
        assert_eq!(exact_joint_integral(&s1, &radii(&[5.0])).unwrap(), tail(7, 5.0));
        let s2 = sched(&[32, 16]);
        let r = radii(&[41.358, 86.2]);
        let a = exact_joint_integral(&s2, &r).unwrap();
        let b = exact_pair_integral(32, 16, 41.358, 86.2).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(matches!(
            exact_joint_integral(&sched(&[1, 1, 1, 1]), &radii(&[1.0, 2.0, 3.0, 4.0])),
            Err(Error::UnsupportedTransmissions(4))
        ));
    }

    /// With dof-2 increments the three-step joint tail is also closed form:
    /// integrating the pair formula once more against an exponential density.
    #[test]
    fn triple_of_exponentials() {
        // X1 > a, X1+X2 > b, X1+X2+X3 > c with all Xi ~ Exp(mean 2); brute-force
        // one-dimensional oracle on the first coordinate using the pair closed form.
        let (a, b, c) = (1.0f64, 3.0f64, 6.0f64);
        let pair = |t: f64| -> f64 {
            // Pr(X2 > b - t, X2 + X3 > c - t)
            let aa = (b - t).max(0.0);
            let bb = c - t;
            if bb <= aa {
                (-aa / 2.0).exp()
            } else {
                (-bb / 2.0).exp() * (1.0 + (bb - aa) / 2.0)
            }
        };
        let oracle = crate::quadrature::integrate_split(
            |t: f64| 0.5 * (-t / 2.0).exp() * pair(t),
            a,
            c,
            &[b],
            1e-13,
        )
        .unwrap()
            + (-c / 2.0f64).exp();
        let v = exact_joint_integral(&sched(&[2, 2, 2]), &radii(&[a, b, c])).unwrap();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn mc_extremes() {
        let s = sched(&[3, 2, 2]);
        let est = mc_joint_series(&s, &radii(&[0.0, 0.0, 0.0]), 2000, 1).unwrap();
        assert!(est.iter().all(|e| e.mean == 1.0));
        let inf = f64::INFINITY;
        let est = mc_joint_series(&s, &radii(&[inf, inf, inf]), 2000, 1).unwrap();
        assert!(est.iter().all(|e| e.mean == 0.0));
    }

    #[test]
    fn mc_is_deterministic_and_monotone() {
        let s = sched(&[20, 5, 5, 5]);
        let r = radii(&[25.0, 30.0, 34.0, 38.0]);
        let a = mc_joint_series(&s, &r, 200_000, 42).unwrap();
        let b = mc_joint_series(&s, &r, 200_000, 42).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| mc_joint_series(&s, &r, 200_000, 42).unwrap());
        assert_eq!(a, c);
        assert!(a.windows(2).all(|w| w[1].mean <= w[0].mean));
        let d = mc_joint_series(&s, &r, 200_000, 43).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn mc_agrees_with_pair_quadrature() {
        let s = sched(&[32, 16]);
        let r = radii(&[41.35829, 78.16227]);
        let exact = exact_pair_integral(32, 16, r.r_squared()[0], r.r_squared()[1]).unwrap();
        let est = mc_joint_series(&s, &r, 1_000_000, 7).unwrap();
        assert!((est[1].mean - exact).abs() <= 3.0 * est[1].std_error, "{exact} {:?}", est[1]);
        assert!((est[0].mean - tail(32, r.r_squared()[0])).abs() <= 3.0 * est[0].std_error);
    }

    #[test]
    fn mc_agrees_with_triple_quadrature() {
        let s = sched(&[12, 3, 5]);
        let r = radii(&[11.0, 15.5, 21.0]);
        let exact = exact_joint_integral(&s, &r).unwrap();
        let est = mc_joint_series(&s, &r, 1_000_000, 11).unwrap();
        assert!((est[2].mean - exact).abs() <= 3.0 * est[2].std_error, "{exact} {:?}", est[2]);
    }
}
