//! Chi-square densities, distribution functions and tails.
//!
//! Everything here is evaluated through the regularized incomplete gamma
//! function with the usual split: the power series when `x/2 < dof/2 + 1`
//! and the Lentz continued fraction otherwise. Both branches produce the
//! logarithm of the small side directly, so tails far below `f64::MIN_POSITIVE`
//! still carry a finite `log_value`.
//!
//! The Inglot envelope gives a two-sided closed-form sandwich of the tail
//! that is valid for `r > k - 2`.

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::interval::{BoundInterval, Method};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// A probability paired with its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProbability {
    value: f64,
    log_value: f64,
}

impl TailProbability {
    pub fn from_log(log_value: f64) -> Self {
        let log_value = log_value.min(0.0);
        Self {
            value: log_value.exp(),
            log_value,
        }
    }

    pub const ONE: Self = Self {
        value: 1.0,
        log_value: 0.0,
    };

    pub const ZERO: Self = Self {
        value: 0.0,
        log_value: f64::NEG_INFINITY,
    };

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }
}

/// `(ln P(a, y), ln Q(a, y))` for the regularized lower/upper incomplete gamma.
///
/// Requires `a > 0` and `y > 0`.
fn ln_incomplete_gamma(a: f64, y: f64) -> (f64, f64) {
    let ln_prefix = a * y.ln() - y - ln_gamma(a);
    if y < a + 1.0 {
        // P = prefix * sum_{n>=0} y^n / (a (a+1) ... (a+n))
        let mut denom = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            denom += 1.0;
            term *= y / denom;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        let ln_p = ln_prefix + sum.ln();
        let ln_q = (-ln_p.exp()).ln_1p();
        (ln_p, ln_q)
    } else {
        // Modified Lentz evaluation of the continued fraction for Q.
        let mut b = y + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        let ln_q = ln_prefix + h.ln();
        let ln_p = (-ln_q.exp()).ln_1p();
        (ln_p, ln_q)
    }
}

/// `(ln cdf, ln tail)` of a chi-square with `dof` degrees of freedom at `x`.
fn ln_chi2_split(dof: u32, x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if dof == 0 {
        // Point mass at zero.
        return if x < 0.0 {
            (f64::NEG_INFINITY, 0.0)
        } else {
            (0.0, f64::NEG_INFINITY)
        };
    }
    if x <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x == f64::INFINITY {
        return (0.0, f64::NEG_INFINITY);
    }
    ln_incomplete_gamma(0.5 * dof as f64, 0.5 * x)
}

/// Upper tail `Pr(chi2_dof > x)`, i.e. `Q(dof/2, x/2)`.
///
/// Negative `x` gives probability one.
pub fn chi2_tail(dof: u32, x: f64) -> TailProbability {
    TailProbability::from_log(ln_chi2_split(dof, x).1)
}

/// Lower tail `Pr(chi2_dof <= x)` with its logarithm.
pub fn chi2_cdf_log(dof: u32, x: f64) -> TailProbability {
    TailProbability::from_log(ln_chi2_split(dof, x).0)
}

pub fn chi2_cdf(dof: u32, x: f64) -> f64 {
    chi2_cdf_log(dof, x).value()
}

/// Natural log of the chi-square density. `-inf` outside the support.
pub fn ln_chi2_pdf(dof: u32, x: f64) -> f64 {
    if x < 0.0 || dof == 0 {
        return f64::NEG_INFINITY;
    }
    let a = 0.5 * dof as f64;
    if x == 0.0 {
        return match dof {
            1 => f64::INFINITY,
            2 => -LN_2,
            _ => f64::NEG_INFINITY,
        };
    }
    (a - 1.0) * x.ln() - 0.5 * x - a * LN_2 - ln_gamma(a)
}

pub fn chi2_pdf(dof: u32, x: f64) -> f64 {
    ln_chi2_pdf(dof, x).exp()
}

/// Density of `sqrt(chi2_dof)` at `s`, i.e. `2 s f(s^2)`. Finite at `s = 0`
/// for every `dof >= 1`, which makes it the right integrand near the origin.
pub(crate) fn chi_pdf(dof: u32, s: f64) -> f64 {
    if s < 0.0 || dof == 0 {
        return 0.0;
    }
    let a = 0.5 * dof as f64;
    if s == 0.0 {
        return if dof == 1 { (2.0 / PI).sqrt() } else { 0.0 };
    }
    ((dof as f64 - 1.0) * s.ln() - 0.5 * s * s + (1.0 - a) * LN_2 - ln_gamma(a)).exp()
}

fn check_envelope_args(k: u32, r: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::Domain(format!(
            "envelope needs at least 2 degrees of freedom, got {k}"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("envelope needs r > 0, got {r}")));
    }
    Ok(())
}

/// `ln E_k(r) = -1/2 [r - k - (k-2) ln(r/k) + ln k]`.
pub fn ln_inglot_envelope(k: u32, r: f64) -> Result<f64> {
    check_envelope_args(k, r)?;
    let k = k as f64;
    Ok(-0.5 * (r - k - (k - 2.0) * (r / k).ln() + k.ln()))
}

pub fn inglot_envelope(k: u32, r: f64) -> Result<f64> {
    ln_inglot_envelope(k, r).map(f64::exp)
}

/// Logarithms of the Inglot sandwich `(ln lower, ln upper)` around
/// `Pr(chi2_k > r)`. Valid for `k >= 2` and `r > k - 2`.
pub fn ln_inglot_tail_bounds(k: u32, r: f64) -> Result<(f64, f64)> {
    if k >= 2 && r <= k as f64 - 2.0 {
        return Err(Error::Precondition(format!(
            "Inglot tail bounds need r > k - 2 (k = {k}, r = {r})"
        )));
    }
    let ln_env = ln_inglot_envelope(k, r)?;
    let ln_lower = ln_env - LN_2;
    let ln_upper = ln_env + (r / (r - k as f64 + 2.0)).ln() - 0.5 * PI.ln();
    Ok((ln_lower, ln_upper))
}

/// Closed-form sandwich `1/2 E_k(r) <= Pr(chi2_k > r) <= r / (sqrt(pi) (r-k+2)) E_k(r)`.
///
/// Returns [`Error::Precondition`] when `r <= k - 2`; the caller should fall
/// back to [`chi2_tail`] there.
pub fn inglot_tail_bounds(k: u32, r: f64) -> Result<BoundInterval> {
    let (lo, hi) = ln_inglot_tail_bounds(k, r)?;
    Ok(BoundInterval::new(
        lo.exp(),
        hi.exp(),
        Method::InglotTail,
        Method::InglotTail,
    ))
}
