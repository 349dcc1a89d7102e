//! Certified bounds on joint error probabilities `Pr(zeta_1 ∩ ... ∩ zeta_m)`,
//! where `zeta_i = { chi2_{N_i} > r_i^2 }` and the chi-squares share their
//! first `N_{i-1}` summands.
//!
//! Methods:
//!
//! * two events: the exponentially tilted (Chernoff) upper bound and the two
//!   complement-based lower bounds, the closed form at `u* = (1 - N/r^2)/2`,
//!   and the Inglot-envelope sandwich integrated by quadrature;
//! * `m` events: the tilted recursion on `h_i`, `g_i` for the upper bound and
//!   for the complement term of the lower bound;
//! * combinations: the union lower bound, the single-event upper bound and the
//!   three-term decomposition upper bound.
//!
//! All auxiliary parameters are optimized numerically. Any parameter value
//! gives a valid bound, so the optimizer's only job is to make it small.
//! Exponents are carried in the log domain; lower bounds are formed in the
//! linear domain and clamped at zero.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::interval::{BoundInterval, Method};
use crate::quadrature::integrate_split;
use crate::schedule::{DecodingRadii, TransmissionSchedule};
use crate::search::{coordinate_descent, minimize_scalar};
use crate::special::chi2_tail;

/// Largest tilt parameter; the Chernoff factors blow up at 1/2.
pub const U_MAX: f64 = 0.5 - 1e-9;
const U_TOL: f64 = 1e-9;
const SWEEPS: usize = 3;
const SWEEP_REL_TOL: f64 = 1e-10;
/// Absolute tolerance for the Inglot pair integrals.
pub const INGLOT_TOL: f64 = 1e-12;

fn ln_q(dof: u32, x: f64) -> f64 {
    chi2_tail(dof, x).log_value()
}

fn ln_p(dof: u32, x: f64) -> f64 {
    crate::special::chi2_cdf_log(dof, x).log_value()
}

fn q(dof: u32, x: f64) -> f64 {
    chi2_tail(dof, x).value()
}

/// `c ln x` with the convention `0 ln 0 = 0`.
fn xlny(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x.ln()
    }
}

/// Nested events described by cumulative degrees of freedom and squared radii.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Chain {
    n: Vec<u32>,
    r2: Vec<f64>,
}

impl Chain {
    pub(crate) fn new(sched: &TransmissionSchedule, radii: &DecodingRadii) -> Self {
        assert_eq!(sched.m(), radii.len(), "schedule and radii lengths differ");
        Self {
            n: sched.cumulative().to_vec(),
            r2: radii.r_squared().to_vec(),
        }
    }

    fn len(&self) -> usize {
        self.n.len()
    }

    /// Degrees of freedom added by event `i` (0-based).
    fn inc(&self, i: usize) -> u32 {
        if i == 0 {
            self.n[0]
        } else {
            self.n[i] - self.n[i - 1]
        }
    }

    fn select(&self, idx: &[usize]) -> Chain {
        Chain {
            n: idx.iter().map(|&i| self.n[i]).collect(),
            r2: idx.iter().map(|&i| self.r2[i]).collect(),
        }
    }

    fn prefix(&self, len: usize) -> Chain {
        Chain {
            n: self.n[..len].to_vec(),
            r2: self.r2[..len].to_vec(),
        }
    }

    fn suffix(&self, start: usize) -> Chain {
        Chain {
            n: self.n[start..].to_vec(),
            r2: self.r2[start..].to_vec(),
        }
    }

    fn last(&self) -> (u32, f64) {
        (*self.n.last().unwrap(), *self.r2.last().unwrap())
    }

    /// Some event after the first can never occur.
    fn later_event_impossible(&self) -> bool {
        self.r2[1..].contains(&f64::INFINITY)
    }
}

// ---------------------------------------------------------------------------
// Two events
// ---------------------------------------------------------------------------

/// `(1 - N/r^2)/2` clamped into `[0, 1/2)`. Positive exactly when `r^2 > N`.
pub fn suboptimal_u_star(n_total: u32, r_sq: f64) -> f64 {
    let u = 0.5 * (1.0 - n_total as f64 / r_sq);
    if u.is_nan() {
        return 0.0;
    }
    u.clamp(0.0, U_MAX)
}

/// `1/2 - N_m / (2 r_m^2 + 2 log2 M)` clamped into `[0, 1/2)`: the fixed
/// parameter used for every term of the union lower bound.
pub fn union_fixed_parameter(n_m: u32, r_m_sq: f64, k_bits: u32) -> f64 {
    let u = 0.5 - n_m as f64 / (2.0 * r_m_sq + 2.0 * k_bits as f64);
    if u.is_nan() {
        return 0.0;
    }
    u.clamp(0.0, U_MAX)
}

/// `ln` of `e^{-u r_next^2} Pr(chi2_{N_prev} > (1-2u) r_prev^2) / (1-2u)^{N_total/2}`.
fn ln_pair_upper_at(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64, u: f64) -> f64 {
    let n_total = (n_prev + i_next) as f64;
    let t = 1.0 - 2.0 * u;
    -u * r_next_sq - 0.5 * n_total * t.ln() + ln_q(n_prev, t * r_prev_sq)
}

/// Bound on `Pr(zeta_prev ∩ zeta_next^c)` at tilt `v >= 0` (the `w_1` term).
fn ln_first_only_at(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64, v: f64) -> f64 {
    let n_total = (n_prev + i_next) as f64;
    let t = 1.0 + 2.0 * v;
    v * r_next_sq - 0.5 * n_total * t.ln() + ln_q(n_prev, t * r_prev_sq)
}

/// Bound on `Pr(zeta_prev^c ∩ zeta_next)` at tilt `v in [0, 1/2)` (the `w_2` term).
fn ln_next_only_at(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64, v: f64) -> f64 {
    let n_total = (n_prev + i_next) as f64;
    let t = 1.0 - 2.0 * v;
    -v * r_next_sq - 0.5 * n_total * t.ln() + ln_p(n_prev, t * r_prev_sq)
}

/// Chernoff upper bound on `Pr(zeta_prev ∩ zeta_next)` at a fixed tilt `u`.
pub fn chernoff_pair_upper_at(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64, u: f64) -> f64 {
    if r_next_sq == f64::INFINITY {
        return 0.0;
    }
    ln_pair_upper_at(n_prev, i_next, r_prev_sq, r_next_sq, u).exp().min(1.0)
}

/// `inf_{0 <= u < 1/2} e^{-u r_next^2} Pr(chi2_{N_prev} > (1-2u) r_prev^2) / (1-2u)^{(N_prev+I_next)/2}`.
pub fn chernoff_pair_upper(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64) -> f64 {
    if r_next_sq == f64::INFINITY {
        return 0.0;
    }
    let seed = suboptimal_u_star(n_prev + i_next, r_next_sq);
    let m = minimize_scalar(
        |u| ln_pair_upper_at(n_prev, i_next, r_prev_sq, r_next_sq, u),
        0.0,
        U_MAX,
        &[seed],
        U_TOL,
    );
    m.value.exp().min(1.0)
}

/// `w_1 = inf_{v >= 0}`: upper bound on `Pr(zeta_prev ∩ zeta_next^c)`.
fn first_only_inf(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64) -> f64 {
    if r_prev_sq >= r_next_sq {
        // The event is empty; the bound tends to 0 as v grows.
        return 0.0;
    }
    // v = s / (1 - s) maps [0, 1) onto [0, inf).
    let f = |s: f64| ln_first_only_at(n_prev, i_next, r_prev_sq, r_next_sq, s / (1.0 - s));
    minimize_scalar(f, 0.0, 1.0 - 1e-7, &[], U_TOL).value.exp()
}

/// `w_2 = inf_{0 <= v < 1/2}`: upper bound on `Pr(zeta_prev^c ∩ zeta_next)`.
fn next_only_inf(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64, seeds: &[f64]) -> f64 {
    if r_prev_sq == 0.0 {
        return 0.0;
    }
    let f = |v: f64| ln_next_only_at(n_prev, i_next, r_prev_sq, r_next_sq, v);
    minimize_scalar(f, 0.0, U_MAX, seeds, U_TOL).value.exp()
}

fn chernoff_pair_lower_raw(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64) -> f64 {
    if r_next_sq == f64::INFINITY || r_prev_sq == f64::INFINITY {
        return 0.0;
    }
    let p_prev = q(n_prev, r_prev_sq);
    let p_next = q(n_prev + i_next, r_next_sq);
    let w1 = first_only_inf(n_prev, i_next, r_prev_sq, r_next_sq);
    let seed = suboptimal_u_star(n_prev + i_next, r_next_sq);
    let w2 = next_only_inf(n_prev, i_next, r_prev_sq, r_next_sq, &[seed]);
    (p_prev - w1).max(p_next - w2)
}

/// `max(0, Pr(zeta_prev) - w_1, Pr(zeta_next) - w_2)`.
pub fn chernoff_pair_lower(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64) -> f64 {
    chernoff_pair_lower_raw(n_prev, i_next, r_prev_sq, r_next_sq).clamp(0.0, 1.0)
}

/// The pair upper bound at `u = u*`:
/// `exp(-N (c - 1 - ln c) / 2) Pr(chi2_{N_prev} > r_prev^2 / c)` with
/// `c = r_next^2 / N`, `N = N_prev + I_next`. Falls back to `u = 0`
/// (i.e. `Pr(zeta_prev)`) when `c <= 1`.
pub fn closed_form_pair_upper(n_prev: u32, i_next: u32, r_prev_sq: f64, r_next_sq: f64) -> f64 {
    if r_next_sq == f64::INFINITY {
        return 0.0;
    }
    let n_total = (n_prev + i_next) as f64;
    let c = r_next_sq / n_total;
    if !(c > 1.0) {
        return q(n_prev, r_prev_sq);
    }
    (-0.5 * n_total * (c - 1.0 - c.ln()) + ln_q(n_prev, r_prev_sq / c))
        .exp()
        .min(1.0)
}

/// Constants of the Inglot-envelope pair bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InglotAuxiliaries {
    pub n1: u32,
    pub i2: u32,
    pub r1_sq: f64,
    pub r2_sq: f64,
    /// `(I_2 - 2) / r_2^2`.
    pub delta_low: f64,
    /// `(r_2^2 - r_1^2) / r_2^2`.
    pub delta_high: f64,
    /// `ln K(r_2, I_2, N_1)`.
    pub ln_k: f64,
}

impl InglotAuxiliaries {
    pub fn new(n1: u32, i2: u32, r1_sq: f64, r2_sq: f64) -> Result<Self> {
        if i2 < 2 {
            return Err(Error::Precondition(format!(
                "Inglot pair bound needs an increment of at least 2 symbols, got {i2}"
            )));
        }
        if n1 == 0 || !(r2_sq > r1_sq) || !r2_sq.is_finite() || r1_sq < 0.0 {
            return Err(Error::Precondition(format!(
                "Inglot pair bound needs 0 <= r1^2 < r2^2 < inf (r1^2 = {r1_sq}, r2^2 = {r2_sq})"
            )));
        }
        let (nf, i2f) = (n1 as f64, i2 as f64);
        let delta_low = (i2f - 2.0) / r2_sq;
        let delta_high = (r2_sq - r1_sq) / r2_sq;
        if delta_low >= delta_high {
            return Err(Error::Precondition(format!(
                "empty delta range ({delta_low} >= {delta_high})"
            )));
        }
        let ln_k = -0.5 * (r2_sq - i2f) - 0.5 * nf * LN_2 - 0.5 * PI.ln() - 0.5 * (i2f - 1.0) * i2f.ln()
            - ln_gamma(0.5 * nf);
        Ok(Self {
            n1,
            i2,
            r1_sq,
            r2_sq,
            delta_low,
            delta_high,
            ln_k,
        })
    }

    pub fn k(&self) -> f64 {
        self.ln_k.exp()
    }

    /// `ln g(t) = (N_1/2 - 1) ln t + (I_2/2) ln(r_2^2 - t) - ln(r_2^2 - I_2 + 2 - t)`.
    pub fn ln_g(&self, t: f64) -> f64 {
        let (nf, i2f) = (self.n1 as f64, self.i2 as f64);
        xlny(0.5 * nf - 1.0, t) + 0.5 * i2f * (self.r2_sq - t).ln() - (self.r2_sq - i2f + 2.0 - t).ln()
    }

    /// `(sqrt(pi) K / 2) ∫_{r1^2}^{r2^2} (r2^2 - t)^{I2/2 - 1} t^{N1/2 - 1} dt`.
    fn lower_integral(&self) -> Result<f64> {
        let (nf, i2f) = (self.n1 as f64, self.i2 as f64);
        let ln_c = 0.5 * PI.ln() + self.ln_k - LN_2;
        let (a, b) = (self.r1_sq, self.r2_sq);
        let c = 0.5 * (a + b);
        // s = sqrt(t) on [a, c]: t^{N1/2-1} dt = 2 s^{N1-1} ds.
        let lower = integrate_split(
            |s| (ln_c + LN_2 + xlny(nf - 1.0, s) + xlny(0.5 * i2f - 1.0, b - s * s)).exp(),
            a.sqrt(),
            c.sqrt(),
            &[],
            0.5 * INGLOT_TOL,
        )?;
        // w = sqrt(b - t) on [c, b]: (b - t)^{I2/2-1} dt = 2 w^{I2-1} dw.
        let upper = integrate_split(
            |w| (ln_c + LN_2 + xlny(i2f - 1.0, w) + xlny(0.5 * nf - 1.0, b - w * w)).exp(),
            0.0,
            (b - c).sqrt(),
            &[],
            0.5 * INGLOT_TOL,
        )?;
        Ok(lower + upper)
    }

    /// Upper bound at split parameter `delta`:
    /// `K ∫_{r1^2}^{(1-delta) r2^2} g + Pr(chi2_{N1} > (1-delta) r2^2)`.
    /// The second term already includes `p = Pr(chi2_{N1} > r2^2)`.
    pub fn upper_at(&self, delta: f64) -> Result<f64> {
        let t_hi = (1.0 - delta) * self.r2_sq;
        let tail = q(self.n1, t_hi);
        if t_hi <= self.r1_sq {
            return Ok(q(self.n1, self.r1_sq));
        }
        let nf = self.n1 as f64;
        let peak = (nf - 2.0).max(0.0).sqrt();
        let body = integrate_split(
            |s| {
                let t = s * s;
                (self.ln_k + LN_2 + xlny(nf - 1.0, s) + self.ln_g(t) - xlny(0.5 * nf - 1.0, t)).exp()
            },
            self.r1_sq.sqrt(),
            t_hi.sqrt(),
            &[peak],
            INGLOT_TOL,
        )?;
        Ok(body + tail)
    }
}

/// Sandwich of `Pr(zeta_1 ∩ zeta_2)` from the Inglot envelope of the
/// increment's tail. The lower end integrates `1/2 E_{I2}` against the
/// density of the first block; the upper end splits the integral at
/// `(1 - delta) r2^2` and takes the infimum over `delta` by scanning and
/// golden-section refinement on `(delta_low, delta_high]`.
///
/// Needs `I2 >= 2` and `delta_low < delta_high`; otherwise returns
/// [`Error::Precondition`] and the caller should use the Chernoff bounds.
pub fn inglot_pair_bounds(n1: u32, i2: u32, r1_sq: f64, r2_sq: f64) -> Result<BoundInterval> {
    let aux = InglotAuxiliaries::new(n1, i2, r1_sq, r2_sq)?;
    let p = q(n1, r2_sq);
    let lower = p + aux.lower_integral()?;

    let span = aux.delta_high - aux.delta_low;
    let lo = aux.delta_low + 1e-6 * span;
    let m = minimize_scalar(
        |d| aux.upper_at(d).unwrap_or(f64::INFINITY),
        lo,
        aux.delta_high,
        &[],
        1e-7 * span,
    );
    let upper = if m.value.is_finite() {
        m.value
    } else {
        q(n1, r1_sq)
    };
    Ok(BoundInterval::new(
        lower,
        upper.max(lower),
        Method::InglotPair,
        Method::InglotPair,
    ))
}

// ---------------------------------------------------------------------------
// m events
// ---------------------------------------------------------------------------

/// Tilt parameters `u_1..u_{m-1}` of the `m`-event recursion. `u_1` tilts the
/// last increment, `u_{m-1}` the second one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernoffParams {
    u: Vec<f64>,
}

impl ChernoffParams {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if let Some(bad) = u.iter().find(|u| !(**u >= 0.0 && **u < 0.5)) {
            return Err(Error::Domain(format!("tilt parameters must lie in [0, 1/2), got {bad}")));
        }
        Ok(Self { u })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// `h_1 = u_1`, `h_i = h_{i-1} + u_i (1 - 2 h_{i-1})`.
    pub fn h(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.u.len());
        let mut h = 0.0;
        for &u in &self.u {
            h += u * (1.0 - 2.0 * h);
            out.push(h);
        }
        out
    }

    /// `1 - 2 h_i = prod_{j <= i} (1 - 2 u_j)`.
    pub fn one_minus_2h(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.u.len());
        let mut t = 1.0;
        for &u in &self.u {
            t *= 1.0 - 2.0 * u;
            out.push(t);
        }
        out
    }

    /// `ln g_1..ln g_{m-1}` for a schedule with `m = u.len() + 1` transmissions.
    pub fn ln_g(&self, sched: &TransmissionSchedule, radii: &DecodingRadii) -> Result<Vec<f64>> {
        let chain = Chain::new(sched, radii);
        self.check_len(&chain)?;
        Ok(recursion(&chain, &self.u).0)
    }

    fn check_len(&self, chain: &Chain) -> Result<()> {
        if self.u.len() + 1 != chain.len() {
            return Err(Error::Domain(format!(
                "{} tilt parameters for {} transmissions",
                self.u.len(),
                chain.len()
            )));
        }
        Ok(())
    }
}

/// Runs the recursion and returns `(ln g_1..ln g_{m-1}, 1 - 2 h_{m-1})`.
///
/// Conditioning on the first `m - i` blocks, the tilted factor of block
/// `m - i + 1` is `e^{h_{i-1} X}`; bounding its tail with tilt `u_i` and
/// absorbing the exponential moment gives the factor
/// `e^{-u_i (1 - 2 h_{i-1}) r^2} (1 - 2 h_i)^{-I/2}`.
fn recursion(chain: &Chain, u: &[f64]) -> (Vec<f64>, f64) {
    let m = chain.len();
    debug_assert_eq!(u.len() + 1, m);
    let mut ln_g = Vec::with_capacity(u.len());
    let mut t_prev = 1.0; // 1 - 2 h_{i-1}
    let mut acc = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let e = m - 1 - i; // 0-based event index m - i
        let t = t_prev * (1.0 - 2.0 * ui);
        acc += -ui * t_prev * chain.r2[e] - 0.5 * chain.inc(e) as f64 * t.ln();
        ln_g.push(acc);
        t_prev = t;
    }
    (ln_g, t_prev)
}

/// Log of the `m`-event upper bound (`complement = false`) or of the bound on
/// `Pr(zeta_1^c ∩ zeta_2 ∩ ... ∩ zeta_m)` (`complement = true`).
fn ln_general_at(chain: &Chain, u: &[f64], complement: bool) -> f64 {
    let (ln_g, t) = recursion(chain, u);
    let ln_g = *ln_g.last().unwrap();
    let i1 = chain.inc(0);
    let x = t * chain.r2[0];
    let ln_tail = if complement { ln_p(i1, x) } else { ln_q(i1, x) };
    ln_g + ln_tail - 0.5 * i1 as f64 * t.ln()
}

fn general_start(chain: &Chain) -> Vec<f64> {
    let (n_m, r_m) = chain.last();
    let mut start = vec![0.0; chain.len() - 1];
    start[0] = suboptimal_u_star(n_m, r_m);
    start
}

fn general_inf(chain: &Chain, complement: bool) -> f64 {
    let (_, best) = coordinate_descent(
        |u| ln_general_at(chain, u, complement),
        &general_start(chain),
        0.0,
        U_MAX,
        SWEEPS,
        SWEEP_REL_TOL,
        U_TOL,
    );
    best.exp()
}

fn general_upper_chain(chain: &Chain) -> f64 {
    if chain.len() == 1 {
        return q(chain.n[0], chain.r2[0]);
    }
    if chain.later_event_impossible() {
        return 0.0;
    }
    general_inf(chain, false).min(1.0)
}

/// Upper bound on `Pr(zeta_1 ∩ ... ∩ zeta_m)` from the tilted recursion, at
/// the given parameters or minimized by coordinate descent when `params` is
/// `None`. With `m = 1` this is the exact tail.
pub fn general_chernoff_upper(
    sched: &TransmissionSchedule,
    radii: &DecodingRadii,
    params: Option<&ChernoffParams>,
) -> Result<f64> {
    let chain = Chain::new(sched, radii);
    match params {
        None => Ok(general_upper_chain(&chain)),
        Some(p) => {
            p.check_len(&chain)?;
            if chain.later_event_impossible() {
                return Ok(0.0);
            }
            Ok(ln_general_at(&chain, p.u(), false).exp().min(1.0))
        }
    }
}

/// `Pr(∩_{i>=2} zeta_i) - bound on Pr(zeta_1^c ∩ ∩_{i>=2} zeta_i)`, before clamping.
fn general_lower_raw(chain: &Chain) -> f64 {
    if chain.len() == 1 {
        return q(chain.n[0], chain.r2[0]);
    }
    if chain.later_event_impossible() {
        return 0.0;
    }
    let rest = best_lower_chain(&chain.suffix(1)).0;
    let complement = if chain.r2[0] == 0.0 {
        0.0
    } else {
        general_inf(chain, true)
    };
    rest - complement
}

/// Best available lower bound for a chain, used recursively for the
/// `Pr(∩_{i>=2} zeta_i)` term.
fn best_lower_chain(chain: &Chain) -> (f64, Method) {
    if chain.len() == 1 {
        return (q(chain.n[0], chain.r2[0]), Method::Exact);
    }
    let union = union_lower_raw(chain, None).max(0.0);
    let general = general_lower_raw(chain).max(0.0);
    if general > union {
        (general, Method::GeneralChernoff)
    } else {
        (union, Method::UnionLower)
    }
}

/// Lower bound on `Pr(zeta_1 ∩ ... ∩ zeta_m)` peeling off the first event:
/// a recursive lower bound on `Pr(∩_{i>=2} zeta_i)` minus the tilted bound on
/// `Pr(zeta_1^c ∩ ∩_{i>=2} zeta_i)`, clamped at 0.
pub fn general_chernoff_lower(sched: &TransmissionSchedule, radii: &DecodingRadii) -> f64 {
    general_lower_raw(&Chain::new(sched, radii)).clamp(0.0, 1.0)
}

fn union_lower_raw(chain: &Chain, fixed_u: Option<f64>) -> f64 {
    let (n_m, r_m) = chain.last();
    if r_m == f64::INFINITY {
        return 0.0;
    }
    let p_m = q(n_m, r_m);
    let seed = suboptimal_u_star(n_m, r_m);
    let mut sum = 0.0;
    for i in 0..chain.len() - 1 {
        let (n_i, r_i) = (chain.n[i], chain.r2[i]);
        let term = match fixed_u {
            Some(u) if r_i > 0.0 => ln_next_only_at(n_i, n_m - n_i, r_i, r_m, u).exp(),
            Some(_) => 0.0,
            None => next_only_inf(n_i, n_m - n_i, r_i, r_m, &[seed]),
        };
        sum += term;
        if sum >= p_m {
            break;
        }
    }
    p_m - sum
}

/// `Pr(zeta_m) - sum_{i<m} (bound on Pr(zeta_m ∩ zeta_i^c))`, clamped at 0.
/// Each term uses the tilt `fixed_u` when given, otherwise its own infimum.
pub fn union_lower(sched: &TransmissionSchedule, radii: &DecodingRadii, fixed_u: Option<f64>) -> f64 {
    let chain = Chain::new(sched, radii);
    if chain.len() == 1 {
        return q(chain.n[0], chain.r2[0]);
    }
    union_lower_raw(&chain, fixed_u).clamp(0.0, 1.0)
}

fn trivial_chain(chain: &Chain) -> f64 {
    chain
        .n
        .iter()
        .zip(&chain.r2)
        .map(|(&n, &r)| q(n, r))
        .fold(1.0, f64::min)
}

/// `min_i Pr(zeta_i)`, each tail evaluated exactly.
pub fn trivial_upper(sched: &TransmissionSchedule, radii: &DecodingRadii) -> f64 {
    trivial_chain(&Chain::new(sched, radii))
}

/// Cheapest valid upper bound on a two-event intersection.
fn pair_upper_best(chain: &Chain, a: usize, b: usize) -> f64 {
    let (na, nb) = (chain.n[a], chain.n[b]);
    let (ra, rb) = (chain.r2[a], chain.r2[b]);
    chernoff_pair_upper(na, nb - na, ra, rb).min(q(na, ra)).min(q(nb, rb))
}

fn decomposition_raw(chain: &Chain, j: usize) -> f64 {
    let m = chain.len();
    let (jj, jm1, mm) = (j - 1, j - 2, m - 1);
    let with_last = if j == m {
        q(chain.n[mm], chain.r2[mm])
    } else {
        pair_upper_best(chain, jj, mm)
    };
    let consecutive = pair_upper_best(chain, jm1, jj);
    let triple = if j == m {
        let (na, nb) = (chain.n[jm1], chain.n[mm]);
        chernoff_pair_lower(na, nb - na, chain.r2[jm1], chain.r2[mm])
    } else {
        best_lower_chain(&chain.select(&[jm1, jj, mm])).0
    };
    with_last + consecutive - triple
}

/// Upper bound on `Pr(zeta_1 ∩ ... ∩ zeta_j)` (1-based `j`, `2 <= j <= m`)
/// from `Pr(zeta_j ∩ zeta_m) + Pr(zeta_{j-1} ∩ zeta_j) - Pr(zeta_{j-1} ∩ zeta_j ∩ zeta_m)`,
/// with upper bounds on the first two terms and a lower bound on the third.
pub fn decomposition_upper(sched: &TransmissionSchedule, radii: &DecodingRadii, j: usize) -> Result<f64> {
    let chain = Chain::new(sched, radii);
    if j < 2 || j > chain.len() {
        return Err(Error::Index {
            index: j,
            len: chain.len(),
        });
    }
    Ok(decomposition_raw(&chain, j).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Series aggregation
// ---------------------------------------------------------------------------

/// Which methods [`joint_series_bounds`] may use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPolicy {
    pub trivial: bool,
    pub chernoff_pair: bool,
    pub general: bool,
    pub union: bool,
    pub decomposition: bool,
    pub inglot: bool,
    /// Compute lower ends; when false every lower end is 0.
    pub lower: bool,
    /// When set, the union bound is also evaluated at the fixed parameter
    /// [`union_fixed_parameter`] for this many information bits.
    pub k_bits: Option<u32>,
    /// The recursion-based methods (general, decomposition, Inglot) are only
    /// applied to prefixes of at most this many transmissions.
    pub max_expensive_m: usize,
}

impl Default for BoundPolicy {
    fn default() -> Self {
        Self::all()
    }
}

impl BoundPolicy {
    pub fn all() -> Self {
        Self {
            trivial: true,
            chernoff_pair: true,
            general: true,
            union: true,
            decomposition: true,
            inglot: true,
            lower: true,
            k_bits: None,
            max_expensive_m: 12,
        }
    }

    /// Only the single-event upper bound and the union lower bound.
    pub fn trivial() -> Self {
        Self {
            trivial: true,
            chernoff_pair: false,
            general: false,
            union: true,
            decomposition: false,
            inglot: false,
            lower: true,
            k_bits: None,
            max_expensive_m: 0,
        }
    }

    /// Upper bounds that are cheap to evaluate; lower ends from the union bound.
    pub fn fast() -> Self {
        Self {
            trivial: true,
            chernoff_pair: true,
            general: true,
            union: true,
            decomposition: false,
            inglot: false,
            lower: true,
            k_bits: None,
            max_expensive_m: 8,
        }
    }

    /// Upper ends from the single-event, pair and recursion bounds only; the
    /// objective of the bound-driven schedule search.
    pub fn upper_only() -> Self {
        Self {
            lower: false,
            union: false,
            ..Self::fast()
        }
    }

    pub fn without_lower(mut self) -> Self {
        self.lower = false;
        self
    }

    pub fn with_k_bits(mut self, k_bits: u32) -> Self {
        self.k_bits = Some(k_bits);
        self
    }
}

/// Intervals for `P_0 = 1, P_1, ..., P_m` with `P_i = Pr(zeta_1 ∩ ... ∩ zeta_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSeries {
    pub intervals: Vec<BoundInterval>,
    /// Method outputs that fell outside `[0, 1]` and were clamped.
    pub clamp_events: usize,
}

impl JointSeries {
    pub fn lowers(&self) -> Vec<f64> {
        self.intervals.iter().map(|b| b.lower).collect()
    }

    pub fn uppers(&self) -> Vec<f64> {
        self.intervals.iter().map(|b| b.upper).collect()
    }
}

#[derive(Default)]
struct Candidates {
    best: Option<(f64, Method)>,
    clamps: usize,
}

impl Candidates {
    /// Keeps the smallest (`minimize`) or largest value; ties go to the cheaper method.
    fn offer(&mut self, raw: f64, method: Method, minimize: bool) {
        if raw.is_nan() {
            return;
        }
        if !(0.0..=1.0).contains(&raw) {
            self.clamps += 1;
        }
        let v = raw.clamp(0.0, 1.0);
        let better = match self.best {
            None => true,
            Some((b, bm)) => {
                if v == b {
                    method.cost() < bm.cost()
                } else if minimize {
                    v < b
                } else {
                    v > b
                }
            }
        };
        if better {
            self.best = Some((v, method));
        }
    }
}

/// Aggregates every enabled method into certified intervals for the whole
/// joint-error series. Upper ends are made nonincreasing by running minima,
/// lower ends by running maxima from the back.
pub fn joint_series_bounds(sched: &TransmissionSchedule, radii: &DecodingRadii, policy: &BoundPolicy) -> JointSeries {
    let full = Chain::new(sched, radii);
    let m = full.len();
    let mut clamps = 0;
    let mut raw: Vec<(f64, Method, f64, Method)> = vec![(1.0, Method::Exact, 1.0, Method::Exact)];

    for i in 1..=m {
        let chain = full.prefix(i);
        if i == 1 {
            let p = q(chain.n[0], chain.r2[0]);
            raw.push((p, Method::Exact, p, Method::Exact));
            continue;
        }
        let expensive = i <= policy.max_expensive_m;
        let mut up = Candidates::default();
        let mut lo = Candidates::default();
        let (pn, pr) = (chain.n[i - 2], chain.r2[i - 2]);
        let (cn, cr) = (chain.n[i - 1], chain.r2[i - 1]);

        if policy.trivial {
            up.offer(trivial_chain(&chain), Method::TrivialSingle, true);
        }
        if policy.chernoff_pair {
            up.offer(chernoff_pair_upper(pn, cn - pn, pr, cr), Method::ChernoffPair, true);
            if i == 2 && policy.lower {
                lo.offer(chernoff_pair_lower_raw(pn, cn - pn, pr, cr), Method::ChernoffPair, false);
            }
        }
        if policy.general && expensive {
            up.offer(general_upper_chain(&chain), Method::GeneralChernoff, true);
            if policy.lower {
                lo.offer(general_lower_raw(&chain), Method::GeneralChernoff, false);
            }
        }
        if policy.union && policy.lower {
            lo.offer(union_lower_raw(&chain, None), Method::UnionLower, false);
            if let Some(k) = policy.k_bits {
                let u = union_fixed_parameter(cn, cr, k);
                lo.offer(union_lower_raw(&chain, Some(u)), Method::UnionLower, false);
            }
        }
        if policy.decomposition && m <= policy.max_expensive_m {
            up.offer(decomposition_raw(&full, i), Method::Decomposition, true);
        }
        if policy.inglot && expensive {
            if let Ok(b) = inglot_pair_bounds(pn, cn - pn, pr, cr) {
                up.offer(b.upper, Method::InglotPair, true);
                if i == 2 && policy.lower {
                    lo.offer(b.lower, Method::InglotPair, false);
                }
            }
        }
        clamps += up.clamps + lo.clamps;
        let (u, um) = up.best.unwrap_or((1.0, Method::TrivialSingle));
        let (l, lm) = lo.best.unwrap_or((0.0, Method::UnionLower));
        raw.push((l, lm, u, um));
    }

    for i in 1..raw.len() {
        if raw[i].2 > raw[i - 1].2 {
            raw[i].2 = raw[i - 1].2;
            raw[i].3 = raw[i - 1].3;
        }
    }
    for i in (1..raw.len() - 1).rev() {
        if raw[i].0 < raw[i + 1].0 {
            raw[i].0 = raw[i + 1].0;
            raw[i].1 = raw[i + 1].1;
        }
    }

    let intervals = raw
        .into_iter()
        .map(|(l, lm, u, um)| {
            let l = if l > u {
                clamps += 1;
                u
            } else {
                l
            };
            BoundInterval::new(l, u, lm, um)
        })
        .collect();
    JointSeries {
        intervals,
        clamp_events: clamps,
    }
}

#[cfg(test)]
mod tests;
