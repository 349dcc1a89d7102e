//! Adaptive Simpson quadrature with Richardson correction.
//!
//! Integrands handed to this module are expected to be bounded on the closed
//! interval. Endpoint singularities of chi-square densities are removed by a
//! square-root change of variable before integrating (see `oracle`).

use crate::error::{Error, Result};

/// Recursion limit for interval bisection.
pub const MAX_DEPTH: u32 = 60;

/// Integrand evaluations allowed per call before giving up.
pub const MAX_EVALS: usize = 1 << 20;

/// Panels whose two Simpson estimates agree to this relative precision are
/// accepted even if the absolute tolerance is smaller: further bisection
/// would only chase rounding noise.
const ROUNDING: f64 = 1e-15;

/// Number of equal panels the interval is cut into before adapting.
const INITIAL_PANELS: usize = 8;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fb: f64) -> Self {
        let m = 0.5 * (a + b);
        let fm = f(m);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        Self {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
        }
    }
}

struct State {
    error: f64,
    failed: bool,
    evals: usize,
}

fn adapt<F: Fn(f64) -> f64>(f: &F, p: &Panel, tol: f64, depth: u32, st: &mut State) -> f64 {
    let m = 0.5 * (p.a + p.b);
    let left = Panel::new(f, p.a, m, p.fa, p.fm);
    let right = Panel::new(f, m, p.b, p.fm, p.fb);
    st.evals += 2;
    let delta = left.whole + right.whole - p.whole;
    let scale = left.whole.abs() + right.whole.abs();
    if delta.abs() <= 15.0 * tol || delta.abs() <= ROUNDING * scale {
        st.error += delta.abs() / 15.0;
        return left.whole + right.whole + delta / 15.0;
    }
    if depth >= MAX_DEPTH || m <= p.a || m >= p.b || st.evals > MAX_EVALS {
        st.failed = true;
        st.error += delta.abs() / 15.0;
        return left.whole + right.whole + delta / 15.0;
    }
    adapt(f, &left, 0.5 * tol, depth + 1, st) + adapt(f, &right, 0.5 * tol, depth + 1, st)
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Fails with [`Error::Convergence`] (carrying the partial estimate) when some
/// panel still misses its tolerance after [`MAX_DEPTH`] bisections or the
/// call exceeds [`MAX_EVALS`] evaluations.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let mut st = State {
        error: 0.0,
        failed: false,
        evals: 0,
    };
    let h = (b - a) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=INITIAL_PANELS {
        let x1 = if i == INITIAL_PANELS { b } else { a + h * i as f64 };
        let f1 = f(x1);
        let panel = Panel::new(&f, x0, x1, f0, f1);
        total += adapt(&f, &panel, tol / INITIAL_PANELS as f64, 0, &mut st);
        x0 = x1;
        f0 = f1;
    }
    if st.failed || !total.is_finite() {
        return Err(Error::Convergence {
            estimate: total,
            error: st.error,
        });
    }
    Ok(total)
}

/// Like [`integrate`] but first splits `[a, b]` at the given interior points.
/// Points outside the open interval are ignored.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: &[f64], tol: f64) -> Result<f64> {
    let mut cuts: Vec<f64> = points.iter().copied().filter(|&p| p > a && p < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut knots = Vec::with_capacity(cuts.len() + 2);
    knots.push(a);
    knots.extend(cuts);
    knots.push(b);
    let pieces = (knots.len() - 1) as f64;
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += integrate(&f, w[0], w[1], tol / pieces)?;
    }
    Ok(total)
}
