//! Derivative-free minimization used for the auxiliary Chernoff and Inglot
//! parameters.
//!
//! Every point visited yields a valid bound, so these routines only need to
//! find a small objective value; they report the best value evaluated, never
//! an extrapolation.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Grid points scanned before the golden-section refinement.
const GRID: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

impl Minimum {
    fn keep_better(&mut self, x: f64, value: f64) {
        // NaN never wins.
        if value < self.value {
            self.x = x;
            self.value = value;
        }
    }
}

/// Golden-section search on `[lo, hi]` until the bracket is shorter than `x_tol`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> Minimum {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = Minimum {
        x: c,
        value: fc,
    };
    best.keep_better(d, fd);
    while (b - a).abs() > x_tol {
        if fc < fd || fd.is_nan() {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            best.keep_better(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            best.keep_better(d, fd);
        }
    }
    best
}

/// Minimizes `f` over `[lo, hi]`: scans a uniform grid plus the supplied seeds,
/// then refines by golden section between the grid neighbours of the best
/// point. Returns the smallest value seen.
pub fn minimize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, seeds: &[f64], x_tol: f64) -> Minimum {
    let mut best = Minimum {
        x: lo,
        value: f(lo),
    };
    let step = (hi - lo) / GRID as f64;
    for i in 1..=GRID {
        let x = if i == GRID { hi } else { lo + step * i as f64 };
        best.keep_better(x, f(x));
    }
    for &s in seeds {
        if s >= lo && s <= hi {
            best.keep_better(s, f(s));
        }
    }
    let a = (best.x - step).max(lo);
    let b = (best.x + step).min(hi);
    let refined = golden_section(&f, a, b, x_tol);
    best.keep_better(refined.x, refined.value);
    best
}

/// Box-constrained coordinate descent. Each coordinate is minimized with
/// [`minimize_scalar`] seeded at its current value. Stops after `max_sweeps`
/// sweeps or once a sweep improves the objective by less than `rel_tol`
/// (relative).
pub fn coordinate_descent<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    lo: f64,
    hi: f64,
    max_sweeps: usize,
    rel_tol: f64,
    x_tol: f64,
) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut value = f(&x);
    for _ in 0..max_sweeps {
        let before = value;
        for i in 0..x.len() {
            let current = x[i];
            let m = minimize_scalar(
                |t| {
                    let mut probe = x.clone();
                    probe[i] = t;
                    f(&probe)
                },
                lo,
                hi,
                &[current],
                x_tol,
            );
            if m.value < value {
                x[i] = m.x;
                value = m.value;
            }
        }
        let scale = before.abs().max(1e-300);
        if !(before - value > rel_tol * scale) {
            break;
        }
    }
    (x, value)
}
