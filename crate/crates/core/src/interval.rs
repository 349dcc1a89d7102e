use std::fmt;

use serde::{Deserialize, Serialize};

/// Which computation produced one end of a [`BoundInterval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    TrivialSingle,
    ChernoffPair,
    UnionLower,
    GeneralChernoff,
    Decomposition,
    InglotTail,
    InglotPair,
    MonteCarlo,
}

impl Method {
    /// Relative evaluation cost, used to break ties between equal bounds.
    pub fn cost(self) -> u8 {
        match self {
            Method::Exact => 0,
            Method::TrivialSingle => 1,
            Method::InglotTail => 2,
            Method::ChernoffPair => 3,
            Method::UnionLower => 4,
            Method::GeneralChernoff => 5,
            Method::Decomposition => 6,
            Method::InglotPair => 7,
            Method::MonteCarlo => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::TrivialSingle => "trivial_single",
            Method::ChernoffPair => "chernoff_pair",
            Method::UnionLower => "union_lower",
            Method::GeneralChernoff => "general_chernoff",
            Method::Decomposition => "decomposition",
            Method::InglotTail => "inglot_tail",
            Method::InglotPair => "inglot_pair",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Certified `[lower, upper]` enclosure of a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub method_lower: Method,
    pub method_upper: Method,
}

impl BoundInterval {
    /// Both ends are clamped into `[0, 1]`.
    pub fn new(lower: f64, upper: f64, method_lower: Method, method_upper: Method) -> Self {
        let lower = clamp_probability(lower);
        let upper = clamp_probability(upper);
        debug_assert!(lower <= upper, "inverted interval [{lower}, {upper}]");
        Self {
            lower,
            upper,
            method_lower,
            method_upper,
        }
    }

    pub fn exact(p: f64) -> Self {
        Self::new(p, p, Method::Exact, Method::Exact)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }

    /// Whether `p` lies within `slack` of the interval.
    pub fn contains_with_slack(&self, p: f64, slack: f64) -> bool {
        self.lower - slack <= p && p <= self.upper + slack
    }
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    if p.is_nan() {
        return p;
    }
    p.clamp(0.0, 1.0)
}

/// Closed real interval used for latency and throughput.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}
