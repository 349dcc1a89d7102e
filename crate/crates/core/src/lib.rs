//! Certified bounds on the joint decoding-error probabilities of
//! rate-compatible sphere-packing incremental-redundancy schemes over the
//! AWGN channel with ACK/NACK feedback, and the expected latency and
//! throughput they imply.

// `!(x > a)` guards must also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod interval;
pub mod joint;
pub mod optimizer;
pub mod oracle;
pub mod performance;
pub mod quadrature;
pub mod schedule;
pub mod search;
pub mod special;

pub use error::{Error, Result};
pub use interval::{BoundInterval, Interval, Method};

/// Guide chapters, compiled as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/schedule.md")]
    pub mod schedule {}
    #[doc = include_str!("../../../book/src/tails.md")]
    pub mod tails {}
    #[doc = include_str!("../../../book/src/joint-bounds.md")]
    pub mod joint_bounds {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    pub mod oracles {}
    #[doc = include_str!("../../../book/src/performance.md")]
    pub mod performance {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    pub mod optimizer {}
}
