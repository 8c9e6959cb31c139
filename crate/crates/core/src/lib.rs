//! Baseline-free analysis of customer responsiveness to dynamic time-of-use
//! prices.
//!
//! Each customer's actual bill is compared with bills computed under
//! day-shuffled copies of the price signal. The fraction of shuffled bills
//! exceeding the actual one, φ, measures how well consumption lines up with
//! the tariff. Population-level steps then rank customers, correct φ for
//! price-signal bias using a control group's empirical CDF (giving ψ), and
//! split ψ into a uniform unresponsive background plus a Beta-distributed
//! responsive component.

pub mod billing;
pub mod error;
pub mod io;
pub mod metrics;
pub mod mixture;
pub mod model;
pub mod optimize;
pub mod permutation;
pub mod pipeline;
pub mod population;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
