//! Responsiveness quantile φ and z-statistic per customer.
//!
//! φ is estimated as `(#{B > b} + ½·#{B = b}) / K` over K shuffled price
//! signals, where equality means a relative difference of at most 1e-12.
//! No pseudo-count is added, so φ = 1 exactly when every shuffled bill
//! exceeds the actual one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::billing::{actual_bill, direct_gather, BillingPath, DayInteractionMatrix};
use crate::error::{Error, Result};
use crate::model::{ConsumptionSeries, Group, PriceSignal};
use crate::permutation::{DayPermutation, Sampler, SamplerConfig};
use crate::special;

/// Relative tolerance for declaring a shuffled bill equal to the actual bill.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// σ_B at or below this fraction of |μ_B| marks the customer degenerate.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;
/// Largest day count accepted by [`exact_metrics`] (8! = 40,320 outcomes).
pub const MAX_EXACT_DAYS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CustomerMetrics {
    pub customer_id: String,
    pub group: Group,
    pub actual_bill: f64,
    pub mean_random_bill: f64,
    pub sd_random_bill: f64,
    pub phi: f64,
    /// NaN when the customer is degenerate.
    pub z: f64,
    pub samples_used: usize,
    pub ties_count: usize,
    pub degenerate: bool,
}

impl CustomerMetrics {
    /// Strict exceedance fraction #{B > b} / K, without tie credit.
    pub fn strict_exceedance(&self) -> f64 {
        self.phi - 0.5 * self.ties_count as f64 / self.samples_used as f64
    }

    pub fn flag(&self) -> &'static str {
        if self.degenerate {
            "degenerate"
        } else {
            "ok"
        }
    }
}

#[inline]
fn is_tie(bill: f64, actual: f64) -> bool {
    (bill - actual).abs() <= TIE_TOLERANCE * bill.abs().max(actual.abs())
}

/// Streaming exceedance counts and moments of shuffled bills.
#[derive(Debug, Clone, Copy)]
struct BillTally {
    actual: f64,
    n: usize,
    greater: usize,
    ties: usize,
    mean: f64,
    m2: f64,
}

impl BillTally {
    fn new(actual: f64) -> Self {
        BillTally { actual, n: 0, greater: 0, ties: 0, mean: 0.0, m2: 0.0 }
    }

    #[inline]
    fn push(&mut self, bill: f64) {
        if is_tie(bill, self.actual) {
            self.ties += 1;
        } else if bill > self.actual {
            self.greater += 1;
        }
        self.n += 1;
        let delta = bill - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (bill - self.mean);
    }

    fn finish(self, series: &ConsumptionSeries, sample_variance: bool) -> CustomerMetrics {
        let k = self.n as f64;
        let var = if sample_variance { self.m2 / (k - 1.0) } else { self.m2 / k };
        let sd = var.max(0.0).sqrt();
        let phi = (self.greater as f64 + 0.5 * self.ties as f64) / k;
        let degenerate = sd <= DEGENERATE_TOLERANCE * self.mean.abs();
        let z = if degenerate { f64::NAN } else { (self.mean - self.actual) / sd };
        CustomerMetrics {
            customer_id: series.customer_id().to_string(),
            group: series.group(),
            actual_bill: self.actual,
            mean_random_bill: self.mean,
            sd_random_bill: sd,
            phi,
            z,
            samples_used: self.n,
            ties_count: self.ties,
            degenerate,
        }
    }
}

/// Monte Carlo estimate with a fresh sampler built from `config`.
///
/// For many customers build one [`Sampler`] and call
/// [`estimate_metrics_with`], which avoids regenerating a shared pool.
pub fn estimate_metrics(
    series: &ConsumptionSeries,
    signal: &PriceSignal,
    config: &SamplerConfig,
) -> Result<CustomerMetrics> {
    if config.samples < 2 {
        return Err(Error::TooFewSamples { min: 2, got: config.samples });
    }
    let sampler = Sampler::new(*config, signal.grid().num_days())?;
    estimate_metrics_with(series, signal, &sampler)
}

pub fn estimate_metrics_with(
    series: &ConsumptionSeries,
    signal: &PriceSignal,
    sampler: &Sampler,
) -> Result<CustomerMetrics> {
    let config = sampler.config();
    if config.samples < 2 {
        return Err(Error::TooFewSamples { min: 2, got: config.samples });
    }
    let days = signal.grid().num_days();
    if sampler.days() != days {
        return Err(Error::DimensionMismatch { expected: days, got: sampler.days() });
    }
    if series.readings().len() != signal.prices().len() {
        return Err(Error::DimensionMismatch {
            expected: signal.prices().len(),
            got: series.readings().len(),
        });
    }

    let b = actual_bill(series, signal);
    let mut tally = BillTally::new(b);
    let mut stream = sampler.customer_stream(series.customer_id());
    let mut perm = vec![0usize; days];

    match config.billing_path {
        BillingPath::DayMatrix => {
            let m = DayInteractionMatrix::build(series, signal);
            for _ in 0..config.samples {
                stream.fill(&mut perm);
                tally.push(m.gather(&perm));
            }
        }
        BillingPath::Direct => {
            for _ in 0..config.samples {
                stream.fill(&mut perm);
                tally.push(direct_gather(series.readings(), signal, &perm));
            }
        }
    }
    Ok(tally.finish(series, true))
}

/// Rearranges `p` into the next permutation in lexicographic order; returns
/// false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("pivot has a successor");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Exact φ, μ_B, σ_B by enumerating all D! day permutations (population moments).
pub fn exact_metrics(series: &ConsumptionSeries, signal: &PriceSignal) -> Result<CustomerMetrics> {
    let days = signal.grid().num_days();
    if days > MAX_EXACT_DAYS {
        return Err(Error::TooManyDaysForEnumeration { max: MAX_EXACT_DAYS, got: days });
    }
    if days < 2 {
        return Err(Error::TooFewDays(days));
    }
    let b = actual_bill(series, signal);
    let m = DayInteractionMatrix::build(series, signal);
    let mut tally = BillTally::new(b);
    let mut perm: Vec<usize> = (0..days).collect();
    loop {
        tally.push(m.gather(&perm));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(tally.finish(series, false))
}

/// All D! permutations of `days` days, in lexicographic order. Small D only.
pub fn all_permutations(days: usize) -> Result<Vec<DayPermutation>> {
    if days > MAX_EXACT_DAYS {
        return Err(Error::TooManyDaysForEnumeration { max: MAX_EXACT_DAYS, got: days });
    }
    let mut perm: Vec<usize> = (0..days).collect();
    let mut out = Vec::new();
    loop {
        out.push(DayPermutation::from_mapping(perm.clone())?);
        if !next_permutation(&mut perm) {
            return Ok(out);
        }
    }
}

/// Mapping between z and φ under a normal approximation of B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZMapping {
    /// Standard normal CDF Φ(z); matches z standardized by σ_B.
    #[default]
    StandardNormal,
    /// (1/√π)∫_{-∞}^z e^{-x²} dx, i.e. a normal CDF with variance ½.
    HalfVariance,
}

impl fmt::Display for ZMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZMapping::StandardNormal => "standard_normal",
            ZMapping::HalfVariance => "half_variance",
        })
    }
}

impl FromStr for ZMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "standard_normal" | "standard" => Ok(ZMapping::StandardNormal),
            "half_variance" | "printed" => Ok(ZMapping::HalfVariance),
            other => Err(Error::Malformed(format!("unknown z mapping {other:?}"))),
        }
    }
}

/// φ implied by z under the standard normal approximation.
pub fn phi_from_z(z: f64) -> f64 {
    special::normal_cdf(z)
}

pub fn phi_from_z_with(z: f64, mapping: ZMapping) -> f64 {
    match mapping {
        ZMapping::StandardNormal => special::normal_cdf(z),
        ZMapping::HalfVariance => special::half_variance_normal_cdf(z),
    }
}
