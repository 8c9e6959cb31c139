//! Actual and day-permuted bills.
//!
//! A permuted bill only depends on which price day is paired with which
//! consumption day, so the per-customer D×D matrix
//! `m[j, d] = Σ_s price(day j, slot s) · consumption(day d, slot s)`
//! turns each Monte Carlo sample into an O(D) gather.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConsumptionSeries, PriceSignal};
use crate::permutation::DayPermutation;

/// How permuted bills are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BillingPath {
    /// Precompute the day-interaction matrix (O(D²) memory, O(D) per sample).
    #[default]
    DayMatrix,
    /// Evaluate at slot level (O(1) extra memory, O(T) per sample).
    Direct,
}

impl fmt::Display for BillingPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BillingPath::DayMatrix => "day_matrix",
            BillingPath::Direct => "direct",
        })
    }
}

impl FromStr for BillingPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "day_matrix" | "matrix" => Ok(BillingPath::DayMatrix),
            "direct" => Ok(BillingPath::Direct),
            other => Err(Error::Malformed(format!("unknown billing path {other:?}"))),
        }
    }
}

/// Inner product of prices and readings.
pub fn actual_bill(series: &ConsumptionSeries, signal: &PriceSignal) -> f64 {
    debug_assert_eq!(series.readings().len(), signal.prices().len());
    signal.prices().iter().zip(series.readings()).map(|(p, c)| p * c).sum()
}

/// Per-customer pairing matrix between price days and consumption days.
#[derive(Debug, Clone, PartialEq)]
pub struct DayInteractionMatrix {
    days: usize,
    // column-major: entry (j, d) lives at d * days + j
    by_consumption_day: Vec<f64>,
}

impl DayInteractionMatrix {
    pub fn build(series: &ConsumptionSeries, signal: &PriceSignal) -> Self {
        let grid = signal.grid();
        let days = grid.num_days();
        let spd = grid.slots_per_day();
        let readings = series.readings();
        debug_assert_eq!(readings.len(), grid.total_slots());

        let mut by_consumption_day = vec![0.0; days * days];
        for d in 0..days {
            let cons = &readings[d * spd..(d + 1) * spd];
            let col = &mut by_consumption_day[d * days..(d + 1) * days];
            for (j, out) in col.iter_mut().enumerate() {
                *out = signal.day(j).iter().zip(cons).map(|(p, c)| p * c).sum();
            }
        }
        DayInteractionMatrix { days, by_consumption_day }
    }

    pub fn days(&self) -> usize {
        self.days
    }

    /// Entry `m[price_day, consumption_day]`.
    pub fn get(&self, price_day: usize, consumption_day: usize) -> f64 {
        self.by_consumption_day[consumption_day * self.days + price_day]
    }

    /// Σ_d m[d, d]: the actual bill.
    pub fn trace(&self) -> f64 {
        (0..self.days).map(|d| self.get(d, d)).sum()
    }

    /// Σ_d m[perm(d), d] without checking the mapping.
    #[inline]
    pub(crate) fn gather(&self, mapping: &[usize]) -> f64 {
        let mut total = 0.0;
        for (row, &j) in self.by_consumption_day.chunks_exact(self.days).zip(mapping) {
            total += row[j];
        }
        total
    }
}

/// Bill under price days reassigned by `perm`: Σ_d m[perm(d), d].
pub fn permuted_bill(m: &DayInteractionMatrix, perm: &DayPermutation) -> Result<f64> {
    if perm.len() != m.days() {
        return Err(Error::DimensionMismatch { expected: m.days(), got: perm.len() });
    }
    Ok(m.gather(perm.mapping()))
}

/// Slot-level evaluation of the same quantity, for grids where D² storage is
/// too large.
pub fn direct_permuted_bill(
    series: &ConsumptionSeries,
    signal: &PriceSignal,
    perm: &DayPermutation,
) -> Result<f64> {
    let grid = signal.grid();
    if perm.len() != grid.num_days() {
        return Err(Error::DimensionMismatch { expected: grid.num_days(), got: perm.len() });
    }
    Ok(direct_gather(series.readings(), signal, perm.mapping()))
}

#[inline]
pub(crate) fn direct_gather(readings: &[f64], signal: &PriceSignal, mapping: &[usize]) -> f64 {
    let spd = signal.grid().slots_per_day();
    let mut total = 0.0;
    for (cons, &j) in readings.chunks_exact(spd).zip(mapping) {
        let day_total: f64 = signal.day(j).iter().zip(cons).map(|(p, c)| p * c).sum();
        total += day_total;
    }
    total
}
