//! Time grid, consumption series, price signal and dataset validation.
//!
//! Slot `t` (0-based) belongs to day `t / slots_per_day`. Inputs must cover
//! whole days; there is no timestamp arithmetic here.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slot/day indexing shared by every series and the price signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TimeGrid {
    slots_per_day: usize,
    num_days: usize,
}

impl TimeGrid {
    pub fn new(slots_per_day: usize, num_days: usize) -> Result<Self> {
        if slots_per_day == 0 {
            return Err(Error::InvalidGrid("slots_per_day must be at least 1".into()));
        }
        if num_days < 2 {
            return Err(Error::InvalidGrid(format!("at least two days are required, got {num_days}")));
        }
        Ok(TimeGrid { slots_per_day, num_days })
    }

    /// Builds a grid from a total slot count, rejecting partial trailing days.
    pub fn from_total(slots_per_day: usize, total_slots: usize) -> Result<Self> {
        if slots_per_day == 0 {
            return Err(Error::InvalidGrid("slots_per_day must be at least 1".into()));
        }
        if !total_slots.is_multiple_of(slots_per_day) {
            return Err(Error::InvalidGrid(format!(
                "{total_slots} slots is not a whole number of {slots_per_day}-slot days"
            )));
        }
        TimeGrid::new(slots_per_day, total_slots / slots_per_day)
    }

    pub fn slots_per_day(&self) -> usize {
        self.slots_per_day
    }

    pub fn num_days(&self) -> usize {
        self.num_days
    }

    pub fn total_slots(&self) -> usize {
        self.slots_per_day * self.num_days
    }

    pub fn day_of(&self, slot: usize) -> usize {
        slot / self.slots_per_day
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Treatment,
    Control,
}

impl Group {
    pub fn as_str(&self) -> &'static str {
        match self {
            Group::Treatment => "treatment",
            Group::Control => "control",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "treatment" => Ok(Group::Treatment),
            "control" => Ok(Group::Control),
            other => Err(Error::Malformed(format!("unknown group {other:?}"))),
        }
    }
}

/// Per-customer energy readings (kWh per slot).
///
/// Construction does not check the readings; [`validate_dataset`] does.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionSeries {
    customer_id: String,
    group: Group,
    readings: Vec<f64>,
}

impl ConsumptionSeries {
    pub fn new(customer_id: impl Into<String>, group: Group, readings: Vec<f64>) -> Self {
        ConsumptionSeries { customer_id: customer_id.into(), group, readings }
    }

    pub fn customer_id(&self) -> &str {
        &self.customer_id
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn readings(&self) -> &[f64] {
        &self.readings
    }

    pub fn total_energy(&self) -> f64 {
        self.readings.iter().sum()
    }

    /// Returns a copy with every reading multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        ConsumptionSeries {
            customer_id: self.customer_id.clone(),
            group: self.group,
            readings: self.readings.iter().map(|r| r * k).collect(),
        }
    }
}

/// Tariff prices on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSignal {
    grid: TimeGrid,
    prices: Vec<f64>,
}

impl PriceSignal {
    /// Checks length and that every price is finite and non-negative.
    /// Degeneracy (all days identical) is reported by [`validate_dataset`].
    pub fn new(grid: TimeGrid, prices: Vec<f64>) -> Result<Self> {
        if prices.len() != grid.total_slots() {
            return Err(Error::SignalLength { expected: grid.total_slots(), got: prices.len() });
        }
        if let Some((slot, &value)) = prices.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPrice { slot, value });
        }
        Ok(PriceSignal { grid, prices })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Price vector of day `d`.
    pub fn day(&self, d: usize) -> &[f64] {
        let s = self.grid.slots_per_day();
        &self.prices[d * s..(d + 1) * s]
    }

    /// Number of distinct day-level price vectors (exact comparison).
    pub fn distinct_days(&self) -> usize {
        let mut days: Vec<&[f64]> = (0..self.grid.num_days()).map(|d| self.day(d)).collect();
        days.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        days.dedup();
        days.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.distinct_days() < 2
    }

    /// Returns a copy with `shift` added to every price.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        PriceSignal::new(self.grid, self.prices.iter().map(|p| p + shift).collect())
    }
}

/// Why a series was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    LengthMismatch,
    NegativeReading,
    NonFiniteReading,
    MissingReading,
    DuplicateReading,
    SlotOutOfRange,
    MissingGroup,
    DuplicateCustomer,
}

impl FailureReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureReason::LengthMismatch => "length_mismatch",
            FailureReason::NegativeReading => "negative_reading",
            FailureReason::NonFiniteReading => "non_finite_reading",
            FailureReason::MissingReading => "missing_reading",
            FailureReason::DuplicateReading => "duplicate_reading",
            FailureReason::SlotOutOfRange => "slot_out_of_range",
            FailureReason::MissingGroup => "missing_group",
            FailureReason::DuplicateCustomer => "duplicate_customer",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeriesOutcome {
    pub customer_id: String,
    pub group: Option<Group>,
    pub failure: Option<FailureReason>,
}

impl SeriesOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Per-series verdicts, sorted by customer id, plus passing group sizes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub outcomes: Vec<SeriesOutcome>,
    pub treatment: usize,
    pub control: usize,
    pub failed: usize,
}

impl ValidationReport {
    fn from_outcomes(mut outcomes: Vec<SeriesOutcome>) -> Self {
        outcomes.sort_by(|a, b| {
            a.customer_id.cmp(&b.customer_id).then(a.failure.cmp(&b.failure)).then(a.group.cmp(&b.group))
        });
        let count = |g| outcomes.iter().filter(|o| o.passed() && o.group == Some(g)).count();
        ValidationReport {
            treatment: count(Group::Treatment),
            control: count(Group::Control),
            failed: outcomes.iter().filter(|o| !o.passed()).count(),
            outcomes,
        }
    }

    /// Folds in failures detected upstream (e.g. during CSV ingestion).
    /// A customer already present keeps the first failure recorded for it.
    pub fn merge_failures(self, extra: Vec<SeriesOutcome>) -> Self {
        let mut by_id: BTreeMap<String, SeriesOutcome> = BTreeMap::new();
        for o in extra.into_iter().chain(self.outcomes) {
            match by_id.get_mut(&o.customer_id) {
                Some(existing) if existing.failure.is_none() => *existing = o,
                Some(_) => {}
                None => {
                    by_id.insert(o.customer_id.clone(), o);
                }
            }
        }
        ValidationReport::from_outcomes(by_id.into_values().collect())
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &SeriesOutcome> {
        self.outcomes.iter().filter(|o| !o.passed())
    }

    /// Keeps only series whose id passed validation.
    pub fn retain_passing(&self, series: Vec<ConsumptionSeries>) -> Vec<ConsumptionSeries> {
        let failed: std::collections::HashSet<&str> =
            self.failures().map(|o| o.customer_id.as_str()).collect();
        series.into_iter().filter(|s| !failed.contains(s.customer_id())).collect()
    }
}

fn check_series(series: &ConsumptionSeries, grid: &TimeGrid) -> Option<FailureReason> {
    if series.readings.len() != grid.total_slots() {
        return Some(FailureReason::LengthMismatch);
    }
    if series.readings.iter().any(|r| !r.is_finite()) {
        return Some(FailureReason::NonFiniteReading);
    }
    if series.readings.iter().any(|r| *r < 0.0) {
        return Some(FailureReason::NegativeReading);
    }
    None
}

/// Checks every series against the grid and the signal against degeneracy.
///
/// Per-series problems are reported, not raised; only an empty collection or
/// a signal that cannot support any non-trivial permutation is an error.
pub fn validate_dataset(
    series: &[ConsumptionSeries],
    signal: &PriceSignal,
    grid: &TimeGrid,
) -> Result<ValidationReport> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    if signal.grid() != *grid {
        return Err(Error::SignalLength { expected: grid.total_slots(), got: signal.prices().len() });
    }
    if signal.is_degenerate() {
        return Err(Error::DegenerateSignal);
    }

    let mut id_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in series {
        *id_counts.entry(s.customer_id()).or_default() += 1;
    }

    let outcomes = series
        .iter()
        .map(|s| {
            let failure = if id_counts[s.customer_id()] > 1 {
                Some(FailureReason::DuplicateCustomer)
            } else {
                check_series(s, grid)
            };
            SeriesOutcome { customer_id: s.customer_id.clone(), group: Some(s.group), failure }
        })
        .collect();
    Ok(ValidationReport::from_outcomes(outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(2, 3).unwrap()
    }

    fn signal() -> PriceSignal {
        PriceSignal::new(grid(), vec![1.0, 2.0, 1.0, 1.0, 3.0, 1.0]).unwrap()
    }

    #[test]
    fn grid_rejects_single_day_and_partial_days() {
        assert!(TimeGrid::new(48, 1).is_err());
        assert!(TimeGrid::new(0, 5).is_err());
        assert!(TimeGrid::from_total(48, 48 * 3 + 1).is_err());
        let g = TimeGrid::from_total(48, 48 * 3).unwrap();
        assert_eq!(g.num_days(), 3);
        assert_eq!(g.total_slots(), 144);
        assert_eq!(g.day_of(47), 0);
        assert_eq!(g.day_of(48), 1);
    }

    #[test]
    fn price_signal_checks_values() {
        let g = grid();
        assert!(matches!(
            PriceSignal::new(g, vec![1.0; 5]),
            Err(Error::SignalLength { expected: 6, got: 5 })
        ));
        assert!(matches!(
            PriceSignal::new(g, vec![1.0, -1.0, 1.0, 1.0, 1.0, 1.0]),
            Err(Error::InvalidPrice { slot: 1, .. })
        ));
        assert!(PriceSignal::new(g, vec![1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert_eq!(signal().distinct_days(), 3);
    }

    #[test]
    fn well_formed_input_passes_with_group_counts() {
        let g = grid();
        let series = vec![
            ConsumptionSeries::new("a", Group::Treatment, vec![1.0; 6]),
            ConsumptionSeries::new("b", Group::Treatment, vec![0.5; 6]),
            ConsumptionSeries::new("c", Group::Control, vec![0.0; 6]),
        ];
        let report = validate_dataset(&series, &signal(), &g).unwrap();
        assert!(report.all_passed());
        assert_eq!((report.treatment, report.control), (2, 1));
    }

    #[test]
    fn negative_reading_fails_that_series_only() {
        let g = grid();
        let series = vec![
            ConsumptionSeries::new("ok", Group::Treatment, vec![1.0; 6]),
            ConsumptionSeries::new("neg", Group::Control, vec![1.0, -0.1, 1.0, 1.0, 1.0, 1.0]),
            ConsumptionSeries::new("short", Group::Control, vec![1.0; 4]),
            ConsumptionSeries::new("nan", Group::Control, vec![1.0, 1.0, f64::INFINITY, 1.0, 1.0, 1.0]),
        ];
        let report = validate_dataset(&series, &signal(), &g).unwrap();
        let reason = |id: &str| report.outcomes.iter().find(|o| o.customer_id == id).unwrap().failure;
        assert_eq!(reason("ok"), None);
        assert_eq!(reason("neg"), Some(FailureReason::NegativeReading));
        assert_eq!(reason("short"), Some(FailureReason::LengthMismatch));
        assert_eq!(reason("nan"), Some(FailureReason::NonFiniteReading));
        assert_eq!((report.treatment, report.control, report.failed), (1, 0, 3));
        let kept = report.retain_passing(series);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn degenerate_signal_is_a_global_failure() {
        let g = TimeGrid::new(48, 365).unwrap();
        let day: Vec<f64> = (0..48).map(|s| if (34..40).contains(&s) { 0.6 } else { 0.1 }).collect();
        let prices: Vec<f64> = (0..365).flat_map(|_| day.iter().copied()).collect();
        let signal = PriceSignal::new(g, prices).unwrap();
        let series = vec![ConsumptionSeries::new("a", Group::Control, vec![1.0; g.total_slots()])];
        assert_eq!(validate_dataset(&series, &signal, &g), Err(Error::DegenerateSignal));
    }

    #[test]
    fn empty_collection_is_an_error() {
        assert_eq!(validate_dataset(&[], &signal(), &grid()), Err(Error::EmptyInput));
    }

    #[test]
    fn duplicate_ids_fail_regardless_of_order() {
        let g = grid();
        let a = ConsumptionSeries::new("x", Group::Treatment, vec![1.0; 6]);
        let b = ConsumptionSeries::new("x", Group::Control, vec![2.0; 6]);
        let r1 = validate_dataset(&[a.clone(), b.clone()], &signal(), &g).unwrap();
        let r2 = validate_dataset(&[b, a], &signal(), &g).unwrap();
        assert_eq!(r1.failed, 2);
        assert_eq!(r1.treatment + r1.control, 0);
        assert_eq!(r1.failed, r2.failed);
    }

    #[test]
    fn merged_ingest_failures_override_passes() {
        let g = grid();
        let series = vec![ConsumptionSeries::new("a", Group::Treatment, vec![1.0; 6])];
        let report = validate_dataset(&series, &signal(), &g).unwrap().merge_failures(vec![
            SeriesOutcome {
                customer_id: "a".into(),
                group: Some(Group::Treatment),
                failure: Some(FailureReason::DuplicateReading),
            },
            SeriesOutcome {
                customer_id: "z".into(),
                group: None,
                failure: Some(FailureReason::MissingGroup),
            },
        ]);
        assert_eq!(report.failed, 2);
        assert_eq!(report.treatment, 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_series() -> impl Strategy<Value = Vec<ConsumptionSeries>> {
            prop::collection::vec((0u8..20, any::<bool>(), prop::collection::vec(-1.0f64..5.0, 5..8)), 1..12)
                .prop_map(|v| {
                    v.into_iter()
                        .map(|(id, t, r)| {
                            let g = if t { Group::Treatment } else { Group::Control };
                            ConsumptionSeries::new(format!("c{id}"), g, r)
                        })
                        .collect()
                })
        }

        proptest! {
            #[test]
            fn validation_is_order_independent_and_idempotent(series in arb_series(), rot in 0usize..12) {
                let g = grid();
                let sig = signal();
                let r1 = validate_dataset(&series, &sig, &g).unwrap();
                let mut rotated = series.clone();
                let k = rot % rotated.len();
                rotated.rotate_left(k);
                let r2 = validate_dataset(&rotated, &sig, &g).unwrap();
                prop_assert_eq!(&r1, &r2);

                let kept = r1.retain_passing(series);
                if !kept.is_empty() {
                    let again = validate_dataset(&kept, &sig, &g).unwrap();
                    prop_assert!(again.all_passed());
                    prop_assert_eq!(again.treatment, r1.treatment);
                    prop_assert_eq!(again.control, r1.control);
                }
            }
        }
    }
}
