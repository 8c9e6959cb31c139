//! Synthetic populations with known responders.
//!
//! Households follow a two-peak diurnal profile scaled by a log-normal
//! household factor, with log-normal day-level and slot-level noise.
//! Responsive treatment households cut consumption in high-price slots by
//! their response strength and move a share of the cut into the adjacent
//! non-high slots of the same day.
//!
//! Price-signal bias is produced by a latent per-day demand index g_d: the
//! population-wide demand on day d is multiplied by exp(bias · g_d), and
//! count-based high-price events go to the days with the largest g_d
//! (low-price events to the smallest). With zero bias, g_d only randomizes
//! event placement.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ConsumptionSeries, Group, PriceSignal, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DaySelection {
    Explicit(Vec<usize>),
    /// Let the generator choose this many days.
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceEvent {
    pub kind: EventKind,
    pub days: DaySelection,
    pub slots: Range<usize>,
    pub price: f64,
}

/// Diurnal load shape in kWh per hour, plus noise scales (log-normal sigmas).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseProfile {
    pub base_load: f64,
    pub morning_peak: f64,
    pub evening_peak: f64,
    pub household_sigma: f64,
    pub day_sigma: f64,
    pub slot_sigma: f64,
}

impl Default for BaseProfile {
    fn default() -> Self {
        BaseProfile {
            base_load: 0.25,
            morning_peak: 0.4,
            evening_peak: 0.8,
            household_sigma: 0.4,
            day_sigma: 0.25,
            slot_sigma: 0.35,
        }
    }
}

impl BaseProfile {
    /// Expected kWh in slot `s` of a day with `spd` slots.
    fn slot_energy(&self, s: usize, spd: usize) -> f64 {
        let hours_per_slot = 24.0 / spd as f64;
        let h = (s as f64 + 0.5) * hours_per_slot;
        let bump = |centre: f64, width: f64| (-(h - centre).powi(2) / (2.0 * width * width)).exp();
        (self.base_load + self.morning_peak * bump(7.5, 1.5) + self.evening_peak * bump(19.0, 2.0))
            * hours_per_slot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub num_treatment: usize,
    pub num_control: usize,
    pub grid: TimeGrid,
    pub responsive_fraction_true: f64,
    /// Mean fractional cut in high-price slots; each responsive household
    /// draws its own strength uniformly in [0.5, 1.5] × this, capped at 1.
    pub response_strength: f64,
    /// Share of the cut energy consumed again in adjacent slots.
    pub recovery_share: f64,
    /// Slots on each side of a high-price block that absorb recovered energy.
    pub recovery_window: usize,
    pub normal_price: f64,
    pub price_events: Vec<PriceEvent>,
    pub base_profile: BaseProfile,
    pub signal_bias_strength: f64,
}

impl ScenarioConfig {
    /// Three-level tariff: high events in the evening peak and low events
    /// at midday, each on a sixth of the days.
    pub fn with_grid(grid: TimeGrid) -> Self {
        let spd = grid.slots_per_day();
        let days = (grid.num_days() / 6).max(1);
        ScenarioConfig {
            num_treatment: 200,
            num_control: 200,
            grid,
            responsive_fraction_true: 0.6,
            response_strength: 0.3,
            recovery_share: 0.5,
            recovery_window: hours_to_slots(2.0, spd).max(1),
            normal_price: 0.14,
            price_events: vec![
                PriceEvent {
                    kind: EventKind::High,
                    days: DaySelection::Count(days),
                    slots: hours_to_slots(17.0, spd)..hours_to_slots(20.0, spd).max(1),
                    price: 0.67,
                },
                PriceEvent {
                    kind: EventKind::Low,
                    days: DaySelection::Count(days),
                    slots: hours_to_slots(11.0, spd)..hours_to_slots(16.0, spd).max(1),
                    price: 0.04,
                },
            ],
            base_profile: BaseProfile::default(),
            signal_bias_strength: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidScenario(m));
        if self.num_treatment == 0 {
            return Err(Error::EmptyTreatment);
        }
        if !(0.0..=1.0).contains(&self.responsive_fraction_true) {
            return invalid(format!(
                "responsive_fraction_true {} outside [0, 1]",
                self.responsive_fraction_true
            ));
        }
        if !(self.response_strength >= 0.0 && self.response_strength.is_finite()) {
            return invalid(format!("response_strength {} must be >= 0", self.response_strength));
        }
        if !(0.0..=1.0).contains(&self.recovery_share) {
            return invalid(format!("recovery_share {} outside [0, 1]", self.recovery_share));
        }
        if !(self.normal_price >= 0.0 && self.normal_price.is_finite()) {
            return invalid(format!("normal_price {} must be >= 0", self.normal_price));
        }
        if !self.signal_bias_strength.is_finite() {
            return invalid("signal_bias_strength must be finite".into());
        }
        let p = &self.base_profile;
        for (name, v) in [
            ("base_load", p.base_load),
            ("morning_peak", p.morning_peak),
            ("evening_peak", p.evening_peak),
            ("household_sigma", p.household_sigma),
            ("day_sigma", p.day_sigma),
            ("slot_sigma", p.slot_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} {v} must be >= 0"));
            }
        }
        let (spd, days) = (self.grid.slots_per_day(), self.grid.num_days());
        for (i, e) in self.price_events.iter().enumerate() {
            if !(e.price >= 0.0 && e.price.is_finite()) {
                return invalid(format!("event {i}: price {} must be >= 0", e.price));
            }
            if e.slots.start >= e.slots.end || e.slots.end > spd {
                return invalid(format!("event {i}: slot range {:?} not within 0..{spd}", e.slots));
            }
            match &e.days {
                DaySelection::Count(n) if *n > days => {
                    return invalid(format!("event {i}: {n} days requested, grid has {days}"));
                }
                DaySelection::Explicit(list) if list.iter().any(|&d| d >= days) => {
                    return invalid(format!("event {i}: day outside 0..{days}"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn hours_to_slots(hours: f64, spd: usize) -> usize {
    ((hours * spd as f64 / 24.0).round() as usize).min(spd)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdLabel {
    pub customer_id: String,
    pub group: Group,
    pub responsive: bool,
    pub response_strength: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub series: Vec<ConsumptionSeries>,
    pub signal: PriceSignal,
    /// Ground truth; never passed to the analysis stages.
    pub labels: Vec<HouseholdLabel>,
}

fn rng_for(label: &[u8], seed: u64, key: &[u8]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(label);
    h.update(seed.to_le_bytes());
    h.update(key);
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn lognormal_unit_mean(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (sigma * z - 0.5 * sigma * sigma).exp()
}

/// Chooses event days and lays the events over a flat normal price.
fn build_signal(config: &ScenarioConfig, demand_index: &[f64]) -> Result<PriceSignal> {
    let grid = config.grid;
    let spd = grid.slots_per_day();
    let mut by_demand: Vec<usize> = (0..grid.num_days()).collect();
    by_demand.sort_by(|&a, &b| demand_index[b].total_cmp(&demand_index[a]).then(a.cmp(&b)));

    let mut assigned: Vec<Option<f64>> = vec![None; grid.total_slots()];
    for (i, e) in config.price_events.iter().enumerate() {
        let days: Vec<usize> = match (&e.days, e.kind) {
            (DaySelection::Explicit(list), _) => list.clone(),
            (DaySelection::Count(n), EventKind::High) => by_demand[..*n].to_vec(),
            (DaySelection::Count(n), EventKind::Low) => by_demand[by_demand.len() - n..].to_vec(),
        };
        for d in days {
            for s in e.slots.clone() {
                let cell = &mut assigned[d * spd + s];
                match cell {
                    Some(p) if *p != e.price => {
                        return Err(Error::InfeasibleEvents(format!(
                            "event {i} sets day {d} slot {s} to {} but another event set {p}",
                            e.price
                        )));
                    }
                    _ => *cell = Some(e.price),
                }
            }
        }
    }
    let prices = assigned.into_iter().map(|p| p.unwrap_or(config.normal_price)).collect();
    let signal = PriceSignal::new(grid, prices)?;
    if signal.is_degenerate() {
        return Err(Error::DegenerateSignal);
    }
    Ok(signal)
}

/// Cuts `strength` of consumption in slots priced above `normal_price` and
/// spreads `recovery_share` of the cut evenly over up to `window` non-high
/// slots either side of each high block, within the same day. Energy with no
/// recovery slot available is dropped.
pub fn apply_response(
    readings: &mut [f64],
    signal: &PriceSignal,
    normal_price: f64,
    strength: f64,
    recovery_share: f64,
    window: usize,
) {
    let spd = signal.grid().slots_per_day();
    let strength = strength.clamp(0.0, 1.0);
    for (d, day) in readings.chunks_exact_mut(spd).enumerate() {
        let prices = signal.day(d);
        let high: Vec<bool> = prices.iter().map(|&p| p > normal_price).collect();
        let mut s = 0;
        while s < spd {
            if !high[s] {
                s += 1;
                continue;
            }
            let start = s;
            while s < spd && high[s] {
                s += 1;
            }
            let block = start..s;
            let mut removed = 0.0;
            for v in &mut day[block.clone()] {
                let cut = *v * strength;
                *v -= cut;
                removed += cut;
            }
            let before = start.saturating_sub(window)..start;
            let after = block.end..(block.end + window).min(spd);
            let targets: Vec<usize> = before.chain(after).filter(|&t| !high[t]).collect();
            if !targets.is_empty() {
                let each = removed * recovery_share / targets.len() as f64;
                for t in targets {
                    day[t] += each;
                }
            }
        }
    }
}

fn household(
    config: &ScenarioConfig,
    signal: &PriceSignal,
    day_multiplier: &[f64],
    seed: u64,
    id: &str,
    responsive: bool,
) -> (Vec<f64>, f64) {
    let grid = config.grid;
    let spd = grid.slots_per_day();
    let p = &config.base_profile;
    let mut rng = rng_for(b"dtou/synth-household/v1\0", seed, id.as_bytes());
    let scale = lognormal_unit_mean(&mut rng, p.household_sigma);
    // drawn for every household so the counterfactual does not depend on it
    let spread: f64 = rng.random_range(0.5..1.5);
    let shape: Vec<f64> = (0..spd).map(|s| p.slot_energy(s, spd)).collect();

    let mut readings = Vec::with_capacity(grid.total_slots());
    for &m in day_multiplier {
        let day_factor = lognormal_unit_mean(&mut rng, p.day_sigma) * m;
        for &e in &shape {
            readings.push(scale * day_factor * e * lognormal_unit_mean(&mut rng, p.slot_sigma));
        }
    }

    let strength = if responsive { (config.response_strength * spread).min(1.0) } else { 0.0 };
    if strength > 0.0 {
        apply_response(
            &mut readings,
            signal,
            config.normal_price,
            strength,
            config.recovery_share,
            config.recovery_window,
        );
    }
    (readings, strength)
}

/// Deterministic in `(config, seed)`.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let grid = config.grid;
    let mut rng = rng_for(b"dtou/synth-scenario/v1\0", seed, &[]);
    let demand_index: Vec<f64> = (0..grid.num_days()).map(|_| rng.sample(StandardNormal)).collect();
    let signal = build_signal(config, &demand_index)?;
    let day_multiplier: Vec<f64> =
        demand_index.iter().map(|g| (config.signal_bias_strength * g).exp()).collect();

    let n_resp = (config.responsive_fraction_true * config.num_treatment as f64).round() as usize;
    let mut order: Vec<usize> = (0..config.num_treatment).collect();
    order.shuffle(&mut rng);
    let mut is_responsive = vec![false; config.num_treatment];
    for &i in &order[..n_resp] {
        is_responsive[i] = true;
    }

    let mut series = Vec::with_capacity(config.num_treatment + config.num_control);
    let mut labels = Vec::with_capacity(series.capacity());
    let members = (0..config.num_treatment)
        .map(|i| (format!("T{:05}", i + 1), Group::Treatment, is_responsive[i]))
        .chain((0..config.num_control).map(|i| (format!("C{:05}", i + 1), Group::Control, false)));
    for (id, group, responsive) in members {
        let (readings, strength) = household(config, &signal, &day_multiplier, seed, &id, responsive);
        labels.push(HouseholdLabel {
            customer_id: id.clone(),
            group,
            responsive,
            response_strength: strength,
        });
        series.push(ConsumptionSeries::new(id, group, readings));
    }
    Ok(Scenario { series, signal, labels })
}

/// Flat key-value scenario description. All keys are optional.
///
/// | key | meaning | default |
/// |-----|---------|---------|
/// | `num_treatment`, `num_control` | group sizes | 200, 200 |
/// | `slots_per_day`, `num_days` | grid | 48, 90 |
/// | `responsive_fraction` | share of treatment households that respond | 0.6 |
/// | `response_strength` | mean fractional cut in high-price slots | 0.3 |
/// | `recovery_share` | share of the cut consumed in adjacent slots | 0.5 |
/// | `recovery_window_hours` | recovery window either side of an event | 2 |
/// | `signal_bias_strength` | demand/price-event coupling | 0 |
/// | `normal_price` | price outside events | 0.14 |
/// | `high_price`, `high_event_days`, `high_event_start_hour`, `high_event_end_hour` | high events | 0.67, days/6, 17, 20 |
/// | `low_price`, `low_event_days`, `low_event_start_hour`, `low_event_end_hour` | low events | 0.04, days/6, 11, 16 |
/// | `base_load`, `morning_peak`, `evening_peak` | load shape, kWh per hour | 0.25, 0.4, 0.8 |
/// | `household_sigma`, `day_sigma`, `slot_sigma` | log-normal noise | 0.4, 0.25, 0.35 |
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_treatment: Option<usize>,
    pub num_control: Option<usize>,
    pub slots_per_day: Option<usize>,
    pub num_days: Option<usize>,
    pub responsive_fraction: Option<f64>,
    pub response_strength: Option<f64>,
    pub recovery_share: Option<f64>,
    pub recovery_window_hours: Option<f64>,
    pub signal_bias_strength: Option<f64>,
    pub normal_price: Option<f64>,
    pub high_price: Option<f64>,
    pub high_event_days: Option<usize>,
    pub high_event_start_hour: Option<f64>,
    pub high_event_end_hour: Option<f64>,
    pub low_price: Option<f64>,
    pub low_event_days: Option<usize>,
    pub low_event_start_hour: Option<f64>,
    pub low_event_end_hour: Option<f64>,
    pub base_load: Option<f64>,
    pub morning_peak: Option<f64>,
    pub evening_peak: Option<f64>,
    pub household_sigma: Option<f64>,
    pub day_sigma: Option<f64>,
    pub slot_sigma: Option<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    pub fn into_config(self) -> Result<ScenarioConfig> {
        let grid = TimeGrid::new(self.slots_per_day.unwrap_or(48), self.num_days.unwrap_or(90))?;
        let spd = grid.slots_per_day();
        let mut c = ScenarioConfig::with_grid(grid);
        let default_days = (grid.num_days() / 6).max(1);
        let hours = |h: Option<f64>, default: f64| -> Result<usize> {
            let h = h.unwrap_or(default);
            if !(0.0..=24.0).contains(&h) {
                return Err(Error::InvalidScenario(format!("hour {h} outside [0, 24]")));
            }
            Ok(hours_to_slots(h, spd))
        };
        c.num_treatment = self.num_treatment.unwrap_or(c.num_treatment);
        c.num_control = self.num_control.unwrap_or(c.num_control);
        c.responsive_fraction_true = self.responsive_fraction.unwrap_or(c.responsive_fraction_true);
        c.response_strength = self.response_strength.unwrap_or(c.response_strength);
        c.recovery_share = self.recovery_share.unwrap_or(c.recovery_share);
        if let Some(h) = self.recovery_window_hours {
            c.recovery_window = hours(Some(h), 2.0)?;
        }
        c.signal_bias_strength = self.signal_bias_strength.unwrap_or(c.signal_bias_strength);
        c.normal_price = self.normal_price.unwrap_or(c.normal_price);
        c.price_events = vec![
            PriceEvent {
                kind: EventKind::High,
                days: DaySelection::Count(self.high_event_days.unwrap_or(default_days)),
                slots: hours(self.high_event_start_hour, 17.0)?..hours(self.high_event_end_hour, 20.0)?,
                price: self.high_price.unwrap_or(0.67),
            },
            PriceEvent {
                kind: EventKind::Low,
                days: DaySelection::Count(self.low_event_days.unwrap_or(default_days)),
                slots: hours(self.low_event_start_hour, 11.0)?..hours(self.low_event_end_hour, 16.0)?,
                price: self.low_price.unwrap_or(0.04),
            },
        ];
        let p = &mut c.base_profile;
        p.base_load = self.base_load.unwrap_or(p.base_load);
        p.morning_peak = self.morning_peak.unwrap_or(p.morning_peak);
        p.evening_peak = self.evening_peak.unwrap_or(p.evening_peak);
        p.household_sigma = self.household_sigma.unwrap_or(p.household_sigma);
        p.day_sigma = self.day_sigma.unwrap_or(p.day_sigma);
        p.slot_sigma = self.slot_sigma.unwrap_or(p.slot_sigma);
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_dataset;

    fn small(grid: TimeGrid) -> ScenarioConfig {
        ScenarioConfig { num_treatment: 20, num_control: 10, ..ScenarioConfig::with_grid(grid) }
    }

    #[test]
    fn generated_data_passes_validation() {
        let grid = TimeGrid::new(48, 30).unwrap();
        let s = generate_scenario(&small(grid), 1).unwrap();
        assert_eq!(s.series.len(), 30);
        let report = validate_dataset(&s.series, &s.signal, &grid).unwrap();
        assert!(report.all_passed());
        assert_eq!((report.treatment, report.control), (20, 10));
        assert_eq!(s.labels.iter().filter(|l| l.responsive).count(), 12);
        assert!(s.labels.iter().filter(|l| l.group == Group::Control).all(|l| !l.responsive));
    }

    #[test]
    fn deterministic_in_seed() {
        let grid = TimeGrid::new(24, 20).unwrap();
        let a = generate_scenario(&small(grid), 9).unwrap();
        let b = generate_scenario(&small(grid), 9).unwrap();
        let c = generate_scenario(&small(grid), 10).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.signal, b.signal);
        assert_eq!(a.labels, b.labels);
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn pure_load_shifting_conserves_energy() {
        let grid = TimeGrid::new(48, 30).unwrap();
        let shifting = ScenarioConfig {
            response_strength: 0.5,
            recovery_share: 1.0,
            responsive_fraction_true: 1.0,
            ..small(grid)
        };
        let counterfactual = ScenarioConfig { response_strength: 0.0, ..shifting.clone() };
        let a = generate_scenario(&shifting, 3).unwrap();
        let b = generate_scenario(&counterfactual, 3).unwrap();
        assert_eq!(a.signal, b.signal);
        for (x, y) in a.series.iter().zip(&b.series) {
            let (ex, ey) = (x.total_energy(), y.total_energy());
            assert!((ex - ey).abs() <= 1e-9 * ey, "{} {ex} {ey}", x.customer_id());
        }
        // the responders really did move energy
        assert_ne!(a.series[0].readings(), b.series[0].readings());
    }

    #[test]
    fn response_cuts_high_slots() {
        let grid = TimeGrid::new(4, 2).unwrap();
        let signal = PriceSignal::new(grid, vec![1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let mut r = vec![1.0; 8];
        apply_response(&mut r, &signal, 1.0, 0.5, 1.0, 1);
        assert_eq!(r, vec![1.0, 1.25, 0.5, 1.25, 1.0, 1.0, 1.0, 1.0]);
        let mut r = vec![1.0; 8];
        apply_response(&mut r, &signal, 1.0, 0.5, 0.0, 1);
        assert_eq!(r[2], 0.5);
        assert_eq!(r.iter().sum::<f64>(), 7.5);
    }

    #[test]
    fn invalid_configs() {
        let grid = TimeGrid::new(48, 30).unwrap();
        let empty = ScenarioConfig { num_treatment: 0, ..small(grid) };
        assert_eq!(generate_scenario(&empty, 0).unwrap_err().code(), "empty_treatment");
        let bad_frac = ScenarioConfig { responsive_fraction_true: 1.5, ..small(grid) };
        assert!(generate_scenario(&bad_frac, 0).is_err());

        let mut clash = small(grid);
        clash.price_events = vec![
            PriceEvent {
                kind: EventKind::High,
                days: DaySelection::Explicit(vec![3]),
                slots: 30..40,
                price: 0.6,
            },
            PriceEvent {
                kind: EventKind::Low,
                days: DaySelection::Explicit(vec![3, 4]),
                slots: 35..45,
                price: 0.05,
            },
        ];
        assert!(matches!(generate_scenario(&clash, 0), Err(Error::InfeasibleEvents(_))));

        let mut no_events = small(grid);
        no_events.price_events.clear();
        assert_eq!(generate_scenario(&no_events, 0).unwrap_err(), Error::DegenerateSignal);

        let mut out_of_grid = small(grid);
        out_of_grid.price_events[0].days = DaySelection::Explicit(vec![30]);
        assert!(generate_scenario(&out_of_grid, 0).is_err());
    }

    #[test]
    fn bias_places_high_events_on_high_demand_days() {
        let grid = TimeGrid::new(48, 60).unwrap();
        let cfg =
            ScenarioConfig { num_treatment: 1, num_control: 40, signal_bias_strength: 0.5, ..small(grid) };
        let s = generate_scenario(&cfg, 2).unwrap();
        let high_days: Vec<usize> =
            (0..60).filter(|&d| s.signal.day(d).iter().any(|&p| p > cfg.normal_price)).collect();
        let daily = |d: usize| -> f64 {
            s.series.iter().map(|x| x.readings()[d * 48..(d + 1) * 48].iter().sum::<f64>()).sum()
        };
        let mean_high = high_days.iter().map(|&d| daily(d)).sum::<f64>() / high_days.len() as f64;
        let mean_all = (0..60).map(daily).sum::<f64>() / 60.0;
        assert!(mean_high > 1.2 * mean_all, "{mean_high} vs {mean_all}");
    }

    #[test]
    fn scenario_file_round_trip() {
        let f = ScenarioFile::parse(
            "num_treatment = 50\nnum_control = 25\nnum_days = 36\nresponse_strength = 0.4\nhigh_event_days = 5\n",
        )
        .unwrap();
        let c = f.into_config().unwrap();
        assert_eq!((c.num_treatment, c.num_control, c.grid.num_days()), (50, 25, 36));
        assert_eq!(c.price_events[0].days, DaySelection::Count(5));
        assert_eq!(c.price_events[0].slots, 34..40);
        assert_eq!(c.price_events[1].days, DaySelection::Count(6));
        assert!(ScenarioFile::parse("bogus_key = 1").is_err());
        assert!(ScenarioFile::parse("num_treatment = 0").unwrap().into_config().is_err());
    }
}
