//! Stage drivers: load and validate inputs, compute per-customer metrics,
//! run the population analysis, and score results against known labels.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{self, ClassificationRow, ExcludedRow, LabelRow, MixtureReport, RankRow};
use crate::metrics::{estimate_metrics_with, CustomerMetrics};
use crate::mixture::{fit_mixture_with, responsiveness_probability, FitMethod, MixtureFit, DEFAULT_BINS};
use crate::model::{validate_dataset, ConsumptionSeries, Group, PriceSignal, ValidationReport};
use crate::permutation::{Sampler, SamplerConfig};
use crate::population::{
    bias_correct, build_control_cdf, classify_at_confidence, rank_customers, spearman_rank_correlation,
    ClassificationSummary, CorrectedScores, Histogram, RankTable,
};

pub const DEFAULT_CONFIDENCE_LEVEL: f64 = 0.95;

/// Validated inputs ready for the metrics stage.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub signal: PriceSignal,
    /// Only the series that passed validation, sorted by customer id.
    pub series: Vec<ConsumptionSeries>,
    pub report: ValidationReport,
}

/// Reads the three ingestion files and validates them together.
pub fn load_dataset(
    consumption: &Path,
    prices: &Path,
    groups: &Path,
    slots_per_day: usize,
) -> Result<Dataset> {
    let signal = io::read_prices(io::open_input(prices)?, slots_per_day)?;
    if signal.is_degenerate() {
        return Err(Error::DegenerateSignal);
    }
    let groups = io::read_groups(io::open_input(groups)?)?;
    let ingested = io::read_consumption(io::open_input(consumption)?, &signal.grid(), &groups)?;
    if ingested.series.is_empty() && ingested.failures.is_empty() {
        return Err(Error::EmptyInput);
    }
    let report = if ingested.series.is_empty() {
        ValidationReport::default().merge_failures(ingested.failures)
    } else {
        validate_dataset(&ingested.series, &signal, &signal.grid())?.merge_failures(ingested.failures)
    };
    let series = report.retain_passing(ingested.series);
    Ok(Dataset { signal, series, report })
}

/// Metrics for every series, in input order, using at most `threads`
/// worker threads (0 lets the runtime decide). Results do not depend on the
/// thread count.
pub fn compute_metrics(
    series: &[ConsumptionSeries],
    signal: &PriceSignal,
    config: &SamplerConfig,
    threads: usize,
) -> Result<Vec<CustomerMetrics>> {
    compute_metrics_with_progress(series, signal, config, threads, &|_, _| {})
}

/// As [`compute_metrics`], calling `progress(done, total)` after each customer.
pub fn compute_metrics_with_progress(
    series: &[ConsumptionSeries],
    signal: &PriceSignal,
    config: &SamplerConfig,
    threads: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<CustomerMetrics>> {
    config.validate()?;
    let sampler = Sampler::new(*config, signal.grid().num_days())?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Io(e.to_string()))?;
    let done = AtomicUsize::new(0);
    let total = series.len();
    pool.install(|| {
        series
            .par_iter()
            .map(|s| {
                let m = estimate_metrics_with(s, signal, &sampler);
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                m
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub confidence_level: f64,
    pub bins: usize,
    pub fit_method: FitMethod,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            confidence_level: DEFAULT_CONFIDENCE_LEVEL,
            bins: DEFAULT_BINS,
            fit_method: FitMethod::default(),
        }
    }
}

/// Stages that need a control group are `None` when it is missing.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub ranks: RankTable,
    pub hist_phi_treatment: Histogram,
    pub hist_phi_control: Option<Histogram>,
    pub corrected: Option<CorrectedScores>,
    pub hist_psi: Option<Histogram>,
    pub summary: Option<ClassificationSummary>,
    pub classification: Option<Vec<ClassificationRow>>,
    pub mixture: Option<MixtureFit>,
    pub excluded: Vec<ExcludedRow>,
    pub warnings: Vec<String>,
}

fn usable_phis(metrics: &[&CustomerMetrics]) -> Vec<f64> {
    metrics.iter().filter(|m| !m.degenerate).map(|m| m.phi).collect()
}

/// Ranks, bias correction, classification and mixture fit over a metrics table.
pub fn analyze(metrics: &[CustomerMetrics], config: &AnalysisConfig) -> Result<Analysis> {
    if !(config.confidence_level > 0.0 && config.confidence_level < 1.0) {
        return Err(Error::InvalidLevel(config.confidence_level));
    }
    if config.bins == 0 {
        return Err(Error::TooFewBins { min: 1, got: 0 });
    }
    let (treatment, control): (Vec<CustomerMetrics>, Vec<CustomerMetrics>) =
        metrics.iter().cloned().partition(|m| m.group == Group::Treatment);
    if treatment.is_empty() {
        return Err(Error::EmptyTreatment);
    }
    let mut warnings = Vec::new();
    let ranks = rank_customers(&treatment)?;
    let hist_phi_treatment =
        Histogram::unit(&usable_phis(&treatment.iter().collect::<Vec<_>>()), config.bins);
    let hist_phi_control = (!control.is_empty())
        .then(|| Histogram::unit(&usable_phis(&control.iter().collect::<Vec<_>>()), config.bins));

    let mut excluded: Vec<ExcludedRow> = metrics
        .iter()
        .filter(|m| m.degenerate)
        .map(|m| ExcludedRow { customer_id: m.customer_id.clone(), reason: "degenerate".into() })
        .collect();
    excluded.sort_by(|a, b| a.customer_id.cmp(&b.customer_id));

    let cdf = match build_control_cdf(&control) {
        Ok((cdf, _)) => Some(cdf),
        Err(Error::EmptyControl) => {
            warnings.push(
                "no usable control customers: skipping bias correction, classification and mixture fit"
                    .into(),
            );
            None
        }
        Err(e) => return Err(e),
    };

    let mut analysis = Analysis {
        ranks,
        hist_phi_treatment,
        hist_phi_control,
        corrected: None,
        hist_psi: None,
        summary: None,
        classification: None,
        mixture: None,
        excluded,
        warnings,
    };
    let Some(cdf) = cdf else {
        return Ok(analysis);
    };

    let corrected = bias_correct(&treatment, &cdf);
    let psi = corrected.psi_values();
    let summary = classify_at_confidence(&corrected, config.confidence_level)?;
    let mixture = match fit_mixture_with(&psi, config.bins, config.fit_method) {
        Ok(fit) => Some(fit),
        Err(e) => {
            analysis.warnings.push(format!("mixture fit skipped: {e}"));
            None
        }
    };
    let classification = corrected
        .entries
        .iter()
        .map(|e| ClassificationRow {
            customer_id: e.customer_id.clone(),
            psi: e.psi,
            responsive_at_level: summary.is_responsive(e.psi),
            pr_responsive: mixture
                .as_ref()
                .and_then(|fit| responsiveness_probability(&fit.params, e.psi).ok())
                .map(|r| r.probability),
        })
        .collect();

    analysis.hist_psi = Some(Histogram::unit(&psi, config.bins));
    analysis.corrected = Some(corrected);
    analysis.summary = Some(summary);
    analysis.classification = Some(classification);
    analysis.mixture = mixture;
    Ok(analysis)
}

/// File name and contents of every analysis artifact, in a fixed order.
pub fn render_analysis(analysis: &Analysis) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut files = Vec::new();
    let mut buf = Vec::new();
    io::write_ranks(&mut buf, &analysis.ranks)?;
    files.push(("ranks.csv", std::mem::take(&mut buf)));
    io::write_histogram(&mut buf, &analysis.hist_phi_treatment)?;
    files.push(("hist_phi_treatment.csv", std::mem::take(&mut buf)));
    if let Some(h) = &analysis.hist_phi_control {
        io::write_histogram(&mut buf, h)?;
        files.push(("hist_phi_control.csv", std::mem::take(&mut buf)));
    }
    if let Some(c) = &analysis.corrected {
        io::write_psi(&mut buf, c)?;
        files.push(("psi.csv", std::mem::take(&mut buf)));
    }
    if let Some(h) = &analysis.hist_psi {
        io::write_histogram(&mut buf, h)?;
        files.push(("hist_psi.csv", std::mem::take(&mut buf)));
    }
    if let Some(rows) = &analysis.classification {
        io::write_classification(&mut buf, rows)?;
        files.push(("classification.csv", std::mem::take(&mut buf)));
    }
    if let Some(fit) = &analysis.mixture {
        io::write_mixture_report(&mut buf, &MixtureReport::from(fit))?;
        files.push(("mixture.json", std::mem::take(&mut buf)));
    }
    io::write_excluded(&mut buf, &analysis.excluded)?;
    files.push(("excluded.csv", buf));
    Ok(files)
}

/// Agreement between pipeline output and ground-truth labels.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Evaluation {
    /// Treatment customers present in both the ranks and the labels.
    pub evaluated: usize,
    pub truly_responsive: usize,
    pub flagged: usize,
    pub true_positives: usize,
    /// `None` when nothing was flagged.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Between injected response strength and confidence rank.
    pub spearman: Option<f64>,
    pub true_fraction: f64,
    pub fitted_fraction: Option<f64>,
}

pub fn evaluate(
    ranks: &[RankRow],
    classification: Option<&[ClassificationRow]>,
    mixture: Option<&MixtureReport>,
    labels: &[LabelRow],
) -> Result<Evaluation> {
    let by_id: HashMap<&str, &LabelRow> = labels.iter().map(|l| (l.customer_id.as_str(), l)).collect();
    let paired: Vec<(&RankRow, &LabelRow)> =
        ranks.iter().filter_map(|r| by_id.get(r.customer_id.as_str()).map(|l| (r, *l))).collect();
    if paired.is_empty() {
        return Err(Error::Malformed("no ranked customer appears in the labels".into()));
    }
    let truly_responsive = paired.iter().filter(|(_, l)| l.responsive).count();
    let strengths: Vec<f64> = paired.iter().map(|(_, l)| l.response_strength).collect();
    let rank_values: Vec<f64> = paired.iter().map(|(r, _)| r.rank).collect();
    let spearman = spearman_rank_correlation(&strengths, &rank_values).ok();

    let (mut flagged, mut true_positives) = (0, 0);
    for row in classification.unwrap_or(&[]) {
        if row.responsive_at_level {
            flagged += 1;
            if by_id.get(row.customer_id.as_str()).is_some_and(|l| l.responsive) {
                true_positives += 1;
            }
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(Evaluation {
        evaluated: paired.len(),
        truly_responsive,
        flagged,
        true_positives,
        precision: classification.and(ratio(true_positives, flagged)),
        recall: classification.and(ratio(true_positives, truly_responsive)),
        spearman,
        true_fraction: truly_responsive as f64 / paired.len() as f64,
        fitted_fraction: mixture.map(|m| m.responsive_fraction),
    })
}
