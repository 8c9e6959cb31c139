//! Population-level analysis of φ values.
//!
//! Degenerate customers are dropped from ranking, the control CDF and the
//! corrected scores; each operation reports the ids it dropped.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::CustomerMetrics;

/// Ranks 1..=N with tied values sharing their mean rank. Input order is kept.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub customer_id: String,
    pub phi: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTable {
    pub entries: Vec<RankEntry>,
    pub excluded: Vec<String>,
}

impl RankTable {
    pub fn rank_of(&self, customer_id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.customer_id == customer_id).map(|e| e.rank)
    }
}

fn split_degenerate(metrics: &[CustomerMetrics]) -> (Vec<&CustomerMetrics>, Vec<String>) {
    let (bad, good): (Vec<_>, Vec<_>) = metrics.iter().partition(|m| m.degenerate);
    (good, bad.into_iter().map(|m| m.customer_id.clone()).collect())
}

/// Confidence rank: higher φ gets a higher rank.
pub fn rank_customers(metrics: &[CustomerMetrics]) -> Result<RankTable> {
    if metrics.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (usable, excluded) = split_degenerate(metrics);
    if usable.is_empty() {
        return Err(Error::NoUsableCustomers);
    }
    let phis: Vec<f64> = usable.iter().map(|m| m.phi).collect();
    let entries = usable
        .iter()
        .zip(average_ranks(&phis))
        .map(|(m, rank)| RankEntry { customer_id: m.customer_id.clone(), phi: m.phi, rank })
        .collect();
    Ok(RankTable { entries, excluded })
}

/// Empirical CDF with the `≤` counting rule: F(x) = #{v ≤ x} / N.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyControl);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }
}

/// F_control built from the non-degenerate control customers.
pub fn build_control_cdf(control: &[CustomerMetrics]) -> Result<(EmpiricalCdf, Vec<String>)> {
    let (usable, excluded) = split_degenerate(control);
    let phis: Vec<f64> = usable.iter().map(|m| m.phi).collect();
    Ok((EmpiricalCdf::from_values(&phis)?, excluded))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreEntry {
    pub customer_id: String,
    pub phi: f64,
    pub psi: f64,
}

/// Bias-corrected ψ = F_control(φ) per customer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedScores {
    pub entries: Vec<ScoreEntry>,
    pub excluded: Vec<String>,
}

impl CorrectedScores {
    pub fn psi_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.psi).collect()
    }
}

pub fn bias_correct(metrics: &[CustomerMetrics], cdf: &EmpiricalCdf) -> CorrectedScores {
    let (usable, excluded) = split_degenerate(metrics);
    let entries = usable
        .into_iter()
        .map(|m| ScoreEntry { customer_id: m.customer_id.clone(), phi: m.phi, psi: cdf.eval(m.phi) })
        .collect();
    CorrectedScores { entries, excluded }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationSummary {
    pub level: f64,
    pub responsive: Vec<String>,
    pub total: usize,
    /// Share of scored customers with ψ ≥ level; 0 when nobody was scored.
    pub fraction: f64,
}

impl ClassificationSummary {
    pub fn is_responsive(&self, psi: f64) -> bool {
        psi >= self.level
    }
}

pub fn classify_at_confidence(scores: &CorrectedScores, level: f64) -> Result<ClassificationSummary> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let responsive: Vec<String> =
        scores.entries.iter().filter(|e| e.psi >= level).map(|e| e.customer_id.clone()).collect();
    let total = scores.entries.len();
    let fraction = if total == 0 { 0.0 } else { responsive.len() as f64 / total as f64 };
    Ok(ClassificationSummary { level, responsive, total, fraction })
}

/// Spearman's ρ: Pearson correlation of average ranks.
pub fn spearman_rank_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::TooFewPairs { min: 3, got: x.len() });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSequence);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Survival function of the Kolmogorov distribution, Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0, 1), with the
/// Stephens small-sample correction on the asymptotic p-value.
pub fn ks_uniform(values: &[f64]) -> Result<KsResult> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = v.clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let p_value = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    Ok(KsResult { statistic: d, p_value, n: sorted.len() })
}

/// Equal-width histogram on [0, 1]. Values at 1 land in the last bin, values
/// at 0 in the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn unit(values: &[f64], bins: usize) -> Self {
        let mut counts = vec![0; bins.max(1)];
        let last = counts.len() - 1;
        for &v in values {
            let k = if v <= 0.0 { 0 } else { ((v * counts.len() as f64) as usize).min(last) };
            counts[k] += 1;
        }
        Histogram { counts }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let n = self.counts.len() as f64;
        (k as f64 / n, (k + 1) as f64 / n)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}
