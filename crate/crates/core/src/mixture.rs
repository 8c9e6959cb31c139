//! Uniform + Beta mixture for bias-corrected scores.
//!
//! `f(ψ) = λ + (1 − λ)·Beta(ψ; α, β)`: λ is the uniform background of
//! unresponsive customers, the Beta component the responsive remainder.
//! Fitting maximizes the binned multinomial likelihood, which stays
//! well-posed when β < 1 makes the density unbounded at ψ = 1 and the data
//! holds exact ψ = 1 atoms.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::special::{beta_pdf, beta_reg_pair};

/// Shape parameters are confined to this range during fitting.
pub const SHAPE_MIN: f64 = 0.01;
pub const SHAPE_MAX: f64 = 100.0;
pub const DEFAULT_BINS: usize = 50;
pub const MIN_BINS: usize = 10;
pub const MIN_SCORES: usize = 50;
pub const MAX_ITERATIONS: usize = 2_000;
pub const SPREAD_TOLERANCE: f64 = 1e-10;

const LOGIT_BOUND: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl MixtureParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParams(format!("lambda {lambda} outside [0, 1]")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "shape parameters must be positive, got alpha={alpha} beta={beta}"
            )));
        }
        Ok(MixtureParams { lambda, alpha, beta })
    }

    fn singular_at(&self, psi: f64) -> bool {
        (psi <= 0.0 && self.alpha < 1.0) || (psi >= 1.0 && self.beta < 1.0)
    }
}

/// Pointwise mixture density. Errors outside [0, 1] and at an endpoint where
/// the Beta density diverges.
pub fn mixture_density(params: &MixtureParams, psi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::OutOfUnitInterval(psi));
    }
    if params.singular_at(psi) {
        return Err(Error::EndpointSingularity { psi });
    }
    let l = params.lambda;
    if l == 1.0 {
        return Ok(1.0);
    }
    Ok(l + (1.0 - l) * beta_pdf(params.alpha, params.beta, psi))
}

/// Pr(responsive | ψ) = 1 − λ / f(ψ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Responsiveness {
    pub probability: f64,
    /// Set when ψ sits on a divergent endpoint and the value is the limit.
    pub is_limit: bool,
}

const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Depends only on `(params, psi)`. For λ > 0 the result is rounded toward
/// zero so it stays strictly below one; λ = 0 gives exactly one.
pub fn responsiveness_probability(params: &MixtureParams, psi: f64) -> Result<Responsiveness> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::OutOfUnitInterval(psi));
    }
    let l = params.lambda;
    if l == 0.0 {
        return Ok(Responsiveness { probability: 1.0, is_limit: params.singular_at(psi) });
    }
    if l == 1.0 {
        return Ok(Responsiveness { probability: 0.0, is_limit: false });
    }
    if params.singular_at(psi) {
        return Ok(Responsiveness { probability: 1.0, is_limit: true });
    }
    let g = beta_pdf(params.alpha, params.beta, psi);
    let f = l + (1.0 - l) * g;
    let p = (1.0 - l / f).max(0.0);
    Ok(Responsiveness { probability: p.min(BELOW_ONE), is_limit: false })
}

/// Model probability of each of `bins` equal-width bins on [0, 1].
pub fn bin_probabilities(params: &MixtureParams, bins: usize) -> Vec<f64> {
    let w = 1.0 / bins as f64;
    let edges: Vec<(f64, f64)> =
        (0..=bins).map(|k| beta_reg_pair(params.alpha, params.beta, k as f64 * w)).collect();
    edges
        .windows(2)
        .map(|e| {
            let (lo, lo_c) = e[0];
            let (hi, hi_c) = e[1];
            // take the difference on whichever side is further from 1
            let beta_mass = if lo < 0.5 { hi - lo } else { lo_c - hi_c };
            params.lambda * w + (1.0 - params.lambda) * beta_mass.max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Maximize the binned multinomial likelihood.
    #[default]
    BinnedLikelihood,
    /// Minimize squared error between bin frequencies and model probabilities.
    HistogramLeastSquares,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::BinnedLikelihood => "binned_likelihood",
            FitMethod::HistogramLeastSquares => "histogram_least_squares",
        })
    }
}

impl FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "binned_likelihood" | "likelihood" => Ok(FitMethod::BinnedLikelihood),
            "histogram_least_squares" | "least_squares" | "lsq" => Ok(FitMethod::HistogramLeastSquares),
            other => Err(Error::Malformed(format!("unknown fit method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureFit {
    pub params: MixtureParams,
    pub bin_count: usize,
    pub neg_log_likelihood: f64,
    pub converged: bool,
    pub responsive_fraction: f64,
    pub method: FitMethod,
    /// Index of the multi-start that produced the optimum.
    pub start_index: usize,
    pub iterations: usize,
}

fn to_params(x: &[f64]) -> MixtureParams {
    MixtureParams { lambda: 1.0 / (1.0 + (-x[0]).exp()), alpha: x[1].exp(), beta: x[2].exp() }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn binned_nll(counts: &[usize], probs: &[f64]) -> f64 {
    counts.iter().zip(probs).filter(|(n, _)| **n > 0).map(|(&n, &p)| -(n as f64) * p.max(1e-300).ln()).sum()
}

fn bin_counts(scores: &[f64], bins: usize) -> Vec<usize> {
    crate::population::Histogram::unit(scores, bins).counts
}

/// Deterministic starting points: λ ∈ {0.1, …, 0.9} × α, β ∈ {0.2, 2}.
pub fn start_points() -> Vec<MixtureParams> {
    let mut starts = Vec::new();
    for i in 1..=9 {
        for &a in &[0.2, 2.0] {
            for &b in &[0.2, 2.0] {
                starts.push(MixtureParams { lambda: i as f64 / 10.0, alpha: a, beta: b });
            }
        }
    }
    starts
}

pub fn fit_mixture(scores: &[f64], bin_count: usize) -> Result<MixtureFit> {
    fit_mixture_with(scores, bin_count, FitMethod::BinnedLikelihood)
}

/// Multi-start simplex search over (logit λ, ln α, ln β). The winner has the
/// lowest objective, ties going to the lower start index.
pub fn fit_mixture_with(scores: &[f64], bin_count: usize, method: FitMethod) -> Result<MixtureFit> {
    if scores.len() < MIN_SCORES {
        return Err(Error::TooFewScores { min: MIN_SCORES, got: scores.len() });
    }
    if bin_count < MIN_BINS {
        return Err(Error::TooFewBins { min: MIN_BINS, got: bin_count });
    }
    if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::OutOfUnitInterval(bad));
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Err(Error::DegenerateScores);
    }

    let counts = bin_counts(scores, bin_count);
    let n = scores.len() as f64;
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let objective = |x: &[f64]| {
        let probs = bin_probabilities(&to_params(x), bin_count);
        match method {
            FitMethod::BinnedLikelihood => binned_nll(&counts, &probs),
            // scaled by N so the spread tolerance means the same as for the NLL
            FitMethod::HistogramLeastSquares => {
                n * freqs.iter().zip(&probs).map(|(f, p)| (f - p).powi(2)).sum::<f64>()
            }
        }
    };

    let (lo, hi) = (SHAPE_MIN.ln(), SHAPE_MAX.ln());
    let opts = NelderMeadOptions {
        max_iterations: MAX_ITERATIONS,
        f_tolerance: SPREAD_TOLERANCE,
        step: vec![1.0, 0.5, 0.5],
        lower: vec![-LOGIT_BOUND, lo, lo],
        upper: vec![LOGIT_BOUND, hi, hi],
    };

    let results: Vec<_> = start_points()
        .par_iter()
        .map(|s| {
            let x0 = [logit(s.lambda), s.alpha.ln(), s.beta.ln()];
            nelder_mead(objective, &x0, &opts)
        })
        .collect();

    let (start_index, best) = results
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.f.total_cmp(&b.f).then(i.cmp(j)))
        .expect("at least one start");

    let params = to_params(&best.x);
    let nll = binned_nll(&counts, &bin_probabilities(&params, bin_count));
    Ok(MixtureFit {
        params,
        bin_count,
        neg_log_likelihood: nll,
        converged: best.converged,
        responsive_fraction: 1.0 - params.lambda,
        method,
        start_index,
        iterations: best.iterations,
    })
}
