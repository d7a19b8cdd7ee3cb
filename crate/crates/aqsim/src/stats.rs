//! Distribution-free median statistics for runtime samples.
//!
//! The 95% confidence interval on the median uses order-statistic ranks:
//! with s samples and B ~ Binomial(s, 1/2), the interval (x_(l), x_(u))
//! with u = s + 1 − l covers the true median with probability
//! 1 − 2·CDF(l − 1), so the tightest valid ranks take the largest l with
//! CDF(l − 1) ≤ 0.025. No distributional assumptions enter.

use thiserror::Error;

/// Smallest sample size admitting a distribution-free 95% CI: for s = 6
/// the extreme ranks give coverage 1 − 2/64 ≈ 0.969, for s = 5 even
/// those fall short (1 − 2/32 ≈ 0.94).
pub const MIN_SAMPLES: usize = 6;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {MIN_SAMPLES} samples for a distribution-free 95% CI, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

/// Median with a distribution-free 95% confidence interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MedianCi {
    pub s: usize,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    /// 1-based order-statistic ranks of the interval endpoints.
    pub rank_lo: usize,
    pub rank_hi: usize,
}

/// CDF of Binomial(s, 1/2) at k, accumulated from a log-space pmf
/// recurrence so large s cannot underflow the first term.
fn binom_half_cdf(k: usize, s: usize) -> f64 {
    let mut log_pmf = -(s as f64) * std::f64::consts::LN_2;
    let mut cdf = 0.0;
    for i in 0..=k.min(s) {
        cdf += log_pmf.exp();
        log_pmf += ((s - i) as f64 / (i + 1) as f64).ln();
    }
    cdf
}

/// Largest 1-based lower rank l with CDF(l − 1; s, 1/2) ≤ 0.025.
fn lower_rank(s: usize) -> Option<usize> {
    let mut best = None;
    for l in 1..=s.div_ceil(2) {
        if binom_half_cdf(l - 1, s) <= 0.025 {
            best = Some(l);
        } else {
            break;
        }
    }
    best
}

/// Median and tightest symmetric-rank 95% CI of a sample.
pub fn median_ci(samples: &[f64]) -> Result<MedianCi, StatsError> {
    let s = samples.len();
    if s < MIN_SAMPLES {
        return Err(StatsError::TooFewSamples(s));
    }
    for (index, &value) in samples.iter().enumerate() {
        if !value.is_finite() {
            return Err(StatsError::NonFinite { index, value });
        }
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if s % 2 == 1 {
        sorted[s / 2]
    } else {
        0.5 * (sorted[s / 2 - 1] + sorted[s / 2])
    };
    let rank_lo = lower_rank(s).expect("s >= MIN_SAMPLES admits a rank");
    let rank_hi = s + 1 - rank_lo;
    Ok(MedianCi {
        s,
        median,
        lo: sorted[rank_lo - 1],
        hi: sorted[rank_hi - 1],
        rank_lo,
        rank_hi,
    })
}
