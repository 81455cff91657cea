//! Monotone-trend tests: Kendall's tau and the Mann-Kendall test with the
//! rank-autocorrelation variance correction for serially dependent data.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
    None,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
            Direction::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KendallTau {
    /// Mann-Kendall statistic: concordant minus discordant pairs in time order.
    pub s: i64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendResult {
    pub n: usize,
    pub s: i64,
    pub tau: f64,
    /// Variance of S after the autocorrelation correction.
    pub variance: f64,
    /// Tie-corrected variance of S under independence.
    pub variance_uncorrected: f64,
    pub z: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub alpha: f64,
    pub direction: Direction,
    /// Correction factor n/n* applied to the variance (1 for the classic test).
    pub n_effective_ratio: f64,
    /// Set when fewer than ten observations were tested.
    pub small_sample: bool,
}

fn validate<T: Scalar>(series: &[T]) -> Result<Vec<f64>> {
    if series.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series contains non-finite values".into()));
    }
    let x: Vec<f64> = series.iter().map(|v| v.to_f64_lossy()).collect();
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::DegenerateSeries);
    }
    Ok(x)
}

fn sign(d: f64) -> i64 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

fn mk_statistic(x: &[f64]) -> i64 {
    let n = x.len();
    (0..n)
        .map(|i| x[i + 1..].iter().map(|&xj| sign(xj - x[i])).sum::<i64>())
        .sum()
}

/// Sizes of groups of tied values.
fn tie_groups(x: &[f64]) -> Vec<u64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut groups = Vec::new();
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            if run > 1 {
                groups.push(run);
            }
            run = 1;
        }
    }
    if run > 1 {
        groups.push(run);
    }
    groups
}

/// Kendall's rank correlation between the series and time (tau-b when tied).
pub fn kendall_tau<T: Scalar>(series: &[T]) -> Result<KendallTau> {
    let x = validate(series)?;
    Ok(kendall_from_values(&x))
}

fn kendall_from_values(x: &[f64]) -> KendallTau {
    let n = x.len() as f64;
    let s = mk_statistic(x);
    let pairs = n * (n - 1.0) / 2.0;
    let tied: f64 = tie_groups(x)
        .iter()
        .map(|&t| (t * (t - 1)) as f64 / 2.0)
        .sum();
    let tau = s as f64 / ((pairs - tied) * pairs).sqrt();
    KendallTau { s, tau }
}

/// Median of pairwise slopes, used to remove the trend before ranking.
fn sen_slope(x: &[f64]) -> f64 {
    let n = x.len();
    let mut slopes = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            slopes.push((x[j] - x[i]) / (j - i) as f64);
        }
    }
    let mid = slopes.len() / 2;
    let (_, &mut upper, _) =
        slopes.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("finite"));
    if slopes.len() % 2 == 1 {
        upper
    } else {
        let lower = slopes[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

/// Ranks 1..=n, ties sharing their average rank.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Variance inflation n/n* from the significant autocorrelations of the
/// ranks of the Sen-detrended series, never below one.
pub fn autocorrelation_correction(x: &[f64]) -> f64 {
    let n = x.len();
    let slope = sen_slope(x);
    let detrended: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| v - slope * i as f64)
        .collect();
    let ranks = average_ranks(&detrended);
    let mean = ranks.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = ranks.iter().map(|r| r - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return 1.0;
    }
    let z975 = Normal::standard().inverse_cdf(0.975);
    let bound = z975 / (n as f64).sqrt();
    let nf = n as f64;
    let mut sum = 0.0;
    for lag in 1..n {
        let c: f64 = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum();
        let rho = c / c0;
        if rho.abs() > bound {
            let k = (n - lag) as f64;
            sum += k * (k - 1.0) * (k - 2.0) * rho;
        }
    }
    let factor = 1.0 + 2.0 * sum / (nf * (nf - 1.0) * (nf - 2.0));
    factor.max(1.0)
}

fn mann_kendall(x: &[f64], alpha: f64, corrected: bool) -> Result<TrendResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = x.len();
    let nf = n as f64;
    let KendallTau { s, tau } = kendall_from_values(x);
    let tie_term: f64 = tie_groups(x)
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * (t - 1.0) * (2.0 * t + 5.0)
        })
        .sum();
    let variance_uncorrected = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let ratio = if corrected {
        autocorrelation_correction(x)
    } else {
        1.0
    };
    let variance = variance_uncorrected * ratio;
    let sd = variance.sqrt();
    let z = match s.signum() {
        1 => (s - 1) as f64 / sd,
        -1 => (s + 1) as f64 / sd,
        _ => 0.0,
    };
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    let direction = if p < alpha {
        if s > 0 {
            Direction::Increasing
        } else {
            Direction::Decreasing
        }
    } else {
        Direction::None
    };
    Ok(TrendResult {
        n,
        s,
        tau,
        variance,
        variance_uncorrected,
        z,
        p,
        alpha,
        direction,
        n_effective_ratio: ratio,
        small_sample: n < 10,
    })
}

/// Mann-Kendall test with the variance corrected for serial correlation.
pub fn mann_kendall_modified<T: Scalar>(series: &[T], alpha: f64) -> Result<TrendResult> {
    let x = validate(series)?;
    mann_kendall(&x, alpha, true)
}

/// Mann-Kendall test assuming independent observations.
pub fn mann_kendall_classic<T: Scalar>(series: &[T], alpha: f64) -> Result<TrendResult> {
    let x = validate(series)?;
    mann_kendall(&x, alpha, false)
}

/// Modified test over the present entries of a series with gaps.
pub fn mann_kendall_modified_gapped<T: Scalar>(
    series: &[Option<T>],
    alpha: f64,
) -> Result<TrendResult> {
    let present: Vec<T> = series.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::DegenerateSeries);
    }
    mann_kendall_modified(&present, alpha)
}
