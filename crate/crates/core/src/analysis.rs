//! Whole-series pipeline: conditioning, embedding-parameter estimation and the
//! four recurrence measures.

use serde::Serialize;

use crate::embedding::{embed, estimate_delay, fnn_dimension, EmbeddingParams, FnnConfig, FnnReport};
use crate::error::{Error, Result};
use crate::network::{PathLengthReport, RecurrenceNetwork};
use crate::preprocess::{detrend, forward_fill_calendar, uniform_deviate, Calendar, RawSeries, TimeSeries};
use crate::recurrence::{det, lam, recurrence_matrix, Norm, RecurrenceMatrix, RqaConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreprocessConfig {
    /// Calendar to forward-fill onto; `None` keeps the observed dates only.
    pub calendar: Option<Calendar>,
    pub detrend_degree: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            calendar: Some(Calendar::Weekdays),
            detrend_degree: 3,
        }
    }
}

/// A series after detrending, and its uniform deviate.
#[derive(Debug, Clone)]
pub struct Prepared<T> {
    pub detrended: TimeSeries<T>,
    pub deviate: TimeSeries<T>,
}

pub fn prepare<T: Scalar>(raw: &RawSeries<T>, cfg: &PreprocessConfig) -> Result<Prepared<T>> {
    if raw.is_empty() {
        return Err(Error::EmptySeries);
    }
    let filled = match cfg.calendar {
        Some(calendar) => forward_fill_calendar(raw, calendar)?,
        None => {
            let (dates, values): (Vec<_>, Vec<_>) = raw.entries().iter().copied().unzip();
            TimeSeries::with_dates(raw.label(), values, dates)?
        }
    };
    let detrended = detrend(&filled, cfg.detrend_degree)?;
    let deviate = uniform_deviate(&detrended);
    Ok(Prepared { detrended, deviate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisConfig {
    /// Largest lag searched for the 1/e autocorrelation crossing.
    pub max_lag: usize,
    pub m_max: usize,
    pub fnn: FnnConfig,
    pub forced_dimension: Option<usize>,
    pub forced_delay: Option<usize>,
    pub epsilon: f64,
    pub norm: Norm,
    pub rqa: RqaConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            max_lag: 1000,
            m_max: 10,
            fnn: FnnConfig::default(),
            forced_dimension: None,
            forced_delay: None,
            epsilon: 0.25,
            norm: Norm::Euclidean,
            rqa: RqaConfig::default(),
        }
    }
}

/// Delay and dimension for a series, estimated unless forced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingEstimate {
    pub params: EmbeddingParams,
    pub fnn: Option<FnnReport>,
}

pub fn estimate_embedding<T: Scalar>(values: &[T], cfg: &AnalysisConfig) -> Result<EmbeddingEstimate> {
    let delay = match cfg.forced_delay {
        Some(tau) => tau,
        None => estimate_delay(values, cfg.max_lag.min(values.len() - 1))?,
    };
    let (dimension, fnn) = match cfg.forced_dimension {
        Some(m) => (m, None),
        None => {
            // shrink m_max until the series is long enough to test it
            let affordable = (values.len().saturating_sub(2) / delay).max(1);
            let report = fnn_dimension(values, delay, cfg.m_max.min(affordable), &cfg.fnn)?;
            (report.dimension, Some(report))
        }
    };
    Ok(EmbeddingEstimate {
        params: EmbeddingParams::new(dimension, delay)?,
        fnn,
    })
}

/// Full-series measures for one market.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub label: String,
    pub points: usize,
    pub params: EmbeddingParams,
    pub fnn: Option<FnnReport>,
    pub recurrence_rate: f64,
    pub det: Result<f64>,
    pub lam: Result<f64>,
    pub cc: f64,
    pub path_length: Result<PathLengthReport>,
}

/// Recurrence matrix of `values` embedded with `params`.
pub fn build_recurrence<T: Scalar>(
    values: &[T],
    params: EmbeddingParams,
    epsilon: f64,
    norm: Norm,
) -> Result<RecurrenceMatrix> {
    let trajectory = embed(values, params)?;
    recurrence_matrix(&trajectory, T::from_f64_lossy(epsilon), norm)
}

/// Estimates (m, τ) where not forced, then computes DET, LAM, CC and CPL.
pub fn analyze_series<T: Scalar>(ts: &TimeSeries<T>, cfg: &AnalysisConfig) -> Result<SeriesReport> {
    let estimate = estimate_embedding(ts.values(), cfg)?;
    let r = build_recurrence(ts.values(), estimate.params, cfg.epsilon, cfg.norm)?;
    let network = RecurrenceNetwork::from_recurrence(&r);
    Ok(SeriesReport {
        label: ts.label().to_string(),
        points: r.size(),
        params: estimate.params,
        fnn: estimate.fnn,
        recurrence_rate: r.recurrence_rate(),
        det: det(&r, cfg.rqa.l_min, cfg.rqa.include_loi),
        lam: lam(&r, cfg.rqa.v_min),
        cc: network.clustering_coefficient(),
        path_length: network.characteristic_path_length(),
    })
}
