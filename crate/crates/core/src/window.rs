//! Sliding-window evaluation of recurrence and early-warning measures.
//!
//! Every window is an independent unit of work. Values are assigned to the
//! window center `start + length / 2`, and a window whose measure cannot be
//! computed yields an explicit [`Observation::Missing`] rather than a gap.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::{autocorrelation, embed, EmbeddingParams};
use crate::error::{Error, Result};
use crate::network::RecurrenceNetwork;
use crate::preprocess::{uniform_deviate_values, TimeSeries};
use crate::recurrence::{det, lam, recurrence_matrix, Norm, RqaConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Measure {
    #[serde(rename = "DET")]
    Det,
    #[serde(rename = "LAM")]
    Lam,
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "CPL")]
    Cpl,
    #[serde(rename = "VAR")]
    Var,
    #[serde(rename = "AC1")]
    Ac1,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::Det,
        Measure::Lam,
        Measure::Cc,
        Measure::Cpl,
        Measure::Var,
        Measure::Ac1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Det => "DET",
            Measure::Lam => "LAM",
            Measure::Cc => "CC",
            Measure::Cpl => "CPL",
            Measure::Var => "VAR",
            Measure::Ac1 => "AC1",
        }
    }

    /// Measures read off the recurrence matrix of the window.
    pub fn needs_recurrence(self) -> bool {
        matches!(self, Measure::Det | Measure::Lam | Measure::Cc | Measure::Cpl)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown measure `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    /// One (m, τ) for every window.
    Global(EmbeddingParams),
    /// Recurrences between scalar values.
    None,
}

impl EmbeddingMode {
    fn params(&self) -> EmbeddingParams {
        match *self {
            EmbeddingMode::Global(p) => p,
            EmbeddingMode::None => EmbeddingParams {
                dimension: 1,
                delay: 1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowConfig {
    pub length: usize,
    pub step: usize,
    pub embedding: EmbeddingMode,
    pub epsilon: f64,
    pub norm: Norm,
    pub rqa: RqaConfig,
    pub measures: Vec<Measure>,
    /// Re-rank each window onto (0, 1) before building recurrences.
    pub normalize_windows: bool,
}

impl WindowConfig {
    /// Long embedded windows: 1500 steps, slid by 100, m = 4.
    pub fn gfc(delay: usize) -> Self {
        Self {
            length: 1500,
            step: 100,
            embedding: EmbeddingMode::Global(EmbeddingParams {
                dimension: 4,
                delay: delay.max(1),
            }),
            epsilon: 0.25,
            norm: Norm::Euclidean,
            rqa: RqaConfig::default(),
            measures: vec![Measure::Det, Measure::Lam, Measure::Cc, Measure::Cpl],
            normalize_windows: true,
        }
    }

    /// Short scalar windows: 250 steps, slid by 10, no embedding.
    pub fn short() -> Self {
        Self {
            length: 250,
            step: 10,
            embedding: EmbeddingMode::None,
            epsilon: 0.25,
            norm: Norm::Euclidean,
            rqa: RqaConfig::default(),
            measures: vec![Measure::Det, Measure::Lam, Measure::Var, Measure::Ac1],
            normalize_windows: true,
        }
    }

    pub fn with_measures(mut self, measures: &[Measure]) -> Self {
        self.measures = measures.to_vec();
        self
    }

    /// Checks hard constraints and returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.length < 2 || self.step == 0 {
            return Err(Error::InvalidInput(format!(
                "window length must be at least 2 and step positive (length={}, step={})",
                self.length, self.step
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        if self.measures.is_empty() {
            return Err(Error::InvalidInput("no measures requested".into()));
        }
        if let EmbeddingMode::Global(p) = self.embedding {
            if p.dimension == 0 || p.delay == 0 {
                return Err(Error::InvalidInput("embedding m and tau must be positive".into()));
            }
            if self.length < p.span() + 10 {
                return Err(Error::InvalidInput(format!(
                    "window of {} steps leaves fewer than 10 states at m={}, tau={}",
                    self.length, p.dimension, p.delay
                )));
            }
        }
        let mut warnings = Vec::new();
        if self.length < 2 * self.step {
            warnings.push(format!(
                "window length {} is less than twice the step {}",
                self.length, self.step
            ));
        }
        Ok(warnings)
    }

    pub fn window_count(&self, n: usize) -> Result<usize> {
        if n < self.length {
            return Err(Error::InsufficientData {
                needed: self.length,
                got: n,
            });
        }
        Ok((n - self.length) / self.step + 1)
    }

    pub fn center(&self, start: usize) -> usize {
        start + self.length / 2
    }

    /// Measures in canonical order without repeats.
    fn measure_set(&self) -> Vec<Measure> {
        let mut m = self.measures.clone();
        m.sort();
        m.dedup();
        m
    }

    /// Whether two configurations produce windows that can be compared side by side.
    fn comparable(&self, other: &Self) -> bool {
        let dim = |c: &Self| c.embedding.params().dimension;
        self.length == other.length
            && self.step == other.step
            && self.epsilon == other.epsilon
            && self.norm == other.norm
            && self.rqa == other.rqa
            && self.normalize_windows == other.normalize_windows
            && dim(self) == dim(other)
    }
}

/// A windowed value, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observation {
    Value(f64),
    Missing(String),
}

impl Observation {
    pub fn value(&self) -> Option<f64> {
        match self {
            Observation::Value(v) => Some(*v),
            Observation::Missing(_) => None,
        }
    }

    /// `ok`, or the reason for a missing value.
    pub fn status(&self) -> &str {
        match self {
            Observation::Value(_) => "ok",
            Observation::Missing(reason) => reason,
        }
    }
}

impl From<Result<f64>> for Observation {
    fn from(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Observation::Value(v),
            Err(e) => Observation::Missing(error_tag(&e)),
        }
    }
}

/// Short, stable reason string for a per-window failure.
pub fn error_tag(e: &Error) -> String {
    match e {
        Error::EmptySeries => "EmptySeries".into(),
        Error::LeadingGap(_) => "LeadingGap".into(),
        Error::InsufficientData { .. } => "InsufficientData".into(),
        Error::DegenerateVariance => "DegenerateVariance".into(),
        Error::NoCrossing { .. } => "NoCrossing".into(),
        Error::InvalidInput(_) => "InvalidInput".into(),
        Error::UndefinedMeasure(m) => format!("UndefinedMeasure({m})"),
        Error::ConfigMismatch(_) => "ConfigMismatch".into(),
        Error::DegenerateSeries => "DegenerateSeries".into(),
        Error::Parse { .. } => "Parse".into(),
    }
}

/// Measure values of one market over window centers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSeries {
    pub label: String,
    pub config: WindowConfig,
    pub centers: Vec<usize>,
    pub center_dates: Option<Vec<NaiveDate>>,
    pub values: BTreeMap<Measure, Vec<Observation>>,
}

impl MeasureSeries {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn get(&self, measure: Measure) -> Option<&[Observation]> {
        self.values.get(&measure).map(Vec::as_slice)
    }

    /// Values with missing entries as `None`.
    pub fn optional_values(&self, measure: Measure) -> Option<Vec<Option<f64>>> {
        self.get(measure)
            .map(|obs| obs.iter().map(Observation::value).collect())
    }
}

/// Contiguous windows `(start, values)` at starts 0, step, 2·step, ...;
/// a trailing partial window is dropped.
pub fn sliding_windows<T>(values: &[T], length: usize, step: usize) -> Result<Vec<(usize, &[T])>> {
    if length == 0 || step == 0 {
        return Err(Error::InvalidInput("window length and step must be positive".into()));
    }
    if values.len() < length {
        return Err(Error::InsufficientData {
            needed: length,
            got: values.len(),
        });
    }
    Ok((0..=values.len() - length)
        .step_by(step)
        .map(|start| (start, &values[start..start + length]))
        .collect())
}

/// Unbiased sample variance.
pub fn sample_variance<T: Scalar>(values: &[T]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let x: Vec<f64> = values.iter().map(|v| v.to_f64_lossy()).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    Ok(x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64)
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation<T: Scalar>(values: &[T]) -> Result<f64> {
    autocorrelation(values, 1).map(|acf| acf[1])
}

/// Evaluates the configured measures on one window of values.
pub fn evaluate_window<T: Scalar>(values: &[T], cfg: &WindowConfig) -> BTreeMap<Measure, Observation> {
    let measures = cfg.measure_set();
    let mut out = BTreeMap::new();

    if measures.iter().any(|m| m.needs_recurrence()) {
        match window_network_inputs(values, cfg) {
            Ok(r) => {
                let network = measures
                    .iter()
                    .any(|m| matches!(m, Measure::Cc | Measure::Cpl))
                    .then(|| RecurrenceNetwork::from_recurrence(&r));
                for &m in measures.iter().filter(|m| m.needs_recurrence()) {
                    let obs = match m {
                        Measure::Det => det(&r, cfg.rqa.l_min, cfg.rqa.include_loi).into(),
                        Measure::Lam => lam(&r, cfg.rqa.v_min).into(),
                        Measure::Cc => {
                            Observation::Value(network.as_ref().expect("built").clustering_coefficient())
                        }
                        Measure::Cpl => network
                            .as_ref()
                            .expect("built")
                            .characteristic_path_length()
                            .map(|p| p.cpl)
                            .into(),
                        _ => unreachable!(),
                    };
                    out.insert(m, obs);
                }
            }
            Err(e) => {
                let reason = error_tag(&e);
                for &m in measures.iter().filter(|m| m.needs_recurrence()) {
                    out.insert(m, Observation::Missing(reason.clone()));
                }
            }
        }
    }
    for &m in &measures {
        match m {
            Measure::Var => {
                out.insert(m, sample_variance(values).into());
            }
            Measure::Ac1 => {
                out.insert(m, lag1_autocorrelation(values).into());
            }
            _ => {}
        }
    }
    out
}

fn window_network_inputs<T: Scalar>(
    values: &[T],
    cfg: &WindowConfig,
) -> Result<crate::recurrence::RecurrenceMatrix> {
    let prepared = if cfg.normalize_windows {
        uniform_deviate_values(values)
    } else {
        values.to_vec()
    };
    let trajectory = embed(&prepared, cfg.embedding.params())?;
    recurrence_matrix(&trajectory, T::from_f64_lossy(cfg.epsilon), cfg.norm)
}

/// Runs every window of `ts` through [`evaluate_window`], in parallel,
/// gathering results in window order.
pub fn windowed_measures<T: Scalar>(ts: &TimeSeries<T>, cfg: &WindowConfig) -> Result<MeasureSeries> {
    cfg.validate()?;
    let windows = sliding_windows(ts.values(), cfg.length, cfg.step)?;
    let evaluated: Vec<BTreeMap<Measure, Observation>> = windows
        .par_iter()
        .map(|(_, w)| evaluate_window(w, cfg))
        .collect();

    let centers: Vec<usize> = windows.iter().map(|(s, _)| cfg.center(*s)).collect();
    let center_dates = ts
        .dates()
        .map(|d| centers.iter().map(|&c| d[c]).collect::<Vec<_>>());
    let mut values: BTreeMap<Measure, Vec<Observation>> = cfg
        .measure_set()
        .into_iter()
        .map(|m| (m, Vec::with_capacity(windows.len())))
        .collect();
    for mut window in evaluated {
        for (m, column) in values.iter_mut() {
            column.push(window.remove(m).expect("every measure evaluated"));
        }
    }
    Ok(MeasureSeries {
        label: ts.label().to_string(),
        config: cfg.clone(),
        centers,
        center_dates,
        values,
    })
}

/// Windowed unbiased variance of the values as given (no re-ranking).
pub fn variance_series<T: Scalar>(ts: &TimeSeries<T>, cfg: &WindowConfig) -> Result<MeasureSeries> {
    windowed_measures(ts, &cfg.clone().with_measures(&[Measure::Var]))
}

/// Windowed lag-1 autocorrelation of the values as given.
pub fn autocorr1_series<T: Scalar>(ts: &TimeSeries<T>, cfg: &WindowConfig) -> Result<MeasureSeries> {
    windowed_measures(ts, &cfg.clone().with_measures(&[Measure::Ac1]))
}

/// Markets × window-centers table of one measure, markets ordered by how much
/// the measure changes over time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapTable {
    pub measure: Measure,
    pub centers: Vec<usize>,
    pub center_dates: Option<Vec<NaiveDate>>,
    pub labels: Vec<String>,
    /// max − min of each market's present values; `None` when all are missing.
    pub change_scores: Vec<Option<f64>>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Rows sorted ascending by change score, ties by label, all-missing rows last.
pub fn heatmap_table(series: &[MeasureSeries], measure: Measure) -> Result<HeatmapTable> {
    let Some(first) = series.first() else {
        return Err(Error::InvalidInput("no measure series given".into()));
    };
    for s in series {
        if !s.config.comparable(&first.config) {
            return Err(Error::ConfigMismatch(format!(
                "`{}` and `{}` use different window settings",
                first.label, s.label
            )));
        }
        if s.centers != first.centers {
            return Err(Error::ConfigMismatch(format!(
                "`{}` and `{}` have different window centers",
                first.label, s.label
            )));
        }
    }

    let mut rows: Vec<(String, Option<f64>, Vec<Option<f64>>)> = series
        .iter()
        .map(|s| {
            let values = s.optional_values(measure).ok_or_else(|| {
                Error::ConfigMismatch(format!("`{}` lacks measure {measure}", s.label))
            })?;
            let present = values.iter().flatten();
            let score = present.clone().copied().reduce(f64::max).map(|max| {
                max - present.copied().fold(f64::INFINITY, f64::min)
            });
            Ok((s.label.clone(), score, values))
        })
        .collect::<Result<_>>()?;

    rows.sort_by(|a, b| {
        let by_score = match (a.1, b.1) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        by_score.then_with(|| a.0.cmp(&b.0))
    });

    Ok(HeatmapTable {
        measure,
        centers: first.centers.clone(),
        center_dates: first.center_dates.clone(),
        labels: rows.iter().map(|r| r.0.clone()).collect(),
        change_scores: rows.iter().map(|r| r.1).collect(),
        rows: rows.into_iter().map(|r| r.2).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> TimeSeries<f64> {
        TimeSeries::new("x", values).unwrap()
    }

    #[test]
    fn window_counts() {
        let v = vec![0.0; 300];
        let starts: Vec<usize> = sliding_windows(&v, 100, 100).unwrap().iter().map(|w| w.0).collect();
        assert_eq!(starts, vec![0, 100, 200]);
        assert_eq!(sliding_windows(&v[..299], 100, 100).unwrap().len(), 2);
        let long = vec![0.0; 6000];
        assert_eq!(sliding_windows(&long, 1500, 100).unwrap().len(), 46);
        assert_eq!(
            sliding_windows(&v[..50], 100, 10).map(|w| w.len()),
            Err(Error::InsufficientData { needed: 100, got: 50 })
        );
        assert!(sliding_windows(&v, 0, 1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(WindowConfig::short().validate().unwrap().is_empty());
        let mut cfg = WindowConfig::short();
        cfg.step = 200;
        assert_eq!(cfg.validate().unwrap().len(), 1);
        cfg.measures.clear();
        assert!(cfg.validate().is_err());
        // 1500 - 3·497 = 9 states
        assert!(WindowConfig::gfc(497).validate().is_err());
        assert!(WindowConfig::gfc(496).validate().is_ok());
    }

    #[test]
    fn variance_examples() {
        let cfg = WindowConfig::short().with_measures(&[Measure::Var]);
        let flat = windowed_measures(&series(vec![3.0; 400]), &cfg).unwrap();
        assert!(flat.get(Measure::Var).unwrap().iter().all(|o| o.value() == Some(0.0)));

        let n = 250;
        let two_point: Vec<f64> = (0..600).map(|i| (i % 2) as f64).collect();
        let out = variance_series(&series(two_point), &WindowConfig::short()).unwrap();
        let expected = 0.25 * n as f64 / (n - 1) as f64;
        for obs in out.get(Measure::Var).unwrap() {
            assert!((obs.value().unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ac1_examples() {
        let alt: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let out = autocorr1_series(&series(alt), &WindowConfig::short()).unwrap();
        for obs in out.get(Measure::Ac1).unwrap() {
            assert!((obs.value().unwrap() + 1.0).abs() <= 1.0 / 250.0 + 1e-12);
        }
        let flat = autocorr1_series(&series(vec![1.0; 300]), &WindowConfig::short()).unwrap();
        assert!(flat
            .get(Measure::Ac1)
            .unwrap()
            .iter()
            .all(|o| o.status() == "DegenerateVariance"));
    }

    #[test]
    fn centers_and_dates() {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let dates: Vec<NaiveDate> = start.iter_days().take(270).collect();
        let ts = TimeSeries::with_dates("x", (0..270).map(|i| (i % 7) as f64).collect(), dates.clone())
            .unwrap();
        let out = windowed_measures(&ts, &WindowConfig::short()).unwrap();
        assert_eq!(out.centers, vec![125, 135, 145]);
        assert_eq!(out.center_dates.unwrap()[1], dates[135]);
        assert!(out.values.values().all(|v| v.len() == 3));
    }

    #[test]
    fn failed_windows_are_kept() {
        // distinct values with a tiny epsilon: the recurrence matrix is the identity
        let mut cfg = WindowConfig::short().with_measures(&[Measure::Det, Measure::Cpl]);
        cfg.normalize_windows = false;
        cfg.epsilon = 1e-6;
        cfg.length = 20;
        cfg.step = 10;
        let values: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let out = windowed_measures(&series(values), &cfg).unwrap();
        assert_eq!(out.len(), 3);
        for m in [Measure::Det, Measure::Cpl] {
            assert!(out.get(m).unwrap().iter().all(|o| o.value().is_none()));
        }
        assert_eq!(out.get(Measure::Det).unwrap()[0].status(), "UndefinedMeasure(DET)");
    }

    fn fake(label: &str, values: Vec<f64>) -> MeasureSeries {
        let cfg = WindowConfig::short().with_measures(&[Measure::Det]);
        MeasureSeries {
            label: label.into(),
            centers: (0..values.len()).map(|i| 125 + 10 * i).collect(),
            center_dates: None,
            values: BTreeMap::from([(
                Measure::Det,
                values.into_iter().map(Observation::Value).collect(),
            )]),
            config: cfg,
        }
    }

    #[test]
    fn heatmap_ordering() {
        let flat = fake("b_flat", vec![0.5, 0.5, 0.5]);
        let varying = fake("a_vary", vec![0.1, 0.9, 0.4]);
        let t = heatmap_table(&[varying.clone(), flat.clone()], Measure::Det).unwrap();
        assert_eq!(t.labels, vec!["b_flat", "a_vary"]);
        assert_eq!(t.rows[1], vec![Some(0.1), Some(0.9), Some(0.4)]);

        let mut twin = flat.clone();
        twin.label = "a_flat".into();
        let t = heatmap_table(&[flat.clone(), twin], Measure::Det).unwrap();
        assert_eq!(t.labels, vec!["a_flat", "b_flat"]);

        let mut other = flat.clone();
        other.config.length = 300;
        assert!(matches!(heatmap_table(&[flat.clone(), other], Measure::Det), Err(Error::ConfigMismatch(_))));
        assert!(matches!(heatmap_table(&[flat], Measure::Cc), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("ENTROPY".parse::<Measure>().is_err());
    }
}
