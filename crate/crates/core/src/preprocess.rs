//! Ingestion and conditioning of dated price series.
//!
//! The usual chain is `read_price_csv` → [`forward_fill`] → [`detrend`] →
//! [`uniform_deviate`], which turns closing prices into a series of ranks in
//! (0, 1) with the long-term trend removed.

use std::io::Read;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dated closing prices as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries<T> {
    label: String,
    entries: Vec<(NaiveDate, T)>,
}

impl<T: Scalar> RawSeries<T> {
    /// Validates strictly increasing dates and finite positive prices.
    pub fn new(label: impl Into<String>, entries: Vec<(NaiveDate, T)>) -> Result<Self> {
        for (k, &(date, price)) in entries.iter().enumerate() {
            if !price.is_finite() || price <= T::zero() {
                return Err(Error::InvalidInput(format!(
                    "price on {date} must be finite and positive"
                )));
            }
            if k > 0 && entries[k - 1].0 >= date {
                return Err(Error::InvalidInput(format!(
                    "dates must be strictly increasing ({} then {date})",
                    entries[k - 1].0
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            entries,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &[(NaiveDate, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.entries.first().map(|e| e.0)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.entries.last().map(|e| e.0)
    }
}

/// Reads a `date,close` CSV with a header row and ISO-8601 dates.
///
/// Line numbers in errors are 1-based physical lines, the header being line 1.
pub fn read_price_csv<R: Read>(reader: R, label: impl Into<String>) -> Result<RawSeries<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().all(str::is_empty) {
        return Err(Error::EmptySeries);
    }
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names.len() < 2 || names[0] != "date" || names[1] != "close" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `date,close`, found `{}`", names.join(",")),
        });
    }

    let mut entries: Vec<(NaiveDate, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let date_field = record.get(0).unwrap_or_default();
        let date = NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|_| Error::Parse {
            line,
            message: format!("unparseable date `{date_field}`"),
        })?;
        let price_field = record.get(1).unwrap_or_default();
        let price: f64 = price_field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("unparseable price `{price_field}`"),
        })?;
        if !price.is_finite() || price <= 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("price must be positive, got `{price_field}`"),
            });
        }
        if let Some(&(prev, _)) = entries.last() {
            if date <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("date {date} does not follow {prev}"),
                });
            }
        }
        entries.push((date, price));
    }
    if entries.is_empty() {
        return Err(Error::EmptySeries);
    }
    RawSeries::new(label, entries)
}

/// Which days of a span carry a value after forward filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Calendar {
    /// Every calendar day.
    Daily,
    /// Monday to Friday.
    Weekdays,
}

impl Calendar {
    /// Days of this calendar in `[start, end]`.
    pub fn days(self, start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
        start
            .iter_days()
            .take_while(|d| *d <= end)
            .filter(|d| match self {
                Calendar::Daily => true,
                Calendar::Weekdays => !matches!(d.weekday(), Weekday::Sat | Weekday::Sun),
            })
            .collect()
    }
}

impl std::str::FromStr for Calendar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "daily" => Ok(Calendar::Daily),
            "weekdays" | "business" => Ok(Calendar::Weekdays),
            other => Err(Error::InvalidInput(format!("unknown calendar `{other}`"))),
        }
    }
}

/// Uniformly indexed series of finite values, optionally dated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries<T> {
    label: String,
    values: Vec<T>,
    dates: Option<Vec<NaiveDate>>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(label: impl Into<String>, values: Vec<T>) -> Result<Self> {
        Self::validate(&values)?;
        Ok(Self {
            label: label.into(),
            values,
            dates: None,
        })
    }

    pub fn with_dates(
        label: impl Into<String>,
        values: Vec<T>,
        dates: Vec<NaiveDate>,
    ) -> Result<Self> {
        Self::validate(&values)?;
        if dates.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} dates for {} values",
                dates.len(),
                values.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "dates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            label: label.into(),
            values,
            dates: Some(dates),
        })
    }

    fn validate(values: &[T]) -> Result<()> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if values.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("value at index {k} is not finite")));
        }
        Ok(())
    }

    /// Same label and dates, new values of equal length.
    fn derive(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            label: self.label.clone(),
            values,
            dates: self.dates.clone(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn start_date(&self) -> Option<NaiveDate> {
        self.dates.as_ref().map(|d| d[0])
    }

    pub fn date_at(&self, index: usize) -> Option<NaiveDate> {
        self.dates.as_ref().and_then(|d| d.get(index).copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Contiguous sub-series `[start, end)`, keeping dates.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidInput(format!(
                "slice {start}..{end} out of range for length {}",
                self.len()
            )));
        }
        let values = self.values[start..end].to_vec();
        match &self.dates {
            Some(d) => Self::with_dates(self.label.clone(), values, d[start..end].to_vec()),
            None => Self::new(self.label.clone(), values),
        }
    }
}

impl<T> AsRef<[T]> for TimeSeries<T> {
    fn as_ref(&self) -> &[T] {
        &self.values
    }
}

/// Resamples `raw` onto `calendar`, carrying the last observed price over gaps.
///
/// Calendar days before the first observation or after the last are ignored,
/// except that the first calendar day must itself carry an observation.
pub fn forward_fill<T: Scalar>(raw: &RawSeries<T>, calendar: &[NaiveDate]) -> Result<TimeSeries<T>> {
    let (first, last) = match (raw.first_date(), raw.last_date()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptySeries),
    };
    let Some(&cal_first) = calendar.first() else {
        return Err(Error::InvalidInput("calendar is empty".into()));
    };
    if cal_first != first {
        return Err(Error::LeadingGap(cal_first));
    }

    let entries = raw.entries();
    let mut values = Vec::new();
    let mut dates = Vec::new();
    let mut cursor = 0;
    let mut current = entries[0].1;
    let mut previous_day: Option<NaiveDate> = None;
    for &day in calendar.iter().take_while(|d| **d <= last) {
        if previous_day.is_some_and(|p| p >= day) {
            return Err(Error::InvalidInput(
                "calendar must be strictly increasing".into(),
            ));
        }
        previous_day = Some(day);
        while cursor < entries.len() && entries[cursor].0 <= day {
            current = entries[cursor].1;
            cursor += 1;
        }
        values.push(current);
        dates.push(day);
    }
    if values.len() == 1 {
        // a single-day span is a valid fill, though too short for a TimeSeries
        return Err(Error::InsufficientData { needed: 2, got: 1 });
    }
    TimeSeries::with_dates(raw.label(), values, dates)
}

/// Forward-fills `raw` onto the days of `calendar` spanning its own dates.
pub fn forward_fill_calendar<T: Scalar>(
    raw: &RawSeries<T>,
    calendar: Calendar,
) -> Result<TimeSeries<T>> {
    let (first, last) = match (raw.first_date(), raw.last_date()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptySeries),
    };
    let days = calendar.days(first, last);
    forward_fill(raw, &days)
}

/// Forward fill returning plain values, accepting a one-day span.
pub fn forward_fill_values<T: Scalar>(raw: &RawSeries<T>, calendar: &[NaiveDate]) -> Result<Vec<T>> {
    match forward_fill(raw, calendar) {
        Ok(ts) => Ok(ts.values),
        Err(Error::InsufficientData { got: 1, .. }) => Ok(vec![raw.entries()[0].1]),
        Err(e) => Err(e),
    }
}

/// Residual of `values` after removing its least-squares polynomial of `degree`.
///
/// Positions are mapped onto [0, 1] and the basis is orthonormalised on the
/// sample points (Gram-Schmidt, applied twice), so long series stay well
/// conditioned.
pub fn detrend_values<T: Scalar>(values: &[T], degree: usize) -> Result<Vec<T>> {
    let n = values.len();
    if n <= degree + 1 {
        return Err(Error::InsufficientData {
            needed: degree + 2,
            got: n,
        });
    }
    let scale = T::from_usize_lossy(n - 1);
    let positions: Vec<T> = (0..n).map(|i| T::from_usize_lossy(i) / scale).collect();

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(degree + 1);
    for power in 0..=degree {
        let mut column: Vec<T> = match basis.last() {
            // multiplying the previous orthonormal column by t keeps the
            // candidate well scaled compared to raw monomials
            Some(prev) if power > 0 => prev.iter().zip(&positions).map(|(&p, &t)| p * t).collect(),
            _ => vec![T::one(); n],
        };
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(&column, q);
                for (c, &qv) in column.iter_mut().zip(q) {
                    *c -= proj * qv;
                }
            }
        }
        let norm = dot(&column, &column).sqrt();
        if !(norm > T::zero()) {
            return Err(Error::InsufficientData {
                needed: degree + 2,
                got: n,
            });
        }
        column.iter_mut().for_each(|c| *c /= norm);
        basis.push(column);
    }

    let mut residual = values.to_vec();
    for _ in 0..2 {
        for q in &basis {
            let proj = dot(&residual, q);
            for (r, &qv) in residual.iter_mut().zip(q) {
                *r -= proj * qv;
            }
        }
    }
    Ok(residual)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Series minus its least-squares polynomial trend of the given degree.
pub fn detrend<T: Scalar>(ts: &TimeSeries<T>, degree: usize) -> Result<TimeSeries<T>> {
    Ok(ts.derive(detrend_values(ts.values(), degree)?))
}

/// Replaces each value by `rank / (n + 1)`, ranks 1-based with ties broken by index.
pub fn uniform_deviate_values<T: Scalar>(values: &[T]) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps equal values in index order
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let denom = T::from_usize_lossy(n + 1);
    let mut out = vec![T::zero(); n];
    for (rank0, &idx) in order.iter().enumerate() {
        out[idx] = T::from_usize_lossy(rank0 + 1) / denom;
    }
    out
}

pub fn uniform_deviate<T: Scalar>(ts: &TimeSeries<T>) -> TimeSeries<T> {
    ts.derive(uniform_deviate_values(ts.values()))
}
