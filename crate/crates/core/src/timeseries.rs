//! Daily series construction and preprocessing transforms.
//!
//! Revision measurements arrive whenever someone commits. They are turned
//! into one value per UTC calendar day by step interpolation: a day with
//! commits takes the value of its latest commit, a day without commits keeps
//! the previous day's value. Nothing is ever blended linearly, since the
//! measured file does not change between commits.

use std::path::Path;

use chrono::{DateTime, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observations at commit times, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct UnevenSeries {
    points: Vec<(i64, f64)>,
}

impl UnevenSeries {
    /// Builds a series from `(unix seconds, value)` pairs in history order.
    ///
    /// Pairs must be non-decreasing in time. Several pairs sharing one
    /// timestamp collapse to the last of them.
    pub fn new(points: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for (ts, value) in points {
            if !value.is_finite() {
                return Err(Error::invalid(format!("non-finite value at {ts}")));
            }
            match out.last_mut() {
                Some(last) if last.0 == ts => last.1 = value,
                Some(last) if last.0 > ts => {
                    return Err(Error::invalid(format!(
                        "timestamps must not decrease ({} then {ts})",
                        last.0
                    )))
                }
                _ => out.push((ts, value)),
            }
        }
        Ok(UnevenSeries { points: out })
    }

    pub fn points(&self) -> &[(i64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// UTC calendar day of a unix timestamp.
pub fn utc_day(timestamp: i64) -> Result<NaiveDate> {
    DateTime::from_timestamp(timestamp, 0)
        .map(|t| t.date_naive())
        .ok_or_else(|| Error::invalid(format!("timestamp {timestamp} out of range")))
}

/// Equidistant daily values starting at `start_day`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub start_day: NaiveDate,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DailyRow {
    date: NaiveDate,
    value: f64,
}

impl DailySeries {
    pub fn new(start_day: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite daily value {bad}")));
        }
        Ok(DailySeries { start_day, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn day(&self, index: usize) -> NaiveDate {
        self.start_day + Days::new(index as u64)
    }

    pub fn last_day(&self) -> NaiveDate {
        self.day(self.values.len().saturating_sub(1))
    }

    /// Index of `date`, which may lie outside the series.
    pub fn offset_of(&self, date: NaiveDate) -> i64 {
        (date - self.start_day).num_days()
    }

    /// Forward-fills the last value up to and including `end`.
    pub fn extend_to(&mut self, end: NaiveDate) {
        let Some(&last) = self.values.last() else {
            return;
        };
        let target = self.offset_of(end) + 1;
        while (self.values.len() as i64) < target {
            self.values.push(last);
        }
    }

    /// Days from `self.start_day + from` for `len` values.
    fn slice(&self, from: usize, len: usize) -> DailySeries {
        DailySeries {
            start_day: self.day(from),
            values: self.values[from..from + len].to_vec(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        for (i, &value) in self.values.iter().enumerate() {
            writer.serialize(DailyRow {
                date: self.day(i),
                value,
            })?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let mut reader = csv::Reader::from_path(path)?;
        let rows = reader.deserialize().collect::<Result<Vec<DailyRow>, _>>()?;
        let first = rows.first().ok_or(Error::EmptySeries)?;
        for (i, row) in rows.iter().enumerate() {
            if row.date != first.date + Days::new(i as u64) {
                return Err(Error::invalid(format!("{}: dates are not consecutive at row {}", path.display(), i + 2)));
            }
        }
        DailySeries::new(first.date, rows.iter().map(|r| r.value).collect())
    }
}

/// Step interpolation to one value per UTC day, first to last commit day.
pub fn to_daily(series: &UnevenSeries) -> Result<DailySeries> {
    let (&(first_ts, _), &(last_ts, _)) = match (series.points.first(), series.points.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptySeries),
    };
    let start = utc_day(first_ts)?;
    let len = (utc_day(last_ts)? - start).num_days() as usize + 1;
    let mut values = Vec::with_capacity(len);
    let mut current = series.points[0].1;
    let mut points = series.points.iter().peekable();
    for i in 0..len {
        let day = start + Days::new(i as u64);
        while let Some(&&(ts, v)) = points.peek() {
            if utc_day(ts)? > day {
                break;
            }
            current = v;
            points.next();
        }
        values.push(current);
    }
    DailySeries::new(start, values)
}

/// Three contiguous segments of one daily series.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSeries {
    pub train: DailySeries,
    pub validation: DailySeries,
    pub test: DailySeries,
    /// Last day of training and last day of validation.
    pub boundaries: (NaiveDate, NaiveDate),
}

impl SplitSeries {
    /// Concatenation of the segments; equals the source series.
    pub fn concat(&self) -> DailySeries {
        let mut values = self.train.values.clone();
        values.extend_from_slice(&self.validation.values);
        values.extend_from_slice(&self.test.values);
        DailySeries {
            start_day: self.train.start_day,
            values,
        }
    }
}

/// Splits into training (days ≤ `b1`), validation (`b1` < day ≤ `b2`) and
/// test (day > `b2`).
pub fn split_by_dates(series: &DailySeries, b1: NaiveDate, b2: NaiveDate) -> Result<SplitSeries> {
    let last = series.last_day();
    if b1 < series.start_day {
        return Err(Error::BoundaryOutOfRange { name: "b1", date: b1.to_string() });
    }
    if b1 >= last {
        return Err(Error::EmptySegment("validation"));
    }
    if b2 <= b1 {
        return Err(Error::BoundaryOutOfRange { name: "b2", date: b2.to_string() });
    }
    if b2 == last {
        return Err(Error::EmptySegment("test"));
    }
    if b2 > last {
        return Err(Error::BoundaryOutOfRange { name: "b2", date: b2.to_string() });
    }
    let train_len = series.offset_of(b1) as usize + 1;
    let val_len = (b2 - b1).num_days() as usize;
    let test_len = series.len() - train_len - val_len;
    Ok(SplitSeries {
        train: series.slice(0, train_len),
        validation: series.slice(train_len, val_len),
        test: series.slice(train_len + val_len, test_len),
        boundaries: (b1, b2),
    })
}

/// Result of d-fold differencing with what is needed to undo it.
#[derive(Debug, Clone, PartialEq)]
pub struct Differenced {
    pub values: Vec<f64>,
    pub order: usize,
    /// First value of each intermediate level, level 0 = original series.
    heads: Vec<f64>,
    /// Last value of each intermediate level.
    tails: Vec<f64>,
}

impl Differenced {
    /// Reconstructs the original series.
    pub fn invert(&self) -> Vec<f64> {
        let mut level = self.values.clone();
        for &head in self.heads.iter().rev() {
            let mut up = Vec::with_capacity(level.len() + 1);
            let mut acc = head;
            up.push(acc);
            for v in &level {
                acc += v;
                up.push(acc);
            }
            level = up;
        }
        level
    }

    /// Maps values that continue the differenced series back to values that
    /// continue the original series.
    pub fn integrate(&self, continuation: &[f64]) -> Vec<f64> {
        let mut level = continuation.to_vec();
        for &tail in self.tails.iter().rev() {
            let mut acc = tail;
            for v in level.iter_mut() {
                acc += *v;
                *v = acc;
            }
        }
        level
    }
}

pub fn difference(values: &[f64], order: usize) -> Result<Differenced> {
    if order > 2 {
        return Err(Error::invalid(format!("differencing order {order} not in 0..=2")));
    }
    if values.len() <= order {
        return Err(Error::SeriesTooShort { needed: order + 1, got: values.len() });
    }
    let mut heads = Vec::with_capacity(order);
    let mut tails = Vec::with_capacity(order);
    let mut level = values.to_vec();
    for _ in 0..order {
        heads.push(level[0]);
        tails.push(*level.last().expect("non-empty"));
        level = level.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(Differenced { values: level, order, heads, tails })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: f64,
    pub max: f64,
}

impl NormalizationParams {
    pub fn fit(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if values.is_empty() {
            NormalizationParams { min: 0.0, max: 0.0 }
        } else {
            NormalizationParams { min, max }
        }
    }

    fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.range() > 0.0 {
            (x - self.min) / self.range()
        } else {
            0.0
        }
    }

    pub fn invert(&self, x: f64) -> f64 {
        x * self.range() + self.min
    }
}

/// Min-max scaling to [0, 1]. A constant series maps to zeros.
pub fn normalize(values: &[f64]) -> (Vec<f64>, NormalizationParams) {
    let params = NormalizationParams::fit(values);
    (values.iter().map(|&v| params.apply(v)).collect(), params)
}

pub fn denormalize(values: &[f64], params: &NormalizationParams) -> Vec<f64> {
    values.iter().map(|&v| params.invert(v)).collect()
}

/// Sliding windows of `lag` values, each paired with the value after it.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDataset {
    pub lag: usize,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl LaggedDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn make_lagged(values: &[f64], lag: usize) -> Result<LaggedDataset> {
    if lag == 0 {
        return Err(Error::invalid("lag must be at least 1"));
    }
    if values.len() <= lag {
        return Err(Error::SeriesTooShort { needed: lag + 1, got: values.len() });
    }
    let rows = values
        .windows(lag + 1)
        .map(|w| (w[..lag].to_vec(), w[lag]))
        .collect();
    Ok(LaggedDataset { lag, rows })
}
