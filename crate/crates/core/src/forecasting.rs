//! Rolling-window datasets and the one-step-ahead outdoor temperature model.
//!
//! A window holds the `L` most recent records. Its features are the lagged
//! values of each selected column (oldest first), optionally their first
//! differences, and optionally hour-of-day and day-of-year encodings taken
//! at the newest record. The target is the target column one step later.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::{self, BoostConfig, Dataset, Ensemble, LossFunction};
use crate::weather::{Column, WeatherRecord, WeatherSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowSpec {
    /// Number of past steps `L`, the newest included.
    pub lag_count: usize,
    pub feature_columns: Vec<Column>,
    pub target_column: Column,
    /// Hour-of-day and day-of-year as sine/cosine pairs.
    pub calendar: bool,
    /// First differences of each column inside the window.
    pub differences: bool,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            lag_count: 6,
            feature_columns: Column::METEOROLOGICAL.to_vec(),
            target_column: Column::Temp,
            calendar: true,
            differences: false,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lag_count < 1 {
            return Err(Error::arg("lag_count must be >= 1"));
        }
        if self.feature_columns.is_empty() {
            return Err(Error::arg("feature_columns must not be empty"));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        let c = self.feature_columns.len();
        let mut n = c * self.lag_count;
        if self.differences {
            n += c * (self.lag_count - 1);
        }
        if self.calendar {
            n += 4;
        }
        n
    }
}

fn calendar_terms(timestamp: i64) -> [f64; 4] {
    let hour = timestamp.rem_euclid(86_400) as f64 / 3600.0;
    let doy = Utc
        .timestamp_opt(timestamp, 0)
        .single()
        .map(|d| d.ordinal0() as f64)
        .unwrap_or(0.0);
    let h = 2.0 * PI * hour / 24.0;
    let d = 2.0 * PI * (doy + hour / 24.0) / 365.25;
    [h.sin(), h.cos(), d.sin(), d.cos()]
}

/// Feature vector for one window of exactly `lag_count` records.
pub fn window_features(window: &[WeatherRecord], spec: &WindowSpec) -> Result<Vec<f64>> {
    if window.len() != spec.lag_count {
        return Err(Error::arg(format!(
            "window holds {} records, expected {}",
            window.len(),
            spec.lag_count
        )));
    }
    let mut x = Vec::with_capacity(spec.n_features());
    for &col in &spec.feature_columns {
        x.extend(window.iter().map(|r| r.get(col)));
    }
    if spec.differences {
        for &col in &spec.feature_columns {
            x.extend(window.windows(2).map(|w| w[1].get(col) - w[0].get(col)));
        }
    }
    if spec.calendar {
        x.extend(calendar_terms(window[window.len() - 1].timestamp));
    }
    Ok(x)
}

/// One row per forecastable step: features from steps `t−L+1..=t`,
/// target at `t+1`. Yields `len − L` rows.
pub fn build_rolling_windows(series: &WeatherSeries, spec: &WindowSpec) -> Result<Dataset> {
    spec.validate()?;
    let recs = series.records();
    let l = spec.lag_count;
    if recs.len() <= l {
        return Err(Error::arg(format!(
            "series of {} records is too short for {} lags",
            recs.len(),
            l
        )));
    }
    let rows = recs.len() - l;
    let mut features = Vec::with_capacity(rows * spec.n_features());
    let mut targets = Vec::with_capacity(rows);
    for t in (l - 1)..(recs.len() - 1) {
        features.extend(window_features(&recs[t + 1 - l..=t], spec)?);
        targets.push(recs[t + 1].get(spec.target_column));
    }
    Dataset::from_flat(features, spec.n_features(), targets)
}

/// What the ensemble was trained to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// The next value itself.
    Level,
    /// The change from the newest window value to the next value.
    Delta,
}

/// Trained one-step forecaster for the target column.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    pub ensemble: Ensemble,
    pub spec: WindowSpec,
    pub mode: TargetMode,
}

impl Forecaster {
    /// One-step forecast of the target column after the newest record.
    pub fn forecast_step(&self, window: &[WeatherRecord]) -> Result<f64> {
        let x = window_features(window, &self.spec)?;
        let y = self.ensemble.predict(&x)?;
        Ok(match self.mode {
            TargetMode::Level => y,
            TargetMode::Delta => window[window.len() - 1].get(self.spec.target_column) + y,
        })
    }

    /// Recursive multi-step rollout. Each forecast becomes the newest lag;
    /// non-target columns persist their last observed values.
    pub fn rollout(&self, window: &[WeatherRecord], steps: usize, interval: i64) -> Result<Vec<WeatherRecord>> {
        let mut buf = window.to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let next_value = self.forecast_step(&buf[buf.len() - self.spec.lag_count..])?;
            let last = buf[buf.len() - 1];
            let mut rec = WeatherRecord {
                timestamp: last.timestamp + interval,
                ..last
            };
            rec.set(self.spec.target_column, next_value);
            buf.push(rec);
            out.push(rec);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ForecasterDoc {
            window: self.spec.clone(),
            target_mode: self.mode,
            model: serde_json::from_str(&self.ensemble.to_json()?)?,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ForecasterDoc = serde_json::from_str(text)?;
        let ensemble = Ensemble::from_json(&doc.model.to_string())?;
        if ensemble.n_features != doc.window.n_features() {
            return Err(Error::Format("model arity does not match its window spec".into()));
        }
        Ok(Self {
            ensemble,
            spec: doc.window,
            mode: doc.target_mode,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ForecasterDoc {
    window: WindowSpec,
    target_mode: TargetMode,
    model: serde_json::Value,
}

/// Free-function form of [`Forecaster::forecast_step`].
pub fn forecast_step(model: &Forecaster, window: &[WeatherRecord]) -> Result<f64> {
    model.forecast_step(window)
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::arg("predicted and actual differ in length"));
    }
    if actual.len() < 2 {
        return Err(Error::arg("R² needs at least two points"));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::UndefinedVariance);
    }
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Outcome of [`train_weather_model`]. R² values are `None` when the
/// held-out targets have zero variance.
#[derive(Debug, Clone)]
pub struct WeatherModelReport {
    pub forecaster: Forecaster,
    pub r2: Option<f64>,
    pub persistence_r2: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Timestamp of the newest record feeding the last training row.
    pub train_until: i64,
    /// Timestamp of the newest record feeding the first test row.
    pub test_from: i64,
}

pub const MIN_HISTORY_DAYS: i64 = 30;

/// Trains the one-step model on the first 80 % of rows (chronological) and
/// scores the remaining 20 % against a persistence baseline.
pub fn train_weather_model(
    history: &WeatherSeries,
    spec: &WindowSpec,
    cfg: &BoostConfig,
) -> Result<WeatherModelReport> {
    spec.validate()?;
    let span = history.len() as i64 * history.interval();
    if span < MIN_HISTORY_DAYS * 86_400 {
        return Err(Error::arg(format!(
            "weather history spans {:.1} days; at least {MIN_HISTORY_DAYS} required",
            span as f64 / 86_400.0
        )));
    }
    let data = build_rolling_windows(history, spec)?;
    let recs = history.records();
    let l = spec.lag_count;
    let n = data.len();
    let n_train = (n * 4) / 5;
    if n_train == 0 || n_train == n {
        return Err(Error::arg("history too short to split into train and test"));
    }
    // Row i reads records up to index i + l − 1 and targets index i + l.
    let last_value = |i: usize| recs[i + l - 1].get(spec.target_column);
    let delta_targets: Vec<f64> = (0..n).map(|i| data.targets()[i] - last_value(i)).collect();
    let delta = data.with_targets(delta_targets)?;
    let train = delta.slice(0, n_train)?;
    let test = delta.slice(n_train, n)?;
    let ensemble = gbdt::train_with_validation(&train, Some(&test), LossFunction::Squared, cfg)?;
    let forecaster = Forecaster {
        ensemble,
        spec: spec.clone(),
        mode: TargetMode::Delta,
    };

    let actual: Vec<f64> = data.targets()[n_train..].to_vec();
    let predicted = (n_train..n)
        .map(|i| Ok(last_value(i) + forecaster.ensemble.predict(data.row(i))?))
        .collect::<Result<Vec<f64>>>()?;
    let persistence: Vec<f64> = (n_train..n).map(last_value).collect();
    let score = |p: &[f64]| match r_squared(p, &actual) {
        Ok(r) => Ok(Some(r)),
        Err(Error::UndefinedVariance) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(WeatherModelReport {
        r2: score(&predicted)?,
        persistence_r2: score(&persistence)?,
        forecaster,
        n_train,
        n_test: n - n_train,
        train_until: recs[n_train - 1 + l - 1].timestamp,
        test_from: recs[n_train + l - 1].timestamp,
    })
}
