//! Weather records, CSV ingestion with linear resampling, and a seeded
//! synthetic generator with annual and diurnal cycles.
//!
//! CSV layout: `timestamp,temp,dew,hum,pres,winds[,solar]` with ISO-8601
//! UTC timestamps. Timestamps are treated as local clock time by the
//! comfort and occupancy schedules.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_INTERVAL_S: i64 = 600;
const REQUIRED_COLUMNS: [&str; 6] = ["timestamp", "temp", "dew", "hum", "pres", "winds"];

/// One observation: temperatures in °C, humidity %, pressure hPa,
/// wind m/s, global irradiance W/m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub timestamp: i64,
    pub temp: f64,
    pub dew: f64,
    pub hum: f64,
    pub pres: f64,
    pub winds: f64,
    #[serde(default)]
    pub solar: f64,
}

impl WeatherRecord {
    /// Overcast, still air at `temp` with saturated-free defaults. Handy for tests.
    pub fn calm(timestamp: i64, temp: f64) -> Self {
        Self {
            timestamp,
            temp,
            dew: temp - 3.0,
            hum: relative_humidity(temp, temp - 3.0),
            pres: 1013.0,
            winds: 0.0,
            solar: 0.0,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let fields = [
            ("temp", self.temp),
            ("dew", self.dew),
            ("hum", self.hum),
            ("pres", self.pres),
            ("winds", self.winds),
            ("solar", self.solar),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
        }
        if !(0.0..=100.0).contains(&self.hum) {
            return Err(format!("hum {} outside [0, 100]", self.hum));
        }
        if !(800.0..=1100.0).contains(&self.pres) {
            return Err(format!("pres {} outside [800, 1100]", self.pres));
        }
        if self.winds < 0.0 {
            return Err(format!("winds {} negative", self.winds));
        }
        if self.dew > self.temp + 0.5 {
            return Err(format!("dew {} exceeds temp {} + 0.5", self.dew, self.temp));
        }
        if self.solar < 0.0 {
            return Err(format!("solar {} negative", self.solar));
        }
        Ok(())
    }

    /// Value of a named column.
    pub fn get(&self, column: Column) -> f64 {
        match column {
            Column::Temp => self.temp,
            Column::Dew => self.dew,
            Column::Hum => self.hum,
            Column::Pres => self.pres,
            Column::Winds => self.winds,
            Column::Solar => self.solar,
        }
    }

    pub fn set(&mut self, column: Column, value: f64) {
        match column {
            Column::Temp => self.temp = value,
            Column::Dew => self.dew = value,
            Column::Hum => self.hum = value,
            Column::Pres => self.pres = value,
            Column::Winds => self.winds = value,
            Column::Solar => self.solar = value,
        }
    }

    fn lerp(a: &Self, b: &Self, timestamp: i64) -> Self {
        let w = (timestamp - a.timestamp) as f64 / (b.timestamp - a.timestamp) as f64;
        let mix = |x: f64, y: f64| x + w * (y - x);
        Self {
            timestamp,
            temp: mix(a.temp, b.temp),
            dew: mix(a.dew, b.dew),
            hum: mix(a.hum, b.hum),
            pres: mix(a.pres, b.pres),
            winds: mix(a.winds, b.winds),
            solar: mix(a.solar, b.solar),
        }
    }
}

/// Weather columns that can feed a forecasting window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    Temp,
    Dew,
    Hum,
    Pres,
    Winds,
    Solar,
}

impl Column {
    /// The meteorological columns every weather file carries.
    pub const METEOROLOGICAL: [Column; 5] = [Column::Temp, Column::Dew, Column::Hum, Column::Pres, Column::Winds];
}

/// Magnus-formula relative humidity (%) from air and dew-point temperature (°C).
pub fn relative_humidity(temp: f64, dew: f64) -> f64 {
    let gamma = |t: f64| 17.625 * t / (243.04 + t);
    (100.0 * (gamma(dew) - gamma(temp)).exp()).clamp(0.0, 100.0)
}

/// Uniformly spaced, strictly increasing weather records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    records: Vec<WeatherRecord>,
    interval: i64,
}

impl WeatherSeries {
    /// Validates spacing and record invariants.
    pub fn new(records: Vec<WeatherRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::arg("weather series is empty"));
        }
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|m| Error::arg(format!("record {i}: {m}")))?;
        }
        let interval = if records.len() > 1 {
            records[1].timestamp - records[0].timestamp
        } else {
            DEFAULT_INTERVAL_S
        };
        if interval <= 0 {
            return Err(Error::arg("timestamps must be strictly increasing"));
        }
        for (i, w) in records.windows(2).enumerate() {
            if w[1].timestamp - w[0].timestamp != interval {
                return Err(Error::arg(format!(
                    "non-uniform spacing between records {} and {}",
                    i,
                    i + 1
                )));
            }
        }
        Ok(Self { records, interval })
    }

    pub fn records(&self) -> &[WeatherRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<WeatherRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Spacing between consecutive records (s).
    pub fn interval(&self) -> i64 {
        self.interval
    }

    pub fn start(&self) -> i64 {
        self.records[0].timestamp
    }

    pub fn end(&self) -> i64 {
        self.records[self.records.len() - 1].timestamp
    }

    /// Index of the record at exactly `timestamp`, if present.
    pub fn index_of(&self, timestamp: i64) -> Option<usize> {
        let offset = timestamp - self.start();
        if offset < 0 || offset % self.interval != 0 {
            return None;
        }
        let idx = (offset / self.interval) as usize;
        (idx < self.records.len()).then_some(idx)
    }

    /// Sub-series over `[from, until)` by timestamp.
    pub fn slice_time(&self, from: i64, until: i64) -> Result<Self> {
        let recs: Vec<_> = self
            .records
            .iter()
            .filter(|r| r.timestamp >= from && r.timestamp < until)
            .copied()
            .collect();
        if recs.is_empty() {
            return Err(Error::arg("time slice contains no records"));
        }
        Ok(Self {
            records: recs,
            interval: self.interval,
        })
    }

    /// Linear interpolation onto a `dt` grid starting at the first record.
    pub fn resample(&self, dt: i64) -> Result<Self> {
        if dt <= 0 {
            return Err(Error::arg("resample interval must be > 0"));
        }
        if dt == self.interval {
            return Ok(self.clone());
        }
        let start = self.start();
        let end = self.end();
        let mut out = Vec::with_capacity(((end - start) / dt + 1) as usize);
        let mut t = start;
        let mut seg = 0;
        while t <= end {
            while seg + 1 < self.records.len() && self.records[seg + 1].timestamp < t {
                seg += 1;
            }
            let a = &self.records[seg];
            let rec = if a.timestamp == t || seg + 1 == self.records.len() {
                WeatherRecord { timestamp: t, ..*a }
            } else {
                let b = &self.records[seg + 1];
                if b.timestamp == t {
                    *b
                } else {
                    WeatherRecord::lerp(a, b, t)
                }
            };
            out.push(rec);
            t += dt;
        }
        Self::new(out)
    }
}

pub fn parse_timestamp(s: &str) -> std::result::Result<i64, String> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(Utc.from_utc_datetime(&naive).timestamp());
        }
    }
    Err(format!("unparsable timestamp `{s}`"))
}

pub fn format_timestamp(ts: i64) -> String {
    match Utc.timestamp_opt(ts, 0).single() {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.to_string(),
    }
}

/// Parses a weather CSV from a reader. `origin` labels errors.
pub fn read_weather_csv<R: Read>(reader: R, origin: &str) -> Result<WeatherSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = find(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let solar_idx = find("solar");
    for h in headers.iter() {
        if !REQUIRED_COLUMNS.contains(&h) && h != "solar" {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: 1,
                msg: format!("unexpected column `{h}`"),
            });
        }
    }

    let mut records: Vec<WeatherRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let err = |msg: String| Error::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        let row = row.map_err(|e| err(e.to_string()))?;
        let field = |j: usize, name: &str| -> Result<f64> {
            let raw = row.get(j).ok_or_else(|| err(format!("missing field `{name}`")))?;
            raw.parse::<f64>()
                .map_err(|_| err(format!("field `{name}`: cannot parse `{raw}` as a number")))
        };
        let timestamp = parse_timestamp(row.get(idx[0]).unwrap_or("")).map_err(err)?;
        let solar = match solar_idx {
            Some(j) if !row.get(j).unwrap_or("").is_empty() => field(j, "solar")?,
            _ => 0.0,
        };
        let rec = WeatherRecord {
            timestamp,
            temp: field(idx[1], "temp")?,
            dew: field(idx[2], "dew")?,
            hum: field(idx[3], "hum")?,
            pres: field(idx[4], "pres")?,
            winds: field(idx[5], "winds")?,
            solar,
        };
        rec.validate().map_err(err)?;
        if let Some(prev) = records.last() {
            if rec.timestamp <= prev.timestamp {
                return Err(err("timestamps not strictly increasing".into()));
            }
            if records.len() >= 2 {
                let interval = records[1].timestamp - records[0].timestamp;
                if rec.timestamp - prev.timestamp != interval {
                    return Err(err(format!(
                        "non-uniform spacing: expected {interval} s, found {} s",
                        rec.timestamp - prev.timestamp
                    )));
                }
            }
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            msg: "no data rows".into(),
        });
    }
    WeatherSeries::new(records)
}

/// Loads a weather CSV and resamples it onto a `dt`-second grid.
pub fn load_weather_csv(path: impl AsRef<Path>, dt: i64) -> Result<WeatherSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_weather_csv(file, &path.display().to_string())?.resample(dt)
}

pub fn write_weather_csv<W: Write>(series: &WeatherSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "temp", "dew", "hum", "pres", "winds", "solar"])?;
    for r in series.records() {
        w.write_record([
            format_timestamp(r.timestamp),
            r.temp.to_string(),
            r.dew.to_string(),
            r.hum.to_string(),
            r.pres.to_string(),
            r.winds.to_string(),
            r.solar.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// 2021-01-01T00:00:00Z.
pub const SYNTHETIC_EPOCH: i64 = 1_609_459_200;

/// Shape of the synthetic climate. Defaults resemble a temperate western
/// European site: January mean near 2.5 °C, July near 18.5 °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticClimate {
    pub annual_mean: f64,
    pub annual_amplitude: f64,
    pub diurnal_amplitude_winter: f64,
    pub diurnal_amplitude_summer: f64,
    /// Standard deviation of the slow synoptic anomaly (°C).
    pub anomaly_sd: f64,
    /// Correlation time of the synoptic anomaly (h).
    pub anomaly_hours: f64,
    /// Smoothing time constant applied to the anomaly (h).
    pub smoothing_hours: f64,
    /// Scales every stochastic component; 0 yields a purely periodic climate.
    pub noise_scale: f64,
    pub solar_peak_winter: f64,
    pub solar_peak_summer: f64,
}

impl Default for SyntheticClimate {
    fn default() -> Self {
        Self {
            annual_mean: 10.5,
            annual_amplitude: 8.0,
            diurnal_amplitude_winter: 2.5,
            diurnal_amplitude_summer: 5.0,
            anomaly_sd: 3.0,
            anomaly_hours: 48.0,
            smoothing_hours: 2.0,
            noise_scale: 1.0,
            solar_peak_winter: 250.0,
            solar_peak_summer: 800.0,
        }
    }
}

impl SyntheticClimate {
    pub fn periodic() -> Self {
        Self {
            noise_scale: 0.0,
            ..Self::default()
        }
    }
}

/// Discrete AR(1) with correlation time `tau` (s) and stationary deviation `sd`.
struct Ar1 {
    rho: f64,
    innovation: f64,
    value: f64,
}

impl Ar1 {
    fn new(tau: f64, sd: f64, dt: f64, rng: &mut ChaCha8Rng) -> Self {
        let rho = (-dt / tau).exp();
        let z: f64 = StandardNormal.sample(rng);
        Self {
            rho,
            innovation: sd * (1.0 - rho * rho).sqrt(),
            value: sd * z,
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.value = self.rho * self.value + self.innovation * z;
        self.value
    }
}

/// Deterministic synthetic weather from [`SYNTHETIC_EPOCH`].
pub fn generate_synthetic_weather(seed: u64, days: u32, dt: i64) -> Result<WeatherSeries> {
    generate_synthetic_weather_from(seed, SYNTHETIC_EPOCH, days, dt, &SyntheticClimate::default())
}

/// Deterministic synthetic weather: annual plus diurnal sinusoids with
/// seeded autoregressive anomalies on every column.
pub fn generate_synthetic_weather_from(
    seed: u64,
    start: i64,
    days: u32,
    dt: i64,
    climate: &SyntheticClimate,
) -> Result<WeatherSeries> {
    if days < 1 {
        return Err(Error::arg("days must be >= 1"));
    }
    if dt <= 0 || 86_400 % dt != 0 {
        return Err(Error::arg("dt must be a positive divisor of one day"));
    }
    let n = days as usize * (86_400 / dt) as usize;
    let dtf = dt as f64;
    let s = climate.noise_scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut anomaly = Ar1::new(climate.anomaly_hours * 3600.0, climate.anomaly_sd * s, dtf, &mut rng);
    let alpha = (-dtf / (climate.smoothing_hours * 3600.0)).exp();
    let mut smooth = anomaly.value;
    let mut depression = Ar1::new(12.0 * 3600.0, 1.2 * s, dtf, &mut rng);
    let mut pressure = Ar1::new(30.0 * 3600.0, 8.0 * s, dtf, &mut rng);
    let mut wind = Ar1::new(6.0 * 3600.0, 1.8 * s, dtf, &mut rng);
    let mut cloud = Ar1::new(8.0 * 3600.0, 1.0 * s, dtf, &mut rng);

    let mut records = Vec::with_capacity(n);
    for k in 0..n {
        let ts = start + k as i64 * dt;
        let day = ts.div_euclid(86_400) as f64;
        let hour = ts.rem_euclid(86_400) as f64 / 3600.0;
        // Year phase relative to the mid-January minimum.
        let year_phase = 2.0 * PI * ((day + hour / 24.0 - 15.0) / 365.25);
        let summer = 0.5 * (1.0 - year_phase.cos());

        let a = anomaly.next(&mut rng);
        smooth = alpha * smooth + (1.0 - alpha) * a;

        let diurnal_amp = climate.diurnal_amplitude_winter
            + summer * (climate.diurnal_amplitude_summer - climate.diurnal_amplitude_winter);
        let temp = climate.annual_mean - climate.annual_amplitude * year_phase.cos()
            + diurnal_amp * (2.0 * PI * (hour - 15.0) / 24.0).cos()
            + smooth;

        let daylight = 0.5 * (1.0 + (2.0 * PI * (hour - 14.0) / 24.0).cos());
        let dep = (2.0 + 3.0 * daylight + depression.next(&mut rng).abs()).max(0.0);
        let dew = temp - dep;

        let pres = (1013.0 + pressure.next(&mut rng)).clamp(960.0, 1050.0);
        let winds = (3.5 + wind.next(&mut rng)).abs();

        // Day length between 8 h (winter) and 16 h (summer), centred on noon.
        let day_len = 8.0 + 8.0 * summer;
        let sunrise = 12.0 - day_len / 2.0;
        let clear = if hour > sunrise && hour < sunrise + day_len {
            (PI * (hour - sunrise) / day_len).sin()
        } else {
            0.0
        };
        let peak = climate.solar_peak_winter + summer * (climate.solar_peak_summer - climate.solar_peak_winter);
        let cloudiness = (0.55 + 0.3 * cloud.next(&mut rng)).clamp(0.15, 1.0);
        let solar = (peak * clear * cloudiness).max(0.0);

        records.push(WeatherRecord {
            timestamp: ts,
            temp,
            dew,
            hum: relative_humidity(temp, dew),
            pres,
            winds,
            solar,
        });
    }
    WeatherSeries::new(records)
}
