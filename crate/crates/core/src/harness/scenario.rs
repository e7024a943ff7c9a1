use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::{ComfortSchedule, DfcConfig, PidState};
use crate::error::{Error, Result};
use crate::forecasting::{train_weather_model, Forecaster, WindowSpec};
use crate::gbdt::BoostConfig;
use crate::thermal::{GainsSchedule, HeatPumpParams, Simulator, ThermalParams};
use crate::weather::{
    format_timestamp, generate_synthetic_weather_from, load_weather_csv, parse_timestamp, SyntheticClimate,
    WeatherSeries,
};

const DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Rc1,
    Rc2,
    Dfc,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Rc1, Strategy::Rc2, Strategy::Dfc];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Rc1 => "rc1",
            Strategy::Rc2 => "rc2",
            Strategy::Dfc => "dfc",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rc1" => Some(Strategy::Rc1),
            "rc2" => Some(Strategy::Rc2),
            "dfc" => Some(Strategy::Dfc),
            _ => None,
        }
    }
}

/// Outdoor weather for the run. Exactly one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherSource {
    /// Generated from the scenario seed.
    Synthetic(SyntheticClimate),
    /// Measured series; relative paths resolve against the scenario file.
    Csv { path: PathBuf },
}

impl Default for WeatherSource {
    fn default() -> Self {
        WeatherSource::Synthetic(SyntheticClimate::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecasterSettings {
    /// Without a forecaster the planner assumes persistent weather.
    pub enabled: bool,
    pub window: WindowSpec,
    pub boost: BoostConfig,
}

impl Default for ForecasterSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            window: WindowSpec::default(),
            boost: BoostConfig {
                n_iterations: 100,
                ..BoostConfig::default()
            },
        }
    }
}

/// Controller choice plus every controller knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategySpec {
    pub kind: Strategy,
    pub pid: PidState,
    /// RC2 compares the setpoint with a simulated prediction instead of the
    /// measurement.
    pub rc2_predictive: bool,
    /// Steps RC2 looks ahead when predictive.
    pub rc2_lookahead: usize,
    pub dfc: DfcConfig,
    pub forecaster: ForecasterSettings,
}

impl Default for StrategySpec {
    fn default() -> Self {
        Self {
            kind: Strategy::Rc1,
            pid: PidState::default(),
            rc2_predictive: true,
            rc2_lookahead: 1,
            dfc: DfcConfig::default(),
            forecaster: ForecasterSettings::default(),
        }
    }
}

/// One closed-loop experiment, serialised as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub name: String,
    pub thermal: ThermalParams,
    pub heat_pump: HeatPumpParams,
    pub gains: GainsSchedule,
    pub comfort: ComfortSchedule,
    /// Control step (s).
    pub dt: f64,
    pub duration_days: u32,
    /// First controlled instant, `YYYY-MM-DDTHH:MM:SS`.
    pub start: String,
    pub weather: WeatherSource,
    /// Days simulated before `start` under the same strategy and left out of
    /// every metric.
    pub spinup_days: u32,
    /// Weather days before the spin-up used to train the forecaster.
    pub history_days: u32,
    pub seed: u64,
    pub strategy: StrategySpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "reference".into(),
            thermal: ThermalParams::default(),
            heat_pump: HeatPumpParams::default(),
            gains: GainsSchedule::default(),
            comfort: ComfortSchedule::default(),
            dt: 600.0,
            duration_days: 30,
            start: "2021-01-11T00:00:00".into(),
            weather: WeatherSource::default(),
            spinup_days: 7,
            history_days: 42,
            seed: 7,
            strategy: StrategySpec::default(),
        }
    }
}

impl Scenario {
    pub fn with_strategy(&self, kind: Strategy) -> Self {
        let mut s = self.clone();
        s.strategy.kind = kind;
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a scenario file; a relative CSV weather path is taken relative
    /// to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let WeatherSource::Csv { path: csv } = &mut s.weather {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::arg("dt must be > 0"));
        }
        if self.dt.fract() != 0.0 || DAY % self.dt as i64 != 0 {
            return Err(Error::arg("dt must be a whole number of seconds dividing one day"));
        }
        if self.duration_days < 1 {
            return Err(Error::arg("duration must be at least one day"));
        }
        self.start_time()?;
        self.thermal.validate()?;
        self.heat_pump.validate()?;
        self.gains.validate()?;
        self.comfort.validate()?;
        self.strategy.dfc.validate()?;
        self.strategy.forecaster.window.validate()?;
        self.strategy.forecaster.boost.validate()?;
        let pid = &self.strategy.pid;
        if !(pid.kp >= 0.0 && pid.ki >= 0.0 && pid.kd >= 0.0) {
            return Err(Error::arg("PID gains must be >= 0"));
        }
        Ok(())
    }

    pub fn start_time(&self) -> Result<i64> {
        parse_timestamp(&self.start).map_err(|e| Error::arg(format!("start: {e}")))
    }

    /// First simulated instant, spin-up included.
    pub fn loop_start(&self) -> Result<i64> {
        Ok(self.start_time()? - self.spinup_days as i64 * DAY)
    }

    pub fn spinup_steps(&self) -> usize {
        (self.spinup_days as i64 * DAY / self.step_seconds()) as usize
    }

    pub fn step_seconds(&self) -> i64 {
        self.dt as i64
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_days as i64 * DAY / self.step_seconds()) as usize
    }

    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(self.thermal, self.heat_pump, self.gains)
    }

    /// Everything except the strategy, as compared by [`super::compare`].
    pub fn core(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("strategy");
        }
        Ok(v)
    }

    /// Weather from the training history through one planning horizon past
    /// the end.
    pub fn weather_series(&self) -> Result<WeatherSeries> {
        let start = self.start_time()?;
        let dt = self.step_seconds();
        let from = self.loop_start()? - self.history_days as i64 * DAY;
        let tail = (self.strategy.dfc.horizon as i64 + 1) * dt;
        let until = start + self.duration_days as i64 * DAY + tail;
        match &self.weather {
            WeatherSource::Synthetic(climate) => {
                let days = ((until - from) + DAY - 1) / DAY;
                let series = generate_synthetic_weather_from(self.seed, from, days as u32, dt, climate)?;
                series.slice_time(from, until)
            }
            WeatherSource::Csv { path } => {
                let series = load_weather_csv(path, dt)?;
                if series.start() > from || series.end() < until - dt {
                    return Err(Error::arg(format!(
                        "weather file covers {} .. {}, scenario needs {} .. {}",
                        format_timestamp(series.start()),
                        format_timestamp(series.end()),
                        format_timestamp(from),
                        format_timestamp(until - dt)
                    )));
                }
                series.slice_time(from, until)
            }
        }
    }

    /// Trains the outdoor temperature forecaster on the history preceding
    /// the spin-up.
    pub fn train_forecaster(&self, weather: &WeatherSeries) -> Result<Forecaster> {
        let history = weather.slice_time(weather.start(), self.loop_start()?)?;
        let f = &self.strategy.forecaster;
        Ok(train_weather_model(&history, &f.window, &f.boost)?.forecaster)
    }
}
