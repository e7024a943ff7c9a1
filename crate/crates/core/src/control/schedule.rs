use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::hour_of_day;

/// Day/night indoor setpoints (°C) with a closed comfort band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComfortSchedule {
    pub day_setpoint: f64,
    pub night_setpoint: f64,
    /// Day window start, local hour.
    pub day_from_h: f64,
    /// Day window end (exclusive), local hour.
    pub day_until_h: f64,
    /// Half-width of the comfort band (K).
    pub band: f64,
}

impl Default for ComfortSchedule {
    fn default() -> Self {
        Self {
            day_setpoint: 21.0,
            night_setpoint: 19.0,
            day_from_h: 7.0,
            day_until_h: 18.0,
            band: 0.5,
        }
    }
}

impl ComfortSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.band > 0.0 && self.band.is_finite()) {
            return Err(Error::arg("comfort band must be > 0"));
        }
        if !self.day_setpoint.is_finite() || !self.night_setpoint.is_finite() {
            return Err(Error::arg("setpoints must be finite"));
        }
        if !(0.0..=24.0).contains(&self.day_from_h)
            || !(0.0..=24.0).contains(&self.day_until_h)
            || self.day_from_h >= self.day_until_h
        {
            return Err(Error::arg("day window must satisfy 0 <= from < until <= 24"));
        }
        Ok(())
    }

    pub fn is_day(&self, timestamp: i64) -> bool {
        let h = hour_of_day(timestamp);
        h >= self.day_from_h && h < self.day_until_h
    }

    pub fn setpoint(&self, timestamp: i64) -> f64 {
        if self.is_day(timestamp) {
            self.day_setpoint
        } else {
            self.night_setpoint
        }
    }

    /// True when `temp` lies outside `[setpoint − band, setpoint + band]`.
    pub fn violates(&self, temp: f64, timestamp: i64) -> bool {
        let sp = self.setpoint(timestamp);
        temp < sp - self.band || temp > sp + self.band
    }
}

/// True iff any forecast temperature leaves the closed comfort band at its time.
pub fn comfort_violated(temps: &[f64], schedule: &ComfortSchedule, times: &[i64]) -> bool {
    temps.iter().zip(times).any(|(&t, &ts)| schedule.violates(t, ts))
}
