//! Heating controllers behind one stepwise contract.
//!
//! Every controller sees an [`Observation`] at the start of a control
//! interval and returns the compressor speed to hold until the next one.
//! Setpoints are evaluated at the end of the interval, the moment the
//! resulting indoor temperature is judged.

mod dfc;
mod pid;
mod rc2;
mod schedule;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::thermal::ThermalState;
use crate::units::k_to_c;
use crate::weather::WeatherRecord;

pub use dfc::{dfc_plan, inverse_track, DfcConfig, DfcController, PlanContext, PlanReport};
pub use pid::{pid_step, PidController, PidState};
pub use rc2::{rc2_step, Rc2Controller, RC2_STEP};
pub use schedule::{comfort_violated, ComfortSchedule};

/// Relative compressor speed, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlState(f64);

impl ControlState {
    pub const OFF: Self = Self(0.0);

    /// Clamps into `[0, 1]`; NaN maps to off.
    pub fn new(n_set: f64) -> Self {
        if n_set.is_nan() {
            Self(0.0)
        } else {
            Self(n_set.clamp(0.0, 1.0))
        }
    }

    pub fn n_set(self) -> f64 {
        self.0
    }
}

/// Compressor speeds over a horizon of control steps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlPlan(Vec<ControlState>);

impl ControlPlan {
    pub fn hold(n_set: ControlState, horizon: usize) -> Self {
        Self(vec![n_set; horizon])
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        Self(values.into_iter().map(ControlState::new).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<ControlState> {
        self.0.first().copied()
    }

    pub fn states(&self) -> &[ControlState] {
        &self.0
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.n_set()).collect()
    }
}

/// What a controller sees at the start of a control interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Start of the interval about to be controlled.
    pub time: i64,
    /// Interval length (s).
    pub dt: f64,
    pub state: ThermalState,
    /// Outdoor conditions measured at `time`.
    pub weather: WeatherRecord,
    /// Speed applied over the previous interval.
    pub n_set: ControlState,
}

impl Observation {
    pub fn indoor_c(&self) -> f64 {
        k_to_c(self.state.t_air)
    }

    /// End of the interval, where setpoints are evaluated.
    pub fn target_time(&self) -> i64 {
        self.time + self.dt as i64
    }
}

pub trait Controller {
    fn name(&self) -> &'static str;

    fn step(&mut self, obs: &Observation) -> Result<ControlState>;
}
