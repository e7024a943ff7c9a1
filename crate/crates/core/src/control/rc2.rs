use super::{ComfortSchedule, ControlState, Controller, Observation};
use crate::error::Result;
use crate::thermal::Simulator;
use crate::units::k_to_c;
use crate::weather::WeatherRecord;

/// Increment applied per control step.
pub const RC2_STEP: f64 = 0.05;

/// One incremental decision: step up below the setpoint, step down above
/// the band, hold in between.
pub fn rc2_step(current: ControlState, measured: f64, setpoint: f64, band: f64) -> ControlState {
    let n = current.n_set();
    let next = if measured < setpoint {
        n + RC2_STEP
    } else if measured > setpoint + band {
        n - RC2_STEP
    } else {
        n
    };
    ControlState::new(next)
}

/// Stateless apart from the applied speed, which arrives with each observation.
///
/// With a simulator attached, the decision compares the indoor temperature
/// predicted `lookahead` steps ahead at the current speed (outdoor conditions
/// persisting) with the setpoint due at that moment. Without one it compares
/// the measurement with the setpoint at the end of the interval.
#[derive(Debug, Clone)]
pub struct Rc2Controller {
    pub schedule: ComfortSchedule,
    pub sim: Option<Simulator>,
    pub lookahead: usize,
}

impl Rc2Controller {
    pub fn reactive(schedule: ComfortSchedule) -> Self {
        Self {
            schedule,
            sim: None,
            lookahead: 1,
        }
    }

    pub fn predictive(schedule: ComfortSchedule, sim: Simulator, lookahead: usize) -> Self {
        Self {
            schedule,
            sim: Some(sim),
            lookahead: lookahead.max(1),
        }
    }
}

impl Controller for Rc2Controller {
    fn name(&self) -> &'static str {
        "rc2"
    }

    fn step(&mut self, obs: &Observation) -> Result<ControlState> {
        let Some(sim) = &self.sim else {
            let sp = self.schedule.setpoint(obs.target_time());
            return Ok(rc2_step(obs.n_set, obs.indoor_c(), sp, self.schedule.band));
        };
        let step = obs.dt as i64;
        let mut state = obs.state;
        for i in 0..self.lookahead {
            let rec = WeatherRecord {
                timestamp: obs.time + i as i64 * step,
                ..obs.weather
            };
            state = sim.step(&state, &rec, obs.n_set.n_set(), obs.dt)?.next_state;
        }
        let sp = self.schedule.setpoint(obs.time + self.lookahead as i64 * step);
        Ok(rc2_step(obs.n_set, k_to_c(state.t_air), sp, self.schedule.band))
    }
}
