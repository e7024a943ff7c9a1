use serde::{Deserialize, Serialize};

use super::{ComfortSchedule, ControlState, Controller, Observation};
use crate::error::Result;

/// Discrete PID with output limits and conditional-integration anti-windup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidState {
    /// Per K.
    pub kp: f64,
    /// Per K·s.
    pub ki: f64,
    /// Per K/s.
    pub kd: f64,
    /// ∫e dt (K·s).
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub out_min: f64,
    pub out_max: f64,
    /// Freeze the integral while the output, at the current integral, sits
    /// at a limit in the direction the error pushes.
    pub conditional_integration: bool,
}

impl Default for PidState {
    fn default() -> Self {
        Self {
            kp: 0.4,
            ki: 0.002,
            kd: 0.0,
            integral: 0.0,
            prev_error: None,
            out_min: 0.0,
            out_max: 1.0,
            conditional_integration: true,
        }
    }
}

impl PidState {
    pub fn with_gains(kp: f64, ki: f64, kd: f64) -> Self {
        Self {
            kp,
            ki,
            kd,
            ..Self::default()
        }
    }

    /// Largest |integral| keeping ki·integral inside [−1, 1].
    fn integral_limit(&self) -> f64 {
        if self.ki > 0.0 {
            1.0 / self.ki
        } else {
            f64::INFINITY
        }
    }
}

/// One PID update. Returns the clamped output and the successor state.
pub fn pid_step(pid: &PidState, setpoint: f64, measured: f64, dt: f64) -> (ControlState, PidState) {
    let error = setpoint - measured;
    let derivative = match pid.prev_error {
        Some(prev) if dt > 0.0 => (error - prev) / dt,
        _ => 0.0,
    };
    let lim = pid.integral_limit();
    let held = pid.kp * error + pid.ki * pid.integral + pid.kd * derivative;
    let pushing_high = held >= pid.out_max && error > 0.0;
    let pushing_low = held <= pid.out_min && error < 0.0;
    let integral = if pid.conditional_integration && (pushing_high || pushing_low) {
        pid.integral
    } else {
        (pid.integral + error * dt).clamp(-lim, lim)
    };
    let out = (pid.kp * error + pid.ki * integral + pid.kd * derivative).clamp(pid.out_min, pid.out_max);
    let next = PidState {
        integral,
        prev_error: Some(error),
        ..*pid
    };
    (ControlState::new(out), next)
}

#[derive(Debug, Clone)]
pub struct PidController {
    pub schedule: ComfortSchedule,
    pub state: PidState,
}

impl PidController {
    pub fn new(schedule: ComfortSchedule, gains: PidState) -> Self {
        Self { schedule, state: gains }
    }
}

impl Controller for PidController {
    fn name(&self) -> &'static str {
        "rc1"
    }

    fn step(&mut self, obs: &Observation) -> Result<ControlState> {
        let sp = self.schedule.setpoint(obs.target_time());
        let (u, next) = pid_step(&self.state, sp, obs.indoor_c(), obs.dt);
        self.state = next;
        Ok(u)
    }
}
