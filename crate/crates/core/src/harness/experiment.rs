use std::io::Write;

use serde::{Deserialize, Serialize};

use super::scenario::{Scenario, Strategy};
use crate::control::{ControlState, Controller, DfcController, Observation, PidController, Rc2Controller};
use crate::error::{Error, Result};
use crate::thermal::ThermalState;
use crate::units::{c_to_k, hour_of_day, k_to_c, JOULES_PER_KWH};
use crate::weather::format_timestamp;

/// One control interval, stamped at its end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// End of the interval (s since the Unix epoch, local clock).
    pub time: i64,
    /// Indoor air at `time` (°C).
    pub t_air_c: f64,
    /// Speed held over the interval.
    pub n_set: f64,
    /// Electrical power over the interval (W).
    pub p_el: f64,
    /// Delivered heat over the interval (W).
    pub q_heat: f64,
    pub cop: f64,
    /// Outdoor temperature applied over the interval (°C).
    pub outdoor_c: f64,
    /// Setpoint at `time` (°C).
    pub setpoint_c: f64,
    pub occupied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub strategy: Strategy,
    pub scenario: Scenario,
    /// kWh per day per m² of floor area.
    pub energy_per_day_per_m2: f64,
    pub energy_kwh: f64,
    /// Share of occupied intervals ending outside the comfort band.
    pub comfort_violation_fraction: f64,
    pub night_violation_fraction: f64,
    /// Mean COP over intervals with heat delivery.
    pub mean_cop: Option<f64>,
    /// Steps driven by the RC2 warm-up fallback.
    pub warm_up_steps: usize,
    pub traces: Vec<TraceRow>,
}

impl ExperimentResult {
    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn write_trace_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "time",
            "t_air_c",
            "n_set",
            "p_el_w",
            "q_heat_w",
            "cop",
            "outdoor_c",
            "setpoint_c",
            "occupied",
        ])?;
        for r in &self.traces {
            out.write_record([
                format_timestamp(r.time),
                r.t_air_c.to_string(),
                r.n_set.to_string(),
                r.p_el.to_string(),
                r.q_heat.to_string(),
                r.cop.to_string(),
                r.outdoor_c.to_string(),
                r.setpoint_c.to_string(),
                (r.occupied as u8).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn build_controller(scenario: &Scenario, weather: &crate::weather::WeatherSeries) -> Result<Box<dyn Controller>> {
    let sim = scenario.simulator()?;
    let spec = &scenario.strategy;
    Ok(match spec.kind {
        Strategy::Rc1 => Box::new(PidController::new(scenario.comfort, spec.pid)),
        Strategy::Rc2 if spec.rc2_predictive => {
            Box::new(Rc2Controller::predictive(scenario.comfort, sim, spec.rc2_lookahead))
        }
        Strategy::Rc2 => Box::new(Rc2Controller::reactive(scenario.comfort)),
        Strategy::Dfc => {
            let forecaster = if spec.forecaster.enabled {
                Some(scenario.train_forecaster(weather)?)
            } else {
                None
            };
            Box::new(DfcController::new(scenario.comfort, spec.dfc, sim, forecaster)?)
        }
    })
}

/// Runs the closed loop through the spin-up and the scenario's duration.
///
/// All nodes start at the night setpoint when the spin-up begins. A DFC
/// controller still filling its lag buffers hands the step to an RC2
/// stand-in. Only intervals after the spin-up enter the result.
pub fn run_experiment(scenario: &Scenario) -> Result<ExperimentResult> {
    scenario.validate()?;
    let sim = scenario.simulator()?;
    let weather = scenario.weather_series()?;
    let mut controller = build_controller(scenario, &weather)?;
    let mut fallback = if scenario.strategy.rc2_predictive {
        Rc2Controller::predictive(scenario.comfort, sim, scenario.strategy.rc2_lookahead)
    } else {
        Rc2Controller::reactive(scenario.comfort)
    };

    let dt = scenario.dt;
    let step = scenario.step_seconds();
    let start = scenario.loop_start()?;
    let skip = scenario.spinup_steps();
    let n = scenario.n_steps();
    let comfort = &scenario.comfort;
    let mut state = ThermalState::uniform(c_to_k(comfort.night_setpoint));
    let mut n_set = ControlState::OFF;
    let mut traces = Vec::with_capacity(n);
    let mut warm_up_steps = 0;

    for k in 0..skip + n {
        let time = start + k as i64 * step;
        let idx = weather
            .index_of(time)
            .ok_or_else(|| Error::Internal(format!("no weather at {}", format_timestamp(time))))?;
        let rec = weather.records()[idx];
        let obs = Observation {
            time,
            dt,
            state,
            weather: rec,
            n_set,
        };
        let abort = |e: Error| Error::Aborted {
            step: k,
            source: Box::new(e),
        };
        let u = match controller.step(&obs) {
            Ok(u) => u,
            Err(Error::WarmUp { .. }) => {
                warm_up_steps += 1;
                fallback.step(&obs).map_err(abort)?
            }
            Err(e) => return Err(abort(e)),
        };
        let out = sim.step(&state, &rec, u.n_set(), dt).map_err(abort)?;
        state = out.next_state;
        n_set = u;
        if k < skip {
            continue;
        }
        let end = time + step;
        traces.push(TraceRow {
            time: end,
            t_air_c: k_to_c(state.t_air),
            n_set: u.n_set(),
            p_el: out.p_el,
            q_heat: out.q_heat,
            cop: out.cop,
            outdoor_c: rec.temp,
            setpoint_c: comfort.setpoint(end),
            occupied: comfort.is_day(end),
        });
    }

    let energy_j: f64 = traces.iter().map(|r| r.p_el * dt).sum();
    let energy_kwh = energy_j / JOULES_PER_KWH;
    let days = scenario.duration_days as f64;
    let (mut occ, mut occ_bad, mut night, mut night_bad) = (0, 0, 0, 0);
    for r in &traces {
        let bad = comfort.violates(r.t_air_c, r.time);
        if r.occupied {
            occ += 1;
            occ_bad += bad as usize;
        } else {
            night += 1;
            night_bad += bad as usize;
        }
    }
    let heating: Vec<f64> = traces.iter().filter(|r| r.q_heat > 0.0).map(|r| r.cop).collect();
    let mean_cop = (!heating.is_empty()).then(|| heating.iter().sum::<f64>() / heating.len() as f64);

    Ok(ExperimentResult {
        strategy: scenario.strategy.kind,
        scenario: scenario.clone(),
        energy_per_day_per_m2: energy_kwh / days / scenario.thermal.floor_area,
        energy_kwh,
        comfort_violation_fraction: fraction(occ_bad, occ),
        night_violation_fraction: fraction(night_bad, night),
        mean_cop,
        warm_up_steps,
        traces,
    })
}

/// Runs one experiment per strategy on otherwise identical scenarios, in
/// parallel threads. Results come back in the order of `strategies`.
pub fn run_strategies(scenario: &Scenario, strategies: &[Strategy]) -> Result<Vec<ExperimentResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = strategies
            .iter()
            .map(|&s| {
                let sc = scenario.with_strategy(s);
                scope.spawn(move || run_experiment(&sc))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .map_err(|_| Error::Internal("experiment thread panicked".into()))?
            })
            .collect()
    })
}

/// Consecutive steps a raised speed must stay above its previous level.
pub const SUSTAIN_STEPS: usize = 3;

/// For each calendar day, the time of the first sustained speed increase
/// whose interval starts inside `[from_h, until_h)` local time.
///
/// An increase at row k is sustained when rows k .. k + SUSTAIN_STEPS all
/// hold a speed above row k − 1. Days without one yield `None`.
pub fn morning_onsets(traces: &[TraceRow], dt: i64, from_h: f64, until_h: f64) -> Vec<(i64, Option<i64>)> {
    let mut out: Vec<(i64, Option<i64>)> = Vec::new();
    for k in 1..traces.len() {
        let begin = traces[k].time - dt;
        let day = begin.div_euclid(86_400);
        if out.last().is_none_or(|(d, _)| *d != day) {
            out.push((day, None));
        }
        let slot = out.last_mut().unwrap();
        if slot.1.is_some() {
            continue;
        }
        let h = hour_of_day(begin);
        if h < from_h || h >= until_h || k + SUSTAIN_STEPS > traces.len() {
            continue;
        }
        let base = traces[k - 1].n_set;
        if traces[k..k + SUSTAIN_STEPS].iter().all(|r| r.n_set > base) {
            slot.1 = Some(begin);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(time: i64, n_set: f64) -> TraceRow {
        TraceRow {
            time,
            t_air_c: 20.0,
            n_set,
            p_el: 0.0,
            q_heat: 0.0,
            cop: 1.0,
            outdoor_c: 0.0,
            setpoint_c: 19.0,
            occupied: false,
        }
    }

    #[test]
    fn onset_requires_persistence() {
        // 04:00 .. 08:00 in 10-minute rows: a blip at 05:00, a ramp from 06:00 that levels off at 06:40.
        let dt = 600;
        let rows: Vec<TraceRow> = (0..24)
            .map(|i| {
                let begin = 4 * 3600 + i * dt;
                let n = match i {
                    6 => 0.2,
                    12..=15 => 0.1 + 0.05 * (i - 12) as f64,
                    16.. => 0.3,
                    _ => 0.0,
                };
                row(begin + dt, n)
            })
            .collect();
        let onsets = morning_onsets(&rows, dt, 3.0, 10.0);
        assert_eq!(onsets, vec![(0, Some(6 * 3600))]);
        let none = morning_onsets(&rows, dt, 7.0, 10.0);
        assert_eq!(none, vec![(0, None)]);
    }
}
