use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{comfort_violated, ComfortSchedule, ControlPlan, ControlState, Controller, Observation};
use crate::error::{Error, Result};
use crate::forecasting::Forecaster;
use crate::gbdt::tree::{grow, Presorted};
use crate::gbdt::{Dataset, Loss, LossFunction, TreeConfig};
use crate::thermal::{Simulator, ThermalState, Trace};
use crate::units::{c_to_k, k_to_c};
use crate::weather::WeatherRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DfcConfig {
    /// Planning horizon H in control steps.
    pub horizon: usize,
    /// Boosting rounds M per planning call.
    pub iterations: usize,
    /// Shrinkage v applied to every tree.
    pub learning_rate: f64,
    pub loss: LossFunction,
    /// Lagged indoor temperatures and speeds fed to the trees.
    pub lags: usize,
    /// Scales the heat demand computed by the inverse tracker.
    pub tracker_gain: f64,
    pub tree: TreeConfig,
    /// Fail the plan if the horizon loss ever rises between rounds.
    pub check_monotone: bool,
}

impl Default for DfcConfig {
    fn default() -> Self {
        Self {
            horizon: 12,
            iterations: 12,
            learning_rate: 0.5,
            loss: LossFunction::Squared,
            lags: 2,
            tracker_gain: 1.0,
            tree: TreeConfig {
                max_leaves: 4,
                min_samples_leaf: 2,
            },
            check_monotone: false,
        }
    }
}

impl DfcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::arg("DFC horizon must be >= 1"));
        }
        if self.iterations < 1 {
            return Err(Error::arg("DFC iterations must be >= 1"));
        }
        self.validate_planner()
    }

    fn validate_planner(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::arg("DFC horizon must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::arg("DFC learning rate must lie in (0, 1]"));
        }
        if !(self.tracker_gain.is_finite() && self.tracker_gain > 0.0) {
            return Err(Error::arg("tracker gain must be > 0"));
        }
        self.tree.validate()
    }
}

/// Lagging indicators available to the planner, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanContext {
    /// Indoor air temperatures (°C).
    pub indoor: Vec<f64>,
    /// Applied compressor speeds.
    pub n_sets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub plan: ControlPlan,
    /// Whether the hold-current rollout left the comfort band.
    pub triggered: bool,
    /// Accepted boosting rounds.
    pub rounds: usize,
    /// Comfort targets over the horizon (°C).
    pub targets: Vec<f64>,
    /// Reference trajectory behind the returned plan (°C).
    pub reference: Vec<f64>,
    /// Simulated indoor temperatures under the returned plan (°C).
    pub realized: Vec<f64>,
    /// Horizon loss after the constant start and after each accepted round.
    pub loss_history: Vec<f64>,
    pub initial_constant: Option<f64>,
}

struct Pass {
    controls: Vec<f64>,
    realized: Vec<f64>,
    loss: f64,
}

fn realized_c(trace: &Trace) -> Vec<f64> {
    trace.steps.iter().map(|s| k_to_c(s.next_state.t_air)).collect()
}

fn horizon_loss(loss: &LossFunction, targets: &[f64], realized: &[f64]) -> f64 {
    targets.iter().zip(realized).map(|(&t, &f)| loss.evaluate(t, f)).sum()
}

/// Speed that brings the air node from its current temperature to
/// `reference_k` by the end of the step, envelope temperatures frozen.
pub fn inverse_track(
    sim: &Simulator,
    state: &ThermalState,
    outdoor: &WeatherRecord,
    reference_k: f64,
    gain: f64,
    dt: f64,
) -> f64 {
    let bal = sim.air_balance(state, outdoor);
    let a = (-bal.conductance * dt / sim.params.c_air).exp();
    let t_eq = (reference_k - a * state.t_air) / (1.0 - a);
    let q = bal.conductance * t_eq - bal.drive;
    ControlState::new(gain * q / sim.heat_pump.q_nominal).n_set()
}

/// Follows a reference trajectory (°C) closed-loop through the simulator.
fn track(
    sim: &Simulator,
    state: &ThermalState,
    forecast: &[WeatherRecord],
    reference: &[f64],
    cfg: &DfcConfig,
    dt: f64,
) -> Result<(Vec<f64>, Trace)> {
    let mut s = *state;
    let mut controls = Vec::with_capacity(reference.len());
    let mut steps = Vec::with_capacity(reference.len());
    let mut energy_j = 0.0;
    for (rec, &r) in forecast.iter().zip(reference) {
        let u = inverse_track(sim, &s, rec, c_to_k(r), cfg.tracker_gain, dt);
        let out = sim.step(&s, rec, u, dt)?;
        energy_j += out.p_el * dt;
        s = out.next_state;
        controls.push(u);
        steps.push(out);
    }
    Ok((controls, Trace { steps, energy_j }))
}

fn features(ctx: &PlanContext, forecast: &[WeatherRecord], lags: usize) -> Result<Dataset> {
    let need = lags.max(1);
    if ctx.indoor.len() < need || ctx.n_sets.len() < need {
        return Err(Error::WarmUp {
            have: ctx.indoor.len().min(ctx.n_sets.len()),
            need,
        });
    }
    let lag_in = &ctx.indoor[ctx.indoor.len() - lags..];
    let lag_n = &ctx.n_sets[ctx.n_sets.len() - lags..];
    let width = 2 + 2 * lags;
    let mut flat = Vec::with_capacity(width * forecast.len());
    for (i, rec) in forecast.iter().enumerate() {
        flat.push(i as f64);
        flat.push(rec.temp);
        flat.extend(lag_in.iter().rev());
        flat.extend(lag_n.iter().rev());
    }
    Dataset::from_flat(flat, width, vec![0.0; forecast.len()])
}

/// Plans compressor speeds over the forecast horizon by boosting an indoor
/// reference trajectory against simulated outcomes.
#[allow(clippy::too_many_arguments)]
pub fn dfc_plan(
    ctx: &PlanContext,
    forecast: &[WeatherRecord],
    state: &ThermalState,
    current: ControlState,
    schedule: &ComfortSchedule,
    cfg: &DfcConfig,
    sim: &Simulator,
    dt: f64,
) -> Result<PlanReport> {
    cfg.validate_planner()?;
    if forecast.len() != cfg.horizon {
        return Err(Error::arg(format!(
            "forecast covers {} steps, horizon is {}",
            forecast.len(),
            cfg.horizon
        )));
    }
    let data = features(ctx, forecast, cfg.lags)?;
    let h = cfg.horizon;
    let times: Vec<i64> = forecast.iter().map(|r| r.timestamp + dt as i64).collect();
    let targets: Vec<f64> = times.iter().map(|&t| schedule.setpoint(t)).collect();
    let loss = cfg.loss;

    let hold = sim.simulate_horizon(state, forecast, &vec![current.n_set(); h], dt)?;
    let hold_temps = realized_c(&hold);
    let triggered = comfort_violated(&hold_temps, schedule, &times);
    if !triggered || cfg.iterations == 0 {
        return Ok(PlanReport {
            plan: ControlPlan::hold(current, h),
            triggered,
            rounds: 0,
            loss_history: vec![horizon_loss(&loss, &targets, &hold_temps)],
            targets,
            reference: hold_temps.clone(),
            realized: hold_temps,
            initial_constant: None,
        });
    }

    let f0 = loss.initial_constant(&targets)?;
    let mut reference = vec![f0; h];
    let run = |reference: &[f64]| -> Result<Pass> {
        let (controls, trace) = track(sim, state, forecast, reference, cfg, dt)?;
        let realized = realized_c(&trace);
        let loss_value = horizon_loss(&loss, &targets, &realized);
        Ok(Pass {
            controls,
            realized,
            loss: loss_value,
        })
    };
    let mut pass = run(&reference)?;
    let mut loss_history = vec![pass.loss];
    let pre = Presorted::new(&data);
    let mut rounds = 0;

    for _ in 0..cfg.iterations {
        let residuals: Vec<f64> = targets
            .iter()
            .zip(&pass.realized)
            .map(|(&t, &f)| loss.negative_gradient(t, f))
            .collect();
        if residuals.iter().any(|r| !r.is_finite()) {
            return Err(Error::Planner("non-finite pseudo-residual".into()));
        }
        let grown = grow(&data, &pre, &residuals, &cfg.tree)?;
        let mut step = vec![0.0; h];
        for (_, members) in &grown.leaves {
            let t: Vec<f64> = members.iter().map(|&i| targets[i as usize]).collect();
            let f: Vec<f64> = members.iter().map(|&i| pass.realized[i as usize]).collect();
            let gamma = loss.leaf_value(&t, &f)?;
            for &i in members {
                step[i as usize] = gamma;
            }
        }
        let candidate: Vec<f64> = reference
            .iter()
            .zip(&step)
            .map(|(&r, &g)| r + cfg.learning_rate * g)
            .collect();
        if candidate.iter().any(|r| !r.is_finite()) {
            return Err(Error::Planner("non-finite reference trajectory".into()));
        }
        let next = run(&candidate)?;
        // A round that worsens the simulated outcome ends the search.
        if next.loss > pass.loss {
            break;
        }
        reference = candidate;
        pass = next;
        loss_history.push(pass.loss);
        rounds += 1;
    }

    if cfg.check_monotone && loss_history.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Planner(format!("horizon loss increased: {loss_history:?}")));
    }
    Ok(PlanReport {
        plan: ControlPlan::from_values(pass.controls),
        triggered,
        rounds,
        targets,
        reference,
        realized: pass.realized,
        loss_history,
        initial_constant: Some(f0),
    })
}

/// Receding-horizon DFC: plans every step and applies the plan head.
#[derive(Debug, Clone)]
pub struct DfcController {
    pub schedule: ComfortSchedule,
    pub cfg: DfcConfig,
    pub sim: Simulator,
    pub forecaster: Option<Forecaster>,
    weather: VecDeque<WeatherRecord>,
    indoor: VecDeque<f64>,
    n_sets: VecDeque<f64>,
    last_report: Option<PlanReport>,
}

impl DfcController {
    pub fn new(
        schedule: ComfortSchedule,
        cfg: DfcConfig,
        sim: Simulator,
        forecaster: Option<Forecaster>,
    ) -> Result<Self> {
        cfg.validate()?;
        schedule.validate()?;
        Ok(Self {
            schedule,
            cfg,
            sim,
            forecaster,
            weather: VecDeque::new(),
            indoor: VecDeque::new(),
            n_sets: VecDeque::new(),
            last_report: None,
        })
    }

    pub fn last_report(&self) -> Option<&PlanReport> {
        self.last_report.as_ref()
    }

    fn weather_lags(&self) -> usize {
        self.forecaster.as_ref().map_or(1, |f| f.spec.lag_count)
    }

    /// Observations needed before planning can start.
    pub fn warm_up_steps(&self) -> usize {
        self.cfg.lags.max(self.weather_lags()).max(1)
    }

    fn record(&mut self, obs: &Observation) {
        let keep = self.warm_up_steps();
        self.weather.push_back(obs.weather);
        self.indoor.push_back(obs.indoor_c());
        self.n_sets.push_back(obs.n_set.n_set());
        for buf_len in [self.weather.len(), self.indoor.len()] {
            debug_assert_eq!(buf_len, self.n_sets.len());
        }
        while self.weather.len() > keep {
            self.weather.pop_front();
            self.indoor.pop_front();
            self.n_sets.pop_front();
        }
    }

    /// Weather over the next H steps: the current measurement, then the
    /// forecaster's rollout (or persistence without one).
    fn forecast(&self, obs: &Observation) -> Result<Vec<WeatherRecord>> {
        let h = self.cfg.horizon;
        let step = obs.dt as i64;
        let mut out = Vec::with_capacity(h);
        out.push(obs.weather);
        match &self.forecaster {
            Some(f) if h > 1 => {
                let window: Vec<WeatherRecord> = self.weather.iter().copied().collect();
                out.extend(f.rollout(&window, h - 1, step)?);
            }
            _ => {
                for i in 1..h {
                    out.push(WeatherRecord {
                        timestamp: obs.weather.timestamp + i as i64 * step,
                        ..obs.weather
                    });
                }
            }
        }
        Ok(out)
    }

    /// Plans from the buffered context without recording anything.
    pub fn plan(&self, obs: &Observation) -> Result<PlanReport> {
        let need = self.warm_up_steps();
        if self.weather.len() < need {
            return Err(Error::WarmUp {
                have: self.weather.len(),
                need,
            });
        }
        let forecast = self.forecast(obs)?;
        let ctx = PlanContext {
            indoor: self.indoor.iter().copied().collect(),
            n_sets: self.n_sets.iter().copied().collect(),
        };
        dfc_plan(
            &ctx,
            &forecast,
            &obs.state,
            obs.n_set,
            &self.schedule,
            &self.cfg,
            &self.sim,
            obs.dt,
        )
    }
}

impl Controller for DfcController {
    fn name(&self) -> &'static str {
        "dfc"
    }

    fn step(&mut self, obs: &Observation) -> Result<ControlState> {
        self.record(obs);
        let report = self.plan(obs)?;
        let head = report.plan.first().ok_or_else(|| Error::Planner("empty plan".into()))?;
        self.last_report = Some(report);
        Ok(head)
    }
}
