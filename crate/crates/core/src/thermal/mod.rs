//! Four-element lumped-capacitance model of a single office zone.
//!
//! Five thermal nodes: zone air plus exterior wall, interior wall, floor
//! plate and roof. Every envelope node exchanges heat with the air node
//! through its inner resistance; exterior wall and roof also couple to the
//! outdoor air, the floor plate to the ground, each through an outer
//! resistance. Ventilation couples the air node to outdoors directly. The
//! heat pump, internal gains and solar gains all enter at the air node.
//!
//! Temperatures are kelvin and time is seconds. Weather records carry
//! Celsius and are converted on entry.

pub mod integrator;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{c_to_k, hour_of_day};
use crate::weather::WeatherRecord;

use integrator::rk4_integrate;

/// Lower sanity bound for any node temperature (K).
pub const T_MIN_K: f64 = 200.0;
/// Upper sanity bound for any node temperature (K).
pub const T_MAX_K: f64 = 400.0;
/// Longest internal RK4 substep (s).
pub const MAX_SUBSTEP_S: f64 = 60.0;

const AIR_DENSITY: f64 = 1.2;
const AIR_CP: f64 = 1005.0;
const CEILING_HEIGHT_M: f64 = 3.0;

/// Resistances (K/W), capacitances (J/K) and geometry of the zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalParams {
    pub r_ext: f64,
    pub c_ext: f64,
    pub r_floor: f64,
    pub c_floor: f64,
    pub r_roof: f64,
    pub c_roof: f64,
    pub r_int: f64,
    pub c_int: f64,
    pub c_air: f64,
    /// Outer resistance, exterior wall node to outdoor air.
    pub r_ext_rest: f64,
    /// Outer resistance, roof node to outdoor air.
    pub r_roof_rest: f64,
    /// Outer resistance, floor node to ground.
    pub r_floor_rest: f64,
    pub floor_area: f64,
    pub ventilation_ach: f64,
    pub solar_aperture: f64,
    /// Ground boundary temperature under the floor plate (K).
    pub ground_temp: f64,
}

impl Default for ThermalParams {
    /// Passive-house office, 1675 m².
    fn default() -> Self {
        let floor_area = 1675.0;
        let c_ext = 4.93e8;
        Self {
            r_ext: 1.41e-4,
            c_ext,
            r_floor: 1e-3,
            c_floor: 0.5 * c_ext,
            r_roof: 1e-3,
            c_roof: 0.5 * c_ext,
            r_int: 1.3e-4,
            c_int: c_ext,
            c_air: air_capacity(floor_area),
            r_ext_rest: 1.8e-3,
            r_roof_rest: 9e-3,
            r_floor_rest: 9e-3,
            floor_area,
            ventilation_ach: 0.2,
            solar_aperture: 0.05 * floor_area,
            ground_temp: 283.15,
        }
    }
}

/// Heat capacity of the zone air for a floor area at 3 m ceiling height.
pub fn air_capacity(floor_area: f64) -> f64 {
    AIR_DENSITY * AIR_CP * floor_area * CEILING_HEIGHT_M
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_ext", self.r_ext),
            ("c_ext", self.c_ext),
            ("r_floor", self.r_floor),
            ("c_floor", self.c_floor),
            ("r_roof", self.r_roof),
            ("c_roof", self.c_roof),
            ("r_int", self.r_int),
            ("c_int", self.c_int),
            ("c_air", self.c_air),
            ("r_ext_rest", self.r_ext_rest),
            ("r_roof_rest", self.r_roof_rest),
            ("r_floor_rest", self.r_floor_rest),
            ("floor_area", self.floor_area),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("ventilation_ach", self.ventilation_ach),
            ("solar_aperture", self.solar_aperture),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::arg(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(T_MIN_K..=T_MAX_K).contains(&self.ground_temp) {
            return Err(Error::arg(format!("ground_temp {} K out of range", self.ground_temp)));
        }
        Ok(())
    }

    /// Ventilation conductance (W/K).
    pub fn ventilation_conductance(&self) -> f64 {
        self.ventilation_ach * self.c_air / 3600.0
    }

    /// Steady-state conductance from zone air to the outdoor and ground boundaries (W/K).
    pub fn total_loss_conductance(&self) -> f64 {
        1.0 / (self.r_ext + self.r_ext_rest)
            + 1.0 / (self.r_roof + self.r_roof_rest)
            + 1.0 / (self.r_floor + self.r_floor_rest)
            + self.ventilation_conductance()
    }
}

/// Node temperatures (K) and elapsed scenario time (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub t_air: f64,
    pub t_ext_wall: f64,
    pub t_int_wall: f64,
    pub t_floor: f64,
    pub t_roof: f64,
    pub sim_time: f64,
}

impl ThermalState {
    /// All nodes at one temperature.
    pub fn uniform(t: f64) -> Self {
        Self {
            t_air: t,
            t_ext_wall: t,
            t_int_wall: t,
            t_floor: t,
            t_roof: t,
            sim_time: 0.0,
        }
    }

    pub fn temperatures(&self) -> [f64; 5] {
        [self.t_air, self.t_ext_wall, self.t_int_wall, self.t_floor, self.t_roof]
    }

    fn with_temperatures(&self, t: &[f64], sim_time: f64) -> Self {
        Self {
            t_air: t[0],
            t_ext_wall: t[1],
            t_int_wall: t[2],
            t_floor: t[3],
            t_roof: t[4],
            sim_time,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.temperatures()
            .iter()
            .all(|t| t.is_finite() && (T_MIN_K..=T_MAX_K).contains(t))
            && self.sim_time.is_finite()
    }

    fn check(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::SimulationFault {
                reason: "node temperature outside [200 K, 400 K]".into(),
                state: Box::new(*self),
            })
        }
    }

    /// Stored heat relative to 0 K, Σ C·T (J).
    pub fn stored_energy(&self, p: &ThermalParams) -> f64 {
        p.c_air * self.t_air
            + p.c_ext * self.t_ext_wall
            + p.c_int * self.t_int_wall
            + p.c_floor * self.t_floor
            + p.c_roof * self.t_roof
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatPumpParams {
    /// Thermal heating power at full compressor speed (W).
    pub q_nominal: f64,
    pub eta_carnot: f64,
    pub cop_max: f64,
    pub cop_min: f64,
    /// Supply (sink) temperature above zone air (K).
    pub supply_offset: f64,
}

impl Default for HeatPumpParams {
    fn default() -> Self {
        Self {
            q_nominal: 18_500.0,
            eta_carnot: 0.4,
            cop_max: 6.0,
            cop_min: 1.0,
            supply_offset: 10.0,
        }
    }
}

impl HeatPumpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_nominal.is_finite() && self.q_nominal > 0.0) {
            return Err(Error::arg("q_nominal must be > 0"));
        }
        if !(self.eta_carnot > 0.0 && self.eta_carnot <= 1.0) {
            return Err(Error::arg("eta_carnot must lie in (0, 1]"));
        }
        if !(self.cop_min >= 1.0 && self.cop_max > self.cop_min && self.cop_max.is_finite()) {
            return Err(Error::arg("need cop_max > cop_min >= 1"));
        }
        if !(self.supply_offset.is_finite() && self.supply_offset >= 0.0) {
            return Err(Error::arg("supply_offset must be >= 0"));
        }
        Ok(())
    }
}

/// Internal heat gains per floor area, switched by a daily occupancy window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainsSchedule {
    pub occupied_gain: f64,
    pub unoccupied_gain: f64,
    /// Occupancy start, local hour.
    pub occupied_from_h: f64,
    /// Occupancy end (exclusive), local hour.
    pub occupied_until_h: f64,
}

impl Default for GainsSchedule {
    fn default() -> Self {
        Self {
            occupied_gain: 10.0,
            unoccupied_gain: 2.0,
            occupied_from_h: 7.0,
            occupied_until_h: 18.0,
        }
    }
}

impl GainsSchedule {
    pub fn zero() -> Self {
        Self {
            occupied_gain: 0.0,
            unoccupied_gain: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.occupied_gain >= 0.0 && self.unoccupied_gain >= 0.0) {
            return Err(Error::arg("gain densities must be >= 0"));
        }
        if !(0.0..=24.0).contains(&self.occupied_from_h)
            || !(0.0..=24.0).contains(&self.occupied_until_h)
            || self.occupied_from_h >= self.occupied_until_h
        {
            return Err(Error::arg("occupancy window must satisfy 0 <= from < until <= 24"));
        }
        Ok(())
    }

    pub fn is_occupied(&self, timestamp: i64) -> bool {
        let h = hour_of_day(timestamp);
        h >= self.occupied_from_h && h < self.occupied_until_h
    }

    /// Internal gain (W) for the whole zone at `timestamp`.
    pub fn gain_w(&self, timestamp: i64, floor_area: f64) -> f64 {
        let density = if self.is_occupied(timestamp) {
            self.occupied_gain
        } else {
            self.unoccupied_gain
        };
        density * floor_area
    }
}

/// Heat-pump coefficient of performance from a Carnot-efficiency model.
///
/// Returns `cop_max` when the sink is not warmer than the source.
pub fn cop(t_source: f64, t_sink: f64, hp: &HeatPumpParams) -> Result<f64> {
    if !t_source.is_finite() || !t_sink.is_finite() {
        return Err(Error::arg(format!("non-finite COP input ({t_source}, {t_sink})")));
    }
    if t_sink <= 0.0 {
        return Err(Error::arg(format!("sink temperature must be > 0 K, got {t_sink}")));
    }
    if t_sink <= t_source {
        return Ok(hp.cop_max);
    }
    let carnot = hp.eta_carnot * t_sink / (t_sink - t_source);
    Ok(carnot.clamp(hp.cop_min, hp.cop_max))
}

/// Energy flows over one step (J). `boundary_loss` is heat leaving through
/// the envelope and ventilation; it is negative when the outdoors is warmer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepBalance {
    pub injected: f64,
    pub internal: f64,
    pub solar: f64,
    pub boundary_loss: f64,
}

impl StepBalance {
    pub fn net_input(&self) -> f64 {
        self.injected + self.internal + self.solar - self.boundary_loss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub next_state: ThermalState,
    /// Electrical power (W).
    pub p_el: f64,
    /// Delivered heat (W).
    pub q_heat: f64,
    pub cop: f64,
    pub balance: StepBalance,
}

/// Per-step outputs of a horizon run plus cumulative electrical energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<StepOutput>,
    /// Σ p_el·dt (J).
    pub energy_j: f64,
}

impl Trace {
    pub fn final_state(&self) -> Option<&ThermalState> {
        self.steps.last().map(|s| &s.next_state)
    }

    pub fn air_temperatures(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.next_state.t_air)
    }
}

/// Heat flows into the air node that do not come from the heat pump.
#[derive(Debug, Clone, Copy)]
pub struct AirBalance {
    /// Σ conductance·(T_neighbour) + internal + solar gains (W).
    pub drive: f64,
    /// Σ conductance attached to the air node (W/K).
    pub conductance: f64,
}

/// Immutable simulator: construction, plant and gains. State is explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Simulator {
    pub params: ThermalParams,
    pub heat_pump: HeatPumpParams,
    pub gains: GainsSchedule,
}

struct Couplings {
    g_ext_in: f64,
    g_ext_out: f64,
    g_int: f64,
    g_floor_in: f64,
    g_floor_out: f64,
    g_roof_in: f64,
    g_roof_out: f64,
    g_vent: f64,
}

impl Couplings {
    fn new(p: &ThermalParams) -> Self {
        Self {
            g_ext_in: 1.0 / p.r_ext,
            g_ext_out: 1.0 / p.r_ext_rest,
            g_int: 1.0 / p.r_int,
            g_floor_in: 1.0 / p.r_floor,
            g_floor_out: 1.0 / p.r_floor_rest,
            g_roof_in: 1.0 / p.r_roof,
            g_roof_out: 1.0 / p.r_roof_rest,
            g_vent: p.ventilation_conductance(),
        }
    }
}

impl Simulator {
    pub fn new(params: ThermalParams, heat_pump: HeatPumpParams, gains: GainsSchedule) -> Result<Self> {
        params.validate()?;
        heat_pump.validate()?;
        gains.validate()?;
        Ok(Self {
            params,
            heat_pump,
            gains,
        })
    }

    /// Non-heat-pump flows into the air node for `state` under `outdoor`.
    pub fn air_balance(&self, state: &ThermalState, outdoor: &WeatherRecord) -> AirBalance {
        let p = &self.params;
        let g = Couplings::new(p);
        let t_out = c_to_k(outdoor.temp);
        let gains = self.gains.gain_w(outdoor.timestamp, p.floor_area) + outdoor.solar.max(0.0) * p.solar_aperture;
        AirBalance {
            drive: g.g_ext_in * state.t_ext_wall
                + g.g_int * state.t_int_wall
                + g.g_floor_in * state.t_floor
                + g.g_roof_in * state.t_roof
                + g.g_vent * t_out
                + gains,
            conductance: g.g_ext_in + g.g_int + g.g_floor_in + g.g_roof_in + g.g_vent,
        }
    }

    /// Advances `state` by `dt` seconds at compressor speed `n_set`, with
    /// `outdoor` held constant over the step.
    pub fn step(&self, state: &ThermalState, outdoor: &WeatherRecord, n_set: f64, dt: f64) -> Result<StepOutput> {
        self.step_with_substep(state, outdoor, n_set, dt, MAX_SUBSTEP_S)
    }

    /// As [`Simulator::step`] with an explicit upper bound on the RK4 substep.
    pub fn step_with_substep(
        &self,
        state: &ThermalState,
        outdoor: &WeatherRecord,
        n_set: f64,
        dt: f64,
        max_substep: f64,
    ) -> Result<StepOutput> {
        if !(max_substep.is_finite() && max_substep > 0.0) {
            return Err(Error::arg("max_substep must be > 0"));
        }
        if !(0.0..=1.0).contains(&n_set) {
            return Err(Error::arg(format!("n_set must lie in [0, 1], got {n_set}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::arg(format!("dt must be > 0, got {dt}")));
        }
        if !outdoor.temp.is_finite() || !outdoor.solar.is_finite() {
            return Err(Error::arg("non-finite outdoor conditions"));
        }
        state.check()?;

        let p = &self.params;
        let hp = &self.heat_pump;
        let g = Couplings::new(p);
        let t_out = c_to_k(outdoor.temp);
        let t_ground = p.ground_temp;

        // Caps injection so the air node alone cannot be pushed past the sanity bound.
        let headroom = ((T_MAX_K - state.t_air) * p.c_air / dt).max(0.0);
        let q_heat = (n_set * hp.q_nominal).min(headroom);
        let internal = self.gains.gain_w(outdoor.timestamp, p.floor_area);
        let solar = outdoor.solar.max(0.0) * p.solar_aperture;
        let q_air = q_heat + internal + solar;

        // y = [air, ext, int, floor, roof, cumulative boundary loss]
        let y0 = [
            state.t_air,
            state.t_ext_wall,
            state.t_int_wall,
            state.t_floor,
            state.t_roof,
            0.0,
        ];
        let rhs = |y: &[f64; 6]| -> [f64; 6] {
            let [ta, te, ti, tf, tr, _] = *y;
            let f_ext = g.g_ext_in * (te - ta);
            let f_int = g.g_int * (ti - ta);
            let f_floor = g.g_floor_in * (tf - ta);
            let f_roof = g.g_roof_in * (tr - ta);
            let f_vent = g.g_vent * (t_out - ta);
            let out_ext = g.g_ext_out * (te - t_out);
            let out_floor = g.g_floor_out * (tf - t_ground);
            let out_roof = g.g_roof_out * (tr - t_out);
            [
                (f_ext + f_int + f_floor + f_roof + f_vent + q_air) / p.c_air,
                (-f_ext - out_ext) / p.c_ext,
                -f_int / p.c_int,
                (-f_floor - out_floor) / p.c_floor,
                (-f_roof - out_roof) / p.c_roof,
                out_ext + out_floor + out_roof - f_vent,
            ]
        };
        let y = rk4_integrate(&y0, dt, max_substep, rhs);
        let next_state = state.with_temperatures(&y[..5], state.sim_time + dt);
        next_state.check()?;

        let cop = cop(t_out, state.t_air + hp.supply_offset, hp)?;
        let p_el = if q_heat > 0.0 { q_heat / cop } else { 0.0 };
        Ok(StepOutput {
            next_state,
            p_el,
            q_heat,
            cop,
            balance: StepBalance {
                injected: q_heat * dt,
                internal: internal * dt,
                solar: solar * dt,
                boundary_loss: y[5],
            },
        })
    }

    /// Runs `controls` against `weather` step by step from `state0`.
    pub fn simulate_horizon(
        &self,
        state0: &ThermalState,
        weather: &[WeatherRecord],
        controls: &[f64],
        dt: f64,
    ) -> Result<Trace> {
        if weather.len() != controls.len() {
            return Err(Error::arg(format!(
                "weather ({}) and controls ({}) differ in length",
                weather.len(),
                controls.len()
            )));
        }
        if weather.is_empty() {
            return Err(Error::arg("horizon must contain at least one step"));
        }
        let mut steps = Vec::with_capacity(controls.len());
        let mut state = *state0;
        let mut energy_j = 0.0;
        for (rec, &u) in weather.iter().zip(controls) {
            let out = self.step(&state, rec, u, dt)?;
            energy_j += out.p_el * dt;
            state = out.next_state;
            steps.push(out);
        }
        Ok(Trace { steps, energy_j })
    }
}

/// Free-function form of [`Simulator::step`].
#[allow(clippy::too_many_arguments)]
pub fn step(
    params: &ThermalParams,
    hp: &HeatPumpParams,
    state: &ThermalState,
    outdoor: &WeatherRecord,
    gains: &GainsSchedule,
    n_set: f64,
    dt: f64,
) -> Result<StepOutput> {
    Simulator::new(*params, *hp, *gains)?.step(state, outdoor, n_set, dt)
}

/// Free-function form of [`Simulator::simulate_horizon`].
pub fn simulate_horizon(
    params: &ThermalParams,
    hp: &HeatPumpParams,
    state0: &ThermalState,
    weather: &[WeatherRecord],
    controls: &[f64],
    gains: &GainsSchedule,
    dt: f64,
) -> Result<Trace> {
    Simulator::new(*params, *hp, *gains)?.simulate_horizon(state0, weather, controls, dt)
}
