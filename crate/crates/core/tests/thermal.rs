use dfc_core::thermal::{cop, GainsSchedule, HeatPumpParams, Simulator, ThermalParams, ThermalState};
use dfc_core::units::{c_to_k, k_to_c};
use dfc_core::weather::{generate_synthetic_weather, WeatherRecord};
use proptest::prelude::*;

const DT: f64 = 600.0;

fn default_sim() -> Simulator {
    Simulator::new(
        ThermalParams::default(),
        HeatPumpParams::default(),
        GainsSchedule::default(),
    )
    .unwrap()
}

#[test]
fn settles_to_ambient_without_inputs() {
    let ambient_c = 5.0;
    let params = ThermalParams {
        ground_temp: c_to_k(ambient_c),
        ..ThermalParams::default()
    };
    let sim = Simulator::new(params, HeatPumpParams::default(), GainsSchedule::zero()).unwrap();
    let mut state = ThermalState::uniform(c_to_k(ambient_c));
    state.t_air += 1.0;
    let mut worst = f64::INFINITY;
    for k in 0..(72 * 6) {
        let rec = WeatherRecord::calm(k * 600, ambient_c);
        state = sim.step(&state, &rec, 0.0, DT).unwrap().next_state;
        let dev = (state.t_air - c_to_k(ambient_c)).abs();
        assert!(dev <= worst + 1e-12, "air deviation grew at step {k}");
        worst = dev;
    }
    for t in state.temperatures() {
        assert!((k_to_c(t) - ambient_c).abs() < 0.01, "node at {} °C", k_to_c(t));
    }
}

#[test]
fn uniform_ambient_is_a_fixed_point() {
    let params = ThermalParams {
        ground_temp: c_to_k(-2.0),
        ..ThermalParams::default()
    };
    let sim = Simulator::new(params, HeatPumpParams::default(), GainsSchedule::zero()).unwrap();
    let s0 = ThermalState::uniform(c_to_k(-2.0));
    let out = sim.step(&s0, &WeatherRecord::calm(0, -2.0), 0.0, DT).unwrap();
    for (a, b) in out.next_state.temperatures().iter().zip(s0.temperatures()) {
        assert!((a - b).abs() < 1e-9);
    }
    assert_eq!(out.p_el, 0.0);
}

fn mixed_controls(k: usize) -> f64 {
    // Blocks of off, partial and full speed with a slow sawtooth.
    match (k / 9) % 4 {
        0 => 0.0,
        1 => 1.0,
        2 => 0.35,
        _ => (k % 18) as f64 / 17.0,
    }
}

#[test]
fn energy_balance_against_fine_reference() {
    let sim = default_sim();
    let weather = generate_synthetic_weather(5, 7, 600).unwrap();
    let s0 = ThermalState::uniform(c_to_k(20.0));
    let (mut coarse, mut fine) = (s0, s0);
    let (mut loss_c, mut loss_f, mut inflow_c, mut inflow_f) = (0.0, 0.0, 0.0, 0.0);
    let (mut el_c, mut el_f) = (0.0, 0.0);
    let mut closure = 0.0f64;
    for (k, rec) in weather.records().iter().enumerate() {
        let u = mixed_controls(k);
        let a = sim.step(&coarse, rec, u, DT).unwrap();
        let b = sim.step_with_substep(&fine, rec, u, DT, DT / 100.0).unwrap();
        let stored_gain = a.next_state.stored_energy(&sim.params) - coarse.stored_energy(&sim.params);
        closure = closure.max((stored_gain - a.balance.net_input()).abs() / a.balance.injected.abs().max(1e3));
        loss_c += a.balance.boundary_loss;
        loss_f += b.balance.boundary_loss;
        inflow_c += a.balance.injected + a.balance.internal + a.balance.solar;
        inflow_f += b.balance.injected + b.balance.internal + b.balance.solar;
        el_c += a.p_el * DT;
        el_f += b.p_el * DT;
        coarse = a.next_state;
        fine = b.next_state;
    }
    // First law per step, to integrator round-off.
    assert!(closure < 1e-6, "per-step closure residual {closure}");
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    assert!(rel(loss_c, loss_f) < 0.01, "boundary loss {loss_c} vs {loss_f}");
    assert!(rel(inflow_c, inflow_f) < 0.01);
    assert!(rel(el_c, el_f) < 0.01, "electrical {el_c} vs {el_f}");
    for (a, b) in coarse.temperatures().iter().zip(fine.temperatures()) {
        assert!((a - b).abs() < 0.01);
    }
}

#[test]
fn horizon_energy_is_sum_of_steps() {
    let sim = default_sim();
    let weather = generate_synthetic_weather(9, 2, 600).unwrap();
    let controls: Vec<f64> = (0..weather.len()).map(mixed_controls).collect();
    let s0 = ThermalState::uniform(c_to_k(19.0));
    let trace = sim.simulate_horizon(&s0, weather.records(), &controls, DT).unwrap();
    let mut state = s0;
    let mut total = 0.0;
    for (rec, &u) in weather.records().iter().zip(&controls) {
        let out = sim.step(&state, rec, u, DT).unwrap();
        total += out.p_el * DT;
        state = out.next_state;
    }
    assert_eq!(trace.energy_j, total);
    assert_eq!(trace.final_state().unwrap(), &state);
    assert!(sim
        .simulate_horizon(&s0, weather.records(), &controls[1..], DT)
        .is_err());
}

#[test]
fn heat_pump_draw_follows_cop() {
    let sim = default_sim();
    let s0 = ThermalState::uniform(c_to_k(20.0));
    let out = sim.step(&s0, &WeatherRecord::calm(0, 0.0), 0.5, DT).unwrap();
    let t_sink = c_to_k(30.0);
    let expected = (0.4 * t_sink / 30.0).clamp(1.0, 6.0);
    assert!((out.cop - expected).abs() < 1e-12);
    assert!((out.p_el - 9250.0 / expected).abs() < 1e-9);
}

proptest! {
    #[test]
    fn more_speed_means_warmer_air(u in 0.0f64..0.99, du in 0.005f64..0.5, out_c in -15.0f64..15.0, air_c in 15.0f64..24.0) {
        let sim = default_sim();
        let mut s = ThermalState::uniform(c_to_k(19.0));
        s.t_air = c_to_k(air_c);
        let rec = WeatherRecord::calm(3600 * 9, out_c);
        let lo = sim.step(&s, &rec, u, DT).unwrap();
        let hi = sim.step(&s, &rec, (u + du).min(1.0), DT).unwrap();
        prop_assert!(hi.next_state.t_air > lo.next_state.t_air);
        prop_assert!(hi.p_el >= lo.p_el);
    }

    #[test]
    fn warmer_outdoors_means_warmer_air(u in 0.0f64..=1.0, out_c in -15.0f64..15.0, d in 0.1f64..10.0) {
        let sim = default_sim();
        let s = ThermalState::uniform(c_to_k(20.0));
        let cold = sim.step(&s, &WeatherRecord::calm(0, out_c), u, DT).unwrap();
        let warm = sim.step(&s, &WeatherRecord::calm(0, out_c + d), u, DT).unwrap();
        prop_assert!(warm.next_state.t_air > cold.next_state.t_air);
    }

    #[test]
    fn cop_stays_in_bounds(src in 200.0f64..400.0, sink in 200.0f64..400.0) {
        let hp = HeatPumpParams::default();
        let c = cop(src, sink, &hp).unwrap();
        prop_assert!(c >= hp.cop_min && c <= hp.cop_max);
    }

    #[test]
    fn cop_falls_as_lift_grows(src in 250.0f64..290.0, lift in 1.0f64..40.0, extra in 0.1f64..20.0) {
        let hp = HeatPumpParams::default();
        let near = cop(src, src + lift, &hp).unwrap();
        let far = cop(src, src + lift + extra, &hp).unwrap();
        prop_assert!(far <= near);
    }
}
