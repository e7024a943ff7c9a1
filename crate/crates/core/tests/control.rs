use dfc_core::control::{
    dfc_plan, inverse_track, pid_step, rc2_step, ComfortSchedule, ControlState, Controller, DfcConfig, DfcController,
    Observation, PidController, PidState, PlanContext, Rc2Controller, RC2_STEP,
};
use dfc_core::gbdt::{LossFunction, TreeConfig};
use dfc_core::thermal::{GainsSchedule, HeatPumpParams, Simulator, ThermalParams, ThermalState};
use dfc_core::units::{c_to_k, k_to_c};
use dfc_core::weather::WeatherRecord;
use dfc_core::Error;
use proptest::prelude::*;

const DT: f64 = 600.0;
const MIDNIGHT: i64 = 1_609_459_200;

fn sim() -> Simulator {
    Simulator::new(
        ThermalParams::default(),
        HeatPumpParams::default(),
        GainsSchedule::zero(),
    )
    .unwrap()
}

fn weather(start: i64, n: usize, temp: f64) -> Vec<WeatherRecord> {
    (0..n)
        .map(|i| WeatherRecord::calm(start + 600 * i as i64, temp))
        .collect()
}

fn ctx() -> PlanContext {
    PlanContext {
        indoor: vec![18.0, 18.0],
        n_sets: vec![0.0, 0.0],
    }
}

/// Textbook positional PID with output clamping and conditional integration.
struct TextbookPid {
    kp: f64,
    ki: f64,
    integral: f64,
}

impl TextbookPid {
    fn update(&mut self, error: f64, dt: f64) -> f64 {
        let trial = self.kp * error + self.ki * self.integral;
        let saturated = (trial >= 1.0 && error > 0.0) || (trial <= 0.0 && error < 0.0);
        if !saturated {
            self.integral = (self.integral + error * dt).clamp(-1.0 / self.ki, 1.0 / self.ki);
        }
        (self.kp * error + self.ki * self.integral).clamp(0.0, 1.0)
    }
}

#[test]
fn pid_matches_textbook_loop_on_first_order_plant() {
    // τ·x' = −(x − ambient) + gain·u, discretised exactly.
    let (tau, ambient, gain, setpoint, dt) = (1800.0_f64, 5.0, 25.0, 21.0, 60.0);
    let a = (-dt / tau).exp();
    let mut pid = PidState::with_gains(0.4, 0.002, 0.0);
    let mut oracle = TextbookPid {
        kp: 0.4,
        ki: 0.002,
        integral: 0.0,
    };
    let mut x = ambient;
    let mut tail = Vec::new();
    for k in 0..2000 {
        let (u, next) = pid_step(&pid, setpoint, x, dt);
        let u_ref = oracle.update(setpoint - x, dt);
        assert!((u.n_set() - u_ref).abs() < 1e-12, "step {k}: {} vs {u_ref}", u.n_set());
        pid = next;
        x = ambient + gain * u.n_set() + (x - ambient - gain * u.n_set()) * a;
        if k >= 1500 {
            tail.push(x);
        }
    }
    assert!(
        tail.iter().all(|t| (t - setpoint).abs() <= 0.1),
        "did not settle: {:?}",
        tail.last()
    );
}

#[test]
fn pid_controller_reads_setpoint_at_interval_end() {
    let mut c = PidController::new(ComfortSchedule::default(), PidState::default());
    // 06:50 start, interval ends at 07:00 when the day setpoint applies.
    let obs = Observation {
        time: MIDNIGHT + 6 * 3600 + 3000,
        dt: DT,
        state: ThermalState::uniform(c_to_k(20.0)),
        weather: WeatherRecord::calm(MIDNIGHT + 6 * 3600 + 3000, 0.0),
        n_set: ControlState::OFF,
    };
    let u = c.step(&obs).unwrap();
    let (expected, _) = pid_step(&PidState::default(), 21.0, 20.0, DT);
    assert_eq!(u, expected);
}

proptest! {
    #[test]
    fn rc2_moves_one_increment_in_the_right_direction(n in 0.0f64..=1.0, measured in 10.0f64..30.0, sp in 18.0f64..22.0) {
        let next = rc2_step(ControlState::new(n), measured, sp, 0.5).n_set();
        prop_assert!((0.0..=1.0).contains(&next));
        prop_assert!((next - n).abs() <= RC2_STEP + 1e-12);
        if measured < sp {
            prop_assert!(next >= n);
        } else if measured > sp + 0.5 {
            prop_assert!(next <= n);
        } else {
            prop_assert_eq!(next, n);
        }
    }

    #[test]
    fn inverse_tracker_stays_in_range(air in 10.0f64..30.0, outdoor in -15.0f64..15.0, reference in 10.0f64..30.0) {
        let s = sim();
        let mut state = ThermalState::uniform(c_to_k(19.0));
        state.t_air = c_to_k(air);
        let u = inverse_track(&s, &state, &WeatherRecord::calm(0, outdoor), c_to_k(reference), 1.0, DT);
        prop_assert!((0.0..=1.0).contains(&u));
    }
}

#[test]
fn predictive_rc2_anticipates_the_morning_step() {
    let sched = ComfortSchedule::default();
    let state = ThermalState::uniform(c_to_k(19.2));
    // 06:50: the next interval ends at 07:00, the lookahead reaches past it.
    let obs = Observation {
        time: MIDNIGHT + 6 * 3600 + 3000,
        dt: DT,
        state,
        weather: WeatherRecord::calm(MIDNIGHT + 6 * 3600 + 3000, 0.0),
        n_set: ControlState::new(0.2),
    };
    let mut reactive = Rc2Controller::reactive(sched);
    let mut predictive = Rc2Controller::predictive(sched, sim(), 3);
    assert_eq!(reactive.step(&obs).unwrap().n_set(), 0.25);
    assert_eq!(predictive.step(&obs).unwrap().n_set(), 0.25);
    let early = Observation {
        time: MIDNIGHT + 6 * 3600 + 1800,
        ..obs
    };
    assert_eq!(reactive.step(&early).unwrap().n_set(), 0.2);
    assert_eq!(predictive.step(&early).unwrap().n_set(), 0.25);
}

#[test]
fn single_leaf_single_round_by_hand() {
    let s = sim();
    let state = ThermalState::uniform(c_to_k(17.0));
    let sched = ComfortSchedule::default();
    // 06:00 to 08:00, so targets mix night and day setpoints.
    let fc = weather(MIDNIGHT + 6 * 3600, 12, 0.0);
    let cfg = DfcConfig {
        iterations: 1,
        learning_rate: 1.0,
        tree: TreeConfig {
            max_leaves: 1,
            min_samples_leaf: 1,
        },
        ..DfcConfig::default()
    };
    let r = dfc_plan(&ctx(), &fc, &state, ControlState::OFF, &sched, &cfg, &s, DT).unwrap();

    let targets: Vec<f64> = fc.iter().map(|w| sched.setpoint(w.timestamp + 600)).collect();
    assert_eq!(r.targets, targets);
    let f0 = targets.iter().sum::<f64>() / targets.len() as f64;
    assert!((r.initial_constant.unwrap() - f0).abs() < 1e-12);

    // Independent closed-loop tracking of a flat reference.
    let follow = |reference: &[f64]| {
        let mut st = state;
        let mut temps = Vec::new();
        let mut controls = Vec::new();
        for (w, &r) in fc.iter().zip(reference) {
            let u = inverse_track(&s, &st, w, c_to_k(r), 1.0, DT);
            st = s.step(&st, w, u, DT).unwrap().next_state;
            temps.push(k_to_c(st.t_air));
            controls.push(u);
        }
        (temps, controls)
    };
    let loss = |temps: &[f64]| {
        targets
            .iter()
            .zip(temps)
            .map(|(t, f)| 0.5 * (t - f) * (t - f))
            .sum::<f64>()
    };
    let (realized0, _) = follow(&[f0; 12]);
    assert!((r.loss_history[0] - loss(&realized0)).abs() < 1e-9);

    let shift = targets.iter().zip(&realized0).map(|(t, f)| t - f).sum::<f64>() / 12.0;
    let (realized1, controls1) = follow(&[f0 + shift; 12]);
    if loss(&realized1) <= loss(&realized0) {
        assert_eq!(r.rounds, 1);
        for v in &r.reference {
            assert!((v - (f0 + shift)).abs() < 1e-9);
        }
        for (a, b) in r.plan.values().iter().zip(&controls1) {
            assert!((a - b).abs() < 1e-9);
        }
    } else {
        assert_eq!(r.rounds, 0);
    }
}

#[test]
fn planner_is_deterministic_and_monotone() {
    let s = sim();
    let state = ThermalState::uniform(c_to_k(18.2));
    let fc = weather(MIDNIGHT + 5 * 3600, 12, -4.0);
    for loss in [LossFunction::Squared, LossFunction::Absolute] {
        let cfg = DfcConfig {
            loss,
            check_monotone: true,
            iterations: 20,
            ..DfcConfig::default()
        };
        let a = dfc_plan(
            &ctx(),
            &fc,
            &state,
            ControlState::OFF,
            &ComfortSchedule::default(),
            &cfg,
            &s,
            DT,
        )
        .unwrap();
        let b = dfc_plan(
            &ctx(),
            &fc,
            &state,
            ControlState::OFF,
            &ComfortSchedule::default(),
            &cfg,
            &s,
            DT,
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(a.loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.plan.values().iter().all(|u| (0.0..=1.0).contains(u)));
    }
}

#[test]
fn controller_applies_plan_head_after_warm_up() {
    let sched = ComfortSchedule::default();
    let mut c = DfcController::new(sched, DfcConfig::default(), sim(), None).unwrap();
    assert_eq!(c.warm_up_steps(), 2);
    let mut state = ThermalState::uniform(c_to_k(18.0));
    let s = sim();
    let mut n = ControlState::OFF;
    for k in 0..4 {
        let t = MIDNIGHT + 6 * 3600 + k * 600;
        let obs = Observation {
            time: t,
            dt: DT,
            state,
            weather: WeatherRecord::calm(t, 0.0),
            n_set: n,
        };
        match c.step(&obs) {
            Err(Error::WarmUp { have: 1, need: 2 }) => assert_eq!(k, 0),
            Ok(u) => {
                assert!(k >= 1);
                assert_eq!(Some(u), c.last_report().unwrap().plan.first());
                n = u;
            }
            Err(e) => panic!("{e}"),
        }
        state = s
            .step(&state, &WeatherRecord::calm(t, 0.0), n.n_set(), DT)
            .unwrap()
            .next_state;
    }
    assert!(DfcController::new(
        sched,
        DfcConfig {
            iterations: 0,
            ..DfcConfig::default()
        },
        sim(),
        None
    )
    .is_err());
}

#[test]
fn controllers_are_interchangeable() {
    let sched = ComfortSchedule::default();
    let s = sim();
    let mut controllers: Vec<Box<dyn Controller>> = vec![
        Box::new(PidController::new(sched, PidState::default())),
        Box::new(Rc2Controller::predictive(sched, s, 1)),
        Box::new(
            DfcController::new(
                sched,
                DfcConfig {
                    lags: 1,
                    ..DfcConfig::default()
                },
                s,
                None,
            )
            .unwrap(),
        ),
    ];
    let names: Vec<&str> = controllers.iter().map(|c| c.name()).collect();
    assert_eq!(names, ["rc1", "rc2", "dfc"]);
    for c in controllers.iter_mut() {
        let mut state = ThermalState::uniform(c_to_k(19.0));
        let mut n = ControlState::OFF;
        for k in 0..36 {
            let t = MIDNIGHT + 4 * 3600 + k * 600;
            let w = WeatherRecord::calm(t, -3.0);
            let obs = Observation {
                time: t,
                dt: DT,
                state,
                weather: w,
                n_set: n,
            };
            n = c.step(&obs).unwrap();
            state = s.step(&state, &w, n.n_set(), DT).unwrap().next_state;
        }
        assert!(
            k_to_c(state.t_air) > 19.3,
            "{} left the room at {}",
            c.name(),
            k_to_c(state.t_air)
        );
    }
}
