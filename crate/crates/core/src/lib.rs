//! Building heating control laboratory.
//!
//! The crate couples a four-element lumped-capacitance zone model with a
//! variable-speed heat pump ([`thermal`]), an exact greedy gradient-boosting
//! engine ([`gbdt`]), rolling-window weather forecasting ([`forecasting`]),
//! and three heating controllers ([`control`]): a PID loop, an incremental
//! stepper, and the dynamic feedforward planner that boosts an indoor
//! temperature reference trajectory through repeated simulation passes.
//! [`harness`] runs closed-loop experiments and compares strategies.

pub mod control;
pub mod error;
pub mod forecasting;
pub mod gbdt;
pub mod harness;
pub mod thermal;
pub mod units;
pub mod weather;

pub use error::{Error, Result};
