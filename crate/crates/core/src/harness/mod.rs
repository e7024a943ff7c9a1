//! Scenario documents, closed-loop experiments and strategy comparison.

mod compare;
mod experiment;
mod scenario;

pub use compare::{compare, percent_saving, Comparison, ComparisonRow};
pub use experiment::{morning_onsets, run_experiment, run_strategies, ExperimentResult, TraceRow, SUSTAIN_STEPS};
pub use scenario::{ForecasterSettings, Scenario, Strategy, StrategySpec, WeatherSource};
