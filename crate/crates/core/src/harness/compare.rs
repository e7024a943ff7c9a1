use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::ExperimentResult;
use super::scenario::Strategy;
use crate::error::{Error, Result};
use crate::weather::format_timestamp;

type Channel = (&'static str, fn(&super::TraceRow) -> f64);

/// Relative reduction of `energy` against `baseline`, in percent.
pub fn percent_saving(baseline: f64, energy: f64) -> f64 {
    (baseline - energy) / baseline * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub energy_per_day_per_m2: f64,
    /// Against the first result.
    pub saving_percent: f64,
    pub comfort_violation_fraction: f64,
    pub night_violation_fraction: f64,
    pub mean_cop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Tabulates results against the first one. All results must share the
/// scenario core and cover the same intervals.
pub fn compare(results: &[ExperimentResult]) -> Result<Comparison> {
    let Some(first) = results.first() else {
        return Err(Error::Comparison("need at least two results".into()));
    };
    if results.len() < 2 {
        return Err(Error::Comparison("need at least two results".into()));
    }
    let core = first.scenario.core()?;
    for r in &results[1..] {
        if r.scenario.core()? != core {
            return Err(Error::Comparison(format!(
                "{} ran on a different scenario than {}",
                r.strategy.name(),
                first.strategy.name()
            )));
        }
        if r.traces.len() != first.traces.len() {
            return Err(Error::Comparison("traces differ in length".into()));
        }
    }
    let base = first.energy_per_day_per_m2;
    let rows = results
        .iter()
        .map(|r| ComparisonRow {
            strategy: r.strategy,
            energy_per_day_per_m2: r.energy_per_day_per_m2,
            saving_percent: if base > 0.0 {
                percent_saving(base, r.energy_per_day_per_m2)
            } else {
                0.0
            },
            comfort_violation_fraction: r.comfort_violation_fraction,
            night_violation_fraction: r.night_violation_fraction,
            mean_cop: r.mean_cop,
        })
        .collect();
    Ok(Comparison { rows })
}

impl Comparison {
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:>22} {:>10} {:>14} {:>12} {:>9}",
            "strategy", "energy kWh/(day*m2)", "saving %", "occupied viol", "night viol", "mean COP"
        );
        for r in &self.rows {
            let cop = r.mean_cop.map_or_else(|| "-".to_string(), |c| format!("{c:.2}"));
            let _ = writeln!(
                s,
                "{:<8} {:>22.5} {:>10.1} {:>13.1}% {:>11.1}% {:>9}",
                r.strategy.name(),
                r.energy_per_day_per_m2,
                r.saving_percent,
                r.comfort_violation_fraction * 100.0,
                r.night_violation_fraction * 100.0,
                cop
            );
        }
        s
    }

    /// Writes `summary.txt`, `summary.json` and one aligned CSV per trace
    /// channel (`nset.csv`, `indoor.csv`, `cop.csv`).
    pub fn write_artifacts(&self, results: &[ExperimentResult], dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.txt"), self.summary_table())?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(self)?)?;
        let channels: [Channel; 3] = [
            ("nset.csv", |r| r.n_set),
            ("indoor.csv", |r| r.t_air_c),
            ("cop.csv", |r| r.cop),
        ];
        for (file, get) in channels {
            let mut w = csv::Writer::from_path(dir.join(file))?;
            let mut header = vec!["time".to_string(), "setpoint_c".to_string(), "outdoor_c".to_string()];
            header.extend(results.iter().map(|r| r.strategy.name().to_string()));
            w.write_record(&header)?;
            let Some(first) = results.first() else { break };
            for (i, row) in first.traces.iter().enumerate() {
                let mut rec = vec![
                    format_timestamp(row.time),
                    row.setpoint_c.to_string(),
                    row.outdoor_c.to_string(),
                ];
                rec.extend(results.iter().map(|r| get(&r.traces[i]).to_string()));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}
