use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dfc_core::forecasting::{train_weather_model, WindowSpec};
use dfc_core::gbdt::BoostConfig;
use dfc_core::harness::{compare, run_experiment, run_strategies, Scenario, Strategy};
use dfc_core::weather::{
    generate_synthetic_weather_from, load_weather_csv, parse_timestamp, write_weather_csv, SyntheticClimate,
};

#[derive(Parser)]
#[command(
    name = "dfclab",
    version,
    about = "Heating control experiments on a lumped thermal office model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weather synthesis and forecaster training.
    #[command(subcommand)]
    Weather(WeatherCommand),
    /// Write the reference scenario document.
    Init {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one strategy; writes result.json and trace.csv.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_strategy)]
        strategy: Strategy,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run all three strategies and write the comparison tables and traces.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum WeatherCommand {
    /// Emit a synthetic weather CSV.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        days: u32,
        #[arg(long)]
        out: PathBuf,
        /// Record spacing (s).
        #[arg(long, default_value_t = 600)]
        dt: i64,
        #[arg(long, default_value = "2021-01-01T00:00:00")]
        start: String,
    },
    /// Train and save the one-step outdoor temperature forecaster.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lags: Option<usize>,
        #[arg(long, default_value_t = 200)]
        trees: usize,
        #[arg(long, default_value_t = 600)]
        dt: i64,
        /// Accepted for interface uniformity; training is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::from_name(s).ok_or_else(|| format!("unknown strategy `{s}` (expected rc1, rc2 or dfc)"))
}

/// Input problems exit with 2, everything else with 3.
enum Failure {
    Invalid(anyhow::Error),
    Fault(anyhow::Error),
}

impl From<dfc_core::Error> for Failure {
    fn from(e: dfc_core::Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.into())
        } else {
            Failure::Fault(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Fault(e)
    }
}

fn invalid<T, E: Into<anyhow::Error>>(r: Result<T, E>, what: impl FnOnce() -> String) -> Result<T, Failure> {
    r.map_err(|e| Failure::Invalid(e.into().context(what())))
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut s = invalid(Scenario::load(path), || format!("reading scenario {}", path.display()))?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::Fault)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Weather(WeatherCommand::Synth {
            seed,
            days,
            out,
            dt,
            start,
        }) => {
            let start = invalid(parse_timestamp(&start).map_err(anyhow::Error::msg), || "--start".into())?;
            let series = generate_synthetic_weather_from(seed, start, days, dt, &SyntheticClimate::default())?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_weather_csv(&series, BufWriter::new(file))?;
            println!("wrote {} records to {}", series.len(), out.display());
        }
        Command::Weather(WeatherCommand::Train {
            input,
            model,
            lags,
            trees,
            dt,
            seed: _,
        }) => {
            let series = invalid(load_weather_csv(&input, dt), || format!("reading {}", input.display()))?;
            let mut spec = WindowSpec::default();
            if let Some(l) = lags {
                spec.lag_count = l;
            }
            let cfg = BoostConfig {
                n_iterations: trees,
                ..BoostConfig::default()
            };
            let report = train_weather_model(&series, &spec, &cfg)?;
            report.forecaster.save(&model)?;
            let fmt = |r: Option<f64>| r.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
            println!("train rows: {}  test rows: {}", report.n_train, report.n_test);
            println!("held-out R2: {}", fmt(report.r2));
            println!("persistence R2: {}", fmt(report.persistence_r2));
            println!("model written to {}", model.display());
        }
        Command::Init { out } => {
            fs::write(&out, Scenario::default().to_json()?).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
        }
        Command::Run {
            scenario,
            strategy,
            out,
            seed,
        } => {
            let s = load_scenario(&scenario, seed)?.with_strategy(strategy);
            let result = run_experiment(&s)?;
            create_dir(&out)?;
            result.write_json(BufWriter::new(
                File::create(out.join("result.json")).context("result.json")?,
            ))?;
            result.write_trace_csv(BufWriter::new(
                File::create(out.join("trace.csv")).context("trace.csv")?,
            ))?;
            println!(
                "{}: {:.5} kWh/(day*m2), occupied violations {:.1}%, night violations {:.1}%",
                strategy.name(),
                result.energy_per_day_per_m2,
                result.comfort_violation_fraction * 100.0,
                result.night_violation_fraction * 100.0
            );
        }
        Command::Compare { scenario, out, seed } => {
            let s = load_scenario(&scenario, seed)?;
            let results = run_strategies(&s, &Strategy::ALL)?;
            let table = compare(&results)?;
            create_dir(&out)?;
            table.write_artifacts(&results, &out)?;
            print!("{}", table.summary_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Fault(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
