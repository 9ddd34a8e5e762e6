use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use nemx::error::{Error, ErrorKind};
use nemx::metrics::{payback_time, PaybackParams};
use nemx::pipeline::study::{evaluate_study, load_scenarios, write_reports};
use nemx::pipeline::{validate_gammas, write_fixture, HouseholdConfig, StudyConfig};
use nemx::schedule::{classify_device, optimal_schedule, thresholds};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(name = "nemx", version, about = "Net metering tariff analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal household schedule for one renewable output.
    Schedule {
        #[arg(long)]
        config: PathBuf,
        /// Behind-the-meter production for the period (kWh).
        #[arg(long)]
        r: f64,
    },
    /// Net-consumption and net-production thresholds.
    Thresholds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Always-on / conditional / never-on class of every device.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Break-even retail rates for every policy and adoption fraction, printed as JSON.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
    /// Full study: rates, welfare and metrics reports.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Report directory; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
    /// Discounted payback time for an annual bill saving.
    Payback {
        /// Annual bill saving ($/year).
        #[arg(long)]
        saving: f64,
        #[arg(long)]
        install_cost: f64,
        #[arg(long, default_value_t = 0.0)]
        degradation: f64,
        #[arg(long, default_value_t = 0.0)]
        interest: f64,
        #[arg(long, default_value_t = 50)]
        horizon: u32,
    },
    /// Write the synthetic one-day study inputs.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        /// Adds reproducible noise to prices and generation.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Successful output plus whether any solve was infeasible.
struct Outcome {
    output: Value,
    infeasible: bool,
}

impl From<Value> for Outcome {
    fn from(output: Value) -> Self {
        Self { output, infeasible: false }
    }
}

fn load_study(config: &Path, gamma: Option<Vec<f64>>) -> Result<StudyConfig, Error> {
    let mut cfg = StudyConfig::load(config)?;
    if let Some(g) = gamma {
        validate_gammas(&g).map_err(|e| e.within("--gamma"))?;
        cfg.gammas = g;
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Schedule { config, r } => {
            let h = HouseholdConfig::load(&config)?;
            Ok(serde_json::to_value(optimal_schedule(&h.devices, &h.tariff, r)?)?.into())
        }
        Command::Thresholds { config } => {
            let h = HouseholdConfig::load(&config)?;
            Ok(serde_json::to_value(thresholds(&h.devices, &h.tariff))?.into())
        }
        Command::Classify { config } => {
            let h = HouseholdConfig::load(&config)?;
            let classes: Vec<Value> = h
                .devices
                .iter()
                .enumerate()
                .map(|(i, d)| json!({"index": i, "name": d.name(), "class": classify_device(d, &h.tariff)}))
                .collect();
            Ok(Value::Array(classes).into())
        }
        Command::Rates { config, gamma } => {
            let cfg = load_study(&config, gamma)?;
            let scens = load_scenarios(&cfg)?;
            let results = evaluate_study(&cfg, &scens)?;
            let rows = results
                .cells
                .iter()
                .map(|c| {
                    let p = c.reference_params(&results.scenarios)?;
                    Ok(json!({
                        "gamma": c.solution.gamma,
                        "policy": c.solution.policy,
                        "retail": p.retail_rate(),
                        "sell": p.sell_rate(),
                        "fixed": p.fixed_charge(),
                        "breakeven_residual": c.solution.breakeven_residual,
                        "feasible": c.solution.feasible,
                    }))
                })
                .collect::<Result<Vec<Value>, Error>>()?;
            Ok(Outcome {
                output: Value::Array(rows),
                infeasible: results.infeasible_count() > 0,
            })
        }
        Command::Study { config, out, gamma } => {
            let cfg = load_study(&config, gamma)?;
            let scens = load_scenarios(&cfg)?;
            let results = evaluate_study(&cfg, &scens)?;
            let out_dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let summary = write_reports(&cfg, &results, &out_dir)?;
            Ok(Outcome {
                output: json!({
                    "output_dir": out_dir,
                    "scenario_count": summary.scenario_count,
                    "cells": summary.cells.len(),
                    "infeasible_cells": summary.infeasible_cells,
                }),
                infeasible: summary.infeasible_cells > 0,
            })
        }
        Command::Payback {
            saving,
            install_cost,
            degradation,
            interest,
            horizon,
        } => {
            let params = PaybackParams {
                install_cost,
                degradation,
                interest,
                horizon_years: horizon,
            };
            Ok(serde_json::to_value(payback_time(saving, &params)?)?.into())
        }
        Command::Fixture { out, seed } => {
            let config = write_fixture(&out, seed)?;
            Ok(json!({"config": config}).into())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Solver => EXIT_INFEASIBLE,
        ErrorKind::Io => EXIT_FAILURE,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Config => "config",
        ErrorKind::Data => "data",
        ErrorKind::Solver => "solver",
        ErrorKind::Io => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.output).expect("JSON values always serialize"));
            if outcome.infeasible {
                eprintln!("{}", json!({"error": {"kind": "infeasible", "message": "no break-even rate within the bracket for at least one cell"}}));
                ExitCode::from(EXIT_INFEASIBLE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": kind_name(e.kind()), "message": e.to_string()}}));
            ExitCode::from(exit_code(&e))
        }
    }
}
