//! Policy × adoption-fraction study: solve, evaluate, and write reports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{evaluate_metrics, MetricsReport, Payback};
use crate::ramsey::{solve_breakeven, RateSolution, SolverDiagnostics};
use crate::tariff::{CustomerClass, TariffParams, HOURS_PER_DAY};
use crate::welfare::ScenarioSet;

use super::config::StudyConfig;
use super::timeseries::{build_scenarios, load_timeseries, SeriesKind};

pub const RATES_FILE: &str = "rates.csv";
pub const WELFARE_FILE: &str = "welfare.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub const RATES_HEADER: [&str; 10] = ["gamma", "policy", "retail", "sell", "fixed", "welfare", "cs", "us", "env", "feasible"];
pub const WELFARE_HEADER: [&str; 17] = [
    "gamma",
    "policy",
    "index",
    "hour",
    "r",
    "wholesale_price",
    "weight",
    "prosumer_consumption",
    "prosumer_zone",
    "prosumer_payment",
    "consumer_consumption",
    "consumer_payment",
    "customer_surplus",
    "utility_surplus",
    "env_benefit",
    "welfare",
    "feasible",
];
pub const METRICS_HEADER: [&str; 8] = [
    "gamma",
    "policy",
    "expected_bill_saving",
    "annual_saving",
    "cost_shift",
    "payback_years",
    "simple_payback_years",
    "feasible",
];

/// Result of one policy at one adoption fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyCell {
    pub solution: RateSolution,
    pub metrics: MetricsReport,
}

impl StudyCell {
    /// Off-peak prosumer tariff at the scenario-weighted mean wholesale price.
    pub fn reference_params(&self, scens: &ScenarioSet) -> Result<TariffParams> {
        let schedule = &self.solution.tariff.schedule;
        let hour = (0..HOURS_PER_DAY)
            .min_by(|&a, &b| schedule.params_at(a).retail_rate().total_cmp(&schedule.params_at(b).retail_rate()))
            .unwrap_or(0);
        let mean_price: f64 = scens.iter().map(|s| s.weight * s.wholesale_price).sum();
        self.solution.tariff.params_for(hour, mean_price, CustomerClass::Prosumer)
    }
}

/// All cells, ordered by adoption fraction and then by configured policy order.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyResults {
    pub scenarios: ScenarioSet,
    pub cells: Vec<StudyCell>,
}

impl StudyResults {
    pub fn cell(&self, policy: &str, gamma: f64) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.solution.policy == policy && c.solution.gamma == gamma)
    }

    pub fn infeasible_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.solution.feasible).count()
    }
}

pub fn load_scenarios(cfg: &StudyConfig) -> Result<ScenarioSet> {
    let prices = load_timeseries(&cfg.scenarios.prices, SeriesKind::Price)?;
    let generation = load_timeseries(&cfg.scenarios.generation, SeriesKind::Generation)?;
    build_scenarios(&prices, &generation, cfg.scenarios.resample_hours)
}

pub fn evaluate_study(cfg: &StudyConfig, scens: &ScenarioSet) -> Result<StudyResults> {
    let templates = cfg.templates();
    let mut cells = Vec::with_capacity(templates.len() * cfg.gammas.len());
    for &gamma in &cfg.gammas {
        for template in &templates {
            let solution = solve_breakeven(template, &cfg.devices, &cfg.cost, scens, gamma, &cfg.solver)?;
            let metrics = evaluate_metrics(
                &cfg.devices,
                &solution.tariff,
                &cfg.cost,
                scens,
                gamma,
                &cfg.payback,
                cfg.periods_per_day(),
            )?;
            cells.push(StudyCell { solution, metrics });
        }
    }
    Ok(StudyResults {
        scenarios: scens.clone(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub policy: String,
    pub gamma: f64,
    pub solved_retail: f64,
    pub breakeven_residual: f64,
    pub feasible: bool,
    pub welfare: f64,
    pub cost_shift: f64,
    pub payback_years: Payback,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub scenario_count: usize,
    pub periods_per_day: f64,
    pub policies: Vec<String>,
    pub gammas: Vec<f64>,
    pub infeasible_cells: usize,
    pub files: Vec<&'static str>,
    pub cells: Vec<CellSummary>,
}

fn summarize(cfg: &StudyConfig, results: &StudyResults) -> StudySummary {
    StudySummary {
        scenario_count: results.scenarios.len(),
        periods_per_day: cfg.periods_per_day(),
        policies: cfg.templates().into_iter().map(|t| t.name).collect(),
        gammas: cfg.gammas.clone(),
        infeasible_cells: results.infeasible_count(),
        files: vec![RATES_FILE, WELFARE_FILE, METRICS_FILE, SUMMARY_FILE],
        cells: results
            .cells
            .iter()
            .map(|c| CellSummary {
                policy: c.solution.policy.clone(),
                gamma: c.solution.gamma,
                solved_retail: c.solution.solved_retail,
                breakeven_residual: c.solution.breakeven_residual,
                feasible: c.solution.feasible,
                welfare: c.solution.welfare.welfare,
                cost_shift: c.metrics.cost_shift,
                payback_years: c.metrics.payback.discounted,
                diagnostics: c.solution.diagnostics.clone(),
            })
            .collect(),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rates(path: &Path, results: &StudyResults) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RATES_HEADER)?;
    for c in &results.cells {
        let s = &c.solution;
        let p = c.reference_params(&results.scenarios)?;
        w.write_record([
            num(s.gamma),
            s.policy.clone(),
            num(p.retail_rate()),
            num(p.sell_rate()),
            num(p.fixed_charge()),
            num(s.welfare.welfare),
            num(s.welfare.customer_surplus),
            num(s.welfare.utility_surplus),
            num(s.welfare.env_benefit),
            s.feasible.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_welfare(path: &Path, results: &StudyResults) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(WELFARE_HEADER)?;
    for c in &results.cells {
        let s = &c.solution;
        for d in &s.welfare.scenarios {
            w.write_record([
                num(s.gamma),
                s.policy.clone(),
                d.index.to_string(),
                d.hour.to_string(),
                num(d.r),
                num(d.wholesale_price),
                num(d.weight),
                num(d.prosumer_consumption),
                d.prosumer_zone.as_str().to_string(),
                num(d.prosumer_payment),
                num(d.consumer_consumption),
                num(d.consumer_payment),
                num(d.customer_surplus),
                num(d.utility_surplus),
                num(d.env_benefit),
                num(d.welfare),
                s.feasible.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_metrics(path: &Path, results: &StudyResults) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(METRICS_HEADER)?;
    for c in &results.cells {
        let m = &c.metrics;
        w.write_record([
            num(c.solution.gamma),
            c.solution.policy.clone(),
            num(m.expected_bill_saving),
            num(m.annual_saving),
            num(m.cost_shift),
            m.payback.discounted.to_string(),
            m.payback.simple_years.map(num).unwrap_or_default(),
            c.solution.feasible.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_summary(path: &Path, summary: &StudySummary) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes all reports into a staging directory inside `out_dir`, then moves
/// them into place. Nothing is written to `out_dir` itself unless every report
/// was produced.
pub fn write_reports(cfg: &StudyConfig, results: &StudyResults, out_dir: &Path) -> Result<StudySummary> {
    let summary = summarize(cfg, results);
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".nemx-staging-")
        .tempdir_in(out_dir)
        .map_err(|e| Error::io(out_dir, e))?;
    let stage = staging.path();
    write_rates(&stage.join(RATES_FILE), results)?;
    write_welfare(&stage.join(WELFARE_FILE), results)?;
    write_metrics(&stage.join(METRICS_FILE), results)?;
    write_summary(&stage.join(SUMMARY_FILE), &summary)?;
    for name in summary.files.iter() {
        let target = out_dir.join(name);
        fs::rename(stage.join(name), &target).map_err(|e| Error::io(target, e))?;
    }
    Ok(summary)
}

/// Loads scenarios, evaluates every policy × γ cell, and writes the reports.
/// `out_dir` overrides the configured output directory.
pub fn run_study(cfg: &StudyConfig, out_dir: Option<&Path>) -> Result<StudySummary> {
    let scens = load_scenarios(cfg)?;
    let results = evaluate_study(cfg, &scens)?;
    write_reports(cfg, &results, out_dir.unwrap_or(&cfg.output_dir))
}
