//! Synthetic one-day study inputs: sinusoidal rooftop solar and a flat wholesale price.
//!
//! All device parameters here are synthetic.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::ramsey::PolicyKind;

pub const FIXTURE_PV_KW: f64 = 5.1;
/// DC nameplate to delivered AC output (inverter and system losses).
pub const FIXTURE_DERATE: f64 = 0.8;
pub const FIXTURE_PRICE: f64 = 0.035;
/// Daily fixed cost to serve one customer ($/day).
pub const FIXTURE_DAILY_FIXED_COST: f64 = 2.86;
/// Installed cost per kW of PV ($/kW).
pub const FIXTURE_INSTALL_COST_PER_KW: f64 = 4500.0;
pub const SUNRISE_HOUR: f64 = 6.0;
pub const SUNSET_HOUR: f64 = 18.0;
const INTERVALS_PER_HOUR: i64 = 4;

fn day_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 6, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

/// Delivered PV output in kW at fractional hour `t`.
pub fn solar_kw(t: f64) -> f64 {
    if (SUNRISE_HOUR..=SUNSET_HOUR).contains(&t) {
        FIXTURE_DERATE * FIXTURE_PV_KW * (PI * (t - SUNRISE_HOUR) / (SUNSET_HOUR - SUNRISE_HOUR)).sin()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSeries {
    /// Hourly wholesale prices.
    pub prices: Vec<(NaiveDateTime, f64)>,
    /// Quarter-hour generation energy (kWh).
    pub generation: Vec<(NaiveDateTime, f64)>,
}

/// Deterministic series; a seed adds ±10% price noise and up to 20% cloud cover.
pub fn fixture_series(seed: Option<u64>) -> FixtureSeries {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let start = day_start();
    let prices = (0..24)
        .map(|h| {
            let noise = rng.as_mut().map_or(1.0, |r| r.gen_range(0.9..1.1));
            (start + Duration::hours(h), FIXTURE_PRICE * noise)
        })
        .collect();
    let step_hours = 1.0 / INTERVALS_PER_HOUR as f64;
    let generation = (0..24 * INTERVALS_PER_HOUR)
        .map(|k| {
            let mid = (k as f64 + 0.5) * step_hours;
            let cloud = rng.as_mut().map_or(1.0, |r| r.gen_range(0.8..=1.0));
            (start + Duration::minutes(15 * k), solar_kw(mid) * step_hours * cloud)
        })
        .collect();
    FixtureSeries { prices, generation }
}

/// Study configuration for the fixture, with scenario paths relative to the config file.
pub fn fixture_config() -> serde_json::Value {
    json!({
        "devices": [
            {"name": "fridge", "a": 1.5, "b": 1.0, "d_max": 0.3},
            {"name": "hvac", "a": 0.9, "b": 0.8, "d_max": 0.5},
            {"name": "lighting", "a": 1.2, "b": 2.0, "d_max": 0.15},
            {"name": "ev", "a": 0.5, "b": 0.5, "d_max": 0.3},
            {"name": "pool_pump", "a": 0.3, "b": 0.5, "d_max": 0.6}
        ],
        "cost": {
            "fixed_cost_per_customer": FIXTURE_DAILY_FIXED_COST / 24.0,
            "smc_adder": 0.03,
            "env_price": 0.035
        },
        "pv_kw": FIXTURE_PV_KW,
        "policies": [PolicyKind::Nem10, PolicyKind::Nem20, PolicyKind::NemSmc, PolicyKind::NemCbc],
        "gammas": [0.0, 0.1, 0.2, 0.3],
        "payback": {
            "install_cost": FIXTURE_INSTALL_COST_PER_KW * FIXTURE_PV_KW,
            "degradation": 0.005,
            "interest": 0.024,
            "horizon_years": 50
        },
        "scenarios": {"prices": "prices.csv", "generation": "generation.csv", "resample_hours": 1},
        "output_dir": "reports"
    })
}

fn write_series(path: &Path, rows: &[(NaiveDateTime, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", "value"])?;
    for (ts, v) in rows {
        w.write_record([ts.format("%Y-%m-%dT%H:%M:%S").to_string(), format!("{v}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `prices.csv`, `generation.csv` and `study.json` into `dir`; returns the config path.
pub fn write_fixture(dir: &Path, seed: Option<u64>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let series = fixture_series(seed);
    write_series(&dir.join("prices.csv"), &series.prices)?;
    write_series(&dir.join("generation.csv"), &series.generation)?;
    let config = dir.join("study.json");
    let text = serde_json::to_string_pretty(&fixture_config())? + "\n";
    fs::write(&config, text).map_err(|e| Error::io(&config, e))?;
    Ok(config)
}
