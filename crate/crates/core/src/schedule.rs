//! Optimal prosumer consumption under a NEM X tariff.
//!
//! The optimal bundle follows a two-threshold policy. With
//! `d+ = Σ clamp(V⁻¹(π⁺))` and `d- = Σ clamp(V⁻¹(π⁻))`:
//!
//! * `r < d+`: net consumption, every device consumes `clamp(V⁻¹(π⁺))`;
//! * `r > d-`: net production, every device consumes `clamp(V⁻¹(π⁻))`;
//! * `d+ <= r <= d-`: net zero, devices share a common marginal utility
//!   `μ* ∈ [π⁻, π⁺]` chosen so that total consumption equals `r`.
//!
//! `μ*` is found by bisection on the decreasing function
//! `F(μ) = Σ clamp(V⁻¹(μ)) - r`, for which `F(π⁺) <= 0 <= F(π⁻)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tariff::TariffParams;
use crate::utility::{DeviceSet, DeviceUtility};

/// Largest accepted `|Σd - r|` in the net-zero zone (kWh).
pub const BALANCE_TOL: f64 = 1e-7;
/// Required accuracy of the shadow price. Bisection runs to machine resolution, well inside this.
pub const MU_TOL: f64 = 1e-9;
pub const MAX_BISECTION_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    NetConsumption,
    NetZero,
    NetProduction,
}

impl Zone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::NetConsumption => "net_consumption",
            Zone::NetZero => "net_zero",
            Zone::NetProduction => "net_production",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    /// Per-device consumption (kWh), in device order.
    pub consumption: Vec<f64>,
    pub zone: Zone,
    /// Common marginal utility in the net-zero zone.
    pub mu_star: Option<f64>,
    /// Net consumption `Σd - r`.
    pub net: f64,
    /// Surplus `U(d) - P(net)`.
    pub surplus: f64,
    pub payment: f64,
}

impl Schedule {
    pub fn total(&self) -> f64 {
        self.consumption.iter().sum()
    }

    fn evaluate(devices: &DeviceSet, params: &TariffParams, r: f64, consumption: Vec<f64>, zone: Zone, mu_star: Option<f64>) -> Self {
        let net = consumption.iter().sum::<f64>() - r;
        let payment = params.charge(net);
        let surplus = devices.total_utility(&consumption) - payment;
        Self {
            consumption,
            zone,
            mu_star,
            net,
            surplus,
            payment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Total consumption at the retail rate; lower edge of the net-zero zone.
    pub d_plus: f64,
    /// Total consumption at the sell rate; upper edge of the net-zero zone.
    pub d_minus: f64,
}

impl Thresholds {
    pub fn zone_of(&self, r: f64) -> Zone {
        if r < self.d_plus {
            Zone::NetConsumption
        } else if r > self.d_minus {
            Zone::NetProduction
        } else {
            Zone::NetZero
        }
    }
}

pub fn thresholds(devices: &DeviceSet, params: &TariffParams) -> Thresholds {
    Thresholds {
        d_plus: devices.demand_at(params.retail_rate()),
        d_minus: devices.demand_at(params.sell_rate()),
    }
}

fn bundle_at(devices: &DeviceSet, price: f64) -> Vec<f64> {
    devices.iter().map(|dev| dev.inverse_marginal_clamped(price)).collect()
}

/// Optimal consumption for renewable output `r >= 0` (kWh).
pub fn optimal_schedule(devices: &DeviceSet, params: &TariffParams, r: f64) -> Result<Schedule> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::invalid("r", format!("renewable output must be finite and >= 0, got {r}")));
    }
    let th = thresholds(devices, params);
    let schedule = match th.zone_of(r) {
        Zone::NetConsumption => Schedule::evaluate(
            devices,
            params,
            r,
            bundle_at(devices, params.retail_rate()),
            Zone::NetConsumption,
            None,
        ),
        Zone::NetProduction => Schedule::evaluate(
            devices,
            params,
            r,
            bundle_at(devices, params.sell_rate()),
            Zone::NetProduction,
            None,
        ),
        Zone::NetZero => {
            let mu = shadow_price(devices, params, r)?;
            Schedule::evaluate(devices, params, r, bundle_at(devices, mu), Zone::NetZero, Some(mu))
        }
    };
    Ok(schedule)
}

/// Bisection for `Σ clamp(V⁻¹(μ)) = r` on `[π⁻, π⁺]`.
fn shadow_price(devices: &DeviceSet, params: &TariffParams, r: f64) -> Result<f64> {
    let excess = |mu: f64| devices.demand_at(mu) - r;
    let (mut lo, mut hi) = (params.sell_rate(), params.retail_rate());
    let mut iterations = 0;
    while iterations < MAX_BISECTION_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mu = 0.5 * (lo + hi);
    let residual = excess(mu);
    if hi - lo > MU_TOL || residual.abs() > BALANCE_TOL {
        return Err(Error::NoConvergence {
            solver: "net-zero shadow price bisection",
            iterations,
            residual,
        });
    }
    Ok(mu)
}

/// Ranking of a device by its marginal utility at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    /// `V(0) > π⁺`: consumes in every zone.
    AlwaysOn,
    /// `π⁻ <= V(0) <= π⁺`: consumes only beyond the net-consumption zone.
    ConditionalOn,
    /// `V(0) < π⁻`: never scheduled.
    NeverOn,
}

pub fn classify_device(dev: &DeviceUtility, params: &TariffParams) -> DeviceClass {
    // A device with no capacity can never consume, whatever its marginal utility.
    if dev.d_max() == 0.0 || dev.a() < params.sell_rate() {
        DeviceClass::NeverOn
    } else if dev.a() > params.retail_rate() {
        DeviceClass::AlwaysOn
    } else {
        DeviceClass::ConditionalOn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemandPoint {
    pub r: f64,
    pub total_consumption: f64,
    pub zone: Zone,
}

/// Total optimal consumption along an ascending grid of renewable outputs.
pub fn demand_curve(devices: &DeviceSet, params: &TariffParams, r_grid: &[f64]) -> Result<Vec<DemandPoint>> {
    if let Some(i) = r_grid.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid(
            "r_grid",
            format!("must be sorted ascending; entry {} ({}) > entry {} ({})", i, r_grid[i], i + 1, r_grid[i + 1]),
        ));
    }
    r_grid
        .iter()
        .map(|&r| {
            let s = optimal_schedule(devices, params, r)?;
            Ok(DemandPoint {
                r,
                total_consumption: s.total(),
                zone: s.zone,
            })
        })
        .collect()
}

pub use crate::brute_force::brute_force_schedule;
