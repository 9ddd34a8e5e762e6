//! Bill savings, cost shift and DER payback time.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tariff::RetailTariff;
use crate::utility::DeviceSet;
use crate::welfare::{scenario_schedules, CostModel, Scenario, ScenarioSet};

pub const DAYS_PER_YEAR: f64 = 365.0;

/// Payment without DER minus payment with DER for one billing period.
///
/// Negative when a prosumer-only fixed charge outweighs the volumetric saving.
pub fn bill_saving(devices: &DeviceSet, tariff: &RetailTariff, scen: &Scenario) -> Result<f64> {
    let s = scenario_schedules(devices, tariff, scen)?;
    Ok(s.consumer.payment - s.prosumer.payment)
}

/// Probability-weighted bill saving per billing period.
pub fn expected_bill_saving(devices: &DeviceSet, tariff: &RetailTariff, scens: &ScenarioSet) -> Result<f64> {
    scens
        .iter()
        .map(|s| Ok(s.weight * bill_saving(devices, tariff, s)?))
        .sum()
}

/// Bill savings in excess of the avoided cost at the social marginal cost,
/// summed over the rate cycle and scaled by the adoption fraction.
pub fn cost_shift(devices: &DeviceSet, tariff: &RetailTariff, cost: &CostModel, scens: &ScenarioSet, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("adoption fraction must lie in [0, 1], got {gamma}")));
    }
    let n = scens.len() as f64;
    scens
        .iter()
        .map(|s| {
            let excess = bill_saving(devices, tariff, s)? - cost.smc_price(s.wholesale_price) * s.r;
            Ok(gamma * s.weight * n * excess)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaybackParams {
    /// Installed system cost ($).
    pub install_cost: f64,
    /// Annual output degradation, in [0, 1).
    pub degradation: f64,
    /// Annual interest rate, in [0, 1).
    pub interest: f64,
    #[serde(default = "default_horizon")]
    pub horizon_years: u32,
}

fn default_horizon() -> u32 {
    50
}

impl PaybackParams {
    pub fn validate(&self) -> Result<()> {
        if !self.install_cost.is_finite() || self.install_cost <= 0.0 {
            return Err(Error::invalid("install_cost", format!("must be > 0, got {}", self.install_cost)));
        }
        for (name, v) in [("degradation", self.degradation), ("interest", self.interest)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1), got {v}")));
            }
        }
        if self.horizon_years < 1 {
            return Err(Error::invalid("horizon_years", "must be >= 1"));
        }
        Ok(())
    }
}

/// Discounted payback time in whole years. Orders `Years(_)` before `NeverWithinHorizon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payback {
    Years(u32),
    NeverWithinHorizon,
}

impl fmt::Display for Payback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payback::Years(t) => write!(f, "{t}"),
            Payback::NeverWithinHorizon => f.write_str("never"),
        }
    }
}

impl Serialize for Payback {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Payback::Years(t) => serializer.serialize_u32(*t),
            Payback::NeverWithinHorizon => serializer.serialize_str("never"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaybackResult {
    /// Smallest `t` with `Σ_{k=0..=t} ((1-ν)/(1+ζ))^k ΔP >= ξ`.
    pub discounted: Payback,
    /// Undiscounted ratio `ξ / ΔP`, absent when `ΔP <= 0`.
    pub simple_years: Option<f64>,
}

pub fn payback_time(annual_saving: f64, pb: &PaybackParams) -> Result<PaybackResult> {
    pb.validate()?;
    if !annual_saving.is_finite() {
        return Err(Error::invalid("annual_saving", "must be finite"));
    }
    if annual_saving <= 0.0 {
        return Ok(PaybackResult {
            discounted: Payback::NeverWithinHorizon,
            simple_years: None,
        });
    }
    let factor = (1.0 - pb.degradation) / (1.0 + pb.interest);
    let mut cumulative = 0.0;
    let mut discount = 1.0;
    let mut discounted = Payback::NeverWithinHorizon;
    for t in 0..=pb.horizon_years {
        cumulative += discount * annual_saving;
        if cumulative >= pb.install_cost {
            discounted = Payback::Years(t);
            break;
        }
        discount *= factor;
    }
    Ok(PaybackResult {
        discounted,
        simple_years: Some(pb.install_cost / annual_saving),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Expected bill saving per billing period.
    pub expected_bill_saving: f64,
    pub annual_saving: f64,
    /// Cost shift per rate cycle per representative customer.
    pub cost_shift: f64,
    pub payback: PaybackResult,
}

/// All policy metrics for one tariff; the scenario set stands for a representative day
/// of `periods_per_day` billing periods.
pub fn evaluate_metrics(
    devices: &DeviceSet,
    tariff: &RetailTariff,
    cost: &CostModel,
    scens: &ScenarioSet,
    gamma: f64,
    payback: &PaybackParams,
    periods_per_day: f64,
) -> Result<MetricsReport> {
    if !(periods_per_day > 0.0) {
        return Err(Error::invalid("periods_per_day", "must be > 0"));
    }
    let expected = expected_bill_saving(devices, tariff, scens)?;
    let annual_saving = expected * periods_per_day * DAYS_PER_YEAR;
    Ok(MetricsReport {
        expected_bill_saving: expected,
        annual_saving,
        cost_shift: cost_shift(devices, tariff, cost, scens, gamma)?,
        payback: payback_time(annual_saving, payback)?,
    })
}
