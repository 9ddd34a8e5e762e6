//! Break-even retail rate setting.
//!
//! A [`PolicyTemplate`] fixes every tariff degree of freedom except a scalar
//! base retail rate: the sell rate follows a [`SellRule`], the fixed charge a
//! [`FixedChargeRule`], and an optional TOU window scales the retail rate
//! during peak hours. The solver picks the smallest base rate at which the
//! expected utility surplus is zero and reports the welfare there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tariff::{RetailTariff, SellPricing, TariffParams, TouTariff, HOURS_PER_DAY};
use crate::utility::DeviceSet;
use crate::welfare::{social_welfare, CostModel, ScenarioSet, WelfareBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "nem_1_0")]
    Nem10,
    #[serde(rename = "nem_2_0")]
    Nem20,
    #[serde(rename = "nem_smc")]
    NemSmc,
    #[serde(rename = "nem_cbc")]
    NemCbc,
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SellRule {
    /// Sell rate equals the retail rate of the period.
    Equal,
    /// Sell rate sits `delta` $/kWh below the retail rate of the period.
    Offset { delta: f64 },
    /// Sell rate is the social marginal cost of the billing period.
    Smc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedChargeRule {
    Zero,
    /// Same fixed charge per billing period for every customer.
    Uniform { charge: f64 },
    /// Capacity-based charge in $/kW/month on prosumers only, prorated per billing period.
    ProsumerCapacity {
        rate_per_kw_month: f64,
        pv_kw: f64,
        #[serde(default = "default_days_in_month")]
        days_in_month: f64,
        #[serde(default = "default_periods_per_day")]
        periods_per_day: f64,
    },
}

fn default_days_in_month() -> f64 {
    30.0
}

fn default_periods_per_day() -> f64 {
    24.0
}

impl FixedChargeRule {
    /// Prosumer surcharge per billing period, if any.
    pub fn prosumer_surcharge(&self) -> f64 {
        match *self {
            FixedChargeRule::ProsumerCapacity {
                rate_per_kw_month,
                pv_kw,
                days_in_month,
                periods_per_day,
            } => rate_per_kw_month * pv_kw / days_in_month / periods_per_day,
            _ => 0.0,
        }
    }

    fn uniform_charge(&self) -> f64 {
        match *self {
            FixedChargeRule::Uniform { charge } => charge,
            _ => 0.0,
        }
    }
}

/// Peak window `[peak_start, peak_end)` billed at `peak_ratio` times the base retail rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouWindow {
    pub peak_start: u8,
    pub peak_end: u8,
    pub peak_ratio: f64,
}

impl Default for TouWindow {
    fn default() -> Self {
        Self {
            peak_start: 16,
            peak_end: 21,
            peak_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTemplate {
    pub name: String,
    pub kind: PolicyKind,
    pub sell_rule: SellRule,
    pub fixed_charge: FixedChargeRule,
    #[serde(default)]
    pub tou: Option<TouWindow>,
}

/// Sell-rate offset of the NEM 2.0 and CBC presets ($/kWh).
pub const NEM2_SELL_OFFSET: f64 = 0.03;
/// Capacity-based charge of the CBC preset ($/kW-DC/month).
pub const CBC_RATE_PER_KW_MONTH: f64 = 10.93;

impl PolicyTemplate {
    /// The four reference policies, all on the default TOU window.
    ///
    /// `pv_kw` and `periods_per_day` only matter for the capacity-based charge.
    pub fn preset(kind: PolicyKind, pv_kw: f64, periods_per_day: f64) -> Self {
        let (name, sell_rule, fixed_charge) = match kind {
            PolicyKind::Nem10 | PolicyKind::Custom => ("NEM 1.0", SellRule::Equal, FixedChargeRule::Zero),
            PolicyKind::Nem20 => (
                "NEM 2.0",
                SellRule::Offset {
                    delta: NEM2_SELL_OFFSET,
                },
                FixedChargeRule::Zero,
            ),
            PolicyKind::NemSmc => ("NEM SMC", SellRule::Smc, FixedChargeRule::Zero),
            PolicyKind::NemCbc => (
                "NEM CBC",
                SellRule::Offset {
                    delta: NEM2_SELL_OFFSET,
                },
                FixedChargeRule::ProsumerCapacity {
                    rate_per_kw_month: CBC_RATE_PER_KW_MONTH,
                    pv_kw,
                    days_in_month: default_days_in_month(),
                    periods_per_day,
                },
            ),
        };
        Self {
            name: name.to_string(),
            kind,
            sell_rule,
            fixed_charge,
            tou: Some(TouWindow::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SellRule::Offset { delta } = self.sell_rule {
            if !delta.is_finite() || delta < 0.0 {
                return Err(Error::invalid("sell_rule.delta", format!("must be finite and >= 0, got {delta}")));
            }
        }
        match self.fixed_charge {
            FixedChargeRule::Zero => {}
            FixedChargeRule::Uniform { charge } => {
                if !charge.is_finite() {
                    return Err(Error::invalid("fixed_charge.charge", "must be finite"));
                }
            }
            FixedChargeRule::ProsumerCapacity {
                rate_per_kw_month,
                pv_kw,
                days_in_month,
                periods_per_day,
            } => {
                if !pv_kw.is_finite() || pv_kw <= 0.0 {
                    return Err(Error::invalid("fixed_charge.pv_kw", format!("must be > 0, got {pv_kw}")));
                }
                if !rate_per_kw_month.is_finite() {
                    return Err(Error::invalid("fixed_charge.rate_per_kw_month", "must be finite"));
                }
                if !(days_in_month > 0.0) || !(periods_per_day > 0.0) {
                    return Err(Error::invalid("fixed_charge", "days_in_month and periods_per_day must be > 0"));
                }
            }
        }
        if let Some(tou) = &self.tou {
            if tou.peak_start >= tou.peak_end || tou.peak_end > HOURS_PER_DAY {
                return Err(Error::invalid(
                    "tou",
                    format!("peak window [{}, {}) is empty or outside [0, 24)", tou.peak_start, tou.peak_end),
                ));
            }
            if !tou.peak_ratio.is_finite() || tou.peak_ratio < 1.0 {
                return Err(Error::invalid("tou.peak_ratio", format!("must be >= 1, got {}", tou.peak_ratio)));
            }
        }
        Ok(())
    }

    /// Smallest base retail rate the template can be instantiated at.
    pub fn min_retail(&self) -> f64 {
        match self.sell_rule {
            SellRule::Offset { delta } => delta,
            _ => 0.0,
        }
    }

    fn period_params(&self, retail: f64) -> Result<TariffParams> {
        let fixed = self.fixed_charge.uniform_charge();
        let base = TariffParams::flat(retail, fixed)?;
        match self.sell_rule {
            SellRule::Equal | SellRule::Smc => Ok(base),
            SellRule::Offset { delta } => base.with_sell_offset(delta),
        }
    }

    /// Builds the tariff for base retail rate `retail`.
    pub fn instantiate(&self, retail: f64, cost: &CostModel) -> Result<RetailTariff> {
        if !retail.is_finite() || retail <= 0.0 {
            return Err(Error::invalid("retail", format!("base retail rate must be > 0, got {retail}")));
        }
        let off_peak = self.period_params(retail)?;
        let schedule = match &self.tou {
            None => TouTariff::flat(off_peak),
            Some(w) => TouTariff::peak_window(off_peak, self.period_params(retail * w.peak_ratio)?, w.peak_start, w.peak_end)?,
        };
        let sell = match self.sell_rule {
            SellRule::Smc => SellPricing::SocialMarginalCost { adder: cost.smc_adder },
            _ => SellPricing::Schedule,
        };
        Ok(RetailTariff {
            schedule,
            sell,
            prosumer_surcharge: self.fixed_charge.prosumer_surcharge(),
        })
    }
}

/// Numerical settings of the break-even solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RamseySettings {
    /// Search interval for the base retail rate ($/kWh).
    pub bracket: (f64, f64),
    /// Accepted `|E[S_u]|` at a root ($ per billing period).
    pub breakeven_tol: f64,
    /// Resolution of the bisection on the retail rate ($/kWh).
    pub rate_tol: f64,
    pub scan_points: usize,
    pub max_iter: usize,
}

impl Default for RamseySettings {
    fn default() -> Self {
        Self {
            bracket: (0.001, 5.0),
            breakeven_tol: 1e-6,
            rate_tol: 1e-12,
            scan_points: 64,
            max_iter: 200,
        }
    }
}

impl RamseySettings {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return Err(Error::invalid("bracket", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
        }
        if !(self.breakeven_tol > 0.0) || !(self.rate_tol > 0.0) {
            return Err(Error::invalid("tolerances", "breakeven_tol and rate_tol must be > 0"));
        }
        if self.scan_points < 2 {
            return Err(Error::invalid("scan_points", "need at least 2 scan points"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be > 0"));
        }
        Ok(())
    }
}

/// Expected utility surplus at base retail rate `retail`.
pub fn breakeven_residual(
    template: &PolicyTemplate,
    retail: f64,
    devices: &DeviceSet,
    cost: &CostModel,
    scens: &ScenarioSet,
    gamma: f64,
) -> Result<f64> {
    let tariff = template.instantiate(retail, cost)?;
    Ok(social_welfare(devices, &tariff, cost, scens, gamma)?.utility_surplus)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    /// Interval actually searched after applying the template's minimum rate.
    pub bracket: (f64, f64),
    pub scan_sign_changes: usize,
    /// Whether a local maximization between scan points was needed.
    pub peak_refined: bool,
    pub bisection_iterations: usize,
    pub residual_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSolution {
    pub policy: String,
    pub gamma: f64,
    /// Base (off-peak) retail rate.
    pub solved_retail: f64,
    pub tariff: RetailTariff,
    pub breakeven_residual: f64,
    pub welfare: WelfareBreakdown,
    pub feasible: bool,
    pub diagnostics: SolverDiagnostics,
}

/// Smallest break-even base retail rate in `settings.bracket`.
///
/// When the residual never changes sign over the scan, the solution is
/// reported as infeasible at the scan point with the largest residual.
pub fn solve_breakeven(
    template: &PolicyTemplate,
    devices: &DeviceSet,
    cost: &CostModel,
    scens: &ScenarioSet,
    gamma: f64,
    settings: &RamseySettings,
) -> Result<RateSolution> {
    settings.validate()?;
    template.validate()?;
    let (lo, hi) = settings.bracket;
    let lo = lo.max(template.min_retail());
    if lo >= hi {
        return Err(Error::invalid(
            "bracket",
            format!("template needs retail >= {lo}, above the bracket end {hi}"),
        ));
    }

    let mut evaluations = 0usize;
    let mut residual = |x: f64| -> Result<f64> {
        evaluations += 1;
        let v = breakeven_residual(template, x, devices, cost, scens, gamma)?;
        if !v.is_finite() {
            return Err(Error::invalid("breakeven residual", format!("non-finite residual {v} at retail {x}")));
        }
        Ok(v)
    };

    let n = settings.scan_points;
    let xs: Vec<f64> = (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect();
    let rs = xs.iter().map(|&x| residual(x)).collect::<Result<Vec<f64>>>()?;

    let sign_changes = rs.windows(2).filter(|w| w[0] * w[1] < 0.0).count() + rs.iter().filter(|&&r| r == 0.0).count();

    let bisect = |residual: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut fa: f64, mut b: f64| -> Result<(f64, usize)> {
        let mut iterations = 0;
        while iterations < settings.max_iter && b - a > settings.rate_tol {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = residual(mid)?;
            iterations += 1;
            if fm == 0.0 {
                return Ok((mid, iterations));
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        Ok((0.5 * (a + b), iterations))
    };

    let mut root: Option<(f64, usize)> = None;
    for k in 0..n {
        if rs[k] == 0.0 {
            root = Some((xs[k], 0));
            break;
        }
        if k + 1 < n && rs[k] * rs[k + 1] < 0.0 {
            root = Some(bisect(&mut residual, xs[k], rs[k], xs[k + 1])?);
            break;
        }
    }

    let best = rs
        .iter()
        .enumerate()
        .fold(0, |best, (k, &r)| if r > rs[best] { k } else { best });
    let mut fallback = xs[best];
    let mut peak_refined = false;
    if root.is_none() && rs[best] < 0.0 {
        // Revenue may peak between scan points; look for a positive residual there.
        let left = best.saturating_sub(1);
        let right = (best + 1).min(n - 1);
        let (peak, peak_value) = golden_max(&mut residual, xs[left], xs[right], settings)?;
        peak_refined = true;
        if peak_value > rs[best] {
            fallback = peak;
        }
        if peak_value == 0.0 {
            root = Some((peak, 0));
        } else if peak_value > 0.0 {
            root = Some(bisect(&mut residual, xs[left], rs[left], peak)?);
        }
    }
    let (solved, iterations) = root.unwrap_or((fallback, 0));

    let tariff = template.instantiate(solved, cost)?;
    let welfare = social_welfare(devices, &tariff, cost, scens, gamma)?;
    evaluations += 1;
    let breakeven_residual = welfare.utility_surplus;
    Ok(RateSolution {
        policy: template.name.clone(),
        gamma,
        solved_retail: solved,
        tariff,
        breakeven_residual,
        feasible: root.is_some() && breakeven_residual.abs() <= settings.breakeven_tol,
        welfare,
        diagnostics: SolverDiagnostics {
            bracket: (lo, hi),
            scan_sign_changes: sign_changes,
            peak_refined,
            bisection_iterations: iterations,
            residual_evaluations: evaluations,
        },
    })
}

/// Break-even solutions along an ascending grid of adoption fractions.
/// Golden-section search for the largest residual on `[a, b]`.
fn golden_max(residual: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, settings: &RamseySettings) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (residual(c)?, residual(d)?);
    for _ in 0..settings.max_iter {
        if b - a <= settings.rate_tol || fc >= 0.0 || fd >= 0.0 {
            break;
        }
        // Ties move left, towards the smaller rates.
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = residual(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = residual(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

pub fn sweep_adoption(
    template: &PolicyTemplate,
    devices: &DeviceSet,
    cost: &CostModel,
    scens: &ScenarioSet,
    gammas: &[f64],
    settings: &RamseySettings,
) -> Result<Vec<RateSolution>> {
    if gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(Error::invalid("gammas", "adoption fractions must lie in [0, 1]"));
    }
    if gammas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("gammas", "adoption fractions must be ascending"));
    }
    gammas
        .iter()
        .map(|&g| solve_breakeven(template, devices, cost, scens, g, settings))
        .collect()
}
