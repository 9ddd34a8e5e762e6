//! Surplus and welfare accounting over a set of billing-period scenarios.
//!
//! A population with prosumer fraction `γ` is represented by one prosumer and
//! one consumer, sharing the same devices. Per scenario `n`:
//!
//! * customer surplus `γ S(d_p(r_n)) + (1-γ) S(d_c)`
//! * utility surplus `γ P(z_p) + (1-γ) P(z_c) - C(y_n)` with
//!   `y_n = γ z_p + (1-γ) z_c` and `C(y) = π^ω_n y + θ`
//! * environmental benefit `π^e r_n`, counted for the `γ` share of adopters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{optimal_schedule, Schedule, Zone};
use crate::tariff::{CustomerClass, RetailTariff, HOURS_PER_DAY};
use crate::utility::DeviceSet;

/// One billing period: renewable output, wholesale price and time of day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub index: usize,
    /// Behind-the-meter production (kWh).
    pub r: f64,
    /// Wholesale energy price ($/kWh).
    pub wholesale_price: f64,
    pub hour: u8,
    pub weight: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::invalid("r", format!("scenario {}: must be finite and >= 0, got {}", self.index, self.r)));
        }
        if !self.wholesale_price.is_finite() {
            return Err(Error::invalid("wholesale_price", format!("scenario {}: must be finite", self.index)));
        }
        if self.hour >= HOURS_PER_DAY {
            return Err(Error::invalid("hour", format!("scenario {}: {} outside [0, 24)", self.index, self.hour)));
        }
        if !self.weight.is_finite() || self.weight <= 0.0 {
            return Err(Error::invalid("weight", format!("scenario {}: must be > 0, got {}", self.index, self.weight)));
        }
        Ok(())
    }
}

/// A non-empty scenario list with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Scenario>", into = "Vec<Scenario>")]
pub struct ScenarioSet(Vec<Scenario>);

impl TryFrom<Vec<Scenario>> for ScenarioSet {
    type Error = Error;

    fn try_from(scenarios: Vec<Scenario>) -> Result<Self> {
        ScenarioSet::new(scenarios)
    }
}

impl From<ScenarioSet> for Vec<Scenario> {
    fn from(set: ScenarioSet) -> Self {
        set.0
    }
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::invalid("scenarios", "at least one scenario is required"));
        }
        for s in &scenarios {
            s.validate()?;
        }
        let total: f64 = scenarios.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("scenarios", format!("weights sum to {total}, expected 1")));
        }
        Ok(Self(scenarios))
    }

    /// Equally weighted scenarios from `(r, wholesale_price, hour)` triples.
    pub fn equally_weighted(points: impl IntoIterator<Item = (f64, f64, u8)>) -> Result<Self> {
        let points: Vec<_> = points.into_iter().collect();
        let weight = 1.0 / points.len() as f64;
        Self::new(
            points
                .into_iter()
                .enumerate()
                .map(|(index, (r, wholesale_price, hour))| Scenario {
                    index,
                    r,
                    wholesale_price,
                    hour,
                    weight,
                })
                .collect(),
        )
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scenario> {
        self.0.iter()
    }
}

/// Utility-side cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// Fixed cost to serve one customer for one billing period ($).
    pub fixed_cost_per_customer: f64,
    /// Non-market adder on top of the wholesale price giving the social marginal cost ($/kWh).
    pub smc_adder: f64,
    /// Value of one kWh of behind-the-meter renewable generation ($/kWh).
    pub env_price: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            fixed_cost_per_customer: 0.0,
            smc_adder: 0.030,
            env_price: 0.035,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fixed_cost_per_customer", self.fixed_cost_per_customer),
            ("smc_adder", self.smc_adder),
            ("env_price", self.env_price),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn smc_price(&self, wholesale_price: f64) -> f64 {
        wholesale_price + self.smc_adder
    }

    /// Cost of serving net demand `y` in a period with the given wholesale price.
    pub fn supply_cost(&self, wholesale_price: f64, y: f64) -> f64 {
        wholesale_price * y + self.fixed_cost_per_customer
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("adoption fraction must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

/// Optimal prosumer and consumer schedules for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSchedules {
    pub prosumer: Schedule,
    pub consumer: Schedule,
}

pub fn scenario_schedules(devices: &DeviceSet, tariff: &RetailTariff, scen: &Scenario) -> Result<ScenarioSchedules> {
    let prosumer_params = tariff.params_for(scen.hour, scen.wholesale_price, CustomerClass::Prosumer)?;
    let consumer_params = tariff.params_for(scen.hour, scen.wholesale_price, CustomerClass::Consumer)?;
    Ok(ScenarioSchedules {
        prosumer: optimal_schedule(devices, &prosumer_params, scen.r)?,
        consumer: optimal_schedule(devices, &consumer_params, 0.0)?,
    })
}

pub fn customer_surplus(devices: &DeviceSet, tariff: &RetailTariff, scen: &Scenario, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let s = scenario_schedules(devices, tariff, scen)?;
    Ok(mix(gamma, s.prosumer.surplus, s.consumer.surplus))
}

pub fn utility_surplus(devices: &DeviceSet, tariff: &RetailTariff, cost: &CostModel, scen: &Scenario, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let s = scenario_schedules(devices, tariff, scen)?;
    Ok(utility_side(&s, cost, scen, gamma))
}

pub fn env_benefit(cost: &CostModel, scen: &Scenario) -> f64 {
    cost.env_price * scen.r
}

fn mix(gamma: f64, prosumer: f64, consumer: f64) -> f64 {
    gamma * prosumer + (1.0 - gamma) * consumer
}

fn utility_side(s: &ScenarioSchedules, cost: &CostModel, scen: &Scenario, gamma: f64) -> f64 {
    let net_demand = mix(gamma, s.prosumer.net, s.consumer.net);
    mix(gamma, s.prosumer.payment, s.consumer.payment) - cost.supply_cost(scen.wholesale_price, net_demand)
}

/// Per-scenario contribution to the welfare breakdown (unweighted).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioWelfare {
    pub index: usize,
    pub hour: u8,
    pub r: f64,
    pub wholesale_price: f64,
    pub weight: f64,
    pub prosumer_consumption: f64,
    pub prosumer_zone: Zone,
    pub prosumer_payment: f64,
    pub consumer_consumption: f64,
    pub consumer_payment: f64,
    pub customer_surplus: f64,
    pub utility_surplus: f64,
    /// `γ π^e r_n`.
    pub env_benefit: f64,
    pub welfare: f64,
}

/// Expected per-period welfare and its components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareBreakdown {
    pub gamma: f64,
    pub customer_surplus: f64,
    pub utility_surplus: f64,
    /// Adopter share of the environmental benefit, `γ E[π^e r]`.
    pub env_benefit: f64,
    pub welfare: f64,
    pub scenarios: Vec<ScenarioWelfare>,
}

pub fn social_welfare(
    devices: &DeviceSet,
    tariff: &RetailTariff,
    cost: &CostModel,
    scens: &ScenarioSet,
    gamma: f64,
) -> Result<WelfareBreakdown> {
    check_gamma(gamma)?;
    let mut details = Vec::with_capacity(scens.len());
    let (mut cs, mut us, mut env) = (0.0, 0.0, 0.0);
    for scen in scens.iter() {
        let s = scenario_schedules(devices, tariff, scen)?;
        let customer = mix(gamma, s.prosumer.surplus, s.consumer.surplus);
        let utility = utility_side(&s, cost, scen, gamma);
        let environment = gamma * env_benefit(cost, scen);
        cs += scen.weight * customer;
        us += scen.weight * utility;
        env += scen.weight * environment;
        details.push(ScenarioWelfare {
            index: scen.index,
            hour: scen.hour,
            r: scen.r,
            wholesale_price: scen.wholesale_price,
            weight: scen.weight,
            prosumer_consumption: s.prosumer.total(),
            prosumer_zone: s.prosumer.zone,
            prosumer_payment: s.prosumer.payment,
            consumer_consumption: s.consumer.total(),
            consumer_payment: s.consumer.payment,
            customer_surplus: customer,
            utility_surplus: utility,
            env_benefit: environment,
            welfare: customer + utility + environment,
        });
    }
    Ok(WelfareBreakdown {
        gamma,
        customer_surplus: cs,
        utility_surplus: us,
        env_benefit: env,
        welfare: cs + us + env,
        scenarios: details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute_force::brute_force_schedule;
    use crate::tariff::{SellPricing, TariffParams, TouTariff};
    use crate::utility::DeviceUtility;
    use proptest::prelude::*;

    fn one_device() -> DeviceSet {
        DeviceSet::new(vec![DeviceUtility::new(1.0, 0.5, 2.0).unwrap()]).unwrap()
    }

    fn flat(retail: f64, sell: f64, fixed: f64) -> RetailTariff {
        RetailTariff::flat(TariffParams::new(retail, sell, fixed).unwrap())
    }

    fn scen(r: f64, price: f64) -> Scenario {
        Scenario {
            index: 0,
            r,
            wholesale_price: price,
            hour: 12,
            weight: 1.0,
        }
    }

    #[test]
    fn customer_surplus_gamma_limits() {
        let devs = one_device();
        let t = flat(0.4, 0.2, 0.0);
        let s = scen(2.0, 0.05);
        let p = t.params_for(12, 0.05, CustomerClass::Consumer).unwrap();
        let consumer = optimal_schedule(&devs, &p, 0.0).unwrap().surplus;
        let prosumer = optimal_schedule(&devs, &p, 2.0).unwrap().surplus;
        assert_eq!(customer_surplus(&devs, &t, &s, 0.0).unwrap(), consumer);
        assert_eq!(customer_surplus(&devs, &t, &s, 1.0).unwrap(), prosumer);

        // γ = 0.5 against brute-force surpluses.
        let bf_p = brute_force_schedule(&devs, &p, 2.0, 1e-4).unwrap().surplus;
        let bf_c = brute_force_schedule(&devs, &p, 0.0, 1e-4).unwrap().surplus;
        let half = customer_surplus(&devs, &t, &s, 0.5).unwrap();
        assert!((half - 0.5 * (bf_p + bf_c)).abs() < 1e-6);
        assert!(customer_surplus(&devs, &t, &s, 1.5).is_err());
    }

    #[test]
    fn utility_surplus_identities() {
        let devs = one_device();
        let zero_cost = CostModel {
            fixed_cost_per_customer: 0.0,
            smc_adder: 0.03,
            env_price: 0.0,
        };
        let us = utility_surplus(&devs, &flat(0.3, 0.3, 0.0), &zero_cost, &scen(1.0, 0.3), 0.0).unwrap();
        assert!(us.abs() < 1e-15);

        let theta = CostModel {
            fixed_cost_per_customer: 2.0,
            ..zero_cost
        };
        let us = utility_surplus(&devs, &flat(0.3, 0.3, 2.0), &theta, &scen(1.0, 0.3), 0.0).unwrap();
        assert!(us.abs() < 1e-12);
    }

    #[test]
    fn utility_surplus_hand_computed() {
        // d_c = 1.2 (r = 0), d_p = 1.6 at r = 2.0 (z_p = -0.4).
        let devs = one_device();
        let cost = CostModel {
            fixed_cost_per_customer: 0.1,
            smc_adder: 0.03,
            env_price: 0.035,
        };
        let us = utility_surplus(&devs, &flat(0.4, 0.2, 0.0), &cost, &scen(2.0, 0.05), 0.5).unwrap();
        let revenue = 0.5 * (0.2 * -0.4) + 0.5 * (0.4 * 1.2);
        let y = 0.5 * -0.4 + 0.5 * 1.2;
        let expected = revenue - (0.05 * y + 0.1);
        assert!((us - expected).abs() < 1e-12);
    }

    #[test]
    fn env_benefit_values() {
        let cost = CostModel::default();
        assert!((env_benefit(&cost, &scen(2.0, 0.05)) - 0.07).abs() < 1e-15);
        assert_eq!(env_benefit(&cost, &scen(0.0, 0.05)), 0.0);
        let none = CostModel { env_price: 0.0, ..cost };
        assert_eq!(env_benefit(&none, &scen(3.3, 0.05)), 0.0);
    }

    #[test]
    fn welfare_single_scenario_no_prosumers() {
        let devs = one_device();
        let t = flat(0.4, 0.2, 0.0);
        let cost = CostModel {
            fixed_cost_per_customer: 0.05,
            ..CostModel::default()
        };
        let set = ScenarioSet::new(vec![scen(2.0, 0.05)]).unwrap();
        let w = social_welfare(&devs, &t, &cost, &set, 0.0).unwrap();
        let consumer = optimal_schedule(&devs, t.schedule.params_at(0), 0.0).unwrap().surplus;
        assert_eq!(w.env_benefit, 0.0);
        assert!((w.customer_surplus - consumer).abs() < 1e-15);
        assert!((w.welfare - consumer - w.utility_surplus).abs() < 1e-12);
    }

    #[test]
    fn welfare_is_weighted_average() {
        let devs = one_device();
        let t = flat(0.4, 0.2, 0.0);
        let cost = CostModel::default();
        let a = ScenarioSet::new(vec![scen(0.5, 0.04)]).unwrap();
        let b = ScenarioSet::new(vec![scen(2.5, 0.06)]).unwrap();
        let both = ScenarioSet::equally_weighted([(0.5, 0.04, 12), (2.5, 0.06, 12)]).unwrap();
        let wa = social_welfare(&devs, &t, &cost, &a, 0.3).unwrap().welfare;
        let wb = social_welfare(&devs, &t, &cost, &b, 0.3).unwrap().welfare;
        let wab = social_welfare(&devs, &t, &cost, &both, 0.3).unwrap().welfare;
        assert!((wab - 0.5 * (wa + wb)).abs() < 1e-12);
    }

    #[test]
    fn welfare_three_scenarios_hand_summed() {
        // Single device, π⁺=0.4, π⁻=0.2, θ=0.1, π^e=0.035, γ=0.25.
        // Consumer: d=1.2, U=0.84, P=0.48, S=0.36.
        // r=0.5: d=1.2, z=0.7, P=0.28, S=0.56.   r=1.4: d=1.4, z=0, U=0.91, S=0.91.
        // r=2.0: d=1.6, z=-0.4, U=0.96, P=-0.08, S=1.04.
        let devs = one_device();
        let t = flat(0.4, 0.2, 0.0);
        let cost = CostModel {
            fixed_cost_per_customer: 0.1,
            smc_adder: 0.03,
            env_price: 0.035,
        };
        let set = ScenarioSet::equally_weighted([(0.5, 0.05, 10), (1.4, 0.05, 12), (2.0, 0.05, 14)]).unwrap();
        let g = 0.25;
        let rows = [(0.5, 0.56, 0.28, 0.7), (1.4, 0.91, 0.0, 0.0), (2.0, 1.04, -0.08, -0.4)];
        let (mut cs, mut us, mut env) = (0.0, 0.0, 0.0);
        for (r, sp, pp, zp) in rows {
            cs += (g * sp + (1.0 - g) * 0.36) / 3.0;
            let y = g * zp + (1.0 - g) * 1.2;
            us += (g * pp + (1.0 - g) * 0.48 - (0.05 * y + 0.1)) / 3.0;
            env += g * 0.035 * r / 3.0;
        }
        let w = social_welfare(&devs, &t, &cost, &set, g).unwrap();
        assert!((w.customer_surplus - cs).abs() < 1e-9);
        assert!((w.utility_surplus - us).abs() < 1e-9);
        assert!((w.env_benefit - env).abs() < 1e-12);
        assert!((w.welfare - (cs + us + env)).abs() < 1e-9);
    }

    #[test]
    fn scenario_set_validation() {
        assert!(ScenarioSet::new(vec![]).is_err());
        let mut s = scen(1.0, 0.05);
        s.weight = 0.5;
        assert!(ScenarioSet::new(vec![s.clone()]).is_err());
        s.weight = 1.0;
        s.r = -1.0;
        assert!(ScenarioSet::new(vec![s.clone()]).is_err());
        s.r = 1.0;
        s.hour = 24;
        assert!(ScenarioSet::new(vec![s]).is_err());
    }

    fn instance() -> impl Strategy<Value = (DeviceSet, f64, f64, Vec<(f64, f64, u8)>)> {
        let dev = (0.1f64..2.0, 0.05f64..1.0, 0.5f64..5.0)
            .prop_map(|(a, b, d)| DeviceUtility::new(a, b, d.min(a / b)).unwrap());
        let scen = (0.0f64..6.0, 0.0f64..0.2, 0u8..24);
        (
            proptest::collection::vec(dev, 1..4),
            0.05f64..1.0,
            0.0f64..=1.0,
            proptest::collection::vec(scen, 1..6),
        )
            .prop_map(|(d, retail, frac, s)| (DeviceSet::new(d).unwrap(), retail, retail * frac, s))
    }

    proptest! {
        #[test]
        fn decomposition_holds((devs, retail, sell, pts) in instance(), gamma in 0.0f64..=1.0) {
            let t = flat(retail, sell, 0.1);
            let set = ScenarioSet::equally_weighted(pts).unwrap();
            let w = social_welfare(&devs, &t, &CostModel::default(), &set, gamma).unwrap();
            prop_assert!((w.welfare - (w.customer_surplus + w.utility_surplus + w.env_benefit)).abs() <= 1e-9);
        }

        #[test]
        fn fixed_charge_is_a_transfer((devs, retail, sell, pts) in instance(), gamma in 0.0f64..=1.0, c in 0.0f64..3.0) {
            let set = ScenarioSet::equally_weighted(pts).unwrap();
            let cost = CostModel::default();
            let base = social_welfare(&devs, &flat(retail, sell, 0.0), &cost, &set, gamma).unwrap();
            let bumped = social_welfare(&devs, &flat(retail, sell, c), &cost, &set, gamma).unwrap();
            prop_assert!((bumped.customer_surplus - (base.customer_surplus - c)).abs() <= 1e-9);
            prop_assert!((bumped.utility_surplus - (base.utility_surplus + c)).abs() <= 1e-9);
            prop_assert!((bumped.welfare - base.welfare).abs() <= 1e-9);
        }

        #[test]
        fn affine_in_gamma((devs, retail, sell, pts) in instance()) {
            let t = flat(retail, sell, 0.2);
            let cost = CostModel::default();
            for s in ScenarioSet::equally_weighted(pts).unwrap().iter() {
                let cs: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&g| customer_surplus(&devs, &t, s, g).unwrap()).collect();
                let us: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&g| utility_surplus(&devs, &t, &cost, s, g).unwrap()).collect();
                prop_assert!((cs[1] - 0.5 * (cs[0] + cs[2])).abs() <= 1e-12 * (1.0 + cs[1].abs()));
                prop_assert!((us[1] - 0.5 * (us[0] + us[2])).abs() <= 1e-12 * (1.0 + us[1].abs()));
            }
        }

        #[test]
        fn marginal_cost_pricing_is_first_best((devs, _r, _s, pts) in instance(), gamma in 0.0f64..=1.0, price in 0.01f64..0.2) {
            // Single wholesale price, no fixed charges and no SMC adder: π⁺ = π⁻ = π^ω maximises welfare.
            let pts: Vec<_> = pts.into_iter().map(|(r, _, h)| (r, price, h)).collect();
            let set = ScenarioSet::equally_weighted(pts).unwrap();
            let cost = CostModel { fixed_cost_per_customer: 0.0, smc_adder: 0.0, env_price: 0.035 };
            let first_best = social_welfare(&devs, &flat(price, price, 0.0), &cost, &set, gamma).unwrap().welfare;
            for i in 0..=10 {
                for j in 0..=i {
                    let retail = 0.05 * i as f64;
                    let sell = 0.05 * j as f64;
                    let w = social_welfare(&devs, &flat(retail, sell, 0.0), &cost, &set, gamma).unwrap().welfare;
                    prop_assert!(first_best >= w - 1e-9, "({retail}, {sell}) beats marginal cost pricing: {w} > {first_best}");
                }
            }
        }
    }

    #[test]
    fn smc_sell_pricing_uses_scenario_price() {
        let devs = one_device();
        let t = RetailTariff {
            schedule: TouTariff::flat(TariffParams::flat(0.4, 0.0).unwrap()),
            sell: SellPricing::SocialMarginalCost { adder: 0.03 },
            prosumer_surcharge: 0.0,
        };
        let s = scenario_schedules(&devs, &t, &scen(3.0, 0.07)).unwrap();
        // Sell rate 0.10: d = (1 - 0.1)/0.5 = 1.8.
        assert!((s.prosumer.total() - 1.8).abs() < 1e-12);
    }
}
