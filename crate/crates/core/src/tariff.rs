//! NEM X tariff parameters and the per-billing-period payment rule.
//!
//! A billing period is charged on its signed net consumption `z`: net
//! consumption (`z >= 0`) is billed at the retail rate, net production
//! (`z < 0`) is credited at the sell rate, and a fixed charge is added in
//! either case. Both branches agree at `z = 0`, where the payment is the fixed
//! charge alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of hours covered by a time-of-use schedule.
pub const HOURS_PER_DAY: u8 = 24;

/// The NEM X parameter tuple: retail rate, sell rate and fixed charge.
///
/// Rates are in $/kWh, the fixed charge in $ per billing period. A negative
/// fixed charge models a credit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTariffParams")]
pub struct TariffParams {
    retail_rate: f64,
    sell_rate: f64,
    fixed_charge: f64,
}

#[derive(Deserialize)]
struct RawTariffParams {
    retail_rate: f64,
    sell_rate: f64,
    #[serde(default)]
    fixed_charge: f64,
}

impl TryFrom<RawTariffParams> for TariffParams {
    type Error = Error;

    fn try_from(raw: RawTariffParams) -> Result<Self> {
        TariffParams::new(raw.retail_rate, raw.sell_rate, raw.fixed_charge)
    }
}

impl TariffParams {
    pub fn new(retail_rate: f64, sell_rate: f64, fixed_charge: f64) -> Result<Self> {
        if !retail_rate.is_finite() || retail_rate < 0.0 {
            return Err(Error::invalid("retail_rate", format!("must be finite and >= 0, got {retail_rate}")));
        }
        if !sell_rate.is_finite() || sell_rate < 0.0 {
            return Err(Error::invalid("sell_rate", format!("must be finite and >= 0, got {sell_rate}")));
        }
        if sell_rate > retail_rate {
            return Err(Error::invalid(
                "sell_rate",
                format!("sell rate {sell_rate} exceeds retail rate {retail_rate}"),
            ));
        }
        if !fixed_charge.is_finite() {
            return Err(Error::invalid("fixed_charge", "must be finite"));
        }
        Ok(Self {
            retail_rate,
            sell_rate,
            fixed_charge,
        })
    }

    /// Single volumetric rate for both directions (NEM 1.0).
    pub fn flat(rate: f64, fixed_charge: f64) -> Result<Self> {
        Self::new(rate, rate, fixed_charge)
    }

    pub fn retail_rate(&self) -> f64 {
        self.retail_rate
    }

    pub fn sell_rate(&self) -> f64 {
        self.sell_rate
    }

    pub fn fixed_charge(&self) -> f64 {
        self.fixed_charge
    }

    /// Payment for one billing period with net consumption `z` (kWh).
    pub fn payment(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::invalid("net consumption", format!("must be finite, got {z}")));
        }
        Ok(self.charge(z))
    }

    /// Infallible payment for callers that have already checked `z`.
    pub(crate) fn charge(&self, z: f64) -> f64 {
        // z = 0 belongs to the net-consumption branch; both branches give the fixed charge there.
        if z >= 0.0 {
            self.retail_rate * z + self.fixed_charge
        } else {
            self.sell_rate * z + self.fixed_charge
        }
    }

    /// Same tariff with the sell rate set `delta` below the retail rate.
    pub fn with_sell_offset(&self, delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::invalid("sell offset", format!("must be finite and >= 0, got {delta}")));
        }
        if delta > self.retail_rate {
            return Err(Error::invalid(
                "sell offset",
                format!("offset {delta} exceeds retail rate {}", self.retail_rate),
            ));
        }
        Self::new(self.retail_rate, self.retail_rate - delta, self.fixed_charge)
    }

    pub fn with_fixed_charge(&self, fixed_charge: f64) -> Result<Self> {
        Self::new(self.retail_rate, self.sell_rate, fixed_charge)
    }

    pub fn with_sell_rate(&self, sell_rate: f64) -> Result<Self> {
        Self::new(self.retail_rate, sell_rate, self.fixed_charge)
    }

    pub fn with_retail_rate(&self, retail_rate: f64) -> Result<Self> {
        Self::new(retail_rate, self.sell_rate, self.fixed_charge)
    }
}

/// One time-of-use period covering the half-open hour range `[start_hour, end_hour)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouPeriod {
    pub start_hour: u8,
    pub end_hour: u8,
    pub params: TariffParams,
}

/// A daily time-of-use schedule whose periods partition `[0, 24)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TouPeriod>", into = "Vec<TouPeriod>")]
pub struct TouTariff {
    periods: Vec<TouPeriod>,
    by_hour: [u8; HOURS_PER_DAY as usize],
}

impl TryFrom<Vec<TouPeriod>> for TouTariff {
    type Error = Error;

    fn try_from(periods: Vec<TouPeriod>) -> Result<Self> {
        TouTariff::new(periods)
    }
}

impl From<TouTariff> for Vec<TouPeriod> {
    fn from(tou: TouTariff) -> Self {
        tou.periods
    }
}

impl TouTariff {
    pub fn new(periods: Vec<TouPeriod>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::invalid("tou periods", "at least one period is required"));
        }
        if periods.len() > HOURS_PER_DAY as usize {
            return Err(Error::invalid("tou periods", "more periods than hours in a day"));
        }
        let mut owner: [Option<u8>; HOURS_PER_DAY as usize] = [None; HOURS_PER_DAY as usize];
        for (idx, period) in periods.iter().enumerate() {
            if period.start_hour >= period.end_hour || period.end_hour > HOURS_PER_DAY {
                return Err(Error::invalid(
                    format!("tou periods[{idx}]"),
                    format!("hour range [{}, {}) is empty or outside [0, 24)", period.start_hour, period.end_hour),
                ));
            }
            for hour in period.start_hour..period.end_hour {
                if let Some(prev) = owner[hour as usize] {
                    return Err(Error::invalid(
                        format!("tou periods[{idx}]"),
                        format!("hour {hour} already covered by period {prev}"),
                    ));
                }
                owner[hour as usize] = Some(idx as u8);
            }
        }
        let mut by_hour = [0u8; HOURS_PER_DAY as usize];
        for (hour, slot) in owner.iter().enumerate() {
            match slot {
                Some(idx) => by_hour[hour] = *idx,
                None => {
                    return Err(Error::invalid("tou periods", format!("hour {hour} is not covered by any period")));
                }
            }
        }
        Ok(Self { periods, by_hour })
    }

    /// A single all-day period.
    pub fn flat(params: TariffParams) -> Self {
        Self {
            periods: vec![TouPeriod {
                start_hour: 0,
                end_hour: HOURS_PER_DAY,
                params,
            }],
            by_hour: [0; HOURS_PER_DAY as usize],
        }
    }

    /// Off-peak params everywhere except `[peak_start, peak_end)`.
    pub fn peak_window(off_peak: TariffParams, peak: TariffParams, peak_start: u8, peak_end: u8) -> Result<Self> {
        let mut periods = Vec::with_capacity(3);
        if peak_start > 0 {
            periods.push(TouPeriod {
                start_hour: 0,
                end_hour: peak_start,
                params: off_peak,
            });
        }
        periods.push(TouPeriod {
            start_hour: peak_start,
            end_hour: peak_end,
            params: peak,
        });
        if peak_end < HOURS_PER_DAY {
            periods.push(TouPeriod {
                start_hour: peak_end,
                end_hour: HOURS_PER_DAY,
                params: off_peak,
            });
        }
        Self::new(periods)
    }

    pub fn periods(&self) -> &[TouPeriod] {
        &self.periods
    }

    /// Parameters in force during `hour`.
    ///
    /// # Panics
    ///
    /// Panics if `hour >= 24`.
    pub fn params_at(&self, hour: u8) -> &TariffParams {
        assert!(hour < HOURS_PER_DAY, "hour {hour} outside [0, 24)");
        &self.periods[self.by_hour[hour as usize] as usize].params
    }
}

/// Which customer class a bill is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerClass {
    /// Customer with behind-the-meter generation.
    Prosumer,
    /// Customer without behind-the-meter generation.
    Consumer,
}

/// How the sell rate of an instantiated tariff is determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SellPricing {
    /// Use the sell rate of the TOU period.
    Schedule,
    /// Wholesale price of the billing period plus `adder`, capped at the period retail rate.
    SocialMarginalCost { adder: f64 },
}

/// A fully instantiated retail tariff: TOU schedule, sell pricing and the
/// prosumer-only fixed surcharge (capacity-based charge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetailTariff {
    pub schedule: TouTariff,
    pub sell: SellPricing,
    /// Extra fixed charge per billing period levied on prosumers only.
    pub prosumer_surcharge: f64,
}

impl RetailTariff {
    pub fn flat(params: TariffParams) -> Self {
        Self {
            schedule: TouTariff::flat(params),
            sell: SellPricing::Schedule,
            prosumer_surcharge: 0.0,
        }
    }

    /// Parameters billed to `class` in a period starting at `hour` with the given wholesale price.
    pub fn params_for(&self, hour: u8, wholesale_price: f64, class: CustomerClass) -> Result<TariffParams> {
        let mut params = *self.schedule.params_at(hour);
        if let SellPricing::SocialMarginalCost { adder } = self.sell {
            let smc = (wholesale_price + adder).max(0.0);
            params = params.with_sell_rate(smc.min(params.retail_rate()))?;
        }
        if class == CustomerClass::Prosumer && self.prosumer_surcharge != 0.0 {
            params = params.with_fixed_charge(params.fixed_charge() + self.prosumer_surcharge)?;
        }
        Ok(params)
    }
}
