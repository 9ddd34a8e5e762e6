//! Net energy metering tariff analysis: prosumer scheduling, welfare accounting,
//! break-even rate setting and policy metrics.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brute_force;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod ramsey;
pub mod schedule;
pub mod tariff;
pub mod utility;
pub mod welfare;

pub use error::{Error, ErrorKind, Result};
pub use metrics::{evaluate_metrics, payback_time, MetricsReport, Payback, PaybackParams, PaybackResult};
pub use ramsey::{solve_breakeven, sweep_adoption, PolicyKind, PolicyTemplate, RamseySettings, RateSolution};
pub use schedule::{optimal_schedule, thresholds, classify_device, DeviceClass, Schedule, Thresholds, Zone};
pub use tariff::{CustomerClass, RetailTariff, SellPricing, TariffParams, TouTariff};
pub use utility::{DeviceSet, DeviceUtility};
pub use welfare::{social_welfare, CostModel, Scenario, ScenarioSet, WelfareBreakdown};
