//! Concave quadratic device utilities.
//!
//! Each device has `U(d) = a*d - (b/2)*d^2` on `[0, d_max]`, with marginal
//! utility `V(d) = a - b*d`. The utility is required to be non-decreasing on
//! its whole domain, i.e. `V(d_max) >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDevice")]
pub struct DeviceUtility {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    a: f64,
    b: f64,
    d_max: f64,
}

#[derive(Deserialize)]
struct RawDevice {
    #[serde(default)]
    name: Option<String>,
    a: f64,
    b: f64,
    d_max: f64,
}

impl TryFrom<RawDevice> for DeviceUtility {
    type Error = Error;

    fn try_from(raw: RawDevice) -> Result<Self> {
        let dev = DeviceUtility::new(raw.a, raw.b, raw.d_max)?;
        Ok(match raw.name {
            Some(name) => dev.named(name),
            None => dev,
        })
    }
}

impl DeviceUtility {
    /// `a`: marginal utility at zero ($/kWh), `b`: slope ($/kWh²), `d_max`: consumption cap (kWh).
    pub fn new(a: f64, b: f64, d_max: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::invalid("a", "must be finite"));
        }
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::invalid("b", format!("must be finite and > 0, got {b}")));
        }
        if !d_max.is_finite() || d_max < 0.0 {
            return Err(Error::invalid("d_max", format!("must be finite and >= 0, got {d_max}")));
        }
        // Slack for d_max computed as a/b in floating point.
        if a - b * d_max < -1e-12 * a.abs().max(1.0) {
            return Err(Error::invalid(
                "a",
                format!("utility decreases before d_max: a - b*d_max = {} < 0", a - b * d_max),
            ));
        }
        Ok(Self { name: None, a, b, d_max })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    fn check_domain(&self, d: f64) -> Result<()> {
        if !(0.0..=self.d_max).contains(&d) {
            return Err(Error::invalid("consumption", format!("{d} outside [0, {}]", self.d_max)));
        }
        Ok(())
    }

    pub fn utility(&self, d: f64) -> Result<f64> {
        self.check_domain(d)?;
        Ok(self.value(d))
    }

    pub fn marginal(&self, d: f64) -> Result<f64> {
        self.check_domain(d)?;
        Ok(self.a - self.b * d)
    }

    pub(crate) fn value(&self, d: f64) -> f64 {
        self.a * d - 0.5 * self.b * d * d
    }

    /// Consumption that equates marginal utility with `price`, clamped to `[0, d_max]`.
    pub fn inverse_marginal_clamped(&self, price: f64) -> f64 {
        ((self.a - price) / self.b).clamp(0.0, self.d_max)
    }
}

/// The household's ordered device list (at least one device).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DeviceUtility>", into = "Vec<DeviceUtility>")]
pub struct DeviceSet(Vec<DeviceUtility>);

impl TryFrom<Vec<DeviceUtility>> for DeviceSet {
    type Error = Error;

    fn try_from(devices: Vec<DeviceUtility>) -> Result<Self> {
        DeviceSet::new(devices)
    }
}

impl From<DeviceSet> for Vec<DeviceUtility> {
    fn from(set: DeviceSet) -> Self {
        set.0
    }
}

impl DeviceSet {
    pub fn new(devices: Vec<DeviceUtility>) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::invalid("devices", "at least one device is required"));
        }
        Ok(Self(devices))
    }

    pub fn devices(&self) -> &[DeviceUtility] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DeviceUtility> {
        self.0.iter()
    }

    /// Total utility of a consumption bundle; the bundle must match the device count.
    pub fn total_utility(&self, consumption: &[f64]) -> f64 {
        debug_assert_eq!(consumption.len(), self.0.len());
        self.0.iter().zip(consumption).map(|(dev, &d)| dev.value(d)).sum()
    }

    /// Aggregate clamped demand at a common marginal price.
    pub fn demand_at(&self, price: f64) -> f64 {
        self.0.iter().map(|dev| dev.inverse_marginal_clamped(price)).sum()
    }
}

impl<'a> IntoIterator for &'a DeviceSet {
    type Item = &'a DeviceUtility;
    type IntoIter = std::slice::Iter<'a, DeviceUtility>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
