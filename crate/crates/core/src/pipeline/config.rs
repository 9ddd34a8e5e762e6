//! JSON configuration documents for the study pipeline and one-shot commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PaybackParams;
use crate::ramsey::{PolicyKind, PolicyTemplate, RamseySettings};
use crate::tariff::{TariffParams, HOURS_PER_DAY};
use crate::utility::DeviceSet;
use crate::welfare::CostModel;

/// A policy entry: either a preset name or a full template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicySpec {
    Preset(PolicyKind),
    Template(PolicyTemplate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSources {
    pub prices: PathBuf,
    pub generation: PathBuf,
    #[serde(default = "default_resample_hours")]
    pub resample_hours: u32,
}

fn default_resample_hours() -> u32 {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("reports")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub devices: DeviceSet,
    #[serde(default)]
    pub cost: CostModel,
    /// Installed PV capacity of a prosumer (kW), used by capacity-based charges.
    pub pv_kw: f64,
    pub policies: Vec<PolicySpec>,
    pub gammas: Vec<f64>,
    pub payback: PaybackParams,
    pub scenarios: ScenarioSources,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub solver: RamseySettings,
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::config(if path == "." { "$".to_string() } else { format!("$.{path}") }, inner.to_string())
    })
}

fn read_config_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))
}

impl StudyConfig {
    /// Parses and validates a config; relative paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: StudyConfig = parse_json(text)?;
        for p in [&mut cfg.scenarios.prices, &mut cfg.scenarios.generation, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_config_text(path)?;
        Self::from_json(&text, path.parent().unwrap_or_else(|| Path::new(".")))
    }

    pub fn periods_per_day(&self) -> f64 {
        f64::from(HOURS_PER_DAY) / f64::from(self.scenarios.resample_hours)
    }

    /// Concrete templates in config order.
    pub fn templates(&self) -> Vec<PolicyTemplate> {
        self.policies
            .iter()
            .map(|p| match p {
                PolicySpec::Preset(kind) => PolicyTemplate::preset(*kind, self.pv_kw, self.periods_per_day()),
                PolicySpec::Template(t) => t.clone(),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.cost.validate().map_err(|e| e.within("$.cost"))?;
        if !self.pv_kw.is_finite() || self.pv_kw <= 0.0 {
            return Err(Error::config("$.pv_kw", format!("must be > 0, got {}", self.pv_kw)));
        }
        if self.policies.is_empty() {
            return Err(Error::config("$.policies", "at least one policy is required"));
        }
        if self.policies.iter().any(|p| matches!(p, PolicySpec::Preset(PolicyKind::Custom))) {
            return Err(Error::config("$.policies", "`custom` needs a full template, not a preset name"));
        }
        for (i, t) in self.templates().iter().enumerate() {
            t.validate().map_err(|e| e.within(&format!("$.policies[{i}]")))?;
        }
        let mut names: Vec<&str> = Vec::new();
        for (i, p) in self.policies.iter().enumerate() {
            if let PolicySpec::Template(t) = p {
                if names.contains(&t.name.as_str()) {
                    return Err(Error::config(format!("$.policies[{i}].name"), format!("duplicate policy name `{}`", t.name)));
                }
                names.push(&t.name);
            }
        }
        validate_gammas(&self.gammas).map_err(|e| e.within("$"))?;
        self.payback.validate().map_err(|e| e.within("$.payback"))?;
        self.solver.validate().map_err(|e| e.within("$.solver"))?;
        let hours = u32::from(HOURS_PER_DAY);
        if self.scenarios.resample_hours == 0 || hours % self.scenarios.resample_hours != 0 {
            return Err(Error::config(
                "$.scenarios.resample_hours",
                format!("must divide 24, got {}", self.scenarios.resample_hours),
            ));
        }
        for (field, p) in [("prices", &self.scenarios.prices), ("generation", &self.scenarios.generation)] {
            if !p.is_file() {
                return Err(Error::config(format!("$.scenarios.{field}"), format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }
}

/// Adoption fractions must be non-empty, within [0, 1] and ascending.
pub fn validate_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::invalid("gammas", "at least one adoption fraction is required"));
    }
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::invalid("gammas", format!("adoption fractions must lie in [0, 1], got {g}")));
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("gammas", "adoption fractions must be strictly ascending"));
    }
    Ok(())
}

/// One household: a single-period tariff and its devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseholdConfig {
    pub tariff: TariffParams,
    pub devices: DeviceSet,
}

impl HouseholdConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_config_text(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base(dir: &Path) -> serde_json::Value {
        fs::write(dir.join("p.csv"), "timestamp,value\n").unwrap();
        fs::write(dir.join("g.csv"), "timestamp,value\n").unwrap();
        json!({
            "devices": [{"name": "hvac", "a": 0.9, "b": 1.8, "d_max": 0.5}],
            "pv_kw": 5.1,
            "policies": ["nem_1_0", "nem_cbc"],
            "gammas": [0.0, 0.2],
            "payback": {"install_cost": 22950.0, "degradation": 0.005, "interest": 0.024},
            "scenarios": {"prices": "p.csv", "generation": "g.csv"}
        })
    }

    fn load(v: &serde_json::Value, dir: &Path) -> Result<StudyConfig> {
        StudyConfig::from_json(&v.to_string(), dir)
    }

    fn path_of(e: Error) -> String {
        match e {
            Error::Config { path, .. } => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn loads_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load(&base(dir.path()), dir.path()).unwrap();
        assert_eq!(cfg.cost, CostModel::default());
        assert_eq!(cfg.solver, RamseySettings::default());
        assert_eq!(cfg.payback.horizon_years, 50);
        assert_eq!(cfg.output_dir, dir.path().join("reports"));
        assert_eq!(cfg.scenarios.prices, dir.path().join("p.csv"));
        assert_eq!(cfg.periods_per_day(), 24.0);
        let t = cfg.templates();
        assert_eq!(t[1].kind, PolicyKind::NemCbc);
        assert!((t[1].fixed_charge.prosumer_surcharge() - 10.93 * 5.1 / 30.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn full_templates_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let mut v = base(dir.path());
        v["policies"] = json!([{
            "name": "flat offset", "kind": "custom",
            "sell_rule": {"kind": "offset", "delta": 0.05},
            "fixed_charge": {"kind": "uniform", "charge": 0.1}
        }]);
        v["cost"] = json!({"fixed_cost_per_customer": 0.12});
        let cfg = load(&v, dir.path()).unwrap();
        assert_eq!(cfg.templates()[0].tou, None);
        assert_eq!(cfg.cost.smc_adder, CostModel::default().smc_adder);
    }

    #[test]
    fn errors_are_path_qualified() {
        let dir = tempfile::tempdir().unwrap();
        let cases: Vec<(&str, serde_json::Value, &str)> = vec![
            ("devices", json!([{"a": 0.9, "b": 1.8, "d_max": 0.5}, {"a": 0.1, "b": 1.0, "d_max": 0.5}]), "$.devices[1]"),
            ("gammas", json!([0.2, 0.1]), "$.gammas"),
            ("gammas", json!([1.5]), "$.gammas"),
            ("payback", json!({"install_cost": -1.0, "degradation": 0.0, "interest": 0.0}), "$.payback.install_cost"),
            ("solver", json!({"bracket": [1.0, 0.5]}), "$.solver.bracket"),
            ("cost", json!({"smc_adder": -0.1}), "$.cost.smc_adder"),
            ("pv_kw", json!(0.0), "$.pv_kw"),
            ("policies", json!([]), "$.policies"),
            ("policies", json!(["custom"]), "$.policies"),
            ("scenarios", json!({"prices": "missing.csv", "generation": "g.csv"}), "$.scenarios.prices"),
            ("scenarios", json!({"prices": "p.csv", "generation": "g.csv", "resample_hours": 7}), "$.scenarios.resample_hours"),
        ];
        for (field, value, want) in cases {
            let mut v = base(dir.path());
            v[field] = value;
            let got = path_of(load(&v, dir.path()).unwrap_err());
            assert!(got.starts_with(want), "{field}: {got} does not start with {want}");
        }
        let mut v = base(dir.path());
        v["bogus"] = json!(1);
        assert!(load(&v, dir.path()).is_err());
        assert!(StudyConfig::from_json("{", dir.path()).is_err());
    }

    #[test]
    fn missing_config_is_config_error() {
        let e = StudyConfig::load(Path::new("/nonexistent/study.json")).unwrap_err();
        assert_eq!(e.kind(), crate::error::ErrorKind::Config);
    }

    #[test]
    fn household_config() {
        let h = HouseholdConfig::from_json(
            r#"{"tariff": {"retail_rate": 0.4, "sell_rate": 0.2}, "devices": [{"a": 1.0, "b": 0.5, "d_max": 2.0}]}"#,
        )
        .unwrap();
        assert_eq!(h.tariff.fixed_charge(), 0.0);
        let e = HouseholdConfig::from_json(r#"{"tariff": {"retail_rate": 0.1, "sell_rate": 0.2}, "devices": []}"#).unwrap_err();
        assert_eq!(path_of(e), "$.tariff");
    }
}
