//! Data ingestion, configuration, study execution and report writing.

pub mod config;
pub mod fixture;
pub mod study;
pub mod timeseries;

pub use config::{validate_gammas, HouseholdConfig, PolicySpec, ScenarioSources, StudyConfig};
pub use fixture::write_fixture;
pub use study::{evaluate_study, load_scenarios, run_study, write_reports, StudyCell, StudyResults, StudySummary};
pub use timeseries::{build_scenarios, load_timeseries, read_timeseries, SeriesKind, TimeSeriesRow};
