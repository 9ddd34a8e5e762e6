//! `timestamp,value` CSV ingestion and hourly scenario construction.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::tariff::HOURS_PER_DAY;
use crate::welfare::ScenarioSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Wholesale price ($/kWh).
    Price,
    /// Behind-the-meter generation per interval (kWh).
    Generation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    /// Local wall-clock time; an explicit UTC offset is parsed and then dropped.
    pub timestamp: NaiveDateTime,
    pub value: f64,
}

const NAIVE_FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_local());
    }
    NAIVE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
}

pub fn load_timeseries(path: &Path, kind: SeriesKind) -> Result<Vec<TimeSeriesRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_timeseries(file, &path.display().to_string(), kind)
}

/// Parses a `timestamp,value` table from any reader. `source_name` labels errors.
pub fn read_timeseries<R: Read>(reader: R, source_name: &str, kind: SeriesKind) -> Result<Vec<TimeSeriesRow>> {
    let err = |line: Option<u64>, reason: String| Error::data(source_name, line, reason);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| err(Some(1), e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "value" {
        return Err(err(Some(1), format!("expected header `timestamp,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }

    let mut rows: Vec<TimeSeriesRow> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| err(e.position().map(|p| p.line()), e.to_string()))?;
        let line = record.position().map(|p| p.line());
        if record.len() != 2 {
            return Err(err(line, format!("expected 2 fields, got {}", record.len())));
        }
        let timestamp = parse_timestamp(&record[0]).ok_or_else(|| err(line, format!("unparseable timestamp `{}`", &record[0])))?;
        let value: f64 = record[1].parse().map_err(|_| err(line, format!("unparseable value `{}`", &record[1])))?;
        if !value.is_finite() {
            return Err(err(line, format!("non-finite value {value}")));
        }
        if kind == SeriesKind::Generation && value < 0.0 {
            return Err(err(line, format!("negative generation {value}")));
        }
        if let Some(prev) = rows.last() {
            if timestamp <= prev.timestamp {
                return Err(err(line, format!("timestamp {timestamp} does not follow {}", prev.timestamp)));
            }
        }
        rows.push(TimeSeriesRow { timestamp, value });
    }
    if rows.is_empty() {
        return Err(err(None, "no data rows".into()));
    }
    Ok(rows)
}

fn bucket_start(ts: NaiveDateTime, resample_hours: u32) -> NaiveDateTime {
    let hour = ts.hour() / resample_hours * resample_hours;
    ts.date().and_hms_opt(hour, 0, 0).expect("hour below 24")
}

/// Joins prices and generation on `resample_hours`-long buckets aligned to midnight.
///
/// Each bucket takes the mean price and the summed generation; only buckets
/// present in both series become scenarios, equally weighted, in time order.
pub fn build_scenarios(prices: &[TimeSeriesRow], generation: &[TimeSeriesRow], resample_hours: u32) -> Result<ScenarioSet> {
    if resample_hours == 0 || u32::from(HOURS_PER_DAY) % resample_hours != 0 {
        return Err(Error::invalid("resample_hours", format!("must divide 24, got {resample_hours}")));
    }
    let mut price_buckets: BTreeMap<NaiveDateTime, (f64, usize)> = BTreeMap::new();
    for row in prices {
        let e = price_buckets.entry(bucket_start(row.timestamp, resample_hours)).or_default();
        e.0 += row.value;
        e.1 += 1;
    }
    let mut gen_buckets: BTreeMap<NaiveDateTime, f64> = BTreeMap::new();
    for row in generation {
        *gen_buckets.entry(bucket_start(row.timestamp, resample_hours)).or_default() += row.value;
    }
    let points: Vec<(f64, f64, u8)> = price_buckets
        .iter()
        .filter_map(|(start, &(sum, count))| {
            gen_buckets
                .get(start)
                .map(|&r| (r, sum / count as f64, start.hour() as u8))
        })
        .collect();
    if points.is_empty() {
        return Err(Error::data("scenarios", None, "price and generation series share no time bucket"));
    }
    ScenarioSet::equally_weighted(points)
}
