//! Reading and writing the interchange CSV files.
//!
//! Counts file header:
//!
//! ```text
//! station_id,route_id,direction,vehicle_class,date,h00,h01,...,h23
//! ```
//!
//! An empty hour cell is a missing observation, `0` is an observed zero.
//! Directions are `1`, `2` or `B` (sensor two-way total); classes are
//! `car`, `truck` or `all`; dates are ISO-8601.
//!
//! Stations file header:
//!
//! ```text
//! station_id,name,route_id,latitude,longitude,border_country
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::error::{IngestError, ModelError};
use crate::model::{
    BorderCountry, Dataset, Direction, HourlyCount, RouteId, StationId, StationMeta,
    StationRegistry, TrafficRecord, VehicleClass, HOURS,
};

const KEY_COLUMNS: [&str; 5] = ["station_id", "route_id", "direction", "vehicle_class", "date"];
const STATION_COLUMNS: [&str; 6] = [
    "station_id",
    "name",
    "route_id",
    "latitude",
    "longitude",
    "border_country",
];

/// At most this many rejected rows are kept as samples in a report.
pub const MAX_SAMPLES: usize = 100;

pub fn counts_header() -> Vec<String> {
    KEY_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..HOURS).map(|h| format!("h{h:02}")))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub n_rows_read: u64,
    pub n_rows_accepted: u64,
    pub n_duplicates: u64,
    pub n_malformed: u64,
    /// `(line number, reason)`, sorted by line, capped at [`MAX_SAMPLES`].
    pub samples: Vec<(u64, String)>,
}

impl IngestReport {
    fn reject(&mut self, line: u64, reason: String) {
        if self.samples.len() < MAX_SAMPLES {
            self.samples.push((line, reason));
        }
    }

    pub fn is_clean(&self) -> bool {
        self.n_duplicates == 0 && self.n_malformed == 0
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn check_header(found: &csv::StringRecord, expected: &[String]) -> Result<(), IngestError> {
    let matches = found.len() == expected.len()
        && found
            .iter()
            .zip(expected)
            .all(|(f, e)| f.trim().trim_start_matches('\u{feff}') == e);
    if matches {
        Ok(())
    } else {
        Err(IngestError::BadHeader {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        })
    }
}

pub fn parse_counts_file(path: impl AsRef<Path>, year: i32) -> Result<(Dataset, IngestReport), IngestError> {
    parse_counts(open(path.as_ref())?, year)
}

/// Parses a counts CSV. Well-formed rows become records, the first
/// occurrence of a key wins and every rejected row is counted.
pub fn parse_counts<R: Read>(reader: R, year: i32) -> Result<(Dataset, IngestReport), IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    check_header(rdr.headers()?, &counts_header())?;

    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(true) => {}
            Ok(false) => break,
            // Invalid UTF-8 and similar per-row faults are not fatal.
            Err(e) if !matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                report.n_rows_read += 1;
                report.n_malformed += 1;
                let line = e.position().map_or(0, |p| p.line());
                report.reject(line, e.to_string());
                continue;
            }
            Err(e) => return Err(e.into()),
        }
        report.n_rows_read += 1;
        let line = row.position().map_or(0, |p| p.line());
        match parse_count_row(&row, year) {
            Ok(rec) => {
                if seen.insert(rec.key()) {
                    report.n_rows_accepted += 1;
                    records.push(rec);
                } else {
                    report.n_duplicates += 1;
                    report.reject(
                        line,
                        format!(
                            "duplicate key ({}, {}, {}, {})",
                            rec.station_id, rec.date, rec.direction, rec.vehicle_class
                        ),
                    );
                }
            }
            Err(reason) => {
                report.n_malformed += 1;
                report.reject(line, reason);
            }
        }
    }
    report.samples.sort_by_key(|(line, _)| *line);
    Ok((Dataset::from_trusted(year, records, StationRegistry::new()), report))
}

fn parse_count_row(row: &csv::StringRecord, year: i32) -> Result<TrafficRecord, String> {
    let expected = KEY_COLUMNS.len() + HOURS;
    if row.len() != expected {
        return Err(format!("expected {expected} columns, found {}", row.len()));
    }
    let station_id = &row[0];
    if station_id.is_empty() {
        return Err("empty station_id".into());
    }
    let direction: Direction = row[2].parse().map_err(|e: ModelError| e.to_string())?;
    let vehicle_class: VehicleClass = row[3].parse().map_err(|e: ModelError| e.to_string())?;
    let date: NaiveDate = row[4]
        .trim()
        .parse()
        .map_err(|_| format!("invalid date '{}'", &row[4]))?;
    if date.year() != year {
        return Err(format!("date {date} outside year {year}"));
    }
    let mut counts = [HourlyCount::Missing; HOURS];
    for (h, cell) in counts.iter_mut().enumerate() {
        let raw = row[KEY_COLUMNS.len() + h].trim();
        if !raw.is_empty() {
            let v: u32 = raw
                .parse()
                .map_err(|_| format!("invalid count '{raw}' in h{h:02}"))?;
            *cell = HourlyCount::Count(v);
        }
    }
    Ok(TrafficRecord {
        station_id: StationId::new(station_id),
        route_id: RouteId::new(&row[1]),
        direction,
        vehicle_class,
        date,
        counts,
    })
}

/// Writes `dataset` in record order using the canonical encodings.
pub fn write_counts<W: Write>(dataset: &Dataset, writer: W) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(counts_header())?;
    let mut fields: Vec<String> = Vec::with_capacity(KEY_COLUMNS.len() + HOURS);
    for r in dataset.records() {
        fields.clear();
        fields.push(r.station_id.to_string());
        fields.push(r.route_id.to_string());
        fields.push(r.direction.code().to_string());
        fields.push(r.vehicle_class.code().to_string());
        fields.push(r.date.format("%Y-%m-%d").to_string());
        fields.extend(
            r.counts
                .iter()
                .map(|c| c.value().map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&fields)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Result of reading a stations file: the registry plus rows rejected
/// for range or syntax problems.
#[derive(Debug, Clone, Default)]
pub struct StationParse {
    pub registry: StationRegistry,
    pub rejected: Vec<(u64, String)>,
}

pub fn parse_station_file(path: impl AsRef<Path>) -> Result<StationParse, IngestError> {
    parse_stations(open(path.as_ref())?)
}

/// Parses a stations CSV. Out-of-range coordinates reject the row; a
/// repeated station id is fatal.
pub fn parse_stations<R: Read>(reader: R) -> Result<StationParse, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let expected: Vec<String> = STATION_COLUMNS.iter().map(|s| s.to_string()).collect();
    check_header(rdr.headers()?, &expected)?;

    let mut out = StationParse::default();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        match parse_station_row(&row) {
            Ok(meta) => {
                if out.registry.get(&meta.station_id).is_some() {
                    return Err(IngestError::DuplicateStation {
                        id: meta.station_id,
                        line,
                    });
                }
                out.registry.insert(meta)?;
            }
            Err(reason) => out.rejected.push((line, reason)),
        }
    }
    Ok(out)
}

fn parse_station_row(row: &csv::StringRecord) -> Result<StationMeta, String> {
    if row.len() != STATION_COLUMNS.len() {
        return Err(format!(
            "expected {} columns, found {}",
            STATION_COLUMNS.len(),
            row.len()
        ));
    }
    if row[0].is_empty() {
        return Err("empty station_id".into());
    }
    let coord = |i: usize| -> Result<Option<f64>, String> {
        let raw = row[i].trim();
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Some)
            .ok_or_else(|| format!("invalid {} '{raw}'", STATION_COLUMNS[i]))
    };
    let location = match (coord(3)?, coord(4)?) {
        (Some(lat), Some(lon)) => Some((lat, lon)),
        (None, None) => None,
        _ => return Err("latitude and longitude must both be given or both be empty".into()),
    };
    let border_country = match row[5].trim() {
        "" => None,
        code => Some(code.parse::<BorderCountry>().map_err(|e| e.to_string())?),
    };
    let meta = StationMeta {
        station_id: StationId::new(&row[0]),
        name: row[1].to_string(),
        route_id: RouteId::new(&row[2]),
        location,
        border_country,
    };
    meta.validate().map_err(|e| e.to_string())?;
    Ok(meta)
}

pub fn write_stations<W: Write>(registry: &StationRegistry, writer: W) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(STATION_COLUMNS)?;
    for s in registry.iter() {
        let (lat, lon) = s
            .location
            .map(|(a, b)| (format!("{a:?}"), format!("{b:?}")))
            .unwrap_or_default();
        w.write_record([
            s.station_id.as_str(),
            s.name.as_str(),
            s.route_id.as_str(),
            lat.as_str(),
            lon.as_str(),
            s.border_country.map_or("", |c| c.code()),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub n_records: u64,
    pub n_stations: u64,
    pub n_routes: u64,
    /// Sum of present hourly cells per class; every class is listed.
    pub total_by_class: BTreeMap<VehicleClass, u64>,
}

pub fn dataset_summary(dataset: &Dataset) -> DatasetSummary {
    let mut stations = BTreeSet::new();
    let mut routes = BTreeSet::new();
    let mut totals: BTreeMap<VehicleClass, u64> = VehicleClass::ALL.iter().map(|c| (*c, 0)).collect();
    for r in dataset.records() {
        stations.insert(&r.station_id);
        routes.insert(&r.route_id);
        let sum: u64 = r.counts.iter().filter_map(|c| c.value()).map(u64::from).sum();
        *totals.entry(r.vehicle_class).or_default() += sum;
    }
    DatasetSummary {
        n_records: dataset.len() as u64,
        n_stations: stations.len() as u64,
        n_routes: routes.len() as u64,
        total_by_class: totals,
    }
}
