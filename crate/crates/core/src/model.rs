//! Domain types shared by every analysis: hourly cells, records, stations,
//! day types and hour windows.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::Serialize;

use crate::error::ModelError;

/// Number of hourly bins in a record.
pub const HOURS: usize = 24;

/// One hourly cell. `Missing` means the sensor reported nothing for the
/// hour; `Count(0)` means it reported an empty road.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HourlyCount {
    #[default]
    Missing,
    Count(u32),
}

impl HourlyCount {
    pub fn value(self) -> Option<u32> {
        match self {
            HourlyCount::Missing => None,
            HourlyCount::Count(v) => Some(v),
        }
    }

    pub fn is_missing(self) -> bool {
        matches!(self, HourlyCount::Missing)
    }
}

impl From<Option<u32>> for HourlyCount {
    fn from(v: Option<u32>) -> Self {
        v.map_or(HourlyCount::Missing, HourlyCount::Count)
    }
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// Observation station identifier (`POSTE_ID` in the source exports).
    StationId
);
string_id!(
    /// Road or route identifier.
    RouteId
);

/// Travel direction of a record. `Both` is a sensor-provided two-way total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Direction {
    Dir1,
    Dir2,
    Both,
}

impl Direction {
    pub fn code(self) -> &'static str {
        match self {
            Direction::Dir1 => "1",
            Direction::Dir2 => "2",
            Direction::Both => "B",
        }
    }
}

impl FromStr for Direction {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(Direction::Dir1),
            "2" => Ok(Direction::Dir2),
            "B" | "b" => Ok(Direction::Both),
            other => Err(ModelError::UnknownDirection(other.to_string())),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Car,
    Truck,
    All,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 3] = [VehicleClass::Car, VehicleClass::Truck, VehicleClass::All];

    pub fn code(self) -> &'static str {
        match self {
            VehicleClass::Car => "car",
            VehicleClass::Truck => "truck",
            VehicleClass::All => "all",
        }
    }
}

impl FromStr for VehicleClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "car" => Ok(VehicleClass::Car),
            "truck" => Ok(VehicleClass::Truck),
            "all" => Ok(VehicleClass::All),
            _ => Err(ModelError::UnknownVehicleClass(s.to_string())),
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BorderCountry {
    DE,
    FR,
    BE,
}

impl BorderCountry {
    pub fn code(self) -> &'static str {
        match self {
            BorderCountry::DE => "DE",
            BorderCountry::FR => "FR",
            BorderCountry::BE => "BE",
        }
    }
}

impl FromStr for BorderCountry {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "DE" => Ok(BorderCountry::DE),
            "FR" => Ok(BorderCountry::FR),
            "BE" => Ok(BorderCountry::BE),
            other => Err(ModelError::UnknownBorderCountry(other.to_string())),
        }
    }
}

/// Weekday / Saturday / Sunday split used by every aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DayType {
    Weekday,
    Saturday,
    Sunday,
}

impl DayType {
    pub const ALL: [DayType; 3] = [DayType::Weekday, DayType::Saturday, DayType::Sunday];

    pub fn code(self) -> &'static str {
        match self {
            DayType::Weekday => "weekday",
            DayType::Saturday => "saturday",
            DayType::Sunday => "sunday",
        }
    }
}

impl FromStr for DayType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weekday" => Ok(DayType::Weekday),
            "saturday" => Ok(DayType::Saturday),
            "sunday" => Ok(DayType::Sunday),
            _ => Err(ModelError::UnknownDayType(s.to_string())),
        }
    }
}

impl fmt::Display for DayType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Classifies a calendar date.
///
/// ```
/// use chrono::NaiveDate;
/// use trafficscope::model::{day_type, DayType};
///
/// let d = NaiveDate::from_ymd_opt(2020, 3, 15).unwrap();
/// assert_eq!(day_type(d), DayType::Sunday);
/// ```
pub fn day_type(date: NaiveDate) -> DayType {
    match date.weekday() {
        Weekday::Sat => DayType::Saturday,
        Weekday::Sun => DayType::Sunday,
        _ => DayType::Weekday,
    }
}

/// Half-open range of hourly bins `[start, end)`, labeled by start hour.
/// The morning rush `7-10` covers bins 7, 8 and 9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HourWindow {
    start: u8,
    end: u8,
}

impl HourWindow {
    pub const FULL_DAY: HourWindow = HourWindow { start: 0, end: 24 };
    pub const MORNING_RUSH: HourWindow = HourWindow { start: 7, end: 10 };
    pub const EVENING_RUSH: HourWindow = HourWindow { start: 16, end: 19 };

    pub fn new(start: u8, end: u8) -> Result<Self, ModelError> {
        if start < end && end as usize <= HOURS {
            Ok(HourWindow { start, end })
        } else {
            Err(ModelError::InvalidWindow { start, end })
        }
    }

    pub fn start(self) -> usize {
        self.start as usize
    }

    pub fn end(self) -> usize {
        self.end as usize
    }

    pub fn len(self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn hours(self) -> std::ops::Range<usize> {
        self.start()..self.end()
    }

    /// `07-10` style label, also accepted by [`FromStr`].
    pub fn label(self) -> String {
        format!("{:02}-{:02}", self.start, self.end)
    }
}

impl FromStr for HourWindow {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::WindowSyntax(s.to_string());
        let (a, b) = s.trim().split_once('-').ok_or_else(bad)?;
        let start: u8 = a.trim().parse().map_err(|_| bad())?;
        let end: u8 = b.trim().parse().map_err(|_| bad())?;
        HourWindow::new(start, end)
    }
}

impl fmt::Display for HourWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// How missing hours inside a window are treated when summing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum MissingPolicy {
    /// Any missing contribution makes the result missing.
    #[default]
    Strict,
    /// Sum what is present; missing only if nothing is present.
    Lenient,
}

impl FromStr for MissingPolicy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" => Ok(MissingPolicy::Strict),
            "lenient" => Ok(MissingPolicy::Lenient),
            _ => Err(ModelError::UnknownPolicy(s.to_string())),
        }
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingPolicy::Strict => "strict",
            MissingPolicy::Lenient => "lenient",
        })
    }
}

/// Sum of present values under `policy`. Generic over any cell type that
/// can be viewed as an optional number, so raw counts and averaged
/// profiles share one definition.
pub(crate) fn policy_sum<T, I>(cells: I, policy: MissingPolicy) -> Option<T>
where
    I: IntoIterator<Item = Option<T>>,
    T: std::ops::Add<Output = T> + Default,
{
    let mut total = T::default();
    let mut any = false;
    for cell in cells {
        match cell {
            Some(v) => {
                total = total + v;
                any = true;
            }
            None if policy == MissingPolicy::Strict => return None,
            None => {}
        }
    }
    any.then_some(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub station_id: StationId,
    pub date: NaiveDate,
    pub direction: Direction,
    pub vehicle_class: VehicleClass,
}

/// One station-day-direction-class row of 24 hourly counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficRecord {
    pub station_id: StationId,
    pub route_id: RouteId,
    pub direction: Direction,
    pub vehicle_class: VehicleClass,
    pub date: NaiveDate,
    pub counts: [HourlyCount; HOURS],
}

impl TrafficRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            station_id: self.station_id.clone(),
            date: self.date,
            direction: self.direction,
            vehicle_class: self.vehicle_class,
        }
    }

    pub fn day_type(&self) -> DayType {
        day_type(self.date)
    }

    pub fn present_in(&self, window: HourWindow) -> usize {
        self.counts[window.hours()]
            .iter()
            .filter(|c| !c.is_missing())
            .count()
    }
}

/// Sum of counts over `window`.
///
/// ```
/// use trafficscope::model::*;
/// # use chrono::NaiveDate;
/// let mut counts = [HourlyCount::Count(0); 24];
/// counts[7] = HourlyCount::Missing;
/// counts[8] = HourlyCount::Count(50);
/// counts[9] = HourlyCount::Count(70);
/// let rec = TrafficRecord {
///     station_id: "S1".into(),
///     route_id: "A1".into(),
///     direction: Direction::Dir1,
///     vehicle_class: VehicleClass::Car,
///     date: NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(),
///     counts,
/// };
/// let w = HourWindow::MORNING_RUSH;
/// assert_eq!(window_sum(&rec, w, MissingPolicy::Strict), None);
/// assert_eq!(window_sum(&rec, w, MissingPolicy::Lenient), Some(120));
/// ```
pub fn window_sum(record: &TrafficRecord, window: HourWindow, policy: MissingPolicy) -> Option<u64> {
    policy_sum(
        record.counts[window.hours()].iter().map(|c| c.value().map(u64::from)),
        policy,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationMeta {
    pub station_id: StationId,
    pub name: String,
    pub route_id: RouteId,
    /// `(latitude, longitude)` in WGS84 degrees; absent when the registry
    /// row carries no coordinates.
    pub location: Option<(f64, f64)>,
    pub border_country: Option<BorderCountry>,
}

impl StationMeta {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let Some((lat, lon)) = self.location {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(ModelError::Latitude(lat));
            }
            if !(-180.0..=180.0).contains(&lon) {
                return Err(ModelError::Longitude(lon));
            }
        }
        Ok(())
    }
}

/// Stations keyed by id, iterated in id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StationRegistry {
    stations: BTreeMap<StationId, StationMeta>,
}

impl StationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_stations(stations: impl IntoIterator<Item = StationMeta>) -> Result<Self, ModelError> {
        let mut reg = StationRegistry::new();
        for m in stations {
            reg.insert(m)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, meta: StationMeta) -> Result<(), ModelError> {
        meta.validate()?;
        if self.stations.contains_key(&meta.station_id) {
            return Err(ModelError::DuplicateStation(meta.station_id.clone()));
        }
        self.stations.insert(meta.station_id.clone(), meta);
        Ok(())
    }

    pub fn get(&self, id: &StationId) -> Option<&StationMeta> {
        self.stations.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &StationMeta> {
        self.stations.values()
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }
}

/// A year of records plus the station registry they refer to.
///
/// Record order is preserved from construction; lookups by key go through
/// an index built once.
#[derive(Debug, Clone)]
pub struct Dataset {
    year: i32,
    records: Vec<TrafficRecord>,
    stations: StationRegistry,
    index: HashMap<RecordKey, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.year == other.year && self.records == other.records && self.stations == other.stations
    }
}

impl Dataset {
    pub fn new(
        year: i32,
        records: Vec<TrafficRecord>,
        stations: StationRegistry,
    ) -> Result<Self, ModelError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.date.year() != year {
                return Err(ModelError::OutsideYear { date: r.date, year });
            }
            if index.insert(r.key(), i).is_some() {
                return Err(ModelError::DuplicateRecord(Box::new(r.key())));
            }
        }
        Ok(Dataset {
            year,
            records,
            stations,
            index,
        })
    }

    pub fn empty(year: i32) -> Self {
        Dataset {
            year,
            records: Vec::new(),
            stations: StationRegistry::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a dataset from records already known to satisfy the
    /// year and uniqueness invariants (e.g. a subset of another dataset).
    pub(crate) fn from_trusted(year: i32, records: Vec<TrafficRecord>, stations: StationRegistry) -> Self {
        let index = records.iter().enumerate().map(|(i, r)| (r.key(), i)).collect();
        Dataset {
            year,
            records,
            stations,
            index,
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn records(&self) -> &[TrafficRecord] {
        &self.records
    }

    pub fn stations(&self) -> &StationRegistry {
        &self.stations
    }

    pub fn with_stations(mut self, stations: StationRegistry) -> Self {
        self.stations = stations;
        self
    }

    pub fn get(&self, key: &RecordKey) -> Option<&TrafficRecord> {
        self.index.get(key).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<TrafficRecord> {
        self.records
    }
}

/// All dates of `year`, in order.
pub fn year_dates(year: i32) -> impl Iterator<Item = NaiveDate> {
    let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    first.iter_days().take_while(move |d| d.year() == year)
}
