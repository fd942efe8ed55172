//! Filtering, direction combination and selected-week averaging.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::fmt_real;
use crate::model::{
    day_type, policy_sum, Dataset, DayType, Direction, HourWindow, HourlyCount, MissingPolicy,
    RecordKey, StationId, TrafficRecord, VehicleClass, HOURS,
};
use crate::quality::WeekSelection;

/// An averaged 24-hour profile; `None` where no day contributed.
pub type Profile = [Option<f64>; HOURS];

/// Window total over an averaged profile.
pub fn profile_window(profile: &Profile, window: HourWindow, policy: MissingPolicy) -> Option<f64> {
    policy_sum(profile[window.hours()].iter().copied(), policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DirectionMode {
    TwoWayCombined,
    Dir1Only,
    Dir2Only,
}

impl From<Direction> for DirectionMode {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Dir1 => DirectionMode::Dir1Only,
            Direction::Dir2 => DirectionMode::Dir2Only,
            Direction::Both => DirectionMode::TwoWayCombined,
        }
    }
}

/// Keeps records of `class`, optionally restricted to `stations`.
pub fn filter_dataset(
    dataset: &Dataset,
    class: VehicleClass,
    stations: Option<&BTreeSet<StationId>>,
) -> Dataset {
    let records = dataset
        .records()
        .iter()
        .filter(|r| r.vehicle_class == class && stations.is_none_or(|s| s.contains(&r.station_id)))
        .cloned()
        .collect();
    Dataset::from_trusted(dataset.year(), records, dataset.stations().clone())
}

/// A sensor two-way record disagreeing with the sum of its one-way records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CombineConflict {
    pub station_id: StationId,
    pub date: NaiveDate,
    pub vehicle_class: VehicleClass,
    pub hours: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Combined {
    pub dataset: Dataset,
    pub conflicts: Vec<CombineConflict>,
}

/// Reduces every `(station, date, class)` group to a single two-way
/// record: the sensor's own `Both` record when there is one, otherwise the
/// hourwise sum of `Dir1` and `Dir2` (missing if either side is missing).
/// Groups lacking both options are dropped.
pub fn combine_directions(dataset: &Dataset) -> Combined {
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    let mut conflicts = Vec::new();
    let lookup = |r: &TrafficRecord, direction| {
        dataset.get(&RecordKey {
            station_id: r.station_id.clone(),
            date: r.date,
            direction,
            vehicle_class: r.vehicle_class,
        })
    };

    for r in dataset.records() {
        if !seen.insert((&r.station_id, r.date, r.vehicle_class)) {
            continue;
        }
        let both = lookup(r, Direction::Both);
        let one_way = lookup(r, Direction::Dir1).zip(lookup(r, Direction::Dir2));
        let summed = one_way.map(|(d1, d2)| {
            let mut counts = [HourlyCount::Missing; HOURS];
            for (h, c) in counts.iter_mut().enumerate() {
                if let (HourlyCount::Count(a), HourlyCount::Count(b)) = (d1.counts[h], d2.counts[h]) {
                    *c = HourlyCount::Count(a.saturating_add(b));
                }
            }
            (d1, counts)
        });
        match (both, summed) {
            (Some(b), summed) => {
                if let Some((_, sum)) = summed {
                    let hours: Vec<usize> = (0..HOURS)
                        .filter(|&h| matches!((b.counts[h], sum[h]), (HourlyCount::Count(x), HourlyCount::Count(y)) if x != y))
                        .collect();
                    if !hours.is_empty() {
                        log::warn!(
                            "two-way record for {} on {} disagrees with one-way sum at {} hour(s)",
                            b.station_id,
                            b.date,
                            hours.len()
                        );
                        conflicts.push(CombineConflict {
                            station_id: b.station_id.clone(),
                            date: b.date,
                            vehicle_class: b.vehicle_class,
                            hours,
                        });
                    }
                }
                records.push(b.clone());
            }
            (None, Some((d1, counts))) => records.push(TrafficRecord {
                direction: Direction::Both,
                counts,
                ..d1.clone()
            }),
            (None, None) => {}
        }
    }
    Combined {
        dataset: Dataset::from_trusted(dataset.year(), records, dataset.stations().clone()),
        conflicts,
    }
}

/// Per-month, per-day-type averaged profiles for one station series.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonizedSeries {
    pub station_id: StationId,
    pub vehicle_class: VehicleClass,
    pub direction_mode: DirectionMode,
    /// Present only where at least one day contributed.
    pub cells: BTreeMap<(u32, DayType), Profile>,
}

impl HarmonizedSeries {
    pub fn profile(&self, month: u32, day_type: DayType) -> Option<&Profile> {
        self.cells.get(&(month, day_type))
    }
}

#[derive(Default)]
struct Accumulator {
    sum: [f64; HOURS],
    n: [u32; HOURS],
}

impl Accumulator {
    fn add(&mut self, counts: &[HourlyCount; HOURS]) {
        for (h, c) in counts.iter().enumerate() {
            if let Some(v) = c.value() {
                self.sum[h] += f64::from(v);
                self.n[h] += 1;
            }
        }
    }

    fn mean(&self) -> Profile {
        std::array::from_fn(|h| (self.n[h] > 0).then(|| self.sum[h] / f64::from(self.n[h])))
    }
}

/// Averages each hour over the days of each day type inside the selected
/// week of each month, using present values only.
///
/// One series is produced for every `(station, class, direction)` found in
/// the dataset, in that order. Records are expected to be filtered and
/// direction-combined beforehand as the analysis requires.
pub fn weekday_average(dataset: &Dataset, selection: &WeekSelection) -> Vec<HarmonizedSeries> {
    let week_month: HashMap<NaiveDate, u32> = selection
        .months
        .iter()
        .filter_map(|(m, w)| w.map(|w| (m, w)))
        .flat_map(|(m, w)| w.days().map(move |d| (d, *m)))
        .collect();

    type SeriesKey<'a> = (&'a StationId, VehicleClass, Direction);
    let mut groups: BTreeMap<SeriesKey, BTreeMap<(u32, DayType), Accumulator>> = BTreeMap::new();
    for r in dataset.records() {
        let cells = groups
            .entry((&r.station_id, r.vehicle_class, r.direction))
            .or_default();
        if let Some(&month) = week_month.get(&r.date) {
            cells.entry((month, day_type(r.date))).or_default().add(&r.counts);
        }
    }

    groups
        .into_iter()
        .map(|((station, class, direction), cells)| HarmonizedSeries {
            station_id: station.clone(),
            vehicle_class: class,
            direction_mode: direction.into(),
            cells: cells.into_iter().map(|(k, acc)| (k, acc.mean())).collect(),
        })
        .collect()
}

/// Morning and evening rush volumes of one profile.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RushHourFeatures {
    pub morning: Option<f64>,
    pub evening: Option<f64>,
}

/// The pair of windows rush features are taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RushWindows {
    pub morning: HourWindow,
    pub evening: HourWindow,
}

impl Default for RushWindows {
    fn default() -> Self {
        RushWindows {
            morning: HourWindow::MORNING_RUSH,
            evening: HourWindow::EVENING_RUSH,
        }
    }
}

/// Rush features over the default windows `7-10` and `16-19`.
pub fn rush_features(series: &HarmonizedSeries, month: u32, day_type: DayType) -> RushHourFeatures {
    let w = RushWindows::default();
    rush_features_with(series, month, day_type, w.morning, w.evening)
}

pub fn rush_features_with(
    series: &HarmonizedSeries,
    month: u32,
    day_type: DayType,
    morning: HourWindow,
    evening: HourWindow,
) -> RushHourFeatures {
    match series.profile(month, day_type) {
        Some(p) => RushHourFeatures {
            morning: profile_window(p, morning, MissingPolicy::Strict),
            evening: profile_window(p, evening, MissingPolicy::Strict),
        },
        None => RushHourFeatures::default(),
    }
}

/// Writes `station_id,month,day_type,h00..h23` rows for every cell.
pub fn write_series_csv<W: Write>(series: &[HarmonizedSeries], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["station_id".to_string(), "month".into(), "day_type".into()];
    header.extend((0..HOURS).map(|h| format!("h{h:02}")));
    w.write_record(&header)?;
    for s in series {
        for ((month, dt), profile) in &s.cells {
            let mut row = vec![s.station_id.to_string(), month.to_string(), dt.code().to_string()];
            row.extend(profile.iter().map(|v| v.map(fmt_real).unwrap_or_default()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StationRegistry;
    use crate::quality::WeekSelection;

    fn date(m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, m, d).unwrap()
    }

    fn rec(station: &str, dir: Direction, class: VehicleClass, d: NaiveDate, fill: u32) -> TrafficRecord {
        TrafficRecord {
            station_id: station.into(),
            route_id: "A1".into(),
            direction: dir,
            vehicle_class: class,
            date: d,
            counts: [HourlyCount::Count(fill); HOURS],
        }
    }

    fn ds(records: Vec<TrafficRecord>) -> Dataset {
        Dataset::new(2018, records, StationRegistry::new()).unwrap()
    }

    #[test]
    fn filter_is_subset_and_idempotent() {
        let d = ds(vec![
            rec("S1", Direction::Dir1, VehicleClass::Car, date(1, 1), 1),
            rec("S1", Direction::Dir1, VehicleClass::Truck, date(1, 1), 1),
            rec("S2", Direction::Dir1, VehicleClass::Car, date(1, 1), 1),
        ]);
        let cars = filter_dataset(&d, VehicleClass::Car, None);
        assert_eq!(cars.len(), 2);
        assert!(cars.records().iter().all(|r| r.vehicle_class == VehicleClass::Car));
        assert_eq!(filter_dataset(&cars, VehicleClass::Car, None), cars);
        assert!(filter_dataset(&d, VehicleClass::All, None).is_empty());
        let only: BTreeSet<StationId> = ["S2".into()].into();
        assert_eq!(filter_dataset(&d, VehicleClass::Car, Some(&only)).len(), 1);
    }

    #[test]
    fn combine_sums_and_propagates_missing() {
        let mut a = rec("S1", Direction::Dir1, VehicleClass::Car, date(1, 1), 1);
        let mut b = rec("S1", Direction::Dir2, VehicleClass::Car, date(1, 1), 1);
        a.counts[7] = HourlyCount::Count(10);
        b.counts[7] = HourlyCount::Count(15);
        a.counts[8] = HourlyCount::Missing;
        b.counts[8] = HourlyCount::Count(15);
        let c = combine_directions(&ds(vec![a, b]));
        assert_eq!(c.dataset.len(), 1);
        let r = &c.dataset.records()[0];
        assert_eq!(r.direction, Direction::Both);
        assert_eq!(r.counts[7], HourlyCount::Count(25));
        assert_eq!(r.counts[8], HourlyCount::Missing);
        assert!(c.conflicts.is_empty());
    }

    #[test]
    fn combine_prefers_sensor_total_and_reports_conflict() {
        let c = combine_directions(&ds(vec![
            rec("S1", Direction::Dir1, VehicleClass::Car, date(1, 1), 1),
            rec("S1", Direction::Dir2, VehicleClass::Car, date(1, 1), 1),
            rec("S1", Direction::Both, VehicleClass::Car, date(1, 1), 3),
            rec("S2", Direction::Dir1, VehicleClass::Car, date(1, 1), 1),
        ]));
        assert_eq!(c.dataset.len(), 1);
        assert_eq!(c.dataset.records()[0].counts[0], HourlyCount::Count(3));
        assert_eq!(c.conflicts.len(), 1);
        assert_eq!(c.conflicts[0].hours.len(), 24);
    }

    fn january_week() -> WeekSelection {
        WeekSelection::from_starts(2018, [(1, date(1, 1))])
    }

    #[test]
    fn weekday_mean_present_only() {
        let mut recs: Vec<_> = (1..=5)
            .map(|d| {
                let mut r = rec("S1", Direction::Both, VehicleClass::Car, date(1, d), 0);
                r.counts[8] = HourlyCount::Count(10 * d);
                r
            })
            .collect();
        let s = weekday_average(&ds(recs.clone()), &january_week());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].profile(1, DayType::Weekday).unwrap()[8], Some(30.0));

        recs[2].counts[8] = HourlyCount::Missing;
        recs[3].counts[8] = HourlyCount::Count(40);
        let s = weekday_average(&ds(recs), &january_week());
        assert_eq!(s[0].profile(1, DayType::Weekday).unwrap()[8], Some(30.0));
        assert!(s[0].profile(1, DayType::Saturday).is_none());
        assert!(s[0].profile(2, DayType::Weekday).is_none());
    }

    #[test]
    fn days_outside_selected_week_are_ignored() {
        let recs = vec![
            rec("S1", Direction::Both, VehicleClass::Car, date(1, 6), 100),
            rec("S1", Direction::Both, VehicleClass::Car, date(1, 13), 999),
        ];
        let s = weekday_average(&ds(recs), &january_week());
        assert_eq!(s[0].profile(1, DayType::Saturday).unwrap()[0], Some(100.0));
        assert_eq!(s[0].cells.len(), 1);
    }

    #[test]
    fn rush_windows() {
        let mut p: Profile = [Some(0.0); HOURS];
        p[7] = Some(100.0);
        p[8] = Some(150.0);
        p[9] = Some(120.0);
        p[17] = None;
        let series = HarmonizedSeries {
            station_id: "S1".into(),
            vehicle_class: VehicleClass::Car,
            direction_mode: DirectionMode::TwoWayCombined,
            cells: [((3, DayType::Weekday), p)].into(),
        };
        let f = rush_features(&series, 3, DayType::Weekday);
        assert_eq!(f.morning, Some(370.0));
        assert_eq!(f.evening, None);
        assert_eq!(rush_features(&series, 4, DayType::Weekday), RushHourFeatures::default());
    }

    #[test]
    fn series_csv_layout() {
        let recs = vec![rec("S1", Direction::Both, VehicleClass::Car, date(1, 1), 4)];
        let s = weekday_average(&ds(recs), &january_week());
        let mut out = Vec::new();
        write_series_csv(&s, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("station_id,month,day_type,h00,"));
        assert!(lines.next().unwrap().starts_with("S1,1,weekday,4.000000,"));
    }
}
