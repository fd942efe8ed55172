//! Completeness calendars and representative-week selection.
//!
//! A calendar records, for each date of the year, the share of expected
//! hourly cells that were actually observed inside an hour window. The
//! week selector then picks, per month, the Monday-anchored 7-day span with
//! the highest mean daily completeness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::Serialize;

use crate::fmt_real;
use crate::model::{year_dates, Dataset, Direction, HourWindow, StationId, VehicleClass};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Scope {
    AllStations,
    Station(StationId),
}

impl Scope {
    fn admits(&self, id: &StationId) -> bool {
        match self {
            Scope::AllStations => true,
            Scope::Station(s) => s == id,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Scope::AllStations => "all".to_string(),
            Scope::Station(s) => s.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessCalendar {
    pub scope: Scope,
    pub vehicle_class: VehicleClass,
    pub window: HourWindow,
    pub year: i32,
    /// Number of station-direction series expected to report each day.
    /// Zero means the class never occurs in scope and `cells` is empty.
    pub expected_series: usize,
    pub cells: BTreeMap<NaiveDate, f64>,
}

impl CompletenessCalendar {
    pub fn has_expectation(&self) -> bool {
        self.expected_series > 0
    }

    pub fn fraction(&self, date: NaiveDate) -> Option<f64> {
        self.cells.get(&date).copied()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "fraction"])?;
        for (d, f) in &self.cells {
            w.write_record([d.format("%Y-%m-%d").to_string(), fmt_real(*f)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn completeness_calendar(
    dataset: &Dataset,
    class: VehicleClass,
    window: HourWindow,
    scope: &Scope,
) -> CompletenessCalendar {
    let in_scope = dataset
        .records()
        .iter()
        .filter(|r| r.vehicle_class == class && scope.admits(&r.station_id));

    let mut series: BTreeSet<(&StationId, Direction)> = BTreeSet::new();
    let mut present: HashMap<NaiveDate, usize> = HashMap::new();
    for r in in_scope {
        series.insert((&r.station_id, r.direction));
        *present.entry(r.date).or_default() += r.present_in(window);
    }

    let expected_series = series.len();
    let cells = if expected_series == 0 {
        BTreeMap::new()
    } else {
        let expected = (expected_series * window.len()) as f64;
        year_dates(dataset.year())
            .map(|d| (d, present.get(&d).copied().unwrap_or(0) as f64 / expected))
            .collect()
    };

    CompletenessCalendar {
        scope: scope.clone(),
        vehicle_class: class,
        window,
        year: dataset.year(),
        expected_series,
        cells,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectedWeek {
    pub start: NaiveDate,
    pub score: f64,
}

impl SelectedWeek {
    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        self.start.iter_days().take(7)
    }
}

/// Representative week per month. A month maps to `None` when no
/// candidate span had any data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekSelection {
    pub year: i32,
    pub months: BTreeMap<u32, Option<SelectedWeek>>,
}

impl WeekSelection {
    /// Selection with explicit week starts; months not listed are missing.
    pub fn from_starts(year: i32, starts: impl IntoIterator<Item = (u32, NaiveDate)>) -> Self {
        let mut months: BTreeMap<u32, Option<SelectedWeek>> = (1..=12).map(|m| (m, None)).collect();
        for (m, start) in starts {
            months.insert(m, Some(SelectedWeek { start, score: f64::NAN }));
        }
        WeekSelection { year, months }
    }

    pub fn week(&self, month: u32) -> Option<&SelectedWeek> {
        self.months.get(&month).and_then(|w| w.as_ref())
    }

    pub fn chosen(&self, month: u32) -> Option<NaiveDate> {
        self.week(month).map(|w| w.start)
    }

    pub fn score(&self, month: u32) -> Option<f64> {
        self.week(month).map(|w| w.score)
    }

    /// Month whose selected week contains `date`, if any.
    pub fn month_of(&self, date: NaiveDate) -> Option<u32> {
        self.months.iter().find_map(|(m, w)| {
            let w = w.as_ref()?;
            (date >= w.start && date < w.start + Duration::days(7)).then_some(*m)
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["month", "week_start", "score"])?;
        for (m, sel) in &self.months {
            let (start, score) = match sel {
                Some(s) => (s.start.format("%Y-%m-%d").to_string(), fmt_real(s.score)),
                None => (String::new(), String::new()),
            };
            w.write_record([m.to_string(), start, score])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mondays falling inside `month` of `year`.
pub fn candidate_mondays(year: i32, month: u32) -> Vec<NaiveDate> {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let offset = (7 - first.weekday().num_days_from_monday()) % 7;
    let monday = first + Duration::days(offset as i64);
    debug_assert_eq!(monday.weekday(), Weekday::Mon);
    monday
        .iter_weeks()
        .take_while(|d| d.month() == month)
        .collect()
}

/// Mean completeness over the seven days starting at `monday`. Days the
/// calendar does not cover (the span spilling past December) score zero.
pub fn span_score(calendar: &CompletenessCalendar, monday: NaiveDate) -> f64 {
    let total: f64 = monday
        .iter_days()
        .take(7)
        .map(|d| calendar.fraction(d).unwrap_or(0.0))
        .sum();
    total / 7.0
}

pub fn select_weeks(calendar: &CompletenessCalendar, year: i32) -> WeekSelection {
    let months = (1..=12)
        .map(|m| {
            let mut best: Option<SelectedWeek> = None;
            for monday in candidate_mondays(year, m) {
                let score = span_score(calendar, monday);
                // Strictly greater keeps the earliest Monday on ties.
                if best.is_none_or(|b| score > b.score) {
                    best = Some(SelectedWeek { start: monday, score });
                }
            }
            (m, best.filter(|b| b.score > 0.0))
        })
        .collect();
    WeekSelection { year, months }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HourlyCount, StationRegistry, TrafficRecord, HOURS};

    fn full_year(year: i32) -> Vec<TrafficRecord> {
        year_dates(year)
            .map(|date| TrafficRecord {
                station_id: "S1".into(),
                route_id: "A1".into(),
                direction: crate::model::Direction::Dir1,
                vehicle_class: VehicleClass::Car,
                date,
                counts: [HourlyCount::Count(10); HOURS],
            })
            .collect()
    }

    fn cal(records: Vec<TrafficRecord>) -> CompletenessCalendar {
        let ds = Dataset::new(2018, records, StationRegistry::new()).unwrap();
        completeness_calendar(&ds, VehicleClass::Car, HourWindow::MORNING_RUSH, &Scope::AllStations)
    }

    #[test]
    fn full_data_is_complete() {
        let c = cal(full_year(2018));
        assert_eq!(c.cells.len(), 365);
        assert!(c.cells.values().all(|f| *f == 1.0));
    }

    #[test]
    fn one_missing_hour() {
        let mut recs = full_year(2018);
        recs[10].counts[8] = HourlyCount::Missing;
        let c = cal(recs);
        let d = NaiveDate::from_ymd_opt(2018, 1, 11).unwrap();
        assert!((c.fraction(d).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absent_class_has_no_expectation() {
        let ds = Dataset::new(2018, full_year(2018), StationRegistry::new()).unwrap();
        let c = completeness_calendar(&ds, VehicleClass::Truck, HourWindow::FULL_DAY, &Scope::AllStations);
        assert!(!c.has_expectation());
        assert!(c.cells.is_empty());
        let sel = select_weeks(&c, 2018);
        assert!(sel.months.values().all(|w| w.is_none()));
    }

    #[test]
    fn station_scope_filters() {
        let ds = Dataset::new(2018, full_year(2018), StationRegistry::new()).unwrap();
        let other = Scope::Station("S9".into());
        let c = completeness_calendar(&ds, VehicleClass::Car, HourWindow::FULL_DAY, &other);
        assert!(!c.has_expectation());
    }

    #[test]
    fn complete_year_picks_first_monday() {
        let sel = select_weeks(&cal(full_year(2018)), 2018);
        for m in 1..=12 {
            assert_eq!(sel.chosen(m), Some(candidate_mondays(2018, m)[0]));
        }
        assert_eq!(sel.chosen(1), NaiveDate::from_ymd_opt(2018, 1, 1));
    }

    #[test]
    fn forced_week_three() {
        let mondays = candidate_mondays(2018, 3);
        let third = mondays[2];
        let recs: Vec<_> = full_year(2018)
            .into_iter()
            .filter(|r| r.date.month() != 3 || (r.date >= third && r.date < third + Duration::days(7)))
            .collect();
        let c = cal(recs);
        let sel = select_weeks(&c, 2018);
        assert_eq!(sel.chosen(3), Some(third));
    }

    #[test]
    fn empty_month_is_missing() {
        let recs: Vec<_> = full_year(2018).into_iter().filter(|r| r.date.month() != 6).collect();
        let sel = select_weeks(&cal(recs), 2018);
        // The last June span reaches into July, which has data.
        let june = candidate_mondays(2018, 6);
        assert!(june.iter().all(|d| d.month() == 6));
        let w = sel.week(6).unwrap();
        assert_eq!(w.start, *june.last().unwrap());
        let recs: Vec<_> = full_year(2018)
            .into_iter()
            .filter(|r| !(r.date.month() == 6 || (r.date.month() == 7 && r.date.day() < 10)))
            .collect();
        assert!(select_weeks(&cal(recs), 2018).week(6).is_none());
    }

    #[test]
    fn mondays_in_month() {
        let jan = candidate_mondays(2018, 1);
        assert_eq!(jan.len(), 5);
        assert_eq!(jan[0], NaiveDate::from_ymd_opt(2018, 1, 1).unwrap());
        let dec = candidate_mondays(2020, 12);
        assert_eq!(dec.last().copied(), NaiveDate::from_ymd_opt(2020, 12, 28));
    }

    #[test]
    fn csv_exports() {
        let sel = select_weeks(&cal(full_year(2018)), 2018);
        let mut out = Vec::new();
        sel.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("month,week_start,score\n1,2018-01-01,1.000000\n"));
    }
}
