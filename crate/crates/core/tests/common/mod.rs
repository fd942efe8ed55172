//! Naive re-implementations used as test oracles. They loop over raw
//! records directly and share no code with the library beyond its types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use trafficscope::model::{Dataset, DayType, Direction, HourlyCount, StationRegistry, TrafficRecord, VehicleClass};
use trafficscope::synth::{generate, SynthConfig};

pub type Hours = [Option<f64>; 24];

pub fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

pub fn close_opt(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => close(x, y),
        (None, None) => true,
        _ => false,
    }
}

pub fn kind_of(date: NaiveDate) -> DayType {
    match date.weekday() {
        Weekday::Sat => DayType::Saturday,
        Weekday::Sun => DayType::Sunday,
        _ => DayType::Weekday,
    }
}

pub fn dates_of(year: i32) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut d = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
    while d.year() == year {
        out.push(d);
        d += Duration::days(1);
    }
    out
}

pub fn synth(seed: u64, n_stations: usize, year: i32, dropout: f64, border: usize) -> (Dataset, StationRegistry) {
    generate(&SynthConfig {
        seed,
        n_stations,
        year,
        dropout_rate: dropout,
        border_stations: border,
        ..SynthConfig::default()
    })
    .unwrap()
}

/// Fraction of expected cells present per date, or `None` when nothing in
/// scope reports at all.
pub fn calendar(
    records: &[TrafficRecord],
    year: i32,
    class: VehicleClass,
    hours: std::ops::Range<usize>,
    station: Option<&str>,
) -> Option<BTreeMap<NaiveDate, f64>> {
    let in_scope: Vec<&TrafficRecord> = records
        .iter()
        .filter(|r| r.vehicle_class == class && station.is_none_or(|s| r.station_id.as_str() == s))
        .collect();
    let series: BTreeSet<(String, Direction)> = in_scope
        .iter()
        .map(|r| (r.station_id.as_str().to_string(), r.direction))
        .collect();
    if series.is_empty() {
        return None;
    }
    let mut by_date: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for r in &in_scope {
        let present = hours.clone().filter(|&h| r.counts[h].value().is_some()).count();
        *by_date.entry(r.date).or_default() += present;
    }
    let expected = (series.len() * hours.len()) as f64;
    Some(
        dates_of(year)
            .into_iter()
            .map(|d| (d, by_date.get(&d).copied().unwrap_or(0) as f64 / expected))
            .collect(),
    )
}

/// Exhaustive best Monday per month; earliest wins ties, zero scores give
/// `None`.
pub fn best_weeks(fractions: &BTreeMap<NaiveDate, f64>, year: i32) -> BTreeMap<u32, Option<(NaiveDate, f64)>> {
    let mut out = BTreeMap::new();
    for m in 1..=12 {
        let mut scored = Vec::new();
        let mut d = NaiveDate::from_ymd_opt(year, m, 1).unwrap();
        while d.month() == m {
            if d.weekday() == Weekday::Mon {
                let mut sum = 0.0;
                for k in 0..7 {
                    sum += fractions.get(&(d + Duration::days(k))).copied().unwrap_or(0.0);
                }
                scored.push((d, sum / 7.0));
            }
            d += Duration::days(1);
        }
        let max = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let pick = scored.into_iter().find(|s| s.1 == max).filter(|s| s.1 > 0.0);
        out.insert(m, pick);
    }
    out
}

/// One two-way record per `(station, date, class)`: the `Both` record if
/// any, else the strict hourwise sum of the two directions.
pub fn combine(records: &[TrafficRecord]) -> Vec<TrafficRecord> {
    let find = |r: &TrafficRecord, dir: Direction| {
        records
            .iter()
            .find(|x| x.station_id == r.station_id && x.date == r.date && x.vehicle_class == r.vehicle_class && x.direction == dir)
    };
    let mut done = BTreeSet::new();
    let mut out = Vec::new();
    for r in records {
        if !done.insert((r.station_id.clone(), r.date, r.vehicle_class)) {
            continue;
        }
        if let Some(b) = find(r, Direction::Both) {
            out.push(b.clone());
        } else if let (Some(a), Some(b)) = (find(r, Direction::Dir1), find(r, Direction::Dir2)) {
            let mut rec = a.clone();
            rec.direction = Direction::Both;
            for h in 0..24 {
                rec.counts[h] = match (a.counts[h].value(), b.counts[h].value()) {
                    (Some(x), Some(y)) => HourlyCount::Count(x + y),
                    _ => HourlyCount::Missing,
                };
            }
            out.push(rec);
        }
    }
    out
}

/// Present-only hourly means over the days of each type in each month's
/// week, per `(station, direction)`.
pub type Averages = BTreeMap<(String, Direction), BTreeMap<(u32, DayType), Hours>>;

pub fn averages(records: &[TrafficRecord], weeks: &BTreeMap<u32, Option<NaiveDate>>) -> Averages {
    let mut out: Averages = BTreeMap::new();
    for r in records {
        out.entry((r.station_id.as_str().to_string(), r.direction)).or_default();
    }
    for ((station, dir), cells) in out.iter_mut() {
        for (&m, start) in weeks {
            let Some(start) = *start else { continue };
            let week: Vec<NaiveDate> = (0..7).map(|k| start + Duration::days(k)).collect();
            for dt in DayType::ALL {
                let days: Vec<&TrafficRecord> = records
                    .iter()
                    .filter(|r| {
                        r.station_id.as_str() == station && r.direction == *dir && week.contains(&r.date) && kind_of(r.date) == dt
                    })
                    .collect();
                if days.is_empty() {
                    continue;
                }
                let mut profile = [None; 24];
                for (h, cell) in profile.iter_mut().enumerate() {
                    let vals: Vec<f64> = days.iter().filter_map(|r| r.counts[h].value()).map(f64::from).collect();
                    if !vals.is_empty() {
                        *cell = Some(vals.iter().sum::<f64>() / vals.len() as f64);
                    }
                }
                cells.insert((m, dt), profile);
            }
        }
    }
    out
}

pub fn window_total(profile: Option<&Hours>, hours: std::ops::Range<usize>) -> Option<f64> {
    let p = profile?;
    let mut total = 0.0;
    for h in hours {
        total += p[h]?;
    }
    Some(total)
}

/// National monthly totals; `strict` decides whether one missing station
/// spoils the month.
pub fn monthly(avg: &Averages, dt: DayType, hours: std::ops::Range<usize>, strict: bool) -> BTreeMap<u32, Option<f64>> {
    (1..=12)
        .map(|m| {
            let per: Vec<Option<f64>> = avg.values().map(|cells| window_total(cells.get(&(m, dt)), hours.clone())).collect();
            let value = if strict {
                per.iter().copied().sum::<Option<f64>>()
            } else if per.iter().all(Option::is_none) {
                None
            } else {
                Some(per.iter().flatten().sum())
            };
            (m, value)
        })
        .collect()
}

/// `(station, morning, evening)` over months where both are present.
pub fn summaries(avg: &Averages, months: std::ops::RangeInclusive<u32>, dt: DayType) -> Vec<(String, f64, f64)> {
    let mut out = Vec::new();
    for ((station, _), cells) in avg {
        let (mut am, mut pm, mut any) = (0.0, 0.0, false);
        for m in months.clone() {
            let a = window_total(cells.get(&(m, dt)), 7..10);
            let b = window_total(cells.get(&(m, dt)), 16..19);
            if let (Some(a), Some(b)) = (a, b) {
                am += a;
                pm += b;
                any = true;
            }
        }
        if any {
            out.push((station.clone(), am, pm));
        }
    }
    out
}

/// Day-of-week by hour means of present values over the given dates.
pub fn matrix(records: &[TrafficRecord], station: &str, dir: Direction, dates: &[NaiveDate]) -> [[Option<f64>; 24]; 7] {
    let mut out = [[None; 24]; 7];
    for (d, row) in out.iter_mut().enumerate() {
        for (h, cell) in row.iter_mut().enumerate() {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| {
                    r.station_id.as_str() == station
                        && r.direction == dir
                        && dates.contains(&r.date)
                        && r.date.weekday().num_days_from_monday() as usize == d
                })
                .filter_map(|r| r.counts[h].value())
                .map(f64::from)
                .collect();
            if !vals.is_empty() {
                *cell = Some(vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
    }
    out
}

pub fn balance(out: f64, inb: f64) -> Option<f64> {
    if out + inb > 0.0 {
        Some(100.0 * (out - inb) / (out + inb))
    } else {
        None
    }
}
