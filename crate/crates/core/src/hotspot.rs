//! Station-level rush-hour summaries for the hotspot map, and ranking of
//! inter-year changes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::fmt_real;
use crate::harmonize::{rush_features_with, HarmonizedSeries, RushWindows};
use crate::model::{DayType, StationId, StationRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Period {
    Month(u32),
    Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SummaryScope {
    pub period: Period,
    pub day_type: DayType,
    pub windows: RushWindows,
}

impl SummaryScope {
    fn months(self) -> std::ops::RangeInclusive<u32> {
        match self.period {
            Period::Month(m) => m..=m,
            Period::Year => 1..=12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationSummary {
    pub station_id: StationId,
    pub location: Option<(f64, f64)>,
    pub morning: f64,
    pub evening: f64,
    /// `morning + evening` over the scope.
    pub total_volume: f64,
    /// `morning - evening`; positive when the morning rush dominates.
    pub asymmetry: f64,
    pub scope: SummaryScope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SummaryWarning {
    UnknownStation(StationId),
    DuplicateSeries(StationId),
    NoCoordinates(StationId),
}

#[derive(Debug, Clone, Default)]
pub struct Summaries {
    pub summaries: Vec<StationSummary>,
    pub warnings: Vec<SummaryWarning>,
}

/// Summarizes each series over `scope`. A month contributes only when both
/// its morning and evening volumes are present; stations with no
/// contributing month are omitted. Output is ordered by station id.
pub fn station_summaries(
    series_set: &[HarmonizedSeries],
    stations: &StationRegistry,
    scope: SummaryScope,
) -> Summaries {
    let mut out = Summaries::default();
    let mut seen = BTreeSet::new();
    let mut ordered: Vec<&HarmonizedSeries> = series_set.iter().collect();
    ordered.sort_by(|a, b| a.station_id.cmp(&b.station_id));
    for s in ordered {
        let Some(meta) = stations.get(&s.station_id) else {
            log::warn!("station {} not in registry, skipped", s.station_id);
            out.warnings.push(SummaryWarning::UnknownStation(s.station_id.clone()));
            continue;
        };
        if !seen.insert(&s.station_id) {
            out.warnings.push(SummaryWarning::DuplicateSeries(s.station_id.clone()));
            continue;
        }
        let mut morning = 0.0;
        let mut evening = 0.0;
        let mut any = false;
        for m in scope.months() {
            let f = rush_features_with(s, m, scope.day_type, scope.windows.morning, scope.windows.evening);
            if let (Some(a), Some(b)) = (f.morning, f.evening) {
                morning += a;
                evening += b;
                any = true;
            }
        }
        if !any {
            continue;
        }
        if meta.location.is_none() {
            out.warnings.push(SummaryWarning::NoCoordinates(s.station_id.clone()));
        }
        out.summaries.push(StationSummary {
            station_id: s.station_id.clone(),
            location: meta.location,
            morning,
            evening,
            total_volume: morning + evening,
            asymmetry: morning - evening,
            scope,
        });
    }
    out
}

/// Point features for every summary that has coordinates.
pub fn to_geojson(summaries: &[StationSummary]) -> Value {
    let features: Vec<Value> = summaries
        .iter()
        .filter_map(|s| {
            let (lat, lon) = s.location?;
            Some(json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [lon, lat] },
                "properties": {
                    "station_id": s.station_id.as_str(),
                    "total_volume": s.total_volume,
                    "asymmetry": s.asymmetry,
                    "morning": s.morning,
                    "evening": s.evening,
                },
            }))
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn write_summaries_csv<W: Write>(summaries: &[StationSummary], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "station_id",
        "latitude",
        "longitude",
        "morning",
        "evening",
        "total_volume",
        "asymmetry",
    ])?;
    for s in summaries {
        let (lat, lon) = s
            .location
            .map(|(a, b)| (format!("{a:?}"), format!("{b:?}")))
            .unwrap_or_default();
        w.write_record([
            s.station_id.to_string(),
            lat,
            lon,
            fmt_real(s.morning),
            fmt_real(s.evening),
            fmt_real(s.total_volume),
            fmt_real(s.asymmetry),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedChange {
    pub station_id: StationId,
    pub delta_total: f64,
    pub delta_percent: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Ranking {
    pub changes: Vec<RankedChange>,
    /// Stations present in both years but with a zero baseline.
    pub zero_baseline: Vec<StationId>,
}

/// Stations present in both years ordered by `|delta_percent|` descending,
/// ties broken by station id ascending, truncated to `k`.
pub fn rank_changes(year_a: &[StationSummary], year_b: &[StationSummary], k: usize) -> Ranking {
    let b: BTreeMap<&StationId, &StationSummary> = year_b.iter().map(|s| (&s.station_id, s)).collect();
    let mut out = Ranking::default();
    for a in year_a {
        let Some(other) = b.get(&a.station_id) else {
            continue;
        };
        if a.total_volume == 0.0 {
            out.zero_baseline.push(a.station_id.clone());
            continue;
        }
        let delta = other.total_volume - a.total_volume;
        out.changes.push(RankedChange {
            station_id: a.station_id.clone(),
            delta_total: delta,
            delta_percent: 100.0 * delta / a.total_volume,
        });
    }
    if out.changes.is_empty() {
        log::warn!("no stations in common between the two years");
    }
    out.changes.sort_by(|x, y| {
        y.delta_percent
            .abs()
            .total_cmp(&x.delta_percent.abs())
            .then_with(|| x.station_id.cmp(&y.station_id))
    });
    out.changes.truncate(k);
    out
}

pub fn write_ranking_csv<W: Write>(changes: &[RankedChange], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "station_id", "delta_total", "delta_percent"])?;
    for (i, c) in changes.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            c.station_id.to_string(),
            fmt_real(c.delta_total),
            fmt_real(c.delta_percent),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonize::{DirectionMode, Profile};
    use crate::model::{StationMeta, VehicleClass, HOURS};

    fn series(id: &str, morning: Option<f64>, evening: f64) -> HarmonizedSeries {
        let mut p: Profile = [Some(0.0); HOURS];
        p[7] = morning;
        p[16] = Some(evening);
        HarmonizedSeries {
            station_id: id.into(),
            vehicle_class: VehicleClass::Car,
            direction_mode: DirectionMode::TwoWayCombined,
            cells: [((1, DayType::Weekday), p)].into(),
        }
    }

    fn registry(ids: &[(&str, bool)]) -> StationRegistry {
        StationRegistry::from_stations(ids.iter().map(|(id, geo)| StationMeta {
            station_id: (*id).into(),
            name: id.to_string(),
            route_id: "A1".into(),
            location: geo.then_some((49.6, 6.1)),
            border_country: None,
        }))
        .unwrap()
    }

    const JAN: SummaryScope = SummaryScope {
        period: Period::Month(1),
        day_type: DayType::Weekday,
        windows: RushWindows {
            morning: crate::model::HourWindow::MORNING_RUSH,
            evening: crate::model::HourWindow::EVENING_RUSH,
        },
    };

    fn summary(id: &str, total: f64) -> StationSummary {
        StationSummary {
            station_id: id.into(),
            location: None,
            morning: total,
            evening: 0.0,
            total_volume: total,
            asymmetry: total,
            scope: JAN,
        }
    }

    #[test]
    fn totals_and_asymmetry() {
        let out = station_summaries(&[series("S1", Some(370.0), 300.0)], &registry(&[("S1", true)]), JAN);
        let s = &out.summaries[0];
        assert_eq!(s.total_volume, 670.0);
        assert_eq!(s.asymmetry, 70.0);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn missing_morning_omits_station() {
        let out = station_summaries(&[series("S1", None, 300.0)], &registry(&[("S1", true)]), JAN);
        assert!(out.summaries.is_empty());
    }

    #[test]
    fn unknown_and_ungeocoded_stations() {
        let out = station_summaries(
            &[series("S1", Some(1.0), 1.0), series("S2", Some(1.0), 1.0), series("S9", Some(1.0), 1.0)],
            &registry(&[("S1", true), ("S2", false)]),
            JAN,
        );
        assert_eq!(out.summaries.len(), 2);
        assert!(out.warnings.contains(&SummaryWarning::UnknownStation("S9".into())));
        assert!(out.warnings.contains(&SummaryWarning::NoCoordinates("S2".into())));
        let geo = to_geojson(&out.summaries);
        assert_eq!(geo["features"].as_array().unwrap().len(), 1);
        assert_eq!(geo["features"][0]["geometry"]["coordinates"][0], 6.1);
    }

    #[test]
    fn ranking_rules() {
        let r = rank_changes(
            &[summary("a", 100.0), summary("only_a", 5.0), summary("z", 0.0)],
            &[summary("a", 50.0), summary("z", 10.0)],
            10,
        );
        assert_eq!(r.changes.len(), 1);
        assert_eq!(r.changes[0].delta_percent, -50.0);
        assert_eq!(r.zero_baseline, vec![StationId::from("z")]);
    }

    #[test]
    fn ranking_ties_by_id() {
        let r = rank_changes(
            &[summary("b", 100.0), summary("a", 100.0), summary("c", 100.0)],
            &[summary("b", 150.0), summary("a", 50.0), summary("c", 101.0)],
            2,
        );
        let ids: Vec<_> = r.changes.iter().map(|c| c.station_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
    }
}
