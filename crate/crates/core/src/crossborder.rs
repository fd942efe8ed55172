//! Directional flow analysis at border stations.
//!
//! Two quantities drive the cross-border view: a day-of-week by hour
//! matrix for each month, and the direction balance
//! `100 * (out - in) / (out + in)`, bounded to `[-100, 100]`. Positive
//! balance means net flow leaving the country, negative means net flow
//! towards it. Which sensor direction counts as "out" is declared per
//! station by the caller.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate};
use serde::Serialize;

use crate::error::CrossborderError;
use crate::fmt_real;
use crate::harmonize::{
    filter_dataset, rush_features_with, weekday_average, DirectionMode, HarmonizedSeries, RushHourFeatures, RushWindows,
};
use crate::model::{Dataset, DayType, Direction, StationId, VehicleClass, HOURS};
use crate::quality::WeekSelection;

/// Harmonized one-way series `(Dir1, Dir2)` for a station.
pub fn directional_series(
    dataset: &Dataset,
    station_id: &StationId,
    class: VehicleClass,
    selection: &WeekSelection,
) -> Result<(HarmonizedSeries, HarmonizedSeries), CrossborderError> {
    let only: BTreeSet<StationId> = [station_id.clone()].into();
    let subset = filter_dataset(dataset, class, Some(&only));
    let mut series = weekday_average(&subset, selection);
    let mut take = |mode: DirectionMode, direction: Direction| {
        series
            .iter()
            .position(|s| s.direction_mode == mode)
            .map(|i| series.swap_remove(i))
            .ok_or_else(|| CrossborderError::MissingDirection {
                station: station_id.clone(),
                direction,
            })
    };
    let d1 = take(DirectionMode::Dir1Only, Direction::Dir1)?;
    let d2 = take(DirectionMode::Dir2Only, Direction::Dir2)?;
    Ok((d1, d2))
}

pub const DAYS: usize = 7;

/// Day-of-week (Monday first) by hour grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourlyMatrix {
    pub station_id: StationId,
    pub direction_mode: DirectionMode,
    pub month: u32,
    pub values: [[Option<f64>; HOURS]; DAYS],
}

impl HourlyMatrix {
    /// Matrix view of a harmonized series: Monday to Friday rows repeat the
    /// weekday average profile.
    pub fn from_series(series: &HarmonizedSeries, month: u32) -> Self {
        let row = |dt| series.profile(month, dt).copied().unwrap_or([None; HOURS]);
        let weekday = row(DayType::Weekday);
        let mut values = [weekday; DAYS];
        values[5] = row(DayType::Saturday);
        values[6] = row(DayType::Sunday);
        HourlyMatrix {
            station_id: series.station_id.clone(),
            direction_mode: series.direction_mode,
            month,
            values,
        }
    }

    pub fn get(&self, day: usize, hour: usize) -> Option<f64> {
        self.values[day][hour]
    }

    pub fn present(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .flat_map(|(d, row)| row.iter().enumerate().filter_map(move |(h, v)| v.map(|v| (d, h, v))))
    }

    /// `day,hour,value` rows with days numbered 1 (Monday) to 7 (Sunday).
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["day", "hour", "value"])?;
        for (d, row) in self.values.iter().enumerate() {
            for (h, v) in row.iter().enumerate() {
                w.write_record([(d + 1).to_string(), h.to_string(), v.map(fmt_real).unwrap_or_default()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Which days of a month feed a raw-data matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixBasis {
    /// The seven days starting at the given Monday.
    Week(NaiveDate),
    /// Every day of the month; each cell averages over its weekday's dates.
    WholeMonth,
}

/// Matrix built directly from records of one station, class and direction.
/// Cells average present values over the contributing dates.
pub fn hourly_matrix(
    dataset: &Dataset,
    station_id: &StationId,
    class: VehicleClass,
    direction: Direction,
    month: u32,
    basis: MatrixBasis,
) -> HourlyMatrix {
    let in_basis = |d: NaiveDate| match basis {
        MatrixBasis::Week(start) => d >= start && d < start + Duration::days(7),
        MatrixBasis::WholeMonth => d.month() == month,
    };
    let mut sum = [[0.0f64; HOURS]; DAYS];
    let mut n = [[0u32; HOURS]; DAYS];
    for r in dataset.records().iter().filter(|r| {
        &r.station_id == station_id && r.vehicle_class == class && r.direction == direction && in_basis(r.date)
    }) {
        let d = r.date.weekday().num_days_from_monday() as usize;
        for (h, c) in r.counts.iter().enumerate() {
            if let Some(v) = c.value() {
                sum[d][h] += f64::from(v);
                n[d][h] += 1;
            }
        }
    }
    let values = std::array::from_fn(|d| std::array::from_fn(|h| (n[d][h] > 0).then(|| sum[d][h] / f64::from(n[d][h]))));
    HourlyMatrix {
        station_id: station_id.clone(),
        direction_mode: direction.into(),
        month,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakCell {
    /// 1 = Monday ... 7 = Sunday.
    pub day: u32,
    pub hour: u32,
    pub value: f64,
}

/// Largest present cell; ties go to the earliest `(day, hour)`.
pub fn peak_cell(matrix: &HourlyMatrix) -> Result<PeakCell, CrossborderError> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (d, h, v) in matrix.present() {
        if best.is_none_or(|(_, _, b)| v > b) {
            best = Some((d, h, v));
        }
    }
    best.map(|(d, h, v)| PeakCell {
        day: d as u32 + 1,
        hour: h as u32,
        value: v,
    })
    .ok_or(CrossborderError::EmptyMatrix)
}

/// `100 * (out - in) / (out + in)`; `None` when there is no flow at all.
pub fn balance(outbound: f64, inbound: f64) -> Option<f64> {
    let total = outbound + inbound;
    (total > 0.0).then(|| 100.0 * (outbound - inbound) / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RushWindow {
    Morning,
    Evening,
}

impl RushWindow {
    pub fn code(self) -> &'static str {
        match self {
            RushWindow::Morning => "morning",
            RushWindow::Evening => "evening",
        }
    }

    fn pick(self, f: &RushHourFeatures) -> Option<f64> {
        match self {
            RushWindow::Morning => f.morning,
            RushWindow::Evening => f.evening,
        }
    }
}

/// Rush-hour features of one direction for every `(month, day type)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectionalFeatures(pub BTreeMap<(u32, DayType), RushHourFeatures>);

impl DirectionalFeatures {
    pub fn from_series(series: &HarmonizedSeries, windows: RushWindows) -> Self {
        let mut map = BTreeMap::new();
        for m in 1..=12 {
            for dt in DayType::ALL {
                map.insert((m, dt), rush_features_with(series, m, dt, windows.morning, windows.evening));
            }
        }
        DirectionalFeatures(map)
    }

    fn get(&self, month: u32, dt: DayType, w: RushWindow) -> Option<f64> {
        self.0.get(&(month, dt)).and_then(|f| w.pick(f))
    }
}

/// Outbound and inbound features for one station-year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearFlows {
    pub year: i32,
    pub outbound: DirectionalFeatures,
    pub inbound: DirectionalFeatures,
}

impl YearFlows {
    /// Assigns the `(Dir1, Dir2)` pair to outbound/inbound according to the
    /// station's declared outbound direction.
    pub fn from_directional(
        year: i32,
        (dir1, dir2): (&HarmonizedSeries, &HarmonizedSeries),
        outbound: Direction,
        windows: RushWindows,
    ) -> Result<Self, CrossborderError> {
        let (out, inb) = match outbound {
            Direction::Dir1 => (dir1, dir2),
            Direction::Dir2 => (dir2, dir1),
            Direction::Both => return Err(CrossborderError::OutboundNotOneWay(outbound)),
        };
        Ok(YearFlows {
            year,
            outbound: DirectionalFeatures::from_series(out, windows),
            inbound: DirectionalFeatures::from_series(inb, windows),
        })
    }

    fn balance(&self, month: u32, dt: DayType, w: RushWindow) -> Option<f64> {
        balance(self.outbound.get(month, dt, w)?, self.inbound.get(month, dt, w)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionBalance {
    pub station_id: StationId,
    pub month: u32,
    pub day_type: DayType,
    pub window: RushWindow,
    pub balance_base: Option<f64>,
    pub balance_other: Option<f64>,
    /// `balance_other - balance_base`, in percentage points.
    pub percent_change: Option<f64>,
}

/// Balance in both years and its change, for every month, day type and
/// rush window. Cells lacking a direction or with zero total flow are
/// missing.
pub fn direction_balance_change(station_id: &StationId, base: &YearFlows, other: &YearFlows) -> Vec<DirectionBalance> {
    let mut out = Vec::with_capacity(12 * 3 * 2);
    for month in 1..=12 {
        for dt in DayType::ALL {
            for w in [RushWindow::Morning, RushWindow::Evening] {
                let b = base.balance(month, dt, w);
                let o = other.balance(month, dt, w);
                out.push(DirectionBalance {
                    station_id: station_id.clone(),
                    month,
                    day_type: dt,
                    window: w,
                    balance_base: b,
                    balance_other: o,
                    percent_change: b.zip(o).map(|(b, o)| o - b),
                });
            }
        }
    }
    out
}

pub fn write_balance_csv<W: Write>(rows: &[DirectionBalance], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["month", "day_type", "window", "balance_base", "balance_other", "change"])?;
    let f = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.month.to_string(),
            r.day_type.code().to_string(),
            r.window.code().to_string(),
            f(r.balance_base),
            f(r.balance_other),
            f(r.percent_change),
        ])?;
    }
    w.flush()?;
    Ok(())
}
