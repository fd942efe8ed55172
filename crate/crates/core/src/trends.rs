//! Monthly volume totals, percent-of-year shares and year-over-year change.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::TrendError;
use crate::fmt_real;
use crate::harmonize::{profile_window, HarmonizedSeries};
use crate::model::{policy_sum, DayType, HourWindow, MissingPolicy};

/// Why a trend carries no values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrendNote {
    NoInput,
    ZeroTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthlyTrend {
    pub label: String,
    pub day_type: DayType,
    pub window: HourWindow,
    /// All twelve months; `None` where no value could be formed.
    pub values: BTreeMap<u32, Option<f64>>,
    pub note: Option<TrendNote>,
}

impl MonthlyTrend {
    pub fn new(
        label: impl Into<String>,
        day_type: DayType,
        window: HourWindow,
        values: impl IntoIterator<Item = (u32, Option<f64>)>,
    ) -> Self {
        let mut all: BTreeMap<u32, Option<f64>> = (1..=12).map(|m| (m, None)).collect();
        all.extend(values);
        MonthlyTrend {
            label: label.into(),
            day_type,
            window,
            values: all,
            note: None,
        }
    }

    pub fn value(&self, month: u32) -> Option<f64> {
        self.values.get(&month).copied().flatten()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.values_mut().flatten() {
            *v *= k;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["month", "value"])?;
        for (m, v) in &self.values {
            w.write_record([m.to_string(), v.map(fmt_real).unwrap_or_default()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sums each series' window volume per month. A series' volume is missing
/// if any hour of the window is missing; `policy` decides whether one
/// missing station spoils the month (`Strict`) or is skipped (`Lenient`).
pub fn monthly_totals(
    series_set: &[HarmonizedSeries],
    day_type: DayType,
    window: HourWindow,
    policy: MissingPolicy,
) -> MonthlyTrend {
    let label = format!("{} {}", day_type.code(), window.label());
    if series_set.is_empty() {
        let mut t = MonthlyTrend::new(label, day_type, window, []);
        t.note = Some(TrendNote::NoInput);
        return t;
    }
    let values = (1..=12).map(|m| {
        let per_station = series_set.iter().map(|s| {
            s.profile(m, day_type)
                .and_then(|p| profile_window(p, window, MissingPolicy::Strict))
        });
        (m, policy_sum(per_station, policy))
    });
    MonthlyTrend::new(label, day_type, window, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Change {
    Percent(f64),
    Missing,
    /// Baseline was zero; the ratio is undefined.
    UndefinedBaseline,
}

impl Change {
    pub fn percent(self) -> Option<f64> {
        match self {
            Change::Percent(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendDelta {
    pub changes: BTreeMap<u32, Change>,
}

impl TrendDelta {
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["month", "percent_change"])?;
        for (m, c) in &self.changes {
            w.write_record([m.to_string(), c.percent().map(fmt_real).unwrap_or_default()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Percent change `100 * (other - base) / base` per month, with `base` the
/// earlier year. Negative values are declines.
pub fn yoy_change(base: &MonthlyTrend, other: &MonthlyTrend) -> Result<TrendDelta, TrendError> {
    if base.day_type != other.day_type || base.window != other.window {
        return Err(TrendError::Incompatible);
    }
    let changes = (1..=12)
        .map(|m| {
            let c = match (base.value(m), other.value(m)) {
                (Some(b), _) if b == 0.0 => Change::UndefinedBaseline,
                (Some(b), Some(o)) => Change::Percent(100.0 * (o - b) / b),
                _ => Change::Missing,
            };
            (m, c)
        })
        .collect();
    Ok(TrendDelta { changes })
}

/// Each present month as a percentage of the sum over present months.
/// An all-zero or all-missing trend comes back all-missing with
/// [`TrendNote::ZeroTotal`].
pub fn percent_of_year(trend: &MonthlyTrend) -> MonthlyTrend {
    let total: f64 = trend.values.values().flatten().sum();
    let mut out = trend.clone();
    out.label = format!("{} (% of year)", trend.label);
    if total <= 0.0 {
        out.values.values_mut().for_each(|v| *v = None);
        out.note = Some(TrendNote::ZeroTotal);
        return out;
    }
    for v in out.values.values_mut().flatten() {
        *v = 100.0 * *v / total;
    }
    out
}
