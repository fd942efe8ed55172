//! Hand-written SVG charts. Coordinates are printed with fixed precision so
//! identical inputs give identical files.

use std::fmt::Write;

use chrono::{Datelike, NaiveDate};
use trafficscope::crossborder::{DirectionBalance, HourlyMatrix, RushWindow, DAYS};
use trafficscope::hotspot::StationSummary;
use trafficscope::model::{DayType, HOURS};
use trafficscope::quality::{CompletenessCalendar, WeekSelection};
use trafficscope::trends::MonthlyTrend;

const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];
const WEEKDAYS: [&str; DAYS] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const MISSING_FILL: &str = "#d9d9d9";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Doc {
    body: String,
}

impl Doc {
    fn new(width: u32, height: u32, title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(body, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
            f64::from(width) / 2.0,
            escape(title)
        );
        Doc { body }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, tip: Option<&str>) {
        let _ = write!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}""#);
        match tip {
            Some(t) => {
                let _ = writeln!(self.body, "><title>{}</title></rect>", escape(t));
            }
            None => self.body.push_str("/>\n"),
        }
    }

    fn outline(&mut self, x: f64, y: f64, w: f64, h: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, tip: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}" fill-opacity="0.6" stroke="black" stroke-width="0.5"><title>{}</title></circle>"#,
            escape(tip)
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        if points.is_empty() {
            return;
        }
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }

    fn finish(mut self) -> Vec<u8> {
        self.body.push_str("</svg>\n");
        self.body.into_bytes()
    }
}

/// White to dark blue for `t` in [0, 1].
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

/// Nice upper bound for an axis.
fn axis_max(v: f64) -> f64 {
    if v <= 0.0 || !v.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|k| k * mag)
        .find(|c| *c >= v)
        .unwrap_or(10.0 * mag)
}

/// Month-by-day grid of completeness fractions with selected weeks boxed.
pub fn calendar_heatmap(cal: &CompletenessCalendar, selection: &WeekSelection) -> Vec<u8> {
    let (cell, left, top) = (18.0, 40.0, 40.0);
    let mut doc = Doc::new(
        (left + 31.0 * cell + 20.0) as u32,
        (top + 12.0 * cell + 30.0) as u32,
        &format!("Completeness {} {} {}", cal.year, cal.vehicle_class, cal.window.label()),
    );
    for d in 1..=31u32 {
        if d == 1 || d % 5 == 0 {
            doc.text(left + (f64::from(d) - 0.5) * cell, top - 4.0, "middle", &d.to_string());
        }
    }
    for m in 1..=12u32 {
        let y = top + f64::from(m - 1) * cell;
        doc.text(left - 4.0, y + cell * 0.7, "end", MONTHS[m as usize - 1]);
        for d in 1..=31u32 {
            let Some(date) = NaiveDate::from_ymd_opt(cal.year, m, d) else {
                continue;
            };
            let x = left + f64::from(d - 1) * cell;
            match cal.fraction(date) {
                Some(f) => doc.rect(x, y, cell - 1.0, cell - 1.0, &ramp(f), Some(&format!("{date}: {f:.3}"))),
                None => doc.rect(x, y, cell - 1.0, cell - 1.0, MISSING_FILL, Some(&date.to_string())),
            }
        }
    }
    for week in selection.months.values().flatten() {
        // A week can straddle two months; box each row segment.
        let days: Vec<NaiveDate> = week.days().filter(|d| d.year() == cal.year).collect();
        for seg in days.chunk_by(|a, b| a.month() == b.month()) {
            let (first, last) = (seg[0], seg[seg.len() - 1]);
            let x = left + f64::from(first.day() - 1) * cell;
            let y = top + f64::from(first.month() - 1) * cell;
            doc.outline(x - 0.5, y - 0.5, f64::from(last.day() - first.day() + 1) * cell, cell, "#e6550d");
        }
    }
    doc.finish()
}

/// One line per trend over the twelve months; gaps where a value is missing.
pub fn trend_lines(title: &str, y_label: &str, trends: &[MonthlyTrend]) -> Vec<u8> {
    let (w, h, left, top, right, bottom) = (640.0, 360.0, 70.0, 40.0, 130.0, 40.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let ymax = axis_max(trends.iter().flat_map(|t| t.values.values().flatten()).fold(0.0, |a, b| a.max(*b)));
    let mut doc = Doc::new(w as u32, h as u32, title);
    let x_of = |m: u32| left + pw * (f64::from(m) - 1.0) / 11.0;
    let y_of = |v: f64| top + ph * (1.0 - v / ymax);
    doc.line(left, top + ph, left + pw, top + ph, "black");
    doc.line(left, top, left, top + ph, "black");
    for i in 0..=4 {
        let v = ymax * f64::from(i) / 4.0;
        doc.line(left - 4.0, y_of(v), left, y_of(v), "black");
        doc.text(left - 6.0, y_of(v) + 4.0, "end", &format!("{v:.0}"));
    }
    for m in 1..=12 {
        doc.text(x_of(m), top + ph + 16.0, "middle", MONTHS[m as usize - 1]);
    }
    doc.text(14.0, top - 10.0, "start", y_label);
    for (i, t) in trends.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut run = Vec::new();
        for m in 1..=12 {
            match t.value(m) {
                Some(v) => run.push((x_of(m), y_of(v))),
                None => doc.polyline(&std::mem::take(&mut run), colour),
            }
        }
        doc.polyline(&run, colour);
        let ly = top + 16.0 * i as f64 + 10.0;
        doc.line(left + pw + 12.0, ly, left + pw + 32.0, ly, colour);
        doc.text(left + pw + 36.0, ly + 4.0, "start", &t.label);
    }
    doc.finish()
}

/// Stations placed by longitude/latitude; area tracks total volume, colour
/// the dominant rush (blue morning, red evening).
pub fn bubble_map(title: &str, summaries: &[StationSummary]) -> Vec<u8> {
    let (w, h, pad) = (560.0, 560.0, 50.0);
    let mut doc = Doc::new(w as u32, h as u32, title);
    let located: Vec<(&StationSummary, (f64, f64))> =
        summaries.iter().filter_map(|s| s.location.map(|l| (s, l))).collect();
    if located.is_empty() {
        doc.text(w / 2.0, h / 2.0, "middle", "no located stations");
        return doc.finish();
    }
    let fold = |f: fn(f64, f64) -> f64, pick: fn(&(f64, f64)) -> f64, init: f64| {
        located.iter().map(|(_, l)| pick(l)).fold(init, f)
    };
    let (lat0, lat1) = (fold(f64::min, |l| l.0, f64::INFINITY), fold(f64::max, |l| l.0, f64::NEG_INFINITY));
    let (lon0, lon1) = (fold(f64::min, |l| l.1, f64::INFINITY), fold(f64::max, |l| l.1, f64::NEG_INFINITY));
    let span = (lat1 - lat0).max(lon1 - lon0).max(1e-6);
    let vmax = located.iter().map(|(s, _)| s.total_volume).fold(0.0, f64::max).max(1e-9);
    let side = w - 2.0 * pad;
    doc.outline(pad, pad, side, side, "#999999");
    for (s, (lat, lon)) in located {
        let cx = pad + side * (lon - lon0) / span;
        let cy = pad + side * (1.0 - (lat - lat0) / span);
        let r = 3.0 + 22.0 * (s.total_volume / vmax).sqrt();
        let fill = if s.asymmetry >= 0.0 { "#3182bd" } else { "#de2d26" };
        let tip = format!(
            "{}: total {:.0}, morning {:.0}, evening {:.0}",
            s.station_id, s.total_volume, s.morning, s.evening
        );
        doc.circle(cx, cy, r, fill, &tip);
    }
    doc.text(pad, h - 16.0, "start", "blue: morning-dominant, red: evening-dominant");
    doc.finish()
}

/// Day-of-week by hour heatmap scaled to the matrix maximum.
pub fn matrix_heatmap(title: &str, matrix: &HourlyMatrix) -> Vec<u8> {
    let (cell, left, top) = (22.0, 44.0, 44.0);
    let mut doc = Doc::new(
        (left + HOURS as f64 * cell + 20.0) as u32,
        (top + DAYS as f64 * cell + 30.0) as u32,
        title,
    );
    let vmax = matrix.present().map(|(_, _, v)| v).fold(0.0, f64::max).max(1e-9);
    for hr in 0..HOURS {
        if hr % 3 == 0 {
            doc.text(left + (hr as f64 + 0.5) * cell, top - 4.0, "middle", &format!("{hr:02}"));
        }
    }
    for (d, name) in WEEKDAYS.iter().enumerate() {
        let y = top + d as f64 * cell;
        doc.text(left - 4.0, y + cell * 0.7, "end", name);
        for hr in 0..HOURS {
            let x = left + hr as f64 * cell;
            match matrix.get(d, hr) {
                Some(v) => doc.rect(x, y, cell - 1.0, cell - 1.0, &ramp(v / vmax), Some(&format!("{name} {hr:02}h: {v:.1}"))),
                None => doc.rect(x, y, cell - 1.0, cell - 1.0, MISSING_FILL, None),
            }
        }
    }
    doc.finish()
}

/// Balance change per month for one rush window, one bar per day type.
pub fn balance_bars(title: &str, rows: &[DirectionBalance], window: RushWindow) -> Vec<u8> {
    let (w, h, left, top, right, bottom) = (680.0, 340.0, 60.0, 40.0, 110.0, 40.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let picked: Vec<&DirectionBalance> = rows.iter().filter(|r| r.window == window).collect();
    let vmax = axis_max(picked.iter().filter_map(|r| r.percent_change).fold(0.0, |a, b| a.max(b.abs())));
    let mut doc = Doc::new(w as u32, h as u32, title);
    let y_of = |v: f64| top + ph / 2.0 * (1.0 - v / vmax);
    doc.line(left, top, left, top + ph, "black");
    doc.line(left, y_of(0.0), left + pw, y_of(0.0), "black");
    for v in [-vmax, -vmax / 2.0, vmax / 2.0, vmax] {
        doc.text(left - 6.0, y_of(v) + 4.0, "end", &format!("{v:.0}"));
    }
    let group = pw / 12.0;
    let bar = group / 4.0;
    for m in 1..=12u32 {
        let gx = left + f64::from(m - 1) * group;
        doc.text(gx + group / 2.0, top + ph + 16.0, "middle", MONTHS[m as usize - 1]);
        for (i, dt) in DayType::ALL.iter().enumerate() {
            let Some(v) = picked
                .iter()
                .find(|r| r.month == m && r.day_type == *dt)
                .and_then(|r| r.percent_change)
            else {
                continue;
            };
            let (y0, y1) = (y_of(0.0), y_of(v));
            let tip = format!("{} {}: {v:+.2} pp", MONTHS[m as usize - 1], dt.code());
            doc.rect(gx + bar * (i as f64 + 0.5), y0.min(y1), bar, (y1 - y0).abs(), PALETTE[i], Some(&tip));
        }
    }
    for (i, dt) in DayType::ALL.iter().enumerate() {
        let ly = top + 16.0 * i as f64;
        doc.rect(left + pw + 12.0, ly, 10.0, 10.0, PALETTE[i], None);
        doc.text(left + pw + 26.0, ly + 9.0, "start", dt.code());
    }
    doc.text(14.0, top - 10.0, "start", "change in balance (pp)");
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_ends() {
        assert_eq!(ramp(0.0), "#f7fbff");
        assert_eq!(ramp(1.0), "#08306b");
        assert_eq!(ramp(7.0), "#08306b");
    }

    #[test]
    fn axis_bounds() {
        assert_eq!(axis_max(0.0), 1.0);
        assert_eq!(axis_max(730.0), 1000.0);
        assert_eq!(axis_max(180.0), 200.0);
        assert_eq!(axis_max(2.5), 2.5);
    }

    #[test]
    fn text_is_escaped() {
        let doc = Doc::new(10, 10, "a<b & c").finish();
        let s = String::from_utf8(doc).unwrap();
        assert!(s.contains("a&lt;b &amp; c"));
        assert!(s.ends_with("</svg>\n"));
    }
}
