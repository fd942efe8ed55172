use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use trafficscope::crossborder::{
    direction_balance_change, directional_series, hourly_matrix, peak_cell, write_balance_csv, DirectionBalance,
    HourlyMatrix, MatrixBasis, RushWindow, YearFlows,
};
use trafficscope::harmonize::{
    combine_directions, filter_dataset, weekday_average, write_series_csv, CombineConflict, HarmonizedSeries,
    RushWindows,
};
use trafficscope::hotspot::{
    rank_changes, station_summaries, to_geojson, write_ranking_csv, write_summaries_csv, Period, StationSummary,
    SummaryScope,
};
use trafficscope::ingest::{dataset_summary, parse_counts_file, parse_station_file, write_counts, write_stations};
use trafficscope::model::{Dataset, DayType, Direction, HourWindow, StationId, StationRegistry};
use trafficscope::quality::{completeness_calendar, select_weeks, CompletenessCalendar, Scope, WeekSelection};
use trafficscope::synth::{generate, SynthConfig};
use trafficscope::trends::{monthly_totals, percent_of_year, yoy_change, MonthlyTrend};
use trafficscope::IngestError;

use crate::config::RunConfig;
use crate::output::Outputs;
use crate::{svg, CliError};

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Parse counts files and write ingest reports and dataset summaries
    Ingest,
    /// Completeness calendars and the selected week of each month
    Quality,
    /// Two-way weekday-averaged profiles per station
    Harmonize,
    /// Monthly rush-hour totals, their share of the year and year-on-year change
    Trends,
    /// Per-station rush summaries (CSV and GeoJSON) and change rankings
    Hotspot,
    /// Hourly matrices, peaks and direction balance at border stations
    Crossborder,
    /// Everything above plus SVG charts
    Report,
    /// Write a synthetic dataset and a matching config file
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "n-stations", default_value_t = 5)]
    pub n_stations: usize,
    /// Probability that an hourly cell is missing
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// Number of stations tagged as border stations
    #[arg(long, default_value_t = 1)]
    pub border: usize,
    /// Also emit truck records at this fraction of car volume
    #[arg(long)]
    pub trucks: Option<f64>,
    /// Volume factor for March to May of the later year when comparing
    #[arg(long = "spring-factor", default_value_t = 1.0)]
    pub spring_factor: f64,
}

/// Week selection covers both rush windows unless `--window` says otherwise.
fn selection_window(cfg: &RunConfig) -> HourWindow {
    cfg.window
        .unwrap_or_else(|| HourWindow::new(7, 19).expect("7-19 is a valid window"))
}

fn rush_windows(cfg: &RunConfig) -> RushWindows {
    RushWindows {
        morning: cfg.morning,
        evening: cfg.evening,
    }
}

fn trend_windows(cfg: &RunConfig) -> Vec<(String, HourWindow)> {
    match cfg.window {
        Some(w) => vec![(w.label(), w)],
        None => vec![("morning".into(), cfg.morning), ("evening".into(), cfg.evening)],
    }
}

fn day_types(cfg: &RunConfig) -> Vec<DayType> {
    cfg.day_type.map_or_else(|| DayType::ALL.to_vec(), |d| vec![d])
}

struct Loaded {
    year: i32,
    raw: Dataset,
    report_name: String,
}

struct YearData {
    year: i32,
    /// Records of the configured class (and station, if any).
    raw: Dataset,
    calendar: CompletenessCalendar,
    selection: WeekSelection,
    combined: Dataset,
    conflicts: Vec<CombineConflict>,
    series: Vec<HarmonizedSeries>,
}

struct Session<'a> {
    cfg: &'a RunConfig,
    out: Outputs,
    stations: StationRegistry,
    station_rejects: Vec<(u64, String)>,
}

impl<'a> Session<'a> {
    fn open(cfg: &'a RunConfig) -> Result<Self, CliError> {
        let mut session = Session {
            cfg,
            out: Outputs::new(&cfg.out_dir),
            stations: StationRegistry::new(),
            station_rejects: Vec::new(),
        };
        if let Some(path) = &cfg.stations {
            let parsed = parse_station_file(path).map_err(|e| CliError::Data {
                message: format!("stations file '{}': {e}", path.display()),
                report: None,
            })?;
            if !parsed.rejected.is_empty() {
                log::warn!("{} station rows rejected in {}", parsed.rejected.len(), path.display());
            }
            session.stations = parsed.registry;
            session.station_rejects = parsed.rejected;
        }
        Ok(session)
    }

    /// Turns a data problem found after ingest into an error that points at
    /// the year's ingest report, writing that report first.
    fn data_error(&mut self, report_name: &str, message: String) -> CliError {
        match self.out.flush_one(report_name) {
            Ok(path) => CliError::Data {
                message,
                report: Some(path),
            },
            Err(e) => e,
        }
    }

    fn load(&mut self, year: i32) -> Result<Loaded, CliError> {
        let path = &self.cfg.counts[&year];
        let (raw, report) = parse_counts_file(path, year).map_err(|e| {
            let message = match e {
                IngestError::Io { .. } => e.to_string(),
                _ => format!("counts file '{}': {e}", path.display()),
            };
            CliError::Data { message, report: None }
        })?;
        let report_name = format!("ingest_report_{year}.json");
        if !report.is_clean() {
            log::warn!(
                "{year}: skipped {} duplicate and {} malformed rows, see {}",
                report.n_duplicates,
                report.n_malformed,
                self.out.path_of(&report_name).display()
            );
        }
        self.out.json(&report_name, &report)?;
        let unknown = raw
            .records()
            .iter()
            .map(|r| &r.station_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|id| self.cfg.stations.is_some() && self.stations.get(id).is_none())
            .count();
        if unknown > 0 {
            log::warn!("{year}: {unknown} stations in the counts file are missing from the stations file");
        }
        Ok(Loaded {
            year,
            raw: raw.with_stations(self.stations.clone()),
            report_name,
        })
    }

    fn prepare(&mut self, loaded: &Loaded) -> Result<YearData, CliError> {
        let cfg = self.cfg;
        let only: Option<BTreeSet<StationId>> = cfg.station.clone().map(|s| [s].into());
        let raw = filter_dataset(&loaded.raw, cfg.class, only.as_ref());
        if raw.is_empty() {
            let what = match &cfg.station {
                Some(s) => format!("no {} records for station {s} in {}", cfg.class, loaded.year),
                None => format!("no {} records in {}", cfg.class, loaded.year),
            };
            return Err(self.data_error(&loaded.report_name, what));
        }
        let scope = cfg.station.clone().map_or(Scope::AllStations, Scope::Station);
        let calendar = completeness_calendar(&raw, cfg.class, selection_window(cfg), &scope);
        let selection = select_weeks(&calendar, loaded.year);
        for (m, w) in &selection.months {
            if w.is_none() {
                log::warn!("{}: month {m} has no week with any data", loaded.year);
            }
        }
        let combined = combine_directions(&raw);
        let series = weekday_average(&combined.dataset, &selection);
        Ok(YearData {
            year: loaded.year,
            raw,
            calendar,
            selection,
            combined: combined.dataset,
            conflicts: combined.conflicts,
            series,
        })
    }

    fn prepare_all(&mut self) -> Result<Vec<YearData>, CliError> {
        let loaded = self.load_all()?;
        loaded.iter().map(|l| self.prepare(l)).collect()
    }

    fn load_all(&mut self) -> Result<Vec<Loaded>, CliError> {
        self.cfg.years().into_iter().map(|y| self.load(y)).collect()
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if let Command::Synth(args) = cmd {
        return synth(args, cfg);
    }
    let needs_stations = matches!(cmd, Command::Hotspot | Command::Crossborder | Command::Report);
    cfg.validate(needs_stations)?;
    let mut s = Session::open(cfg)?;
    match cmd {
        Command::Ingest => ingest(&mut s)?,
        Command::Quality => {
            let data = s.prepare_all()?;
            quality(&mut s, &data)?;
        }
        Command::Harmonize => {
            let data = s.prepare_all()?;
            harmonize(&mut s, &data)?;
        }
        Command::Trends => {
            let data = s.prepare_all()?;
            trends(&mut s, &data)?;
        }
        Command::Hotspot => {
            let data = s.prepare_all()?;
            hotspot(&mut s, &data)?;
        }
        Command::Crossborder => {
            let data = s.prepare_all()?;
            let stations = border_stations(&s, true)?;
            crossborder(&mut s, &data, &stations)?;
        }
        Command::Report => report(&mut s)?,
        Command::Synth(_) => unreachable!(),
    }
    s.out.commit()
}

fn ingest(s: &mut Session) -> Result<(), CliError> {
    for l in s.load_all()? {
        let summary = dataset_summary(&l.raw);
        s.out.with(format!("summary_{}.csv", l.year), |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["metric", "value"])?;
            w.write_record(["records".to_string(), summary.n_records.to_string()])?;
            w.write_record(["stations".to_string(), summary.n_stations.to_string()])?;
            w.write_record(["routes".to_string(), summary.n_routes.to_string()])?;
            for (class, total) in &summary.total_by_class {
                w.write_record([format!("total_{class}"), total.to_string()])?;
            }
            w.flush()?;
            Ok::<(), csv::Error>(())
        })?;
    }
    if s.cfg.stations.is_some() {
        let report = serde_json::json!({
            "n_stations": s.stations.len(),
            "rejected": s.station_rejects,
        });
        s.out.json("stations_report.json", &report)?;
    }
    Ok(())
}

fn quality(s: &mut Session, data: &[YearData]) -> Result<(), CliError> {
    for d in data {
        s.out.with(format!("calendar_{}.csv", d.year), |b| d.calendar.write_csv(b))?;
        s.out.with(format!("weeks_{}.csv", d.year), |b| d.selection.write_csv(b))?;
    }
    Ok(())
}

fn harmonize(s: &mut Session, data: &[YearData]) -> Result<(), CliError> {
    for d in data {
        s.out.with(format!("harmonized_{}.csv", d.year), |b| write_series_csv(&d.series, b))?;
        if !d.conflicts.is_empty() {
            log::warn!("{}: {} two-way records disagree with their one-way sums", d.year, d.conflicts.len());
        }
        s.out.json(format!("combine_conflicts_{}.json", d.year), &d.conflicts)?;
    }
    Ok(())
}

/// Trends keyed by `(day type, window label)`, one per year in year order.
type TrendSet = BTreeMap<(DayType, String), Vec<MonthlyTrend>>;

fn trends(s: &mut Session, data: &[YearData]) -> Result<TrendSet, CliError> {
    let cfg = s.cfg;
    let mut set = TrendSet::new();
    for dt in day_types(cfg) {
        for (wl, w) in trend_windows(cfg) {
            let suffix = format!("{}_{wl}", dt.code());
            let mut per_year = BTreeMap::new();
            for d in data {
                let t = monthly_totals(&d.series, dt, w, cfg.policy).with_label(d.year.to_string());
                let pct = percent_of_year(&t);
                s.out.with(format!("trend_{}_{suffix}.csv", d.year), |b| t.write_csv(b))?;
                s.out.with(format!("trend_pct_{}_{suffix}.csv", d.year), |b| pct.write_csv(b))?;
                per_year.insert(d.year, t);
            }
            if let Some((a, b)) = cfg.compare {
                if let (Some(ta), Some(tb)) = (per_year.get(&a), per_year.get(&b)) {
                    let delta = yoy_change(ta, tb).map_err(|e| CliError::Usage(e.to_string()))?;
                    s.out.with(format!("trend_change_{a}_{b}_{suffix}.csv"), |buf| delta.write_csv(buf))?;
                }
            }
            set.insert((dt, wl), per_year.into_values().collect());
        }
    }
    Ok(set)
}

fn hotspot(s: &mut Session, data: &[YearData]) -> Result<BTreeMap<i32, Vec<StationSummary>>, CliError> {
    let cfg = s.cfg;
    let scope = SummaryScope {
        period: cfg.month.map_or(Period::Year, Period::Month),
        day_type: cfg.day_type.unwrap_or(DayType::Weekday),
        windows: rush_windows(cfg),
    };
    let mut all = BTreeMap::new();
    for d in data {
        let sums = station_summaries(&d.series, &s.stations, scope);
        for w in &sums.warnings {
            log::warn!("{}: {w:?}", d.year);
        }
        s.out.with(format!("hotspot_{}.csv", d.year), |b| write_summaries_csv(&sums.summaries, b))?;
        s.out.json(format!("hotspot_{}.geojson", d.year), &to_geojson(&sums.summaries))?;
        all.insert(d.year, sums.summaries);
    }
    if let Some((a, b)) = cfg.compare {
        let ranking = rank_changes(&all[&a], &all[&b], cfg.top);
        if !ranking.zero_baseline.is_empty() {
            log::warn!("{} stations with zero {a} volume left out of the ranking", ranking.zero_baseline.len());
        }
        s.out.with(format!("hotspot_rank_{a}_{b}.csv"), |buf| write_ranking_csv(&ranking.changes, buf))?;
    }
    Ok(all)
}

/// Stations to analyse for direction flows: `--station`, else those with a
/// declared outbound direction, else every border-tagged station.
fn border_stations(s: &Session, required: bool) -> Result<Vec<StationId>, CliError> {
    let cfg = s.cfg;
    let ids: Vec<StationId> = if let Some(st) = &cfg.station {
        vec![st.clone()]
    } else if !cfg.outbound.is_empty() {
        cfg.outbound.keys().cloned().collect()
    } else {
        s.stations
            .iter()
            .filter(|m| m.border_country.is_some())
            .map(|m| m.station_id.clone())
            .collect()
    };
    if ids.is_empty() && required {
        return Err(CliError::Usage(
            "no border stations: pass --station, declare outbound directions, or tag stations with a border country"
                .into(),
        ));
    }
    Ok(ids)
}

struct BorderResult {
    matrices: Vec<(String, HourlyMatrix)>,
    balances: Vec<(StationId, i32, i32, Vec<DirectionBalance>)>,
}

fn crossborder(s: &mut Session, data: &[YearData], stations: &[StationId]) -> Result<BorderResult, CliError> {
    let cfg = s.cfg;
    let mut res = BorderResult {
        matrices: Vec::new(),
        balances: Vec::new(),
    };
    for st in stations {
        let mut flows = BTreeMap::new();
        for d in data {
            let pair = match directional_series(&d.raw, st, cfg.class, &d.selection) {
                Ok(p) => p,
                Err(e) => {
                    let report = format!("ingest_report_{}.json", d.year);
                    return Err(s.data_error(&report, format!("{}: {e}", d.year)));
                }
            };
            let mut peaks = String::from("month,day,hour,value\n");
            for m in 1..=12 {
                let Some(start) = d.selection.chosen(m) else {
                    continue;
                };
                let matrix = hourly_matrix(&d.combined, st, cfg.class, Direction::Both, m, MatrixBasis::Week(start));
                let name = format!("matrix_{st}_{}_m{m:02}", d.year);
                s.out.with(format!("{name}.csv"), |b| matrix.write_csv(b))?;
                if let Ok(p) = peak_cell(&matrix) {
                    let _ = writeln!(peaks, "{m},{},{},{:.6}", p.day, p.hour, p.value);
                }
                res.matrices.push((name, matrix));
            }
            s.out.add(format!("peaks_{st}_{}.csv", d.year), peaks.into_bytes());
            if let Some(outbound) = cfg.outbound.get(st) {
                let yf = YearFlows::from_directional(d.year, (&pair.0, &pair.1), *outbound, rush_windows(cfg))
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                flows.insert(d.year, yf);
            }
        }
        match (cfg.compare, cfg.outbound.contains_key(st)) {
            (Some((a, b)), true) => {
                let rows = direction_balance_change(st, &flows[&a], &flows[&b]);
                s.out.with(format!("balance_{st}_{a}_{b}.csv"), |buf| write_balance_csv(&rows, buf))?;
                res.balances.push((st.clone(), a, b, rows));
            }
            (Some(_), false) => {
                log::warn!("no outbound direction declared for {st}; direction balance skipped")
            }
            (None, _) => log::info!("direction balance needs --compare; skipped for {st}"),
        }
    }
    Ok(res)
}

fn report(s: &mut Session) -> Result<(), CliError> {
    let data = s.prepare_all()?;
    quality(s, &data)?;
    for d in &data {
        s.out.add(format!("calendar_{}.svg", d.year), svg::calendar_heatmap(&d.calendar, &d.selection));
    }
    harmonize(s, &data)?;
    let trend_set = trends(s, &data)?;
    for ((dt, wl), ts) in &trend_set {
        let title = format!("{} {} rush, {} days", s.cfg.class, wl, dt.code());
        s.out.add(format!("trend_{}_{wl}.svg", dt.code()), svg::trend_lines(&title, "vehicles", ts));
    }
    for (year, sums) in hotspot(s, &data)? {
        let title = format!("Rush-hour volume by station, {year}");
        s.out.add(format!("hotspot_{year}.svg"), svg::bubble_map(&title, &sums));
    }
    let stations = border_stations(s, false)?;
    if stations.is_empty() {
        log::info!("no border stations configured; cross-border charts skipped");
        return Ok(());
    }
    let border = crossborder(s, &data, &stations)?;
    for (name, m) in &border.matrices {
        s.out.add(format!("{name}.svg"), svg::matrix_heatmap(name, m));
    }
    for (st, a, b, rows) in &border.balances {
        for w in [RushWindow::Morning, RushWindow::Evening] {
            let title = format!("{st}: change in direction balance {a} to {b}, {} rush", w.code());
            s.out.add(format!("balance_{st}_{a}_{b}_{}.svg", w.code()), svg::balance_bars(&title, rows, w));
        }
    }
    Ok(())
}

fn synth(args: &SynthArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let years = match (cfg.compare, cfg.year) {
        (Some((a, b)), _) => vec![a, b],
        (None, Some(y)) => vec![y],
        (None, None) => vec![SynthConfig::default().year],
    };
    let later = years.iter().copied().max();
    let mut out = Outputs::new(&cfg.out_dir);
    let mut ini = String::from("# synthetic dataset\nstations = stations.csv\n\n[counts]\n");
    let mut registry = None;
    for &year in &years {
        let mut sc = SynthConfig {
            seed: args.seed,
            n_stations: args.n_stations,
            year,
            dropout_rate: args.dropout,
            border_stations: args.border,
            truck_factor: args.trucks,
            ..SynthConfig::default()
        };
        if years.len() > 1 && Some(year) == later {
            sc.monthly_factor[2..5].fill(args.spring_factor);
        }
        let (ds, reg) = generate(&sc).map_err(|e| CliError::Usage(e.to_string()))?;
        out.with(format!("counts_{year}.csv"), |b| write_counts(&ds, b))?;
        let _ = writeln!(ini, "{year} = counts_{year}.csv");
        registry.get_or_insert(reg);
    }
    let registry = registry.expect("at least one year");
    out.with("stations.csv", |b| write_stations(&registry, b))?;
    let border: Vec<&StationId> = registry
        .iter()
        .filter(|m| m.border_country.is_some())
        .map(|m| &m.station_id)
        .collect();
    if !border.is_empty() {
        ini.push_str("\n[outbound]\n");
        for id in border {
            let _ = writeln!(ini, "{id} = 1");
        }
    }
    out.add("trafficscope.ini", ini.into_bytes());
    out.commit()
}
