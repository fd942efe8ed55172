//! Run configuration: a flat `key = value` file overlaid by command-line
//! flags.
//!
//! ```text
//! # trafficscope.ini
//! stations = stations.csv
//! class = car
//! policy = lenient
//!
//! [counts]
//! 2018 = counts_2018.csv
//! 2020 = counts_2020.csv
//!
//! [outbound]
//! S001 = 1
//! ```
//!
//! A `[section]` header prefixes the keys below it, so `[counts]` then
//! `2018 = ...` is the same as `counts.2018 = ...`. Relative paths are
//! resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use trafficscope::model::{DayType, Direction, HourWindow, MissingPolicy, StationId, VehicleClass};

use crate::CliError;

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Configuration file (flags override its values)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Counts file for a year, as YEAR=PATH (repeatable)
    #[arg(long, global = true, value_name = "YEAR=PATH")]
    pub counts: Vec<String>,
    /// Stations file
    #[arg(long, global = true, value_name = "PATH")]
    pub stations: Option<PathBuf>,
    /// Analyse a single year
    #[arg(long, global = true)]
    pub year: Option<i32>,
    /// Compare two years (base first)
    #[arg(long, global = true, num_args = 2, value_names = ["BASE", "OTHER"])]
    pub compare: Option<Vec<i32>>,
    /// Vehicle class: car, truck or all
    #[arg(long, global = true)]
    pub class: Option<String>,
    /// Hour window HH-HH overriding the analysis window
    #[arg(long, global = true, value_name = "HH-HH")]
    pub window: Option<String>,
    /// Missing-value policy when pooling stations: strict or lenient
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// Restrict to one station
    #[arg(long, global = true, value_name = "ID")]
    pub station: Option<String>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Single month (1-12) for hotspot summaries
    #[arg(long, global = true)]
    pub month: Option<u32>,
    /// Day type for hotspot summaries: weekday, saturday or sunday
    #[arg(long = "day-type", global = true)]
    pub day_type: Option<String>,
    /// Number of stations in change rankings
    #[arg(long, global = true)]
    pub top: Option<usize>,
    /// Outbound direction of a border station, as ID=1|2 (repeatable)
    #[arg(long, global = true, value_name = "ID=DIR")]
    pub outbound: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub counts: BTreeMap<i32, PathBuf>,
    pub stations: Option<PathBuf>,
    pub year: Option<i32>,
    pub compare: Option<(i32, i32)>,
    pub class: VehicleClass,
    pub morning: HourWindow,
    pub evening: HourWindow,
    pub window: Option<HourWindow>,
    pub policy: MissingPolicy,
    pub station: Option<StationId>,
    pub outbound: BTreeMap<StationId, Direction>,
    pub out_dir: PathBuf,
    pub month: Option<u32>,
    pub day_type: Option<DayType>,
    pub top: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            counts: BTreeMap::new(),
            stations: None,
            year: None,
            compare: None,
            class: VehicleClass::Car,
            morning: HourWindow::MORNING_RUSH,
            evening: HourWindow::EVENING_RUSH,
            window: None,
            policy: MissingPolicy::Lenient,
            station: None,
            outbound: BTreeMap::new(),
            out_dir: PathBuf::from("out"),
            month: None,
            day_type: None,
            top: 10,
        }
    }
}

/// Parses flat `key = value` text into dotted keys.
pub fn parse_ini(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn parse<T: FromStr>(what: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| CliError::Usage(format!("invalid {what} '{raw}': {e}")))
}

fn parse_outbound(raw: &str) -> Result<Direction, CliError> {
    match parse::<Direction>("outbound direction", raw)? {
        Direction::Both => Err(CliError::Usage(format!(
            "outbound direction must be 1 or 2, got '{raw}'"
        ))),
        d => Ok(d),
    }
}

impl RunConfig {
    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config '{}': {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        };
        for (key, value) in parse_ini(&text)? {
            match key.as_str() {
                "stations" => self.stations = Some(resolve(&value)),
                "out" => self.out_dir = resolve(&value),
                "year" => self.year = Some(parse("year", &value)?),
                "compare" => {
                    let years: Vec<i32> = value
                        .split([',', ' '])
                        .filter(|s| !s.is_empty())
                        .map(|s| parse("compare year", s))
                        .collect::<Result<_, _>>()?;
                    match years[..] {
                        [a, b] => self.compare = Some((a, b)),
                        _ => return Err(CliError::Usage("compare needs exactly two years".into())),
                    }
                }
                "class" => self.class = parse("class", &value)?,
                "morning" => self.morning = parse("morning window", &value)?,
                "evening" => self.evening = parse("evening window", &value)?,
                "window" => self.window = Some(parse("window", &value)?),
                "policy" => self.policy = parse("policy", &value)?,
                "station" => self.station = Some(StationId::new(value)),
                "month" => self.month = Some(parse("month", &value)?),
                "day_type" => self.day_type = Some(parse("day type", &value)?),
                "top" => self.top = parse("top", &value)?,
                k => {
                    if let Some(year) = k.strip_prefix("counts.") {
                        self.counts.insert(parse("counts year", year)?, resolve(&value));
                    } else if let Some(id) = k.strip_prefix("outbound.") {
                        self.outbound.insert(StationId::new(id), parse_outbound(&value)?);
                    } else {
                        return Err(CliError::Usage(format!("unknown config key '{k}'")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_flags(flags: &Flags) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &flags.config {
            cfg.apply_file(path)?;
        }
        for spec in &flags.counts {
            let (year, path) = spec
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--counts expects YEAR=PATH, got '{spec}'")))?;
            cfg.counts.insert(parse("counts year", year)?, PathBuf::from(path));
        }
        for spec in &flags.outbound {
            let (id, dir) = spec
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--outbound expects ID=1|2, got '{spec}'")))?;
            cfg.outbound.insert(StationId::new(id), parse_outbound(dir)?);
        }
        if let Some(p) = &flags.stations {
            cfg.stations = Some(p.clone());
        }
        if let Some(y) = flags.year {
            cfg.year = Some(y);
        }
        if let Some(c) = &flags.compare {
            cfg.compare = Some((c[0], c[1]));
        }
        if let Some(c) = &flags.class {
            cfg.class = parse("class", c)?;
        }
        if let Some(w) = &flags.window {
            cfg.window = Some(parse("window", w)?);
        }
        if let Some(p) = &flags.policy {
            cfg.policy = parse("policy", p)?;
        }
        if let Some(s) = &flags.station {
            cfg.station = Some(StationId::new(s.clone()));
        }
        if let Some(o) = &flags.out {
            cfg.out_dir = o.clone();
        }
        if let Some(m) = flags.month {
            cfg.month = Some(m);
        }
        if let Some(d) = &flags.day_type {
            cfg.day_type = Some(parse("day type", d)?);
        }
        if let Some(t) = flags.top {
            cfg.top = t;
        }
        if cfg.month.is_some_and(|m| !(1..=12).contains(&m)) {
            return Err(CliError::Usage("--month must be within 1-12".into()));
        }
        if let Some((a, b)) = cfg.compare {
            if a == b {
                return Err(CliError::Usage("--compare needs two different years".into()));
            }
        }
        Ok(cfg)
    }

    /// Years the run covers: the comparison pair, the single year, or every
    /// configured counts file.
    pub fn years(&self) -> Vec<i32> {
        match (self.compare, self.year) {
            (Some((a, b)), _) => vec![a, b],
            (None, Some(y)) => vec![y],
            (None, None) => self.counts.keys().copied().collect(),
        }
    }

    /// Checks that every input the run needs is configured and exists.
    pub fn validate(&self, needs_stations: bool) -> Result<(), CliError> {
        let years = self.years();
        if years.is_empty() {
            return Err(CliError::Usage(
                "no input years: pass --counts YEAR=PATH or a config file".into(),
            ));
        }
        for y in &years {
            let path = self
                .counts
                .get(y)
                .ok_or_else(|| CliError::Usage(format!("no counts file configured for {y}")))?;
            if !path.is_file() {
                return Err(CliError::Usage(format!("counts file '{}' not found", path.display())));
            }
        }
        match &self.stations {
            Some(p) if !p.is_file() => {
                Err(CliError::Usage(format!("stations file '{}' not found", p.display())))
            }
            None if needs_stations => Err(CliError::Usage("a stations file is required (--stations)".into())),
            _ => Ok(()),
        }
    }
}
