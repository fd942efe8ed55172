//! Deterministic synthetic traffic years.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`, drawn in a
//! fixed order (station, date, direction, class, hour; count then dropout),
//! so a seed reproduces the same dataset byte for byte on any platform.
//! Hourly counts are Poisson draws around the configured profile: Knuth's
//! multiplication method below a rate of 30, a rounded normal
//! approximation above it.

use chrono::Datelike;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::SynthError;
use crate::model::{
    day_type, year_dates, BorderCountry, Dataset, DayType, Direction, HourlyCount, RouteId, StationId,
    StationMeta, StationRegistry, TrafficRecord, VehicleClass, HOURS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_stations: usize,
    pub year: i32,
    /// Mean two-way vehicles per hour on a weekday.
    pub base_profile: [f64; HOURS],
    /// Multiplier applied on Saturdays and Sundays.
    pub weekend_factor: f64,
    /// Probability that a cell is dropped to missing.
    pub dropout_rate: f64,
    /// Share of traffic travelling in `Dir1`.
    pub direction_split: f64,
    /// The first `border_stations` stations get a border-country tag.
    pub border_stations: usize,
    /// Per-month multiplier, January first.
    pub monthly_factor: [f64; 12],
    /// When set, truck records are emitted at this fraction of car volume.
    pub truck_factor: Option<f64>,
}

/// A commuter-shaped weekday profile with morning and evening peaks.
pub const COMMUTER_PROFILE: [f64; HOURS] = [
    20.0, 12.0, 8.0, 8.0, 15.0, 60.0, 250.0, 600.0, 750.0, 520.0, 380.0, 360.0, 380.0, 370.0, 380.0,
    450.0, 600.0, 700.0, 580.0, 380.0, 220.0, 140.0, 90.0, 45.0,
];

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_stations: 5,
            year: 2018,
            base_profile: COMMUTER_PROFILE,
            weekend_factor: 0.6,
            dropout_rate: 0.0,
            direction_split: 0.5,
            border_stations: 1,
            monthly_factor: [1.0; 12],
            truck_factor: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |field, reason: &str| {
            Err(SynthError::InvalidField {
                field,
                reason: reason.to_string(),
            })
        };
        if self.n_stations == 0 {
            return bad("n_stations", "must be at least 1");
        }
        if self.border_stations > self.n_stations {
            return bad("border_stations", "exceeds n_stations");
        }
        if self.base_profile.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("base_profile", "rates must be finite and >= 0");
        }
        if !(self.weekend_factor.is_finite() && self.weekend_factor > 0.0) {
            return bad("weekend_factor", "must be > 0");
        }
        if !(0.0..=1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate", "must lie in [0, 1]");
        }
        if !(self.direction_split > 0.0 && self.direction_split < 1.0) {
            return bad("direction_split", "must lie in (0, 1)");
        }
        if self.monthly_factor.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("monthly_factor", "factors must be finite and >= 0");
        }
        if self.truck_factor.is_some_and(|t| !t.is_finite() || t < 0.0) {
            return bad("truck_factor", "must be finite and >= 0");
        }
        if chrono::NaiveDate::from_ymd_opt(self.year, 1, 1).is_none() {
            return bad("year", "out of calendar range");
        }
        Ok(())
    }
}

struct Draws(ChaCha8Rng);

impl Draws {
    /// Uniform in `[0, 1)` with 53 bits of precision.
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn poisson(&mut self, rate: f64) -> u32 {
        if rate <= 0.0 {
            return 0;
        }
        if rate < 30.0 {
            let limit = (-rate).exp();
            let mut k = 0u32;
            let mut p = 1.0;
            loop {
                p *= self.uniform();
                if p <= limit {
                    return k;
                }
                k += 1;
            }
        }
        // Box-Muller, u1 kept away from zero.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        (rate + rate.sqrt() * z).round().clamp(0.0, u32::MAX as f64) as u32
    }
}

const BORDERS: [BorderCountry; 3] = [BorderCountry::DE, BorderCountry::FR, BorderCountry::BE];

/// Generates a dataset (with its registry attached) and the registry.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, StationRegistry), SynthError> {
    config.validate()?;
    let mut rng = Draws(ChaCha8Rng::seed_from_u64(config.seed));
    let width = config.n_stations.to_string().len().max(3);
    let n_routes = config.n_stations.div_ceil(2);

    let mut stations = Vec::with_capacity(config.n_stations);
    let mut scales = Vec::with_capacity(config.n_stations);
    for i in 0..config.n_stations {
        let lat = 49.45 + 0.7 * rng.uniform();
        let lon = 5.75 + 0.75 * rng.uniform();
        scales.push(0.5 + rng.uniform());
        stations.push(StationMeta {
            station_id: StationId::new(format!("S{:0width$}", i + 1)),
            name: format!("Station {}", i + 1),
            route_id: RouteId::new(format!("R{:02}", i % n_routes + 1)),
            location: Some(((lat * 1e4).round() / 1e4, (lon * 1e4).round() / 1e4)),
            border_country: (i < config.border_stations).then(|| BORDERS[i % BORDERS.len()]),
        });
    }

    let mut classes = vec![(VehicleClass::Car, 1.0)];
    if let Some(t) = config.truck_factor {
        classes.push((VehicleClass::Truck, t));
    }
    let directions = [
        (Direction::Dir1, config.direction_split),
        (Direction::Dir2, 1.0 - config.direction_split),
    ];

    let mut records = Vec::new();
    for (meta, scale) in stations.iter().zip(&scales) {
        for date in year_dates(config.year) {
            let day = match day_type(date) {
                DayType::Weekday => 1.0,
                _ => config.weekend_factor,
            };
            let month = config.monthly_factor[date.month0() as usize];
            for (direction, split) in directions {
                for &(class, class_factor) in &classes {
                    let mut counts = [HourlyCount::Missing; HOURS];
                    for (h, cell) in counts.iter_mut().enumerate() {
                        let rate = config.base_profile[h] * scale * day * month * split * class_factor;
                        let v = rng.poisson(rate);
                        if rng.uniform() >= config.dropout_rate {
                            *cell = HourlyCount::Count(v);
                        }
                    }
                    records.push(TrafficRecord {
                        station_id: meta.station_id.clone(),
                        route_id: meta.route_id.clone(),
                        direction,
                        vehicle_class: class,
                        date,
                        counts,
                    });
                }
            }
        }
    }

    let registry = StationRegistry::from_stations(stations).expect("generated ids are unique");
    let dataset = Dataset::from_trusted(config.year, records, registry.clone());
    Ok((dataset, registry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_counts;

    fn small(seed: u64, dropout: f64) -> SynthConfig {
        SynthConfig {
            seed,
            n_stations: 2,
            dropout_rate: dropout,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let bytes = |c: &SynthConfig| {
            let (ds, _) = generate(c).unwrap();
            let mut out = Vec::new();
            write_counts(&ds, &mut out).unwrap();
            out
        };
        assert_eq!(bytes(&small(42, 0.2)), bytes(&small(42, 0.2)));
        assert_ne!(bytes(&small(42, 0.2)), bytes(&small(43, 0.2)));
    }

    #[test]
    fn dropout_extremes() {
        let (ds, _) = generate(&small(1, 0.0)).unwrap();
        assert!(ds.records().iter().all(|r| r.counts.iter().all(|c| !c.is_missing())));
        let (ds, _) = generate(&small(1, 1.0)).unwrap();
        assert!(ds.records().iter().all(|r| r.counts.iter().all(|c| c.is_missing())));
    }

    #[test]
    fn shape_of_output() {
        let cfg = SynthConfig {
            n_stations: 4,
            border_stations: 3,
            truck_factor: Some(0.1),
            year: 2020,
            ..SynthConfig::default()
        };
        let (ds, reg) = generate(&cfg).unwrap();
        assert_eq!(ds.len(), 4 * 366 * 2 * 2);
        assert_eq!(reg.len(), 4);
        let borders: Vec<_> = reg.iter().filter_map(|s| s.border_country).collect();
        assert_eq!(borders, vec![BorderCountry::DE, BorderCountry::FR, BorderCountry::BE]);
    }

    #[test]
    fn invalid_fields_are_named() {
        let cases: [(SynthConfig, &str); 5] = [
            (SynthConfig { n_stations: 0, ..Default::default() }, "n_stations"),
            (SynthConfig { dropout_rate: 1.5, ..Default::default() }, "dropout_rate"),
            (SynthConfig { direction_split: 1.0, ..Default::default() }, "direction_split"),
            (SynthConfig { weekend_factor: 0.0, ..Default::default() }, "weekend_factor"),
            (SynthConfig { border_stations: 9, ..Default::default() }, "border_stations"),
        ];
        for (cfg, name) in cases {
            match generate(&cfg) {
                Err(SynthError::InvalidField { field, .. }) => assert_eq!(field, name),
                other => panic!("expected error for {name}, got {other:?}"),
            }
        }
    }

    #[test]
    fn poisson_mean_is_close() {
        let mut d = Draws(ChaCha8Rng::seed_from_u64(7));
        for rate in [3.0, 400.0] {
            let n = 20_000;
            let mean = (0..n).map(|_| d.poisson(rate) as f64).sum::<f64>() / n as f64;
            // 5 standard errors.
            assert!((mean - rate).abs() < 5.0 * (rate / n as f64).sqrt(), "rate {rate} mean {mean}");
        }
    }
}
