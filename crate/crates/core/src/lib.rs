//! Harmonization and spatio-temporal analytics for hourly road-traffic
//! counts.
//!
//! The crate follows the pipeline a traffic analyst runs on a year of
//! observatory exports:
//!
//! 1. [`ingest`] reads the interchange CSVs into a validated [`Dataset`].
//! 2. [`quality`] scores daily completeness and picks one representative
//!    week per month.
//! 3. [`harmonize`] filters a vehicle class, merges directions and averages
//!    the selected weeks into per-station monthly profiles.
//! 4. [`trends`] and [`hotspot`] summarize those profiles nationally and per
//!    station.
//! 5. [`crossborder`] looks at one-way flows at border stations.
//!
//! [`synth`] generates seeded synthetic years with the same shape as the
//! real exports.
//!
//! ```
//! use trafficscope::prelude::*;
//!
//! let (dataset, _stations) = synth::generate(&SynthConfig::default()).unwrap();
//! let cars = harmonize::filter_dataset(&dataset, VehicleClass::Car, None);
//! let two_way = harmonize::combine_directions(&cars).dataset;
//!
//! let calendar = quality::completeness_calendar(
//!     &two_way,
//!     VehicleClass::Car,
//!     HourWindow::MORNING_RUSH,
//!     &Scope::AllStations,
//! );
//! let weeks = quality::select_weeks(&calendar, dataset.year());
//! let series = harmonize::weekday_average(&two_way, &weeks);
//! let trend = trends::monthly_totals(
//!     &series,
//!     DayType::Weekday,
//!     HourWindow::MORNING_RUSH,
//!     MissingPolicy::Lenient,
//! );
//! assert!(trend.value(1).unwrap() > 0.0);
//! ```

pub mod crossborder;
pub mod error;
pub mod harmonize;
pub mod hotspot;
pub mod ingest;
pub mod model;
pub mod quality;
pub mod synth;
pub mod trends;

pub use error::{CrossborderError, IngestError, ModelError, SynthError, TrendError};
pub use model::{
    day_type, window_sum, Dataset, DayType, Direction, HourWindow, HourlyCount, MissingPolicy, StationId,
    StationMeta, StationRegistry, TrafficRecord, VehicleClass,
};

pub mod prelude {
    pub use crate::model::*;
    pub use crate::quality::Scope;
    pub use crate::synth::SynthConfig;
    pub use crate::{crossborder, harmonize, hotspot, ingest, quality, synth, trends};
}

/// Fixed six-decimal rendering used by every CSV export.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.6}")
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data-model.md")]
    mod data_model {}
    #[doc = include_str!("../../../book/src/interchange.md")]
    mod interchange {}
    #[doc = include_str!("../../../book/src/quality.md")]
    mod quality {}
    #[doc = include_str!("../../../book/src/harmonize.md")]
    mod harmonize {}
    #[doc = include_str!("../../../book/src/trends.md")]
    mod trends {}
    #[doc = include_str!("../../../book/src/hotspots.md")]
    mod hotspots {}
    #[doc = include_str!("../../../book/src/crossborder.md")]
    mod crossborder {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
