use std::io;
use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::model::{Direction, RecordKey, StationId};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hour window {start}-{end}: need start < end <= 24")]
    InvalidWindow { start: u8, end: u8 },
    #[error("cannot parse hour window '{0}', expected HH-HH")]
    WindowSyntax(String),
    #[error("no such direction '{0}'")]
    UnknownDirection(String),
    #[error("no such vehicle class '{0}'")]
    UnknownVehicleClass(String),
    #[error("no such border country '{0}'")]
    UnknownBorderCountry(String),
    #[error("no such day type '{0}'")]
    UnknownDayType(String),
    #[error("no such missing-value policy '{0}'")]
    UnknownPolicy(String),
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("duplicate station id '{0}'")]
    DuplicateStation(StationId),
    #[error("duplicate record {0:?}")]
    DuplicateRecord(Box<RecordKey>),
    #[error("record dated {date} outside dataset year {year}")]
    OutsideYear { date: NaiveDate, year: i32 },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unable to read '{path}': {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header, expected '{expected}' but found '{found}'")]
    BadHeader { expected: String, found: String },
    #[error("duplicate station id '{id}' on line {line}")]
    DuplicateStation { id: StationId, line: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("trends cover different day types or windows and cannot be compared")]
    Incompatible,
}

#[derive(Debug, Error, PartialEq)]
pub enum CrossborderError {
    #[error("station '{station}' has no records for direction {direction}")]
    MissingDirection { station: StationId, direction: Direction },
    #[error("matrix has no present cells")]
    EmptyMatrix,
    #[error("outbound direction must be Dir1 or Dir2, got {0}")]
    OutboundNotOneWay(Direction),
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config field '{field}': {reason}")]
    InvalidField { field: &'static str, reason: String },
}
