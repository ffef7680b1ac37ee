//! CSV mission log: one row per sample with the paired sonar outcome.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DetectionEvent, EnvSample, WaterReading};
use crate::error::{Error, Result};
use crate::geo::{to_geo, to_local, GeoPoint};

pub const LOG_HEADER: &str = "t_s,lat,lon,ph,temp_c,tds_ppm,do_mgL,fish_detected";

/// A sample together with the detection drawn at the same instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub sample: EnvSample,
    pub detected: bool,
}

impl LogRecord {
    pub fn event(&self) -> DetectionEvent {
        DetectionEvent { t: self.sample.t, pos: self.sample.pos, detected: self.detected }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestedLog {
    pub samples: Vec<EnvSample>,
    pub events: Vec<DetectionEvent>,
    /// True when rows arrived out of time order and were stable-sorted.
    pub reordered: bool,
}

#[derive(Serialize, Deserialize)]
struct Row {
    t_s: f64,
    lat: f64,
    lon: f64,
    ph: f64,
    temp_c: f64,
    tds_ppm: f64,
    #[serde(rename = "do_mgL")]
    do_mgl: f64,
    fish_detected: u8,
}

pub fn write_log<W: Write>(records: &[LogRecord], origin: GeoPoint, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(LOG_HEADER.split(','))?;
    }
    for r in records {
        let g = to_geo(r.sample.pos, origin)?;
        let reading = r.sample.reading;
        w.serialize(Row {
            t_s: r.sample.t,
            lat: g.lat,
            lon: g.lon,
            ph: reading.ph,
            temp_c: reading.temp_c,
            tds_ppm: reading.tds_ppm,
            do_mgl: reading.do_mgl,
            fish_detected: u8::from(r.detected),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_log(records: &[LogRecord], origin: GeoPoint, path: &Path) -> Result<()> {
    write_log(records, origin, File::create(path)?)
}

fn field_error(line: u64, field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse { line, message: format!("field {field}: {msg}") }
}

pub fn read_log<R: Read>(input: R, origin: GeoPoint) -> Result<IngestedLog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let expected: Vec<&str> = LOG_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse { line: 1, message: format!("expected header `{LOG_HEADER}`") });
    }

    let mut records = Vec::new();
    for result in rdr.deserialize::<Row>() {
        let row = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { line, message: e.to_string() }
        })?;
        // Header is line 1; data rows follow.
        let line = records.len() as u64 + 2;
        if !(row.t_s.is_finite() && row.t_s >= 0.0) {
            return Err(field_error(line, "t_s", "must be a finite time >= 0"));
        }
        let reading = WaterReading { ph: row.ph, temp_c: row.temp_c, tds_ppm: row.tds_ppm, do_mgl: row.do_mgl };
        if !(0.0..=14.0).contains(&row.ph) {
            return Err(field_error(line, "ph", format!("{} outside [0, 14]", row.ph)));
        }
        for (name, v) in [("temp_c", row.temp_c), ("tds_ppm", row.tds_ppm), ("do_mgL", row.do_mgl)] {
            if !v.is_finite() {
                return Err(field_error(line, name, "not finite"));
            }
        }
        let detected = match row.fish_detected {
            0 => false,
            1 => true,
            other => return Err(field_error(line, "fish_detected", format!("{other} is not 0 or 1"))),
        };
        let geo = GeoPoint::new(row.lat, row.lon).map_err(|e| field_error(line, "lat/lon", e))?;
        let pos = to_local(geo, origin).map_err(|e| field_error(line, "lat/lon", e))?;
        records.push(LogRecord { sample: EnvSample { t: row.t_s, pos, reading }, detected });
    }

    let reordered = records.windows(2).any(|w| w[1].sample.t < w[0].sample.t);
    if reordered {
        log::warn!("log timestamps are not monotone; applying a stable sort");
        records.sort_by(|a, b| a.sample.t.total_cmp(&b.sample.t));
    }
    Ok(IngestedLog {
        samples: records.iter().map(|r| r.sample).collect(),
        events: records.iter().map(LogRecord::event).collect(),
        reordered,
    })
}

pub fn ingest_log(path: &Path, origin: GeoPoint) -> Result<IngestedLog> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_log(file, origin)
}
