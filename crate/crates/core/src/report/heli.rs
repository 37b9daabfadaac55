//! Drone versus helicopter response times for recorded missions.

use std::io::{Read, Write};

use serde::Deserialize;

use super::mmss::{format_mmss, parse_mmss};
use super::ReportError;
use crate::geo::GeoPoint;
use crate::instance::Instance;
use crate::terrain::largest_obstacle;
use crate::travel::travel_time_with_margin;

#[derive(Debug, Clone, PartialEq)]
pub struct HeliRecord {
    /// Altitude is ignored; the terrain supplies it.
    pub location: GeoPoint,
    /// Seconds, positive.
    pub t_heli: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t_drone: f64,
    pub t_heli: f64,
    /// `100 * t_drone / t_heli`, rounded to two decimals.
    pub ratio: f64,
}

pub fn ratio_percent(t_drone: f64, t_heli: f64) -> f64 {
    (100.0 * t_drone / t_heli * 100.0).round() / 100.0
}

impl ComparisonRow {
    pub fn new(t_drone: f64, t_heli: f64) -> Self {
        ComparisonRow { t_drone, t_heli, ratio: ratio_percent(t_drone, t_heli) }
    }
}

/// For every record, the fastest flight from any of `stations` (original
/// station indices) to the record site.
pub fn heli_compare(
    instance: &Instance,
    stations: &[usize],
    records: &[HeliRecord],
) -> Result<Vec<ComparisonRow>, ReportError> {
    let model = &instance.terrain.model;
    let bases: Vec<_> = stations.iter().map(|&i| instance.project(&instance.stations[i].location)).collect();
    if bases.is_empty() {
        return Err(ReportError::NoStations);
    }
    records
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let mut p = instance.project(&rec.location);
            if !model.covers(p.x, p.y) {
                return Err(ReportError::OutOfCoverage { record: k });
            }
            p.z = model.elevation_at(p.x, p.y).map_err(|_| ReportError::OutOfCoverage { record: k })?;
            let mut best = f64::INFINITY;
            for b in &bases {
                let o = largest_obstacle(model, b, &p, instance.obstacle_step)
                    .map_err(|_| ReportError::OutOfCoverage { record: k })?;
                best = best.min(travel_time_with_margin(&instance.profile, b, &p, o.z_o, instance.safety_margin));
            }
            Ok(ComparisonRow::new(best, rec.t_heli))
        })
        .collect()
}

fn csv_error(e: csv::Error) -> ReportError {
    ReportError::Csv(e.to_string())
}

fn positive_mmss(text: &str, line: usize) -> Result<f64, ReportError> {
    let t = parse_mmss(text)?;
    if t == 0 {
        return Err(ReportError::Csv(format!("line {line}: time must be positive")));
    }
    Ok(t as f64)
}

#[derive(Deserialize)]
struct RecordLine {
    lat: f64,
    lon: f64,
    t_heli_mmss: String,
}

/// Reads `lat,lon,t_heli_mmss` rows.
pub fn read_records(input: impl Read) -> Result<Vec<HeliRecord>, ReportError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (n, row) in rd.deserialize::<RecordLine>().enumerate() {
        let row = row.map_err(csv_error)?;
        let location = GeoPoint::new(row.lat, row.lon, 0.0)
            .map_err(|e| ReportError::Csv(format!("line {}: {e}", n + 2)))?;
        out.push(HeliRecord { location, t_heli: positive_mmss(&row.t_heli_mmss, n + 2)? });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct PairLine {
    t_drone_mmss: String,
    t_heli_mmss: String,
}

/// Reads `t_drone_mmss,t_heli_mmss` rows of already known drone times.
pub fn read_pairs(input: impl Read) -> Result<Vec<ComparisonRow>, ReportError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (n, row) in rd.deserialize::<PairLine>().enumerate() {
        let row = row.map_err(csv_error)?;
        let t_d = parse_mmss(&row.t_drone_mmss)? as f64;
        out.push(ComparisonRow::new(t_d, positive_mmss(&row.t_heli_mmss, n + 2)?));
    }
    Ok(out)
}

/// `t_drone,t_heli,ratio_percent` with times in mm:ss.
pub fn write_comparison(rows: &[ComparisonRow], out: impl Write) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_drone", "t_heli", "ratio_percent"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([format_mmss(r.t_drone), format_mmss(r.t_heli), format!("{:.2}", r.ratio)])
            .map_err(csv_error)?;
    }
    w.flush().map_err(|e| ReportError::Csv(e.to_string()))
}
