//! CSV and aligned text renderings of sweep and comparison rows.

use std::io::Write;

use super::backup::BackupRow;
use super::mmss::format_mmss;
use super::stats::Stats;
use super::sweep::StatsRow;
use super::ReportError;

const STAT_COLUMNS: [&str; 6] = ["min", "max", "mean", "median", "q95", "q99"];

fn stat_cells(s: Option<&Stats>) -> Vec<String> {
    match s {
        Some(s) => [s.min, s.max, s.mean, s.median, s.q95, s.q99].iter().map(|&t| format_mmss(t)).collect(),
        None => vec![String::new(); 6],
    }
}

fn header(with_drones: bool) -> Vec<&'static str> {
    let mut h = vec!["key"];
    if with_drones {
        h.push("s");
    }
    h.extend(STAT_COLUMNS);
    h.push("status");
    h
}

fn sweep_records(rows: &[StatsRow], with_drones: bool) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut rec = vec![r.key.to_string()];
            if with_drones {
                rec.push(r.drones.map(|d| d.to_string()).unwrap_or_default());
            }
            rec.extend(stat_cells(r.stats.as_ref()));
            rec.push(r.status.label().to_string());
            rec
        })
        .collect()
}

fn backup_records(rows: &[BackupRow]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for r in rows {
        let series: Vec<(&str, Option<&Stats>)> = if r.mode.coverage() == 1 {
            vec![("drone1", r.drone1.as_ref())]
        } else {
            vec![
                ("drone1", r.drone1.as_ref()),
                ("drone2", r.drone2.as_ref()),
                ("difference", r.difference.as_ref()),
            ]
        };
        for (name, s) in series {
            let mut rec = vec![format!("{}/{}", r.mode, name)];
            rec.extend(stat_cells(s));
            rec.push(r.status.label().to_string());
            out.push(rec);
        }
    }
    out
}

fn write_csv(head: &[&str], records: &[Vec<String>], out: impl Write) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| ReportError::Csv(e.to_string());
    w.write_record(head).map_err(err)?;
    for r in records {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| ReportError::Csv(e.to_string()))
}

fn text_table(head: &[&str], records: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for r in records {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, &w)| format!("{}{}", " ".repeat(w - c.chars().count()), c))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(head.to_vec());
    for r in records {
        s += &line(r.iter().map(String::as_str).collect());
    }
    s
}

/// `key,min,max,mean,median,q95,q99,status`; with `with_drones` an `s`
/// column follows the key.
pub fn write_sweep_csv(rows: &[StatsRow], with_drones: bool, out: impl Write) -> Result<(), ReportError> {
    write_csv(&header(with_drones), &sweep_records(rows, with_drones), out)
}

pub fn sweep_text(rows: &[StatsRow], with_drones: bool) -> String {
    text_table(&header(with_drones), &sweep_records(rows, with_drones))
}

/// One row per mode and series, keyed `B1/drone2` and so on.
pub fn write_backup_csv(rows: &[BackupRow], out: impl Write) -> Result<(), ReportError> {
    write_csv(&header(false), &backup_records(rows), out)
}

pub fn backup_text(rows: &[BackupRow]) -> String {
    text_table(&header(false), &backup_records(rows))
}

/// Statistics of named series, without a status column.
pub fn stats_text(series: &[(&str, &Stats)]) -> String {
    let head: Vec<&str> = std::iter::once("series").chain(STAT_COLUMNS).collect();
    let records: Vec<Vec<String>> = series
        .iter()
        .map(|(name, s)| std::iter::once(name.to_string()).chain(stat_cells(Some(s))).collect())
        .collect();
    text_table(&head, &records)
}
