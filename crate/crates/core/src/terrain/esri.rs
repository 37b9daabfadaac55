//! ESRI ASCII grid reading and writing.
//!
//! ```text
//! ncols         4
//! nrows         2
//! xllcorner     0.0
//! yllcorner     0.0
//! cellsize      50.0
//! NODATA_value  -9999
//! 12 13 14 15
//! 10 11 12 13
//! ```
//!
//! Row 1 is the northernmost row. `xllcenter`/`yllcenter` are accepted and
//! converted to corner form.

use std::fmt::Write as _;
use std::path::Path;

use super::{Raster, RasterFrame, RasterHeader, TerrainError};

fn parse_err(line: usize, message: impl Into<String>) -> TerrainError {
    TerrainError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_path(path: &Path, frame: RasterFrame) -> Result<Raster, TerrainError> {
    let text = std::fs::read_to_string(path).map_err(|e| TerrainError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse(&text, frame)
}

pub fn parse(text: &str, frame: RasterFrame) -> Result<Raster, TerrainError> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut x_is_center = false;
    let mut y_is_center = false;
    let mut cellsize = None;
    let mut nodata = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some(&(idx, line)) = lines.peek() {
        let mut tokens = line.split_whitespace();
        let Some(key) = tokens.next() else {
            lines.next();
            continue;
        };
        if key.parse::<f64>().is_ok() {
            break;
        }
        let value = tokens
            .next()
            .ok_or_else(|| parse_err(idx + 1, format!("header key `{key}` has no value")))?;
        if tokens.next().is_some() {
            return Err(parse_err(idx + 1, "trailing tokens after header value"));
        }
        let num: f64 = value
            .parse()
            .map_err(|_| parse_err(idx + 1, format!("`{value}` is not a number")))?;
        let int = || -> Result<usize, TerrainError> {
            if num >= 1.0 && num.fract() == 0.0 {
                Ok(num as usize)
            } else {
                Err(parse_err(idx + 1, format!("`{key}` must be a positive integer")))
            }
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(int()?),
            "nrows" => nrows = Some(int()?),
            "xllcorner" => xll = Some(num),
            "yllcorner" => yll = Some(num),
            "xllcenter" => {
                xll = Some(num);
                x_is_center = true;
            }
            "yllcenter" => {
                yll = Some(num);
                y_is_center = true;
            }
            "cellsize" => cellsize = Some(num),
            "nodata_value" => nodata = Some(num),
            other => return Err(parse_err(idx + 1, format!("unknown header key `{other}`"))),
        }
        lines.next();
    }

    let missing = |k: &str| parse_err(0, format!("missing header key `{k}`"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;
    if !(cellsize > 0.0 && cellsize.is_finite()) {
        return Err(parse_err(0, "cellsize must be positive"));
    }
    let mut xll = xll.ok_or_else(|| missing("xllcorner"))?;
    let mut yll = yll.ok_or_else(|| missing("yllcorner"))?;
    if x_is_center {
        xll -= cellsize / 2.0;
    }
    if y_is_center {
        yll -= cellsize / 2.0;
    }

    let mut values = Vec::with_capacity(ncols * nrows);
    for (idx, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("`{tok}` is not a number")))?;
            values.push(v);
        }
    }
    if values.len() != ncols * nrows {
        return Err(parse_err(
            0,
            format!(
                "expected {} cell values ({nrows} rows x {ncols} cols), found {}",
                ncols * nrows,
                values.len()
            ),
        ));
    }

    Raster::new(
        RasterHeader {
            ncols,
            nrows,
            xllcorner: xll,
            yllcorner: yll,
            cellsize,
            nodata,
        },
        values,
        frame,
    )
}

pub fn to_string(raster: &Raster) -> String {
    let h = &raster.header;
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", h.ncols);
    let _ = writeln!(out, "nrows {}", h.nrows);
    let _ = writeln!(out, "xllcorner {}", h.xllcorner);
    let _ = writeln!(out, "yllcorner {}", h.yllcorner);
    let _ = writeln!(out, "cellsize {}", h.cellsize);
    if let Some(nd) = h.nodata {
        let _ = writeln!(out, "NODATA_value {nd}");
    }
    for row in raster.values.chunks(h.ncols) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}
