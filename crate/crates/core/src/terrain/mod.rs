//! Elevation models and obstacle extraction along straight flight segments.

pub mod esri;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{unproject, GeoPoint, LocalPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("point ({x:.1}, {y:.1}) is outside the elevation model coverage")]
    OutOfCoverage { x: f64, y: f64 },
    #[error("point ({x:.1}, {y:.1}) touches a NODATA raster cell")]
    NoDataCell { x: f64, y: f64 },
    #[error("obstacle sampling step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("raster: {0}")]
    InvalidRaster(String),
    #[error("raster parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read raster {path}: {message}")]
    Io { path: String, message: String },
}

/// How raster corner coordinates and cell size are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RasterFrame {
    /// Metres in the instance's local frame.
    #[default]
    Local,
    /// WGS84 degrees (longitude for x, latitude for y); local queries are
    /// unprojected through `origin` first.
    Geographic { origin: GeoPoint },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterHeader {
    pub ncols: usize,
    pub nrows: usize,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub cellsize: f64,
    pub nodata: Option<f64>,
}

/// A regular elevation grid, row-major with row 0 northernmost.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub header: RasterHeader,
    pub values: Vec<f64>,
    pub frame: RasterFrame,
}

impl Raster {
    pub fn new(header: RasterHeader, values: Vec<f64>, frame: RasterFrame) -> Result<Self, TerrainError> {
        if header.ncols == 0 || header.nrows == 0 {
            return Err(TerrainError::InvalidRaster("ncols and nrows must be at least 1".into()));
        }
        if !(header.cellsize > 0.0 && header.cellsize.is_finite()) {
            return Err(TerrainError::InvalidRaster("cellsize must be positive".into()));
        }
        if values.len() != header.ncols * header.nrows {
            return Err(TerrainError::InvalidRaster(format!(
                "{} values for a {}x{} grid",
                values.len(),
                header.nrows,
                header.ncols
            )));
        }
        Ok(Raster { header, values, frame })
    }

    fn is_nodata(&self, v: f64) -> bool {
        self.header.nodata == Some(v) || v.is_nan()
    }

    /// Bilinear interpolation between the four surrounding cell centres.
    /// Points between the outer cell centres and the grid edge are clamped
    /// onto the edge row/column.
    fn sample(&self, qx: f64, qy: f64, x: f64, y: f64) -> Result<f64, TerrainError> {
        let h = &self.header;
        let right = h.xllcorner + h.ncols as f64 * h.cellsize;
        let top = h.yllcorner + h.nrows as f64 * h.cellsize;
        if !(qx >= h.xllcorner && qx <= right && qy >= h.yllcorner && qy <= top) {
            return Err(TerrainError::OutOfCoverage { x, y });
        }
        let fc = ((qx - h.xllcorner) / h.cellsize - 0.5).clamp(0.0, (h.ncols - 1) as f64);
        let fr = ((top - qy) / h.cellsize - 0.5).clamp(0.0, (h.nrows - 1) as f64);
        let c0 = (fc.floor() as usize).min(h.ncols.saturating_sub(2));
        let r0 = (fr.floor() as usize).min(h.nrows.saturating_sub(2));
        let c1 = (c0 + 1).min(h.ncols - 1);
        let r1 = (r0 + 1).min(h.nrows - 1);
        let wc = fc - c0 as f64;
        let wr = fr - r0 as f64;

        // Cells with zero weight are never read, so a NODATA neighbour only
        // matters when it actually contributes.
        let lerp = |v0: f64, v1: f64, w: f64| -> Result<f64, TerrainError> {
            let check = |v: f64| {
                if self.is_nodata(v) {
                    Err(TerrainError::NoDataCell { x, y })
                } else {
                    Ok(v)
                }
            };
            if w == 0.0 {
                check(v0)
            } else if w == 1.0 {
                check(v1)
            } else {
                let (v0, v1) = (check(v0)?, check(v1)?);
                Ok(v0 + w * (v1 - v0))
            }
        };
        let at = |r: usize, c: usize| self.values[r * h.ncols + c];
        let row = |r: usize| lerp(at(r, c0), at(r, c1), wc);
        if wr == 0.0 {
            row(r0)
        } else if wr == 1.0 {
            row(r1)
        } else {
            lerp(row(r0)?, row(r1)?, wr)
        }
    }
}

/// A single Gaussian hill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub radius: f64,
}

/// Analytic terrain functions over the local frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "function", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticTerrain {
    /// `base + height * exp(-((x - center_x) / width)^2)`, constant in y.
    Ridge {
        base: f64,
        height: f64,
        center_x: f64,
        width: f64,
    },
    /// `base + sum(height * exp(-(d / radius)^2))` over all peaks.
    Peaks { base: f64, peaks: Vec<Peak> },
}

impl SyntheticTerrain {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            SyntheticTerrain::Ridge {
                base,
                height,
                center_x,
                width,
            } => {
                let u = (x - center_x) / width;
                base + height * (-u * u).exp()
            }
            SyntheticTerrain::Peaks { base, peaks } => {
                let mut z = *base;
                for p in peaks {
                    let d2 = ((x - p.x) * (x - p.x) + (y - p.y) * (y - p.y)) / (p.radius * p.radius);
                    z += p.height * (-d2).exp();
                }
                z
            }
        }
    }

    fn validate(&self) -> Result<(), TerrainError> {
        let ok = match self {
            SyntheticTerrain::Ridge { width, .. } => *width > 0.0,
            SyntheticTerrain::Peaks { peaks, .. } => peaks.iter().all(|p| p.radius > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(TerrainError::InvalidRaster("synthetic terrain widths must be positive".into()))
        }
    }
}

/// Axis-aligned rectangle in the local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extent {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Extent {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// Terrain elevation source. Immutable once built; every query is pure.
#[derive(Debug, Clone, PartialEq)]
pub enum ElevationModel {
    Flat { z: f64 },
    Synthetic {
        terrain: SyntheticTerrain,
        extent: Option<Extent>,
    },
    Raster(Raster),
}

impl ElevationModel {
    pub fn synthetic(terrain: SyntheticTerrain, extent: Option<Extent>) -> Result<Self, TerrainError> {
        terrain.validate()?;
        Ok(ElevationModel::Synthetic { terrain, extent })
    }

    /// Terrain elevation in metres at local coordinates `(x, y)`.
    pub fn elevation_at(&self, x: f64, y: f64) -> Result<f64, TerrainError> {
        match self {
            ElevationModel::Flat { z } => Ok(*z),
            ElevationModel::Synthetic { terrain, extent } => match extent {
                Some(e) if !e.contains(x, y) => Err(TerrainError::OutOfCoverage { x, y }),
                _ => Ok(terrain.eval(x, y)),
            },
            ElevationModel::Raster(r) => match r.frame {
                RasterFrame::Local => r.sample(x, y, x, y),
                RasterFrame::Geographic { origin } => {
                    let g = unproject(&LocalPoint::new(x, y, 0.0), &origin);
                    r.sample(g.lon, g.lat, x, y)
                }
            },
        }
    }

    pub fn covers(&self, x: f64, y: f64) -> bool {
        !matches!(self.elevation_at(x, y), Err(TerrainError::OutOfCoverage { .. }))
    }
}

/// Highest terrain sample on the straight segment between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleResult {
    pub z_o: f64,
    /// Segment parameter of the maximising sample, measured from `a`.
    pub at_fraction: f64,
}

/// Scans the terrain profile between `a` and `b`.
///
/// Samples are placed every `step` metres measured from both endpoints, so
/// the sample set is the same whichever way round the segment is given and
/// halving `step` only ever adds samples. Both endpoints are included.
pub fn largest_obstacle(
    m: &ElevationModel,
    a: &LocalPoint,
    b: &LocalPoint,
    step: f64,
) -> Result<ObstacleResult, TerrainError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(TerrainError::InvalidStep(step));
    }
    let len = a.ground_distance(b);
    if len == 0.0 {
        return Ok(ObstacleResult {
            z_o: m.elevation_at(a.x, a.y)?,
            at_fraction: 0.0,
        });
    }

    // Walk in a canonical orientation so that (a, b) and (b, a) evaluate
    // bit-identical sample points.
    let swapped = (b.x, b.y) < (a.x, a.y);
    let (p, q) = if swapped { (b, a) } else { (a, b) };
    let (dx, dy) = (q.x - p.x, q.y - p.y);

    let mut best_z = f64::NEG_INFINITY;
    let mut best_t = 0.0;
    let mut visit = |t: f64, x: f64, y: f64| -> Result<(), TerrainError> {
        let z = m.elevation_at(x, y)?;
        let t_from_a = if swapped { 1.0 - t } else { t };
        if z > best_z || (z == best_z && t_from_a < best_t) {
            best_z = z;
            best_t = t_from_a;
        }
        Ok(())
    };

    let n = (len / step).floor() as usize;
    for k in 0..=n {
        let t = (k as f64 * step / len).min(1.0);
        visit(t, p.x + t * dx, p.y + t * dy)?;
        visit(1.0 - t, q.x - t * dx, q.y - t * dy)?;
    }
    visit(1.0, q.x, q.y)?;
    visit(0.0, p.x, p.y)?;

    Ok(ObstacleResult {
        z_o: best_z,
        at_fraction: best_t.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raster(ncols: usize, nrows: usize, values: Vec<f64>) -> ElevationModel {
        ElevationModel::Raster(
            Raster::new(
                RasterHeader {
                    ncols,
                    nrows,
                    xllcorner: 0.0,
                    yllcorner: 0.0,
                    cellsize: 1.0,
                    nodata: Some(-9999.0),
                },
                values,
                RasterFrame::Local,
            )
            .unwrap(),
        )
    }

    fn ridge() -> ElevationModel {
        ElevationModel::synthetic(
            SyntheticTerrain::Ridge {
                base: 0.0,
                height: 2000.0,
                center_x: 500.0,
                width: 100.0,
            },
            None,
        )
        .unwrap()
    }

    #[test]
    fn flat_is_constant() {
        let m = ElevationModel::Flat { z: 1000.0 };
        assert_eq!(m.elevation_at(-1e6, 3.0).unwrap(), 1000.0);
    }

    #[test]
    fn constant_raster() {
        let m = raster(3, 3, vec![500.0; 9]);
        for (x, y) in [(0.0, 0.0), (1.3, 2.9), (3.0, 3.0), (2.5, 0.1)] {
            assert_eq!(m.elevation_at(x, y).unwrap(), 500.0);
        }
    }

    #[test]
    fn bilinear_centre_of_four_cells() {
        let m = raster(2, 2, vec![0.0, 100.0, 100.0, 200.0]);
        assert_eq!(m.elevation_at(1.0, 1.0).unwrap(), 100.0);
        // exact cell centres reproduce the stored values
        assert_eq!(m.elevation_at(0.5, 1.5).unwrap(), 0.0);
        assert_eq!(m.elevation_at(1.5, 0.5).unwrap(), 200.0);
    }

    #[test]
    fn outside_raster_is_an_error() {
        let m = raster(2, 2, vec![0.0; 4]);
        assert!(matches!(m.elevation_at(2.01, 1.0), Err(TerrainError::OutOfCoverage { .. })));
        assert!(matches!(m.elevation_at(1.0, -0.5), Err(TerrainError::OutOfCoverage { .. })));
    }

    #[test]
    fn nodata_is_an_error() {
        let m = raster(2, 2, vec![0.0, -9999.0, 0.0, 0.0]);
        assert!(matches!(m.elevation_at(1.0, 1.0), Err(TerrainError::NoDataCell { .. })));
        // lower-left centre has zero weight on the nodata cell
        assert_eq!(m.elevation_at(0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn synthetic_extent_limits_coverage() {
        let m = ElevationModel::synthetic(
            SyntheticTerrain::Peaks { base: 10.0, peaks: vec![] },
            Some(Extent { min_x: 0.0, min_y: 0.0, max_x: 1.0, max_y: 1.0 }),
        )
        .unwrap();
        assert_eq!(m.elevation_at(0.5, 0.5).unwrap(), 10.0);
        assert!(!m.covers(1.5, 0.5));
    }

    #[test]
    fn geographic_raster_frame() {
        let origin = GeoPoint::new(46.0, 10.0, 0.0).unwrap();
        let m = ElevationModel::Raster(
            Raster::new(
                RasterHeader {
                    ncols: 2,
                    nrows: 2,
                    xllcorner: 9.9,
                    yllcorner: 45.9,
                    cellsize: 0.1,
                    nodata: None,
                },
                vec![0.0, 100.0, 100.0, 200.0],
                RasterFrame::Geographic { origin },
            )
            .unwrap(),
        );
        assert!((m.elevation_at(0.0, 0.0).unwrap() - 100.0).abs() < 1e-6);
    }

    #[test]
    fn flat_obstacle() {
        let m = ElevationModel::Flat { z: 1000.0 };
        let o = largest_obstacle(&m, &LocalPoint::new(0.0, 0.0, 0.0), &LocalPoint::new(345.0, -20.0, 0.0), 10.0)
            .unwrap();
        assert_eq!(o.z_o, 1000.0);
    }

    #[test]
    fn ridge_maximum_at_midpoint() {
        let o = largest_obstacle(&ridge(), &LocalPoint::new(0.0, 0.0, 0.0), &LocalPoint::new(1000.0, 0.0, 0.0), 10.0)
            .unwrap();
        assert_eq!(o.z_o, 2000.0);
        assert_eq!(o.at_fraction, 0.5);
    }

    #[test]
    fn degenerate_segment() {
        let m = ElevationModel::Flat { z: 1234.0 };
        let p = LocalPoint::new(5.0, 5.0, 0.0);
        assert_eq!(largest_obstacle(&m, &p, &p, 10.0).unwrap().z_o, 1234.0);
    }

    #[test]
    fn rejects_non_positive_step() {
        let m = ElevationModel::Flat { z: 0.0 };
        let p = LocalPoint::default();
        assert_eq!(largest_obstacle(&m, &p, &p, 0.0), Err(TerrainError::InvalidStep(0.0)));
    }

    #[test]
    fn propagates_coverage_errors() {
        let m = raster(2, 2, vec![0.0; 4]);
        let r = largest_obstacle(&m, &LocalPoint::new(0.5, 0.5, 0.0), &LocalPoint::new(5.0, 0.5, 0.0), 0.5);
        assert!(matches!(r, Err(TerrainError::OutOfCoverage { .. })));
    }

    fn peaks() -> ElevationModel {
        ElevationModel::synthetic(
            SyntheticTerrain::Peaks {
                base: 800.0,
                peaks: vec![
                    Peak { x: 300.0, y: 200.0, height: 900.0, radius: 150.0 },
                    Peak { x: -400.0, y: 50.0, height: 1400.0, radius: 90.0 },
                    Peak { x: 100.0, y: -500.0, height: 600.0, radius: 300.0 },
                ],
            },
            None,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn halving_step_never_lowers_obstacle(
            ax in -1000.0f64..1000.0, ay in -1000.0f64..1000.0,
            bx in -1000.0f64..1000.0, by in -1000.0f64..1000.0,
            step in 1.0f64..200.0,
        ) {
            let m = peaks();
            let a = LocalPoint::new(ax, ay, 0.0);
            let b = LocalPoint::new(bx, by, 0.0);
            let coarse = largest_obstacle(&m, &a, &b, step).unwrap();
            let fine = largest_obstacle(&m, &a, &b, step / 2.0).unwrap();
            prop_assert!(fine.z_o >= coarse.z_o);
        }

        #[test]
        fn obstacle_is_symmetric(
            ax in -1000.0f64..1000.0, ay in -1000.0f64..1000.0,
            bx in -1000.0f64..1000.0, by in -1000.0f64..1000.0,
            step in 1.0f64..200.0,
        ) {
            let m = peaks();
            let a = LocalPoint::new(ax, ay, 0.0);
            let b = LocalPoint::new(bx, by, 0.0);
            let ab = largest_obstacle(&m, &a, &b, step).unwrap();
            let ba = largest_obstacle(&m, &b, &a, step).unwrap();
            prop_assert_eq!(ab.z_o, ba.z_o);
        }

        #[test]
        fn uniform_raster_is_constant(v in -500.0f64..5000.0, x in 0.0f64..4.0, y in 0.0f64..3.0) {
            let m = raster(4, 3, vec![v; 12]);
            prop_assert_eq!(m.elevation_at(x, y).unwrap(), v);
        }
    }
}
