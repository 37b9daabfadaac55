//! Geographic coordinates and the local tangent-plane frame used for all
//! distance computations.
//!
//! Travel times need metric distances, so every WGS84 point is projected
//! against a single instance origin with an equirectangular projection. The
//! projection is accurate to well under a percent over the tens of
//! kilometres a regional drone network spans.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} is outside [-180, 180]")]
    Longitude(f64),
    #[error("altitude {0} is not finite")]
    Altitude(f64),
}

/// A WGS84 position with altitude in metres above sea level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self, GeoError> {
        let p = GeoPoint { lat, lon, alt };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(GeoError::Latitude(self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(GeoError::Longitude(self.lon));
        }
        if !self.alt.is_finite() {
            return Err(GeoError::Altitude(self.alt));
        }
        Ok(())
    }
}

/// Metres east (`x`) and north (`y`) of an instance origin, plus altitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LocalPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        LocalPoint { x, y, z }
    }

    /// Horizontal distance, ignoring altitude.
    pub fn ground_distance(&self, other: &LocalPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

fn wrap_degrees(d: f64) -> f64 {
    let mut d = d % 360.0;
    if d > 180.0 {
        d -= 360.0;
    } else if d < -180.0 {
        d += 360.0;
    }
    d
}

/// Equirectangular projection of `p` around `origin`.
pub fn project(p: &GeoPoint, origin: &GeoPoint) -> LocalPoint {
    let dlon = wrap_degrees(p.lon - origin.lon).to_radians();
    let dlat = (p.lat - origin.lat).to_radians();
    LocalPoint {
        x: EARTH_RADIUS_M * dlon * origin.lat.to_radians().cos(),
        y: EARTH_RADIUS_M * dlat,
        z: p.alt,
    }
}

/// Inverse of [`project`]. The result is not range-checked.
pub fn unproject(p: &LocalPoint, origin: &GeoPoint) -> GeoPoint {
    let lat = origin.lat + (p.y / EARTH_RADIUS_M).to_degrees();
    let lon = origin.lon + (p.x / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    GeoPoint {
        lat,
        lon: wrap_degrees(lon),
        alt: p.z,
    }
}
