//! Problem instances: candidate stations, patient sites, terrain and drone.

mod file;
pub mod generate;
pub mod sampling;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use file::{load_instance, parse_instance, save_instance, to_toml_string};
pub use sampling::sample_patients;

use crate::geo::{project, GeoError, GeoPoint, LocalPoint};
use crate::terrain::{ElevationModel, Extent, RasterFrame, SyntheticTerrain, TerrainError};
use crate::travel::{
    build_matrix_with_margin, DroneProfile, TravelError, TravelTimeMatrix, SAFETY_MARGIN_M,
};

/// Default spacing of terrain samples along a flight segment, metres.
pub const DEFAULT_OBSTACLE_STEP_M: f64 = 10.0;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("instance parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{kind} `{id}` has invalid coordinates: {source}")]
    Coordinates {
        kind: &'static str,
        id: String,
        #[source]
        source: GeoError,
    },
    #[error("{kind} `{id}` lies outside the terrain coverage")]
    OutOfCoverage { kind: &'static str, id: String },
    #[error("trail network is empty")]
    EmptyNetwork,
    #[error("trail network has zero total length")]
    DegenerateNetwork,
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Travel(#[from] TravelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationKind {
    ShelterHut,
    FireStation,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: String,
    pub kind: StationKind,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatientSource {
    Sampled,
    #[default]
    Fixture,
    HelicopterRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub id: String,
    pub location: GeoPoint,
    pub source: PatientSource,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrailNetwork {
    pub polylines: Vec<Vec<GeoPoint>>,
}

/// Where the elevation model comes from, as written in the instance file.
#[derive(Debug, Clone, PartialEq)]
pub enum TerrainSource {
    Flat { z: f64 },
    Synthetic {
        terrain: SyntheticTerrain,
        extent: Option<Extent>,
    },
    /// Path as written in the file; relative paths resolve against the
    /// instance file's directory.
    Raster { path: PathBuf, geographic: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub source: TerrainSource,
    pub model: ElevationModel,
}

impl Terrain {
    pub fn flat(z: f64) -> Self {
        Terrain {
            source: TerrainSource::Flat { z },
            model: ElevationModel::Flat { z },
        }
    }

    pub fn synthetic(terrain: SyntheticTerrain, extent: Option<Extent>) -> Result<Self, TerrainError> {
        let model = ElevationModel::synthetic(terrain.clone(), extent)?;
        Ok(Terrain {
            source: TerrainSource::Synthetic { terrain, extent },
            model,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub origin: GeoPoint,
    pub terrain: Terrain,
    pub profile: DroneProfile,
    pub stations: Vec<Station>,
    pub patients: Vec<Patient>,
    pub trails: TrailNetwork,
    pub obstacle_step: f64,
    pub safety_margin: f64,
    /// Precomputed station-by-patient times that replace the terrain model.
    pub travel_times: Option<TravelTimeMatrix>,
}

impl Instance {
    pub fn new(origin: GeoPoint, terrain: Terrain, profile: DroneProfile) -> Self {
        Instance {
            origin,
            terrain,
            profile,
            stations: Vec::new(),
            patients: Vec::new(),
            trails: TrailNetwork::default(),
            obstacle_step: DEFAULT_OBSTACLE_STEP_M,
            safety_margin: SAFETY_MARGIN_M,
            travel_times: None,
        }
    }

    pub fn project(&self, p: &GeoPoint) -> LocalPoint {
        project(p, &self.origin)
    }

    pub fn station_points(&self) -> Vec<LocalPoint> {
        self.stations.iter().map(|s| self.project(&s.location)).collect()
    }

    pub fn patient_points(&self) -> Vec<LocalPoint> {
        self.patients.iter().map(|p| self.project(&p.location)).collect()
    }

    /// Checks every structural invariant. Instances without patients are
    /// accepted when a trail network is present to sample from.
    pub fn validate(&self) -> Result<(), InstanceError> {
        self.origin.validate().map_err(|source| InstanceError::Coordinates {
            kind: "origin",
            id: "origin".into(),
            source,
        })?;
        self.profile.validate()?;
        if !(self.obstacle_step > 0.0 && self.obstacle_step.is_finite()) {
            return Err(InstanceError::Invalid(format!(
                "obstacle_step must be positive, got {}",
                self.obstacle_step
            )));
        }
        if !(self.safety_margin >= 0.0 && self.safety_margin.is_finite()) {
            return Err(InstanceError::Invalid("safety_margin must be non-negative".into()));
        }
        if self.stations.is_empty() {
            return Err(InstanceError::Invalid("at least one station is required".into()));
        }
        if self.patients.is_empty() && self.trails.polylines.is_empty() {
            return Err(InstanceError::Invalid(
                "instance needs patients or a trail network to sample them from".into(),
            ));
        }

        let mut seen = HashSet::new();
        for s in &self.stations {
            if !seen.insert(s.id.as_str()) {
                return Err(InstanceError::DuplicateId { kind: "station", id: s.id.clone() });
            }
            self.check_point("station", &s.id, &s.location)?;
        }
        let mut seen = HashSet::new();
        for p in &self.patients {
            if !seen.insert(p.id.as_str()) {
                return Err(InstanceError::DuplicateId { kind: "patient", id: p.id.clone() });
            }
            self.check_point("patient", &p.id, &p.location)?;
        }
        for (n, line) in self.trails.polylines.iter().enumerate() {
            let id = format!("#{}", n + 1);
            if line.len() < 2 {
                return Err(InstanceError::Invalid(format!("trail {id} has fewer than two vertices")));
            }
            let mut length = 0.0;
            for w in line.windows(2) {
                length += self.project(&w[0]).ground_distance(&self.project(&w[1]));
            }
            if !(length > 0.0) {
                return Err(InstanceError::Invalid(format!("trail {id} has zero length")));
            }
            for v in line {
                self.check_point("trail", &id, v)?;
            }
        }
        if let Some(m) = &self.travel_times {
            if m.stations() != self.stations.len() || m.patients() != self.patients.len() {
                return Err(InstanceError::Invalid(format!(
                    "travel_times is {}x{} but the instance has {} stations and {} patients",
                    m.stations(),
                    m.patients(),
                    self.stations.len(),
                    self.patients.len()
                )));
            }
        }
        Ok(())
    }

    fn check_point(&self, kind: &'static str, id: &str, p: &GeoPoint) -> Result<(), InstanceError> {
        p.validate().map_err(|source| InstanceError::Coordinates {
            kind,
            id: id.to_string(),
            source,
        })?;
        let l = self.project(p);
        if !self.terrain.model.covers(l.x, l.y) {
            return Err(InstanceError::OutOfCoverage { kind, id: id.to_string() });
        }
        Ok(())
    }

    /// Replaces the patient list with `count` trail samples.
    pub fn resample_patients(&mut self, count: usize, seed: u64) -> Result<(), InstanceError> {
        self.patients = sample_patients(&self.trails, &self.origin, count, seed, &self.terrain.model)?;
        self.travel_times = None;
        Ok(())
    }

    /// The precomputed matrix when present, otherwise a terrain scan of all
    /// station/patient pairs.
    pub fn travel_matrix(&self) -> Result<TravelTimeMatrix, InstanceError> {
        if let Some(m) = &self.travel_times {
            return Ok(m.clone());
        }
        Ok(build_matrix_with_margin(
            &self.profile,
            &self.station_points(),
            &self.patient_points(),
            &self.terrain.model,
            self.obstacle_step,
            self.safety_margin,
        )?)
    }

    pub fn raster_frame(&self, geographic: bool) -> RasterFrame {
        if geographic {
            RasterFrame::Geographic { origin: self.origin }
        } else {
            RasterFrame::Local
        }
    }
}
