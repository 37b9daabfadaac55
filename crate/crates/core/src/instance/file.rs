//! TOML instance files. The layout is documented in the repository README.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    Instance, InstanceError, Patient, PatientSource, Station, StationKind, Terrain, TerrainSource,
    TrailNetwork, DEFAULT_OBSTACLE_STEP_M,
};
use crate::geo::GeoPoint;
use crate::terrain::{esri, ElevationModel, Extent, Peak, RasterFrame, SyntheticTerrain};
use crate::travel::{DroneProfile, TravelTimeMatrix, SAFETY_MARGIN_M};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obstacle_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    safety_margin: Option<f64>,
    profile: toml::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    travel_times: Option<Vec<Vec<f64>>>,
    origin: PointFile,
    terrain: TerrainFile,
    stations: Vec<StationFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    patients: Vec<PatientFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    trails: Vec<TrailFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    lat: f64,
    lon: f64,
    #[serde(default)]
    alt: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerrainFile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    peaks: Option<Vec<Peak>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extent: Option<Extent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationFile {
    id: String,
    kind: StationKind,
    lat: f64,
    lon: f64,
    alt: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatientFile {
    id: String,
    lat: f64,
    lon: f64,
    alt: f64,
    #[serde(default)]
    source: PatientSource,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrailFile {
    /// `[lat, lon]` or `[lat, lon, alt]` per vertex.
    points: Vec<Vec<f64>>,
}

fn invalid(msg: impl Into<String>) -> InstanceError {
    InstanceError::Invalid(msg.into())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_instance(&text, base)
}

/// Parses instance text; raster paths resolve against `base_dir`.
pub fn parse_instance(text: &str, base_dir: &Path) -> Result<Instance, InstanceError> {
    let file: InstanceFile = toml::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;

    let origin = GeoPoint {
        lat: file.origin.lat,
        lon: file.origin.lon,
        alt: file.origin.alt,
    };
    let profile = match &file.profile {
        toml::Value::String(name) => DroneProfile::builtin(name)?,
        toml::Value::Table(_) => DroneProfile::deserialize(file.profile.clone())
            .map_err(|e| InstanceError::Parse(format!("profile: {e}")))?,
        _ => return Err(invalid("`profile` must be a profile name or an inline table")),
    };
    let terrain = terrain_from_file(file.terrain, &origin, base_dir)?;

    let stations = file
        .stations
        .into_iter()
        .map(|s| Station {
            id: s.id,
            kind: s.kind,
            location: GeoPoint { lat: s.lat, lon: s.lon, alt: s.alt },
        })
        .collect();
    let patients: Vec<Patient> = file
        .patients
        .into_iter()
        .map(|p| Patient {
            id: p.id,
            location: GeoPoint { lat: p.lat, lon: p.lon, alt: p.alt },
            source: p.source,
        })
        .collect();
    let mut polylines = Vec::with_capacity(file.trails.len());
    for (n, t) in file.trails.into_iter().enumerate() {
        let mut line = Vec::with_capacity(t.points.len());
        for v in t.points {
            match v[..] {
                [lat, lon] => line.push(GeoPoint { lat, lon, alt: 0.0 }),
                [lat, lon, alt] => line.push(GeoPoint { lat, lon, alt }),
                _ => return Err(invalid(format!("trail #{}: vertices must be [lat, lon] or [lat, lon, alt]", n + 1))),
            }
        }
        polylines.push(line);
    }
    let travel_times = file.travel_times.map(TravelTimeMatrix::from_rows).transpose()?;

    let inst = Instance {
        origin,
        terrain,
        profile,
        stations,
        patients,
        trails: TrailNetwork { polylines },
        obstacle_step: file.obstacle_step.unwrap_or(DEFAULT_OBSTACLE_STEP_M),
        safety_margin: file.safety_margin.unwrap_or(SAFETY_MARGIN_M),
        travel_times,
    };
    inst.validate()?;
    Ok(inst)
}

fn terrain_from_file(t: TerrainFile, origin: &GeoPoint, base_dir: &Path) -> Result<Terrain, InstanceError> {
    let allowed: &[&str] = match t.kind.as_str() {
        "flat" => &["z"],
        "synthetic" => &["function", "base", "height", "center_x", "width", "peaks", "extent"],
        "raster" => &["path", "frame"],
        other => return Err(invalid(format!("unknown terrain kind `{other}` (flat, synthetic, raster)"))),
    };
    let present = [
        ("z", t.z.is_some()),
        ("function", t.function.is_some()),
        ("base", t.base.is_some()),
        ("height", t.height.is_some()),
        ("center_x", t.center_x.is_some()),
        ("width", t.width.is_some()),
        ("peaks", t.peaks.is_some()),
        ("extent", t.extent.is_some()),
        ("path", t.path.is_some()),
        ("frame", t.frame.is_some()),
    ];
    for (key, is_set) in present {
        if is_set && !allowed.contains(&key) {
            return Err(invalid(format!("terrain field `{key}` is not valid for kind `{}`", t.kind)));
        }
    }
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(format!("terrain field `{key}` is required")));

    match t.kind.as_str() {
        "flat" => Ok(Terrain::flat(need(t.z, "z")?)),
        "synthetic" => {
            let function = t.function.as_deref().unwrap_or_default();
            let terrain = match function {
                "ridge" => {
                    if t.peaks.is_some() {
                        return Err(invalid("terrain field `peaks` is not valid for function `ridge`"));
                    }
                    SyntheticTerrain::Ridge {
                        base: need(t.base, "base")?,
                        height: need(t.height, "height")?,
                        center_x: need(t.center_x, "center_x")?,
                        width: need(t.width, "width")?,
                    }
                }
                "peaks" => {
                    if t.height.is_some() || t.center_x.is_some() || t.width.is_some() {
                        return Err(invalid("function `peaks` takes only `base`, `peaks` and `extent`"));
                    }
                    SyntheticTerrain::Peaks {
                        base: need(t.base, "base")?,
                        peaks: t.peaks.unwrap_or_default(),
                    }
                }
                other => return Err(invalid(format!("unknown synthetic terrain function `{other}` (ridge, peaks)"))),
            };
            Ok(Terrain::synthetic(terrain, t.extent)?)
        }
        _ => {
            let rel = t.path.ok_or_else(|| invalid("terrain field `path` is required"))?;
            let geographic = match t.frame.as_deref().unwrap_or("local") {
                "local" => false,
                "wgs84" => true,
                other => return Err(invalid(format!("unknown raster frame `{other}` (local, wgs84)"))),
            };
            let frame = if geographic {
                RasterFrame::Geographic { origin: *origin }
            } else {
                RasterFrame::Local
            };
            let raster = esri::read_path(&base_dir.join(&rel), frame)?;
            Ok(Terrain {
                source: TerrainSource::Raster {
                    path: PathBuf::from(rel),
                    geographic,
                },
                model: ElevationModel::Raster(raster),
            })
        }
    }
}

fn terrain_to_file(source: &TerrainSource) -> TerrainFile {
    match source {
        TerrainSource::Flat { z } => TerrainFile {
            kind: "flat".into(),
            z: Some(*z),
            ..Default::default()
        },
        TerrainSource::Synthetic { terrain, extent } => {
            let mut f = TerrainFile {
                kind: "synthetic".into(),
                extent: *extent,
                ..Default::default()
            };
            match terrain {
                SyntheticTerrain::Ridge { base, height, center_x, width } => {
                    f.function = Some("ridge".into());
                    f.base = Some(*base);
                    f.height = Some(*height);
                    f.center_x = Some(*center_x);
                    f.width = Some(*width);
                }
                SyntheticTerrain::Peaks { base, peaks } => {
                    f.function = Some("peaks".into());
                    f.base = Some(*base);
                    f.peaks = Some(peaks.clone());
                }
            }
            f
        }
        TerrainSource::Raster { path, geographic } => TerrainFile {
            kind: "raster".into(),
            path: Some(path.to_string_lossy().replace('\\', "/")),
            frame: Some(if *geographic { "wgs84" } else { "local" }.into()),
            ..Default::default()
        },
    }
}

pub fn to_toml_string(inst: &Instance) -> Result<String, InstanceError> {
    let profile = match DroneProfile::builtin(&inst.profile.name) {
        Ok(p) if p == inst.profile => toml::Value::String(inst.profile.name.clone()),
        _ => toml::Value::try_from(&inst.profile).map_err(|e| InstanceError::Parse(e.to_string()))?,
    };
    let file = InstanceFile {
        obstacle_step: Some(inst.obstacle_step),
        safety_margin: (inst.safety_margin != SAFETY_MARGIN_M).then_some(inst.safety_margin),
        profile,
        travel_times: inst.travel_times.as_ref().map(TravelTimeMatrix::rows),
        origin: PointFile {
            lat: inst.origin.lat,
            lon: inst.origin.lon,
            alt: inst.origin.alt,
        },
        terrain: terrain_to_file(&inst.terrain.source),
        stations: inst
            .stations
            .iter()
            .map(|s| StationFile {
                id: s.id.clone(),
                kind: s.kind,
                lat: s.location.lat,
                lon: s.location.lon,
                alt: s.location.alt,
            })
            .collect(),
        patients: inst
            .patients
            .iter()
            .map(|p| PatientFile {
                id: p.id.clone(),
                lat: p.location.lat,
                lon: p.location.lon,
                alt: p.location.alt,
                source: p.source,
            })
            .collect(),
        trails: inst
            .trails
            .polylines
            .iter()
            .map(|line| TrailFile {
                points: line
                    .iter()
                    .map(|v| {
                        if v.alt == 0.0 {
                            vec![v.lat, v.lon]
                        } else {
                            vec![v.lat, v.lon, v.alt]
                        }
                    })
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| InstanceError::Parse(e.to_string()))
}

/// Writes the instance document. Raster terrain is referenced by path, not
/// copied.
pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let path = path.as_ref();
    let text = to_toml_string(inst)?;
    std::fs::write(path, text).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}
