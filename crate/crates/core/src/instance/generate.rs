//! Synthetic alpine instances: an east-west valley between two mountain
//! chains, a trail network climbing out of the valley, fire stations on the
//! valley floor and shelter huts along the upper trails.

use rand::Rng;

use super::sampling::seeded_rng;
use super::{
    sample_patients, Instance, InstanceError, Station, StationKind, Terrain, TerrainSource,
    TrailNetwork,
};
use crate::geo::{unproject, GeoPoint, LocalPoint};
use crate::terrain::{ElevationModel, Extent, Peak, Raster, RasterFrame, RasterHeader, SyntheticTerrain};
use crate::travel::DroneProfile;

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratedTerrain {
    /// Rasterise the landscape at this cell size; the instance references
    /// the grid by `file_name`.
    Raster { cellsize: f64, file_name: String },
    /// Keep the analytic landscape inline in the instance file.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub stations: usize,
    pub patients: usize,
    pub seed: u64,
    pub profile: DroneProfile,
    pub origin: GeoPoint,
    /// East-west extent in metres.
    pub width_m: f64,
    /// North-south extent in metres.
    pub height_m: f64,
    pub terrain: GeneratedTerrain,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            stations: 104,
            patients: 1500,
            seed: 1,
            profile: DroneProfile::lifedrone(),
            origin: GeoPoint { lat: 46.65, lon: 10.65, alt: 0.0 },
            width_m: 36_000.0,
            height_m: 24_000.0,
            terrain: GeneratedTerrain::Raster {
                cellsize: 50.0,
                file_name: "terrain.asc".into(),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    /// Grid to write next to the instance file when terrain is rasterised.
    pub raster: Option<Raster>,
}

fn landscape(rng: &mut impl Rng, w: f64, h: f64) -> SyntheticTerrain {
    let mut peaks = Vec::new();
    let chain = (w / 2600.0).round().max(2.0) as usize;
    for side in [1.0, -1.0] {
        for _ in 0..chain {
            peaks.push(Peak {
                x: rng.random_range(-w / 2.0..w / 2.0),
                y: side * rng.random_range(0.2 * h..0.48 * h),
                height: rng.random_range(700.0..1900.0),
                radius: rng.random_range(1500.0..3200.0),
            });
        }
    }
    for _ in 0..(chain / 3).max(1) {
        peaks.push(Peak {
            x: rng.random_range(-w / 2.0..w / 2.0),
            y: rng.random_range(-0.15 * h..0.15 * h),
            height: rng.random_range(150.0..500.0),
            radius: rng.random_range(700.0..1400.0),
        });
    }
    SyntheticTerrain::Peaks { base: 900.0, peaks }
}

fn trails(rng: &mut impl Rng, w: f64, h: f64) -> Vec<Vec<LocalPoint>> {
    let margin = 600.0;
    let clamp = |x: f64, y: f64| {
        LocalPoint::new(
            x.clamp(-w / 2.0 + margin, w / 2.0 - margin),
            y.clamp(-h / 2.0 + margin, h / 2.0 - margin),
            0.0,
        )
    };
    let mut out = Vec::new();

    let mut valley = Vec::new();
    let mut x = -w / 2.0 + margin;
    while x <= w / 2.0 - margin {
        valley.push(clamp(x, rng.random_range(-400.0..400.0)));
        x += 500.0;
    }
    out.push(valley);

    let side_trails = (w / 1000.0).round().max(4.0) as usize;
    for n in 0..side_trails {
        let dir = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut p = clamp(rng.random_range(-w / 2.0..w / 2.0), rng.random_range(-800.0..800.0));
        let length = rng.random_range(0.15 * h..0.4 * h);
        let mut heading: f64 = dir * std::f64::consts::FRAC_PI_2 + rng.random_range(-0.5..0.5);
        let mut line = vec![p];
        let mut walked = 0.0;
        while walked < length {
            heading += rng.random_range(-0.35..0.35);
            let step = 250.0;
            p = clamp(p.x + step * heading.cos(), p.y + step * heading.sin());
            line.push(p);
            walked += step;
        }
        out.push(line);
    }
    out
}

fn rasterise(terrain: &SyntheticTerrain, w: f64, h: f64, cellsize: f64) -> Result<Raster, InstanceError> {
    let ncols = (w / cellsize).ceil() as usize;
    let nrows = (h / cellsize).ceil() as usize;
    let xll = -w / 2.0;
    let top = -h / 2.0 + nrows as f64 * cellsize;
    let mut values = Vec::with_capacity(ncols * nrows);
    for r in 0..nrows {
        let y = top - (r as f64 + 0.5) * cellsize;
        for c in 0..ncols {
            let x = xll + (c as f64 + 0.5) * cellsize;
            // decimetre precision keeps the text grid exactly re-readable
            values.push((terrain.eval(x, y) * 10.0).round() / 10.0);
        }
    }
    Ok(Raster::new(
        RasterHeader {
            ncols,
            nrows,
            xllcorner: xll,
            yllcorner: -h / 2.0,
            cellsize,
            nodata: None,
        },
        values,
        RasterFrame::Local,
    )?)
}

/// Builds a deterministic synthetic instance from `params`.
pub fn generate(params: &GeneratorParams) -> Result<Generated, InstanceError> {
    if params.stations == 0 || params.patients == 0 {
        return Err(InstanceError::Invalid("generator needs at least one station and one patient".into()));
    }
    let (w, h) = (params.width_m, params.height_m);
    if !(w >= 4000.0 && h >= 4000.0) {
        return Err(InstanceError::Invalid("generator region must be at least 4 km on each side".into()));
    }
    let mut rng = seeded_rng(params.seed);
    let land = landscape(&mut rng, w, h);
    let extent = Extent {
        min_x: -w / 2.0,
        min_y: -h / 2.0,
        max_x: w / 2.0,
        max_y: h / 2.0,
    };

    let (terrain, raster) = match &params.terrain {
        GeneratedTerrain::Synthetic => (Terrain::synthetic(land.clone(), Some(extent))?, None),
        GeneratedTerrain::Raster { cellsize, file_name } => {
            let raster = rasterise(&land, w, h, *cellsize)?;
            (
                Terrain {
                    source: TerrainSource::Raster {
                        path: file_name.into(),
                        geographic: false,
                    },
                    model: ElevationModel::Raster(raster.clone()),
                },
                Some(raster),
            )
        }
    };
    let model = &terrain.model;
    let origin = params.origin;

    let lines = trails(&mut rng, w, h);
    let network = TrailNetwork {
        polylines: lines
            .iter()
            .map(|l| l.iter().map(|p| unproject(p, &origin)).collect())
            .collect(),
    };

    let fire = (params.stations / 3).max(1).min(params.stations);
    let mut stations = Vec::with_capacity(params.stations);
    let spacing = (w - 2000.0) / fire as f64;
    for n in 0..fire {
        let x = -w / 2.0 + 1000.0 + (n as f64 + 0.5) * spacing + rng.random_range(-0.3..0.3) * spacing;
        let y = rng.random_range(-1200.0..1200.0);
        let z = model.elevation_at(x, y)?;
        stations.push(Station {
            id: format!("ff-{:03}", n + 1),
            kind: StationKind::FireStation,
            location: unproject(&LocalPoint::new(x, y, z), &origin),
        });
    }
    let upper: Vec<LocalPoint> = lines[1..]
        .iter()
        .flat_map(|l| l[l.len() / 3..].iter().copied())
        .collect();
    for n in 0..params.stations - fire {
        let v = upper[rng.random_range(0..upper.len())];
        let x = (v.x + rng.random_range(-150.0..150.0)).clamp(extent.min_x + 100.0, extent.max_x - 100.0);
        let y = (v.y + rng.random_range(-150.0..150.0)).clamp(extent.min_y + 100.0, extent.max_y - 100.0);
        let z = model.elevation_at(x, y)?;
        stations.push(Station {
            id: format!("hut-{:03}", n + 1),
            kind: StationKind::ShelterHut,
            location: unproject(&LocalPoint::new(x, y, z), &origin),
        });
    }

    let patient_seed: u64 = rng.random();
    let patients = sample_patients(&network, &origin, params.patients, patient_seed, model)?;

    let mut instance = Instance::new(origin, terrain, params.profile.clone());
    instance.stations = stations;
    instance.patients = patients;
    instance.trails = network;
    instance.validate()?;
    Ok(Generated { instance, raster })
}
