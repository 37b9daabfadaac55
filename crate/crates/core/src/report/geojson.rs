//! GeoJSON layer of stations and patients, coordinates as `[lon, lat]`.

use serde_json::{json, Value};

use crate::instance::{Instance, StationKind};
use crate::model::ModelForm;
use crate::solver::Solution;

/// Upper bounds, seconds, of the two faster response classes; both
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub fast: f64,
    pub medium: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { fast: 360.0, medium: 660.0 }
    }
}

pub fn classify(t: f64, th: &Thresholds) -> &'static str {
    if t <= th.fast {
        "le_6min"
    } else if t <= th.medium {
        "6_to_11min"
    } else {
        "gt_11min"
    }
}

fn kind_name(k: StationKind) -> &'static str {
    match k {
        StationKind::ShelterHut => "shelter_hut",
        StationKind::FireStation => "fire_station",
        StationKind::Custom => "custom",
    }
}

fn point(lat: f64, lon: f64) -> Value {
    json!({ "type": "Point", "coordinates": [lon, lat] })
}

pub fn export_geojson(instance: &Instance, form: &ModelForm, solution: &Solution, th: &Thresholds) -> Value {
    let drones = solution.drones_per_station(form);
    let mut features = Vec::with_capacity(instance.stations.len() + instance.patients.len());
    for (i, s) in instance.stations.iter().enumerate() {
        features.push(json!({
            "type": "Feature",
            "geometry": point(s.location.lat, s.location.lon),
            "properties": {
                "feature": "station",
                "id": s.id,
                "kind": kind_name(s.kind),
                "selected": drones[i] > 0,
                "drones": drones[i],
            },
        }));
    }
    for ((p, assigned), times) in instance.patients.iter().zip(&solution.assignment).zip(&solution.times) {
        let station = |k: usize| instance.stations[form.group[assigned[k]]].id.clone();
        let mut props = json!({
            "feature": "patient",
            "id": p.id,
            "assigned_station": station(0),
            "t_drone_seconds": times[0],
            "class": classify(times[0], th),
        });
        if times.len() > 1 {
            props["backup_station"] = json!(station(1));
            props["t_drone2_seconds"] = json!(times[1]);
        }
        features.push(json!({
            "type": "Feature",
            "geometry": point(p.location.lat, p.location.lon),
            "properties": props,
        }));
    }
    json!({ "type": "FeatureCollection", "features": features })
}

/// Pretty-printed with sorted keys and a trailing newline.
pub fn to_string(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serialisable");
    s.push('\n');
    s
}
