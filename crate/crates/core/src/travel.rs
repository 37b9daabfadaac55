//! Drone performance profiles and the climb, cruise, descend travel-time
//! model.
//!
//! A drone takes off after a fixed start-up delay, climbs vertically to clear
//! the highest terrain on the straight line to the patient (plus a safety
//! margin), cruises horizontally, and descends vertically onto the patient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LocalPoint;
use crate::terrain::{largest_obstacle, ElevationModel, TerrainError};

/// Vertical clearance kept above the highest obstacle, in metres.
pub const SAFETY_MARGIN_M: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TravelError {
    #[error("travel-time matrix has no stations or no patients")]
    EmptyInstance,
    #[error("station {station}, patient {patient}: {source}")]
    Terrain {
        station: usize,
        patient: usize,
        #[source]
        source: TerrainError,
    },
    #[error("invalid drone profile `{name}`: {reason}")]
    InvalidProfile { name: String, reason: String },
    #[error("unknown drone profile `{0}` (built-in profiles: lifedrone, wingcopter178)")]
    UnknownProfile(String),
    #[error("matrix row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("matrix entry ({station}, {patient}) = {value} is not a finite non-negative time")]
    BadEntry { station: usize, patient: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneProfile {
    pub name: String,
    /// Vertical ascent speed, m/s.
    pub v_vert_up: f64,
    /// Vertical descent speed, m/s.
    pub v_vert_down: f64,
    /// Horizontal cruise speed, m/s.
    pub v_hor: f64,
    /// Time from alarm to take-off, seconds.
    pub c_start: f64,
    /// Maximum operating wind speed, m/s. Informational only.
    #[serde(default)]
    pub max_wind: f64,
}

impl DroneProfile {
    pub fn lifedrone() -> Self {
        DroneProfile {
            name: "lifedrone".into(),
            v_vert_up: 2.5,
            v_vert_down: 2.5,
            v_hor: 17.9,
            c_start: 30.0,
            max_wind: 12.0,
        }
    }

    pub fn wingcopter178() -> Self {
        DroneProfile {
            name: "wingcopter178".into(),
            v_vert_up: 6.0,
            v_vert_down: 6.0,
            v_hor: 36.1,
            c_start: 20.0,
            max_wind: 15.0,
        }
    }

    pub fn builtin(name: &str) -> Result<Self, TravelError> {
        match name.to_ascii_lowercase().as_str() {
            "lifedrone" => Ok(Self::lifedrone()),
            "wingcopter178" => Ok(Self::wingcopter178()),
            _ => Err(TravelError::UnknownProfile(name.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), TravelError> {
        let bad = |reason: &str| TravelError::InvalidProfile {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        for (label, v) in [
            ("v_vert_up", self.v_vert_up),
            ("v_vert_down", self.v_vert_down),
            ("v_hor", self.v_hor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(&format!("{label} must be positive")));
            }
        }
        if !(self.c_start >= 0.0 && self.c_start.is_finite()) {
            return Err(bad("c_start must be non-negative"));
        }
        Ok(())
    }
}

/// Flight time in seconds from station `b` to patient `p` when the highest
/// terrain between them reaches `z_o`, using the default safety margin.
pub fn travel_time(profile: &DroneProfile, b: &LocalPoint, p: &LocalPoint, z_o: f64) -> f64 {
    travel_time_with_margin(profile, b, p, z_o, SAFETY_MARGIN_M)
}

pub fn travel_time_with_margin(
    profile: &DroneProfile,
    b: &LocalPoint,
    p: &LocalPoint,
    z_o: f64,
    margin: f64,
) -> f64 {
    let z_max = b.z.max(z_o + margin).max(p.z);
    profile.c_start
        + (z_max - b.z) / profile.v_vert_up
        + b.ground_distance(p) / profile.v_hor
        + (z_max - p.z) / profile.v_vert_down
}

/// Station-by-patient flight times in seconds, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeMatrix {
    stations: usize,
    patients: usize,
    data: Vec<f64>,
    column_min: Vec<f64>,
}

impl TravelTimeMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, TravelError> {
        let stations = rows.len();
        let patients = rows.first().map_or(0, Vec::len);
        if stations == 0 || patients == 0 {
            return Err(TravelError::EmptyInstance);
        }
        let mut data = Vec::with_capacity(stations * patients);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != patients {
                return Err(TravelError::Ragged {
                    row: i,
                    found: row.len(),
                    expected: patients,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(TravelError::BadEntry {
                        station: i,
                        patient: j,
                        value: v,
                    });
                }
            }
            data.extend(row);
        }
        Ok(Self::from_flat(stations, patients, data))
    }

    fn from_flat(stations: usize, patients: usize, data: Vec<f64>) -> Self {
        let mut column_min = vec![f64::INFINITY; patients];
        for row in data.chunks(patients) {
            for (m, &v) in column_min.iter_mut().zip(row) {
                if v < *m {
                    *m = v;
                }
            }
        }
        TravelTimeMatrix {
            stations,
            patients,
            data,
            column_min,
        }
    }

    pub fn stations(&self) -> usize {
        self.stations
    }

    pub fn patients(&self) -> usize {
        self.patients
    }

    #[inline]
    pub fn get(&self, station: usize, patient: usize) -> f64 {
        self.data[station * self.patients + patient]
    }

    pub fn row(&self, station: usize) -> &[f64] {
        &self.data[station * self.patients..(station + 1) * self.patients]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.patients).map(<[f64]>::to_vec).collect()
    }

    /// Fastest station time for each patient.
    pub fn column_min(&self) -> &[f64] {
        &self.column_min
    }
}

/// Fills the matrix by scanning the terrain between every station/patient
/// pair. Cells are independent, so the work is spread over the current rayon
/// pool; the result does not depend on the number of workers.
pub fn build_matrix(
    profile: &DroneProfile,
    stations: &[LocalPoint],
    patients: &[LocalPoint],
    terrain: &ElevationModel,
    step: f64,
) -> Result<TravelTimeMatrix, TravelError> {
    build_matrix_with_margin(profile, stations, patients, terrain, step, SAFETY_MARGIN_M)
}

pub fn build_matrix_with_margin(
    profile: &DroneProfile,
    stations: &[LocalPoint],
    patients: &[LocalPoint],
    terrain: &ElevationModel,
    step: f64,
    margin: f64,
) -> Result<TravelTimeMatrix, TravelError> {
    if stations.is_empty() || patients.is_empty() {
        return Err(TravelError::EmptyInstance);
    }
    let q = patients.len();
    let data = (0..stations.len() * q)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / q, cell % q);
            let (b, p) = (&stations[i], &patients[j]);
            largest_obstacle(terrain, b, p, step)
                .map(|o| travel_time_with_margin(profile, b, p, o.z_o, margin))
                .map_err(|source| TravelError::Terrain {
                    station: i,
                    patient: j,
                    source,
                })
        })
        .collect::<Result<Vec<f64>, TravelError>>()?;
    Ok(TravelTimeMatrix::from_flat(stations.len(), q, data))
}

/// The smallest time limit under which every patient is reachable from at
/// least one station: the largest per-patient minimum.
pub fn feasibility_threshold(mat: &TravelTimeMatrix) -> f64 {
    mat.column_min().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(x: f64, y: f64, z: f64) -> LocalPoint {
        LocalPoint::new(x, y, z)
    }

    #[test]
    fn builtin_profiles() {
        let l = DroneProfile::builtin("lifedrone").unwrap();
        assert_eq!((l.v_vert_up, l.v_vert_down, l.v_hor, l.c_start, l.max_wind), (2.5, 2.5, 17.9, 30.0, 12.0));
        let w = DroneProfile::builtin("Wingcopter178").unwrap();
        assert_eq!((w.v_vert_up, w.v_vert_down, w.v_hor, w.c_start, w.max_wind), (6.0, 6.0, 36.1, 20.0, 15.0));
        let err = DroneProfile::builtin("dji").unwrap_err();
        assert!(err.to_string().contains("dji"));
    }

    #[test]
    fn zero_distance_is_start_up_time() {
        let p = lp(10.0, 10.0, 1500.0);
        assert_eq!(travel_time(&DroneProfile::lifedrone(), &p, &p, 1495.0), 30.0);
        assert_eq!(travel_time(&DroneProfile::lifedrone(), &p, &p, 1200.0), 30.0);
    }

    #[test]
    fn lifedrone_level_flight() {
        let t = travel_time(&DroneProfile::lifedrone(), &lp(0.0, 0.0, 1000.0), &lp(1790.0, 0.0, 1000.0), 1000.0);
        assert!((t - 134.0).abs() < 1e-9, "{t}");
    }

    #[test]
    fn wingcopter_climb() {
        let t = travel_time(&DroneProfile::wingcopter178(), &lp(0.0, 0.0, 1000.0), &lp(0.0, 361.0, 1500.0), 0.0);
        assert!((t - (20.0 + 500.0 / 6.0 + 10.0)).abs() < 1e-9, "{t}");
    }

    #[test]
    fn threshold_is_max_of_column_minima() {
        let m = TravelTimeMatrix::from_rows(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 2.0, 2.0, 2.0],
            vec![5.0, 1.0, 1.0, 5.0],
        ])
        .unwrap();
        assert_eq!(m.column_min(), &[1.0, 1.0, 1.0, 2.0]);
        assert_eq!(feasibility_threshold(&m), 2.0);
        let one = TravelTimeMatrix::from_rows(vec![vec![42.0]]).unwrap();
        assert_eq!(feasibility_threshold(&one), 42.0);
    }

    #[test]
    fn rejects_empty_and_ragged_rows() {
        assert_eq!(TravelTimeMatrix::from_rows(vec![]), Err(TravelError::EmptyInstance));
        assert!(matches!(
            TravelTimeMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]),
            Err(TravelError::Ragged { row: 1, .. })
        ));
        assert!(TravelTimeMatrix::from_rows(vec![vec![-1.0]]).is_err());
    }

    #[test]
    fn one_by_one_matrix() {
        let terrain = ElevationModel::Flat { z: 1000.0 };
        let prof = DroneProfile::lifedrone();
        let b = lp(0.0, 0.0, 1000.0);
        let p = lp(1790.0, 0.0, 1000.0);
        let m = build_matrix(&prof, &[b], &[p], &terrain, 10.0).unwrap();
        assert_eq!(m.get(0, 0), travel_time(&prof, &b, &p, 1000.0));
    }

    #[test]
    fn swapping_stations_swaps_rows() {
        let terrain = ElevationModel::synthetic(
            crate::terrain::SyntheticTerrain::Ridge { base: 900.0, height: 700.0, center_x: 250.0, width: 80.0 },
            None,
        )
        .unwrap();
        let prof = DroneProfile::wingcopter178();
        let s = [lp(0.0, 0.0, 900.0), lp(600.0, 100.0, 950.0)];
        let p = [lp(300.0, 50.0, 1500.0), lp(-50.0, 20.0, 905.0), lp(700.0, -90.0, 920.0)];
        let m1 = build_matrix(&prof, &s, &p, &terrain, 10.0).unwrap();
        let m2 = build_matrix(&prof, &[s[1], s[0]], &p, &terrain, 10.0).unwrap();
        assert_eq!(m1.row(0), m2.row(1));
        assert_eq!(m1.row(1), m2.row(0));
    }

    #[test]
    fn terrain_errors_name_the_cell() {
        let terrain = ElevationModel::synthetic(
            crate::terrain::SyntheticTerrain::Peaks { base: 0.0, peaks: vec![] },
            Some(crate::terrain::Extent { min_x: 0.0, min_y: 0.0, max_x: 100.0, max_y: 100.0 }),
        )
        .unwrap();
        let err = build_matrix(
            &DroneProfile::lifedrone(),
            &[lp(10.0, 10.0, 0.0)],
            &[lp(20.0, 20.0, 0.0), lp(200.0, 20.0, 0.0)],
            &terrain,
            10.0,
        )
        .unwrap_err();
        assert!(matches!(err, TravelError::Terrain { station: 0, patient: 1, .. }));
    }

    fn profile_strategy() -> impl Strategy<Value = DroneProfile> {
        (0.5f64..10.0, 0.5f64..10.0, 5.0f64..50.0, 0.0f64..60.0).prop_map(|(u, d, h, c)| DroneProfile {
            name: "custom".into(),
            v_vert_up: u,
            v_vert_down: d,
            v_hor: h,
            c_start: c,
            max_wind: 0.0,
        })
    }

    proptest! {
        #[test]
        fn not_below_start_up_time(
            prof in profile_strategy(),
            bx in -5e3f64..5e3, by in -5e3f64..5e3, bz in 0.0f64..3000.0,
            px in -5e3f64..5e3, py in -5e3f64..5e3, pz in 0.0f64..3000.0,
            zo in 0.0f64..4000.0,
        ) {
            let t = travel_time(&prof, &lp(bx, by, bz), &lp(px, py, pz), zo);
            prop_assert!(t >= prof.c_start);
        }

        #[test]
        fn symmetric_when_speeds_match(
            v in 0.5f64..10.0, h in 5.0f64..50.0,
            bx in -5e3f64..5e3, bz in 0.0f64..3000.0,
            px in -5e3f64..5e3, pz in 0.0f64..3000.0,
            zo in 0.0f64..4000.0,
        ) {
            let prof = DroneProfile { name: "s".into(), v_vert_up: v, v_vert_down: v, v_hor: h, c_start: 10.0, max_wind: 0.0 };
            let b = lp(bx, 0.0, bz);
            let p = lp(px, 0.0, pz);
            let ab = travel_time(&prof, &b, &p, zo);
            let ba = travel_time(&prof, &p, &b, zo);
            prop_assert!((ab - ba).abs() <= 1e-9 * ab);
        }

        #[test]
        fn faster_drone_is_faster(
            prof in profile_strategy(),
            px in 1.0f64..5e3, pz in 0.0f64..3000.0, zo in 0.0f64..4000.0,
        ) {
            let b = lp(0.0, 0.0, 500.0);
            let p = lp(px, 0.0, pz);
            let fast = DroneProfile {
                v_vert_up: 2.0 * prof.v_vert_up,
                v_vert_down: 2.0 * prof.v_vert_down,
                v_hor: 2.0 * prof.v_hor,
                ..prof.clone()
            };
            prop_assert!(travel_time(&fast, &b, &p, zo) < travel_time(&prof, &b, &p, zo));
        }
    }
}
