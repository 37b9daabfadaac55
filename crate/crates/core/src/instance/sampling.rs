//! Patient placement uniformly by arc length over a trail network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InstanceError, Patient, PatientSource, TrailNetwork};
use crate::geo::{project, unproject, GeoPoint, LocalPoint};
use crate::terrain::ElevationModel;

/// The generator behind every seeded draw in this crate: ChaCha with 8
/// rounds, seeded through `SeedableRng::seed_from_u64`. Its output stream is
/// specified independently of platform and word size.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Trail segments in the local frame with running lengths.
#[derive(Debug, Clone)]
pub(crate) struct SegmentIndex {
    segments: Vec<(LocalPoint, LocalPoint)>,
    /// `cumulative[k]` is the total length up to the end of segment `k`.
    cumulative: Vec<f64>,
}

impl SegmentIndex {
    pub(crate) fn new(net: &TrailNetwork, origin: &GeoPoint) -> Result<Self, InstanceError> {
        if net.polylines.is_empty() {
            return Err(InstanceError::EmptyNetwork);
        }
        let mut segments = Vec::new();
        let mut cumulative = Vec::new();
        let mut total = 0.0;
        for line in &net.polylines {
            for w in line.windows(2) {
                let a = project(&w[0], origin);
                let b = project(&w[1], origin);
                total += a.ground_distance(&b);
                segments.push((a, b));
                cumulative.push(total);
            }
        }
        if !(total > 0.0) {
            return Err(InstanceError::DegenerateNetwork);
        }
        Ok(SegmentIndex { segments, cumulative })
    }

    pub(crate) fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Maps `u` in `[0, 1)` to the point at arc length `u * total`, returning
    /// the segment index alongside.
    pub(crate) fn locate(&self, u: f64) -> (usize, f64, f64) {
        let target = u * self.total();
        let k = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.segments.len() - 1);
        let start = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
        let len = self.cumulative[k] - start;
        let f = if len > 0.0 { ((target - start) / len).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = &self.segments[k];
        (k, a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
    }
}

/// Draws `count` patients uniformly by arc length over the network.
///
/// Altitudes come from `terrain`, never from trail vertices. Identical
/// inputs yield identical output.
pub fn sample_patients(
    net: &TrailNetwork,
    origin: &GeoPoint,
    count: usize,
    seed: u64,
    terrain: &ElevationModel,
) -> Result<Vec<Patient>, InstanceError> {
    if count == 0 {
        return Err(InstanceError::Invalid("patient count must be at least 1".into()));
    }
    let index = SegmentIndex::new(net, origin)?;
    let mut rng = seeded_rng(seed);
    let width = count.to_string().len().max(4);
    (0..count)
        .map(|n| {
            let u: f64 = rng.random();
            let (_, x, y) = index.locate(u);
            let z = terrain.elevation_at(x, y)?;
            Ok(Patient {
                id: format!("p{:0width$}", n + 1),
                location: unproject(&LocalPoint::new(x, y, z), origin),
                source: PatientSource::Sampled,
            })
        })
        .collect()
}
