use serde::Serialize;

use super::ReportError;

/// Summary of a list of response times, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub q95: f64,
    pub q99: f64,
}

/// Element at 1-based rank `ceil(pct * n / 100)` of an ascending list.
pub fn nearest_rank(sorted: &[f64], pct: u32) -> f64 {
    let n = sorted.len();
    let rank = (pct as usize * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

pub fn stats(times: &[f64]) -> Result<Stats, ReportError> {
    if times.is_empty() {
        return Err(ReportError::EmptyList);
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    for &t in times {
        sum += t;
    }
    Ok(Stats {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean: sum / times.len() as f64,
        median: nearest_rank(&sorted, 50),
        q95: nearest_rank(&sorted, 95),
        q99: nearest_rank(&sorted, 99),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton() {
        let s = stats(&[60.0]).unwrap();
        assert_eq!(s, Stats { min: 60.0, max: 60.0, mean: 60.0, median: 60.0, q95: 60.0, q99: 60.0 });
    }

    #[test]
    fn one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = stats(&v).unwrap();
        assert_eq!((s.median, s.q95, s.q99), (50.0, 95.0, 99.0));
        assert_eq!(s.mean, 50.5);
    }

    #[test]
    fn median_of_four() {
        assert_eq!(stats(&[40.0, 10.0, 30.0, 20.0]).unwrap().median, 20.0);
    }

    #[test]
    fn empty() {
        assert_eq!(stats(&[]), Err(ReportError::EmptyList));
    }

    proptest! {
        #[test]
        fn ordered_fields(v in prop::collection::vec(0.0f64..5000.0, 1..200)) {
            let s = stats(&v).unwrap();
            prop_assert!(s.min <= s.median && s.median <= s.q95 && s.q95 <= s.q99 && s.q99 <= s.max);
            prop_assert!(s.min <= s.mean + 1e-9 && s.mean <= s.max + 1e-9);
        }
    }
}
