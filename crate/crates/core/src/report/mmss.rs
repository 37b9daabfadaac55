//! `mm:ss` durations. Minutes are not wrapped into hours.

use super::ReportError;

/// Rounds half up to whole seconds.
pub fn format_mmss(seconds: f64) -> String {
    let total = (seconds.max(0.0) + 0.5).floor() as u64;
    format!("{:02}:{:02}", total / 60, total % 60)
}

/// Accepts one to three minute digits and exactly two second digits below 60.
pub fn parse_mmss(text: &str) -> Result<u32, ReportError> {
    let bad = || ReportError::Mmss(text.to_string());
    let (m, s) = text.split_once(':').ok_or_else(bad)?;
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    if !(digits(m) && m.len() <= 3 && digits(s) && s.len() == 2) {
        return Err(bad());
    }
    let (m, s): (u32, u32) = (m.parse().map_err(|_| bad())?, s.parse().map_err(|_| bad())?);
    if s >= 60 {
        return Err(bad());
    }
    Ok(m * 60 + s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(format_mmss(327.0), "05:27");
        assert_eq!(format_mmss(0.0), "00:00");
        assert_eq!(format_mmss(2880.0), "48:00");
        assert_eq!(format_mmss(59.5), "01:00");
        assert_eq!(format_mmss(59.49), "00:59");
        assert_eq!(format_mmss(6000.0), "100:00");
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_mmss("48:00").unwrap(), 2880);
        assert_eq!(parse_mmss("0:07").unwrap(), 7);
        assert_eq!(parse_mmss("100:00").unwrap(), 6000);
        for bad in ["", "5", "5:7", "05:60", "1234:00", "a:00", "05:00:00", " 05:00", "-1:00"] {
            assert!(parse_mmss(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn round_trip() {
        for x in 0..=6000u32 {
            assert_eq!(parse_mmss(&format_mmss(x as f64)).unwrap(), x);
        }
    }
}
