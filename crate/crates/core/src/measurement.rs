//! Path-loss CSV files and cleanup of measured sweeps.
//!
//! The file format is a `distance_m,loss_db` header followed by one
//! `distance,loss` row per sample. Distances are meters, losses positive dB.
//! Readers accept LF or CRLF line endings. Rows are numbered by file line,
//! so the header is line 1 and the first sample is row 2.

use crate::curve::{PathLossCurve, Source};
use crate::error::{Error, Result};
use crate::phantom::Scenario;
use crate::tissue::Frequency;

pub const PL_HEADER: &str = "distance_m,loss_db";

/// Parses a path-loss CSV into a measured curve.
pub fn parse_pl_csv(bytes: &[u8], band: Frequency, scenario: Scenario) -> Result<PathLossCurve> {
    parse_pl_csv_with(bytes, band, scenario, false)
}

/// Like [`parse_pl_csv`]. With `negate` set, every value in the loss column
/// is sign-flipped first, which turns signal-level exports (negative dB
/// gains) into losses.
pub fn parse_pl_csv_with(bytes: &[u8], band: Frequency, scenario: Scenario, negate: bool) -> Result<PathLossCurve> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        Error::Format {
            line,
            message: "not valid UTF-8".into(),
        }
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    if lines.next().map(str::trim) != Some(PL_HEADER) {
        return Err(Error::Format {
            line: 1,
            message: format!("expected header `{PL_HEADER}`"),
        });
    }
    if negate {
        log::info!("negating loss column: reading signal levels as losses");
    }
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Format {
                line: row,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Format {
                line: row,
                message: format!("`{s}` is not a number"),
            })
        };
        let d = num(fields[0])?;
        let mut l = num(fields[1])?;
        if negate {
            l = -l;
        }
        let value_err = |message: String| Err(Error::Value { row, message });
        if !d.is_finite() || !l.is_finite() {
            return value_err(format!("non-finite value ({}, {})", fields[0], fields[1]));
        }
        if d < 0.0 {
            return value_err(format!("distance {d} is negative"));
        }
        if l < 0.0 {
            return value_err(format!("loss {l} dB is negative; signal-level exports need negation"));
        }
        if let Some(&(prev, _)) = samples.last() {
            if d <= prev {
                return Err(Error::Monotonicity { row, distance_m: d });
            }
        }
        samples.push((d + 0.0, l + 0.0));
    }
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    PathLossCurve::new(band, scenario, Source::Measured, samples)
}

/// Rounds to 6 significant digits and prints the shortest decimal that reads
/// back as the rounded value.
fn fmt6(v: f64) -> String {
    let r: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    format!("{}", r + 0.0)
}

/// Canonical CSV text for `curve`: header, then one newline-terminated row
/// per sample with up to 6 significant digits. Distances closer together
/// than that resolution would collide, so keep them on a coarser grid.
pub fn write_pl_csv(curve: &PathLossCurve) -> Vec<u8> {
    let mut out = String::with_capacity(20 * (curve.len() + 1));
    out.push_str(PL_HEADER);
    out.push('\n');
    for &(d, l) in curve.samples() {
        out.push_str(&fmt6(d));
        out.push(',');
        out.push_str(&fmt6(l));
        out.push('\n');
    }
    out.into_bytes()
}

/// Centered moving average of the losses.
///
/// Near the ends the window is clipped to the samples that exist, so the
/// first point averages itself with the `window / 2` points after it. No
/// values are invented beyond the data.
pub fn moving_average(curve: &PathLossCurve, window: usize) -> Result<PathLossCurve> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Argument(format!("window {window} must be odd and positive")));
    }
    let n = curve.len();
    if window > n {
        return Err(Error::Argument(format!("window {window} exceeds the {n} samples")));
    }
    let s = curve.samples();
    let half = window / 2;
    let samples = (0..n)
        .map(|i| {
            let part = &s[i.saturating_sub(half)..(i + half + 1).min(n)];
            // Averaging deviations from the center sample keeps flat runs
            // bit-exact.
            let base = s[i].1;
            let dev: f64 = part.iter().map(|&(_, l)| l - base).sum::<f64>() / part.len() as f64;
            let (lo, hi) = part
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, l)| {
                    (lo.min(l), hi.max(l))
                });
            (s[i].0, (base + dev).clamp(lo, hi))
        })
        .collect();
    Ok(
        PathLossCurve::new(curve.band(), curve.scenario(), curve.source(), samples)?
            .with_near_field(curve.near_field()),
    )
}

/// A measured body/air sweep pair for one band.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    band: Frequency,
    body_curve: PathLossCurve,
    air_curve: PathLossCurve,
    pub notes: String,
}

impl MeasurementSet {
    pub fn new(body_curve: PathLossCurve, air_curve: PathLossCurve, notes: impl Into<String>) -> Result<Self> {
        if body_curve.band() != air_curve.band() {
            return Err(Error::Pairing(format!(
                "body sweep at {} does not match air sweep at {}",
                body_curve.band(),
                air_curve.band()
            )));
        }
        if body_curve.scenario() != Scenario::InBody || air_curve.scenario() != Scenario::FreeSpace {
            return Err(Error::Pairing("expected an in_body and a free_space sweep".into()));
        }
        if !body_curve.starts_at_zero() || !air_curve.starts_at_zero() {
            return Err(Error::Curve("both sweeps need a distance-0 sample".into()));
        }
        Ok(Self {
            band: body_curve.band(),
            body_curve: body_curve.relabel(Source::Measured),
            air_curve: air_curve.relabel(Source::Measured),
            notes: notes.into(),
        })
    }

    /// Parses a body and an air CSV recorded at `band`.
    pub fn parse(body: &[u8], air: &[u8], band: Frequency, negate: bool) -> Result<Self> {
        Self::new(
            parse_pl_csv_with(body, band, Scenario::InBody, negate)?,
            parse_pl_csv_with(air, band, Scenario::FreeSpace, negate)?,
            String::new(),
        )
    }

    pub fn band(&self) -> Frequency {
        self.band
    }

    pub fn body_curve(&self) -> &PathLossCurve {
        &self.body_curve
    }

    pub fn air_curve(&self) -> &PathLossCurve {
        &self.air_curve
    }

    /// Smooths both sweeps with [`moving_average`].
    pub fn smoothed(&self, window: usize) -> Result<Self> {
        Ok(Self {
            band: self.band,
            body_curve: moving_average(&self.body_curve, window)?,
            air_curve: moving_average(&self.air_curve, window)?,
            notes: self.notes.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> Frequency {
        Frequency::new(434e6).unwrap()
    }

    fn parse(text: &str) -> Result<PathLossCurve> {
        parse_pl_csv(text.as_bytes(), band(), Scenario::InBody)
    }

    #[test]
    fn header_only_is_empty() {
        assert_eq!(parse("distance_m,loss_db\n"), Err(Error::EmptyData));
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = "distance_m,loss_db\n0,40\n0.1,45\n0.2,52\n";
        let c = parse(text).unwrap();
        assert_eq!(c.samples(), &[(0.0, 40.0), (0.1, 45.0), (0.2, 52.0)]);
        assert_eq!(write_pl_csv(&c), text.as_bytes());
    }

    #[test]
    fn crlf_accepted() {
        let c = parse("distance_m,loss_db\r\n0,40\r\n0.1,45\r\n").unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn errors_cite_rows() {
        assert_eq!(
            parse("distance_m,loss_db\n0,40\n0.05,41\n0.02,43\n"),
            Err(Error::Monotonicity {
                row: 4,
                distance_m: 0.02
            })
        );
        assert!(matches!(parse("0,40\n"), Err(Error::Format { line: 1, .. })));
        assert!(matches!(
            parse("distance_m,loss_db\n0,NaN\n"),
            Err(Error::Value { row: 2, .. })
        ));
        assert!(matches!(
            parse("distance_m,loss_db\n0,40\n0.1,inf\n"),
            Err(Error::Value { row: 3, .. })
        ));
        assert!(matches!(
            parse("distance_m,loss_db\n0,abc\n"),
            Err(Error::Format { line: 2, .. })
        ));
        assert!(matches!(
            parse("distance_m,loss_db\n0,-40\n"),
            Err(Error::Value { row: 2, .. })
        ));
        assert!(matches!(
            parse_pl_csv(b"distance_m,loss_db\n0,4\xff\n", band(), Scenario::InBody),
            Err(Error::Format { line: 2, .. })
        ));
    }

    #[test]
    fn negate_flips_signal_levels() {
        let c = parse_pl_csv_with(b"distance_m,loss_db\n0,-40\n0.1,-45\n", band(), Scenario::InBody, true).unwrap();
        assert_eq!(c.samples(), &[(0.0, 40.0), (0.1, 45.0)]);
    }

    #[test]
    fn writer_edge_cases() {
        let empty = PathLossCurve::new(band(), Scenario::InBody, Source::Measured, vec![]).unwrap();
        let text = write_pl_csv(&empty);
        assert_eq!(text, b"distance_m,loss_db\n");
        assert_eq!(parse_pl_csv(&text, band(), Scenario::InBody), Err(Error::EmptyData));
        let one = PathLossCurve::new(band(), Scenario::InBody, Source::Measured, vec![(0.0, 12.5)]).unwrap();
        assert_eq!(write_pl_csv(&one), b"distance_m,loss_db\n0,12.5\n");
        let long = PathLossCurve::new(band(), Scenario::InBody, Source::Measured, vec![(0.0, 1.0 / 3.0)]).unwrap();
        assert_eq!(write_pl_csv(&long), b"distance_m,loss_db\n0,0.333333\n");
    }

    #[test]
    fn moving_average_rules() {
        let c = PathLossCurve::new(
            band(),
            Scenario::InBody,
            Source::Measured,
            vec![(0.0, 40.0), (0.1, 50.0), (0.2, 60.0)],
        )
        .unwrap();
        assert_eq!(moving_average(&c, 1).unwrap(), c);
        let m = moving_average(&c, 3).unwrap();
        let l: Vec<f64> = m.samples().iter().map(|s| s.1).collect();
        assert_eq!(l, vec![45.0, 50.0, 55.0]);
        assert!(moving_average(&c, 2).is_err());
        assert!(moving_average(&c, 5).is_err());
        assert!(moving_average(&c, 0).is_err());
        let flat = PathLossCurve::new(
            band(),
            Scenario::InBody,
            Source::Measured,
            (0..7).map(|i| (i as f64 * 0.1, 0.1)).collect(),
        )
        .unwrap();
        assert_eq!(moving_average(&flat, 5).unwrap(), flat);
    }

    #[test]
    fn set_pairing() {
        let body = b"distance_m,loss_db\n0,30\n0.5,80\n";
        let air = b"distance_m,loss_db\n0,45\n0.5,60\n";
        let set = MeasurementSet::parse(body, air, band(), false).unwrap();
        assert_eq!(set.body_curve().source(), Source::Measured);
        let other = parse_pl_csv(air, Frequency::new(900e6).unwrap(), Scenario::FreeSpace).unwrap();
        assert!(matches!(
            MeasurementSet::new(set.body_curve().clone(), other, ""),
            Err(Error::Pairing(_))
        ));
    }
}
