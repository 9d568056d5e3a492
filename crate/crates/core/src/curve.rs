use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::Scenario;
use crate::tissue::Frequency;

/// Where a curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Simulated,
    Measured,
}

/// Path loss versus receiver distance from the body for one band and one
/// scenario. Losses are positive attenuation in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossCurve {
    band: Frequency,
    scenario: Scenario,
    source: Source,
    samples: Vec<(f64, f64)>,
    /// Set when some samples fall in the reactive near field of the source.
    near_field: bool,
}

impl PathLossCurve {
    /// Builds a curve, checking that distances are finite, non-negative and
    /// strictly increasing and that losses are finite.
    pub fn new(band: Frequency, scenario: Scenario, source: Source, samples: Vec<(f64, f64)>) -> Result<Self> {
        let mut prev: Option<f64> = None;
        for (n, &(d, l)) in samples.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::Curve(format!(
                    "sample {n}: distance {d} must be finite and >= 0"
                )));
            }
            if !l.is_finite() {
                return Err(Error::Curve(format!("sample {n}: loss {l} is not finite")));
            }
            if let Some(p) = prev {
                if d <= p {
                    return Err(Error::Curve(format!(
                        "sample {n}: distance {d} is not greater than {p}"
                    )));
                }
            }
            prev = Some(d);
        }
        Ok(Self {
            band,
            scenario,
            source,
            samples,
            near_field: false,
        })
    }

    pub fn with_near_field(mut self, flag: bool) -> Self {
        self.near_field = flag;
        self
    }

    pub fn band(&self) -> Frequency {
        self.band
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn near_field(&self) -> bool {
        self.near_field
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn starts_at_zero(&self) -> bool {
        self.samples.first().is_some_and(|&(d, _)| d == 0.0)
    }

    pub fn distance_range(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.0, self.samples.last()?.0))
    }

    /// Same samples with a different source tag.
    pub fn relabel(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    /// Adds `offset_db` to every loss.
    pub fn offset(&self, offset_db: f64) -> Result<Self> {
        let samples = self.samples.iter().map(|&(d, l)| (d, l + offset_db)).collect();
        Ok(Self::new(self.band, self.scenario, self.source, samples)?.with_near_field(self.near_field))
    }
}

/// Checks a receiver distance list: non-empty, finite, starting at 0 and
/// strictly increasing.
pub fn check_distances(distances: &[f64]) -> Result<()> {
    if distances.is_empty() {
        return Err(Error::Argument("receiver distance list is empty".into()));
    }
    if distances[0] != 0.0 {
        return Err(Error::Argument(format!(
            "receiver distances must start at 0, got {}",
            distances[0]
        )));
    }
    for w in distances.windows(2) {
        if !w[1].is_finite() || w[1] <= w[0] {
            return Err(Error::Argument(format!(
                "receiver distances must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}
