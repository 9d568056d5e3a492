//! Analytic RF path loss for the ISM bands.
//!
//! A straight ray leaves the transmitter's air pocket, crosses the tissue
//! layers at normal incidence and continues through air to the receiver.
//! Loss is the sum of layer attenuation, interface transmission loss and a
//! spreading term evaluated at the total transmitter-to-receiver distance.
//! There is no multipath and no antenna gain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{check_distances, PathLossCurve, Source};
use crate::error::{Error, Result};
use crate::phantom::{PhantomModel, Scenario};
use crate::tissue::{tissue_loss_db, ComplexPermittivity, Frequency, TissueTable};

/// Lowest band the layered model accepts. Below it the body is electrically
/// small and the quasi-static solver applies instead.
pub const RF_FLOOR_HZ: f64 = 100e6;

/// Loss reported for an interface that reflects (almost) everything.
pub const TRANSMISSION_CAP_DB: f64 = 200.0;

/// Power transmission across one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub loss_db: f64,
    /// True when the loss hit [`TRANSMISSION_CAP_DB`].
    pub capped: bool,
}

/// Normal-incidence power transmission from medium `a` into medium `b`.
///
/// Uses the complex intrinsic impedances of both media; `1 - |Γ|²` is
/// symmetric in `a` and `b`.
pub fn interface_transmission(a: &ComplexPermittivity, b: &ComplexPermittivity, f: Frequency) -> Result<Transmission> {
    let eta_a = a.intrinsic_impedance(f);
    let eta_b = b.intrinsic_impedance(f);
    let gamma = (eta_b - eta_a) / (eta_b + eta_a);
    let t = 1.0 - gamma.norm_sqr();
    if !t.is_finite() {
        return Err(Error::NumericDomain(format!(
            "interface transmission at {f} is not finite"
        )));
    }
    let loss = -10.0 * t.log10();
    if !(loss < TRANSMISSION_CAP_DB) {
        log::warn!("interface at {f} reflects almost all power; loss capped at {TRANSMISSION_CAP_DB} dB");
        return Ok(Transmission {
            loss_db: TRANSMISSION_CAP_DB,
            capped: true,
        });
    }
    Ok(Transmission {
        loss_db: loss.max(0.0),
        capped: false,
    })
}

pub fn interface_transmission_db(a: &ComplexPermittivity, b: &ComplexPermittivity, f: Frequency) -> Result<f64> {
    interface_transmission(a, b, f).map(|t| t.loss_db)
}

/// Free-space Friis spreading loss `20 log10(4πr/λ)` for isotropic ends.
pub fn friis_db(distance_m: f64, f: Frequency) -> Result<f64> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(Error::Argument(format!("spreading distance {distance_m} must be > 0")));
    }
    Ok(20.0 * (4.0 * PI * distance_m / f.wavelength()).log10())
}

/// Spreading loss of a short dipole's broadside electric field, in the same
/// units as [`friis_db`] and equal to it in the far field.
///
/// The field carries the factor `1 + 1/(jkr) - 1/(kr)²`, which adds
/// `-10 log10(1 - (kr)^-2 + (kr)^-4)` to the Friis term. The result is
/// strictly increasing in `r`.
pub fn short_dipole_db(distance_m: f64, f: Frequency) -> Result<f64> {
    let friis = friis_db(distance_m, f)?;
    let x = f.wavelength() / (2.0 * PI * distance_m);
    let x2 = x * x;
    Ok(friis - 10.0 * (1.0 - x2 + x2 * x2).log10())
}

/// Spreading model applied between transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Spreading {
    /// Friis, clamped to 0 dB below `λ/4π` where it turns negative.
    Friis,
    /// Friis relative to its value at `reference_m`, i.e.
    /// `20 log10(r / reference_m)`. Never clamped.
    Referenced { reference_m: f64 },
    /// Short-dipole field including its reactive terms, measured relative
    /// to the field at `reference_m` from the source.
    ShortDipole { reference_m: f64 },
}

impl Spreading {
    /// Friis referenced to the skin surface, so Case I at the skin is the
    /// body loss alone and Case II at the same point is 0 dB.
    pub fn for_phantom(phantom: &PhantomModel) -> Self {
        Spreading::Referenced {
            reference_m: phantom.implant_depth_m,
        }
    }

    /// Spreading loss at `distance_m` and whether that point lies in the
    /// near field (inside `λ/4π` for the Friis forms, `kr < 1` for the
    /// dipole).
    pub fn loss_db(&self, distance_m: f64, f: Frequency) -> Result<(f64, bool)> {
        let reference = |reference_m: f64| -> Result<()> {
            if !(reference_m > 0.0 && reference_m.is_finite()) {
                return Err(Error::Argument(format!(
                    "spreading reference distance {reference_m} must be > 0"
                )));
            }
            if distance_m < reference_m {
                return Err(Error::Argument(format!(
                    "spreading distance {distance_m} m is inside the reference distance {reference_m} m"
                )));
            }
            Ok(())
        };
        match *self {
            Spreading::Referenced { reference_m } => {
                reference(reference_m)?;
                friis_db(distance_m, f)?;
                let near = distance_m < f.wavelength() / (4.0 * PI);
                Ok((20.0 * (distance_m / reference_m).log10(), near))
            }
            Spreading::Friis => {
                let l = friis_db(distance_m, f)?;
                if l < 0.0 {
                    Ok((0.0, true))
                } else {
                    Ok((l, false))
                }
            }
            Spreading::ShortDipole { reference_m } => {
                reference(reference_m)?;
                let l = short_dipole_db(distance_m, f)? - short_dipole_db(reference_m, f)?;
                let kr = 2.0 * PI * distance_m / f.wavelength();
                Ok((l, kr < 1.0))
            }
        }
    }
}

/// One tissue layer crossed by the ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub tissue: String,
    pub thickness_m: f64,
}

/// Tissue layers from the transmitter's air pocket out to the skin. Air
/// lies on both sides of the path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerPath {
    layers: Vec<Layer>,
}

impl LayerPath {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        for l in &layers {
            if !(l.thickness_m > 0.0 && l.thickness_m.is_finite()) {
                return Err(Error::Argument(format!(
                    "layer {} thickness {} must be > 0",
                    l.tissue, l.thickness_m
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Interior tissue between the pocket wall and the skin, then the skin.
    pub fn from_phantom(phantom: &PhantomModel) -> Result<Self> {
        phantom.validate()?;
        let interior = phantom.implant_depth_m - phantom.skin_thickness_m - phantom.air_pocket_radius_m;
        Self::new(vec![
            Layer {
                tissue: phantom.interior_tissue.clone(),
                thickness_m: interior,
            },
            Layer {
                tissue: phantom.skin_tissue.clone(),
                thickness_m: phantom.skin_thickness_m,
            },
        ])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn thickness_m(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_m).sum()
    }

    /// Attenuation and interface losses along the path.
    pub fn body_loss(&self, tissues: &TissueTable, f: Frequency) -> Result<BodyLoss> {
        let mut media = vec![ComplexPermittivity::VACUUM];
        let mut out = BodyLoss::default();
        for l in &self.layers {
            let eps = tissues.permittivity(&l.tissue, f)?;
            out.tissue_db += tissue_loss_db(&eps, f, l.thickness_m)?;
            media.push(eps);
        }
        media.push(ComplexPermittivity::VACUUM);
        for w in media.windows(2) {
            let t = interface_transmission(&w[0], &w[1], f)?;
            out.interface_db += t.loss_db;
            out.capped |= t.capped;
        }
        Ok(out)
    }
}

/// Body contribution to RF path loss.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyLoss {
    pub tissue_db: f64,
    pub interface_db: f64,
    pub capped: bool,
}

impl BodyLoss {
    pub fn total_db(&self) -> f64 {
        self.tissue_db + self.interface_db
    }
}

fn check_band(band: Frequency) -> Result<()> {
    if band.hz() < RF_FLOOR_HZ {
        return Err(Error::ModelDomain(format!(
            "{band} is below the {} MHz floor of the RF model; use the quasi-static solver",
            RF_FLOOR_HZ / 1e6
        )));
    }
    Ok(())
}

/// Case I curve for an arbitrary layer path with the source `source_depth_m`
/// below the skin surface.
pub fn layered_curve(
    path: &LayerPath,
    tissues: &TissueTable,
    band: Frequency,
    source_depth_m: f64,
    rx_distances: &[f64],
    spreading: Spreading,
) -> Result<PathLossCurve> {
    check_band(band)?;
    check_distances(rx_distances)?;
    if !(source_depth_m > 0.0 && source_depth_m >= path.thickness_m()) {
        return Err(Error::Argument(format!(
            "source depth {source_depth_m} m must be > 0 and cover the {} m layer path",
            path.thickness_m()
        )));
    }
    let body = path.body_loss(tissues, band)?;
    let mut near = false;
    let mut samples = Vec::with_capacity(rx_distances.len());
    for &d in rx_distances {
        let (s, nf) = spreading.loss_db(source_depth_m + d, band)?;
        near |= nf;
        samples.push((d, body.total_db() + s));
    }
    Ok(PathLossCurve::new(band, Scenario::InBody, Source::Simulated, samples)?.with_near_field(near))
}

/// Case I: transmitter implanted in `phantom`.
pub fn inbody_curve(
    phantom: &PhantomModel,
    tissues: &TissueTable,
    band: Frequency,
    rx_distances: &[f64],
    spreading: Spreading,
) -> Result<PathLossCurve> {
    let path = LayerPath::from_phantom(phantom)?;
    layered_curve(&path, tissues, band, phantom.implant_depth_m, rx_distances, spreading)
}

/// Case II: the same transmitter-receiver geometry with the body removed.
/// `baseline_separation_m` is the transmitter depth of Case I.
pub fn freespace_curve(
    band: Frequency,
    baseline_separation_m: f64,
    rx_distances: &[f64],
    spreading: Spreading,
) -> Result<PathLossCurve> {
    if !(baseline_separation_m > 0.0 && baseline_separation_m.is_finite()) {
        return Err(Error::Argument(format!(
            "baseline separation {baseline_separation_m} must be > 0"
        )));
    }
    let mut near = false;
    let mut samples = Vec::with_capacity(rx_distances.len());
    for &d in rx_distances {
        if !(d >= 0.0) {
            return Err(Error::Argument(format!("receiver distance {d} must be >= 0")));
        }
        let (s, nf) = spreading.loss_db(baseline_separation_m + d, band)?;
        near |= nf;
        samples.push((d, s));
    }
    Ok(PathLossCurve::new(band, Scenario::FreeSpace, Source::Simulated, samples)?.with_near_field(near))
}
