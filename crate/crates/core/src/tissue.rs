//! Frequency-dependent tissue dielectrics.
//!
//! Tissues are described by the multi-pole Cole-Cole relaxation model
//!
//! ```text
//! ε̂(ω) = ε∞ + Σₙ Δεₙ / (1 + (jωτₙ)^(1−αₙ)) + σᵢ / (jωε₀)
//! ```
//!
//! from which the real relative permittivity and the effective conductivity
//! `σ = −ωε₀·Im(ε̂)` follow. Plane-wave attenuation and phase constants of a
//! lossy medium are derived from that pair.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Nepers to decibels, 20/ln(10).
pub const NP_TO_DB: f64 = 8.685_889_638_065_035;

/// A positive, finite frequency in hertz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub fn new(hertz: f64) -> Result<Self> {
        if !hertz.is_finite() || hertz <= 0.0 {
            return Err(Error::Argument(format!(
                "frequency must be positive and finite, got {hertz} Hz"
            )));
        }
        Ok(Self(hertz))
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    /// Angular frequency in rad/s.
    pub fn omega(self) -> f64 {
        2.0 * PI * self.0
    }

    /// Free-space wavelength in meters.
    pub fn wavelength(self) -> f64 {
        C0 / self.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Hz", self.0)
    }
}

/// One Cole-Cole relaxation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColePole {
    pub delta_eps: f64,
    pub tau_s: f64,
    pub alpha: f64,
}

/// Parametric dispersion model of one tissue.
#[derive(Debug, Clone, PartialEq)]
pub struct ColeColeParams {
    eps_inf: f64,
    poles: Vec<ColePole>,
    sigma_ionic: f64,
}

impl ColeColeParams {
    pub const MAX_POLES: usize = 4;

    pub fn new(eps_inf: f64, poles: Vec<ColePole>, sigma_ionic: f64) -> Result<Self> {
        if !eps_inf.is_finite() || eps_inf < 1.0 {
            return Err(Error::Argument(format!("eps_inf must be >= 1, got {eps_inf}")));
        }
        if !sigma_ionic.is_finite() || sigma_ionic < 0.0 {
            return Err(Error::Argument(format!("sigma_ionic must be >= 0, got {sigma_ionic}")));
        }
        if poles.len() > Self::MAX_POLES {
            return Err(Error::Argument(format!(
                "at most {} poles allowed, got {}",
                Self::MAX_POLES,
                poles.len()
            )));
        }
        for (n, p) in poles.iter().enumerate() {
            if !p.delta_eps.is_finite() || p.delta_eps < 0.0 {
                return Err(Error::Argument(format!("pole {n}: delta_eps must be >= 0")));
            }
            if !p.tau_s.is_finite() || p.tau_s <= 0.0 {
                return Err(Error::Argument(format!("pole {n}: tau must be > 0")));
            }
            if !p.alpha.is_finite() || !(0.0..1.0).contains(&p.alpha) {
                return Err(Error::Argument(format!("pole {n}: alpha must be in [0, 1)")));
            }
        }
        Ok(Self {
            eps_inf,
            poles,
            sigma_ionic,
        })
    }

    /// Single Debye relaxation (alpha = 0).
    pub fn debye(eps_inf: f64, delta_eps: f64, tau_s: f64, sigma_ionic: f64) -> Result<Self> {
        Self::new(
            eps_inf,
            vec![ColePole {
                delta_eps,
                tau_s,
                alpha: 0.0,
            }],
            sigma_ionic,
        )
    }

    pub fn eps_inf(&self) -> f64 {
        self.eps_inf
    }

    pub fn poles(&self) -> &[ColePole] {
        &self.poles
    }

    pub fn sigma_ionic(&self) -> f64 {
        self.sigma_ionic
    }

    /// Complex relative permittivity ε̂(ω).
    pub fn relative_permittivity(&self, f: Frequency) -> Complex64 {
        let omega = f.omega();
        let j = Complex64::i();
        let mut eps = Complex64::new(self.eps_inf, 0.0);
        for p in &self.poles {
            // principal branch: (jωτ)^(1−α) = (ωτ)^(1−α) · e^{jπ(1−α)/2}
            let x = Complex64::from_polar((omega * p.tau_s).powf(1.0 - p.alpha), PI / 2.0 * (1.0 - p.alpha));
            eps += p.delta_eps / (1.0 + x);
        }
        eps + self.sigma_ionic / (j * omega * EPS0)
    }
}

/// Real relative permittivity and effective conductivity at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexPermittivity {
    pub eps_r_real: f64,
    pub sigma_eff: f64,
}

impl ComplexPermittivity {
    pub const VACUUM: ComplexPermittivity = ComplexPermittivity {
        eps_r_real: 1.0,
        sigma_eff: 0.0,
    };

    pub fn new(eps_r_real: f64, sigma_eff: f64) -> Result<Self> {
        if !eps_r_real.is_finite() || eps_r_real < 1.0 {
            return Err(Error::Argument(format!("eps_r_real must be >= 1, got {eps_r_real}")));
        }
        if !sigma_eff.is_finite() || sigma_eff < 0.0 {
            return Err(Error::Argument(format!("sigma_eff must be >= 0, got {sigma_eff}")));
        }
        Ok(Self { eps_r_real, sigma_eff })
    }

    /// Complex admittivity σ + jωε₀ε′ᵣ in S/m.
    pub fn admittivity(&self, f: Frequency) -> Complex64 {
        Complex64::new(self.sigma_eff, f.omega() * EPS0 * self.eps_r_real)
    }

    /// Loss tangent σ / (ωε₀ε′ᵣ).
    pub fn loss_tangent(&self, f: Frequency) -> f64 {
        self.sigma_eff / (f.omega() * EPS0 * self.eps_r_real)
    }

    /// Intrinsic impedance η = sqrt(jωμ₀ / (σ + jωε₀ε′ᵣ)), principal root.
    pub fn intrinsic_impedance(&self, f: Frequency) -> Complex64 {
        (Complex64::new(0.0, f.omega() * MU0) / self.admittivity(f)).sqrt()
    }
}

/// Plane-wave propagation constants of a lossy medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationConstants {
    pub alpha_np_per_m: f64,
    pub beta_rad_per_m: f64,
    /// `f64::INFINITY` for a lossless medium; serialized as `"inf"`.
    #[serde(serialize_with = "serialize_skin_depth")]
    pub skin_depth_m: f64,
}

fn serialize_skin_depth<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl PropagationConstants {
    /// Attenuation over `thickness_m` of this medium, in dB.
    pub fn loss_db(&self, thickness_m: f64) -> Result<f64> {
        if !(thickness_m >= 0.0) || !thickness_m.is_finite() {
            return Err(Error::Argument(format!(
                "layer thickness must be finite and >= 0, got {thickness_m}"
            )));
        }
        Ok(NP_TO_DB * self.alpha_np_per_m * thickness_m)
    }
}

/// Evaluates the Cole-Cole model at `f`.
pub fn complex_permittivity(params: &ColeColeParams, f: Frequency) -> Result<ComplexPermittivity> {
    let eps = params.relative_permittivity(f);
    if !eps.re.is_finite() || !eps.im.is_finite() {
        return Err(Error::NumericDomain(format!("non-finite permittivity at {f}: {eps}")));
    }
    Ok(ComplexPermittivity {
        eps_r_real: eps.re,
        sigma_eff: -f.omega() * EPS0 * eps.im,
    })
}

/// Attenuation and phase constants of a plane wave in the medium.
pub fn propagation_constants(eps: &ComplexPermittivity, f: Frequency) -> Result<PropagationConstants> {
    let omega = f.omega();
    let tan_d = eps.loss_tangent(f);
    let root = (1.0 + tan_d * tan_d).sqrt();
    // sqrt(1 + t²) − 1 written as t² / (sqrt(1 + t²) + 1) to avoid cancellation
    let minus = tan_d * tan_d / (root + 1.0);
    let base = MU0 * EPS0 * eps.eps_r_real / 2.0;
    let alpha = omega * (base * minus).sqrt();
    let beta = omega * (base * (root + 1.0)).sqrt();
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::NumericDomain(format!("non-finite propagation constants at {f}")));
    }
    let skin_depth_m = if alpha > 0.0 { 1.0 / alpha } else { f64::INFINITY };
    Ok(PropagationConstants {
        alpha_np_per_m: alpha,
        beta_rad_per_m: beta,
        skin_depth_m,
    })
}

/// Plane-wave attenuation through a layer of the medium, in dB.
pub fn tissue_loss_db(eps: &ComplexPermittivity, f: Frequency, thickness_m: f64) -> Result<f64> {
    propagation_constants(eps, f)?.loss_db(thickness_m)
}

/// Named tissue parameters, loaded from a tissue file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TissueTable {
    tissues: BTreeMap<String, ColeColeParams>,
}

const BUILTIN_TISSUES: &str = include_str!("../data/tissues.txt");

impl TissueTable {
    /// The tissue file shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TISSUES).expect("bundled tissue file is valid")
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN_TISSUES
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::TissueFile {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Parses the line-oriented tissue format; see `data/tissues.txt`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tissues = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::TissueFile { line, message };
            let mut fields = content.split_whitespace();
            let name = fields.next().unwrap_or_default();
            if name.contains('=') {
                return Err(err(format!("record must start with a tissue name, found `{name}`")));
            }
            let mut eps_inf = None;
            let mut sigma_ionic = None;
            let mut poles = Vec::new();
            for field in fields {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected key=value, found `{field}`")))?;
                let number = |s: &str| -> Result<f64> {
                    s.parse::<f64>()
                        .map_err(|_| err(format!("invalid number `{s}` for `{key}`")))
                };
                match key {
                    "eps_inf" => eps_inf = Some(number(value)?),
                    "sigma_ionic" => sigma_ionic = Some(number(value)?),
                    "pole" => {
                        let parts: Vec<&str> = value.split(',').collect();
                        if parts.len() != 3 {
                            return Err(err(format!("pole needs delta_eps,tau_s,alpha, found `{value}`")));
                        }
                        poles.push(ColePole {
                            delta_eps: number(parts[0])?,
                            tau_s: number(parts[1])?,
                            alpha: number(parts[2])?,
                        });
                    }
                    other => return Err(err(format!("unknown key `{other}`"))),
                }
            }
            let eps_inf = eps_inf.ok_or_else(|| err("missing eps_inf".into()))?;
            let sigma_ionic = sigma_ionic.ok_or_else(|| err("missing sigma_ionic".into()))?;
            let params = ColeColeParams::new(eps_inf, poles, sigma_ionic).map_err(|e| match e {
                Error::Argument(m) => err(m),
                other => other,
            })?;
            if tissues.insert(name.to_string(), params).is_some() {
                return Err(err(format!("duplicate tissue `{name}`")));
            }
        }
        Ok(Self { tissues })
    }

    pub fn get(&self, name: &str) -> Result<&ColeColeParams> {
        self.tissues
            .get(name)
            .ok_or_else(|| Error::UnknownTissue(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tissues.keys().map(String::as_str)
    }

    pub fn insert(&mut self, name: impl Into<String>, params: ColeColeParams) {
        self.tissues.insert(name.into(), params);
    }

    pub fn permittivity(&self, name: &str, f: Frequency) -> Result<ComplexPermittivity> {
        complex_permittivity(self.get(name)?, f)
    }
}
