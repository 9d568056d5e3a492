//! Run configuration, read from TOML.
//!
//! Every dimensional key carries its unit in the name (`_m`, `_hz`, `_v`).
//! Missing blocks fall back to the documented defaults.

use std::path::{Path, PathBuf};

use ibob_core::eqs::{GridSpec, HbcSweepConfig, SolverSettings};
use ibob_core::phantom::{capacitive_rx, galvanic_tx, PhantomModel};
use ibob_core::rf::{Spreading, RF_FLOOR_HZ};
use ibob_core::tissue::TissueTable;
use ibob_core::{curve, FomParams, Frequency};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Quasi-static field solve.
    Eqs,
    /// Layered analytic RF model.
    Rf,
}

impl ChannelModel {
    /// Model a band uses unless overridden.
    pub fn natural(band: Frequency) -> Self {
        if band.hz() < RF_FLOOR_HZ {
            ChannelModel::Eqs
        } else {
            ChannelModel::Rf
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelModel::Eqs => "eqs",
            ChannelModel::Rf => "rf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub frequency_hz: f64,
    pub model: ChannelModel,
}

/// Electrode sizes for the HBC couplers.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplerConfig {
    pub tx_electrode_size_m: f64,
    pub tx_separation_m: f64,
    pub excitation_v: f64,
    pub rx_electrode_size_m: f64,
}

impl Default for CouplerConfig {
    fn default() -> Self {
        Self {
            tx_electrode_size_m: 0.01,
            tx_separation_m: 0.02,
            excitation_v: 1.0,
            rx_electrode_size_m: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    /// Defaults to Friis referenced to the skin, see [`Spreading::for_phantom`].
    pub spreading: Option<Spreading>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub phantom: PhantomModel,
    pub bands: Vec<BandConfig>,
    pub rx_distances_m: Vec<f64>,
    pub fom: FomParams,
    pub solver: SolverSettings,
    pub grid: GridSpec,
    pub coupler: CouplerConfig,
    pub rf: RfConfig,
    /// Tissue parameter file; the built-in table when absent.
    pub tissue_file: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let band = |frequency_hz, model| BandConfig { frequency_hz, model };
        Self {
            phantom: PhantomModel::default(),
            bands: vec![
                band(21e6, ChannelModel::Eqs),
                band(400e6, ChannelModel::Rf),
                band(900e6, ChannelModel::Rf),
                band(2.4e9, ChannelModel::Rf),
            ],
            rx_distances_m: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6],
            fom: FomParams::default(),
            solver: SolverSettings::default(),
            grid: GridSpec::default(),
            coupler: CouplerConfig::default(),
            rf: RfConfig::default(),
            tissue_file: None,
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Parses TOML text. Relative paths inside are resolved against
    /// `base_dir` when given.
    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> CliResult<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(base) = base_dir {
            for p in [&mut cfg.tissue_file, &mut cfg.output_dir].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path.parent())
    }

    /// Bands in config order, checked against their models.
    ///
    /// A band run on the other model than its natural one is refused unless
    /// `allow_override` is set, and then only warned about.
    pub fn checked_bands(&self, allow_override: bool) -> CliResult<Vec<(Frequency, ChannelModel)>> {
        if self.bands.is_empty() {
            return Err(CliError::Config("no bands configured".into()));
        }
        let mut out: Vec<(Frequency, ChannelModel)> = Vec::new();
        for b in &self.bands {
            let f = Frequency::new(b.frequency_hz)?;
            if out.iter().any(|(g, _)| *g == f) {
                return Err(CliError::Config(format!("band {f} is listed more than once")));
            }
            let natural = ChannelModel::natural(f);
            if b.model != natural {
                if !allow_override {
                    return Err(CliError::Config(format!(
                        "band {f} is mapped to {} but belongs to {}; pass --allow-model-override to force it",
                        b.model.as_str(),
                        natural.as_str()
                    )));
                }
                log::warn!("band {f} forced onto the {} model", b.model.as_str());
            }
            out.push((f, b.model));
        }
        Ok(out)
    }

    pub fn validate(&self, allow_override: bool) -> CliResult<()> {
        self.phantom.validate()?;
        self.solver.validate()?;
        self.fom.validate()?;
        curve::check_distances(&self.rx_distances_m)?;
        let last = self.rx_distances_m[self.rx_distances_m.len() - 1];
        if self.fom.eval_distance_x_m > last {
            return Err(CliError::Config(format!(
                "fom.eval_distance_x_m = {} lies beyond the last receiver distance {last}",
                self.fom.eval_distance_x_m
            )));
        }
        if !(self.grid.spacing_m > 0.0 && self.grid.spacing_m.is_finite()) {
            return Err(CliError::Config("grid.spacing_m must be > 0".into()));
        }
        self.tx().validate()?;
        self.rx().validate()?;
        self.checked_bands(allow_override)?;
        Ok(())
    }

    pub fn tissues(&self) -> CliResult<TissueTable> {
        match &self.tissue_file {
            Some(p) => Ok(TissueTable::load(p)?),
            None => Ok(TissueTable::builtin()),
        }
    }

    pub fn tx(&self) -> ibob_core::phantom::CouplerSpec {
        let c = &self.coupler;
        galvanic_tx(&self.phantom, c.tx_electrode_size_m, c.tx_separation_m, c.excitation_v)
    }

    pub fn rx(&self) -> ibob_core::phantom::CouplerSpec {
        capacitive_rx(&self.phantom, self.coupler.rx_electrode_size_m)
    }

    pub fn hbc(&self) -> HbcSweepConfig {
        HbcSweepConfig {
            phantom: self.phantom.clone(),
            tx: self.tx(),
            rx: self.rx(),
            grid: self.grid,
            settings: self.solver,
        }
    }

    pub fn spreading(&self) -> Spreading {
        self.rf
            .spreading
            .unwrap_or_else(|| Spreading::for_phantom(&self.phantom))
    }
}
