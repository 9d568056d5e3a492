//! `simulate`: path-loss curves for every configured band and both
//! scenarios.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ibob_core::eqs::{hbc_path_loss_sweep, SolveLog};
use ibob_core::measurement::write_pl_csv;
use ibob_core::rf::{freespace_curve, inbody_curve};
use ibob_core::tissue::TissueTable;
use ibob_core::{fom, Frequency, PathLossCurve, Scenario};
use rayon::prelude::*;

use crate::config::{ChannelModel, RunConfig};
use crate::error::{CliError, CliResult};

/// Torso radius scale factors reported by the sensitivity sweep.
pub const TORSO_SCALES: [f64; 3] = [0.7, 1.0, 1.3];

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    /// Overrides the config's output directory.
    pub out_dir: Option<PathBuf>,
    pub allow_model_override: bool,
    /// Also rerun every band with the torso radius scaled by
    /// [`TORSO_SCALES`] and write `torso_sensitivity.csv`.
    pub torso_sensitivity: bool,
}

/// Both scenario curves of one band.
#[derive(Debug, Clone)]
pub struct BandRun {
    pub band: Frequency,
    pub model: ChannelModel,
    pub body: PathLossCurve,
    pub air: PathLossCurve,
    /// Solver records (body, air) for field-solved bands.
    pub logs: Option<(SolveLog, SolveLog)>,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub runs: Vec<BandRun>,
    pub files: Vec<PathBuf>,
}

/// `<band_hz>_<scenario>.csv`
pub fn curve_file_name(band: Frequency, scenario: Scenario) -> String {
    format!("{}_{}.csv", band.hz(), scenario.as_str())
}

/// Band and scenario encoded in a curve file name, if it follows
/// [`curve_file_name`].
pub fn parse_curve_file_name(path: &Path) -> Option<(f64, Scenario)> {
    let stem = path.file_stem()?.to_str()?;
    let (hz, scenario) = stem.split_once('_')?;
    Some((hz.parse().ok()?, scenario.parse().ok()?))
}

fn run_one(
    cfg: &RunConfig,
    tissues: &TissueTable,
    band: Frequency,
    model: ChannelModel,
    scenario: Scenario,
) -> ibob_core::Result<(PathLossCurve, Option<SolveLog>)> {
    let d = &cfg.rx_distances_m;
    match model {
        ChannelModel::Eqs => {
            log::info!("solving {band} {}", scenario.as_str());
            let sweep = hbc_path_loss_sweep(&cfg.hbc(), tissues, d, band, scenario)?;
            log::info!(
                "{band} {}: {} iterations on {:?} voxels",
                scenario.as_str(),
                sweep.log.iterations,
                sweep.dims
            );
            Ok((sweep.curve, Some(sweep.log)))
        }
        ChannelModel::Rf => {
            let curve = match scenario {
                Scenario::InBody => inbody_curve(&cfg.phantom, tissues, band, d, cfg.spreading())?,
                Scenario::FreeSpace => freespace_curve(band, cfg.phantom.implant_depth_m, d, cfg.spreading())?,
            };
            if curve.near_field() {
                log::info!("{band} {}: some samples lie in the near field", scenario.as_str());
            }
            Ok((curve, None))
        }
    }
}

/// Runs every band and scenario. Jobs run in parallel; results come back in
/// config order.
pub fn run_bands(cfg: &RunConfig, tissues: &TissueTable, allow_override: bool) -> CliResult<Vec<BandRun>> {
    let bands = cfg.checked_bands(allow_override)?;
    let jobs: Vec<(Frequency, ChannelModel, Scenario)> = bands
        .iter()
        .flat_map(|&(b, m)| [(b, m, Scenario::InBody), (b, m, Scenario::FreeSpace)])
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(b, m, s)| run_one(cfg, tissues, b, m, s))
        .collect();
    let mut results = results.into_iter();
    let mut runs = Vec::with_capacity(bands.len());
    for (band, model) in bands {
        let (body, body_log) = results.next().expect("one result per job")?;
        let (air, air_log) = results.next().expect("one result per job")?;
        runs.push(BandRun {
            band,
            model,
            body,
            air,
            logs: body_log.zip(air_log),
        });
    }
    Ok(runs)
}

fn write_file(path: PathBuf, bytes: &[u8], files: &mut Vec<PathBuf>) -> CliResult<()> {
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(())
}

/// Runs the configured simulation and writes curve CSVs, a solver log for
/// field-solved bands and, on request, the torso sensitivity table.
pub fn cmd_simulate(cfg: &RunConfig, opts: &SimulateOptions) -> CliResult<SimulateOutput> {
    cfg.validate(opts.allow_model_override)?;
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))?;
    let tissues = cfg.tissues()?;
    let runs = run_bands(cfg, &tissues, opts.allow_model_override)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let mut files = Vec::new();
    let mut solver_log = String::from("band_hz,scenario,distance_m,iterations,final_residual\n");
    for run in &runs {
        for curve in [&run.body, &run.air] {
            let path = out_dir.join(curve_file_name(run.band, curve.scenario()));
            write_file(path, &write_pl_csv(curve), &mut files)?;
        }
        if let Some((body_log, air_log)) = &run.logs {
            for (curve, log) in [(&run.body, body_log), (&run.air, air_log)] {
                for &(d, _) in curve.samples() {
                    let _ = writeln!(
                        solver_log,
                        "{},{},{},{},{:e}",
                        run.band.hz(),
                        curve.scenario().as_str(),
                        d,
                        log.iterations,
                        log.residual
                    );
                }
            }
        }
    }
    if runs.iter().any(|r| r.logs.is_some()) {
        write_file(out_dir.join("solver_log.csv"), solver_log.as_bytes(), &mut files)?;
    }
    if opts.torso_sensitivity {
        let table = torso_sensitivity(cfg, &tissues, &runs, opts.allow_model_override)?;
        write_file(out_dir.join("torso_sensitivity.csv"), table.as_bytes(), &mut files)?;
    }
    Ok(SimulateOutput { runs, files })
}

/// FoM of every band with the torso radius scaled by each of
/// [`TORSO_SCALES`]. `nominal` supplies the unscaled runs.
pub fn torso_sensitivity(
    cfg: &RunConfig,
    tissues: &TissueTable,
    nominal: &[BandRun],
    allow_override: bool,
) -> CliResult<String> {
    let mut out = String::from("torso_scale,torso_radius_m,band_hz,ll_x_db,delta_pl_body_db,fom_db\n");
    for scale in TORSO_SCALES {
        let mut scaled = cfg.clone();
        scaled.phantom.torso.radius_m *= scale;
        scaled.validate(allow_override)?;
        let runs = if scale == 1.0 {
            nominal.to_vec()
        } else {
            log::info!("torso sensitivity run at scale {scale}");
            run_bands(&scaled, tissues, allow_override)?
        };
        for run in &runs {
            let r = fom::evaluate(&run.body, &run.air, &cfg.fom)?;
            let _ = writeln!(
                out,
                "{scale},{},{},{},{},{}",
                scaled.phantom.torso.radius_m,
                run.band.hz(),
                r.ll_x_db,
                r.delta_pl_body_db,
                r.fom_db
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_round_trip() {
        let f = Frequency::new(2.4e9).unwrap();
        let name = curve_file_name(f, Scenario::FreeSpace);
        assert_eq!(name, "2400000000_free_space.csv");
        assert_eq!(
            parse_curve_file_name(Path::new(&name)),
            Some((2.4e9, Scenario::FreeSpace))
        );
        assert_eq!(parse_curve_file_name(Path::new("notes.csv")), None);
    }
}
