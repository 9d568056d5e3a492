//! `fom` and `compare`: figure-of-merit reports from curve files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ibob_core::fom::{evaluate, rank_bands};
use ibob_core::measurement::parse_pl_csv_with;
use ibob_core::{Error, FomParams, FomReport, Frequency, PathLossCurve, Scenario};

use crate::error::{CliError, CliResult};
use crate::simulate::{curve_file_name, parse_curve_file_name};
use crate::svg;

#[derive(Debug, Clone)]
pub struct FomArgs {
    pub body: PathBuf,
    pub air: PathBuf,
    pub x_m: f64,
    pub w_ll: f64,
    pub w_dpl: f64,
    /// Read the loss columns as signal levels and negate them.
    pub negate: bool,
    /// Band of both files. Taken from the `<band_hz>_` file name prefix
    /// when absent.
    pub band_hz: Option<f64>,
    /// Report destination; `<band_hz>_fom.csv` next to the body file by
    /// default.
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn resolve_band(args: &FomArgs) -> CliResult<Frequency> {
    if let Some(hz) = args.band_hz {
        return Ok(Frequency::new(hz)?);
    }
    let named = |p: &Path| parse_curve_file_name(p).map(|(hz, _)| hz);
    match (named(&args.body), named(&args.air)) {
        (Some(a), Some(b)) if a == b => Ok(Frequency::new(a)?),
        (Some(a), Some(b)) => Err(Error::Pairing(format!("body file is at {a} Hz but air file is at {b} Hz")).into()),
        _ => Err(CliError::Config(
            "cannot tell the band from the file names; pass --band-hz".into(),
        )),
    }
}

/// Reads a body/air curve pair and computes its report.
pub fn fom_from_files(args: &FomArgs) -> CliResult<FomReport> {
    let band = resolve_band(args)?;
    let body = parse_pl_csv_with(&read(&args.body)?, band, Scenario::InBody, args.negate)?;
    let air = parse_pl_csv_with(&read(&args.air)?, band, Scenario::FreeSpace, args.negate)?;
    let params = FomParams {
        eval_distance_x_m: args.x_m,
        w_ll: args.w_ll,
        w_dpl: args.w_dpl,
    };
    Ok(evaluate(&body, &air, &params)?)
}

/// Computes the report, writes it and returns it with the path written.
pub fn cmd_fom(args: &FomArgs) -> CliResult<(FomReport, PathBuf)> {
    let report = fom_from_files(args)?;
    let out = args.out.clone().unwrap_or_else(|| {
        args.body
            .parent()
            .unwrap_or(Path::new("."))
            .join(format!("{}_fom.csv", report.band.hz()))
    });
    std::fs::write(&out, FomReport::to_csv(&[report])).map_err(|e| CliError::io(&out, e))?;
    Ok((report, out))
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub ranked: Vec<FomReport>,
    pub table: String,
    pub bar_svg: PathBuf,
    pub line_svg: PathBuf,
}

/// Fixed-width ranking table, best band first.
pub fn ranking_table(ranked: &[FomReport]) -> String {
    let mut t = format!(
        "{:>4}  {:>12}  {:>7}  {:>10}  {:>10}  {:>10}  {:>13}\n",
        "rank", "band", "x_m", "ll_x_db", "dpl_db", "fom_db", "weighted_db"
    );
    for (n, r) in ranked.iter().enumerate() {
        let _ = writeln!(
            t,
            "{:>4}  {:>12}  {:>7.3}  {:>10.2}  {:>10.2}  {:>10.2}  {:>13.2}",
            n + 1,
            svg::band_label(r.band.hz()),
            r.eval_distance_x_m,
            r.ll_x_db,
            r.delta_pl_body_db,
            r.fom_db,
            r.weighted_fom_db
        );
    }
    t
}

/// Curve files for `bands` found next to the report files.
fn discover_curves(reports: &[PathBuf], bands: &[Frequency]) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = Vec::new();
    for r in reports {
        let dir = r.parent().unwrap_or(Path::new("."));
        for &b in bands {
            for s in [Scenario::InBody, Scenario::FreeSpace] {
                let p = dir.join(curve_file_name(b, s));
                if p.is_file() && !out.contains(&p) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn load_curve(path: &Path) -> CliResult<PathLossCurve> {
    let (hz, scenario) = parse_curve_file_name(path).ok_or_else(|| {
        CliError::Config(format!(
            "{}: curve files must be named <band_hz>_<scenario>.csv",
            path.display()
        ))
    })?;
    Ok(parse_pl_csv_with(&read(path)?, Frequency::new(hz)?, scenario, false)?)
}

/// Ranks the bands in `reports`, prints nothing, writes `fom_bars.svg` and
/// `path_loss.svg` into `svg_dir`.
///
/// Curves for the line chart come from `curves`, or when that is empty from
/// `<band_hz>_<scenario>.csv` files beside the reports.
pub fn cmd_compare(reports: &[PathBuf], svg_dir: &Path, curves: &[PathBuf]) -> CliResult<CompareOutput> {
    let mut all = Vec::new();
    for p in reports {
        let text =
            String::from_utf8(read(p)?).map_err(|_| CliError::Config(format!("{}: not valid UTF-8", p.display())))?;
        all.extend(FomReport::parse_csv(&text)?);
    }
    if all.len() < 2 {
        return Err(Error::Argument(format!("compare needs at least 2 reports, got {}", all.len())).into());
    }
    let ranked = rank_bands(&all)?;
    let bands: Vec<Frequency> = ranked.iter().map(|r| r.band).collect();
    let curve_files = if curves.is_empty() {
        discover_curves(reports, &bands)
    } else {
        curves.to_vec()
    };
    let mut loaded = Vec::new();
    for p in &curve_files {
        loaded.push(load_curve(p)?);
    }
    std::fs::create_dir_all(svg_dir).map_err(|e| CliError::io(svg_dir, e))?;
    let bar_svg = svg_dir.join("fom_bars.svg");
    let line_svg = svg_dir.join("path_loss.svg");
    std::fs::write(&bar_svg, svg::bar_chart(&ranked)).map_err(|e| CliError::io(&bar_svg, e))?;
    std::fs::write(&line_svg, svg::line_chart(&loaded)).map_err(|e| CliError::io(&line_svg, e))?;
    Ok(CompareOutput {
        table: ranking_table(&ranked),
        ranked,
        bar_svg,
        line_svg,
    })
}
