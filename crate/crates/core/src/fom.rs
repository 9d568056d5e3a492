//! Leakage loss, body excess loss and the figure of merit.
//!
//! Curves hold positive path loss. Under that convention
//!
//! - `LL_X = PL(X) - PL(0)`: how much the signal decays between the skin and
//!   an eavesdropper at `X`. Higher is more secure.
//! - `ΔPL_body = PL_body(0) - PL_air(0)`: extra loss the body adds next to
//!   the skin. Negative means the body helps. Lower needs less power.
//! - `FoM = LL_X - ΔPL_body`. Higher is better.
//!
//! Written on received signal levels (the negated losses) these are the
//! familiar `PL_0 - PL_X` and `PL_0,air - PL_0,body`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::curve::PathLossCurve;
use crate::error::{Error, Result};
use crate::phantom::Scenario;
use crate::tissue::Frequency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FomParams {
    /// Eavesdropper distance `X` from the skin.
    pub eval_distance_x_m: f64,
    pub w_ll: f64,
    pub w_dpl: f64,
}

impl Default for FomParams {
    fn default() -> Self {
        Self {
            eval_distance_x_m: 0.5,
            w_ll: 1.0,
            w_dpl: 1.0,
        }
    }
}

impl FomParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eval_distance_x_m >= 0.0 && self.eval_distance_x_m.is_finite()) {
            return Err(Error::Argument(format!(
                "evaluation distance {} must be finite and >= 0",
                self.eval_distance_x_m
            )));
        }
        check_weights(self.w_ll, self.w_dpl)
    }
}

fn check_weights(w_ll: f64, w_dpl: f64) -> Result<()> {
    if !(w_ll >= 0.0 && w_dpl >= 0.0 && w_ll.is_finite() && w_dpl.is_finite()) {
        return Err(Error::Argument(format!(
            "weights ({w_ll}, {w_dpl}) must be finite and >= 0"
        )));
    }
    if w_ll == 0.0 && w_dpl == 0.0 {
        return Err(Error::Argument("weights must not both be zero".into()));
    }
    Ok(())
}

/// Figure of merit for one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomReport {
    pub band: Frequency,
    pub eval_distance_x_m: f64,
    pub ll_x_db: f64,
    pub delta_pl_body_db: f64,
    pub fom_db: f64,
    pub weighted_fom_db: f64,
    pub w_ll: f64,
    pub w_dpl: f64,
}

pub const REPORT_HEADER: &str = "band_hz,x_m,ll_x_db,delta_pl_body_db,fom_db,weighted_fom_db,w_ll,w_dpl";

impl FomReport {
    /// One CSV row, without newline. Numbers use the shortest form that
    /// parses back to the same value.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.band.hz(),
            self.eval_distance_x_m,
            self.ll_x_db,
            self.delta_pl_body_db,
            self.fom_db,
            self.weighted_fom_db,
            self.w_ll,
            self.w_dpl
        )
    }

    /// Header and one row per report, newline-terminated.
    pub fn to_csv(reports: &[FomReport]) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    /// Parses a report file written by [`FomReport::to_csv`].
    pub fn parse_csv(text: &str) -> Result<Vec<FomReport>> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == REPORT_HEADER => {}
            _ => {
                return Err(Error::Format {
                    line: 1,
                    message: format!("expected header `{REPORT_HEADER}`"),
                })
            }
        }
        let mut out = Vec::new();
        for (n, line) in lines {
            let row = n + 1;
            let v: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format {
                    line: row,
                    message: e.to_string(),
                })?;
            if v.len() != 8 {
                return Err(Error::Format {
                    line: row,
                    message: format!("expected 8 fields, found {}", v.len()),
                });
            }
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::Value {
                    row,
                    message: format!("{bad} is not finite"),
                });
            }
            out.push(FomReport {
                band: Frequency::new(v[0])?,
                eval_distance_x_m: v[1],
                ll_x_db: v[2],
                delta_pl_body_db: v[3],
                fom_db: v[4],
                weighted_fom_db: v[5],
                w_ll: v[6],
                w_dpl: v[7],
            });
        }
        if out.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(out)
    }
}

/// Loss at `x_m` by linear interpolation between samples. Exact at sample
/// points; never extrapolates.
pub fn path_loss_at(curve: &PathLossCurve, x_m: f64) -> Result<f64> {
    let s = curve.samples();
    let (min_m, max_m) = curve
        .distance_range()
        .ok_or_else(|| Error::Curve("curve has no samples".into()))?;
    if !(x_m >= min_m && x_m <= max_m) {
        return Err(Error::Extrapolation { x_m, min_m, max_m });
    }
    let i = s.partition_point(|&(d, _)| d < x_m);
    let (d1, l1) = s[i];
    if d1 == x_m {
        return Ok(l1);
    }
    let (d0, l0) = s[i - 1];
    Ok(l0 + (l1 - l0) * (x_m - d0) / (d1 - d0))
}

fn loss_at_zero(curve: &PathLossCurve) -> Result<f64> {
    if !curve.starts_at_zero() {
        return Err(Error::Curve(format!(
            "{} {} curve has no distance-0 sample",
            curve.band(),
            curve.scenario().as_str()
        )));
    }
    Ok(curve.samples()[0].1)
}

/// `LL_X = PL(X) - PL(0)`.
pub fn leakage_loss(curve: &PathLossCurve, x_m: f64) -> Result<f64> {
    let pl0 = loss_at_zero(curve)?;
    Ok(path_loss_at(curve, x_m)? - pl0)
}

/// `ΔPL_body = PL_body(0) - PL_air(0)` for curves of the same band.
pub fn delta_pl_body(body: &PathLossCurve, air: &PathLossCurve) -> Result<f64> {
    if body.band() != air.band() {
        return Err(Error::Pairing(format!(
            "body curve is at {} but air curve is at {}",
            body.band(),
            air.band()
        )));
    }
    if body.scenario() != Scenario::InBody || air.scenario() != Scenario::FreeSpace {
        return Err(Error::Pairing(format!(
            "expected (in_body, free_space) curves, got ({}, {})",
            body.scenario().as_str(),
            air.scenario().as_str()
        )));
    }
    Ok(loss_at_zero(body)? - loss_at_zero(air)?)
}

pub fn fom(ll_x_db: f64, dpl_db: f64) -> f64 {
    ll_x_db - dpl_db
}

pub fn weighted_fom(ll_x_db: f64, dpl_db: f64, w_ll: f64, w_dpl: f64) -> Result<f64> {
    check_weights(w_ll, w_dpl)?;
    Ok(w_ll * ll_x_db - w_dpl * dpl_db)
}

/// Full report for a body/air curve pair.
pub fn evaluate(body: &PathLossCurve, air: &PathLossCurve, params: &FomParams) -> Result<FomReport> {
    params.validate()?;
    let dpl = delta_pl_body(body, air)?;
    let ll = leakage_loss(body, params.eval_distance_x_m)?;
    Ok(FomReport {
        band: body.band(),
        eval_distance_x_m: params.eval_distance_x_m,
        ll_x_db: ll,
        delta_pl_body_db: dpl,
        fom_db: fom(ll, dpl),
        weighted_fom_db: weighted_fom(ll, dpl, params.w_ll, params.w_dpl)?,
        w_ll: params.w_ll,
        w_dpl: params.w_dpl,
    })
}

/// Reports sorted best first by weighted FoM, which equals the plain FoM
/// for unit weights. Ties go to the lower frequency.
pub fn rank_bands(reports: &[FomReport]) -> Result<Vec<FomReport>> {
    if reports.is_empty() {
        return Err(Error::Argument("no reports to rank".into()));
    }
    let mut seen = HashSet::new();
    for r in reports {
        if !seen.insert(r.band.hz().to_bits()) {
            return Err(Error::Pairing(format!("band {} appears more than once", r.band)));
        }
    }
    let mut out = reports.to_vec();
    out.sort_by(|a, b| {
        b.weighted_fom_db
            .total_cmp(&a.weighted_fom_db)
            .then_with(|| a.band.hz().total_cmp(&b.band.hz()))
    });
    Ok(out)
}
