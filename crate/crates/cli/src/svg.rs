//! Hand-written SVG charts. Coordinates are printed with two decimals so the
//! output is identical for identical inputs.

use std::fmt::Write as _;

use ibob_core::{FomReport, PathLossCurve, Scenario};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6a4c93", "#00798c"];

/// "21 MHz", "2.4 GHz", ...
pub fn band_label(hz: f64) -> String {
    let (v, unit) = if hz >= 1e9 {
        (hz / 1e9, "GHz")
    } else if hz >= 1e6 {
        (hz / 1e6, "MHz")
    } else if hz >= 1e3 {
        (hz / 1e3, "kHz")
    } else {
        (hz, "Hz")
    };
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s} {unit}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions covering `[lo, hi]` with a 1-2-5 step.
fn ticks(lo: f64, hi: f64) -> (f64, f64, f64) {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let lo = (lo / step).floor() * step;
    let mut hi = (hi / step).ceil() * step;
    if hi <= lo {
        hi = lo + step;
    }
    (lo, hi, step)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<!-- ibob {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text class=\"title\" x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn y_axis(out: &mut String, f: &Frame, step: f64, label: &str) {
    let mut v = f.y0;
    while v <= f.y1 + step * 1e-9 {
        let y = f.py(v);
        let _ = writeln!(
            out,
            "<line x1=\"{LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            WIDTH - RIGHT
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            y + 4.0,
            trim_num(v)
        );
        v += step;
    }
    let _ = writeln!(
        out,
        "<line x1=\"{LEFT:.2}\" y1=\"{TOP:.2}\" x2=\"{LEFT:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        HEIGHT - BOTTOM
    );
    let cy = (TOP + HEIGHT - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        "<text class=\"axis-label\" x=\"20\" y=\"{cy:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {cy:.2})\">{}</text>",
        escape(label)
    );
}

fn x_label(out: &mut String, label: &str) {
    let _ = writeln!(
        out,
        "<text class=\"axis-label\" x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (WIDTH - RIGHT + LEFT) / 2.0,
        HEIGHT - 20.0,
        escape(label)
    );
}

fn trim_num(v: f64) -> String {
    let s = format!("{:.6}", v + 0.0);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// One bar per report, in the given order, labeled with its FoM in dB.
pub fn bar_chart(reports: &[FomReport]) -> String {
    let lo = reports.iter().map(|r| r.fom_db).fold(0.0, f64::min);
    let hi = reports.iter().map(|r| r.fom_db).fold(0.0, f64::max);
    let (y0, y1, step) = ticks(lo, hi);
    let f = Frame {
        x0: 0.0,
        x1: reports.len().max(1) as f64,
        y0,
        y1,
    };
    let x_m = reports.first().map_or(0.0, |r| r.eval_distance_x_m);
    let mut out = String::new();
    open(&mut out, &format!("Figure of merit at X = {} m", trim_num(x_m)));
    y_axis(&mut out, &f, step, "FoM (dB)");
    let zero = f.py(0.0);
    let _ = writeln!(
        out,
        "<line x1=\"{LEFT:.2}\" y1=\"{zero:.2}\" x2=\"{:.2}\" y2=\"{zero:.2}\" stroke=\"black\"/>",
        WIDTH - RIGHT
    );
    for (n, r) in reports.iter().enumerate() {
        let left = f.px(n as f64 + 0.2);
        let right = f.px(n as f64 + 0.8);
        let top = f.py(r.fom_db.max(0.0));
        let bottom = f.py(r.fom_db.min(0.0));
        let _ = writeln!(
            out,
            "<rect class=\"bar\" data-band-hz=\"{}\" x=\"{left:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            r.band.hz(),
            right - left,
            bottom - top,
            PALETTE[n % PALETTE.len()]
        );
        let label_y = if r.fom_db >= 0.0 { top - 6.0 } else { bottom + 14.0 };
        let cx = (left + right) / 2.0;
        let _ = writeln!(
            out,
            "<text class=\"value\" x=\"{cx:.2}\" y=\"{label_y:.2}\" text-anchor=\"middle\">{:.2} dB</text>",
            r.fom_db
        );
        let _ = writeln!(
            out,
            "<text class=\"band\" x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            HEIGHT - BOTTOM + 18.0,
            band_label(r.band.hz())
        );
    }
    x_label(&mut out, "band");
    out.push_str("</svg>\n");
    out
}

/// Overlay of path-loss curves: solid for in-body, dashed for free space,
/// one color per band.
pub fn line_chart(curves: &[PathLossCurve]) -> String {
    let pts = curves.iter().flat_map(|c| c.samples().iter().copied());
    let (mut dmax, mut lmin, mut lmax) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for (d, l) in pts {
        dmax = dmax.max(d);
        lmin = lmin.min(l);
        lmax = lmax.max(l);
    }
    if !lmin.is_finite() {
        (lmin, lmax) = (0.0, 1.0);
    }
    let (x0, x1, xstep) = ticks(0.0, dmax);
    let (y0, y1, ystep) = ticks(lmin, lmax);
    let f = Frame { x0, x1, y0, y1 };
    let mut out = String::new();
    open(&mut out, "Path loss versus distance from body");
    y_axis(&mut out, &f, ystep, "path loss (dB)");
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(
        out,
        "<line x1=\"{LEFT:.2}\" y1=\"{base:.2}\" x2=\"{:.2}\" y2=\"{base:.2}\" stroke=\"black\"/>",
        WIDTH - RIGHT
    );
    let mut v = x0;
    while v <= x1 + xstep * 1e-9 {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            f.px(v),
            base + 18.0,
            trim_num(v)
        );
        v += xstep;
    }
    x_label(&mut out, "distance from body (m)");

    let mut bands: Vec<f64> = Vec::new();
    for c in curves {
        if !bands.contains(&c.band().hz()) {
            bands.push(c.band().hz());
        }
    }
    for (n, c) in curves.iter().enumerate() {
        let color = PALETTE[bands.iter().position(|&b| b == c.band().hz()).unwrap_or(0) % PALETTE.len()];
        let dash = match c.scenario() {
            Scenario::InBody => "",
            Scenario::FreeSpace => " stroke-dasharray=\"6 4\"",
        };
        let points: Vec<String> = c
            .samples()
            .iter()
            .map(|&(d, l)| format!("{:.2},{:.2}", f.px(d), f.py(l)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline class=\"curve\" data-band-hz=\"{}\" data-scenario=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash} points=\"{}\"/>",
            c.band().hz(),
            c.scenario().as_str(),
            points.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * n as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            lx + 24.0
        );
        let _ = writeln!(
            out,
            "<text class=\"legend\" x=\"{:.2}\" y=\"{:.2}\">{} {}</text>",
            lx + 30.0,
            ly + 4.0,
            band_label(c.band().hz()),
            c.scenario().as_str().replace('_', " ")
        );
    }
    out.push_str("</svg>\n");
    out
}
