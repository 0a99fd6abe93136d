//! Log-log SVG plots of one trajectory with its fitted power law and the
//! predicted-slope guide line. Output bytes depend only on the inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sobodecay::fit::{fit_exponent, DecayFit, NormTrajectory, SampleFlag};

use crate::output::read_trajectories;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;

/// Predicted exponent and the time window it applies to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guide {
    pub exponent: f64,
    pub window: [f64; 2],
}

struct Axes {
    x: [f64; 2],
    y: [f64; 2],
}

impl Axes {
    fn px(&self, lx: f64) -> f64 {
        MARGIN + (lx - self.x[0]) / (self.x[1] - self.x[0]) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, ly: f64) -> f64 {
        HEIGHT - MARGIN - (ly - self.y[0]) / (self.y[1] - self.y[0]) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `traj` against `1+t` on log axes. Non-positive values and
/// flagged samples are not drawn.
pub fn render_svg(traj: &NormTrajectory, fit: Option<&DecayFit>, guide: Option<Guide>) -> Result<String, String> {
    let pts: Vec<(f64, f64)> = traj
        .samples()
        .iter()
        .filter(|s| s.flag == SampleFlag::Ok && s.value > 0.0 && s.value.is_finite())
        .map(|s| (s.t.ln_1p() / std::f64::consts::LN_10, s.value.log10()))
        .collect();
    if pts.is_empty() {
        return Err(format!("trajectory `{}` has no plottable samples", traj.quantity));
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(f64, f64)) -> f64| pts.iter().map(sel).fold(init, f);
    let mut axes = Axes {
        x: [fold(f64::min, f64::INFINITY, |p| p.0), fold(f64::max, f64::NEG_INFINITY, |p| p.0)],
        y: [fold(f64::min, f64::INFINITY, |p| p.1), fold(f64::max, f64::NEG_INFINITY, |p| p.1)],
    };
    for r in [&mut axes.x, &mut axes.y] {
        if r[1] - r[0] < 1e-9 {
            r[0] -= 0.5;
            r[1] += 0.5;
        }
    }

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .unwrap();
    writeln!(w, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>").unwrap();
    writeln!(
        w,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{} ({})</text>",
        WIDTH / 2.0,
        escape(&traj.quantity),
        escape(&traj.label)
    )
    .unwrap();
    writeln!(
        w,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )
    .unwrap();
    for (i, &lx) in axes.x.iter().enumerate() {
        let anchor = if i == 0 { "start" } else { "end" };
        writeln!(
            w,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">1+t = 1e{lx:.2}</text>",
            axes.px(lx),
            HEIGHT - MARGIN + 16.0
        )
        .unwrap();
    }
    for &ly in &axes.y {
        writeln!(
            w,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{ly:.2}</text>",
            MARGIN - 4.0,
            axes.py(ly) + 4.0
        )
        .unwrap();
    }

    let mut path = String::new();
    for (i, &(lx, ly)) in pts.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        write!(path, "{cmd}{:.2},{:.2} ", axes.px(lx), axes.py(ly)).unwrap();
    }
    writeln!(w, "<path d=\"{}\" fill=\"none\" stroke=\"#1f4e9a\" stroke-width=\"1.5\"/>", path.trim_end()).unwrap();
    for &(lx, ly) in &pts {
        writeln!(w, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"#1f4e9a\"/>", axes.px(lx), axes.py(ly)).unwrap();
    }

    let mut legend_y = MARGIN + 16.0;
    if let Some(f) = fit {
        // ln value = intercept + exponent·ln(1+t), so the slope is the same in log10 units.
        let x0 = (f.window[0].ln_1p() / std::f64::consts::LN_10).max(axes.x[0]);
        let x1 = (f.window[1].ln_1p() / std::f64::consts::LN_10).min(axes.x[1]);
        let at = |lx: f64| (f.intercept + f.exponent * lx * std::f64::consts::LN_10) / std::f64::consts::LN_10;
        writeln!(
            w,
            "<line class=\"fit\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>",
            axes.px(x0),
            axes.py(at(x0)),
            axes.px(x1),
            axes.py(at(x1))
        )
        .unwrap();
        writeln!(
            w,
            "<text class=\"fit-slope\" x=\"{:.2}\" y=\"{legend_y:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#c0392b\" text-anchor=\"end\">fitted slope {:.6}</text>",
            WIDTH - MARGIN - 8.0,
            f.exponent
        )
        .unwrap();
        legend_y += 16.0;
    }
    if let Some(g) = guide {
        // Anchored at the first sample inside the guide window.
        let anchor = traj
            .samples()
            .iter()
            .find(|s| s.flag == SampleFlag::Ok && s.value > 0.0 && s.t >= g.window[0])
            .or_else(|| traj.samples().iter().find(|s| s.flag == SampleFlag::Ok && s.value > 0.0));
        if let Some(a) = anchor {
            let ax = a.t.ln_1p() / std::f64::consts::LN_10;
            let ay = a.value.log10();
            let x1 = (g.window[1].ln_1p() / std::f64::consts::LN_10).min(axes.x[1]).max(ax);
            writeln!(
                w,
                "<line class=\"predicted\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#555555\" stroke-dasharray=\"6 4\"/>",
                axes.px(ax),
                axes.py(ay),
                axes.px(x1),
                axes.py(ay + g.exponent * (x1 - ax))
            )
            .unwrap();
            writeln!(
                w,
                "<text class=\"predicted-slope\" x=\"{:.2}\" y=\"{legend_y:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#555555\" text-anchor=\"end\">predicted slope {:.6}</text>",
                WIDTH - MARGIN - 8.0,
                g.exponent
            )
            .unwrap();
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn file_stem(quantity: &str) -> String {
    quantity
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn guide_from_record(run_dir: &Path, quantity: &str) -> Option<Guide> {
    let text = std::fs::read(run_dir.join("record.json")).ok()?;
    let rec: Value = serde_json::from_slice(&text).ok()?;
    let p = rec["predictions"].as_array()?.iter().find(|p| p["quantity"] == quantity)?;
    Some(Guide {
        exponent: p["exponent"].as_f64()?,
        window: [p["window"][0].as_f64()?, p["window"][1].as_f64()?],
    })
}

/// Writes `plot_<quantity>.svg` into `run_dir` and returns its path. The
/// fit uses the predicted window from `record.json` when there is one.
pub fn emit_plot(run_dir: &Path, quantity: &str) -> Result<PathBuf, String> {
    let trajs = read_trajectories(&run_dir.join("trajectories.csv"))?;
    let Some(traj) = trajs.iter().find(|t| t.quantity == quantity) else {
        let mut names: Vec<&str> = trajs.iter().map(|t| t.quantity.as_str()).collect();
        names.dedup();
        return Err(format!(
            "no quantity `{quantity}` in {}; available: {}",
            run_dir.display(),
            if names.is_empty() { "none".to_string() } else { names.join(", ") }
        ));
    };
    if traj.is_empty() {
        return Err(format!("trajectory `{quantity}` is empty"));
    }
    let guide = guide_from_record(run_dir, quantity);
    let window = guide.map(|g| g.window).unwrap_or([0.0, f64::INFINITY]);
    let fit = fit_exponent(traj, window).ok();
    let svg = render_svg(traj, fit.as_ref(), guide)?;
    let path = run_dir.join(format!("plot_{}.svg", file_stem(quantity)));
    std::fs::write(&path, svg).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}
