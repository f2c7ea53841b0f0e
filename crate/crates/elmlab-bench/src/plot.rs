//! SVG rendering of prediction-vs-truth overlays. Output bytes are a pure
//! function of the manifest's prediction artifact, so repeated runs of the
//! same experiment produce identical plots.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use crate::manifest::{self, RunManifest};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 48.0;
const TRUTH_COLOR: &str = "#2460a7";
const PRED_COLOR: &str = "#c0392b";

struct Series {
    x: Vec<f64>,
    truth: Vec<f64>,
    pred: Vec<f64>,
}

fn read_predictions(run: &RunManifest) -> Result<Series> {
    let path = run.artifact_path("predictions.csv");
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("x,f_true,f_pred") => {}
        other => bail!(
            "unexpected predictions header {other:?} in {}",
            path.display()
        ),
    }
    let mut series = Series {
        x: Vec::new(),
        truth: Vec::new(),
        pred: Vec::new(),
    };
    for (lineno, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<f64> {
            let raw = fields
                .next()
                .with_context(|| format!("line {}: missing {name}", lineno + 2))?;
            let v: f64 = raw
                .parse()
                .with_context(|| format!("line {}: bad {name} value {raw:?}", lineno + 2))?;
            if !v.is_finite() {
                bail!("line {}: non-finite {name}", lineno + 2);
            }
            Ok(v)
        };
        series.x.push(next("x")?);
        series.truth.push(next("f_true")?);
        series.pred.push(next("f_pred")?);
    }
    if series.x.is_empty() {
        bail!("no data rows in {}", path.display());
    }
    Ok(series)
}

fn minmax(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, color: &str, dash: Option<&str>) -> String {
    let coords: Vec<String> = points.map(|(px, py)| format!("{px:.2},{py:.2}")).collect();
    let dash_attr = dash.map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
    format!(
        "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash_attr} points=\"{}\"/>\n",
        coords.join(" ")
    )
}

/// Renders `plot.svg` next to the manifest's other artifacts: the target
/// function and the median-seed prediction as two overlaid polylines.
pub fn emit_plot(run: &RunManifest) -> Result<PathBuf> {
    let series = read_predictions(run)?;
    let (x_lo, x_hi) = minmax(series.x.iter().copied());
    let (mut y_lo, mut y_hi) = minmax(series.truth.iter().chain(&series.pred).copied());
    let y_pad = 0.05 * (y_hi - y_lo).max(1e-9);
    y_lo -= y_pad;
    y_hi += y_pad;
    let x_span = (x_hi - x_lo).max(1e-9);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64| MARGIN_LEFT + (x - x_lo) / x_span * plot_w;
    let to_py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let title = format!(
        "{}: {} ({})",
        run.spec.id,
        run.spec.target.label(),
        run.spec.method
    );

    let mut svg = String::with_capacity(64 * 1024);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));

    // Frame and ticks.
    svg.push_str(&format!(
        "  <rect x=\"{MARGIN_LEFT:.2}\" y=\"{MARGIN_TOP:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
    ));
    const N_TICKS: usize = 5;
    for i in 0..N_TICKS {
        let frac = i as f64 / (N_TICKS - 1) as f64;
        let xv = x_lo + frac * (x_hi - x_lo);
        let px = to_px(xv);
        let base = MARGIN_TOP + plot_h;
        svg.push_str(&format!(
            "  <line x1=\"{px:.2}\" y1=\"{base:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#444444\" stroke-width=\"1\"/>\n",
            base + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{px:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{xv:.2}</text>\n",
            base + 18.0
        ));
        let yv = y_lo + frac * (y_hi - y_lo);
        let py = to_py(yv);
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{MARGIN_LEFT:.2}\" y2=\"{py:.2}\" stroke=\"#444444\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT - 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{yv:.2}</text>\n",
            MARGIN_LEFT - 8.0,
            py + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">x</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">f(x)</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    svg.push_str(&polyline(
        series
            .x
            .iter()
            .zip(&series.truth)
            .map(|(&x, &y)| (to_px(x), to_py(y))),
        TRUTH_COLOR,
        None,
    ));
    svg.push_str(&polyline(
        series
            .x
            .iter()
            .zip(&series.pred)
            .map(|(&x, &y)| (to_px(x), to_py(y))),
        PRED_COLOR,
        Some("6,3"),
    ));

    // Legend, top-right inside the frame.
    let lx = MARGIN_LEFT + plot_w - 130.0;
    let ly = MARGIN_TOP + 14.0;
    svg.push_str(&format!(
        "  <line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{TRUTH_COLOR}\" stroke-width=\"1.6\"/>\n",
        lx + 26.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">target</text>\n",
        lx + 32.0,
        ly + 4.0
    ));
    svg.push_str(&format!(
        "  <line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{PRED_COLOR}\" stroke-width=\"1.6\" stroke-dasharray=\"6,3\"/>\n",
        ly + 16.0,
        lx + 26.0,
        ly + 16.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">prediction</text>\n",
        lx + 32.0,
        ly + 20.0
    ));
    svg.push_str("</svg>\n");

    let out = run.artifact_path("plot.svg");
    manifest::write_atomic(&out, svg.as_bytes())?;
    Ok(out)
}
