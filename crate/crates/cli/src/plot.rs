//! Self-contained SVG line plots of aggregated curves: epochs on the
//! x-axis, the metric on a log-scaled y-axis, one series per
//! (algorithm, schedule) group.

use std::fs;
use std::path::Path;

use crate::aggregate::GroupCurves;
use crate::runner::HarnessError;

type Result<T> = std::result::Result<T, HarnessError>;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Floor applied to nonpositive values under the log scale.
const LOG_CLAMP: f64 = 1e-16;

const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RelErr,
    NatRes,
    Psi,
    FnorNorm,
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::RelErr => "relative error",
            Metric::NatRes => "natural residual",
            Metric::Psi => "objective value",
            Metric::FnorNorm => "normal map norm",
        }
    }

    fn extract(&self, e: &crate::aggregate::EpochAggregate) -> Option<f64> {
        let pair = match self {
            Metric::RelErr => e.rel_err,
            Metric::NatRes => e.nat_res,
            Metric::Psi => e.psi,
            Metric::FnorNorm => e.fnor_norm,
        };
        pair.map(|(mean, _)| mean)
    }
}

/// Writes the plot; returns false (and writes nothing) when no group has
/// data for the metric.
pub fn emit_plot(groups: &[GroupCurves], metric: Metric, path: &Path) -> Result<bool> {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut clamped = false;
    for g in groups {
        let mut pts = Vec::new();
        for e in &g.epochs {
            if let Some(v) = metric.extract(e) {
                let y = if v <= 0.0 {
                    clamped = true;
                    LOG_CLAMP
                } else {
                    v.max(LOG_CLAMP)
                };
                pts.push((e.epoch as f64, y));
            }
        }
        if !pts.is_empty() {
            series.push((format!("{} [{}]", g.algorithm, g.schedule_id), pts));
        }
    }
    if series.is_empty() {
        return Ok(false);
    }

    let x_max = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|&(x, _)| x))
        .fold(1.0f64, f64::max);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &series {
        for &(_, y) in pts {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    let (ly_min, ly_max) = (y_min.log10().floor(), y_max.log10().ceil());
    let ly_span = (ly_max - ly_min).max(1.0);

    let x_of = |x: f64| MARGIN_L + (x / x_max) * (WIDTH - MARGIN_L - MARGIN_R);
    let y_of =
        |y: f64| HEIGHT - MARGIN_B - ((y.log10() - ly_min) / ly_span) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">{} vs epochs (log scale)</text>\n",
        MARGIN_L,
        metric.label()
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));

    // y decade ticks
    let mut dec = ly_min;
    while dec <= ly_max + 1e-9 {
        let y = y_of(10f64.powf(dec));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{MARGIN_L}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            dec as i64
        ));
        dec += 1.0;
    }

    // x ticks at quarters
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let xv = frac * x_max;
        let x = x_of(xv);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{:.0}</text>\n",
            HEIGHT - MARGIN_B + 18.0,
            xv
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">epoch</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 10.0
    ));

    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path_d: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", x_of(x), y_of(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path_d.join(" ")
        ));
        let ly = MARGIN_T + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly:.2}\" x2=\"{}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 30.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R + 35.0,
            ly + 4.0,
            xml_escape(label)
        ));
    }

    if clamped {
        svg.push_str(&format!(
            "<text x=\"{MARGIN_L}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555\">note: nonpositive values clamped to {LOG_CLAMP:e} for the log scale</text>\n",
            HEIGHT - 28.0
        ));
    }

    svg.push_str("</svg>\n");
    fs::write(path, svg).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(true)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
