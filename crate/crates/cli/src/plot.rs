//! Minimal SVG histograms of the analysis outputs.

use std::fmt::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use dtou_core::mixture::mixture_density;
use dtou_core::pipeline::Analysis;
use dtou_core::population::Histogram;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

pub fn unix_timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// SVG files for each histogram present in `analysis`. The ψ plot carries the
/// fitted mixture density when there is one.
pub fn render(analysis: &Analysis, timestamp: Option<u64>) -> Vec<(&'static str, String)> {
    let mut out = vec![(
        "hist_phi_treatment.svg",
        histogram_svg(&analysis.hist_phi_treatment, "phi, treatment", None, timestamp),
    )];
    if let Some(h) = &analysis.hist_phi_control {
        out.push(("hist_phi_control.svg", histogram_svg(h, "phi, control", None, timestamp)));
    }
    if let Some(h) = &analysis.hist_psi {
        let curve = analysis.mixture.as_ref().map(|fit| {
            (1..200)
                .filter_map(|i| {
                    let x = i as f64 / 200.0;
                    mixture_density(&fit.params, x).ok().map(|y| (x, y))
                })
                .collect::<Vec<_>>()
        });
        out.push(("hist_psi.svg", histogram_svg(h, "psi, treatment", curve.as_deref(), timestamp)));
    }
    out
}

fn histogram_svg(
    hist: &Histogram,
    title: &str,
    curve: Option<&[(f64, f64)]>,
    timestamp: Option<u64>,
) -> String {
    let n = hist.total().max(1) as f64;
    let width = 1.0 / hist.bins() as f64;
    let densities: Vec<f64> = hist.counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let peak = densities.iter().copied().fold(1.0, f64::max);
    let y_max = (peak * 1.1).min(peak.max(10.0));
    let px = |x: f64| MARGIN + x * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y.min(y_max) / y_max) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    if let Some(t) = timestamp {
        let _ = writeln!(s, "<!-- generated at unix time {t} -->");
    }
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title} ({} bins, n = {})</text>"#,
        WIDTH / 2.0,
        hist.bins(),
        hist.total()
    );
    for (k, d) in densities.iter().enumerate() {
        let (lo, hi) = hist.edges(k);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#7a9cc6" stroke="white" stroke-width="0.5"/>"##,
            px(lo),
            py(*d),
            px(hi) - px(lo),
            py(0.0) - py(*d)
        );
    }
    if let Some(points) = curve {
        let path: Vec<String> = points.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="2"/>"##,
            path.join(" ")
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><line x1="{0}" y1="{1}" x2="{0}" y2="{3}" stroke="black"/>"#,
        MARGIN,
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        MARGIN
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{tick}</text>"#,
            px(tick),
            HEIGHT - MARGIN + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {0})">density</text>"#,
        HEIGHT / 2.0
    );
    s.push_str("</svg>\n");
    s
}
