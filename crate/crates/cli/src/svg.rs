use std::fmt::Write as _;

use forecal_core::ReliabilityBin;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn sx(v: f64) -> f64 {
    MARGIN + v * SIZE
}

fn sy(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SIZE
}

/// Static reliability plot: one point per non-empty bin at
/// (mean prediction, empirical rate), with the y = x reference line.
pub fn reliability_svg(bins: &[ReliabilityBin]) -> String {
    let full = SIZE + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{full}" height="{full}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#888" stroke-dasharray="4 4"/>"##,
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sy(1.0)
    );
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{t:.1}</text>"#,
            sx(t),
            sy(0.0) + 15.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{t:.1}</text>"#,
            sx(0.0) - 5.0,
            sy(t) + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">mean predicted probability</text>"#,
        sx(0.5),
        full - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {})">empirical frequency</text>"#,
        sy(0.5),
        sy(0.5)
    );
    let points: Vec<(f64, f64)> = bins
        .iter()
        .filter_map(|b| Some((b.mean_pred?, b.empirical?)))
        .collect();
    if points.len() > 1 {
        let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f77b4"/>"##,
            path.join(" ")
        );
    }
    for (x, y) in points {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##,
            sx(x),
            sy(y)
        );
    }
    out.push_str("</svg>\n");
    out
}
