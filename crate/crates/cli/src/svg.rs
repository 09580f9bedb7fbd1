//! Minimal SVG line plots for second-order curves: envelope band, estimate
//! polyline, axes with a handful of ticks.

use segpoint_core::secondorder::CurveWithEnvelope;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

fn path_from(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| format!("{}{:.2},{:.2}", if i == 0 { "M" } else { "L" }, x, y))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a curve with its envelope band and an optional reference level.
pub fn curve_svg(curve: &CurveWithEnvelope, title: &str, reference: Option<f64>) -> String {
    let t = &curve.t_values;
    let (tmin, tmax) = (t[0], *t.last().unwrap());
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for series in [&curve.estimate, &curve.lower, &curve.upper] {
        for &v in series.iter() {
            if v.is_finite() {
                ymin = ymin.min(v);
                ymax = ymax.max(v);
            }
        }
    }
    if let Some(r) = reference {
        ymin = ymin.min(r);
        ymax = ymax.max(r);
    }
    if !(ymax > ymin) {
        ymax = ymin + 1.0;
    }
    let pad = 0.05 * (ymax - ymin);
    let (ymin, ymax) = (ymin - pad, ymax + pad);
    let sx = |x: f64| MARGIN + (x - tmin) / (tmax - tmin) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - ymin) / (ymax - ymin) * (H - 2.0 * MARGIN);

    let band: Vec<(f64, f64)> = t
        .iter()
        .zip(&curve.upper)
        .map(|(&x, &y)| (sx(x), sy(y)))
        .chain(
            t.iter()
                .zip(&curve.lower)
                .rev()
                .map(|(&x, &y)| (sx(x), sy(y))),
        )
        .collect();
    let est: Vec<(f64, f64)> = t
        .iter()
        .zip(&curve.estimate)
        .map(|(&x, &y)| (sx(x), sy(y)))
        .collect();

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    ));
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    svg.push_str(&format!(
        r#"<text x="{:.0}" y="24" font-family="monospace" font-size="14">{}</text>"#,
        MARGIN,
        title.replace('<', "&lt;")
    ));
    svg.push_str(&format!(
        r##"<path d="{} Z" fill="#c8d8f0" stroke="none" opacity="0.8"/>"##,
        path_from(&band)
    ));
    if let Some(r) = reference {
        svg.push_str(&format!(
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
            sx(tmin),
            sy(r),
            sx(tmax),
            sy(r)
        ));
    }
    svg.push_str(&format!(
        r##"<path d="{}" fill="none" stroke="#143c8c" stroke-width="1.5"/>"##,
        path_from(&est)
    ));
    // axes
    svg.push_str(&format!(
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    ));
    for k in 0..=4 {
        let frac = k as f64 / 4.0;
        let xv = tmin + frac * (tmax - tmin);
        let yv = ymin + frac * (ymax - ymin);
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="10" text-anchor="middle">{:.3}</text>"#,
            sx(xv),
            H - MARGIN + 16.0,
            xv
        ));
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="10" text-anchor="end">{:.3}</text>"#,
            MARGIN - 6.0,
            sy(yv) + 3.0,
            yv
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
