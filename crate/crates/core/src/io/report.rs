//! Text reports: curve CSV, correspondence CSV and an SVG plot of the mean UIoU curve.

use std::fmt::Write as _;

use crate::correspondence::CorrespondenceTable;
use crate::metrics::UiouCurve;

/// Six significant digits, `%g` style: trailing zeros trimmed, exponent form outside [1e-4, 1e6).
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}"))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn column_name(class: &str) -> String {
    format!("uiou_{}", class.replace(|c: char| !c.is_ascii_alphanumeric(), "_"))
}

/// Columns: `theta`, one `uiou_<class>` per class, `mean_uiou`, `invalidated_pixels`.
/// Undefined class scores are written as `n/a`.
pub fn curve_to_csv(curve: &UiouCurve) -> String {
    let mut out = String::from("theta");
    for name in &curve.class_names {
        out.push(',');
        out.push_str(&column_name(name));
    }
    out.push_str(",mean_uiou,invalidated_pixels\n");
    for p in &curve.points {
        out.push_str(&fmt_g6(p.theta));
        for v in &p.per_class {
            out.push(',');
            match v {
                Some(v) => out.push_str(&fmt_g6(*v)),
                None => out.push_str("n/a"),
            }
        }
        let _ = writeln!(out, ",{},{}", fmt_g6(p.mean), p.invalidated);
    }
    out
}

pub fn correspondences_to_csv(table: &CorrespondenceTable) -> String {
    let mut out = String::from("query_id,day_id,distance_m,matched\n");
    for e in &table.entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&e.query_id),
            csv_field(&e.day_id),
            fmt_g6(e.distance_m),
            e.matched
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Mean UIoU (%) against threshold, with the maximum marked and labelled.
pub fn curve_to_svg(curve: &UiouCurve, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 64.0;
    const RIGHT: f64 = 24.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 56.0;
    let x_min = curve.points.first().map_or(0.0, |p| p.theta);
    let x_max = 1.0f64;
    let span = (x_max - x_min).max(1e-9);
    let means: Vec<f64> = curve.points.iter().map(|p| p.mean * 100.0).collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_min = ((lo - 2.0) / 5.0).floor().max(0.0) * 5.0;
    let y_max = (((hi + 2.0) / 5.0).ceil() * 5.0).min(100.0).max(y_min + 5.0);
    let px = |t: f64| LEFT + (t - x_min) / span * (W - LEFT - RIGHT);
    let py = |v: f64| TOP + (y_max - v) / (y_max - y_min) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    // axes
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for k in 0..=5 {
        let t = x_min + span * k as f64 / 5.0;
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{y1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, y1 + 4.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
            y1 + 18.0,
            t
        );
    }
    let steps = ((y_max - y_min) / 5.0).round() as usize;
    let stride = steps.div_ceil(8).max(1);
    for k in (0..=steps).step_by(stride) {
        let v = y_min + 5.0 * k as f64;
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{y:.1}" x2="{x1}" y2="{y:.1}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.0}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">confidence threshold θ</text>"#,
        (x0 + x1) / 2.0,
        H - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">mean UIoU (%)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let pts: Vec<String> = curve
        .points
        .iter()
        .zip(&means)
        .map(|(p, m)| format!("{:.2},{:.2}", px(p.theta), py(*m)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
        pts.join(" ")
    );
    let (bx, by) = (px(curve.best.theta), py(curve.best.mean * 100.0));
    let _ = writeln!(s, r#"<circle cx="{bx:.2}" cy="{by:.2}" r="4" fill="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-weight="bold">{:.1}</text>"#,
        bx,
        by - 10.0,
        curve.best.mean * 100.0
    );
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
