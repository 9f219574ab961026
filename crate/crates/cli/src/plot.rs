//! Accuracy-versus-lead-time chart as hand-written SVG.

use std::fmt::Write;

use skyflow::AccuracyReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

/// Renders one polyline vertex per report row: lead time in minutes along
/// x, accuracy in percent along y. Output bytes depend only on the report.
pub fn accuracy_svg(report: &AccuracyReport) -> String {
    let leads: Vec<f64> = report.rows.iter().map(|r| r.lead_minutes).collect();
    let pct: Vec<f64> = report.rows.iter().map(|r| 100.0 * r.accuracy).collect();

    let x_max = leads.iter().copied().fold(0.0, f64::max).max(1.0);
    let y_lo = pct.iter().copied().fold(100.0, f64::min);
    let y_min = ((y_lo - 1.0) / 10.0).floor().clamp(0.0, 9.0) * 10.0;
    let (plot_w, plot_h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |m: f64| LEFT + plot_w * m / x_max;
    let sy = |p: f64| TOP + plot_h * (100.0 - p) / (100.0 - y_min);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(s, "</g>");

    for &m in &leads {
        let x = sx(m);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 20.0,
            m
        );
    }
    let mut tick = y_min;
    while tick <= 100.0 + 1e-9 {
        let y = sy(tick);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{tick}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
        tick += 10.0;
    }

    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Lead time (minutes)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">Accuracy (percent)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let points: Vec<String> = leads
        .iter()
        .zip(&pct)
        .map(|(&m, &p)| format!("{:.2},{:.2}", sx(m), sy(p)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="2" points="{}"/>"##,
        points.join(" ")
    );
    for (&m, &p) in leads.iter().zip(&pct) {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fa8"/>"##,
            sx(m),
            sy(p)
        );
    }
    s.push_str("</svg>\n");
    s
}
