//! Minimal SVG line plots: axes, one polyline path per curve, a legend.

use std::fmt::Write;

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

/// `x` is drawn on a log2 scale, `y` linearly from zero.
pub fn line_plot(curves: &[Curve], x_label: &str, y_label: &str) -> String {
    let xs = curves.iter().flat_map(|c| c.points.iter().map(|p| p.0.max(1.0).log2()));
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 1.0, x0 + 1.0) };
    let y1 = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.1))
        .fold(1.0f64, f64::max);
    let sx = |x: f64| PAD + (x.max(1.0).log2() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / y1 * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(
        s,
        r#"<path d="M {PAD} {top} L {PAD} {b} L {r} {b}" stroke="black" fill="none"/>"#,
        top = PAD,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{x_label} (log scale)</text>"#, W / 2.0 - 40.0, H - 15.0);
    let _ = writeln!(s, r#"<text x="10" y="{}" font-size="12">{y_label}</text>"#, PAD - 20.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">{}</text>"#, PAD - 30.0, PAD + 4.0, y1);
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let d: Vec<String> = c
            .points
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| format!("{} {:.2} {:.2}", if k == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
        let ly = PAD + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly:.0}" font-size="10" fill="{color}">{}</text>"#,
            W - PAD - 150.0,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
