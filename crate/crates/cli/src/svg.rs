//! Minimal SVG line plot of coverage against the number of levels.

use std::fmt::Write;

use invset_core::sim::CoverageReport;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1b6ca8", "#d1495b", "#2e933c", "#8d5a97", "#edae49", "#444444"];

/// `None` when no report has a levels sweep.
pub fn coverage_plot(reports: &[CoverageReport], nominal: f64) -> Option<String> {
    let series: Vec<(String, Vec<(f64, f64)>)> = reports
        .iter()
        .filter(|r| !r.sweep.is_empty())
        .map(|r| {
            let name = match r.grid_points {
                Some(g) => format!("{} grid {g}", r.n),
                None => format!("n {}", r.n),
            };
            (name, r.sweep.iter().map(|e| ((e.levels as f64).log10(), e.coverage.percent())).collect())
        })
        .collect();
    if series.is_empty() {
        return None;
    }
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (100.0 * nominal - 1.0, 100.0 * nominal + 1.0);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y - 0.5);
        y1 = y1.max(y + 0.5);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD}V{b}H{r}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let ny = sy(100.0 * nominal);
    let _ = writeln!(s, r#"<line x1="{PAD}" x2="{r}" y1="{ny:.1}" y2="{ny:.1}" stroke="gray" stroke-dasharray="4 3"/>"#, r = W - PAD);
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{x}" y="{py:.1}" text-anchor="end">{y:.1}</text>"#, x = PAD - 6.0, py = sy(y) + 4.0);
    }
    let mut e = x0.ceil() as i32;
    while (e as f64) <= x1 {
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{y}" text-anchor="middle">{v}</text>"#, px = sx(e as f64), y = H - PAD + 18.0, v = 10f64.powi(e));
        e += 1;
    }
    let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="middle">levels</text>"#, x = W / 2.0, y = H - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{y}" transform="rotate(-90 14 {y})" text-anchor="middle">coverage (%)</text>"#, y = H / 2.0);
    for (i, (name, p)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let d: Vec<String> = p.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, d.join(" "));
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" fill="{c}">{name}</text>"#, x = W - PAD - 110.0, y = PAD + 16.0 * i as f64);
    }
    s.push_str("</svg>\n");
    Some(s)
}
