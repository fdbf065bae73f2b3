//! Minimal hand-rolled SVG 1.1 scatter/line charts.

use std::fmt::Write as _;

pub struct SeriesData {
    pub label: String,
    /// (m, metric) points, sorted by m
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Render one metric over the reduced length m, one polyline per series.
pub fn render_chart(title: &str, y_label: &str, series: &[SeriesData]) -> String {
    let points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x_min, x_max) = bounds(points.iter().map(|p| p.0), 1.0);
    let (y_min, y_max) = bounds(points.iter().map(|p| p.1), 1e-9);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_T + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        escape(title)
    );

    // axes
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_L}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{}" stroke="black"/>"#,
        MARGIN_T + plot_h
    );
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(fx),
            MARGIN_T + plot_h + 18.0,
            format_tick(fx)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            sy(fy) + 4.0,
            format_tick(fy)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_L}" y1="{}" x2="{}" y2="{}" stroke="#dddddd"/>"##,
            sy(fy),
            MARGIN_L + plot_w,
            sy(fy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">reduced length m</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    );

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if s.points.len() > 1 {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for (x, y) in &s.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(*x),
                sy(*y)
            );
        }
        let ly = MARGIN_T + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="3"/>"#,
            MARGIN_L + plot_w + 10.0,
            ly - 4.0,
            MARGIN_L + plot_w + 28.0,
            ly - 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            MARGIN_L + plot_w + 32.0,
            ly,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>, min_span: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < min_span {
        let mid = 0.5 * (lo + hi);
        return (mid - min_span / 2.0, mid + min_span / 2.0);
    }
    (lo, hi)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.01..10_000.0).contains(&a) {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_single_point_and_multi_series() {
        let one = render_chart(
            "t",
            "share",
            &[SeriesData { label: "a".into(), points: vec![(24.0, 0.5)] }],
        );
        assert!(one.starts_with("<svg"));
        assert!(one.contains("circle"));
        assert!(!one.contains("polyline"));

        let two = render_chart(
            "t",
            "share",
            &[
                SeriesData { label: "a".into(), points: vec![(24.0, 0.5), (48.0, 0.2)] },
                SeriesData { label: "b".into(), points: vec![(24.0, 0.1), (48.0, 0.0)] },
            ],
        );
        assert!(two.contains("polyline"));
        assert!(two.ends_with("</svg>\n"));
    }
}
