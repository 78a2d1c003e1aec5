//! Minimal self-contained SVG renderers for the experiment figures.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = ["#222222", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart of several series sharing the x values.
pub fn line_chart(title: &str, xs: &[f64], series: &[(&str, &[f64])]) -> String {
    let (x0, x1) = bounds(xs.iter());
    let (y0, y1) = bounds(series.iter().flat_map(|(_, ys)| ys.iter()));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#999999"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (label, value, y) in [("max", y1, MARGIN), ("min", y0, HEIGHT - MARGIN)] {
        let _ = writeln!(s, r#"<text x="4" y="{y:.1}" font-family="sans-serif" font-size="10">{label} {value:.3}</text>"#);
    }
    for (k, (name, ys)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = xs.iter().zip(ys.iter()).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{colour}">{}</text>"#,
            WIDTH - MARGIN + 4.0 - 40.0,
            MARGIN + 14.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Square heatmap of `values` (row-major, rows over `y` from −1 to 1) on
/// `[-1, 1]²` with `polygon` drawn on top. Positive values are blue,
/// negative values red.
pub fn heatmap(title: &str, side: usize, values: &[f64], polygon: &[(f64, f64)]) -> String {
    let size = HEIGHT - 2.0 * MARGIN;
    let cell = size / side as f64;
    let to_px = |x: f64, y: f64| (MARGIN + (x + 1.0) / 2.0 * size, MARGIN + (1.0 - (y + 1.0) / 2.0) * size);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{HEIGHT}" height="{HEIGHT}" viewBox="0 0 {HEIGHT} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, HEIGHT / 2.0, escape(title));
    for i in 0..side {
        for j in 0..side {
            let v = values[i * side + j] / scale;
            let t = (v.abs().min(1.0) * 200.0) as u8;
            let colour = if v >= 0.0 { format!("rgb({},{},255)", 255 - t, 255 - t) } else { format!("rgb(255,{},{})", 255 - t, 255 - t) };
            let x = MARGIN + j as f64 * cell;
            let y = MARGIN + (side - 1 - i) as f64 * cell;
            let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#, cell + 0.3, cell + 0.3);
        }
    }
    let points: Vec<String> = polygon.iter().map(|&(x, y)| to_px(x, y)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(s, r#"<polygon fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#, points.join(" "));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_one_polyline_per_series() {
        let xs = [0.0, 0.5, 1.0];
        let a = [1.0, -1.0, 1.0];
        let b = [0.5, 0.0, 0.5];
        let svg = line_chart("a < b", &xs, &[("a", &a), ("b", &b)]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn heatmap_cell_count() {
        let svg = heatmap("h", 3, &[0.1; 9], &[(0.0, 0.5), (0.5, -0.5), (-0.5, -0.5)]);
        assert_eq!(svg.matches("<rect").count(), 10);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }
}
