//! Minimal self-contained SVG scatter plots for 2D projections, with points
//! colored by ground-truth group and a legend.

use crate::numerics::Matrix;
use std::fmt::Write as _;

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#1170aa", "#a3cce9",
];

const PLOT_W: f64 = 520.0;
const PLOT_H: f64 = 440.0;
const MARGIN: f64 = 40.0;
const LEGEND_W: f64 = 190.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render an N x 2 coordinate matrix as an SVG scatter plot. Groups are
/// colored in first-occurrence order; the legend lists each group once.
pub fn scatter_svg(coords: &Matrix, groups: &[String], title: &str) -> String {
    assert_eq!(coords.rows(), groups.len(), "one group per point");
    assert!(coords.cols() >= 2, "need 2D coordinates");

    let mut group_order: Vec<&String> = Vec::new();
    for g in groups {
        if !group_order.contains(&g) {
            group_order.push(g);
        }
    }
    let color_of = |g: &String| {
        let idx = group_order.iter().position(|x| *x == g).unwrap();
        PALETTE[idx % PALETTE.len()]
    };

    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..coords.rows() {
        min_x = min_x.min(coords.get(i, 0));
        max_x = max_x.max(coords.get(i, 0));
        min_y = min_y.min(coords.get(i, 1));
        max_y = max_y.max(coords.get(i, 1));
    }
    if coords.rows() == 0 {
        min_x = 0.0;
        max_x = 1.0;
        min_y = 0.0;
        max_y = 1.0;
    }
    let span_x = (max_x - min_x).max(1e-12);
    let span_y = (max_y - min_y).max(1e-12);
    let sx = |x: f64| MARGIN + (x - min_x) / span_x * PLOT_W;
    // SVG y grows downward; flip so larger values plot higher.
    let sy = |y: f64| MARGIN + (1.0 - (y - min_y) / span_y) * PLOT_H;

    let total_w = MARGIN * 2.0 + PLOT_W + LEGEND_W;
    let total_h = MARGIN * 2.0 + PLOT_H;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{total_w}" height="{total_h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="15" font-weight="bold">{}</text>"#,
        MARGIN,
        MARGIN - 14.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="#888" stroke-width="1"/>"##
    );
    for i in 0..coords.rows() {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}" fill-opacity="0.8"/>"#,
            sx(coords.get(i, 0)),
            sy(coords.get(i, 1)),
            color_of(&groups[i])
        );
    }
    let legend_x = MARGIN + PLOT_W + 20.0;
    let _ = writeln!(
        svg,
        r#"<text x="{legend_x}" y="{}" font-family="sans-serif" font-size="13" font-weight="bold">groups</text>"#,
        MARGIN + 8.0
    );
    for (i, g) in group_order.iter().enumerate() {
        let y = MARGIN + 28.0 + i as f64 * 20.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{legend_x}" y="{:.1}" width="12" height="12" fill="{}"/>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            legend_x + 18.0,
            escape(g)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_contains_points_and_legend() {
        let coords = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.5, -0.3]]);
        let groups = vec![
            "clique/sat".to_string(),
            "clique/unsat".to_string(),
            "clique/sat".to_string(),
        ];
        let svg = scatter_svg(&coords, &groups, "test <plot>");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        // Two legend entries, deduplicated.
        assert_eq!(svg.matches("clique/sat").count(), 1);
        assert_eq!(svg.matches("clique/unsat").count(), 1);
        assert!(svg.contains("&lt;plot&gt;"));
        // Same-group points share a color.
        let c0 = PALETTE[0];
        assert_eq!(svg.matches(&format!(r#"fill="{c0}" fill-opacity"#)).count(), 2);
    }

    #[test]
    fn degenerate_spans_do_not_break_scaling() {
        let coords = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let groups = vec!["a".to_string(), "a".to_string()];
        let svg = scatter_svg(&coords, &groups, "degenerate");
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }
}
