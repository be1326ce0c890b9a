//! CSV and SVG renderings of a numerical-range boundary.

use std::fmt::Write;

use realpos_core::numrange::RangeBoundary;

use crate::io::fmt_f64;

pub fn boundary_csv(b: &RangeBoundary) -> String {
    let mut s = String::from("theta,h_theta,re,im\n");
    for ((t, h), z) in b.angles.iter().zip(&b.support_values).zip(&b.boundary_points) {
        writeln!(s, "{},{},{},{}", fmt_f64(*t), fmt_f64(*h), fmt_f64(z.re), fmt_f64(z.im)).unwrap();
    }
    s
}

/// `(min_re, max_re, min_im, max_im)` of the boundary points.
fn hull_box(b: &RangeBoundary) -> (f64, f64, f64, f64) {
    b.boundary_points.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, bb, c, d), z| (a.min(z.re), bb.max(z.re), c.min(z.im), d.max(z.im)),
    )
}

/// 800 x 800 plot. The view box is the bounding box of the range with a 10%
/// margin on each side; a degenerate range gets a unit-sized box. The
/// imaginary axis points up.
pub fn boundary_svg(b: &RangeBoundary) -> String {
    let (x0, x1, y0, y1) = hull_box(b);
    let (mut w, mut h) = (x1 - x0, y1 - y0);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    if w.max(h) <= 1e-12 {
        w = 1.0;
        h = 1.0;
    }
    // keep the aspect ratio square so the unit circle stays round
    let side = w.max(h) * 1.2;
    let (vx, vy) = (cx - side / 2.0, -cy - side / 2.0);
    let f = |v: f64| format!("{v:.6}");

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="{} {} {} {}">"#,
        f(vx),
        f(vy),
        f(side),
        f(side)
    )
    .unwrap();
    let right = vx + side;
    if right > 0.0 {
        let left = vx.max(0.0);
        writeln!(
            s,
            r##"  <rect x="{}" y="{}" width="{}" height="{}" fill="#d8ecd8" />"##,
            f(left),
            f(vy),
            f(right - left),
            f(side)
        )
        .unwrap();
    }
    let stroke = r#"vector-effect="non-scaling-stroke""#;
    writeln!(
        s,
        r##"  <line x1="{}" y1="0" x2="{}" y2="0" stroke="#888" stroke-width="1" {stroke} />"##,
        f(vx),
        f(right)
    )
    .unwrap();
    writeln!(
        s,
        r##"  <line x1="0" y1="{}" x2="0" y2="{}" stroke="#888" stroke-width="1" {stroke} />"##,
        f(vy),
        f(vy + side)
    )
    .unwrap();
    writeln!(
        s,
        r##"  <circle cx="0" cy="0" r="1" fill="none" stroke="#4060c0" stroke-dasharray="4 3" stroke-width="1" {stroke} />"##
    )
    .unwrap();
    let pts: Vec<String> = b
        .boundary_points
        .iter()
        .map(|z| format!("{},{}", f(z.re), f(-z.im)))
        .collect();
    writeln!(
        s,
        r##"  <polygon points="{}" fill="#c04040" fill-opacity="0.25" stroke="#c04040" stroke-width="2" {stroke} />"##,
        pts.join(" ")
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}
