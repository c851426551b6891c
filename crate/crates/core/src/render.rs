//! SVG rendering of a spin field with its vortices.

use std::fmt::Write;

use crate::lattice::SpinField;
use crate::vorticity::VortexMeasure;

/// Width of the drawing in pixels.
pub const WIDTH: f64 = 640.0;

/// One arrow per site, colored by phase, with `+`/`−` disks at the atoms of
/// `overlay`. The output depends only on the inputs.
pub fn render_svg(u: &SpinField, overlay: Option<&VortexMeasure>) -> String {
    let l = u.lattice();
    let eps = l.eps();
    let (x0, x1, y0, y1) = l.domain().bounding_box();
    let pad = eps;
    let scale = WIDTH / (x1 - x0 + 2.0 * pad);
    let height = ((y1 - y0 + 2.0 * pad) * scale).round();
    let px = |x: f64| (x - x0 + pad) * scale;
    let py = |y: f64| (y1 + pad - y) * scale;
    let arm = 0.4 * eps * scale;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<g stroke-width="{:.3}" stroke-linecap="round">"#, (0.08 * eps * scale).max(0.5)).unwrap();
    for k in 0..l.len() {
        let p = l.position(k);
        let v = u.value(k);
        let (cx, cy) = (px(p.x), py(p.y));
        let (dx, dy) = (v.x() * arm, -v.y() * arm);
        let hue = v.phase().to_degrees();
        let (hx, hy) = (cx + dx, cy + dy);
        // arrow head: two short strokes back from the tip
        let (bx, by) = (-0.45 * dx, -0.45 * dy);
        let (ox, oy) = (-0.3 * dy, 0.3 * dx);
        writeln!(
            s,
            r#"<path d="M{:.3} {:.3}L{:.3} {:.3}M{:.3} {:.3}L{:.3} {:.3}L{:.3} {:.3}" stroke="hsl({:.1},70%,42%)" fill="none"/>"#,
            cx - dx,
            cy - dy,
            hx,
            hy,
            hx + bx + ox,
            hy + by + oy,
            hx,
            hy,
            hx + bx - ox,
            hy + by - oy,
            hue
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    if let Some(m) = overlay {
        let r = (0.45 * eps * scale).max(3.0);
        for a in &m.atoms {
            let (cx, cy) = (px(a.x), py(a.y));
            let (fill, label) = if a.d > 0 { ("#c0392b", "+") } else { ("#2c5aa0", "\u{2212}") };
            writeln!(s, r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" fill="{fill}" fill-opacity="0.85"/>"#).unwrap();
            let text = if a.d.abs() == 1 { label.to_string() } else { format!("{label}{}", a.d.abs()) };
            writeln!(
                s,
                r#"<text x="{cx:.3}" y="{:.3}" font-size="{:.3}" text-anchor="middle" fill="white" font-family="sans-serif">{text}</text>"#,
                cy + 0.35 * r * 1.6,
                1.6 * r
            )
            .unwrap();
        }
    }
    writeln!(s, "</svg>").unwrap();
    s
}
