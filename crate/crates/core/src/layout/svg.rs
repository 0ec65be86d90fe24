//! Static SVG rendering of a [`ChordLayout`], for headless inspection.

use std::fmt::Write;

use super::{ChordLayout, Interval};
use crate::trace::UnitId;

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// Stable color per unit label (FNV-1a).
fn color(unit: &UnitId) -> &'static str {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in unit.to_string().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    PALETTE[(h % PALETTE.len() as u64) as usize]
}

fn point(angle: f64, r: f64) -> (f64, f64) {
    (r * angle.sin(), -r * angle.cos())
}

fn annulus(span: &Interval, inner: f64, outer: f64) -> String {
    let large = u8::from(span.span() > std::f64::consts::PI);
    let (x0, y0) = point(span.start, outer);
    let (x1, y1) = point(span.end, outer);
    let (x2, y2) = point(span.end, inner);
    let (x3, y3) = point(span.start, inner);
    format!(
        "M{x0:.3},{y0:.3}A{outer},{outer} 0 {large} 1 {x1:.3},{y1:.3}L{x2:.3},{y2:.3}A{inner},{inner} 0 {large} 0 {x3:.3},{y3:.3}Z"
    )
}

fn ribbon(a: &Interval, b: &Interval, r: f64) -> String {
    let (ax0, ay0) = point(a.start, r);
    let (ax1, ay1) = point(a.end, r);
    let (bx0, by0) = point(b.start, r);
    let (bx1, by1) = point(b.end, r);
    let la = u8::from(a.span() > std::f64::consts::PI);
    let lb = u8::from(b.span() > std::f64::consts::PI);
    format!(
        "M{ax0:.3},{ay0:.3}A{r},{r} 0 {la} 1 {ax1:.3},{ay1:.3}Q0,0 {bx0:.3},{by0:.3}A{r},{r} 0 {lb} 1 {bx1:.3},{by1:.3}Q0,0 {ax0:.3},{ay0:.3}Z"
    )
}

/// Draws arcs, incoming hatching, self-loop thickening, rings and ribbons.
pub fn render(layout: &ChordLayout, size: u32) -> String {
    let half = f64::from(size) / 2.0;
    let radius = half * 0.7;
    let arc_width = half * 0.06;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="{} {} {size} {size}">"#,
        -half, -half
    );
    out.push_str(
        r#"<defs><pattern id="incoming" width="4" height="4" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="2" height="4" fill="white" fill-opacity="0.5"/></pattern></defs>"#,
    );
    out.push('\n');
    let _ = writeln!(out, "<title>frames {}..{} ({} by {})</title>", layout.first, layout.last, layout.level, layout.kind);

    for r in &layout.ribbons {
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="{}" fill-opacity="0.6"><title>{} → {}: {} messages, {} bytes</title></path>"#,
            ribbon(&r.source_anchor, &r.target_anchor, radius),
            color(&r.source),
            r.source,
            r.target,
            r.messages,
            r.bytes
        );
    }
    for a in &layout.arcs {
        let c = color(&a.unit);
        let _ = writeln!(out, r#"<path d="{}" fill="{c}"><title>{}</title></path>"#, annulus(&a.arc, radius, radius + arc_width), a.unit);
        if a.incoming.span() > 0.0 {
            let _ = writeln!(out, r#"<path d="{}" fill="url(#incoming)"/>"#, annulus(&a.incoming, radius, radius + arc_width));
        }
        if a.self_loop.span() > 0.0 {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="{c}"/>"#,
                annulus(&a.self_loop, radius + arc_width, radius + 1.6 * arc_width)
            );
        }
    }
    for (i, ring) in layout.rings.iter().enumerate() {
        let inner = radius + (2.0 + 1.2 * i as f64) * arc_width;
        for b in &ring.bands {
            let _ = writeln!(
                out,
                r##"<path d="{}" fill="#bbbbbb" stroke="white"><title>{}</title></path>"##,
                annulus(&b.span, inner, inner + arc_width),
                b.unit
            );
        }
    }
    if layout.degenerate {
        out.push_str(r#"<text x="0" y="0" text-anchor="middle">no traffic in this frame</text>"#);
        out.push('\n');
    }
    out.push_str("</svg>\n");
    out
}
