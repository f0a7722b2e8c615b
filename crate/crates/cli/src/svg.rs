//! Deterministic SVG rendering of patches.

use std::fmt::Write;

use tilelab_core::geometry::{BBox, PlacedTile, TileShape, Vector};
use tilelab_core::substitution::TypeHFamily;

pub const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

/// Six decimals, trailing zeros trimmed.
pub fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn class_of(t: &PlacedTile) -> usize {
    t.collared.unwrap_or(t.proto)
}

/// One `<polygon>` per tile (or a unit-height `<rect>` strip per tile in dimension one), filled
/// by collared class when present and by prototile otherwise. Tiles are sorted by snapped
/// translation and the y axis points up.
pub fn render_svg(family: &TypeHFamily, tiles: &[PlacedTile]) -> Option<String> {
    if tiles.is_empty() {
        return None;
    }
    let mut order: Vec<&PlacedTile> = tiles.iter().collect();
    order.sort_by_key(|t| {
        let (x, y) = t.translation.snapped();
        (x, y, t.proto)
    });
    let placed: Vec<(usize, Vec<Vector>)> = order
        .iter()
        .map(|t| {
            let pts = match family.shape(t.proto) {
                TileShape::Interval { lo, hi } => {
                    let (a, b) = (lo + t.translation.x, hi + t.translation.x);
                    vec![Vector::new(a, -0.5), Vector::new(b, -0.5), Vector::new(b, 0.5), Vector::new(a, 0.5)]
                }
                TileShape::Polygon(v) => v.iter().map(|p| *p + t.translation).collect(),
            };
            (class_of(t), pts.into_iter().map(|p| Vector::new(p.x, -p.y)).collect())
        })
        .collect();
    let all: Vec<Vector> = placed.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let bb = BBox::of_points(&all);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        num(bb.lo.x),
        num(bb.lo.y),
        num(bb.hi.x - bb.lo.x),
        num(bb.hi.y - bb.lo.y)
    );
    for (class, pts) in &placed {
        let fill = PALETTE[class % PALETTE.len()];
        if family.dim == 1 {
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="black" stroke-width="0.02"/>"#,
                num(pts[0].x),
                num(pts[2].y),
                num(pts[1].x - pts[0].x),
                num(pts[0].y - pts[2].y)
            );
        } else {
            let coords: Vec<String> = pts.iter().map(|p| format!("{},{}", num(p.x), num(p.y))).collect();
            let _ = writeln!(s, r#"<polygon points="{}" fill="{fill}" stroke="black" stroke-width="0.02"/>"#, coords.join(" "));
        }
    }
    s.push_str("</svg>\n");
    Some(s)
}
