//! Tile geometry in dimensions one and two.
//!
//! Intervals and convex counter-clockwise polygons carry their anchor at the
//! origin. Placement is by translation only; scaling appears through
//! [`AffineContraction`] and the level scale of supertile supports.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default comparison tolerance for geometric predicates.
pub const EPS: f64 = 1e-9;
/// Grid used to snap translations when comparing tile positions.
pub const SNAP: f64 = 1e-6;

/// A point or displacement. One-dimensional data uses `x` only and keeps `y == 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub x: f64,
    pub y: f64,
}

impl Vector {
    pub const ZERO: Vector = Vector { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vector { x, y }
    }

    pub const fn scalar(x: f64) -> Self {
        Vector { x, y: 0.0 }
    }

    /// Builds a vector from a coordinate slice of length 1 or 2.
    pub fn from_slice(c: &[f64]) -> Result<Self> {
        match c {
            [x] => Ok(Vector::scalar(*x)),
            [x, y] => Ok(Vector::new(*x, *y)),
            _ => Err(Error::DimensionMismatch { expected: 2, found: c.len() }),
        }
    }

    pub fn coords(&self, dim: usize) -> Vec<f64> {
        if dim == 1 {
            vec![self.x]
        } else {
            vec![self.x, self.y]
        }
    }

    pub fn dot(self, o: Vector) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vector) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    /// Coordinates rounded to the [`SNAP`] grid.
    pub fn snapped(self) -> (i64, i64) {
        (snap(self.x), snap(self.y))
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, o: Vector) -> Vector {
        Vector::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, o: Vector) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, o: Vector) -> Vector {
        Vector::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector::new(-self.x, -self.y)
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: Vector) -> Vector {
        Vector::new(self * v.x, self * v.y)
    }
}

pub fn snap(v: f64) -> i64 {
    (v / SNAP).round() as i64
}

/// `p ↦ scale·p + offset` with `scale > 0`.
///
/// Branch maps are contractions; inverses of composed path maps are expansions
/// and use the same representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineContraction {
    pub dim: usize,
    pub scale: f64,
    pub offset: Vector,
}

impl AffineContraction {
    pub fn new(dim: usize, scale: f64, offset: Vector) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidScale(scale));
        }
        check_dim(dim)?;
        Ok(AffineContraction { dim, scale, offset })
    }

    pub fn identity(dim: usize) -> Self {
        AffineContraction { dim, scale: 1.0, offset: Vector::ZERO }
    }

    pub fn is_contracting(&self) -> bool {
        self.scale > 0.0 && self.scale < 1.0
    }

    pub fn apply(&self, p: Vector) -> Vector {
        self.scale * p + self.offset
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineContraction) -> Result<Self> {
        if self.dim != inner.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: inner.dim });
        }
        Ok(AffineContraction {
            dim: self.dim,
            scale: self.scale * inner.scale,
            offset: self.scale * inner.offset + self.offset,
        })
    }

    pub fn inverse(&self) -> Self {
        AffineContraction {
            dim: self.dim,
            scale: 1.0 / self.scale,
            offset: -(1.0 / self.scale) * self.offset,
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// A prototile or a placed copy of one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TileShape {
    Interval { lo: f64, hi: f64 },
    /// Convex polygon with vertices in counter-clockwise order.
    Polygon(Vec<Vector>),
}

impl TileShape {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi - lo <= EPS {
            return Err(Error::Degenerate(format!("interval [{lo}, {hi}]")));
        }
        Ok(TileShape::Interval { lo, hi })
    }

    /// Accepts a convex polygon in either orientation and stores it counter-clockwise.
    pub fn polygon(mut vertices: Vec<Vector>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Degenerate(format!("polygon with {} vertices", vertices.len())));
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS {
            return Err(Error::Degenerate("polygon with zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -EPS {
                return Err(Error::NotConvex);
            }
        }
        Ok(TileShape::Polygon(vertices))
    }

    /// Axis-parallel rectangle `[x0,x1]×[y0,y1]`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        TileShape::polygon(vec![
            Vector::new(x0, y0),
            Vector::new(x1, y0),
            Vector::new(x1, y1),
            Vector::new(x0, y1),
        ])
    }

    pub fn dim(&self) -> usize {
        match self {
            TileShape::Interval { .. } => 1,
            TileShape::Polygon(_) => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            TileShape::Interval { lo, hi } => hi - lo,
            TileShape::Polygon(v) => signed_area(v).abs(),
        }
    }

    /// Interval endpoints or polygon vertices.
    pub fn vertices(&self) -> Vec<Vector> {
        match self {
            TileShape::Interval { lo, hi } => vec![Vector::scalar(*lo), Vector::scalar(*hi)],
            TileShape::Polygon(v) => v.clone(),
        }
    }

    /// `scale·self + t`.
    pub fn transformed(&self, scale: f64, t: Vector) -> TileShape {
        match self {
            TileShape::Interval { lo, hi } => TileShape::Interval { lo: scale * lo + t.x, hi: scale * hi + t.x },
            TileShape::Polygon(v) => TileShape::Polygon(v.iter().map(|p| scale * *p + t).collect()),
        }
    }

    pub fn translated(&self, t: Vector) -> TileShape {
        self.transformed(1.0, t)
    }

    pub fn bbox(&self) -> BBox {
        match self {
            TileShape::Interval { lo, hi } => BBox { lo: Vector::scalar(*lo), hi: Vector::scalar(*hi) },
            TileShape::Polygon(v) => BBox::of_points(v),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            TileShape::Interval { lo, hi } => hi - lo,
            TileShape::Polygon(v) => {
                let mut d: f64 = 0.0;
                for a in v {
                    for b in v {
                        d = d.max((*a - *b).norm());
                    }
                }
                d
            }
        }
    }

    /// Length of the boundary; a 1-dimensional tile has two boundary points.
    pub fn perimeter(&self) -> f64 {
        match self {
            TileShape::Interval { .. } => 2.0,
            TileShape::Polygon(v) => edges(v).map(|(a, b)| (b - a).norm()).sum(),
        }
    }

    /// Signed distance from `p` to the boundary: positive inside, negative outside
    /// (outside values are lower bounds for polygons).
    pub fn depth(&self, p: Vector) -> f64 {
        match self {
            TileShape::Interval { lo, hi } => (p.x - lo).min(hi - p.x),
            TileShape::Polygon(v) => edges(v)
                .map(|(a, b)| {
                    let e = b - a;
                    e.cross(p - a) / e.norm()
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains_point(&self, p: Vector, tol: f64) -> bool {
        self.depth(p) >= -tol
    }

    /// Distance from the boundary to the closest vertex of `inner`, assuming
    /// `inner` lies inside `self`.
    pub fn boundary_gap(&self, inner: &TileShape) -> f64 {
        inner.vertices().into_iter().map(|p| self.depth(p)).fold(f64::INFINITY, f64::min)
    }
}

fn signed_area(v: &[Vector]) -> f64 {
    0.5 * edges(v).map(|(a, b)| a.cross(b)).sum::<f64>()
}

fn edges(v: &[Vector]) -> impl Iterator<Item = (Vector, Vector)> + '_ {
    (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub lo: Vector,
    pub hi: Vector,
}

impl BBox {
    pub fn of_points(p: &[Vector]) -> BBox {
        let mut b = BBox {
            lo: Vector::new(f64::INFINITY, f64::INFINITY),
            hi: Vector::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for q in p {
            b.lo.x = b.lo.x.min(q.x);
            b.lo.y = b.lo.y.min(q.y);
            b.hi.x = b.hi.x.max(q.x);
            b.hi.y = b.hi.y.max(q.y);
        }
        b
    }

    pub fn transformed(&self, scale: f64, t: Vector) -> BBox {
        BBox { lo: scale * self.lo + t, hi: scale * self.hi + t }
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            lo: Vector::new(self.lo.x.min(o.lo.x), self.lo.y.min(o.lo.y)),
            hi: Vector::new(self.hi.x.max(o.hi.x), self.hi.y.max(o.hi.y)),
        }
    }

    pub fn inflate(&self, r: f64) -> BBox {
        BBox { lo: self.lo - Vector::new(r, r), hi: self.hi + Vector::new(r, r) }
    }

    /// Closed boxes overlap after inflating by `tol`.
    pub fn overlaps(&self, o: &BBox, tol: f64) -> bool {
        self.lo.x <= o.hi.x + tol && o.lo.x <= self.hi.x + tol && self.lo.y <= o.hi.y + tol && o.lo.y <= self.hi.y + tol
    }
}

/// Largest `k` such that the intersection of `a` and `b` contains a `k`-dimensional
/// piece; `-1` when they are disjoint (beyond `tol`).
pub fn intersection_dimension(a: &TileShape, b: &TileShape, tol: f64) -> Result<i32> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    for s in [a, b] {
        if s.volume() <= EPS * EPS {
            return Err(Error::Degenerate("zero-volume tile".into()));
        }
    }
    match (a, b) {
        (TileShape::Interval { lo: a0, hi: a1 }, TileShape::Interval { lo: b0, hi: b1 }) => {
            let len = a1.min(*b1) - a0.max(*b0);
            Ok(if len > tol {
                1
            } else if len >= -tol {
                0
            } else {
                -1
            })
        }
        (TileShape::Polygon(p), TileShape::Polygon(q)) => Ok(polygon_intersection_dimension(p, q, tol)),
        _ => unreachable!(),
    }
}

/// Overlap volume of two tiles of equal dimension.
pub fn overlap_volume(a: &TileShape, b: &TileShape) -> f64 {
    match (a, b) {
        (TileShape::Interval { lo: a0, hi: a1 }, TileShape::Interval { lo: b0, hi: b1 }) => (a1.min(*b1) - a0.max(*b0)).max(0.0),
        (TileShape::Polygon(p), TileShape::Polygon(q)) => {
            let c = clip_convex(p, q);
            if c.len() < 3 {
                0.0
            } else {
                signed_area(&c).abs()
            }
        }
        _ => 0.0,
    }
}

fn polygon_intersection_dimension(p: &[Vector], q: &[Vector], tol: f64) -> i32 {
    if !BBox::of_points(p).overlaps(&BBox::of_points(q), tol) {
        return -1;
    }
    let clipped = clip_convex(p, q);
    if clipped.len() >= 3 {
        let area = signed_area(&clipped).abs();
        let perim: f64 = edges(&clipped).map(|(a, b)| (b - a).norm()).sum();
        if area > 0.5 * tol * perim {
            return 2;
        }
    }
    if convex_disjoint(p, q, tol) {
        return -1;
    }
    // Contact along a segment of positive length means the shared part is 1-dimensional.
    for (a0, a1) in edges(p) {
        for (b0, b1) in edges(q) {
            if shared_segment_length(a0, a1, b0, b1, tol) > tol {
                return 1;
            }
        }
    }
    0
}

fn shared_segment_length(a0: Vector, a1: Vector, b0: Vector, b1: Vector, tol: f64) -> f64 {
    let e = a1 - a0;
    let len = e.norm();
    let u = (1.0 / len) * e;
    let off = |p: Vector| u.cross(p - a0).abs();
    if off(b0) > tol || off(b1) > tol {
        return 0.0;
    }
    let s0 = u.dot(b0 - a0);
    let s1 = u.dot(b1 - a0);
    let (lo, hi) = (s0.min(s1).max(0.0), s0.max(s1).min(len));
    hi - lo
}

/// Separating-axis test on closed convex sets (vertex lists, either 1 or 2-D).
pub fn convex_disjoint(p: &[Vector], q: &[Vector], tol: f64) -> bool {
    separated(p, Vector::ZERO, q, Vector::ZERO, tol)
}

/// [`convex_disjoint`] for `p + tp` and `q + tq`.
fn separated(p: &[Vector], tp: Vector, q: &[Vector], tq: Vector, tol: f64) -> bool {
    for (a, b) in edges(p).chain(edges(q)) {
        let e = b - a;
        let n = e.norm();
        if n == 0.0 {
            continue;
        }
        let ax = Vector::new(-e.y / n, e.x / n);
        let (pmin, pmax) = project(p, ax);
        let (qmin, qmax) = project(q, ax);
        let (sp, sq) = (tp.dot(ax), tq.dot(ax));
        if pmax + sp < qmin + sq - tol || qmax + sq < pmin + sp - tol {
            return true;
        }
    }
    false
}

fn project(v: &[Vector], ax: Vector) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = p.dot(ax);
        (lo.min(s), hi.max(s))
    })
}

/// Sutherland–Hodgman clip of `subject` by the convex CCW polygon `clip`.
fn clip_convex(subject: &[Vector], clip: &[Vector]) -> Vec<Vector> {
    let mut out: Vec<Vector> = subject.to_vec();
    for (c0, c1) in edges(clip) {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let e = c1 - c0;
        let inside = |p: Vector| e.cross(p - c0) >= 0.0;
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci != pi {
                let d = cur - prev;
                let t = e.cross(c0 - prev) / e.cross(d);
                out.push(prev + t * d);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

/// Image of a shape under an affine map.
pub fn apply_map(f: &AffineContraction, shape: &TileShape) -> Result<TileShape> {
    if f.dim != shape.dim() {
        return Err(Error::DimensionMismatch { expected: shape.dim(), found: f.dim });
    }
    Ok(shape.transformed(f.scale, f.offset))
}

/// A prototile copy placed by translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedTile {
    /// Zero-based prototile index.
    pub proto: usize,
    pub translation: Vector,
    pub collared: Option<usize>,
}

impl PlacedTile {
    pub fn new(proto: usize, translation: Vector) -> Self {
        PlacedTile { proto, translation, collared: None }
    }

    /// Placement key used for set comparisons.
    pub fn key(&self) -> (usize, i64, i64) {
        let (x, y) = self.translation.snapped();
        (self.proto, x, y)
    }
}

/// Query regions for counting and containment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vector, hi: Vector },
    Disk { center: Vector, radius: f64 },
    Shape { shape: TileShape },
}

/// How a tile relates to a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Fully,
    Intersects,
    AnchorIn,
}

/// Coarse relation of a (scaled, translated) shape to a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Inside,
    Outside,
    Partial,
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Box { .. } | Region::Disk { .. } => 2,
            Region::Shape { shape } => shape.dim(),
        }
    }

    /// `scale·R + t`.
    pub fn transformed(&self, scale: f64, t: Vector) -> Region {
        match self {
            Region::Interval { lo, hi } => Region::Interval { lo: scale * lo + t.x, hi: scale * hi + t.x },
            Region::Box { lo, hi } => Region::Box { lo: scale * *lo + t, hi: scale * *hi + t },
            Region::Disk { center, radius } => Region::Disk { center: scale * *center + t, radius: scale * radius },
            Region::Shape { shape } => Region::Shape { shape: shape.transformed(scale, t) },
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Interval { lo, hi } => hi - lo,
            Region::Box { lo, hi } => (hi.x - lo.x) * (hi.y - lo.y),
            Region::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Region::Shape { shape } => shape.volume(),
        }
    }

    /// Boundary measure: 2 points in dimension one, perimeter in dimension two.
    pub fn boundary_volume(&self) -> f64 {
        match self {
            Region::Interval { .. } => 2.0,
            Region::Box { lo, hi } => 2.0 * ((hi.x - lo.x) + (hi.y - lo.y)),
            Region::Disk { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            Region::Shape { shape } => shape.perimeter(),
        }
    }

    /// Radius of a ball contained in the region.
    pub fn inradius(&self) -> f64 {
        match self {
            Region::Interval { lo, hi } => 0.5 * (hi - lo),
            Region::Box { lo, hi } => 0.5 * (hi.x - lo.x).min(hi.y - lo.y),
            Region::Disk { radius, .. } => *radius,
            Region::Shape { shape } => {
                let c = shape.vertices().into_iter().fold(Vector::ZERO, |a, b| a + b);
                let n = shape.vertices().len() as f64;
                shape.depth((1.0 / n) * c).max(0.0)
            }
        }
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Region::Interval { lo, hi } => BBox { lo: Vector::scalar(*lo), hi: Vector::scalar(*hi) },
            Region::Box { lo, hi } => BBox { lo: *lo, hi: *hi },
            Region::Disk { center, radius } => BBox {
                lo: *center - Vector::new(*radius, *radius),
                hi: *center + Vector::new(*radius, *radius),
            },
            Region::Shape { shape } => shape.bbox(),
        }
    }

    pub fn contains_point(&self, p: Vector, tol: f64) -> bool {
        match self {
            Region::Interval { lo, hi } => p.x >= lo - tol && p.x <= hi + tol,
            Region::Box { lo, hi } => p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol,
            Region::Disk { center, radius } => (p - *center).norm() <= radius + tol,
            Region::Shape { shape } => shape.contains_point(p, tol),
        }
    }

    /// Corner points of polygonal regions; `None` for disks.
    pub fn vertices(&self) -> Option<Vec<Vector>> {
        match self {
            Region::Interval { lo, hi } => Some(vec![Vector::scalar(*lo), Vector::scalar(*hi)]),
            Region::Box { lo, hi } => Some(vec![*lo, Vector::new(hi.x, lo.y), *hi, Vector::new(lo.x, hi.y)]),
            Region::Disk { .. } => None,
            Region::Shape { shape } => Some(shape.vertices()),
        }
    }

    /// Relation of `scale·shape + t` to the region; shapes meeting it only along the boundary are `Outside`.
    pub fn relation(&self, shape: &TileShape, scale: f64, t: Vector, tol: f64) -> Relation {
        if !self.bbox().overlaps(&shape.bbox().transformed(scale, t), tol) {
            return Relation::Outside;
        }
        let verts: Vec<Vector> = match shape {
            TileShape::Interval { lo, hi } => vec![Vector::scalar(scale * lo + t.x), Vector::scalar(scale * hi + t.x)],
            TileShape::Polygon(v) => v.iter().map(|p| scale * *p + t).collect(),
        };
        if verts.iter().all(|p| self.contains_point(*p, tol)) {
            return Relation::Inside;
        }
        let disjoint = match self {
            Region::Disk { center, radius } => {
                let placed = TileShape::Polygon(verts);
                !placed.contains_point(*center, 0.0) && segment_distance(&placed.vertices(), *center) >= radius - tol
            }
            _ => {
                let rv = self.vertices().expect("polygonal region");
                if shape.dim() == 1 {
                    let (a, b) = (verts[0].x.min(verts[1].x), verts[0].x.max(verts[1].x));
                    let (lo, hi) = (rv[0].x.min(rv[1].x), rv[0].x.max(rv[1].x));
                    b.min(hi) - a.max(lo) <= tol
                } else {
                    convex_disjoint(&verts, &rv, -tol)
                }
            }
        };
        if disjoint {
            Relation::Outside
        } else {
            Relation::Partial
        }
    }
}

fn segment_distance(poly: &[Vector], p: Vector) -> f64 {
    edges(poly)
        .map(|(a, b)| {
            let e = b - a;
            let s = ((p - a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
            (a + s * e - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Tests a prototile copy placed at `translation` (anchor = translation) against a region.
pub fn containment(region: &Region, shape: &TileShape, translation: Vector, mode: Containment) -> Result<bool> {
    if region.dim() != shape.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), found: shape.dim() });
    }
    Ok(match mode {
        Containment::Fully => region.relation(shape, 1.0, translation, EPS) == Relation::Inside,
        Containment::Intersects => region.relation(shape, 1.0, translation, EPS) != Relation::Outside,
        Containment::AnchorIn => region.contains_point(translation, EPS),
    })
}

fn is_axis_rectangle(v: &[Vector]) -> bool {
    v.len() == 4 && edges(v).all(|(a, b)| a.x == b.x || a.y == b.y)
}

/// Whether two placed tiles touch (closed intersection non-empty within `tol`).
pub fn touches(a: &TileShape, ta: Vector, b: &TileShape, tb: Vector, tol: f64) -> bool {
    match (a, b) {
        (TileShape::Interval { lo: a0, hi: a1 }, TileShape::Interval { lo: b0, hi: b1 }) => {
            (a1 + ta.x).min(b1 + tb.x) - (a0 + ta.x).max(b0 + tb.x) >= -tol
        }
        (TileShape::Polygon(p), TileShape::Polygon(q)) => {
            let boxes_meet = BBox::of_points(p).transformed(1.0, ta).overlaps(&BBox::of_points(q).transformed(1.0, tb), tol);
            boxes_meet && ((is_axis_rectangle(p) && is_axis_rectangle(q)) || !separated(p, ta, q, tb, tol))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> TileShape {
        TileShape::rectangle(-0.5, 0.5, -0.5, 0.5).unwrap()
    }

    #[test]
    fn apply_map_interval() {
        let f = AffineContraction::new(1, 0.25, Vector::scalar(-0.375)).unwrap();
        let img = apply_map(&f, &TileShape::interval(-0.5, 0.5).unwrap()).unwrap();
        assert_eq!(img, TileShape::Interval { lo: -0.5, hi: -0.25 });
    }

    #[test]
    fn apply_map_square() {
        let f = AffineContraction::new(2, 0.5, Vector::new(0.25, 0.25)).unwrap();
        let img = apply_map(&f, &unit_square()).unwrap();
        let b = img.bbox();
        assert_eq!((b.lo, b.hi), (Vector::new(0.0, 0.0), Vector::new(0.5, 0.5)));
    }

    #[test]
    fn apply_map_rejects_dimension_mismatch() {
        let f = AffineContraction::new(2, 0.5, Vector::ZERO).unwrap();
        assert!(matches!(apply_map(&f, &TileShape::interval(-0.5, 0.5).unwrap()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn intersection_dimensions() {
        let i = |a, b| TileShape::interval(a, b).unwrap();
        assert_eq!(intersection_dimension(&i(0.0, 1.0), &i(1.0, 2.0), EPS).unwrap(), 0);
        assert_eq!(intersection_dimension(&i(0.0, 1.0), &i(0.5, 1.5), EPS).unwrap(), 1);
        assert_eq!(intersection_dimension(&i(0.0, 1.0), &i(1.5, 2.0), EPS).unwrap(), -1);
        let s = unit_square();
        assert_eq!(intersection_dimension(&s, &s.translated(Vector::new(1.0, 0.0)), EPS).unwrap(), 1);
        assert_eq!(intersection_dimension(&s, &s.translated(Vector::new(1.0, 1.0)), EPS).unwrap(), 0);
        assert_eq!(intersection_dimension(&s, &s.translated(Vector::new(0.5, 0.5)), EPS).unwrap(), 2);
        assert_eq!(intersection_dimension(&s, &s.translated(Vector::new(1.5, 0.0)), EPS).unwrap(), -1);
    }

    #[test]
    fn degenerate_shapes_rejected() {
        assert!(TileShape::interval(1.0, 1.0).is_err());
        assert!(TileShape::polygon(vec![Vector::ZERO, Vector::new(1.0, 0.0), Vector::new(2.0, 0.0)]).is_err());
        let bowtie = vec![Vector::new(0.0, 0.0), Vector::new(1.0, 1.0), Vector::new(1.0, 0.0), Vector::new(0.0, 1.0)];
        assert!(TileShape::polygon(bowtie).is_err());
    }

    #[test]
    fn containment_examples() {
        let r = Region::Interval { lo: 0.0, hi: 10.0 };
        let t = TileShape::interval(-0.5, 0.5).unwrap();
        assert!(containment(&r, &t, Vector::scalar(2.5), Containment::Fully).unwrap());
        assert!(!containment(&r, &t, Vector::scalar(10.0), Containment::Fully).unwrap());
        assert!(containment(&r, &t, Vector::scalar(10.0), Containment::Intersects).unwrap());
        let b = Region::Box { lo: Vector::ZERO, hi: Vector::new(4.0, 4.0) };
        assert!(!containment(&b, &unit_square(), Vector::new(3.75, 0.5), Containment::Fully).unwrap());
        assert!(containment(&b, &unit_square(), Vector::new(3.75, 0.5), Containment::AnchorIn).unwrap());
    }

    #[test]
    fn disk_relation() {
        let d = Region::Disk { center: Vector::ZERO, radius: 1.0 };
        let s = unit_square();
        assert_eq!(d.relation(&s, 1.0, Vector::ZERO, EPS), Relation::Inside);
        assert_eq!(d.relation(&s, 1.0, Vector::new(1.2, 0.0), EPS), Relation::Partial);
        assert_eq!(d.relation(&s, 1.0, Vector::new(1.4, 1.4), EPS), Relation::Outside);
    }

    #[test]
    fn ccw_normalisation() {
        let cw = vec![Vector::new(0.0, 0.0), Vector::new(0.0, 1.0), Vector::new(1.0, 0.0)];
        let TileShape::Polygon(v) = TileShape::polygon(cw).unwrap() else { panic!() };
        assert!(signed_area(&v) > 0.0);
    }

    fn map_strategy() -> impl Strategy<Value = AffineContraction> {
        (0.01f64..0.99, -5.0f64..5.0, -5.0f64..5.0).prop_map(|(s, x, y)| AffineContraction::new(2, s, Vector::new(x, y)).unwrap())
    }

    proptest! {
        #[test]
        fn inverse_composition_recovers_input(f in map_strategy(), x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let p = Vector::new(x, y);
            let q = f.inverse().apply(f.apply(p));
            prop_assert!((q - p).max_abs() < 1e-9);
            let id = f.inverse().compose(&f).unwrap();
            prop_assert!((id.scale - 1.0).abs() < 1e-12);
            prop_assert!(id.offset.max_abs() < 1e-9);
        }

        #[test]
        fn intersection_dimension_symmetric(dx in -1.5f64..1.5, dy in -1.5f64..1.5, snapx in any::<bool>()) {
            let s = unit_square();
            let dx = if snapx { dx.round() } else { dx };
            let t = s.translated(Vector::new(dx, dy));
            prop_assert_eq!(intersection_dimension(&s, &t, EPS).unwrap(), intersection_dimension(&t, &s, EPS).unwrap());
        }

        #[test]
        fn fully_implies_intersects(x in -2.0f64..6.0, y in -2.0f64..6.0, r in 0.5f64..3.0) {
            let regions = [
                Region::Box { lo: Vector::ZERO, hi: Vector::new(4.0, 4.0) },
                Region::Disk { center: Vector::new(2.0, 2.0), radius: r },
            ];
            for reg in &regions {
                let t = Vector::new(x, y);
                if containment(reg, &unit_square(), t, Containment::Fully).unwrap() {
                    prop_assert!(containment(reg, &unit_square(), t, Containment::Intersects).unwrap());
                    prop_assert!(containment(reg, &unit_square(), t, Containment::AnchorIn).unwrap());
                }
            }
        }
    }
}
