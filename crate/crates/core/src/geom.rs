//! Planar geometry: points, fracture-aligned frames, convex cells, and the
//! clipping/tracing kernels that split fractures into per-cell pieces.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by a quarter turn.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn empty() -> Self {
        Self { min: Point2::new(f64::INFINITY, f64::INFINITY), max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY) }
    }

    pub fn from_points(pts: &[Point2]) -> Self {
        let mut b = Self::empty();
        for &p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: Point2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn expanded(&self, margin: f64) -> BBox {
        BBox {
            min: Point2::new(self.min.x - margin, self.min.y - margin),
            max: Point2::new(self.max.x + margin, self.max.y + margin),
        }
    }

    pub fn intersects(&self, o: &BBox) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Rotation (and optional shift) between global `(x, y)` and a fracture-aligned
/// local frame `(ξ, η)`: `(ξ, η) = R(θ)·(p − shift)` with
/// `R = [[cos θ, sin θ], [−sin θ, cos θ]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform2 {
    pub theta: f64,
    pub shift: Point2,
}

impl Transform2 {
    pub fn new(theta: f64) -> Self {
        Self { theta, shift: Point2::default() }
    }

    pub fn with_shift(theta: f64, shift: Point2) -> Self {
        Self { theta, shift }
    }

    pub fn rotation(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        [[c, s], [-s, c]]
    }

    pub fn to_local(&self, p: Point2) -> Point2 {
        let [[a, b], [c, d]] = self.rotation();
        let q = p - self.shift;
        Point2::new(a * q.x + b * q.y, c * q.x + d * q.y)
    }

    pub fn to_global(&self, q: Point2) -> Point2 {
        let [[a, b], [c, d]] = self.rotation();
        Point2::new(a * q.x + c * q.y, b * q.x + d * q.y) + self.shift
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        self.a.lerp(self.b, t)
    }

    /// Closest distance from `p` to the segment.
    pub fn distance_to(&self, p: Point2) -> f64 {
        let d = self.b - self.a;
        let l2 = d.norm2();
        if l2 == 0.0 {
            return p.distance(self.a);
        }
        let t = ((p - self.a).dot(d) / l2).clamp(0.0, 1.0);
        p.distance(self.point_at(t))
    }
}

/// A parameter sub-interval `[t_a, t_b]` of a curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamInterval {
    pub t_a: f64,
    pub t_b: f64,
}

impl ParamInterval {
    /// Builds the interval, ordering the endpoints.
    pub fn new(t0: f64, t1: f64) -> Self {
        if t0 <= t1 {
            Self { t_a: t0, t_b: t1 }
        } else {
            Self { t_a: t1, t_b: t0 }
        }
    }

    pub fn len(&self) -> f64 {
        self.t_b - self.t_a
    }

    pub fn is_empty(&self) -> bool {
        self.t_b <= self.t_a
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.t_a + self.t_b)
    }

    pub fn overlap(&self, o: &ParamInterval) -> f64 {
        (self.t_b.min(o.t_b) - self.t_a.max(o.t_a)).max(0.0)
    }
}

/// Length and parameter tolerances used by the clipping kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomTol {
    /// Pieces shorter than this (model units) are dropped.
    pub len: f64,
    /// Distance below which a point counts as lying on a cell edge.
    pub edge: f64,
    /// Parameter accuracy of curve/cell crossings.
    pub param: f64,
}

impl GeomTol {
    /// Tolerances scaled to a domain of the given diameter.
    pub fn for_diameter(diameter: f64) -> Self {
        Self { len: 1e-12 * diameter, edge: 1e-12 * diameter, param: 1e-14 }
    }
}

/// A convex cell (triangle or quadrilateral) with counter-clockwise vertices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellPolygon {
    verts: [Point2; 4],
    n: usize,
}

impl CellPolygon {
    pub fn triangle(a: Point2, b: Point2, c: Point2) -> Self {
        Self { verts: [a, b, c, Point2::default()], n: 3 }
    }

    pub fn quad(a: Point2, b: Point2, c: Point2, d: Point2) -> Self {
        Self { verts: [a, b, c, d], n: 4 }
    }

    pub fn from_slice(pts: &[Point2]) -> Result<Self> {
        match *pts {
            [a, b, c] => Ok(Self::triangle(a, b, c)),
            [a, b, c, d] => Ok(Self::quad(a, b, c, d)),
            _ => Err(Error::InvalidMesh(alloc::format!("cells need 3 or 4 vertices, got {}", pts.len()))),
        }
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::quad(Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1))
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.verts[..self.n]
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edge(&self, k: usize) -> (Point2, Point2) {
        (self.verts[k], self.verts[(k + 1) % self.n])
    }

    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(self.vertices())
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point2 {
        polygon_centroid(self.vertices())
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_points(self.vertices())
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].distance(v[j]));
            }
        }
        d
    }

    /// Signed distance of `p` to the supporting line of edge `k`, positive on
    /// the interior side.
    pub fn edge_distance(&self, k: usize, p: Point2) -> f64 {
        let (a, b) = self.edge(k);
        let e = b - a;
        e.cross(p - a) / e.norm()
    }

    /// Closed-cell membership with an outward tolerance `eps`.
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        (0..self.n).all(|k| self.edge_distance(k, p) >= -eps)
    }

    /// Fails unless the cell has positive area and is convex.
    pub fn check_nondegenerate(&self) -> Result<()> {
        let d = self.diameter();
        let area = self.signed_area();
        if !(area > 1e-14 * d * d) {
            return Err(Error::InvalidMesh(alloc::format!("cell has non-positive or vanishing area {area:e}")));
        }
        for k in 0..self.n {
            let (a, b) = self.edge(k);
            let c = self.verts[(k + 2) % self.n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(Error::InvalidMesh("cell is not strictly convex".into()));
            }
        }
        Ok(())
    }

    /// True when all points lie within `eps` of one and the same edge segment.
    pub fn on_edge(&self, pts: &[Point2], eps: f64) -> bool {
        (0..self.n).any(|k| {
            let (a, b) = self.edge(k);
            let s = Segment2::new(a, b);
            pts.iter().all(|&p| s.distance_to(p) <= eps)
        })
    }
}

pub fn polygon_signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        s += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * s
}

fn polygon_centroid(v: &[Point2]) -> Point2 {
    let n = v.len();
    let mut a = 0.0;
    let mut c = Point2::default();
    for i in 0..n {
        let w = v[i].cross(v[(i + 1) % n]);
        a += w;
        c += (v[i] + v[(i + 1) % n]) * w;
    }
    if a == 0.0 {
        let s = v.iter().fold(Point2::default(), |acc, &p| acc + p);
        return s * (1.0 / n as f64);
    }
    c * (1.0 / (3.0 * a))
}

/// Intersection of two convex polygons (both counter-clockwise), by
/// successive half-plane clipping of `subject` against the edges of `clip`.
pub fn clip_convex_polygons(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut out: Vec<Point2> = subject.to_vec();
    let m = clip.len();
    for k in 0..m {
        if out.is_empty() {
            break;
        }
        let a = clip[k];
        let e = clip[(k + 1) % m] - a;
        let input = core::mem::take(&mut out);
        let side = |p: Point2| e.cross(p - a);
        for i in 0..input.len() {
            let p = input[i];
            let q = input[(i + 1) % input.len()];
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push(p.lerp(q, t));
            }
        }
    }
    out
}

/// Area of the intersection of two convex polygons.
pub fn convex_overlap_area(a: &[Point2], b: &[Point2]) -> f64 {
    let poly = clip_convex_polygons(a, b);
    if poly.len() < 3 {
        return 0.0;
    }
    polygon_signed_area(&poly).max(0.0)
}

/// Clips a straight segment (parameterized by `t ∈ [0, 1]`) against a closed
/// convex cell. Returns the sub-interval inside the cell, or `None` when the
/// intersection is shorter than `tol.len`.
pub fn clip_segment_cell(seg: &Segment2, cell: &CellPolygon, tol: &GeomTol) -> Result<Option<ParamInterval>> {
    cell.check_nondegenerate()?;
    let d = seg.b - seg.a;
    let len = d.norm();
    if len <= tol.len {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for k in 0..cell.n_vertices() {
        let (p, q) = cell.edge(k);
        let e = q - p;
        let el = e.norm();
        let f0 = e.cross(seg.a - p) / el;
        let df = e.cross(d) / el;
        if df.abs() <= tol.edge {
            // parallel to this edge: keep iff on the interior side
            if f0 + 0.5 * df < -tol.edge {
                return Ok(None);
            }
            continue;
        }
        let t = -f0 / df;
        if df > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        if hi <= lo {
            return Ok(None);
        }
    }
    if (hi - lo) * len < tol.len {
        return Ok(None);
    }
    Ok(Some(ParamInterval { t_a: lo, t_b: hi }))
}

/// A user-supplied smooth parametric curve `t ↦ (x(t), y(t))`.
pub trait ParametricCurve: Send + Sync + fmt::Debug {
    fn point(&self, t: f64) -> Point2;
    fn tangent(&self, t: f64) -> Point2;
    fn domain(&self) -> (f64, f64);

    /// Upper bound on `|c''(t)|` over the domain. The default estimates it by
    /// finite differences of the tangent with a safety factor of two.
    fn accel_bound(&self) -> f64 {
        let (a, b) = self.domain();
        let n = 2000;
        let h = (b - a) / n as f64;
        let mut m: f64 = 0.0;
        let mut prev = self.tangent(a);
        for i in 1..=n {
            let cur = self.tangent(a + h * i as f64);
            m = m.max((cur - prev).norm() / h);
            prev = cur;
        }
        2.0 * m
    }
}

/// Polyline parameterized by arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pts: Vec<Point2>,
    cum: Vec<f64>,
}

impl Polyline {
    pub fn new(pts: Vec<Point2>) -> Result<Self> {
        if pts.len() < 2 {
            return Err(Error::InvalidData("polyline needs at least two vertices".into()));
        }
        let mut cum = Vec::with_capacity(pts.len());
        cum.push(0.0);
        for w in pts.windows(2) {
            let l = w[0].distance(w[1]);
            if !(l > 0.0) {
                return Err(Error::InvalidData("polyline has repeated consecutive vertices".into()));
            }
            cum.push(cum.last().unwrap() + l);
        }
        Ok(Self { pts, cum })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.pts
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Arc-length offsets of the vertices.
    pub fn offsets(&self) -> &[f64] {
        &self.cum
    }

    pub fn segment(&self, i: usize) -> Segment2 {
        Segment2::new(self.pts[i], self.pts[i + 1])
    }

    pub fn n_segments(&self) -> usize {
        self.pts.len() - 1
    }

    fn locate(&self, s: f64) -> usize {
        let k = self.cum.partition_point(|&c| c <= s);
        k.clamp(1, self.pts.len() - 1) - 1
    }
}

/// Circular arc `c + r (cos t, sin t)` for `t` between `t0` and `t1`
/// (either order; arc length is measured from `t0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularArc {
    pub center: Point2,
    pub radius: f64,
    pub t0: f64,
    pub t1: f64,
}

impl CircularArc {
    fn contains_angle(&self, phi: f64) -> Option<f64> {
        let (lo, hi) = (self.t0.min(self.t1), self.t0.max(self.t1));
        if hi - lo >= 2.0 * PI {
            let k = ((lo - phi) / (2.0 * PI)).ceil();
            return Some(phi + 2.0 * PI * k);
        }
        let k = ((lo - phi) / (2.0 * PI)).ceil();
        let t = phi + 2.0 * PI * k;
        (t <= hi).then_some(t)
    }
}

/// Fracture geometry.
#[derive(Clone, Debug)]
pub enum Curve {
    /// Straight segment, `t ∈ [0, 1]`.
    Segment(Segment2),
    /// Polyline, `t` = arc length.
    Polyline(Polyline),
    /// Circular arc, `t` = angle.
    Arc(CircularArc),
    /// Arbitrary smooth parametric curve.
    Parametric(Arc<dyn ParametricCurve>),
}

impl Curve {
    pub fn segment(a: Point2, b: Point2) -> Self {
        Curve::Segment(Segment2::new(a, b))
    }

    pub fn polyline(pts: Vec<Point2>) -> Result<Self> {
        Polyline::new(pts).map(Curve::Polyline)
    }

    pub fn arc(center: Point2, radius: f64, t0: f64, t1: f64) -> Result<Self> {
        if !(radius > 0.0) || !(t0 != t1) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidData("arc needs a positive radius and t0 != t1".into()));
        }
        Ok(Curve::Arc(CircularArc { center, radius, t0, t1 }))
    }

    /// Wraps a parametric curve after checking `ẋ² + ẏ² > 0` at 1000 samples.
    pub fn parametric(c: Arc<dyn ParametricCurve>) -> Result<Self> {
        let (a, b) = c.domain();
        if !(b > a) {
            return Err(Error::InvalidData("parametric curve needs a non-empty domain".into()));
        }
        let n = 1000;
        for i in 0..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            if !(c.tangent(t).norm2() > 0.0) {
                return Err(Error::InvalidData(alloc::format!("curve is degenerate at t = {t}")));
            }
        }
        Ok(Curve::Parametric(c))
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Curve::Segment(_) => (0.0, 1.0),
            Curve::Polyline(p) => (0.0, p.length()),
            Curve::Arc(a) => (a.t0.min(a.t1), a.t0.max(a.t1)),
            Curve::Parametric(c) => c.domain(),
        }
    }

    pub fn point(&self, t: f64) -> Point2 {
        match self {
            Curve::Segment(s) => s.point_at(t),
            Curve::Polyline(p) => {
                let i = p.locate(t);
                let seg = p.segment(i);
                let l = p.cum[i + 1] - p.cum[i];
                seg.point_at((t - p.cum[i]) / l)
            }
            Curve::Arc(a) => {
                let (s, c) = t.sin_cos();
                a.center + Point2::new(c, s) * a.radius
            }
            Curve::Parametric(c) => c.point(t),
        }
    }

    /// Derivative `(ẋ, ẏ)` with respect to the curve parameter.
    pub fn tangent(&self, t: f64) -> Point2 {
        match self {
            Curve::Segment(s) => s.b - s.a,
            Curve::Polyline(p) => {
                let i = p.locate(t);
                let seg = p.segment(i);
                (seg.b - seg.a) * (1.0 / (p.cum[i + 1] - p.cum[i]))
            }
            Curve::Arc(a) => {
                let (s, c) = t.sin_cos();
                Point2::new(-s, c) * a.radius
            }
            Curve::Parametric(c) => c.tangent(t),
        }
    }

    pub fn is_straight(&self) -> bool {
        matches!(self, Curve::Segment(_))
    }

    /// Parameter values where the tangent may jump (interior polyline vertices).
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Curve::Polyline(p) => &p.cum[1..p.cum.len() - 1],
            _ => &[],
        }
    }

    /// Upper bound on `|c''(t)|`.
    pub fn accel_bound(&self) -> f64 {
        match self {
            Curve::Segment(_) | Curve::Polyline(_) => 0.0,
            Curve::Arc(a) => a.radius,
            Curve::Parametric(c) => c.accel_bound(),
        }
    }

    /// Arc length between two parameter values.
    pub fn arc_length(&self, ta: f64, tb: f64) -> f64 {
        match self {
            Curve::Segment(s) => s.length() * (tb - ta).abs(),
            Curve::Polyline(_) => (tb - ta).abs(),
            Curve::Arc(a) => a.radius * (tb - ta).abs(),
            Curve::Parametric(_) => {
                let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
                let n = 64;
                let h = (hi - lo) / n as f64;
                let rule = crate::quadrature::gauss_legendre(5).unwrap();
                let mut s = 0.0;
                for k in 0..n {
                    let a = lo + h * k as f64;
                    for (&x, &w) in rule.points.iter().zip(rule.weights) {
                        s += 0.5 * h * w * self.tangent(a + 0.5 * h * (x + 1.0)).norm();
                    }
                }
                s
            }
        }
    }

    /// Arc length from the start of the curve to parameter `t`.
    pub fn arc_length_from_start(&self, t: f64) -> f64 {
        match self {
            Curve::Arc(a) => a.radius * (t - a.t0).abs(),
            _ => self.arc_length(self.domain().0, t),
        }
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.domain();
        self.arc_length(a, b)
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Curve::Segment(s) => BBox::from_points(&[s.a, s.b]),
            Curve::Polyline(p) => BBox::from_points(&p.pts),
            _ => {
                let (a, b) = self.domain();
                let n = 256;
                let mut bb = BBox::empty();
                for i in 0..=n {
                    bb.include(self.point(a + (b - a) * i as f64 / n as f64));
                }
                // chord sagitta bound
                let h = self.arc_length(a, b) / n as f64;
                bb.expanded(0.125 * self.accel_bound() * h * h + 1e-15)
            }
        }
    }

    /// Shortest distance from `p` to the curve.
    pub fn distance_to(&self, p: Point2) -> f64 {
        match self {
            Curve::Segment(s) => s.distance_to(p),
            Curve::Polyline(pl) => {
                (0..pl.n_segments()).map(|i| pl.segment(i).distance_to(p)).fold(f64::INFINITY, f64::min)
            }
            Curve::Arc(a) => {
                let d = p - a.center;
                let ends = p.distance(self.point(a.t0)).min(p.distance(self.point(a.t1)));
                if d.norm2() == 0.0 {
                    return a.radius;
                }
                match a.contains_angle(d.y.atan2(d.x)) {
                    Some(_) => (d.norm() - a.radius).abs(),
                    None => ends,
                }
            }
            Curve::Parametric(_) => {
                let (a, b) = self.domain();
                let n = 2000;
                let h = (b - a) / n as f64;
                let mut best = (f64::INFINITY, a);
                for i in 0..=n {
                    let t = a + h * i as f64;
                    let d = p.distance(self.point(t));
                    if d < best.0 {
                        best = (d, t);
                    }
                }
                // golden-section refinement around the best sample
                let (mut lo, mut hi) = ((best.1 - h).max(a), (best.1 + h).min(b));
                let g = 0.5 * (5.0_f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let m1 = hi - g * (hi - lo);
                    let m2 = lo + g * (hi - lo);
                    if p.distance(self.point(m1)) < p.distance(self.point(m2)) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                best.0.min(p.distance(self.point(0.5 * (lo + hi))))
            }
        }
    }

    /// Rotates the curve by `dtheta` about the origin, then shifts it.
    pub fn transformed(&self, dtheta: f64, shift: Point2) -> Curve {
        let (s, c) = dtheta.sin_cos();
        let map = move |p: Point2| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y) + shift;
        match self {
            Curve::Segment(seg) => Curve::Segment(Segment2::new(map(seg.a), map(seg.b))),
            Curve::Polyline(pl) => {
                Curve::Polyline(Polyline::new(pl.pts.iter().map(|&p| map(p)).collect()).expect("rigid motion"))
            }
            Curve::Arc(a) => Curve::Arc(CircularArc {
                center: map(a.center),
                radius: a.radius,
                t0: a.t0 + dtheta,
                t1: a.t1 + dtheta,
            }),
            Curve::Parametric(inner) => {
                Curve::Parametric(Arc::new(Transformed { inner: inner.clone(), cos: c, sin: s, shift }))
            }
        }
    }
}

#[derive(Debug)]
struct Transformed {
    inner: Arc<dyn ParametricCurve>,
    cos: f64,
    sin: f64,
    shift: Point2,
}

impl ParametricCurve for Transformed {
    fn point(&self, t: f64) -> Point2 {
        let p = self.inner.point(t);
        Point2::new(self.cos * p.x - self.sin * p.y, self.sin * p.x + self.cos * p.y) + self.shift
    }

    fn tangent(&self, t: f64) -> Point2 {
        let p = self.inner.tangent(t);
        Point2::new(self.cos * p.x - self.sin * p.y, self.sin * p.x + self.cos * p.y)
    }

    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    fn accel_bound(&self) -> f64 {
        self.inner.accel_bound()
    }
}

/// All maximal parameter intervals of `curve` whose image lies inside the
/// closed `cell`, sorted by `t_a`.
pub fn trace_curve_cell(curve: &Curve, cell: &CellPolygon, tol: &GeomTol) -> Result<Vec<ParamInterval>> {
    if !(tol.param > 0.0) {
        return Err(Error::InvalidArgument("parameter tolerance must be positive".into()));
    }
    cell.check_nondegenerate()?;
    let (a, b) = curve.domain();
    let pieces = match curve {
        Curve::Segment(s) => clip_segment_cell(s, cell, tol)?.into_iter().collect(),
        Curve::Polyline(pl) => {
            let mut out = Vec::new();
            for i in 0..pl.n_segments() {
                if let Some(iv) = clip_segment_cell(&pl.segment(i), cell, tol)? {
                    let (s0, l) = (pl.cum[i], pl.cum[i + 1] - pl.cum[i]);
                    out.push(ParamInterval { t_a: s0 + l * iv.t_a, t_b: s0 + l * iv.t_b });
                }
            }
            out
        }
        _ => trace_smooth_range(curve, cell, a, b, cell.diameter(), tol),
    };
    Ok(merge_touching(pieces, tol.param * (b - a).abs().max(1.0)))
}

pub(crate) fn merge_touching(mut v: Vec<ParamInterval>, gap: f64) -> Vec<ParamInterval> {
    v.sort_by(|p, q| p.t_a.total_cmp(&q.t_a));
    let mut out: Vec<ParamInterval> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv.t_a <= last.t_b + gap => last.t_b = last.t_b.max(iv.t_b),
            _ => out.push(iv),
        }
    }
    out
}

/// Traces a smooth (non-polygonal) curve through `cell` over the parameter
/// range `[lo, hi]`. Crossings of each edge line are isolated with a
/// second-order bound on the signed edge distance and refined by bisection.
pub(crate) fn trace_smooth_range(
    curve: &Curve,
    cell: &CellPolygon,
    lo: f64,
    hi: f64,
    step_diam: f64,
    tol: &GeomTol,
) -> Vec<ParamInterval> {
    if !(hi > lo) {
        return Vec::new();
    }
    let accel = curve.accel_bound();
    let speed_max = sampled_speed_max(curve, lo, hi);
    // initial sampling: chord per step at most a quarter of the cell diameter
    let chord = 0.25 * step_diam;
    let n0 = ((speed_max * (hi - lo)) / chord).ceil().clamp(1.0, 1e7) as usize;
    let ptol = tol.param * (hi - lo).abs().max(1.0);
    let eps = tol.edge;

    let mut cuts = vec![lo, hi];
    for k in 0..cell.n_vertices() {
        let (p, q) = cell.edge(k);
        let e = q - p;
        let n = e.perp() * (1.0 / e.norm());
        let g = |t: f64| n.dot(curve.point(t) - p);
        let dg = |t: f64| n.dot(curve.tangent(t));
        let mut stack: Vec<(f64, f64, f64, f64)> = Vec::new();
        let h = (hi - lo) / n0 as f64;
        for i in (0..n0).rev() {
            let t0 = lo + h * i as f64;
            let t1 = if i + 1 == n0 { hi } else { lo + h * (i + 1) as f64 };
            stack.push((t0, g(t0), t1, g(t1)));
        }
        while let Some((t0, g0, t1, g1)) = stack.pop() {
            // distances below the edge tolerance are noise: treat them as on the line
            let (z0, z1) = (g0.abs() <= eps, g1.abs() <= eps);
            if z0 {
                cuts.push(t0);
            }
            if z1 {
                cuts.push(t1);
            }
            let dt = t1 - t0;
            let curv = 0.125 * accel * dt * dt;
            if z0 && z1 && curv <= eps {
                continue;
            }
            if !z0 && !z1 && g0 * g1 < 0.0 {
                let (d0, d1) = (dg(t0), dg(t1));
                let margin = 0.5 * accel * dt;
                let monotone = d0 * d1 > 0.0 && d0.abs() > margin && d1.abs() > margin;
                if monotone || dt <= ptol {
                    cuts.push(bisect(&g, t0, g0, t1, ptol));
                    continue;
                }
            } else if !z0 && !z1 && g0.abs().min(g1.abs()) > curv {
                continue;
            }
            if dt <= ptol {
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            let gm = g(tm);
            stack.push((tm, gm, t1, g1));
            stack.push((t0, g0, tm, gm));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut out: Vec<ParamInterval> = Vec::new();
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        if cell.contains(curve.point(0.5 * (t0 + t1)), tol.edge) {
            match out.last_mut() {
                Some(last) if last.t_b == t0 => last.t_b = t1,
                _ => out.push(ParamInterval { t_a: t0, t_b: t1 }),
            }
        }
    }
    out.retain(|iv| curve.arc_length(iv.t_a, iv.t_b) >= tol.len);
    out
}

fn sampled_speed_max(curve: &Curve, lo: f64, hi: f64) -> f64 {
    let n = 16;
    let accel = curve.accel_bound();
    let mut m: f64 = 0.0;
    for i in 0..=n {
        m = m.max(curve.tangent(lo + (hi - lo) * i as f64 / n as f64).norm());
    }
    m + accel * (hi - lo) / n as f64
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut ga: f64, mut b: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol || m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
