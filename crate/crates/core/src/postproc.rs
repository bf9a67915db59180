//! Field evaluation, line slices, error norms against exact solutions and
//! cross-mesh relative errors.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::assembly::{trace_network, FractureTrace};
use crate::error::{Error, Result};
use crate::fem::{interpolate, QuadMap};
use crate::geom::{convex_overlap_area, Point2};
use crate::mesh::Mesh;
use crate::model::FractureNetwork;
use crate::quadrature::{QuadRule, TRI7};

/// Nodal values over all vertices of a mesh.
#[derive(Clone, Debug)]
pub struct PressureField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

/// One sample of a line slice; `value` is `None` outside the mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub value: Option<f64>,
}

impl PressureField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(alloc::format!("value at vertex {i} is not finite")));
        }
        Ok(Self { mesh, values })
    }

    fn cell_values(&self, c: usize) -> ([f64; 4], usize) {
        let conn = self.mesh.cell(c);
        let mut v = [0.0; 4];
        for (k, &j) in conn.iter().enumerate() {
            v[k] = self.values[j];
        }
        (v, conn.len())
    }

    pub fn try_evaluate(&self, p: Point2) -> Option<f64> {
        let c = self.mesh.locate_point(p)?;
        let (v, n) = self.cell_values(c);
        Some(interpolate(&self.mesh.cell_polygon(c), p, &v[..n]))
    }

    pub fn evaluate(&self, p: Point2) -> Result<f64> {
        self.try_evaluate(p).ok_or(Error::OutsideDomain { x: p.x, y: p.y })
    }

    /// `n` equally spaced samples from `a` to `b`.
    pub fn slice_profile(&self, a: Point2, b: Point2, n: usize) -> Result<Vec<SlicePoint>> {
        if n < 2 {
            return Err(Error::InvalidArgument("a slice needs at least 2 samples".into()));
        }
        let len = a.distance(b);
        Ok((0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                let p = if k + 1 == n { b } else { a.lerp(b, t) };
                SlicePoint { s: t * len, x: p.x, y: p.y, value: self.try_evaluate(p) }
            })
            .collect())
    }

    /// Piecewise-constant cell value: mean of the vertex values.
    pub fn cell_mean(&self, c: usize) -> f64 {
        let (v, n) = self.cell_values(c);
        v[..n].iter().sum::<f64>() / n as f64
    }

    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Calls `f(point, weight, value)` at every quadrature point of cell `c`:
/// the 7-point rule on triangles, `quad_n`×`quad_n` Gauss on quads.
fn for_each_quadrature_point(field: &PressureField, c: usize, quad: &QuadRule, mut f: impl FnMut(Point2, f64, f64)) {
    let poly = field.mesh.cell_polygon(c);
    let (vals, n) = field.cell_values(c);
    let v = poly.vertices();
    if n == 3 {
        let area = poly.area();
        for (l, &w) in TRI7.bary.iter().zip(TRI7.weights) {
            let p = v[0] * l[0] + v[1] * l[1] + v[2] * l[2];
            f(p, w * area, l[0] * vals[0] + l[1] * vals[1] + l[2] * vals[2]);
        }
    } else {
        let map = QuadMap::new(&poly);
        for ((xi, eta), w) in quad.points() {
            let (s, det) = map.eval_reference(xi, eta);
            let (p, _) = map.map(xi, eta);
            f(p, w * det, (0..4).map(|i| s.values[i] * vals[i]).sum());
        }
    }
}

/// Errors of a discrete field against an exact solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    /// Maximum over quadrature points and vertices.
    pub linf: f64,
    pub linf_quadrature: f64,
    pub linf_vertex: f64,
}

/// Default Gauss points per direction on quad cells.
pub const DEFAULT_QUAD_N: usize = 4;

/// L1 and L2 by the 7-point rule on triangles and `quad_n`×`quad_n` Gauss on
/// quads; L∞ over the same points and the vertices.
pub fn norms_vs_analytic(field: &PressureField, exact: impl Fn(Point2) -> f64, quad_n: usize) -> Result<Norms> {
    let quad = QuadRule::gauss(quad_n)?;
    let mut n = Norms::default();
    for c in 0..field.mesh.n_cells() {
        for_each_quadrature_point(field, c, &quad, |p, w, v| {
            let e = (v - exact(p)).abs();
            n.l1 += w * e;
            n.l2 += w * e * e;
            n.linf_quadrature = n.linf_quadrature.max(e);
        });
    }
    for (p, v) in field.mesh.vertices().iter().zip(&field.values) {
        n.linf_vertex = n.linf_vertex.max((v - exact(*p)).abs());
    }
    n.l2 = n.l2.sqrt();
    n.linf = n.linf_quadrature.max(n.linf_vertex);
    Ok(n)
}

/// Relative errors of a field against a reference field on another mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub err_m: f64,
    /// `None` when the network is empty or misses the domain.
    pub err_f: Option<f64>,
    pub dp_ref: f64,
    /// Sum of the cell-overlap areas (should equal the domain area).
    pub overlap_area: f64,
}

/// Relative L² errors over matrix cells and fracture pieces, with cell values
/// taken as vertex means and weights given by the geometric overlaps of the
/// two meshes.
pub fn relative_errors(
    test: &PressureField,
    reference: &PressureField,
    network: &FractureNetwork,
) -> Result<ErrorReport> {
    let (lo, hi) = reference.range();
    let dp_ref = hi - lo;
    if !(dp_ref > 0.0) {
        return Err(Error::InvalidData("reference field has zero range".into()));
    }
    let (rm, tm) = (&reference.mesh, &test.mesh);
    let test_means: Vec<f64> = (0..tm.n_cells()).map(|c| test.cell_mean(c)).collect();
    let mut sum = 0.0;
    let mut overlap_area = 0.0;
    for i in 0..rm.n_cells() {
        let pi = rm.cell_polygon(i);
        let mi = reference.cell_mean(i);
        for j in tm.cells_in_box(&pi.bbox()) {
            let a = convex_overlap_area(pi.vertices(), tm.cell_polygon(j).vertices());
            if a > 0.0 {
                overlap_area += a;
                sum += a * (mi - test_means[j]) * (mi - test_means[j]);
            }
        }
    }
    let err_m = (sum / (rm.area() * dp_ref * dp_ref)).sqrt();

    let err_f = if network.is_empty() {
        None
    } else {
        let rt = trace_network(rm, network)?;
        let tt = trace_network(tm, network)?;
        let mut sum = 0.0;
        let mut gamma = 0.0;
        for (r, t) in rt.iter().zip(&tt) {
            let curve = &network.fractures[r.fracture].curve;
            gamma += r.length(curve);
            for_each_overlap(r, t, |ci, cj, ta, tb| {
                let d = reference.cell_mean(ci) - test_means[cj];
                sum += curve.arc_length(ta, tb) * d * d;
            });
        }
        (gamma > 0.0).then(|| (sum / (gamma * dp_ref * dp_ref)).sqrt())
    };
    Ok(ErrorReport { err_m, err_f, dp_ref, overlap_area })
}

/// Calls `f(cell_a, cell_b, t_a, t_b)` for every overlapping pair of pieces
/// of two traces of the same fracture. Pieces are sorted and disjoint.
fn for_each_overlap(a: &FractureTrace, b: &FractureTrace, mut f: impl FnMut(usize, usize, f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.pieces.len() && j < b.pieces.len() {
        let (p, q) = (&a.pieces[i], &b.pieces[j]);
        let ta = p.interval.t_a.max(q.interval.t_a);
        let tb = p.interval.t_b.min(q.interval.t_b);
        if tb > ta {
            f(p.cell, q.cell, ta, tb);
        }
        if p.interval.t_b <= q.interval.t_b {
            i += 1;
        } else {
            j += 1;
        }
    }
}
