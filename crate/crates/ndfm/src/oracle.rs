//! Reference solvers used to validate the fracture model: the
//! equi-dimensional strip model on a fine grid and the classical conforming
//! DFM with explicit line elements.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use ndfm_core::assembly::dirichlet_values;
use ndfm_core::sparse::Triplet;

use crate::scenario::{solve_problem, SolverSpec};
use ndfm_core::{
    build_rect_mesh, eliminate, Bindings, BoundaryCondition, CellKind, Curve, Expr, FractureNetwork, FullSystem,
    LinearSystem, MatrixPermeability, Mesh, Point2, PressureField, Problem, Segment2, SlicePoint, Tensor2,
};

/// Straight pieces of a fracture with the curve parameter at each start and
/// the parameter per unit length.
fn straight_pieces(curve: &Curve) -> Option<Vec<(Segment2, f64, f64)>> {
    match curve {
        Curve::Segment(s) => Some(vec![(*s, 0.0, 1.0 / s.length())]),
        Curve::Polyline(p) => Some((0..p.n_segments()).map(|i| (p.segment(i), p.offsets()[i], 1.0)).collect()),
        _ => None,
    }
}

/// Signed normal offset of `q` from the centreline and the curve parameter of
/// its foot point, or `None` when the foot point falls outside the curve.
fn strip_offset(curve: &Curve, q: Point2) -> Option<(f64, f64)> {
    if let Curve::Arc(a) = curve {
        let d = q - a.center;
        let (lo, hi) = (a.t0.min(a.t1), a.t0.max(a.t1));
        let phi = d.y.atan2(d.x);
        let t = phi + 2.0 * PI * ((lo - phi) / (2.0 * PI)).ceil();
        return (t <= hi).then(|| (d.norm() - a.radius, t));
    }
    let mut best: Option<(f64, f64)> = None;
    for (s, t0, dt) in straight_pieces(curve)? {
        let d = s.b - s.a;
        let len = d.norm();
        let u = (q - s.a).dot(d) / len;
        if !(0.0..=len).contains(&u) {
            continue;
        }
        let off = d.cross(q - s.a) / len;
        if best.map_or(true, |(b, _)| off.abs() < b.abs()) {
            best = Some((off, t0 + u * dt));
        }
    }
    best
}

/// Fine rectangular grid of the same (rectangular) domain with each fracture
/// replaced by a strip of the given width and isotropic permeability
/// `ε k_f / width`. A cell belongs to a strip when its centre lies within
/// half the width of the centreline (measured along the normal, no end caps);
/// a centre exactly on the strip edge counts only on the negative-normal side.
/// `resolution` is the number of grid nodes per side.
pub fn rasterize_equi_dim(pb: &Problem, resolution: usize, width: f64) -> Result<Problem> {
    let bb = pb.mesh.bbox();
    if (pb.mesh.area() - bb.width() * bb.height()).abs() > 1e-12 * bb.width() * bb.height() {
        bail!("the equi-dimensional oracle needs a rectangular domain");
    }
    if !(width > 0.0) {
        bail!("strip width must be positive");
    }
    let n = resolution.saturating_sub(1);
    let side = bb.width().max(bb.height());
    if n == 0 || width < 3.0 * side / n as f64 * (1.0 - 1e-12) {
        let need = (3.0 * side / width).ceil() as usize + 1;
        bail!("resolution {resolution} does not resolve a strip of width {width} with 3 cells; use at least {need}");
    }
    let mesh = build_rect_mesh(n, n, [bb.min.x, bb.min.y, bb.max.x, bb.max.y])?;
    let half = 0.5 * width;
    let tie = 1e-12 * bb.diagonal();
    let mut table = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let q = mesh.cell_polygon(c).centroid();
        let mut kf: Option<f64> = None;
        for f in &pb.network.fractures {
            let Some((off, t)) = strip_offset(&f.curve, q) else { continue };
            if off.abs() < half - tie || (off.abs() <= half + tie && off < 0.0) {
                let k = f.conductance(t)? / width;
                kf = Some(kf.map_or(k, |v: f64| v.max(k)));
            }
        }
        table.push(match kf {
            Some(k) => Tensor2::isotropic(k),
            None => match &pb.perm {
                MatrixPermeability::Constant(t) => *t,
                MatrixPermeability::PerCell(_) => match pb.mesh.locate_point(q) {
                    Some(cell) => pb.perm.at(cell),
                    None => bail!("grid cell centre {q:?} is outside the source mesh"),
                },
            },
        });
    }
    Ok(Problem {
        mesh: std::sync::Arc::new(mesh),
        perm: MatrixPermeability::PerCell(table),
        network: FractureNetwork::new(Vec::new()),
        bcs: pb.bcs.clone(),
        source: pb.source.clone(),
    })
}

const GAUSS2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

fn eval(e: &Expr, p: Point2) -> Result<f64> {
    Ok(e.eval(&Bindings::xy(p.x, p.y))?)
}

/// P1 stiffness and load on a triangle; the load uses the edge-midpoint rule.
fn p1_triangle(v: &[Point2], k: &Tensor2, f: &Expr) -> Result<([[f64; 4]; 4], [f64; 4])> {
    let area2 = (v[1] - v[0]).cross(v[2] - v[0]);
    let grad = |i: usize| {
        let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
        Point2::new(a.y - b.y, b.x - a.x) * (1.0 / area2)
    };
    let mut m = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = 0.5 * area2 * grad(i).dot(k.apply(grad(j)));
        }
    }
    let mut b = [0.0; 4];
    for e in 0..3 {
        let (i, j) = (e, (e + 1) % 3);
        let fm = eval(f, (v[i] + v[j]) * 0.5)?;
        b[i] += area2 / 12.0 * fm;
        b[j] += area2 / 12.0 * fm;
    }
    Ok((m, b))
}

/// Q1 stiffness and load on an axis-aligned rectangle, 2×2 Gauss.
fn q1_rectangle(v: &[Point2], k: &Tensor2, f: &Expr) -> Result<([[f64; 4]; 4], [f64; 4])> {
    let (x0, x1) =
        (v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) =
        (v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min), v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max));
    for p in v {
        if !((p.x == x0 || p.x == x1) && (p.y == y0 || p.y == y1)) {
            bail!("classical oracle only handles axis-aligned rectangles");
        }
    }
    // Ψ_i = (x - xo)(y - yo) / ((xi - xo)(yi - yo)) with (xo, yo) the opposite corner
    let shape = |i: usize, q: Point2| {
        let xo = if v[i].x == x0 { x1 } else { x0 };
        let yo = if v[i].y == y0 { y1 } else { y0 };
        let den = (v[i].x - xo) * (v[i].y - yo);
        ((q.x - xo) * (q.y - yo) / den, Point2::new((q.y - yo) / den, (q.x - xo) / den))
    };
    let w = 0.25 * (x1 - x0) * (y1 - y0);
    let (mut m, mut b) = ([[0.0; 4]; 4], [0.0; 4]);
    for gx in GAUSS2 {
        for gy in GAUSS2 {
            let q = Point2::new(0.5 * (x0 + x1) + 0.5 * (x1 - x0) * gx, 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * gy);
            let fq = eval(f, q)?;
            for i in 0..4 {
                let (si, gi) = shape(i, q);
                b[i] += w * fq * si;
                for j in 0..4 {
                    m[i][j] += w * gi.dot(k.apply(shape(j, q).1));
                }
            }
        }
    }
    Ok((m, b))
}

/// Mesh edges lying on fracture `curve` (endpoints within `eps` of one
/// straight piece), with the curve parameter at the edge midpoint.
fn fracture_edges(mesh: &Mesh, curve: &Curve, eps: f64) -> Option<Vec<(usize, usize, f64)>> {
    let pieces = straight_pieces(curve)?;
    let vs = mesh.vertices();
    let mut out = Vec::new();
    for (a, b) in mesh.edges() {
        for (s, t0, dt) in &pieces {
            if s.distance_to(vs[a]) <= eps && s.distance_to(vs[b]) <= eps {
                let m = (vs[a] + vs[b]) * 0.5;
                let d = s.b - s.a;
                out.push((a, b, t0 + (m - s.a).dot(d) / d.norm() * dt));
                break;
            }
        }
    }
    Some(out)
}

/// Classical conforming DFM: matrix cell terms plus 1D elements
/// `ε k_f / h [[1, -1], [-1, 1]]` on the mesh edges that make up each
/// fracture. Refuses fractures that are not chains of mesh edges.
pub fn classical_dfm_full(pb: &Problem) -> Result<FullSystem> {
    let mesh = &pb.mesh;
    let n = mesh.n_vertices();
    let mut triplets: Vec<Triplet> = Vec::new();
    let mut rhs = vec![0.0; n];
    for c in 0..mesh.n_cells() {
        let conn = mesh.cell(c);
        let v: Vec<Point2> = conn.iter().map(|&i| mesh.vertices()[i]).collect();
        let k = pb.perm.at(c);
        let (m, b) = match mesh.kind() {
            CellKind::Tri3 => p1_triangle(&v, &k, &pb.source)?,
            CellKind::Quad4 => q1_rectangle(&v, &k, &pb.source)?,
        };
        for i in 0..conn.len() {
            rhs[conn[i]] += b[i];
            for j in 0..conn.len() {
                triplets.push((conn[i] as u32, conn[j] as u32, m[i][j]));
            }
        }
    }
    let eps = 1e-12 * mesh.diameter();
    for (fi, f) in pb.network.fractures.iter().enumerate() {
        let Some(edges) = fracture_edges(mesh, &f.curve, eps) else {
            bail!("fracture {fi}: the classical oracle only handles straight and polyline fractures");
        };
        let covered: f64 = edges.iter().map(|&(a, b, _)| mesh.vertices()[a].distance(mesh.vertices()[b])).sum();
        let len = f.curve.length();
        if (covered - len).abs() > 1e-10 * len {
            bail!("fracture {fi} is not edge-aligned (mesh edges cover {covered} of its length {len})");
        }
        for (a, b, t) in edges {
            let c = f.conductance(t)? / mesh.vertices()[a].distance(mesh.vertices()[b]);
            let (a, b) = (a as u32, b as u32);
            triplets.extend([(a, a, c), (a, b, -c), (b, a, -c), (b, b, c)]);
        }
    }
    for e in mesh.boundary_edges() {
        let Some(BoundaryCondition::Neumann(q)) = pb.bcs.get(&e.tag) else { continue };
        let (a, b) = (mesh.vertices()[e.v0], mesh.vertices()[e.v1]);
        let h = a.distance(b);
        for g in GAUSS2 {
            let s = 0.5 * (1.0 + g);
            // outward flux q_N enters the load with a minus sign
            let qv = -eval(q, a.lerp(b, s))? * 0.5 * h;
            rhs[e.v0] += qv * (1.0 - s);
            rhs[e.v1] += qv * s;
        }
    }
    Ok(FullSystem { a: ndfm_core::CsrMatrix::from_triplets(n, n, triplets), b: rhs })
}

/// [`classical_dfm_full`] followed by the same Dirichlet elimination as the
/// main assembly.
pub fn classical_dfm_assemble(pb: &Problem) -> Result<LinearSystem> {
    let full = classical_dfm_full(pb)?;
    Ok(eliminate(&full, &dirichlet_values(pb)?)?)
}

/// Differences between the main assembly and the classical DFM on one problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegenerationReport {
    /// Largest entry difference of the reduced matrices over the largest entry.
    pub matrix_rel: f64,
    /// Largest nodal difference of the solutions over the largest nodal value.
    pub solution_rel: f64,
}

pub fn degeneration_check(pb: &Problem, solver: &SolverSpec) -> Result<DegenerationReport> {
    let classical = classical_dfm_assemble(pb)?;
    let (system, field, _) = solve_problem(pb, solver)?;
    let scale = classical.a.max_abs();
    let matrix_rel = classical
        .a
        .triplets()
        .chain(system.a.triplets())
        .map(|(i, j, _)| (classical.a.get(i, j) - system.a.get(i, j)).abs() / scale)
        .fold(0.0, f64::max);
    let (x, _) = classical.solve(&solver.cg_options())?;
    let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let solution_rel = x.iter().zip(&field.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / norm;
    Ok(DegenerationReport { matrix_rel, solution_rel })
}

/// Largest gap between `field` and a reference slice over the samples where
/// both are defined.
pub fn max_slice_gap(field: &PressureField, reference: &[SlicePoint]) -> f64 {
    reference
        .iter()
        .filter_map(|p| Some((field.try_evaluate(Point2::new(p.x, p.y))? - p.value?).abs()))
        .fold(0.0, f64::max)
}
