//! Fracture tracing over a mesh, global assembly and Dirichlet elimination.
//!
//! Assembly order is fixed: cell terms by ascending cell id, then fracture
//! terms by fracture and piece, then Neumann terms by boundary edge. Entries
//! that land on the same matrix position are summed in that order, so any
//! caller that produces the same contribution lists (e.g. a parallel driver
//! that concatenates per-chunk lists in cell order) gets bitwise-identical
//! systems.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::fem::{local_fracture_stiffness, local_load, local_matrix_stiffness, neumann_load, LocalMatrix};
use crate::geom::{clip_segment_cell, merge_touching, trace_smooth_range, BBox, Curve, GeomTol, ParamInterval};
use crate::linsolve::{solve_cg, CgOptions, SolveReport};
use crate::mesh::{CellKind, Mesh};
use crate::model::{validate_problem, BoundaryCondition, Fracture, FractureNetwork, Problem};
use crate::sparse::{CsrMatrix, Triplet};

/// Part of a fracture inside one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePiece {
    pub cell: usize,
    pub interval: ParamInterval,
    /// The piece runs along an edge of its cell.
    pub on_edge: bool,
}

/// Decomposition of one fracture into disjoint per-cell pieces, ordered by
/// curve parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct FractureTrace {
    pub fracture: usize,
    pub pieces: Vec<TracePiece>,
}

impl FractureTrace {
    /// Total arc length of the pieces.
    pub fn length(&self, curve: &Curve) -> f64 {
        self.pieces.iter().map(|p| curve.arc_length(p.interval.t_a, p.interval.t_b)).sum()
    }
}

/// Traces every fracture of `network` through `mesh`.
pub fn trace_network(mesh: &Mesh, network: &FractureNetwork) -> Result<Vec<FractureTrace>> {
    network
        .fractures
        .iter()
        .enumerate()
        .map(|(i, f)| Ok(FractureTrace { fracture: i, pieces: trace_curve(mesh, &f.curve)? }))
        .collect()
}

/// Pieces of `curve` inside `mesh`. Where several cells report the same
/// stretch of curve (a fracture along a shared edge) the lowest cell id owns it.
pub fn trace_curve(mesh: &Mesh, curve: &Curve) -> Result<Vec<TracePiece>> {
    let tol = mesh.tol();
    let mut raw: Vec<(usize, ParamInterval)> = Vec::new();
    match curve {
        Curve::Segment(seg) => {
            let bb = BBox::from_points(&[seg.a, seg.b]).expanded(tol.edge);
            for c in mesh.cells_in_box(&bb) {
                if let Some(iv) = clip_segment_cell(seg, &mesh.cell_polygon(c), &tol)? {
                    raw.push((c, iv));
                }
            }
        }
        Curve::Polyline(pl) => {
            for i in 0..pl.n_segments() {
                let seg = pl.segment(i);
                let (s0, l) = (pl.offsets()[i], pl.offsets()[i + 1] - pl.offsets()[i]);
                let bb = BBox::from_points(&[seg.a, seg.b]).expanded(tol.edge);
                for c in mesh.cells_in_box(&bb) {
                    if let Some(iv) = clip_segment_cell(&seg, &mesh.cell_polygon(c), &tol)? {
                        raw.push((c, ParamInterval { t_a: s0 + l * iv.t_a, t_b: s0 + l * iv.t_b }));
                    }
                }
            }
        }
        _ => raw = trace_smooth(mesh, curve, &tol)?,
    }
    let pieces = assign_owners(curve, raw, &tol);
    Ok(pieces
        .into_iter()
        .map(|(cell, interval)| {
            let poly = mesh.cell_polygon(cell);
            let pts = [curve.point(interval.t_a), curve.point(interval.mid()), curve.point(interval.t_b)];
            TracePiece { cell, interval, on_edge: poly.on_edge(&pts, tol.edge) }
        })
        .collect())
}

fn trace_smooth(mesh: &Mesh, curve: &Curve, tol: &GeomTol) -> Result<Vec<(usize, ParamInterval)>> {
    if !(tol.param > 0.0) {
        return Err(Error::InvalidArgument("parameter tolerance must be positive".into()));
    }
    let (lo, hi) = curve.domain();
    let h_min = (0..mesh.n_cells()).map(|c| mesh.cell_polygon(c).diameter()).fold(f64::INFINITY, f64::min);
    let length = curve.length();
    let n = ((length / h_min).ceil() as usize).clamp(1, 1 << 20);
    let accel = curve.accel_bound();
    // chunk bounding boxes, padded by the chord sagitta bound
    let chunks: Vec<(f64, f64, BBox)> = (0..n)
        .map(|k| {
            let t0 = lo + (hi - lo) * k as f64 / n as f64;
            let t1 = if k + 1 == n { hi } else { lo + (hi - lo) * (k + 1) as f64 / n as f64 };
            let (a, b) = (curve.point(t0), curve.point(t1));
            let pad = 0.125 * accel * (t1 - t0) * (t1 - t0) + tol.edge;
            (t0, t1, BBox::from_points(&[a, b]).expanded(pad.max(tol.edge)))
        })
        .collect();
    let mut cells: Vec<usize> = chunks.iter().flat_map(|(_, _, b)| mesh.cells_in_box(b)).collect();
    cells.sort_unstable();
    cells.dedup();
    let mut raw = Vec::new();
    for c in cells {
        let poly = mesh.cell_polygon(c);
        let cb = poly.bbox().expanded(tol.edge);
        let mut ranges: Vec<(f64, f64)> = Vec::new();
        for &(t0, t1, ref b) in &chunks {
            if !b.intersects(&cb) {
                continue;
            }
            match ranges.last_mut() {
                Some(r) if r.1 == t0 => r.1 = t1,
                _ => ranges.push((t0, t1)),
            }
        }
        let mut ivs = Vec::new();
        for (t0, t1) in ranges {
            ivs.extend(trace_smooth_range(curve, &poly, t0, t1, poly.diameter(), tol));
        }
        for iv in merge_touching(ivs, tol.param * (hi - lo).abs().max(1.0)) {
            raw.push((c, iv));
        }
    }
    Ok(raw)
}

/// Splits the union of the raw pieces at all endpoints and polyline
/// breakpoints; each elementary interval goes to the lowest covering cell id.
fn assign_owners(curve: &Curve, raw: Vec<(usize, ParamInterval)>, tol: &GeomTol) -> Vec<(usize, ParamInterval)> {
    let mut cuts: Vec<f64> = raw.iter().flat_map(|(_, iv)| [iv.t_a, iv.t_b]).collect();
    let (lo, hi) = curve.domain();
    cuts.extend(curve.breakpoints().iter().copied().filter(|&t| t > lo && t < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let breaks = curve.breakpoints();
    let mut out: Vec<(usize, ParamInterval)> = Vec::new();
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let mid = 0.5 * (u + v);
        let owner = raw.iter().filter(|(_, iv)| iv.t_a <= mid && mid <= iv.t_b).map(|&(c, _)| c).min();
        let Some(owner) = owner else { continue };
        match out.last_mut() {
            Some((c, iv)) if *c == owner && iv.t_b == u && !breaks.contains(&u) => iv.t_b = v,
            _ => out.push((owner, ParamInterval { t_a: u, t_b: v })),
        }
    }
    out.retain(|(_, iv)| curve.arc_length(iv.t_a, iv.t_b) >= tol.len);
    out
}

/// Matrix triplets and right-hand-side entries over global vertex indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Contributions {
    pub matrix: Vec<Triplet>,
    pub rhs: Vec<(u32, f64)>,
}

impl Contributions {
    fn add_local(&mut self, conn: &[usize], m: &LocalMatrix) {
        for i in 0..m.n {
            for j in 0..m.n {
                self.matrix.push((conn[i] as u32, conn[j] as u32, m.values[i][j]));
            }
        }
    }

    pub fn extend(&mut self, other: Contributions) {
        self.matrix.extend(other.matrix);
        self.rhs.extend(other.rhs);
    }
}

/// Options that change how the system is assembled.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AssemblyOptions {
    /// Gauss points per fracture piece; `None` picks the default per piece.
    pub fracture_nq: Option<usize>,
}

/// Matrix stiffness and source load of the cells in `cells`.
pub fn cell_contributions(pb: &Problem, cells: Range<usize>) -> Result<Contributions> {
    let mesh = &pb.mesh;
    let mut out = Contributions::default();
    let zero_source = pb.source.is_constant() && pb.source.eval(&Bindings::default())? == 0.0;
    for c in cells {
        let poly = mesh.cell_polygon(c);
        let conn = mesh.cell(c);
        out.add_local(conn, &local_matrix_stiffness(&poly, &pb.perm.at(c)));
        if !zero_source {
            let b = local_load(&poly, |p| Ok(pb.source.eval(&Bindings::xy(p.x, p.y))?))?;
            for (i, &v) in conn.iter().enumerate() {
                out.rhs.push((v as u32, b[i]));
            }
        }
    }
    Ok(out)
}

/// Gauss points used for a piece when not overridden.
pub fn default_fracture_nq(fracture: &Fracture, kind: CellKind) -> usize {
    let constant = fracture.has_constant_conductance();
    match (&fracture.curve, kind, constant) {
        (Curve::Segment(_) | Curve::Polyline(_), CellKind::Tri3, true) => 1,
        (Curve::Segment(_) | Curve::Polyline(_), CellKind::Quad4, true) => 2,
        (Curve::Segment(_) | Curve::Polyline(_), _, false) => 3,
        _ => 4,
    }
}

/// Fracture stiffness of every traced piece.
pub fn fracture_contributions(pb: &Problem, traces: &[FractureTrace], opts: &AssemblyOptions) -> Result<Contributions> {
    let mesh = &pb.mesh;
    let mut out = Contributions::default();
    for tr in traces {
        let f = &pb.network.fractures[tr.fracture];
        let nq = opts.fracture_nq.unwrap_or_else(|| default_fracture_nq(f, mesh.kind()));
        for piece in &tr.pieces {
            let m = local_fracture_stiffness(
                &mesh.cell_polygon(piece.cell),
                &f.curve,
                piece.interval,
                |t| f.conductance(t),
                nq,
            )
            .map_err(|e| match e {
                Error::InvalidData(m) => Error::InvalidData(format!("fracture {}: {m}", tr.fracture)),
                other => other,
            })?;
            out.add_local(mesh.cell(piece.cell), &m);
        }
    }
    Ok(out)
}

/// Neumann loads `-∫ q_N Ψ_i ds` on boundary edges with a Neumann condition,
/// where `q_N = -(K ∇p)·n` is the outward flux (negative for inflow).
pub fn neumann_contributions(pb: &Problem) -> Result<Contributions> {
    let mesh = &pb.mesh;
    let mut out = Contributions::default();
    for e in mesh.boundary_edges() {
        let Some(BoundaryCondition::Neumann(q)) = pb.bcs.get(&e.tag) else { continue };
        if q.is_constant() && q.eval(&Bindings::default())? == 0.0 {
            continue;
        }
        let (a, b) = (mesh.vertices()[e.v0], mesh.vertices()[e.v1]);
        let l = neumann_load(a, b, |p| Ok(q.eval(&Bindings::xy(p.x, p.y))?))?;
        out.rhs.push((e.v0 as u32, -l[0]));
        out.rhs.push((e.v1 as u32, -l[1]));
    }
    Ok(out)
}

/// System over all vertices, before boundary conditions are imposed.
#[derive(Clone, Debug, PartialEq)]
pub struct FullSystem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
}

impl FullSystem {
    /// Sums the contributions in the order given.
    pub fn from_contributions(n: usize, parts: Vec<Contributions>) -> Self {
        let mut triplets = Vec::with_capacity(parts.iter().map(|p| p.matrix.len()).sum());
        let mut b = vec![0.0; n];
        for p in parts {
            triplets.extend(p.matrix);
            for (i, v) in p.rhs {
                b[i as usize] += v;
            }
        }
        Self { a: CsrMatrix::from_triplets(n, n, triplets), b }
    }
}

/// Validates, traces and assembles the full (pre-elimination) system.
pub fn assemble_full(pb: &Problem) -> Result<FullSystem> {
    assemble_full_with(pb, &AssemblyOptions::default())
}

pub fn assemble_full_with(pb: &Problem, opts: &AssemblyOptions) -> Result<FullSystem> {
    validate_problem(pb).into_result()?;
    let traces = trace_network(&pb.mesh, &pb.network)?;
    let parts = vec![
        cell_contributions(pb, 0..pb.mesh.n_cells())?,
        fracture_contributions(pb, &traces, opts)?,
        neumann_contributions(pb)?,
    ];
    Ok(FullSystem::from_contributions(pb.mesh.n_vertices(), parts))
}

/// Prescribed value of every Dirichlet vertex. A vertex shared by edges with
/// different Dirichlet tags takes the condition of the lowest tag.
pub fn dirichlet_values(pb: &Problem) -> Result<Vec<Option<f64>>> {
    let mesh = &pb.mesh;
    let mut tag_of: Vec<Option<u32>> = vec![None; mesh.n_vertices()];
    for e in mesh.boundary_edges() {
        if let Some(BoundaryCondition::Dirichlet(_)) = pb.bcs.get(&e.tag) {
            for v in [e.v0, e.v1] {
                tag_of[v] = Some(tag_of[v].map_or(e.tag, |t| t.min(e.tag)));
            }
        }
    }
    tag_of
        .iter()
        .enumerate()
        .map(|(v, tag)| match tag {
            None => Ok(None),
            Some(t) => {
                let p = mesh.vertices()[v];
                Ok(Some(pb.bcs[t].expr().eval(&Bindings::xy(p.x, p.y))?))
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dof {
    Free(usize),
    Fixed(f64),
}

/// Reduced SPD system over the free vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub dof_map: Vec<Dof>,
    pub n_free: usize,
}

impl LinearSystem {
    pub fn n_total(&self) -> usize {
        self.dof_map.len()
    }

    /// Nodal values over all vertices from a reduced solution.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.dof_map
            .iter()
            .map(|d| match *d {
                Dof::Free(i) => x[i],
                Dof::Fixed(v) => v,
            })
            .collect()
    }

    /// Solves with Jacobi-PCG and returns nodal values over all vertices.
    pub fn solve(&self, opts: &CgOptions) -> Result<(Vec<f64>, SolveReport)> {
        let (x, rep) = solve_cg(&self.a, &self.b, opts)?;
        Ok((self.expand(&x), rep))
    }
}

/// Removes fixed vertices: their columns times the prescribed values move to
/// the right-hand side, their rows and columns are dropped.
pub fn eliminate(full: &FullSystem, fixed: &[Option<f64>]) -> Result<LinearSystem> {
    let n = full.b.len();
    if fixed.len() != n {
        return Err(Error::InvalidArgument("Dirichlet table does not match the system size".into()));
    }
    let mut dof_map = Vec::with_capacity(n);
    let mut n_free = 0;
    for f in fixed {
        dof_map.push(match f {
            Some(v) => Dof::Fixed(*v),
            None => {
                n_free += 1;
                Dof::Free(n_free - 1)
            }
        });
    }
    if n_free == n {
        return Err(Error::InvalidArgument("no Dirichlet vertex: the system is singular".into()));
    }
    let mut triplets = Vec::with_capacity(full.a.nnz());
    let mut b = Vec::with_capacity(n_free);
    for i in 0..n {
        let Dof::Free(fi) = dof_map[i] else { continue };
        let mut bi = full.b[i];
        let (cols, vals) = full.a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            match dof_map[c as usize] {
                Dof::Free(fj) => triplets.push((fi as u32, fj as u32, v)),
                Dof::Fixed(g) => bi -= v * g,
            }
        }
        b.push(bi);
    }
    Ok(LinearSystem { a: CsrMatrix::from_triplets(n_free, n_free, triplets), b, dof_map, n_free })
}

/// Validates, assembles and eliminates Dirichlet vertices.
pub fn assemble(pb: &Problem) -> Result<LinearSystem> {
    assemble_with(pb, &AssemblyOptions::default())
}

pub fn assemble_with(pb: &Problem, opts: &AssemblyOptions) -> Result<LinearSystem> {
    let full = assemble_full_with(pb, opts)?;
    eliminate(&full, &dirichlet_values(pb)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Expr};
    use crate::geom::Point2;
    use crate::mesh::{build_rect_mesh, build_rect_tri_mesh};
    use crate::model::{BoundarySpec, MatrixPermeability, Tensor2};
    use alloc::sync::Arc;
    use core::f64::consts::PI;

    const UNIT: [f64; 4] = [0.0, 0.0, 1.0, 1.0];

    fn all_dirichlet(e: &str) -> BoundarySpec {
        (1..=4).map(|t| (t, BoundaryCondition::Dirichlet(parse_expr(e).unwrap()))).collect()
    }

    fn problem(mesh: Mesh, fractures: Vec<Fracture>, bcs: BoundarySpec) -> Problem {
        Problem {
            mesh: Arc::new(mesh),
            perm: MatrixPermeability::Constant(Tensor2::IDENTITY),
            network: FractureNetwork::new(fractures),
            bcs,
            source: Expr::Num(0.0),
        }
    }

    fn seg(a: (f64, f64), b: (f64, f64)) -> Curve {
        Curve::segment(Point2::new(a.0, a.1), Point2::new(b.0, b.1))
    }

    #[test]
    fn trace_inside_one_cell() {
        let m = build_rect_mesh(4, 4, UNIT).unwrap();
        let t = trace_curve(&m, &seg((0.3, 0.3), (0.45, 0.4))).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].cell, 5);
        assert_eq!(t[0].interval, ParamInterval::new(0.0, 1.0));
        assert!(!t[0].on_edge);
    }

    #[test]
    fn trace_off_gridline_horizontal() {
        let m = build_rect_mesh(10, 10, UNIT).unwrap();
        let c = seg((0.25, 0.4995), (0.75, 0.4995));
        let t = trace_curve(&m, &c).unwrap();
        let lens: Vec<f64> = t.iter().map(|p| c.arc_length(p.interval.t_a, p.interval.t_b)).collect();
        assert_eq!(t.len(), 6);
        assert!(t.iter().all(|p| p.cell / 10 == 4));
        for (i, l) in lens.iter().enumerate() {
            let want = if i == 0 || i == 5 { 0.05 } else { 0.1 };
            assert!((l - want).abs() < 1e-12);
        }
        assert!((lens.iter().sum::<f64>() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trace_on_shared_edge_has_single_owner() {
        let m = build_rect_tri_mesh(2, 2, UNIT).unwrap();
        // the diagonal of the lower-left square is shared by cells 0 and 1
        let t = trace_curve(&m, &seg((0.0, 0.0), (0.5, 0.5))).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].cell, 0);
        assert!(t[0].on_edge);
        // a gridline through several cells
        let c = seg((0.0, 0.5), (1.0, 0.5));
        let t = trace_curve(&m, &c).unwrap();
        assert!((FractureTrace { fracture: 0, pieces: t.clone() }.length(&c) - 1.0).abs() < 1e-14);
        assert!(t.iter().all(|p| p.on_edge));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn trace_clips_to_domain_and_handles_vertices() {
        let m = build_rect_tri_mesh(5, 5, UNIT).unwrap();
        // through mesh vertices along the anti-diagonal, extending outside
        let c = seg((-0.5, 1.5), (1.5, -0.5));
        let t = FractureTrace { fracture: 0, pieces: trace_curve(&m, &c).unwrap() };
        assert!((t.length(&c) - 2f64.sqrt()).abs() < 1e-12);
        for w in t.pieces.windows(2) {
            assert!(w[0].interval.t_b <= w[1].interval.t_a);
        }
    }

    #[test]
    fn trace_circle_total_length() {
        let m = build_rect_mesh(20, 20, UNIT).unwrap();
        let c = Curve::arc(Point2::new(0.5, 0.5), 0.25, 0.0, 2.0 * PI).unwrap();
        let t = FractureTrace { fracture: 0, pieces: trace_curve(&m, &c).unwrap() };
        assert!((t.length(&c) - 0.5 * PI).abs() < 1e-10 * 0.5 * PI);
        for w in t.pieces.windows(2) {
            assert!(w[0].interval.t_b <= w[1].interval.t_a);
        }
        for p in &t.pieces {
            let poly = m.cell_polygon(p.cell);
            assert!(poly.contains(c.point(p.interval.mid()), 1e-12));
        }
    }

    #[test]
    fn patch_test_with_vertical_fracture() {
        for mesh in [build_rect_mesh(6, 5, UNIT).unwrap(), build_rect_tri_mesh(6, 5, UNIT).unwrap()] {
            let f = Fracture::constant(seg((0.37, 0.1), (0.37, 0.9)), 1e-3, 1e5);
            let pb = problem(mesh, alloc::vec![f], all_dirichlet("1-x"));
            let sys = assemble(&pb).unwrap();
            let (p, rep) = sys.solve(&CgOptions::default()).unwrap();
            assert!(rep.converged);
            for (v, val) in pb.mesh.vertices().iter().zip(&p) {
                assert!((val - (1.0 - v.x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn full_matrix_row_sums_vanish_and_symmetry() {
        let m = build_rect_tri_mesh(8, 8, UNIT).unwrap();
        let fr = alloc::vec![
            Fracture::constant(seg((0.1, 0.13), (0.9, 0.77)), 1e-3, 1e4),
            Fracture::constant(Curve::arc(Point2::new(0.5, 0.5), 0.3, 0.2, 2.5).unwrap(), 1.0, 7.0),
        ];
        let pb = problem(m, fr, all_dirichlet("x"));
        let full = assemble_full(&pb).unwrap();
        let ma = full.a.max_abs();
        assert!(full.a.row_sums().iter().all(|r| r.abs() <= 1e-11 * ma));
        assert!(full.a.symmetry_defect() <= 1e-12 * ma);
    }

    #[test]
    fn fracture_direction_does_not_matter() {
        let m = build_rect_mesh(7, 7, UNIT).unwrap();
        let a = seg((0.05, 0.2), (0.93, 0.71));
        let b = seg((0.93, 0.71), (0.05, 0.2));
        let full = |c: Curve| {
            assemble_full(&problem(m.clone(), alloc::vec![Fracture::constant(c, 1.0, 50.0)], all_dirichlet("0")))
                .unwrap()
        };
        let (fa, fb) = (full(a), full(b));
        let ma = fa.a.max_abs();
        for ((i, j, v), (_, _, w)) in fa.a.triplets().zip(fb.a.triplets()) {
            assert!((v - w).abs() <= 1e-12 * ma, "({i},{j})");
        }
    }

    #[test]
    fn scaling_coefficients_scales_matrix() {
        let m = build_rect_tri_mesh(5, 5, UNIT).unwrap();
        let f = |k: f64| Fracture::constant(seg((0.1, 0.3), (0.8, 0.6)), 1.0, k);
        let p1 = problem(m.clone(), alloc::vec![f(10.0)], all_dirichlet("x*y"));
        let mut p2 = problem(m, alloc::vec![f(30.0)], all_dirichlet("x*y"));
        p2.perm = p1.perm.scaled(3.0);
        let (s1, s2) = (assemble(&p1).unwrap(), assemble(&p2).unwrap());
        for ((_, _, v), (_, _, w)) in s1.a.triplets().zip(s2.a.triplets()) {
            assert!((3.0 * v - w).abs() <= 1e-13 * w.abs().max(1.0));
        }
        let (x1, _) = s1.solve(&CgOptions::default()).unwrap();
        let (x2, _) = s2.solve(&CgOptions::default()).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dirichlet_corners_take_lowest_tag() {
        let m = build_rect_mesh(2, 2, UNIT).unwrap();
        let mut bcs = all_dirichlet("0");
        bcs.insert(1, BoundaryCondition::Dirichlet(Expr::Num(5.0)));
        bcs.insert(4, BoundaryCondition::Dirichlet(Expr::Num(7.0)));
        let pb = problem(m, Vec::new(), bcs);
        let d = dirichlet_values(&pb).unwrap();
        assert_eq!(d[6], Some(5.0)); // (0, 1): left and top
        assert_eq!(d[8], Some(0.0)); // (1, 1): right and top
        assert_eq!(d[4], None);
    }

    #[test]
    fn refuses_invalid_problem() {
        let m = build_rect_mesh(2, 2, UNIT).unwrap();
        let bcs: BoundarySpec = (1..=4).map(|t| (t, BoundaryCondition::Neumann(Expr::Num(0.0)))).collect();
        assert!(matches!(assemble(&problem(m, Vec::new(), bcs)), Err(Error::Validation(_))));
    }

    #[test]
    fn neumann_inflow_sign() {
        // one square, inflow q_N = -1 on the left, p = 0 on the right
        let m = build_rect_mesh(1, 1, UNIT).unwrap();
        let mut bcs = BoundarySpec::new();
        bcs.insert(1, BoundaryCondition::Neumann(Expr::Num(-1.0)));
        bcs.insert(2, BoundaryCondition::Dirichlet(Expr::Num(0.0)));
        bcs.insert(3, BoundaryCondition::Neumann(Expr::Num(0.0)));
        bcs.insert(4, BoundaryCondition::Neumann(Expr::Num(0.0)));
        let pb = problem(m, Vec::new(), bcs);
        let full = assemble_full(&pb).unwrap();
        assert_eq!(full.b, alloc::vec![0.5, 0.0, 0.5, 0.0]);
        // unit inflow through unit permeability: p = 1 - x
        let (p, _) = assemble(&pb).unwrap().solve(&CgOptions::default()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[2] - 1.0).abs() < 1e-12);
    }
}
