//! Homogeneous triangle or quadrilateral meshes with tagged boundary edges and
//! bin-grid point location.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::{BBox, CellPolygon, GeomTol, Point2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Tri3,
    Quad4,
}

impl CellKind {
    pub fn n_vertices(self) -> usize {
        match self {
            CellKind::Tri3 => 3,
            CellKind::Quad4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Tri3 => "tri3",
            CellKind::Quad4 => "quad4",
        }
    }
}

pub type BoundaryTag = u32;

/// Boundary edge, oriented so that the domain lies on its left.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v0: usize,
    pub v1: usize,
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug)]
struct BinGrid {
    origin: Point2,
    size: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl BinGrid {
    fn build(bbox: &BBox, polys: &[CellPolygon], size: f64, eps: f64) -> Self {
        let nx = ((bbox.width() / size).ceil() as usize).clamp(1, 4096);
        let ny = ((bbox.height() / size).ceil() as usize).clamp(1, 4096);
        let size = (bbox.width() / nx as f64).max(bbox.height() / ny as f64);
        let mut grid = Self { origin: bbox.min, size, nx, ny, start: vec![0; nx * ny + 1], items: Vec::new() };
        let ranges: Vec<_> = polys.iter().map(|p| grid.range(&p.bbox().expanded(eps))).collect();
        for &(i0, i1, j0, j1) in &ranges {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.start[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 0..nx * ny {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        grid.items = vec![0; *grid.start.last().unwrap() as usize];
        for (c, &(i0, i1, j0, j1)) in ranges.iter().enumerate() {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let b = j * nx + i;
                    grid.items[fill[b] as usize] = c as u32;
                    fill[b] += 1;
                }
            }
        }
        grid
    }

    fn index(&self, v: f64, o: f64, n: usize) -> usize {
        let k = ((v - o) / self.size).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(n - 1)
        }
    }

    fn range(&self, b: &BBox) -> (usize, usize, usize, usize) {
        (
            self.index(b.min.x, self.origin.x, self.nx),
            self.index(b.max.x, self.origin.x, self.nx),
            self.index(b.min.y, self.origin.y, self.ny),
            self.index(b.max.y, self.origin.y, self.ny),
        )
    }

    fn bin(&self, i: usize, j: usize) -> &[u32] {
        let b = j * self.nx + i;
        &self.items[self.start[b] as usize..self.start[b + 1] as usize]
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    kind: CellKind,
    vertices: Vec<Point2>,
    cells: Vec<usize>,
    boundary: Vec<BoundaryEdge>,
    bbox: BBox,
    bins: BinGrid,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds and validates a mesh. `cells` is the flat connectivity list
    /// (3 or 4 indices per cell, counter-clockwise).
    pub fn new(kind: CellKind, vertices: Vec<Point2>, cells: Vec<usize>, boundary: Vec<BoundaryEdge>) -> Result<Self> {
        let nv = kind.n_vertices();
        if vertices.is_empty() || cells.is_empty() || cells.len() % nv != 0 {
            return Err(Error::InvalidMesh(format!(
                "need vertices and a connectivity list with {nv} indices per cell"
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {p:?}")));
        }
        if let Some(&i) = cells.iter().find(|&&i| i >= vertices.len()) {
            return Err(Error::InvalidMesh(format!("cell index {i} out of range for {} vertices", vertices.len())));
        }
        let bbox = BBox::from_points(&vertices);
        let mut polys = Vec::with_capacity(cells.len() / nv);
        for (c, conn) in cells.chunks(nv).enumerate() {
            let pts: Vec<Point2> = conn.iter().map(|&i| vertices[i]).collect();
            let poly = CellPolygon::from_slice(&pts)?;
            poly.check_nondegenerate().map_err(|e| match e {
                Error::InvalidMesh(m) => Error::InvalidMesh(format!("cell {c}: {m}")),
                other => other,
            })?;
            polys.push(poly);
        }

        // edge incidence: cells on each undirected edge, with the cell's own direction
        let mut incidence: BTreeMap<(usize, usize), (usize, (usize, usize))> = BTreeMap::new();
        for conn in cells.chunks(nv) {
            for k in 0..nv {
                let (a, b) = (conn[k], conn[(k + 1) % nv]);
                let e = incidence.entry(edge_key(a, b)).or_insert((0, (a, b)));
                e.0 += 1;
                if e.0 > 2 {
                    return Err(Error::InvalidMesh(format!("edge {a}-{b} is shared by more than two cells")));
                }
            }
        }
        let mut tags: BTreeMap<(usize, usize), BoundaryTag> = BTreeMap::new();
        for be in &boundary {
            if be.v0 >= vertices.len() || be.v1 >= vertices.len() {
                return Err(Error::InvalidMesh(format!("boundary edge {}-{} out of range", be.v0, be.v1)));
            }
            match incidence.get(&edge_key(be.v0, be.v1)) {
                Some((1, _)) => {}
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge {}-{} is not a boundary edge of the mesh",
                        be.v0, be.v1
                    )))
                }
            }
            if tags.insert(edge_key(be.v0, be.v1), be.tag).is_some() {
                return Err(Error::InvalidMesh(format!("boundary edge {}-{} listed twice", be.v0, be.v1)));
            }
        }
        let mut oriented = Vec::with_capacity(tags.len());
        for (key, &(count, (a, b))) in &incidence {
            if count == 1 {
                let Some(&tag) = tags.get(key) else {
                    return Err(Error::InvalidMesh(format!("boundary edge {a}-{b} has no tag")));
                };
                oriented.push(BoundaryEdge { v0: a, v1: b, tag });
            }
        }
        // keep the caller's ordering
        let order: BTreeMap<(usize, usize), usize> =
            boundary.iter().enumerate().map(|(i, e)| (edge_key(e.v0, e.v1), i)).collect();
        oriented.sort_by_key(|e| order[&edge_key(e.v0, e.v1)]);

        let mut diams: Vec<f64> = polys.iter().map(|p| p.diameter()).collect();
        diams.sort_by(f64::total_cmp);
        let median = diams[diams.len() / 2];
        let eps = 1e-12 * bbox.diagonal();
        let bins = BinGrid::build(&bbox, &polys, 2.0 * median, eps);
        Ok(Self { kind, vertices, cells, boundary: oriented, bbox, bins })
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / self.kind.n_vertices()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.kind.n_vertices();
        &self.cells[c * n..(c + 1) * n]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks(self.kind.n_vertices())
    }

    pub fn cell_polygon(&self, c: usize) -> CellPolygon {
        let v = self.cell(c);
        match self.kind {
            CellKind::Tri3 => CellPolygon::triangle(self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]),
            CellKind::Quad4 => {
                CellPolygon::quad(self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]], self.vertices[v[3]])
            }
        }
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn boundary_tags(&self) -> Vec<BoundaryTag> {
        let mut t: Vec<_> = self.boundary.iter().map(|e| e.tag).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn diameter(&self) -> f64 {
        self.bbox.diagonal()
    }

    pub fn tol(&self) -> GeomTol {
        GeomTol::for_diameter(self.diameter())
    }

    pub fn area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_polygon(c).area()).sum()
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let nv = self.kind.n_vertices();
        let mut e: Vec<_> = self.cells().flat_map(|c| (0..nv).map(move |k| edge_key(c[k], c[(k + 1) % nv]))).collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Lowest-id cell whose closed region contains `p`.
    pub fn locate_point(&self, p: Point2) -> Option<usize> {
        let eps = 1e-12 * self.diameter();
        if !self.bbox.expanded(eps).contains(p) {
            return None;
        }
        let i = self.bins.index(p.x, self.bins.origin.x, self.bins.nx);
        let j = self.bins.index(p.y, self.bins.origin.y, self.bins.ny);
        self.bins.bin(i, j).iter().map(|&c| c as usize).find(|&c| self.cell_polygon(c).contains(p, eps))
    }

    /// Ids (ascending) of cells whose bounding box may intersect `b`.
    pub fn cells_in_box(&self, b: &BBox) -> Vec<usize> {
        if !b.intersects(&self.bbox.expanded(1e-12 * self.diameter())) {
            return Vec::new();
        }
        let (i0, i1, j0, j1) = self.bins.range(b);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend(self.bins.bin(i, j).iter().map(|&c| c as usize));
            }
        }
        out.sort_unstable();
        out.dedup();
        out.retain(|&c| self.cell_polygon(c).bbox().intersects(b));
        out
    }
}

/// Uniform `nx × ny` quad mesh of `bbox = [xmin, ymin, xmax, ymax]`.
/// Vertex `(i, j)` has index `j (nx + 1) + i`; boundary tags are
/// 1 = left, 2 = right, 3 = bottom, 4 = top.
pub fn build_rect_mesh(nx: usize, ny: usize, bbox: [f64; 4]) -> Result<Mesh> {
    let (vertices, boundary) = rect_grid(nx, ny, bbox)?;
    let mut cells = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v = j * (nx + 1) + i;
            cells.extend_from_slice(&[v, v + 1, v + nx + 2, v + nx + 1]);
        }
    }
    Mesh::new(CellKind::Quad4, vertices, cells, boundary)
}

/// Same grid as [`build_rect_mesh`] with each square split along the
/// diagonal from its lower-left to its upper-right corner (`2 nx ny` triangles).
pub fn build_rect_tri_mesh(nx: usize, ny: usize, bbox: [f64; 4]) -> Result<Mesh> {
    let (vertices, boundary) = rect_grid(nx, ny, bbox)?;
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v = j * (nx + 1) + i;
            cells.extend_from_slice(&[v, v + 1, v + nx + 2, v, v + nx + 2, v + nx + 1]);
        }
    }
    Mesh::new(CellKind::Tri3, vertices, cells, boundary)
}

fn rect_grid(nx: usize, ny: usize, bbox: [f64; 4]) -> Result<(Vec<Point2>, Vec<BoundaryEdge>)> {
    let [x0, y0, x1, y1] = bbox;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("nx and ny must be at least 1".into()));
    }
    if !(x1 > x0 && y1 > y0) || !bbox.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(format!("degenerate bounding box {bbox:?}")));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // endpoints exact, interior by interpolation
        let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
            vertices.push(Point2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for j in 0..ny {
        boundary.push(BoundaryEdge { v0: id(0, j + 1), v1: id(0, j), tag: 1 });
    }
    for j in 0..ny {
        boundary.push(BoundaryEdge { v0: id(nx, j), v1: id(nx, j + 1), tag: 2 });
    }
    for i in 0..nx {
        boundary.push(BoundaryEdge { v0: id(i, 0), v1: id(i + 1, 0), tag: 3 });
    }
    for i in 0..nx {
        boundary.push(BoundaryEdge { v0: id(i + 1, ny), v1: id(i, ny), tag: 4 });
    }
    Ok((vertices, boundary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const UNIT: [f64; 4] = [0.0, 0.0, 1.0, 1.0];

    #[test]
    fn rect_counts() {
        let m = build_rect_mesh(1, 1, UNIT).unwrap();
        assert_eq!((m.n_vertices(), m.n_cells(), m.boundary_edges().len()), (4, 1, 4));
        let m = build_rect_mesh(8, 9, UNIT).unwrap();
        assert_eq!((m.n_vertices(), m.n_cells()), (90, 72));
        let m = build_rect_mesh(20, 20, [-PI, -PI, PI, PI]).unwrap();
        let a = m.cell_polygon(0).area();
        assert!((a - (PI / 10.0).powi(2)).abs() < 1e-14);
        assert!(build_rect_mesh(0, 3, UNIT).is_err());
        assert!(matches!(build_rect_mesh(2, 2, [0.0, 0.0, 0.0, 1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn boundary_edges_are_oriented_with_domain_on_left() {
        for m in [build_rect_mesh(3, 2, UNIT).unwrap(), build_rect_tri_mesh(3, 2, UNIT).unwrap()] {
            let c = Point2::new(0.5, 0.5);
            for e in m.boundary_edges() {
                let (a, b) = (m.vertices()[e.v0], m.vertices()[e.v1]);
                assert!((b - a).cross(c - a) > 0.0);
            }
            assert_eq!(m.boundary_tags(), vec![1, 2, 3, 4]);
        }
    }

    #[test]
    fn area_matches_domain() {
        let m = build_rect_tri_mesh(7, 5, [0.0, 0.0, 2.0, 3.0]).unwrap();
        assert!((m.area() - 6.0).abs() < 1e-10 * 6.0);
    }

    #[test]
    fn rejects_bad_topology() {
        let v = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let b = |t| {
            vec![
                BoundaryEdge { v0: 0, v1: 1, tag: t },
                BoundaryEdge { v0: 1, v1: 2, tag: t },
                BoundaryEdge { v0: 2, v1: 0, tag: t },
            ]
        };
        assert!(Mesh::new(CellKind::Tri3, v.clone(), vec![0, 1, 2], b(1)).is_ok());
        // clockwise
        assert!(Mesh::new(CellKind::Tri3, v.clone(), vec![0, 2, 1], b(1)).is_err());
        // missing tag
        assert!(Mesh::new(CellKind::Tri3, v.clone(), vec![0, 1, 2], b(1)[..2].to_vec()).is_err());
        // out of range
        assert!(Mesh::new(CellKind::Tri3, v, vec![0, 1, 9], b(1)).is_err());
    }

    #[test]
    fn locate_centroids_and_ties() {
        let m = build_rect_tri_mesh(4, 4, UNIT).unwrap();
        for c in 0..m.n_cells() {
            assert_eq!(m.locate_point(m.cell_polygon(c).centroid()), Some(c));
        }
        // shared diagonal of cells 0 and 1
        assert_eq!(m.locate_point(Point2::new(0.125, 0.125)), Some(0));
        assert_eq!(m.locate_point(Point2::new(1.5, 0.5)), None);
        // top-right corner is shared by the last two cells
        assert_eq!(m.locate_point(Point2::new(1.0, 1.0)), Some(m.n_cells() - 2));
    }

    #[test]
    fn locate_agrees_with_index_arithmetic() {
        let (nx, ny) = (13, 7);
        let m = build_rect_mesh(nx, ny, [-1.0, 2.0, 3.0, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let p = Point2::new(rng.gen_range(-1.0..3.0), rng.gen_range(2.0..5.0));
            let i = ((p.x + 1.0) / (4.0 / nx as f64)).floor() as usize;
            let j = ((p.y - 2.0) / (3.0 / ny as f64)).floor() as usize;
            let got = m.locate_point(p).unwrap();
            let poly = m.cell_polygon(j * nx + i);
            if got != j * nx + i {
                // only acceptable on a shared edge, where the lower id wins
                assert!(got < j * nx + i && poly.contains(p, 1e-12));
            }
        }
    }

    #[test]
    fn cells_in_box_covers_overlaps() {
        let m = build_rect_mesh(10, 10, UNIT).unwrap();
        let b = BBox { min: Point2::new(0.25, 0.25), max: Point2::new(0.35, 0.55) };
        let got = m.cells_in_box(&b);
        let want: Vec<usize> = (0..m.n_cells()).filter(|&c| m.cell_polygon(c).bbox().intersects(&b)).collect();
        assert_eq!(got, want);
    }
}
