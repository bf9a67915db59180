//! Generators for the non-rectangular benchmark domains.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndfm_core::{BoundaryEdge, CellKind, Mesh, Point2, Result};

/// Triangulated unit disk built from a hexagonal lattice with `layers` rings
/// (`6 layers²` triangles, edge length `1 / layers`), with the outer hexagon
/// pushed radially onto the circle. Lattice lines through the centre at
/// angles 0, ±π/3 keep their straight edges. All boundary edges get tag 1.
pub fn circle_hex_mesh(layers: usize) -> Result<Mesh> {
    if layers == 0 {
        return Err(ndfm_core::Error::InvalidArgument("need at least one layer".into()));
    }
    let n = layers as i64;
    let h = 1.0 / layers as f64;
    let hex = |a: i64, b: i64| a.abs().max(b.abs()).max((a + b).abs());
    let mut index = BTreeMap::new();
    let mut vertices = Vec::new();
    for b in -n..=n {
        for a in -n..=n {
            if hex(a, b) > n {
                continue;
            }
            let p = Point2::new(h * (a as f64 + 0.5 * b as f64), h * (b as f64) * 3f64.sqrt() / 2.0);
            index.insert((a, b), vertices.len());
            vertices.push(to_disk(p));
        }
    }
    let mut cells = Vec::with_capacity(18 * layers * layers);
    for b in -n..=n {
        for a in -n..=n {
            for tri in [[(a, b), (a + 1, b), (a, b + 1)], [(a + 1, b), (a + 1, b + 1), (a, b + 1)]] {
                if tri.iter().all(|&(x, y)| hex(x, y) <= n) {
                    cells.extend(tri.iter().map(|k| index[k]));
                }
            }
        }
    }
    let boundary = outer_edges(&cells, 3).into_iter().map(|(v0, v1)| BoundaryEdge { v0, v1, tag: 1 }).collect();
    Mesh::new(CellKind::Tri3, vertices, cells, boundary)
}

/// Maps the regular hexagon with unit circumradius onto the unit disk along
/// rays; the six corner rays are fixed.
fn to_disk(p: Point2) -> Point2 {
    let r = p.norm();
    if r == 0.0 {
        return p;
    }
    let phi = p.y.atan2(p.x).rem_euclid(PI / 3.0);
    let s = (phi - PI / 6.0).cos() / (PI / 6.0).cos();
    // exact on the corner rays
    if phi == 0.0 {
        p
    } else {
        p * s
    }
}

/// Edges used by exactly one cell, in the cell's orientation and sorted.
fn outer_edges(cells: &[usize], k: usize) -> Vec<(usize, usize)> {
    let mut count: BTreeMap<(usize, usize), (usize, (usize, usize))> = BTreeMap::new();
    for c in cells.chunks(k) {
        for i in 0..k {
            let (a, b) = (c[i], c[(i + 1) % k]);
            count.entry((a.min(b), a.max(b))).or_insert((0, (a, b))).0 += 1;
        }
    }
    count.into_values().filter(|&(n, _)| n == 1).map(|(_, e)| e).collect()
}

/// Top surface of the Hydrocoin domain, left to right.
pub const HYDROCOIN_TOP: [(f64, f64); 5] =
    [(0.0, 150.0), (400.0, 100.0), (800.0, 150.0), (1200.0, 100.0), (1600.0, 150.0)];
/// Depth of the Hydrocoin domain's flat bottom.
pub const HYDROCOIN_BOTTOM: f64 = -1000.0;

fn hydrocoin_top(x: f64) -> f64 {
    for w in HYDROCOIN_TOP.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    HYDROCOIN_TOP[4].1
}

/// Structured triangulation of the Hydrocoin cross-section: `nx` columns
/// (a multiple of 4 so the surface kinks are vertices) and `ny` layers
/// stretched between the bottom and the surface, each quad split along its
/// rising diagonal. Tags: 1 left, 2 right, 3 bottom, 4 top.
pub fn hydrocoin_mesh(nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || nx % 4 != 0 || ny == 0 {
        return Err(ndfm_core::Error::InvalidArgument("nx must be a positive multiple of 4 and ny positive".into()));
    }
    let width = HYDROCOIN_TOP[4].0;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = width * i as f64 / nx as f64;
            let top = hydrocoin_top(x);
            let y = if j == ny { top } else { HYDROCOIN_BOTTOM + (top - HYDROCOIN_BOTTOM) * j as f64 / ny as f64 };
            vertices.push(Point2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for j in 0..ny {
        boundary.push(BoundaryEdge { v0: id(0, j + 1), v1: id(0, j), tag: 1 });
        boundary.push(BoundaryEdge { v0: id(nx, j), v1: id(nx, j + 1), tag: 2 });
    }
    for i in 0..nx {
        boundary.push(BoundaryEdge { v0: id(i, 0), v1: id(i + 1, 0), tag: 3 });
        boundary.push(BoundaryEdge { v0: id(i + 1, ny), v1: id(i, ny), tag: 4 });
    }
    Mesh::new(CellKind::Tri3, vertices, cells, boundary)
}
