use std::fmt::Write;

use ndfm_core::geom::polygon_signed_area;
use ndfm_core::{BoundaryEdge, CellKind, Mesh, Point2};

use super::{content_lines, parse_num, FormatError};

/// Reads the `MESH / VERTICES / CELLS / BOUNDARY` format. Clockwise cells are
/// flipped to counter-clockwise.
pub fn parse_mesh(text: &str) -> Result<Mesh, FormatError> {
    let mut lines = content_lines(text);
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| FormatError::new(0, format!("unexpected end of file, expected {what}")))
    };

    let (ln, header) = next("MESH header")?;
    let kind = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["MESH", "tri3"] => CellKind::Tri3,
        ["MESH", "quad4"] => CellKind::Quad4,
        _ => return Err(FormatError::new(ln, "expected `MESH tri3` or `MESH quad4`")),
    };

    let section = |(ln, l): (usize, &str), name: &str| -> Result<usize, FormatError> {
        match l.split_whitespace().collect::<Vec<_>>()[..] {
            [n, count] if n == name => parse_num(count, ln, "count"),
            _ => Err(FormatError::new(ln, format!("expected `{name} <count>`"))),
        }
    };

    let nv = section(next("VERTICES")?, "VERTICES")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("a vertex line")?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 2 {
            return Err(FormatError::new(ln, "vertex line needs `x y`"));
        }
        let p = Point2::new(parse_num(t[0], ln, "coordinate")?, parse_num(t[1], ln, "coordinate")?);
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(FormatError::new(ln, "non-finite coordinate"));
        }
        vertices.push(p);
    }

    let nc = section(next("CELLS")?, "CELLS")?;
    let k = kind.n_vertices();
    let mut cells = Vec::with_capacity(nc * k);
    for _ in 0..nc {
        let (ln, l) = next("a cell line")?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != k {
            return Err(FormatError::new(ln, format!("{} cell needs {k} vertex indices", kind.name())));
        }
        let mut idx = Vec::with_capacity(k);
        for tok in t {
            let i: usize = parse_num(tok, ln, "vertex index")?;
            if i >= nv {
                return Err(FormatError::new(ln, format!("vertex index {i} out of range (mesh has {nv} vertices)")));
            }
            idx.push(i);
        }
        let pts: Vec<Point2> = idx.iter().map(|&i| vertices[i]).collect();
        let area = polygon_signed_area(&pts);
        if area == 0.0 || !area.is_finite() {
            return Err(FormatError::new(ln, "cell has zero area"));
        }
        if area < 0.0 {
            idx.reverse();
        }
        cells.extend(idx);
    }

    let nb = section(next("BOUNDARY")?, "BOUNDARY")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = next("a boundary line")?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(FormatError::new(ln, "boundary line needs `v0 v1 tag`"));
        }
        let (v0, v1): (usize, usize) = (parse_num(t[0], ln, "vertex index")?, parse_num(t[1], ln, "vertex index")?);
        if v0 >= nv || v1 >= nv {
            return Err(FormatError::new(ln, format!("boundary vertex out of range (mesh has {nv} vertices)")));
        }
        boundary.push(BoundaryEdge { v0, v1, tag: parse_num(t[2], ln, "tag")? });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(FormatError::new(ln, "trailing content after BOUNDARY section"));
    }
    Mesh::new(kind, vertices, cells, boundary).map_err(|e| FormatError::new(0, e.to_string()))
}

/// Writes a mesh; coordinates use the shortest representation that reads
/// back to the same `f64`.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "MESH {}", mesh.kind().name()).unwrap();
    writeln!(s, "VERTICES {}", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:?} {:?}", p.x, p.y).unwrap();
    }
    writeln!(s, "CELLS {}", mesh.n_cells()).unwrap();
    for c in mesh.cells() {
        let idx: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        writeln!(s, "{}", idx.join(" ")).unwrap();
    }
    writeln!(s, "BOUNDARY {}", mesh.boundary_edges().len()).unwrap();
    for e in mesh.boundary_edges() {
        writeln!(s, "{} {} {}", e.v0, e.v1, e.tag).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndfm_core::build_rect_mesh;

    const SQUARE: &str = "# unit square\nMESH tri3\nVERTICES 4\n0 0\n1 0\n1 1\n0 1\nCELLS 2\n0 1 2\n0 2 3\nBOUNDARY 4\n0 1 1\n1 2 2\n2 3 3\n3 0 4\n";

    #[test]
    fn two_triangle_square() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.n_cells(), 2);
        for c in 0..2 {
            assert_eq!(m.cell_polygon(c).area(), 0.5);
        }
    }

    #[test]
    fn one_cell_square_matches_generator() {
        let text =
            "MESH quad4\nVERTICES 4\n0 0\n1 0\n0 1\n1 1\nCELLS 1\n0 1 3 2\nBOUNDARY 4\n0 2 1\n1 3 2\n0 1 3\n2 3 4\n";
        let m = parse_mesh(text).unwrap();
        let g = build_rect_mesh(1, 1, [0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.vertices(), g.vertices());
        assert_eq!(m.cell(0), g.cell(0));
        assert_eq!(m.area(), g.area());
    }

    #[test]
    fn clockwise_cells_are_flipped() {
        let m = parse_mesh(&SQUARE.replace("0 1 2\n0 2 3", "2 1 0\n0 2 3")).unwrap();
        assert!(m.cell_polygon(0).signed_area() > 0.0);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_mesh(&SQUARE.replace("0 2 3\n", "0 2 99\n")).unwrap_err();
        assert_eq!(e.line, 10);
        assert!(e.message.contains("99"));
        let e = parse_mesh(&SQUARE.replace("1 0\n1 1", "1 0\n2 0")).unwrap_err();
        assert_eq!(e.line, 9);
        assert_eq!(parse_mesh(&SQUARE.replace("1 0\n", "1 zero\n")).unwrap_err().line, 5);
        assert_eq!(parse_mesh("MESH hex8\n").unwrap_err().line, 1);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = ndfm_core::mesh::build_rect_tri_mesh(7, 3, [-0.1, 1.0 / 3.0, std::f64::consts::PI, 2.0]).unwrap();
        let back = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.cells().collect::<Vec<_>>(), m.cells().collect::<Vec<_>>());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
    }
}
