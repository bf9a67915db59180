use std::fmt::Write;

use ndfm_core::{CellKind, CsrMatrix, PressureField, SlicePoint};

use super::{parse_num, FormatError};

/// One `x,y,p` line per vertex, no header.
pub fn field_csv(field: &PressureField) -> String {
    let mut s = String::new();
    for (p, v) in field.mesh.vertices().iter().zip(&field.values) {
        writeln!(s, "{:?},{:?},{:?}", p.x, p.y, v).unwrap();
    }
    s
}

/// Reads `x,y,p` lines back.
pub fn parse_field_csv(text: &str) -> Result<Vec<[f64; 3]>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let t: Vec<&str> = line.split(',').map(str::trim).collect();
        if t.len() != 3 {
            return Err(FormatError::new(i + 1, "expected `x,y,p`"));
        }
        out.push([parse_num(t[0], i + 1, "x")?, parse_num(t[1], i + 1, "y")?, parse_num(t[2], i + 1, "p")?]);
    }
    Ok(out)
}

/// Legacy VTK (version 3.0, ASCII) unstructured grid with the pressure as
/// point data.
pub fn field_vtk(field: &PressureField) -> String {
    let mesh = &field.mesh;
    let (k, ty) = match mesh.kind() {
        CellKind::Tri3 => (3, 5),
        CellKind::Quad4 => (4, 9),
    };
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0\nndfm pressure\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:?} {:?} 0", p.x, p.y).unwrap();
    }
    writeln!(s, "CELLS {} {}", mesh.n_cells(), mesh.n_cells() * (k + 1)).unwrap();
    for c in mesh.cells() {
        let idx: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        writeln!(s, "{k} {}", idx.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.n_cells()).unwrap();
    for _ in 0..mesh.n_cells() {
        writeln!(s, "{ty}").unwrap();
    }
    writeln!(s, "POINT_DATA {}\nSCALARS pressure double 1\nLOOKUP_TABLE default", mesh.n_vertices()).unwrap();
    for v in &field.values {
        writeln!(s, "{v:?}").unwrap();
    }
    s
}

/// `s,x,y,p` with a header; samples outside the mesh leave `p` empty.
pub fn slice_csv(points: &[SlicePoint]) -> String {
    let mut s = String::from("s,x,y,p\n");
    for p in points {
        match p.value {
            Some(v) => writeln!(s, "{:?},{:?},{:?},{v:?}", p.s, p.x, p.y),
            None => writeln!(s, "{:?},{:?},{:?},", p.s, p.x, p.y),
        }
        .unwrap();
    }
    s
}

/// Coordinate format `i j value` with 1-based indices.
pub fn matrix_dump(a: &CsrMatrix) -> String {
    let mut s = String::new();
    for (i, j, v) in a.triplets() {
        writeln!(s, "{} {} {v:?}", i + 1, j + 1).unwrap();
    }
    s
}
