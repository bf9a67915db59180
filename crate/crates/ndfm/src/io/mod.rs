//! Text file formats: meshes, fracture networks, fields, slices and matrix
//! dumps.

mod export;
mod fracture_file;
mod mesh_file;

pub use export::{field_csv, field_vtk, matrix_dump, parse_field_csv, slice_csv};
pub use fracture_file::{parse_fractures, write_fractures};
pub use mesh_file::{parse_mesh, write_mesh};

/// Parse failure with the 1-based line it occurred on (0 when it concerns
/// the file as a whole).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl FormatError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

/// Non-empty lines with `#` comments stripped, paired with 1-based numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, FormatError> {
    tok.parse().map_err(|_| FormatError::new(line, format!("bad {what} `{tok}`")))
}
