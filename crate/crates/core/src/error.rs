use alloc::string::String;

use crate::expr::ExprError;
use crate::model::ValidationReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("point ({x}, {y}) lies outside the mesh")]
    OutsideDomain { x: f64, y: f64 },
    #[error("problem failed validation: {0}")]
    Validation(ValidationReport),
    #[error("linear solver: {0}")]
    Solver(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}
