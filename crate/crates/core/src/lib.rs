//! Finite-element kernel for steady single-phase Darcy flow in fractured porous
//! media where fractures are represented as line-Dirac tangential conductivities
//! inside the permeability tensor.
//!
//! Fractures never have to follow mesh edges: every fracture is traced through
//! the cells it crosses and contributes the line integral
//! `∫_l ε k_f (∂Ψ_i/∂ν)(∂Ψ_j/∂ν) ds` to the stiffness matrix. On meshes whose
//! edges follow the fractures this reduces to the classical conforming
//! finite-element DFM.
//!
//! The crate is `no_std` (it only needs `alloc`); file formats, scenario
//! handling and the command line live in the `ndfm` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod assembly;
pub mod error;
pub mod expr;
pub mod fem;
pub mod geom;
pub mod linsolve;
pub mod mesh;
pub mod model;
pub mod postproc;
pub mod quadrature;
pub mod sparse;

pub use assembly::{
    assemble, assemble_full, eliminate, trace_curve, trace_network, AssemblyOptions, Dof, FractureTrace, FullSystem,
    LinearSystem, TracePiece,
};
pub use error::{Error, Result};
pub use expr::{parse_expr, Bindings, Expr, ExprError};
pub use geom::{
    clip_segment_cell, trace_curve_cell, CellPolygon, Curve, GeomTol, ParamInterval, Point2, Segment2, Transform2,
};
pub use linsolve::{estimate_cond2, solve_cg, CgOptions, CondEstimate, SolveReport};
pub use mesh::{build_rect_mesh, BoundaryEdge, BoundaryTag, CellKind, Mesh};
pub use model::{
    analytic_ex3, validate_problem, BoundaryCondition, BoundarySpec, Fracture, FractureNetwork, MatrixPermeability,
    Problem, Tensor2, ValidationReport, Violation,
};
pub use postproc::{norms_vs_analytic, relative_errors, ErrorReport, Norms, PressureField, SlicePoint, DEFAULT_QUAD_N};
pub use sparse::CsrMatrix;
