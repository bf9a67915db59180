//! Problem definition: matrix permeability, fractures, boundary conditions
//! and source.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, ExprError, Var};
use crate::geom::{Curve, Point2, Transform2};
use crate::mesh::{BoundaryTag, Mesh};

/// Symmetric 2×2 tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Tensor2 {
    pub const IDENTITY: Tensor2 = Tensor2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn isotropic(k: f64) -> Self {
        Self { xx: k, xy: 0.0, yy: k }
    }

    pub fn apply(&self, v: Point2) -> Point2 {
        Point2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { xx: c * self.xx, xy: c * self.xy, yy: c * self.yy }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Both eigenvalues strictly positive.
    pub fn is_spd(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite() && self.xx > 0.0 && self.det() > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixPermeability {
    Constant(Tensor2),
    PerCell(Vec<Tensor2>),
}

impl MatrixPermeability {
    pub fn at(&self, cell: usize) -> Tensor2 {
        match self {
            MatrixPermeability::Constant(k) => *k,
            MatrixPermeability::PerCell(v) => v[cell],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            MatrixPermeability::Constant(k) => MatrixPermeability::Constant(k.scaled(c)),
            MatrixPermeability::PerCell(v) => MatrixPermeability::PerCell(v.iter().map(|k| k.scaled(c)).collect()),
        }
    }
}

/// Geometry of a straight fracture in its own frame: the fracture occupies
/// `ξ ∈ [xi1, xi2]` on the line `η = eta0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StraightFrame {
    pub transform: Transform2,
    pub xi1: f64,
    pub xi2: f64,
    pub eta0: f64,
    /// Unit direction ν.
    pub tangent: Point2,
    /// ν rotated by +π/2.
    pub normal: Point2,
}

/// A fracture: centerline geometry plus aperture ε and tangential permeability
/// k_f. Both coefficients may depend on `x`, `y` and the arc length `s`.
#[derive(Clone, Debug)]
pub struct Fracture {
    pub curve: Curve,
    pub aperture: Expr,
    pub tang_perm: Expr,
}

impl Fracture {
    pub fn new(curve: Curve, aperture: Expr, tang_perm: Expr) -> Self {
        Self { curve, aperture, tang_perm }
    }

    /// Fracture with constant ε and k_f.
    pub fn constant(curve: Curve, aperture: f64, tang_perm: f64) -> Self {
        Self::new(curve, Expr::Num(aperture), Expr::Num(tang_perm))
    }

    pub fn has_constant_conductance(&self) -> bool {
        self.aperture.is_constant() && self.tang_perm.is_constant()
    }

    /// ε·k_f at curve parameter `t`.
    pub fn conductance(&self, t: f64) -> Result<f64> {
        let p = self.curve.point(t);
        let b = Bindings::xys(p.x, p.y, self.curve.arc_length_from_start(t));
        Ok(self.aperture.eval(&b)? * self.tang_perm.eval(&b)?)
    }

    pub fn straight_frame(&self) -> Option<StraightFrame> {
        let Curve::Segment(seg) = &self.curve else { return None };
        let d = seg.b - seg.a;
        let len = d.norm();
        if len == 0.0 {
            return None;
        }
        let tf = Transform2::new(d.y.atan2(d.x));
        let (qa, qb) = (tf.to_local(seg.a), tf.to_local(seg.b));
        let tangent = d * (1.0 / len);
        Some(StraightFrame { transform: tf, xi1: qa.x, xi2: qb.x, eta0: qa.y, tangent, normal: tangent.perp() })
    }

    /// Same fracture after rotating by `dtheta` about the origin and shifting.
    pub fn transformed(&self, dtheta: f64, shift: Point2) -> Self {
        Self { curve: self.curve.transformed(dtheta, shift), ..self.clone() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct FractureNetwork {
    pub fractures: Vec<Fracture>,
}

impl FractureNetwork {
    pub fn new(fractures: Vec<Fracture>) -> Self {
        Self { fractures }
    }

    pub fn len(&self) -> usize {
        self.fractures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractures.is_empty()
    }

    pub fn transformed(&self, dtheta: f64, shift: Point2) -> Self {
        Self { fractures: self.fractures.iter().map(|f| f.transformed(dtheta, shift)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed pressure `p_D(x, y)`.
    Dirichlet(Expr),
    /// Prescribed outward flux `q_N = -(K ∇p)·n`; negative values are inflow.
    Neumann(Expr),
}

impl BoundaryCondition {
    pub fn expr(&self) -> &Expr {
        match self {
            BoundaryCondition::Dirichlet(e) | BoundaryCondition::Neumann(e) => e,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet(_))
    }
}

pub type BoundarySpec = BTreeMap<BoundaryTag, BoundaryCondition>;

#[derive(Clone, Debug)]
pub struct Problem {
    pub mesh: Arc<Mesh>,
    pub perm: MatrixPermeability,
    pub network: FractureNetwork,
    pub bcs: BoundarySpec,
    pub source: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    MissingBoundaryCondition(BoundaryTag),
    NoDirichlet,
    PermeabilityTableLength { expected: usize, got: usize },
    NonSpdPermeability { cell: Option<usize> },
    NonPositiveConductance { fracture: usize, t: f64, value: f64 },
    Expression { context: String, error: ExprError },
    UsesArcLength { context: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingBoundaryCondition(t) => write!(f, "boundary tag {t} has no condition"),
            Violation::NoDirichlet => write!(f, "no Dirichlet boundary: the problem is singular"),
            Violation::PermeabilityTableLength { expected, got } => {
                write!(f, "per-cell permeability has {got} entries, mesh has {expected} cells")
            }
            Violation::NonSpdPermeability { cell: Some(c) } => write!(f, "permeability of cell {c} is not SPD"),
            Violation::NonSpdPermeability { cell: None } => write!(f, "matrix permeability is not SPD"),
            Violation::NonPositiveConductance { fracture, t, value } => {
                write!(f, "fracture {fracture}: ε·k_f = {value} at t = {t} is not positive")
            }
            Violation::Expression { context, error } => write!(f, "{context}: {error}"),
            Violation::UsesArcLength { context } => write!(f, "{context}: `s` is only defined along fractures"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks tag coverage, well-posedness, SPD permeability, expression sanity
/// and positivity of ε·k_f at 100 samples per fracture.
pub fn validate_problem(pb: &Problem) -> ValidationReport {
    let mut v = Vec::new();
    let mesh = &pb.mesh;
    for tag in mesh.boundary_tags() {
        if !pb.bcs.contains_key(&tag) {
            v.push(Violation::MissingBoundaryCondition(tag));
        }
    }
    if !mesh.boundary_tags().iter().any(|t| pb.bcs.get(t).is_some_and(|bc| bc.is_dirichlet())) {
        v.push(Violation::NoDirichlet);
    }

    match &pb.perm {
        MatrixPermeability::Constant(k) => {
            if !k.is_spd() {
                v.push(Violation::NonSpdPermeability { cell: None });
            }
        }
        MatrixPermeability::PerCell(ks) => {
            if ks.len() != mesh.n_cells() {
                v.push(Violation::PermeabilityTableLength { expected: mesh.n_cells(), got: ks.len() });
            }
            if let Some(c) = ks.iter().position(|k| !k.is_spd()) {
                v.push(Violation::NonSpdPermeability { cell: Some(c) });
            }
        }
    }

    if pb.source.uses(Var::S) {
        v.push(Violation::UsesArcLength { context: "source".into() });
    }
    for (tag, bc) in &pb.bcs {
        let ctx = || format!("boundary tag {tag}");
        if bc.expr().uses(Var::S) {
            v.push(Violation::UsesArcLength { context: ctx() });
            continue;
        }
        for e in mesh.boundary_edges().iter().filter(|e| e.tag == *tag) {
            let p = mesh.vertices()[e.v0];
            if let Err(error) = bc.expr().eval(&Bindings::xy(p.x, p.y)) {
                v.push(Violation::Expression { context: ctx(), error });
                break;
            }
        }
    }

    for (i, f) in pb.network.fractures.iter().enumerate() {
        let (a, b) = f.curve.domain();
        for k in 0..100 {
            let t = a + (b - a) * (k as f64 + 0.5) / 100.0;
            match f.conductance(t) {
                Ok(value) if value > 0.0 && value.is_finite() => {}
                Ok(value) => {
                    v.push(Violation::NonPositiveConductance { fracture: i, t, value });
                    break;
                }
                Err(Error::Expr(error)) => {
                    v.push(Violation::Expression { context: format!("fracture {i}"), error });
                    break;
                }
                Err(_) => unreachable!("conductance only fails on expressions"),
            }
        }
    }
    ValidationReport { violations: v }
}

/// Closed-form solution `p = sin(ξ)·exp(|η|)` for the single straight fracture
/// through the origin at angle `theta` with ε·k_f = 2 and K_m = I, together with
/// its gradient (taking the `η > 0` side on the fracture line).
pub fn analytic_ex3(theta: f64, p: Point2) -> (f64, Point2) {
    let tf = Transform2::new(theta);
    let q = tf.to_local(p);
    let e = q.y.abs().exp();
    let sgn = if q.y < 0.0 { -1.0 } else { 1.0 };
    let (s, c) = q.x.sin_cos();
    let d_xi = c * e;
    let d_eta = s * sgn * e;
    let (st, ct) = theta.sin_cos();
    (s * e, Point2::new(d_xi * ct - d_eta * st, d_xi * st + d_eta * ct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;
    use core::f64::consts::PI;

    fn ex1_problem() -> Problem {
        let mesh = Arc::new(build_rect_mesh(10, 10, [0.0, 0.0, 1.0, 1.0]).unwrap());
        let frac = |a: (f64, f64), b: (f64, f64)| {
            Fracture::constant(Curve::segment(Point2::new(a.0, a.1), Point2::new(b.0, b.1)), 1e-3, 1e8)
        };
        let mut bcs = BoundarySpec::new();
        bcs.insert(1, BoundaryCondition::Dirichlet(Expr::Num(1.0)));
        bcs.insert(2, BoundaryCondition::Dirichlet(Expr::Num(0.0)));
        bcs.insert(3, BoundaryCondition::Neumann(Expr::Num(0.0)));
        bcs.insert(4, BoundaryCondition::Neumann(Expr::Num(0.0)));
        Problem {
            mesh,
            perm: MatrixPermeability::Constant(Tensor2::IDENTITY),
            network: FractureNetwork::new(alloc::vec![frac((0.25, 0.5), (0.75, 0.5)), frac((0.5, 0.25), (0.5, 0.75))]),
            bcs,
            source: Expr::Num(0.0),
        }
    }

    #[test]
    fn validation_examples() {
        let pb = ex1_problem();
        assert!(validate_problem(&pb).is_ok());

        let mut missing = pb.clone();
        missing.bcs.remove(&4);
        let r = validate_problem(&missing);
        assert_eq!(r.violations, alloc::vec![Violation::MissingBoundaryCondition(4)]);
        assert!(alloc::string::ToString::to_string(&r).contains("tag 4"));

        let mut neumann = pb.clone();
        for bc in neumann.bcs.values_mut() {
            *bc = BoundaryCondition::Neumann(Expr::Num(0.0));
        }
        assert_eq!(validate_problem(&neumann).violations, alloc::vec![Violation::NoDirichlet]);

        let mut bad = pb.clone();
        bad.perm = MatrixPermeability::Constant(Tensor2 { xx: 1.0, xy: 2.0, yy: 1.0 });
        bad.network.fractures[1].aperture = Expr::Num(-1e-3);
        let r = validate_problem(&bad);
        assert!(r.violations.contains(&Violation::NonSpdPermeability { cell: None }));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NonPositiveConductance { fracture: 1, .. })));
    }

    #[test]
    fn analytic_examples() {
        let (v, _) = analytic_ex3(0.0, Point2::new(1.0, 1.0));
        assert!((v - 2.28735528717884).abs() < 1e-13);
        let (v, _) = analytic_ex3(PI / 2.0, Point2::new(0.0, 2.0));
        assert!((v - 2f64.sin()).abs() < 1e-15);
        for theta in [0.0, 0.3, 5.3] {
            let p = Transform2::new(theta).to_global(Point2::new(PI / 2.0, 0.0));
            assert!((analytic_ex3(theta, p).0 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let h = 1e-6;
        for theta in [0.0, 0.3, 5.3] {
            for &(x, y) in &[(0.4, 1.1), (-2.0, -0.7), (1.3, -2.5)] {
                let (_, g) = analytic_ex3(theta, Point2::new(x, y));
                let f = |x: f64, y: f64| analytic_ex3(theta, Point2::new(x, y)).0;
                let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
                let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
                assert!((g.x - gx).abs() < 1e-7 && (g.y - gy).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn analytic_flux_jump_balances_fracture_term() {
        // [∂p/∂η] across the line equals −ε k_f ∂²p/∂ξ² with ε k_f = 2
        for theta in [0.0, 0.3, 5.3] {
            let tf = Transform2::new(theta);
            let n = tf.to_global(Point2::new(0.0, 1.0)) - tf.to_global(Point2::default());
            for k in 0..100 {
                let xi = -PI + 2.0 * PI * (k as f64 + 0.5) / 100.0;
                let above = analytic_ex3(theta, tf.to_global(Point2::new(xi, 1e-12))).1.dot(n);
                let below = analytic_ex3(theta, tf.to_global(Point2::new(xi, -1e-12))).1.dot(n);
                let jump = above - below;
                let h = 1e-4;
                let f = |xi: f64| analytic_ex3(theta, tf.to_global(Point2::new(xi, 0.0))).0;
                let d2 = (f(xi + h) - 2.0 * f(xi) + f(xi - h)) / (h * h);
                assert!((jump - 2.0 * xi.sin()).abs() < 1e-10);
                assert!((jump + 2.0 * d2).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn straight_frame_of_segment() {
        let f = Fracture::constant(Curve::segment(Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)), 1.0, 1.0);
        let fr = f.straight_frame().unwrap();
        assert!((fr.transform.theta - PI / 4.0).abs() < 1e-15);
        assert!((fr.xi1 - 2f64.sqrt()).abs() < 1e-14 && (fr.xi2 - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(fr.eta0.abs() < 1e-15);
        assert!((fr.tangent.norm() - 1.0).abs() < 1e-15 && fr.tangent.dot(fr.normal).abs() < 1e-15);
        assert!(fr.tangent.cross(fr.normal) > 0.0);
    }
}
