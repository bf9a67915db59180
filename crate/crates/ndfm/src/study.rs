//! Mesh-convergence and consistency studies.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use anyhow::Result;
use ndfm_core::{
    analytic_ex3, build_rect_mesh, norms_vs_analytic, parse_expr, BoundaryCondition, Curve, Expr, Fracture,
    FractureNetwork, MatrixPermeability, Point2, Problem, Tensor2,
};
use rayon::prelude::*;

use crate::scenario::{solve_problem, SolverSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// Observed orders of `[l1, l2, linf]` against the previous row.
    pub orders: Option<[f64; 3]>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyRow {
    pub delta: f64,
    pub diff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StudyTable {
    Convergence(Vec<ConvergenceRow>),
    Consistency(Vec<ConsistencyRow>),
}

impl fmt::Display for StudyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ord = |o: Option<f64>| o.map_or("--".to_string(), |v| format!("{v:.2}"));
        match self {
            StudyTable::Convergence(rows) => {
                writeln!(
                    f,
                    "{:>9} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6}",
                    "mesh", "L1", "order", "L2", "order", "Linf", "order"
                )?;
                for r in rows {
                    let o = |k: usize| ord(r.orders.map(|o| o[k]));
                    writeln!(
                        f,
                        "{:>9} {:>10.3e} {:>6} {:>10.3e} {:>6} {:>10.3e} {:>6}",
                        format!("{0}x{0}", r.n),
                        r.l1,
                        o(0),
                        r.l2,
                        o(1),
                        r.linf,
                        o(2)
                    )?;
                }
            }
            StudyTable::Consistency(rows) => {
                writeln!(f, "{:>10} {:>12} {:>10}", "delta", "max diff", "diff/delta")?;
                for r in rows {
                    let ratio = if r.delta > 0.0 { format!("{:.3}", r.diff / r.delta) } else { "--".into() };
                    writeln!(f, "{:>10.1e} {:>12.3e} {:>10}", r.delta, r.diff, ratio)?;
                }
            }
        }
        Ok(())
    }
}

/// Chord of `[-π, π]²` through the origin at angle `theta`.
fn chord(theta: f64) -> Curve {
    let (c, s) = (theta.cos(), theta.sin());
    let t = (PI / c.abs()).min(PI / s.abs());
    Curve::segment(Point2::new(-t * c, -t * s), Point2::new(t * c, t * s))
}

/// The analytic test case on an `n × n` grid of `[-π, π]²`: one fracture at
/// angle `theta` through the origin with ε k_f = 2, K_m = I and the exact
/// solution imposed on the whole boundary.
pub fn convergence_problem(theta: f64, n: usize) -> Result<Problem> {
    let mesh = Arc::new(build_rect_mesh(n, n, [-PI, -PI, PI, PI])?);
    let t = format!("{theta:?}");
    let exact = parse_expr(&format!("sin(cos({t})*x+sin({t})*y)*exp(abs(-sin({t})*x+cos({t})*y))"))?;
    let bcs = (1..=4).map(|tag| (tag, BoundaryCondition::Dirichlet(exact.clone()))).collect();
    Ok(Problem {
        mesh,
        perm: MatrixPermeability::Constant(Tensor2::IDENTITY),
        network: FractureNetwork::new(vec![Fracture::constant(chord(theta), 1.0, 2.0)]),
        bcs,
        source: Expr::Num(0.0),
    })
}

/// Errors against the analytic solution on each mesh size, with observed
/// orders `log(e_prev / e) / log(n / n_prev)` (log₂ for halving sequences).
/// Mesh levels run in parallel.
pub fn convergence_study(theta: f64, sizes: &[usize], quad_n: usize) -> Result<StudyTable> {
    let solver = SolverSpec { tol: 1e-12, maxit: None };
    let rows: Vec<ConvergenceRow> = sizes
        .par_iter()
        .map(|&n| {
            let pb = convergence_problem(theta, n)?;
            let (_, field, report) = solve_problem(&pb, &solver)?;
            let nm = norms_vs_analytic(&field, |p| analytic_ex3(theta, p).0, quad_n)?;
            Ok(ConvergenceRow { n, l1: nm.l1, l2: nm.l2, linf: nm.linf, orders: None, iterations: report.iterations })
        })
        .collect::<Result<_>>()?;
    let mut out = rows.clone();
    for k in 1..out.len() {
        let (a, b) = (&rows[k - 1], &rows[k]);
        let r = (b.n as f64 / a.n as f64).ln();
        out[k].orders = Some([(a.l1 / b.l1).ln() / r, (a.l2 / b.l2).ln() / r, (a.linf / b.linf).ln() / r]);
    }
    Ok(StudyTable::Convergence(out))
}

/// Rotates the network by `Δ` about the origin and shifts it by `(Δ, Δ)` for
/// each `Δ`, keeping the mesh, and records the largest nodal difference from
/// the unperturbed solution.
pub fn consistency_study(base: &Problem, deltas: &[f64], solver: &SolverSpec) -> Result<StudyTable> {
    let (_, reference, _) = solve_problem(base, solver)?;
    let rows = deltas
        .par_iter()
        .map(|&d| {
            let pb = Problem { network: base.network.transformed(d, Point2::new(d, d)), ..base.clone() };
            let (_, field, report) = solve_problem(&pb, solver)?;
            if !report.converged {
                anyhow::bail!("solver did not converge for delta {d}");
            }
            let diff = field.values.iter().zip(&reference.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(ConsistencyRow { delta: d, diff })
        })
        .collect::<Result<_>>()?;
    Ok(StudyTable::Consistency(rows))
}
