//! Jacobi-preconditioned conjugate gradients and spectral condition estimates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `‖b − A x‖ / ‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `20 · n`.
    pub maxit: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-12, maxit: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual of the CG recurrence (used for the stopping test).
    pub rel_residual: f64,
    /// Relative residual recomputed from `b − A x` at exit.
    pub true_rel_residual: f64,
    pub converged: bool,
    /// Filled in by callers that have a clock.
    pub wall_time: Option<Duration>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn solve_cg(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, SolveReport)> {
    solve_cg_observed(a, b, opts, |_, _| {})
}

/// As [`solve_cg`], calling `observe(k, x_k)` after every iteration.
pub fn solve_cg_observed(
    a: &CsrMatrix,
    b: &[f64],
    opts: &CgOptions,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n_rows();
    if a.n_cols() != n || b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "system is {}×{} with a right-hand side of length {}",
            n,
            a.n_cols(),
            b.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("CG tolerance must be positive".into()));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Solver(format!("non-positive diagonal entry {} in row {i}", diag[i])));
    }
    let inv_d: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let maxit = opts.maxit.unwrap_or(20 * n.max(1));

    let mut x = vec![0.0; n];
    let bn = norm(b);
    if bn == 0.0 {
        let report =
            SolveReport { iterations: 0, rel_residual: 0.0, true_rel_residual: 0.0, converged: true, wall_time: None };
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    let mut it = 0;
    let mut converged = false;
    while it < maxit {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        observe(it, &x);
        rel = norm(&r) / bn;
        if rel <= opts.tol {
            converged = true;
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_d[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let ax = a.matvec(&x);
    let true_rel = norm(&b.iter().zip(&ax).map(|(b, ax)| b - ax).collect::<Vec<_>>()) / bn;
    let report =
        SolveReport { iterations: it, rel_residual: rel, true_rel_residual: true_rel, converged, wall_time: None };
    Ok((x, report))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondEstimate {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub cond: f64,
    /// False when an inner CG solve failed to converge.
    pub reliable: bool,
}

/// 2-norm condition number of an SPD matrix: power iteration (200 steps) for
/// λ_max and inverse power iteration with CG solves (tol 1e-10) for λ_min.
/// Accurate to the order of magnitude at least.
pub fn estimate_cond2(a: &CsrMatrix) -> Result<CondEstimate> {
    let n = a.n_rows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_749_895).sin()).collect();
    let normalize = |v: &mut Vec<f64>| {
        let s = norm(v);
        v.iter_mut().for_each(|x| *x /= s);
    };

    let mut v = start.clone();
    normalize(&mut v);
    let mut lambda_max = 0.0;
    for _ in 0..200 {
        let w = a.matvec(&v);
        lambda_max = dot(&v, &w);
        v = w;
        normalize(&mut v);
    }

    let mut v = start;
    normalize(&mut v);
    let mut lambda_min = f64::NAN;
    let mut reliable = true;
    let opts = CgOptions { tol: 1e-10, maxit: None };
    for _ in 0..200 {
        let (w, rep) = solve_cg(a, &v, &opts)?;
        if !rep.converged {
            reliable = false;
        }
        // Rayleigh quotient of A at w: vᵀw / wᵀw since A w ≈ v
        let next = dot(&v, &w) / dot(&w, &w);
        v = w;
        normalize(&mut v);
        let done = (next - lambda_min).abs() <= 1e-10 * next.abs();
        lambda_min = next;
        if done {
            break;
        }
    }
    Ok(CondEstimate { lambda_max, lambda_min, cond: lambda_max / lambda_min, reliable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplace1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n as u32 {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    /// Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
        let bm: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..n).map(|k| bm[k][i] * bm[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let (x, rep) = solve_cg(&CsrMatrix::identity(3), &b, &CgOptions::default()).unwrap();
        assert_eq!(x, b);
        assert!(rep.converged && rep.iterations <= 1);
    }

    #[test]
    fn two_by_two() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (x, rep) = solve_cg(&a, &[3.0, 3.0], &CgOptions::default()).unwrap();
        assert!(rep.converged);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let a = random_spd(&mut rng, 50);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, rep) = solve_cg(&CsrMatrix::from_dense(&a), &b, &CgOptions::default()).unwrap();
        assert!(rep.converged && rep.true_rel_residual < 1e-11);
        let want = dense_solve(a, b);
        let err = norm(&x.iter().zip(&want).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&want);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn refuses_non_positive_diagonal() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(solve_cg(&a, &[1.0, 1.0], &CgOptions::default()), Err(Error::Solver(_))));
    }

    #[test]
    fn energy_error_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = laplace1d(200);
        let b: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (exact, _) = solve_cg(&a, &b, &CgOptions { tol: 1e-14, maxit: None }).unwrap();
        let mut errs = Vec::new();
        solve_cg_observed(&a, &b, &CgOptions::default(), |k, x| {
            if k % 10 == 0 {
                let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
                errs.push(dot(&e, &a.matvec(&e)).sqrt());
            }
        })
        .unwrap();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-14);
        }
    }

    #[test]
    fn diagonal_rescaling_leaves_solution_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = CsrMatrix::from_dense(&random_spd(&mut rng, 30));
        let b: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = (0..30).map(|_| 10f64.powf(rng.gen_range(-2.0..2.0))).collect();
        let tol = 1e-12;
        let (x, _) = solve_cg(&a, &b, &CgOptions { tol, maxit: None }).unwrap();
        // (D A D) y = D b  ⇒  x = D y
        let db: Vec<f64> = b.iter().zip(&d).map(|(b, d)| b * d).collect();
        let (y, _) = solve_cg(&a.scaled_symmetric(&d), &db, &CgOptions { tol, maxit: None }).unwrap();
        let xs: Vec<f64> = y.iter().zip(&d).map(|(y, d)| y * d).collect();
        let err = norm(&x.iter().zip(&xs).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&x);
        assert!(err < 10.0 * tol, "{err}");
    }

    #[test]
    fn condition_examples() {
        let c = estimate_cond2(&CsrMatrix::identity(5)).unwrap();
        assert!((c.cond - 1.0).abs() < 1e-6);
        let d = CsrMatrix::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 10.0, 0.0], vec![0.0, 0.0, 100.0]]);
        assert!((estimate_cond2(&d).unwrap().cond - 100.0).abs() < 1.0);
        let n = 20;
        let lam = |k: usize| 4.0 * (k as f64 * PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
        let want = lam(n) / lam(1);
        let got = estimate_cond2(&laplace1d(n)).unwrap();
        assert!(got.reliable && (got.cond - want).abs() < 0.05 * want, "{} vs {want}", got.cond);
    }
}
