//! Linear (P1) and bilinear (Q1) shape functions and the local integrals of
//! the weak form.

use crate::error::{Error, Result};
use crate::geom::{CellPolygon, Curve, ParamInterval, Point2};
use crate::model::Tensor2;
use crate::quadrature::{gauss_legendre, QuadRule, TRI7};

/// Shape-function values and physical gradients at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeEval {
    pub n: usize,
    pub values: [f64; 4],
    pub grads: [Point2; 4],
}

const Q1_CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

fn tri_gradients(v: &[Point2]) -> ([Point2; 3], f64) {
    let two_a = (v[1] - v[0]).cross(v[2] - v[0]);
    let g = |j: usize, k: usize| Point2::new(v[j].y - v[k].y, v[k].x - v[j].x) * (1.0 / two_a);
    ([g(1, 2), g(2, 0), g(0, 1)], 0.5 * two_a)
}

/// Reference-square map of a quad cell.
#[derive(Clone, Copy, Debug)]
pub struct QuadMap {
    v: [Point2; 4],
}

impl QuadMap {
    pub fn new(cell: &CellPolygon) -> Self {
        let v = cell.vertices();
        Self { v: [v[0], v[1], v[2], v[3]] }
    }

    fn ref_values(xi: f64, eta: f64) -> ([f64; 4], [(f64, f64); 4]) {
        let mut n = [0.0; 4];
        let mut d = [(0.0, 0.0); 4];
        for (i, &(a, b)) in Q1_CORNERS.iter().enumerate() {
            n[i] = 0.25 * (1.0 + a * xi) * (1.0 + b * eta);
            d[i] = (0.25 * a * (1.0 + b * eta), 0.25 * b * (1.0 + a * xi));
        }
        (n, d)
    }

    /// Physical point and Jacobian `[[x_ξ, x_η], [y_ξ, y_η]]` at `(ξ, η)`.
    pub fn map(&self, xi: f64, eta: f64) -> (Point2, [[f64; 2]; 2]) {
        let (n, d) = Self::ref_values(xi, eta);
        let mut p = Point2::default();
        let mut j = [[0.0; 2]; 2];
        for i in 0..4 {
            p += self.v[i] * n[i];
            j[0][0] += self.v[i].x * d[i].0;
            j[0][1] += self.v[i].x * d[i].1;
            j[1][0] += self.v[i].y * d[i].0;
            j[1][1] += self.v[i].y * d[i].1;
        }
        (p, j)
    }

    /// Shape values, physical gradients and `det J` at reference `(ξ, η)`.
    pub fn eval_reference(&self, xi: f64, eta: f64) -> (ShapeEval, f64) {
        let (n, d) = Self::ref_values(xi, eta);
        let (_, j) = self.map(xi, eta);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let mut grads = [Point2::default(); 4];
        for i in 0..4 {
            // J^{-T} ∇_ref
            let (a, b) = d[i];
            grads[i] = Point2::new(j[1][1] * a - j[1][0] * b, -j[0][1] * a + j[0][0] * b) * (1.0 / det);
        }
        (ShapeEval { n: 4, values: n, grads }, det)
    }

    /// Reference coordinates of physical point `p` (Newton iteration).
    pub fn inverse(&self, p: Point2) -> (f64, f64) {
        let (mut xi, mut eta) = (0.0, 0.0);
        let scale = (self.v[2] - self.v[0]).norm().max((self.v[3] - self.v[1]).norm());
        for _ in 0..50 {
            let (x, j) = self.map(xi, eta);
            let r = p - x;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let dxi = (j[1][1] * r.x - j[0][1] * r.y) / det;
            let deta = (-j[1][0] * r.x + j[0][0] * r.y) / det;
            xi += dxi;
            eta += deta;
            if r.norm() <= 1e-16 * scale || dxi.abs().max(deta.abs()) < 1e-15 {
                break;
            }
        }
        (xi, eta)
    }
}

/// Shape functions of `cell` at physical point `p`.
pub fn shape_at(cell: &CellPolygon, p: Point2) -> ShapeEval {
    let v = cell.vertices();
    match cell.n_vertices() {
        3 => {
            let (g, _) = tri_gradients(v);
            let mut values = [0.0; 4];
            // λ_i(p) = 1 + ∇λ_i·(p − v_i) is exact for linear λ_i with λ_i(v_i) = 1
            for i in 0..3 {
                values[i] = 1.0 + g[i].dot(p - v[i]);
            }
            ShapeEval { n: 3, values, grads: [g[0], g[1], g[2], Point2::default()] }
        }
        _ => {
            let m = QuadMap::new(cell);
            let (xi, eta) = m.inverse(p);
            m.eval_reference(xi, eta).0
        }
    }
}

/// Interpolates nodal `values` (in cell vertex order) at `p`.
pub fn interpolate(cell: &CellPolygon, p: Point2, values: &[f64]) -> f64 {
    let s = shape_at(cell, p);
    (0..s.n).map(|i| s.values[i] * values[i]).sum()
}

/// Dense local matrix of a 3- or 4-vertex cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMatrix {
    pub n: usize,
    pub values: [[f64; 4]; 4],
}

impl LocalMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: [[0.0; 4]; 4] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.values[i][j].abs());
            }
        }
        m
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += u[i] * self.values[i][j] * v[j];
            }
        }
        s
    }

    fn add_outer(&mut self, d: &[f64; 4], w: f64) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.values[i][j] += w * d[i] * d[j];
            }
        }
    }
}

/// `∫_cell (K ∇Ψ_i)·∇Ψ_j`: exact for P1, 2×2 Gauss for Q1.
pub fn local_matrix_stiffness(cell: &CellPolygon, k: &Tensor2) -> LocalMatrix {
    match cell.n_vertices() {
        3 => {
            let (g, area) = tri_gradients(cell.vertices());
            let mut m = LocalMatrix::zeros(3);
            for i in 0..3 {
                let kg = k.apply(g[i]);
                for j in 0..3 {
                    m.values[i][j] = area * kg.dot(g[j]);
                }
            }
            m
        }
        _ => {
            let map = QuadMap::new(cell);
            let mut m = LocalMatrix::zeros(4);
            for ((xi, eta), w) in QuadRule::gauss(2).expect("2-point rule").points() {
                let (s, det) = map.eval_reference(xi, eta);
                for i in 0..4 {
                    let kg = k.apply(s.grads[i]);
                    for j in 0..4 {
                        m.values[i][j] += w * det * kg.dot(s.grads[j]);
                    }
                }
            }
            m
        }
    }
}

/// `∫ ε k_f (∂Ψ_i/∂ν)(∂Ψ_j/∂ν) ds` over the piece `interval` of `curve`, by
/// `nq`-point Gauss in the curve parameter. `conductance(t)` returns ε·k_f.
pub fn local_fracture_stiffness(
    cell: &CellPolygon,
    curve: &Curve,
    interval: ParamInterval,
    mut conductance: impl FnMut(f64) -> Result<f64>,
    nq: usize,
) -> Result<LocalMatrix> {
    let mut m = LocalMatrix::zeros(cell.n_vertices());
    if interval.is_empty() {
        return Ok(m);
    }
    let rule = gauss_legendre(nq)?;
    for (t, w) in rule.mapped(interval.t_a, interval.t_b) {
        let c = conductance(t)?;
        if !(c > 0.0) {
            return Err(Error::InvalidData(alloc::format!("ε·k_f = {c} at t = {t} is not positive")));
        }
        let tan = curve.tangent(t);
        let speed = tan.norm();
        let s = shape_at(cell, curve.point(t));
        let mut d = [0.0; 4];
        for i in 0..s.n {
            d[i] = s.grads[i].dot(tan) / speed;
        }
        m.add_outer(&d, w * c * speed);
    }
    Ok(m)
}

/// `∫_cell f Ψ_i`: 7-point rule on triangles, 4×4 Gauss on quads.
pub fn local_load(cell: &CellPolygon, mut f: impl FnMut(Point2) -> Result<f64>) -> Result<[f64; 4]> {
    let mut b = [0.0; 4];
    let v = cell.vertices();
    match cell.n_vertices() {
        3 => {
            let area = cell.area();
            for (l, &w) in TRI7.bary.iter().zip(TRI7.weights) {
                let p = v[0] * l[0] + v[1] * l[1] + v[2] * l[2];
                let fw = w * area * f(p)?;
                for i in 0..3 {
                    b[i] += fw * l[i];
                }
            }
        }
        _ => {
            let map = QuadMap::new(cell);
            for ((xi, eta), w) in QuadRule::gauss(4)?.points() {
                let (s, det) = map.eval_reference(xi, eta);
                let (p, _) = map.map(xi, eta);
                let fw = w * det * f(p)?;
                for i in 0..4 {
                    b[i] += fw * s.values[i];
                }
            }
        }
    }
    Ok(b)
}

/// `∫_edge q_N Ψ_i ds` for the two edge end points (3-point Gauss).
pub fn neumann_load(a: Point2, b: Point2, mut q: impl FnMut(Point2) -> Result<f64>) -> Result<[f64; 2]> {
    let len = a.distance(b);
    let mut out = [0.0; 2];
    for (t, w) in gauss_legendre(3)?.mapped(0.0, 1.0) {
        let qw = w * len * q(a.lerp(b, t))?;
        out[0] += qw * (1.0 - t);
        out[1] += qw * t;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Segment2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn right_tri() -> CellPolygon {
        CellPolygon::triangle(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0))
    }

    fn assert_mat(m: &LocalMatrix, want: &[&[f64]], tol: f64) {
        for i in 0..m.n {
            for j in 0..m.n {
                assert!((m.values[i][j] - want[i][j]).abs() < tol, "({i},{j}): {} vs {}", m.values[i][j], want[i][j]);
            }
        }
    }

    fn random_cell(rng: &mut ChaCha8Rng, quad: bool) -> CellPolygon {
        loop {
            let c = if quad {
                let jig = |rng: &mut ChaCha8Rng, x: f64, y: f64| {
                    Point2::new(x + rng.gen_range(-0.2..0.2), y + rng.gen_range(-0.2..0.2))
                };
                CellPolygon::quad(jig(rng, 0.0, 0.0), jig(rng, 1.0, 0.0), jig(rng, 1.0, 1.0), jig(rng, 0.0, 1.0))
            } else {
                CellPolygon::triangle(
                    Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
                    Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
                    Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
                )
            };
            if c.check_nondegenerate().is_ok() && c.area() > 0.05 {
                return c;
            }
        }
    }

    #[test]
    fn stiffness_examples() {
        let m = local_matrix_stiffness(&right_tri(), &Tensor2::IDENTITY);
        assert_mat(&m, &[&[1.0, -0.5, -0.5], &[-0.5, 0.5, 0.0], &[-0.5, 0.0, 0.5]], 1e-15);
        let m2 = local_matrix_stiffness(&right_tri(), &Tensor2::isotropic(2.0));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m2.values[i][j], 2.0 * m.values[i][j]);
            }
        }
        let q = local_matrix_stiffness(&CellPolygon::rect(0.0, 0.0, 1.0, 1.0), &Tensor2::IDENTITY);
        let (d, adj, opp) = (2.0 / 3.0, -1.0 / 6.0, -1.0 / 3.0);
        assert_mat(&q, &[&[d, adj, opp, adj], &[adj, d, adj, opp], &[opp, adj, d, adj], &[adj, opp, adj, d]], 1e-15);
    }

    #[test]
    fn fracture_stiffness_examples() {
        let edge = Curve::segment(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let m = local_fracture_stiffness(&right_tri(), &edge, ParamInterval::new(0.0, 1.0), |_| Ok(1.0), 1).unwrap();
        assert_mat(&m, &[&[1.0, -1.0, 0.0], &[-1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]], 1e-15);

        let inner = Curve::segment(Point2::new(0.0, 0.25), Point2::new(0.75, 0.25));
        let m = local_fracture_stiffness(&right_tri(), &inner, ParamInterval::new(0.0, 1.0), |_| Ok(1.0), 1).unwrap();
        assert_mat(&m, &[&[0.75, -0.75, 0.0], &[-0.75, 0.75, 0.0], &[0.0, 0.0, 0.0]], 1e-15);

        let z = local_fracture_stiffness(&right_tri(), &inner, ParamInterval::new(0.5, 0.5), |_| Ok(1.0), 1).unwrap();
        assert_eq!(z.max_abs(), 0.0);

        let err = local_fracture_stiffness(&right_tri(), &inner, ParamInterval::new(0.0, 1.0), |_| Ok(0.0), 1);
        assert!(matches!(err, Err(Error::InvalidData(_))));
    }

    #[test]
    fn load_examples() {
        let b = local_load(&right_tri(), |_| Ok(1.0)).unwrap();
        for v in &b[..3] {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
        assert_eq!(local_load(&right_tri(), |_| Ok(0.0)).unwrap(), [0.0; 4]);
        let h = 0.3;
        let e = neumann_load(Point2::new(0.0, 0.0), Point2::new(0.0, h), |_| Ok(-1.0)).unwrap();
        assert!((e[0] + h / 2.0).abs() < 1e-15 && (e[1] + h / 2.0).abs() < 1e-15);
        assert_eq!(neumann_load(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), |_| Ok(0.0)).unwrap(), [0.0; 2]);
        // linear flux: ∫_0^1 x (1-x) dx = 1/6, ∫ x² = 1/3
        let e = neumann_load(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), |p| Ok(p.x)).unwrap();
        assert!((e[0] - 1.0 / 6.0).abs() < 1e-15 && (e[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_and_lagrange() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for quad in [false, true] {
            for _ in 0..200 {
                let c = random_cell(&mut rng, quad);
                let v = c.vertices();
                for (j, &vj) in v.iter().enumerate() {
                    let s = shape_at(&c, vj);
                    for i in 0..s.n {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((s.values[i] - want).abs() < 1e-13);
                    }
                }
                let p = c.centroid();
                let s = shape_at(&c, p);
                assert!((s.values[..s.n].iter().sum::<f64>() - 1.0).abs() < 1e-14);
                let g = s.grads[..s.n].iter().fold(Point2::default(), |a, &b| a + b);
                assert!(g.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn local_matrices_annihilate_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for quad in [false, true] {
            for _ in 0..200 {
                let c = random_cell(&mut rng, quad);
                let k = Tensor2 { xx: 2.0, xy: 0.3, yy: 1.0 };
                let seg = Segment2::new(
                    Point2::new(rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5)),
                    Point2::new(rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5)),
                );
                let tol = crate::geom::GeomTol::for_diameter(2.0);
                let mut mats = alloc::vec![local_matrix_stiffness(&c, &k)];
                if let Some(iv) = crate::geom::clip_segment_cell(&seg, &c, &tol).unwrap() {
                    mats.push(local_fracture_stiffness(&c, &Curve::Segment(seg), iv, |_| Ok(3.0), 3).unwrap());
                }
                for m in mats {
                    for i in 0..m.n {
                        let row: f64 = m.values[i][..m.n].iter().sum();
                        assert!(row.abs() <= 1e-13 * m.max_abs().max(1e-300));
                        for j in 0..m.n {
                            assert!((m.values[i][j] - m.values[j][i]).abs() <= 1e-14 * m.max_abs());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn q1_fracture_integrand_is_exact_with_two_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let c = CellPolygon::rect(0.0, 0.0, rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
            let seg =
                Curve::segment(Point2::new(-1.0, rng.gen_range(0.0..0.5)), Point2::new(3.0, rng.gen_range(0.0..0.5)));
            let Curve::Segment(s) = &seg else { unreachable!() };
            let iv = crate::geom::clip_segment_cell(s, &c, &crate::geom::GeomTol::for_diameter(4.0)).unwrap().unwrap();
            let a = local_fracture_stiffness(&c, &seg, iv, |_| Ok(1.0), 2).unwrap();
            let b = local_fracture_stiffness(&c, &seg, iv, |_| Ok(1.0), 4).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((a.values[i][j] - b.values[i][j]).abs() <= 1e-13 * b.max_abs());
                }
            }
        }
    }

    #[test]
    fn quad_inverse_map_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let c = random_cell(&mut rng, true);
            let m = QuadMap::new(&c);
            let (xi, eta) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (p, _) = m.map(xi, eta);
            let (a, b) = m.inverse(p);
            assert!((a - xi).abs() < 1e-12 && (b - eta).abs() < 1e-12);
        }
    }

    #[test]
    fn q1_center_interpolation() {
        let c = CellPolygon::rect(0.0, 0.0, 2.0, 1.0);
        assert!((interpolate(&c, Point2::new(1.0, 0.5), &[1.0, 2.0, 3.0, 4.0]) - 2.5).abs() < 1e-15);
    }
}
