//! Quadrature rules on `[-1, 1]`, the reference triangle and the reference square.

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct LineRule {
    pub points: &'static [f64],
    pub weights: &'static [f64],
}

const GL1_X: [f64; 1] = [0.0];
const GL1_W: [f64; 1] = [2.0];
const GL2_X: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
const GL2_W: [f64; 2] = [1.0, 1.0];
const GL3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
const GL4_X: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_W: [f64; 4] =
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
const GL5_X: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `n`-point Gauss–Legendre rule, `1 ≤ n ≤ 5`. Exact for degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> Result<LineRule> {
    let (points, weights): (&'static [f64], &'static [f64]) = match n {
        1 => (&GL1_X, &GL1_W),
        2 => (&GL2_X, &GL2_W),
        3 => (&GL3_X, &GL3_W),
        4 => (&GL4_X, &GL4_W),
        5 => (&GL5_X, &GL5_W),
        _ => return Err(Error::InvalidArgument(alloc::format!("Gauss rule with {n} points is not available"))),
    };
    Ok(LineRule { points, weights })
}

impl LineRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.points.iter().zip(self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }
}

/// Rule on the reference triangle in barycentric coordinates; weights sum to one
/// and are scaled by the physical area.
#[derive(Clone, Copy, Debug)]
pub struct TriRule {
    pub bary: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

const T3_B: [[f64; 3]; 3] =
    [[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]];
const T3_W: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

const D_A1: f64 = 0.059_715_871_789_769_82;
const D_B1: f64 = 0.470_142_064_105_115_1;
const D_A2: f64 = 0.797_426_985_353_087_3;
const D_B2: f64 = 0.101_286_507_323_456_34;
const D_W1: f64 = 0.132_394_152_788_506_18;
const D_W2: f64 = 0.125_939_180_544_827_15;
const T7_B: [[f64; 3]; 7] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [D_A1, D_B1, D_B1],
    [D_B1, D_A1, D_B1],
    [D_B1, D_B1, D_A1],
    [D_A2, D_B2, D_B2],
    [D_B2, D_A2, D_B2],
    [D_B2, D_B2, D_A2],
];
const T7_W: [f64; 7] = [0.225, D_W1, D_W1, D_W1, D_W2, D_W2, D_W2];

/// Interior-midpoint 3-point rule, exact for degree 2.
pub const TRI3: TriRule = TriRule { bary: &T3_B, weights: &T3_W };
/// 7-point rule, exact for degree 5.
pub const TRI7: TriRule = TriRule { bary: &T7_B, weights: &T7_W };

/// Tensor Gauss rule on `[-1, 1]²` (weights sum to 4).
#[derive(Clone, Copy, Debug)]
pub struct QuadRule {
    pub line: LineRule,
}

impl QuadRule {
    pub fn gauss(n: usize) -> Result<Self> {
        Ok(Self { line: gauss_legendre(n)? })
    }

    /// `((ξ, η), w)` over all tensor points.
    pub fn points(&self) -> impl Iterator<Item = ((f64, f64), f64)> + '_ {
        let l = self.line;
        (0..l.len())
            .flat_map(move |j| (0..l.len()).map(move |i| ((l.points[i], l.points[j]), l.weights[i] * l.weights[j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom_monomial_tri(p: i32, q: i32) -> f64 {
        // ∫ over reference triangle (0,0),(1,0),(0,1) of x^p y^q = p! q! / (p+q+2)!
        let f = |n: i32| (1..=n).map(|k| k as f64).product::<f64>();
        f(p) * f(q) / f(p + q + 2)
    }

    #[test]
    fn line_rules_integrate_their_degree() {
        for n in 1..=5 {
            let r = gauss_legendre(n).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-15);
            for d in 0..2 * n as i32 {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let q: f64 = r.points.iter().zip(r.weights).map(|(x, w)| w * x.powi(d)).sum();
                assert!((q - exact).abs() < 1e-14, "n={n} d={d}: {q} vs {exact}");
            }
            let d = 2 * n as i32;
            let q: f64 = r.points.iter().zip(r.weights).map(|(x, w)| w * x.powi(d)).sum();
            assert!((q - 2.0 / (d as f64 + 1.0)).abs() > 1e-6, "n={n} should not be exact at degree {d}");
        }
        assert!(gauss_legendre(0).is_err() && gauss_legendre(6).is_err());
    }

    #[test]
    fn mapped_rule_integrates_on_interval() {
        let r = gauss_legendre(3).unwrap();
        let s: f64 = r.mapped(1.0, 3.0).map(|(x, w)| w * x * x).sum();
        assert!((s - 26.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_rules_integrate_their_degree() {
        for (rule, deg) in [(TRI3, 2), (TRI7, 5)] {
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for p in 0..=deg {
                for q in 0..=deg - p {
                    let s: f64 =
                        rule.bary.iter().zip(rule.weights).map(|(b, w)| 0.5 * w * b[1].powi(p) * b[2].powi(q)).sum();
                    let exact = binom_monomial_tri(p, q);
                    assert!((s - exact).abs() < 1e-15, "deg {deg} x^{p} y^{q}: {s} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn square_rules_integrate_their_degree() {
        for (n, deg) in [(2, 3), (4, 7)] {
            let r = QuadRule::gauss(n).unwrap();
            assert!((r.points().map(|(_, w)| w).sum::<f64>() - 4.0).abs() < 1e-14);
            for p in 0..=deg {
                for q in 0..=deg {
                    let s: f64 = r.points().map(|((x, y), w)| w * x.powi(p) * y.powi(q)).sum();
                    let one = |d: i32| if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                    assert!((s - one(p) * one(q)).abs() < 1e-14);
                }
            }
        }
    }
}
