//! Fixed quadrature rules shared by every scheme.
//!
//! Cells are integrated by fanning them into the cones `(x_K, v_i, v_{i+1})`
//! (valid for cells star-shaped with respect to `x_K`) and applying the
//! 7-point degree-5 Radon rule on each sub-triangle. Edges use 3-point Gauss.

use crate::geometry::{orient2d, Point};

const SQRT15: f64 = 3.872_983_346_207_417;

/// Barycentric nodes and weights (summing to 1) of the degree-5 triangle rule.
fn triangle_nodes() -> [([f64; 3], f64); 7] {
    let a1 = (6.0 - SQRT15) / 21.0;
    let b1 = (9.0 + 2.0 * SQRT15) / 21.0;
    let w1 = (155.0 - SQRT15) / 1200.0;
    let a2 = (6.0 + SQRT15) / 21.0;
    let b2 = (9.0 - 2.0 * SQRT15) / 21.0;
    let w2 = (155.0 + SQRT15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Visits the nodes of the degree-5 rule on triangle `(a, b, c)` with weights
/// scaled by the triangle area.
pub fn triangle<F: FnMut(Point, f64)>(a: Point, b: Point, c: Point, mut visit: F) {
    let area = 0.5 * orient2d(a, b, c).abs();
    for (l, w) in triangle_nodes() {
        let p = Point::new(
            l[0] * a.x + l[1] * b.x + l[2] * c.x,
            l[0] * a.y + l[1] * b.y + l[2] * c.y,
        );
        visit(p, w * area);
    }
}

/// Visits the nodes of the 3-point Gauss rule on segment `[a, b]`, weights
/// scaled by the segment length.
pub fn segment<F: FnMut(Point, f64)>(a: Point, b: Point, mut visit: F) {
    let len = a.dist(b);
    let s = 0.5 * libm::sqrt(0.6);
    for (t, w) in [(0.5 - s, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + s, 5.0 / 18.0)] {
        visit(a + (b - a) * t, w * len);
    }
}

/// Visits the quadrature nodes of a polygon fanned from `apex`.
///
/// `vertices` are in boundary order; the cone on edge `(v_i, v_{i+1})` is
/// passed to `visit` as its local edge index.
pub fn fan<F: FnMut(usize, Point, f64)>(apex: Point, vertices: &[Point], mut visit: F) {
    let m = vertices.len();
    for i in 0..m {
        let a = vertices[i];
        let b = vertices[(i + 1) % m];
        triangle(apex, a, b, |p, w| visit(i, p, w));
    }
}

/// Integral of a scalar function over a fanned polygon.
pub fn integrate_fan<F: Fn(Point) -> f64>(apex: Point, vertices: &[Point], f: F) -> f64 {
    let mut acc = 0.0;
    fan(apex, vertices, |_, p, w| acc += w * f(p));
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial(p: Point, i: i32, j: i32) -> f64 {
        libm::pow(p.x, i as f64) * libm::pow(p.y, j as f64)
    }

    #[test]
    fn triangle_rule_is_exact_to_degree_five() {
        // reference triangle (0,0),(1,0),(0,1): ∫ x^i y^j = i! j! / (i+j+2)!
        let fact = |n: i32| (1..=n).fold(1.0, |a, k| a * k as f64);
        for i in 0..=5 {
            for j in 0..=(5 - i) {
                let mut q = 0.0;
                triangle(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), |p, w| {
                    q += w * monomial(p, i, j)
                });
                let exact = fact(i) * fact(j) / fact(i + j + 2);
                assert!((q - exact).abs() < 1e-15, "x^{i} y^{j}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn segment_rule_is_exact_to_degree_five() {
        for k in 0..=5 {
            let mut q = 0.0;
            segment(Point::new(0.0, 0.0), Point::new(2.0, 0.0), |p, w| q += w * libm::pow(p.x, k as f64));
            let exact = libm::pow(2.0, (k + 1) as f64) / (k + 1) as f64;
            assert!((q - exact).abs() < 1e-13, "degree {k}");
        }
    }

    #[test]
    fn fan_integrates_square() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let apex = Point::new(0.3, 0.6);
        let area = integrate_fan(apex, &sq, |_| 1.0);
        assert!((area - 1.0).abs() < 1e-15);
        let mx = integrate_fan(apex, &sq, |p| p.x * p.x * p.y);
        assert!((mx - 1.0 / 6.0).abs() < 1e-15);
    }
}
