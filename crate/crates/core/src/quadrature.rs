//! Quadrature rules on triangles and edges.

use crate::mesh::Point;

/// Barycentric points and weights (summing to 1) of the symmetric 6-point
/// rule, exact for polynomials of degree <= 4.
const TRI6: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_964_9;
    const B1: f64 = 0.108_103_018_168_070_2;
    const W1: f64 = 0.223_381_589_678_011_47;
    const A2: f64 = 0.091_576_213_509_770_74;
    const B2: f64 = 0.816_847_572_980_458_5;
    const W2: f64 = 0.109_951_743_655_321_87;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// Quadrature nodes on triangle `p` as `(point, barycentric, weight)`; the
/// weights sum to the triangle area.
pub fn triangle_rule(p: [Point; 3], area: f64) -> impl Iterator<Item = (Point, [f64; 3], f64)> {
    TRI6.iter().map(move |&(l, w)| {
        let x = l[0] * p[0] + l[1] * p[1] + l[2] * p[2];
        (x, l, w * area)
    })
}

/// 2-point Gauss nodes on the segment `[a, b]` with weights summing to 1.
pub fn edge_rule(a: Point, b: Point) -> [(Point, f64); 2] {
    let offset = 0.5 / 3f64.sqrt();
    let mid = a.midpoint(b);
    let half = b - a;
    [(mid + (-offset) * half, 0.5), (mid + offset * half, 0.5)]
}

/// Mean of `f` over the segment `[a, b]`.
pub fn edge_average(a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
    edge_rule(a, b).iter().map(|&(x, w)| w * f(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rule_is_exact_to_degree_four() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        // int x^a y^b over the reference triangle = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let approx: f64 = triangle_rule(p, 0.5)
                    .map(|(x, _, w)| w * x.x.powi(a as i32) * x.y.powi(b as i32))
                    .sum();
                assert!((approx - exact).abs() < 1e-15, "x^{a} y^{b}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn edge_rule_is_exact_to_degree_three() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(2.0, 0.0);
        let mean = edge_average(a, b, |x| x.x.powi(3));
        assert!((mean - 2.0).abs() < 1e-14);
    }
}
