//! Gauss rules on segments and triangles.

use crate::scalar::{lerp, lit, norm, orient, sub, Point, Real};

/// Points and weights; interface rules also carry normals and side indices.
#[derive(Clone, Debug, Default)]
pub struct QuadratureRule<T> {
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub normals: Vec<Point<T>>,
    pub sides: Vec<usize>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn new() -> Self {
        QuadratureRule {
            points: Vec::new(),
            weights: Vec::new(),
            normals: Vec::new(),
            sides: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().fold(T::zero(), |s, &w| s + w)
    }

    /// Reference rule mapped onto the triangle `(a, b, c)`; skips degenerate triangles.
    pub fn add_triangle(&mut self, a: Point<T>, b: Point<T>, c: Point<T>, degree: usize) {
        let area = orient(a, b, c).abs() * lit(0.5);
        if !(area > T::zero()) {
            return;
        }
        for (xi, w) in triangle_rule::<T>(degree) {
            let x = [
                a[0] + xi[0] * (b[0] - a[0]) + xi[1] * (c[0] - a[0]),
                a[1] + xi[0] * (b[1] - a[1]) + xi[1] * (c[1] - a[1]),
            ];
            self.points.push(x);
            self.weights.push(w * area);
        }
    }

    /// Gauss rule on the segment `[a, b]`, without normals.
    pub fn add_segment(&mut self, a: Point<T>, b: Point<T>, degree: usize) {
        let len = norm(sub(b, a));
        if !(len > T::zero()) {
            return;
        }
        let (x, w) = gauss_legendre::<T>(degree / 2 + 1);
        for (t, wt) in x.into_iter().zip(w) {
            self.points.push(lerp(a, b, t));
            self.weights.push(wt * len);
        }
    }

    pub fn triangle(a: Point<T>, b: Point<T>, c: Point<T>, degree: usize) -> Self {
        let mut r = Self::new();
        r.add_triangle(a, b, c, degree);
        r
    }

    pub fn extend(&mut self, other: QuadratureRule<T>) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
        self.normals.extend(other.normals);
        self.sides.extend(other.sides);
    }
}

/// Gauss-Legendre rule with `n` points on `[0, 1]`; weights sum to 1.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = lit(0.5 * (1.0 - z));
        x[n - 1 - i] = lit(0.5 * (1.0 + z));
        w[i] = lit(0.5 * wi);
        w[n - 1 - i] = lit(0.5 * wi);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Rule on the reference triangle `(0,0), (1,0), (0,1)`, exact for total degree `degree`.
///
/// Points are `(xi, eta)`; weights sum to 1 (fractions of the area).
pub fn triangle_rule<T: Real>(degree: usize) -> Vec<(Point<T>, T)> {
    let third = 1.0 / 3.0;
    let sym3 = |a: f64, w: f64| {
        let b = 1.0 - 2.0 * a;
        vec![([a, a], w), ([b, a], w), ([a, b], w)]
    };
    let rule: Vec<([f64; 2], f64)> = match degree {
        0 | 1 => vec![([third, third], 1.0)],
        2 => sym3(1.0 / 6.0, third),
        3 | 4 => {
            let mut r = sym3(0.445948490915965, 0.223381589678011);
            r.extend(sym3(0.091576213509771, 0.109951743655322));
            r
        }
        5 => {
            let mut r = vec![([third, third], 0.225)];
            r.extend(sym3(0.470142064105115, 0.132394152788506));
            r.extend(sym3(0.101286507323456, 0.125939180544827));
            r
        }
        _ => {
            let n = (degree + 3) / 2;
            let (x, w) = gauss_legendre::<f64>(n);
            let mut r = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let u = x[i];
                    r.push(([u, (1.0 - u) * x[j]], 2.0 * w[i] * w[j] * (1.0 - u)));
                }
            }
            r
        }
    };
    let total: f64 = rule.iter().map(|r| r.1).sum();
    rule.into_iter()
        .map(|(p, w)| ([lit(p[0]), lit(p[1])], lit(w / total)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Integral of x^i y^j over the reference triangle.
    fn monomial_exact(i: usize, j: usize) -> f64 {
        factorial(i) * factorial(j) / factorial(i + j + 2)
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        for d in 0..=12 {
            let r = triangle_rule::<f64>(d);
            for i in 0..=d {
                for j in 0..=d - i {
                    let q: f64 = r.iter().map(|(p, w)| 0.5 * w * p[0].powi(i as i32) * p[1].powi(j as i32)).sum();
                    let e = monomial_exact(i, j);
                    assert!((q - e).abs() < 1e-13, "degree {d}, monomial ({i},{j}): {q} vs {e}");
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..12 {
            let (x, w) = gauss_legendre::<f64>(n);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn mapped_triangle_area() {
        let r = QuadratureRule::<f64>::triangle([0.0, 0.0], [2.0, 0.0], [0.0, 3.0], 4);
        assert!((r.total_weight() - 3.0).abs() < 1e-14);
        let r32 = QuadratureRule::<f32>::triangle([0.0, 0.0], [2.0, 0.0], [0.0, 3.0], 2);
        assert!((r32.total_weight() - 3.0).abs() < 1e-6);
        let degenerate = QuadratureRule::triangle([0.0, 0.0], [1.0, 1.0], [2.0, 2.0], 4);
        assert!(degenerate.is_empty());
    }

    #[test]
    fn segment_rule() {
        let mut r = QuadratureRule::<f64>::new();
        r.add_segment([0.0, 0.0], [3.0, 4.0], 5);
        assert!((r.total_weight() - 5.0).abs() < 1e-14);
        let q: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(5)).sum();
        assert!((q - 5.0 * 3f64.powi(5) / 6.0).abs() < 1e-10);
    }
}
