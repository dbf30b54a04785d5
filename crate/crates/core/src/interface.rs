//! Interface curves: analytic level sets and closed polygonal chains.
//!
//! Sign convention: `phi <= 0` is Omega_0 (points on the curve included),
//! `phi > 0` is Omega_1, and the normal points into Omega_1.

use crate::error::{Error, Result};
use crate::scalar::{cross, dot, lerp, lit, norm, scale, sub, Point, Real};

/// Number of sample intervals used to isolate level-set roots on an edge.
const EDGE_SAMPLES: usize = 16;

#[derive(Clone, Debug)]
pub enum Interface<T> {
    Circle { center: Point<T>, radius: T },
    /// `|x - c| = 1/2 + sin(5 theta) / 7`.
    Star { center: Point<T> },
    Polygon(Polygon<T>),
}

/// A smooth piece of the interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Side<T> {
    Curve,
    Segment([Point<T>; 2]),
}

/// Closed simple chain, counterclockwise around Omega_0.
#[derive(Clone, Debug)]
pub struct Polygon<T> {
    vertices: Vec<Point<T>>,
    tol: T,
}

impl<T: Real> Polygon<T> {
    /// Accepts either orientation; stored counterclockwise.
    pub fn new(mut vertices: Vec<Point<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput("polygon needs at least 3 vertices".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if !adjacent && segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidInput(format!("polygon sides {i} and {j} intersect")));
                }
            }
        }
        if signed_area(&vertices) < T::zero() {
            vertices.reverse();
        }
        let size = vertices
            .iter()
            .fold(T::one(), |s, p| s.max(p[0].abs()).max(p[1].abs()));
        let tol = lit::<T>(1e-12) * size;
        Ok(Polygon { vertices, tol })
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn side(&self, j: usize) -> [Point<T>; 2] {
        [self.vertices[j], self.vertices[(j + 1) % self.vertices.len()]]
    }

    /// Outward unit normal of side `j`.
    pub fn side_normal(&self, j: usize) -> Point<T> {
        let [a, b] = self.side(j);
        let t = sub(b, a);
        scale(T::one() / norm(t), [t[1], -t[0]])
    }

    pub fn area(&self) -> T {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> T {
        (0..self.len())
            .map(|j| {
                let [a, b] = self.side(j);
                norm(sub(b, a))
            })
            .fold(T::zero(), |s, l| s + l)
    }

    fn winding(&self, x: Point<T>) -> i32 {
        let mut w = 0;
        for j in 0..self.len() {
            let [a, b] = self.side(j);
            if a[1] <= x[1] {
                if b[1] > x[1] && cross(sub(b, a), sub(x, a)) > T::zero() {
                    w += 1;
                }
            } else if b[1] <= x[1] && cross(sub(b, a), sub(x, a)) < T::zero() {
                w -= 1;
            }
        }
        w
    }

    /// Index of the nearest side and the distance to it.
    pub fn nearest_side(&self, x: Point<T>) -> (usize, T) {
        (0..self.len())
            .map(|j| {
                let [a, b] = self.side(j);
                (j, segment_distance(x, a, b))
            })
            .fold((0, T::infinity()), |best, c| if c.1 < best.1 { c } else { best })
    }

    /// Signed distance; points within a relative `1e-12` of the chain count as on it.
    pub fn signed_distance(&self, x: Point<T>) -> T {
        let d = self.nearest_side(x).1;
        if d <= self.tol {
            T::zero()
        } else if self.winding(x) != 0 {
            -d
        } else {
            d
        }
    }
}

fn signed_area<T: Real>(v: &[Point<T>]) -> T {
    let n = v.len();
    (0..n).fold(T::zero(), |s, i| s + cross(v[i], v[(i + 1) % n])) * lit(0.5)
}

/// Distance from `x` to the segment `[a, b]`.
pub fn segment_distance<T: Real>(x: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let t = sub(b, a);
    let s = (dot(sub(x, a), t) / dot(t, t)).max(T::zero()).min(T::one());
    norm(sub(x, lerp(a, b, s)))
}

fn segments_intersect<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let o1 = crate::scalar::orient(a, b, c);
    let o2 = crate::scalar::orient(a, b, d);
    let o3 = crate::scalar::orient(c, d, a);
    let o4 = crate::scalar::orient(c, d, b);
    if o1 * o2 < T::zero() && o3 * o4 < T::zero() {
        return true;
    }
    let z = T::zero();
    (o1 == z && segment_distance(c, a, b) == z)
        || (o2 == z && segment_distance(d, a, b) == z)
        || (o3 == z && segment_distance(a, c, d) == z)
        || (o4 == z && segment_distance(b, c, d) == z)
}

impl<T: Real> Interface<T> {
    pub fn circle(center: Point<T>, radius: T) -> Self {
        Interface::Circle { center, radius }
    }

    pub fn star() -> Self {
        Interface::Star {
            center: [T::zero(), T::zero()],
        }
    }

    /// The L-shaped chain with its reentrant corner at the origin.
    pub fn lshape() -> Self {
        let v = [
            (0.0, 0.0),
            (-0.35, 0.35),
            (0.0, 0.7),
            (0.7, 0.0),
            (0.0, -0.7),
            (-0.35, -0.35),
        ];
        let poly = Polygon::new(v.iter().map(|&(x, y)| [lit(x), lit(y)]).collect()).unwrap();
        Interface::Polygon(poly)
    }

    /// Built-in catalog: `circle`, `star5`, `lshape`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "circle" => Ok(Self::circle([T::zero(), T::zero()], lit(0.7))),
            "star5" => Ok(Self::star()),
            "lshape" => Ok(Self::lshape()),
            _ => Err(Error::InvalidInput(format!("unknown interface '{name}'"))),
        }
    }

    /// The same curve moved by `d`.
    pub fn translated(&self, d: Point<T>) -> Self {
        let mv = |c: Point<T>| [c[0] + d[0], c[1] + d[1]];
        match self {
            Interface::Circle { center, radius } => Interface::Circle {
                center: mv(*center),
                radius: *radius,
            },
            Interface::Star { center } => Interface::Star { center: mv(*center) },
            Interface::Polygon(p) => {
                Interface::Polygon(Polygon::new(p.vertices.iter().map(|&v| mv(v)).collect()).expect("translation keeps a valid chain"))
            }
        }
    }

    pub fn is_polygon(&self) -> bool {
        matches!(self, Interface::Polygon(_))
    }

    pub fn polygon(&self) -> Option<&Polygon<T>> {
        match self {
            Interface::Polygon(p) => Some(p),
            _ => None,
        }
    }

    pub fn phi(&self, x: Point<T>) -> T {
        match self {
            Interface::Circle { center, radius } => norm(sub(x, *center)) - *radius,
            Interface::Star { center } => {
                let d = sub(x, *center);
                let theta = d[1].atan2(d[0]);
                norm(d) - (lit::<T>(0.5) + (lit::<T>(5.0) * theta).sin() / lit(7.0))
            }
            Interface::Polygon(p) => p.signed_distance(x),
        }
    }

    /// Level-set value and membership in Omega_0.
    pub fn levelset_eval(&self, x: Point<T>) -> (T, bool) {
        let v = self.phi(x);
        (v, v <= T::zero())
    }

    pub fn in_omega0(&self, x: Point<T>) -> bool {
        self.phi(x) <= T::zero()
    }

    /// Analytic gradient of a level set; `None` for polygons.
    pub fn gradient(&self, x: Point<T>) -> Option<Point<T>> {
        match self {
            Interface::Circle { center, .. } => {
                let d = sub(x, *center);
                Some(scale(T::one() / norm(d), d))
            }
            Interface::Star { center } => {
                let d = sub(x, *center);
                let r = norm(d);
                let theta = d[1].atan2(d[0]);
                let drho = lit::<T>(5.0 / 7.0) * (lit::<T>(5.0) * theta).cos();
                let r2 = r * r;
                Some([d[0] / r + drho * d[1] / r2, d[1] / r - drho * d[0] / r2])
            }
            Interface::Polygon(_) => None,
        }
    }

    /// Unit normal pointing into Omega_1 at a point on (or near) the interface.
    pub fn interface_normal(&self, x: Point<T>) -> Result<Point<T>> {
        match self {
            Interface::Polygon(p) => {
                let tol: T = lit(1e-12);
                for (i, &c) in p.vertices.iter().enumerate() {
                    if norm(sub(x, c)) <= tol {
                        return Err(Error::InvalidInput(format!(
                            "normal requested at polygon corner {i} ({}, {})",
                            c[0], c[1]
                        )));
                    }
                }
                Ok(p.side_normal(p.nearest_side(x).0))
            }
            _ => {
                let g = self.gradient(x).unwrap();
                let l = norm(g);
                if !(l > T::zero()) {
                    return Err(Error::InvalidInput("vanishing level-set gradient".into()));
                }
                Ok(scale(T::one() / l, g))
            }
        }
    }

    /// Smooth pieces of the interface in chain order.
    pub fn polygon_sides(&self) -> Vec<Side<T>> {
        match self {
            Interface::Polygon(p) => (0..p.len()).map(|j| Side::Segment(p.side(j))).collect(),
            _ => vec![Side::Curve],
        }
    }

    /// Membership changes along the segment `[a, b]`, as increasing parameters in `[0, 1]`.
    ///
    /// A crossing at an endpoint that lies on the curve is reported at that endpoint.
    pub fn edge_roots(&self, a: Point<T>, b: Point<T>) -> Vec<T> {
        let inside = |t: T| self.in_omega0(lerp(a, b, t));
        let mut roots = Vec::new();
        match self {
            Interface::Polygon(p) => {
                let mut ts = vec![T::zero(), T::one()];
                for j in 0..p.len() {
                    let [c, d] = p.side(j);
                    ts.extend(segment_crossings(a, b, c, d));
                }
                ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                ts.dedup();
                let mut samples = vec![(T::zero(), inside(T::zero()))];
                for w in ts.windows(2) {
                    if w[1] > w[0] {
                        let mid = (w[0] + w[1]) * lit(0.5);
                        samples.push((w[0], inside(mid)));
                    }
                }
                samples.push((T::one(), inside(T::one())));
                let mut prev = samples[0].1;
                for &(t, m) in samples.iter().skip(1) {
                    if m != prev {
                        roots.push(t);
                        prev = m;
                    }
                }
            }
            _ => {
                let n = EDGE_SAMPLES;
                let mut t0 = T::zero();
                let mut m0 = inside(t0);
                for s in 1..=n {
                    let t1: T = lit(s as f64 / n as f64);
                    let m1 = inside(t1);
                    if m1 != m0 {
                        let (mut lo, mut hi) = (t0, t1);
                        for _ in 0..64 {
                            let mid = (lo + hi) * lit(0.5);
                            if mid <= lo || mid >= hi {
                                break;
                            }
                            if inside(mid) == m0 {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        roots.push(if m0 { lo } else { hi });
                    }
                    t0 = t1;
                    m0 = m1;
                }
            }
        }
        roots
    }
}

/// Parameters along `[a, b]` where it meets `[c, d]` (the overlap ends for collinear pieces).
pub fn segment_crossings<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> Vec<T> {
    let r = sub(b, a);
    let s = sub(d, c);
    let den = cross(r, s);
    let eps: T = lit::<T>(1e-13) * (norm(r) * norm(s)).max(T::min_positive_value());
    let qa = sub(c, a);
    if den.abs() > eps {
        let t = cross(qa, s) / den;
        let u = cross(qa, r) / den;
        let (lo, hi) = (-T::epsilon() * lit(8.0), T::one() + T::epsilon() * lit(8.0));
        if t >= lo && t <= hi && u >= lo && u <= hi {
            return vec![t.max(T::zero()).min(T::one())];
        }
        return vec![];
    }
    if cross(qa, r).abs() > eps * norm(r).max(T::one()) {
        return vec![];
    }
    let rr = dot(r, r);
    let t0 = dot(qa, r) / rr;
    let t1 = dot(sub(d, a), r) / rr;
    let (lo, hi) = (t0.min(t1).max(T::zero()), t0.max(t1).min(T::one()));
    if lo <= hi {
        vec![lo, hi]
    } else {
        vec![]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn lshape_poly() -> Polygon<f64> {
        Interface::<f64>::lshape().polygon().unwrap().clone()
    }

    #[test]
    fn circle_center_and_rim() {
        let c = Interface::<f64>::circle([0.0, 0.0], 0.7);
        assert_eq!(c.levelset_eval([0.0, 0.0]), (-0.7, true));
        let (v, inside) = c.levelset_eval([0.7, 0.0]);
        assert!(v.abs() < 1e-15 && inside);
        let n = c.interface_normal([0.7, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15 && n[1].abs() < 1e-15);
    }

    #[test]
    fn circle_membership_random() {
        let c = Interface::circle([0.0, 0.0], 0.7);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            assert_eq!(norm(x) < 0.7, c.in_omega0(x));
        }
    }

    fn fd_grad(i: &Interface<f64>, x: Point<f64>) -> Point<f64> {
        let e = 1e-6;
        [
            (i.phi([x[0] + e, x[1]]) - i.phi([x[0] - e, x[1]])) / (2.0 * e),
            (i.phi([x[0], x[1] + e]) - i.phi([x[0], x[1] - e])) / (2.0 * e),
        ]
    }

    #[test]
    fn star_normal_matches_finite_differences() {
        let s = Interface::<f64>::star();
        for k in 0..100 {
            let th = -3.1 + 6.2 * k as f64 / 99.0;
            let r = 0.5 + (5.0 * th).sin() / 7.0;
            let x = [r * th.cos(), r * th.sin()];
            let g = fd_grad(&s, x);
            let ng = norm(g);
            let n = s.interface_normal(x).unwrap();
            assert!((n[0] - g[0] / ng).abs() < 1e-6 && (n[1] - g[1] / ng).abs() < 1e-6);
            assert!((norm(n) - 1.0).abs() < 1e-14);
        }
        let n0 = s.interface_normal([0.5, 0.0]).unwrap();
        let g = fd_grad(&s, [0.5, 0.0]);
        assert!((n0[0] - g[0] / norm(g)).abs() < 1e-6);
    }

    #[test]
    fn circle_normal_matches_finite_differences() {
        let c = Interface::circle([0.1, -0.05], 0.7);
        for k in 0..100 {
            let th = 0.063 * k as f64;
            let x = [0.1 + 0.7 * th.cos(), -0.05 + 0.7 * th.sin()];
            let g = fd_grad(&c, x);
            let n = c.interface_normal(x).unwrap();
            assert!((n[0] - g[0] / norm(g)).abs() < 1e-6 && (n[1] - g[1] / norm(g)).abs() < 1e-6);
        }
    }

    #[test]
    fn lshape_sides_and_normals() {
        let l = Interface::<f64>::lshape();
        assert_eq!(l.polygon_sides().len(), 6);
        let p = lshape_poly();
        let j = (0..6)
            .find(|&j| {
                let [a, b] = p.side(j);
                a == [0.0, 0.7] && b == [0.7, 0.0] || a == [0.7, 0.0] && b == [0.0, 0.7]
            })
            .unwrap();
        let n = p.side_normal(j);
        let s = 0.5f64.sqrt();
        assert!((n[0] - s).abs() < 1e-15 && (n[1] - s).abs() < 1e-15);
        let n2 = l.interface_normal([0.35, 0.35]).unwrap();
        assert!((n2[0] - s).abs() < 1e-15);
        assert!(l.interface_normal([0.7, 0.0]).is_err());
    }

    #[test]
    fn lshape_perimeter_matches_vertex_list() {
        let v = [(0.0, 0.0), (-0.35, 0.35), (0.0, 0.7), (0.7, 0.0), (0.0, -0.7), (-0.35, -0.35)];
        let mut total = 0.0;
        for i in 0..6 {
            let (a, b) = (v[i], v[(i + 1) % 6]);
            total += ((b.0 - a.0) * (b.0 - a.0) + (b.1 - a.1) * (b.1 - a.1) as f64).sqrt();
        }
        assert!((lshape_poly().perimeter() - total).abs() < 1e-14);
        assert!(lshape_poly().area() > 0.0);
    }

    #[test]
    fn unit_square_sides() {
        let sq = Interface::<f64>::Polygon(
            Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap(),
        );
        let sides = sq.polygon_sides();
        assert_eq!(sides.len(), 4);
        for s in sides {
            match s {
                Side::Segment([a, b]) => assert!((norm(sub(b, a)) - 1.0).abs() < 1e-15),
                Side::Curve => panic!(),
            }
        }
        assert_eq!(Interface::<f64>::star().polygon_sides(), vec![Side::Curve]);
    }

    #[test]
    fn lshape_signed_distance_matches_sampling() {
        let l = Interface::<f64>::lshape();
        let p = lshape_poly();
        let brute = |x: Point<f64>| {
            let mut d = f64::INFINITY;
            for j in 0..6 {
                let [a, b] = p.side(j);
                for k in 0..=20_000 {
                    let q = lerp(a, b, k as f64 / 20_000.0);
                    d = d.min(norm(sub(x, q)));
                }
            }
            d
        };
        let (v, inside) = l.levelset_eval([0.3, 0.0]);
        assert!(inside);
        assert!((v.abs() - brute([0.3, 0.0])).abs() < 1e-4);
        for x in [[-0.2, 0.0], [0.9, 0.9], [0.1, 0.5], [-0.3, -0.1]] {
            assert!((l.phi(x).abs() - brute(x)).abs() < 1e-4);
        }
        assert!(!l.in_omega0([-0.2, 0.0]));
    }

    #[test]
    fn domain_corners_are_outside() {
        for i in [Interface::by_name("circle").unwrap(), Interface::star(), Interface::lshape()] {
            for c in [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]] {
                assert!(!i.in_omega0(c));
            }
        }
        assert!(Interface::<f64>::by_name("ellipse").is_err());
    }

    #[test]
    fn edge_roots_circle() {
        let c = Interface::<f64>::circle([0.0, 0.0], 0.7);
        let r = c.edge_roots([0.0, 0.0], [1.0, 0.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.7).abs() < 1e-14);
        assert!(c.edge_roots([-1.0, 0.0], [1.0, 0.0]).len() == 2);
        assert!(c.edge_roots([0.8, 0.0], [0.9, 0.0]).is_empty());
    }

    #[test]
    fn edge_roots_polygon() {
        let l = Interface::<f64>::lshape();
        let r = l.edge_roots([0.0, 0.35], [1.0, 0.35]);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.35).abs() < 1e-14);
        // an edge lying on a side carries no membership change
        assert!(l.edge_roots([0.0, 0.7], [0.7, 0.0]).is_empty());
        // touching a corner from outside is not a crossing
        assert!(l.edge_roots([0.7, -0.5], [0.7, 0.5]).is_empty());
    }

    #[test]
    fn polygon_orientation_normalized() {
        let p = Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(p.area() > 0.0);
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
    }
}
