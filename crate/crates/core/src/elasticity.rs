//! Lamé materials, the compliance operator, and manufactured interface solutions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::interface::Interface;
use crate::scalar::{lit, Point, Real};

/// 2x2 tensor, `t[i][j]`.
pub type Tensor<T> = [[T; 2]; 2];

/// Piecewise constant Lamé parameters, index 0 inside the interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material<T> {
    pub lambda: [T; 2],
    pub mu: [T; 2],
}

impl<T: Real> Material<T> {
    pub fn new(lambda0: T, lambda1: T, mu0: T, mu1: T) -> Result<Self> {
        let all = [lambda0, lambda1, mu0, mu1];
        if all.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Lamé parameters must be positive, got λ = ({lambda0}, {lambda1}), μ = ({mu0}, {mu1})"
            )));
        }
        Ok(Material {
            lambda: [lambda0, lambda1],
            mu: [mu0, mu1],
        })
    }

    pub fn uniform(lambda: T, mu: T) -> Result<Self> {
        Self::new(lambda, lambda, mu, mu)
    }
}

pub fn trace<T: Real>(t: &Tensor<T>) -> T {
    t[0][0] + t[1][1]
}

/// `A tau = (tau - lambda / (2 lambda + 2 mu) tr(tau) I) / (2 mu)`.
pub fn compliance_apply<T: Real>(material: &Material<T>, side: usize, tau: &Tensor<T>) -> Tensor<T> {
    let (l, m) = (material.lambda[side], material.mu[side]);
    let two: T = lit(2.0);
    let c = l / (two * l + two * m) * trace(tau);
    let s = T::one() / (two * m);
    [
        [(tau[0][0] - c) * s, tau[0][1] * s],
        [tau[1][0] * s, (tau[1][1] - c) * s],
    ]
}

/// Symmetric part of a displacement gradient.
pub fn strain<T: Real>(gradu: &Tensor<T>) -> Tensor<T> {
    let half: T = lit(0.5);
    let off = (gradu[0][1] + gradu[1][0]) * half;
    [[gradu[0][0], off], [off, gradu[1][1]]]
}

/// `sigma = 2 mu eps + lambda tr(eps) I`.
pub fn stress<T: Real>(material: &Material<T>, side: usize, eps: &Tensor<T>) -> Tensor<T> {
    let (l, m) = (material.lambda[side], material.mu[side]);
    let two: T = lit(2.0);
    let tr = l * trace(eps);
    [
        [two * m * eps[0][0] + tr, two * m * eps[0][1]],
        [two * m * eps[1][0], two * m * eps[1][1] + tr],
    ]
}

/// Value, gradient and Hessians of a vector field at a point.
#[derive(Clone, Copy, Debug, Default)]
pub struct Jet {
    pub u: [f64; 2],
    /// `grad[i][j] = d u_i / d x_j`.
    pub grad: Tensor<f64>,
    /// `hess[i][j][k] = d^2 u_i / d x_j d x_k`.
    pub hess: [Tensor<f64>; 2],
}

#[derive(Clone, Copy, Debug)]
enum Field {
    Circle { s: f64 },
    StarInner,
    StarOuter,
    Corner { alpha: f64, c1: f64, c2: f64, mu: f64 },
    Constant([f64; 2]),
    Linear(Tensor<f64>),
}

impl Field {
    fn jet(&self, x: Point<f64>) -> Jet {
        let [x, y] = x;
        match *self {
            Field::Circle { s } => {
                let (s2x, c2x, s2y, c2y) = ((2.0 * PI * x).sin(), (2.0 * PI * x).cos(), (2.0 * PI * y).sin(), (2.0 * PI * y).cos());
                let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
                let p2 = PI * PI;
                let b = s * sx * sy;
                let bx = s * PI * cx * sy;
                let by = s * PI * sx * cy;
                let bxx = -s * p2 * sx * sy;
                let bxy = s * p2 * cx * cy;
                Jet {
                    u: [s2y * (c2x - 1.0) + b, s2x * (1.0 - c2y) + b],
                    grad: [
                        [-2.0 * PI * s2y * s2x + bx, 2.0 * PI * c2y * (c2x - 1.0) + by],
                        [2.0 * PI * c2x * (1.0 - c2y) + bx, 2.0 * PI * s2x * s2y + by],
                    ],
                    hess: [
                        [
                            [-4.0 * p2 * s2y * c2x + bxx, -4.0 * p2 * c2y * s2x + bxy],
                            [-4.0 * p2 * c2y * s2x + bxy, -4.0 * p2 * s2y * (c2x - 1.0) + bxx],
                        ],
                        [
                            [-4.0 * p2 * s2x * (1.0 - c2y) + bxx, 4.0 * p2 * c2x * s2y + bxy],
                            [4.0 * p2 * c2x * s2y + bxy, 4.0 * p2 * s2x * c2y + bxx],
                        ],
                    ],
                }
            }
            Field::StarInner => {
                let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
                let p2 = PI * PI;
                Jet {
                    u: [cx * cy, cy],
                    grad: [[-PI * sx * cy, -PI * cx * sy], [0.0, -PI * sy]],
                    hess: [
                        [[-p2 * cx * cy, p2 * sx * sy], [p2 * sx * sy, -p2 * cx * cy]],
                        [[0.0, 0.0], [0.0, -p2 * cy]],
                    ],
                }
            }
            Field::StarOuter => {
                let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
                let p2 = PI * PI;
                let q = x * (1.0 - x);
                Jet {
                    u: [sx * sy, q * sy],
                    grad: [[PI * cx * sy, PI * sx * cy], [(1.0 - 2.0 * x) * sy, PI * q * cy]],
                    hess: [
                        [[-p2 * sx * sy, p2 * cx * cy], [p2 * cx * cy, -p2 * sx * sy]],
                        [
                            [-2.0 * sy, PI * (1.0 - 2.0 * x) * cy],
                            [PI * (1.0 - 2.0 * x) * cy, -p2 * q * sy],
                        ],
                    ],
                }
            }
            Field::Corner { alpha, c1, c2, mu } => corner_jet([x, y], alpha, c1, c2, mu),
            Field::Constant(c) => Jet {
                u: c,
                ..Jet::default()
            },
            Field::Linear(g) => Jet {
                u: [g[0][0] * x + g[0][1] * y, g[1][0] * x + g[1][1] * y],
                grad: g,
                hess: [[[0.0; 2]; 2]; 2],
            },
        }
    }
}

/// Corner singular field in polar form on the wedge `|theta| < omega`; the Hessian is not formed
/// (the field is divergence free).
fn corner_jet(x: Point<f64>, alpha: f64, c1: f64, c2: f64, mu: f64) -> Jet {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return Jet::default();
    }
    let th = x[1].atan2(x[0]);
    let (ap, am) = (alpha + 1.0, alpha - 1.0);
    let a = -ap * (ap * th).cos() + (c2 - ap) * c1 * (am * th).cos();
    let b = ap * (ap * th).sin() + (c2 + am) * c1 * (am * th).sin();
    let da = ap * ap * (ap * th).sin() - (c2 - ap) * c1 * am * (am * th).sin();
    let db = ap * ap * (ap * th).cos() + (c2 + am) * c1 * am * (am * th).cos();
    let ra = r.powf(alpha) / (2.0 * mu);
    let (ur, ut) = (ra * a, ra * b);
    // gradient in the polar frame, then rotated
    let p = [
        [alpha * ur / r, (ra * da - ut) / r],
        [alpha * ut / r, (ra * db + ur) / r],
    ];
    let (c, s) = (th.cos(), th.sin());
    let rot = [[c, -s], [s, c]];
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    g[i][j] += rot[i][k] * p[k][l] * rot[j][l];
                }
            }
        }
    }
    Jet {
        u: [ur * c - ut * s, ur * s + ut * c],
        grad: g,
        hess: [[[0.0; 2]; 2]; 2],
    }
}

/// Root of `alpha sin(2 omega) + sin(2 omega alpha) = 0` in `(0.5, 0.6)`.
pub fn corner_exponent(omega: f64) -> f64 {
    let g = |a: f64| a * (2.0 * omega).sin() + (2.0 * omega * a).sin();
    let (mut lo, mut hi) = (0.5, 0.6);
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Names of the built-in cases.
pub const CASE_NAMES: [&str; 6] = ["ex1", "ex2", "ex3", "ex4", "ex5", "patch"];

/// Exact solution and data of an interface problem.
#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub name: String,
    pub interface: Interface<f64>,
    pub material: Material<f64>,
    fields: [Field; 2],
    divergence_free: bool,
}

impl ManufacturedCase {
    /// Default material of a named case.
    pub fn default_material(name: &str) -> Result<Material<f64>> {
        match name {
            "ex1" | "ex4" => Material::new(5.0, 1.0, 2.0, 1.0),
            "ex2" => Material::new(100.0, 1.0, 1.0, 1.0),
            "ex3" | "ex5" => Material::uniform(1.0, 1.0),
            "patch" => Material::uniform(2.0, 1.5),
            _ => Err(Error::Config(format!(
                "unknown case '{name}', expected one of {}",
                CASE_NAMES.join(", ")
            ))),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::new(name, Self::default_material(name)?)
    }

    pub fn new(name: &str, material: Material<f64>) -> Result<Self> {
        let circle = Interface::circle([0.0, 0.0], 0.7);
        let smooth = Field::Circle {
            s: 1.0 / (1.0 + material.lambda[0]),
        };
        let (interface, fields, divergence_free) = match name {
            "ex1" | "ex2" => (circle, [smooth, smooth], false),
            "ex4" => (Interface::lshape(), [smooth, smooth], false),
            "ex3" => (Interface::star(), [Field::StarInner, Field::StarOuter], false),
            "ex5" => {
                let uniform = material.lambda[0] == material.lambda[1] && material.mu[0] == material.mu[1];
                if !uniform {
                    return Err(Error::Config("ex5 needs equal materials on both sides".into()));
                }
                let omega = 0.75 * PI;
                let alpha = corner_exponent(omega);
                let (l, m) = (material.lambda[0], material.mu[0]);
                let c1 = -((alpha + 1.0) * omega).cos() / ((alpha - 1.0) * omega).cos();
                let c2 = 2.0 * (l + 2.0 * m) / (l + m);
                (
                    Interface::lshape(),
                    [Field::Corner { alpha, c1, c2, mu: m }, Field::Constant([1.0, 1.0])],
                    true,
                )
            }
            "patch" => {
                let g = [[1.0, 2.0], [3.0, -1.0]];
                (circle, [Field::Linear(g), Field::Linear(g)], false)
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown case '{name}', expected one of {}",
                    CASE_NAMES.join(", ")
                )))
            }
        };
        Ok(ManufacturedCase {
            name: name.to_string(),
            interface,
            material,
            fields,
            divergence_free,
        })
    }

    pub fn jet(&self, side: usize, x: Point<f64>) -> Jet {
        self.fields[side].jet(x)
    }

    pub fn u(&self, side: usize, x: Point<f64>) -> [f64; 2] {
        self.jet(side, x).u
    }

    pub fn grad_u(&self, side: usize, x: Point<f64>) -> Tensor<f64> {
        self.jet(side, x).grad
    }

    pub fn sigma(&self, side: usize, x: Point<f64>) -> Tensor<f64> {
        stress(&self.material, side, &strain(&self.grad_u(side, x)))
    }

    /// Row-wise divergence of the exact stress, `mu lap u + (lambda + mu) grad div u`.
    pub fn div_sigma(&self, side: usize, x: Point<f64>) -> [f64; 2] {
        if self.divergence_free {
            return [0.0; 2];
        }
        let h = self.jet(side, x).hess;
        let (l, m) = (self.material.lambda[side], self.material.mu[side]);
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let lap = h[i][0][0] + h[i][1][1];
            let grad_div = h[0][0][i] + h[1][1][i];
            *o = m * lap + (l + m) * grad_div;
        }
        out
    }

    pub fn f(&self, side: usize, x: Point<f64>) -> [f64; 2] {
        let d = self.div_sigma(side, x);
        [-d[0], -d[1]]
    }

    /// Traction jump `(sigma_0 - sigma_1) n` with `n` pointing into Omega_1.
    pub fn a(&self, x: Point<f64>, n: Point<f64>) -> [f64; 2] {
        let (s0, s1) = (self.sigma(0, x), self.sigma(1, x));
        [
            (s0[0][0] - s1[0][0]) * n[0] + (s0[0][1] - s1[0][1]) * n[1],
            (s0[1][0] - s1[1][0]) * n[0] + (s0[1][1] - s1[1][1]) * n[1],
        ]
    }

    /// Displacement jump `u_0 - u_1`.
    pub fn b(&self, x: Point<f64>) -> [f64; 2] {
        let (u0, u1) = (self.u(0, x), self.u(1, x));
        [u0[0] - u1[0], u0[1] - u1[1]]
    }

    /// Tangential gradient `grad(b) (I - n n^T)` of the displacement jump.
    pub fn grad_gamma_b(&self, x: Point<f64>, n: Point<f64>) -> Tensor<f64> {
        let (g0, g1) = (self.grad_u(0, x), self.grad_u(1, x));
        let mut g = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] = g0[i][j] - g1[i][j];
            }
        }
        tangential(&g, n)
    }

    /// Dirichlet data on the outer boundary (the exterior field).
    pub fn boundary_u(&self, x: Point<f64>) -> [f64; 2] {
        self.u(1, x)
    }
}

/// `g (I - n n^T)`.
pub fn tangential<T: Real>(g: &Tensor<T>, n: Point<T>) -> Tensor<T> {
    let mut out = [[T::zero(); 2]; 2];
    for i in 0..2 {
        let gn = g[i][0] * n[0] + g[i][1] * n[1];
        for j in 0..2 {
            out[i][j] = g[i][j] - gn * n[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn close(a: &Tensor<f64>, b: &Tensor<f64>, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    fn fd_grad(case: &ManufacturedCase, side: usize, x: Point<f64>) -> Tensor<f64> {
        let h = 1e-6;
        let mut g = [[0.0; 2]; 2];
        for j in 0..2 {
            let (mut p, mut m) = (x, x);
            p[j] += h;
            m[j] -= h;
            let (up, um) = (case.u(side, p), case.u(side, m));
            for i in 0..2 {
                g[i][j] = (up[i] - um[i]) / (2.0 * h);
            }
        }
        g
    }

    fn fd_div_sigma(case: &ManufacturedCase, side: usize, x: Point<f64>) -> [f64; 2] {
        let h = 1e-5;
        let mut d = [0.0; 2];
        for j in 0..2 {
            let (mut p, mut m) = (x, x);
            p[j] += h;
            m[j] -= h;
            let (sp, sm) = (case.sigma(side, p), case.sigma(side, m));
            for i in 0..2 {
                d[i] += (sp[i][j] - sm[i][j]) / (2.0 * h);
            }
        }
        d
    }

    #[test]
    fn compliance_examples() {
        let mat = Material::uniform(5.0, 2.0).unwrap();
        let a = compliance_apply(&mat, 0, &[[1.0, 0.0], [0.0, 1.0]]);
        assert!(close(&a, &[[1.0 / 14.0, 0.0], [0.0, 1.0 / 14.0]], 1e-15));
        let a = compliance_apply(&mat, 0, &[[0.0, 1.0], [1.0, 0.0]]);
        assert!(close(&a, &[[0.0, 0.25], [0.25, 0.0]], 1e-15));
        let single = compliance_apply(&Material::<f32>::uniform(5.0, 2.0).unwrap(), 0, &[[1.0, 0.0], [0.0, 1.0]]);
        assert!((single[0][0] - 1.0 / 14.0).abs() < 1e-7);
    }

    #[test]
    fn compliance_is_positive_definite() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let mat = Material::new(rng.gen_range(0.1..1e4), 1.0, rng.gen_range(0.1..10.0), 1.0).unwrap();
            // 4x4 representation on (t00, t01, t10, t11)
            let mut m = nalgebra::Matrix4::<f64>::zeros();
            for c in 0..4 {
                let mut t = [[0.0; 2]; 2];
                t[c / 2][c % 2] = 1.0;
                let a = compliance_apply(&mat, 0, &t);
                for r in 0..4 {
                    m[(r, c)] = a[r / 2][r % 2];
                }
            }
            let eig = m.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
        }
    }

    #[test]
    fn strain_examples() {
        assert!(close(&strain(&[[1.0, 0.0], [0.0, 1.0]]), &[[1.0, 0.0], [0.0, 1.0]], 0.0));
        assert!(close(&strain(&[[0.0, 1.0], [-1.0, 0.0]]), &[[0.0; 2]; 2], 0.0));
    }

    #[test]
    fn rejects_bad_material_and_case() {
        assert!(Material::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(Material::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(matches!(ManufacturedCase::by_name("ex9"), Err(Error::Config(_))));
        let mixed = Material::new(2.0, 1.0, 1.0, 1.0).unwrap();
        assert!(ManufacturedCase::new("ex5", mixed).is_err());
    }

    #[test]
    fn ex1_origin() {
        let c = ManufacturedCase::by_name("ex1").unwrap();
        let u = c.u(0, [0.0, 0.0]);
        assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for name in CASE_NAMES {
            let c = ManufacturedCase::by_name(name).unwrap();
            for _ in 0..20 {
                let x: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                for side in 0..2 {
                    if name == "ex5" && side == 0 && (x[1].atan2(x[0]).abs() > 2.2 || x[0].hypot(x[1]) < 0.05) {
                        continue;
                    }
                    assert!(close(&c.grad_u(side, x), &fd_grad(&c, side, x), 1e-6), "{name} side {side} at {x:?}");
                }
            }
        }
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        for name in CASE_NAMES {
            let c = ManufacturedCase::by_name(name).unwrap();
            for _ in 0..20 {
                let x: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                for side in 0..2 {
                    if name == "ex5" && side == 0 && (x[1].atan2(x[0]).abs() > 2.2 || x[0].hypot(x[1]) < 0.05) {
                        continue;
                    }
                    let (d, fd) = (c.div_sigma(side, x), fd_div_sigma(&c, side, x));
                    let f = c.f(side, x);
                    for i in 0..2 {
                        assert!((d[i] - fd[i]).abs() < 1e-5 * (1.0 + d[i].abs()), "{name} side {side}: {d:?} vs {fd:?}");
                        assert_eq!(f[i], -d[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn constitutive_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for name in CASE_NAMES {
            let c = ManufacturedCase::by_name(name).unwrap();
            for _ in 0..100 {
                let x: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                for side in 0..2 {
                    let lhs = compliance_apply(&c.material, side, &c.sigma(side, x));
                    let rhs = strain(&c.grad_u(side, x));
                    let scale = 1.0 + rhs.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
                    assert!(close(&lhs, &rhs, 1e-10 * scale), "{name}");
                }
            }
        }
    }

    #[test]
    fn continuous_cases_have_no_displacement_jump() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for name in ["ex1", "ex2", "ex4", "patch"] {
            let c = ManufacturedCase::by_name(name).unwrap();
            for _ in 0..20 {
                let x: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                assert_eq!(c.b(x), [0.0, 0.0]);
                let n = [0.6, 0.8];
                assert!(close(&c.grad_gamma_b(x, n), &[[0.0; 2]; 2], 0.0));
            }
        }
        let patch = ManufacturedCase::by_name("patch").unwrap();
        let a = patch.a([0.3, 0.1], [0.6, 0.8]);
        assert!(a[0].abs() < 1e-14 && a[1].abs() < 1e-14);
    }

    #[test]
    fn ex2_stays_bounded() {
        for lambda0 in [100.0, 10000.0] {
            let c = ManufacturedCase::new("ex2", Material::new(lambda0, 1.0, 1.0, 1.0).unwrap()).unwrap();
            let n = 200;
            let mut max = 0.0f64;
            for i in 0..=n {
                for j in 0..=n {
                    let x = [-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64];
                    for side in 0..2 {
                        let u = c.u(side, x);
                        max = max.max(u[0].abs()).max(u[1].abs());
                    }
                }
            }
            assert!(max <= 3.0, "max |u| = {max}");
        }
    }

    #[test]
    fn corner_exponent_value() {
        let alpha = corner_exponent(0.75 * PI);
        assert_relative_eq!(alpha, 0.5444837, epsilon = 1e-7);
        assert!((alpha * (1.5 * PI).sin() + (1.5 * PI * alpha).sin()).abs() < 1e-14);
    }

    #[test]
    fn ex5_is_traction_free_on_corner_sides() {
        let c = ManufacturedCase::by_name("ex5").unwrap();
        let p = c.interface.polygon().unwrap();
        let mut corner_sides = 0;
        for j in 0..p.len() {
            let [a, b] = p.side(j);
            if a != [0.0, 0.0] && b != [0.0, 0.0] {
                continue;
            }
            corner_sides += 1;
            let n = p.side_normal(j);
            for t in [0.1, 0.4, 0.9] {
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let tr = c.a(x, n);
                assert!(tr[0].abs() < 1e-12 && tr[1].abs() < 1e-12, "side {j}: {tr:?}");
            }
        }
        assert_eq!(corner_sides, 2);
        // the wedge opening covers the inside of the L-shape
        assert!(c.interface.in_omega0([0.3, 0.0]) && !c.interface.in_omega0([-0.3, 0.0]));
        assert_eq!(c.u(1, [0.9, 0.9]), [1.0, 1.0]);
        assert_eq!(c.f(0, [0.2, 0.1]), [0.0, 0.0]);
    }

    #[test]
    fn tangential_projection_kills_normal_part() {
        let g: Tensor<f64> = [[1.0, 2.0], [3.0, 4.0]];
        let n = [0.6, 0.8];
        let t = tangential(&g, n);
        for row in t {
            assert!((row[0] * n[0] + row[1] * n[1]).abs() < 1e-15);
        }
    }
}
