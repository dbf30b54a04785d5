//! Reference-triangle elements built from monomials and their dual degrees of freedom.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, triangle_rule};

/// Reference vertices; local edge `i` runs from vertex `i+1` to vertex `i+2`.
pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Bdm,
    Lagrange,
}

/// Exponents `(a, b)` of the monomials `x^a y^b` with `a + b <= m`.
pub fn monomial_exponents(m: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for d in 0..=m {
        for b in 0..=d {
            e.push((d - b, b));
        }
    }
    e
}

/// Values and first derivatives of the monomials at `p`.
pub fn eval_monomials(exps: &[(usize, usize)], p: [f64; 2], val: &mut [f64], dx: &mut [f64], dy: &mut [f64]) {
    for (l, &(a, b)) in exps.iter().enumerate() {
        let xa = p[0].powi(a as i32);
        let yb = p[1].powi(b as i32);
        val[l] = xa * yb;
        dx[l] = if a > 0 { a as f64 * p[0].powi(a as i32 - 1) * yb } else { 0.0 };
        dy[l] = if b > 0 { b as f64 * xa * p[1].powi(b as i32 - 1) } else { 0.0 };
    }
}

/// Shifted Legendre polynomial of degree `k` on `[0, 1]`.
pub fn legendre01(k: usize, s: f64) -> f64 {
    let z = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, z);
    if k == 0 {
        return 1.0;
    }
    for j in 2..=k {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Outward unit normal and length of reference edge `i`.
pub fn ref_edge(i: usize) -> ([f64; 2], [f64; 2], [f64; 2], f64) {
    let a = REF_VERTICES[(i + 1) % 3];
    let b = REF_VERTICES[(i + 2) % 3];
    let t = [b[0] - a[0], b[1] - a[1]];
    let l = t[0].hypot(t[1]);
    (a, b, [t[1] / l, -t[0] / l], l)
}

/// Interior test fields of the first-kind Nedelec space of degree `m - 1`.
fn nedelec_tests(m: usize) -> Vec<Box<dyn Fn([f64; 2]) -> [f64; 2]>> {
    let mut out: Vec<Box<dyn Fn([f64; 2]) -> [f64; 2]>> = Vec::new();
    if m < 2 {
        return out;
    }
    for (a, b) in monomial_exponents(m - 2) {
        out.push(Box::new(move |p| [p[0].powi(a as i32) * p[1].powi(b as i32), 0.0]));
        out.push(Box::new(move |p| [0.0, p[0].powi(a as i32) * p[1].powi(b as i32)]));
    }
    let d = m - 2;
    for b in 0..=d {
        let a = d - b;
        out.push(Box::new(move |p| {
            let q = p[0].powi(a as i32) * p[1].powi(b as i32);
            [-p[1] * q, p[0] * q]
        }));
    }
    out
}

/// Reference element with a nodal (dual) basis expressed in monomials.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub family: Family,
    pub degree: usize,
    /// Number of local basis functions (scalar for Lagrange, vector for BDM).
    pub n: usize,
    pub per_edge: usize,
    pub interior: usize,
    pub exps: Vec<(usize, usize)>,
    /// Row-major `[n_poly][n]` expansion coefficients; BDM polys are `(monomial, component)`.
    coeff: Vec<f64>,
    /// Lagrange nodes on the reference triangle.
    pub nodes: Vec<[f64; 2]>,
}

impl ReferenceElement {
    pub fn new(family: Family, m: usize) -> Result<Self> {
        if !(1..=3).contains(&m) {
            return Err(Error::InvalidInput(format!("unsupported degree {m}")));
        }
        let exps = monomial_exponents(m);
        let nm = exps.len();
        match family {
            Family::Lagrange => {
                let mut nodes: Vec<[f64; 2]> = REF_VERTICES.to_vec();
                for i in 0..3 {
                    let (a, b, _, _) = ref_edge(i);
                    for j in 1..m {
                        let t = j as f64 / m as f64;
                        nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                for i in 1..m {
                    for j in 1..m - i {
                        if i + j < m {
                            nodes.push([j as f64 / m as f64, i as f64 / m as f64]);
                        }
                    }
                }
                let n = nodes.len();
                assert_eq!(n, nm);
                let mut d = DMatrix::zeros(n, nm);
                let (mut v, mut gx, mut gy) = (vec![0.0; nm], vec![0.0; nm], vec![0.0; nm]);
                for (i, &p) in nodes.iter().enumerate() {
                    eval_monomials(&exps, p, &mut v, &mut gx, &mut gy);
                    for l in 0..nm {
                        d[(i, l)] = v[l];
                    }
                }
                let c = d
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidInput("singular Lagrange node matrix".into()))?;
                let coeff = (0..nm).flat_map(|l| (0..n).map(move |i| (l, i))).map(|(l, i)| c[(l, i)]).collect();
                Ok(ReferenceElement {
                    family,
                    degree: m,
                    n,
                    per_edge: m - 1,
                    interior: n - 3 - 3 * (m - 1),
                    exps,
                    coeff,
                    nodes,
                })
            }
            Family::Bdm => {
                let np = 2 * nm;
                let n = np;
                let mut d = DMatrix::zeros(n, np);
                let (mut v, mut gx, mut gy) = (vec![0.0; nm], vec![0.0; nm], vec![0.0; nm]);
                let (gl_x, gl_w) = gauss_legendre::<f64>(m + 2);
                let mut row = 0;
                for i in 0..3 {
                    let (a, b, nrm, len) = ref_edge(i);
                    for k in 0..=m {
                        for (&s, &w) in gl_x.iter().zip(&gl_w) {
                            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                            eval_monomials(&exps, p, &mut v, &mut gx, &mut gy);
                            let f = w * len * legendre01(k, s);
                            for l in 0..nm {
                                d[(row, 2 * l)] += f * v[l] * nrm[0];
                                d[(row, 2 * l + 1)] += f * v[l] * nrm[1];
                            }
                        }
                        row += 1;
                    }
                }
                let tests = nedelec_tests(m);
                let rule = triangle_rule::<f64>(2 * m);
                for q in &tests {
                    for (p, w) in &rule {
                        eval_monomials(&exps, *p, &mut v, &mut gx, &mut gy);
                        let qv = q(*p);
                        for l in 0..nm {
                            d[(row, 2 * l)] += 0.5 * w * v[l] * qv[0];
                            d[(row, 2 * l + 1)] += 0.5 * w * v[l] * qv[1];
                        }
                    }
                    row += 1;
                }
                assert_eq!(row, n);
                let c = d
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidInput("singular BDM moment matrix".into()))?;
                let coeff = (0..np).flat_map(|l| (0..n).map(move |i| (l, i))).map(|(l, i)| c[(l, i)]).collect();
                Ok(ReferenceElement {
                    family,
                    degree: m,
                    n,
                    per_edge: m + 1,
                    interior: tests.len(),
                    exps,
                    coeff,
                    nodes: Vec::new(),
                })
            }
        }
    }

    pub fn num_poly(&self) -> usize {
        match self.family {
            Family::Bdm => 2 * self.exps.len(),
            Family::Lagrange => self.exps.len(),
        }
    }

    /// Lagrange: values `v[i]` and reference gradients `g[i]`.
    pub fn eval_scalar(&self, p: [f64; 2], v: &mut [f64], g: &mut [[f64; 2]]) {
        let nm = self.exps.len();
        let mut mv = [0.0; 10];
        let mut mx = [0.0; 10];
        let mut my = [0.0; 10];
        eval_monomials(&self.exps, p, &mut mv[..nm], &mut mx[..nm], &mut my[..nm]);
        for i in 0..self.n {
            let (mut a, mut bx, mut by) = (0.0, 0.0, 0.0);
            for l in 0..nm {
                let c = self.coeff[l * self.n + i];
                a += c * mv[l];
                bx += c * mx[l];
                by += c * my[l];
            }
            v[i] = a;
            g[i] = [bx, by];
        }
    }

    /// BDM: reference vector values `v[i]` and divergences `d[i]`.
    pub fn eval_vector(&self, p: [f64; 2], v: &mut [[f64; 2]], d: &mut [f64]) {
        let nm = self.exps.len();
        let mut mv = [0.0; 10];
        let mut mx = [0.0; 10];
        let mut my = [0.0; 10];
        eval_monomials(&self.exps, p, &mut mv[..nm], &mut mx[..nm], &mut my[..nm]);
        for i in 0..self.n {
            let (mut a0, mut a1, mut dv) = (0.0, 0.0, 0.0);
            for l in 0..nm {
                let c0 = self.coeff[(2 * l) * self.n + i];
                let c1 = self.coeff[(2 * l + 1) * self.n + i];
                a0 += c0 * mv[l];
                a1 += c1 * mv[l];
                dv += c0 * mx[l] + c1 * my[l];
            }
            v[i] = [a0, a1];
            d[i] = dv;
        }
    }

    /// Interior moment test fields (BDM only).
    pub fn interior_tests(&self) -> Vec<Box<dyn Fn([f64; 2]) -> [f64; 2]>> {
        nedelec_tests(self.degree)
    }
}
