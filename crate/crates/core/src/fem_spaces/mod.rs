//! BDM and Lagrange spaces on active submeshes.
//!
//! BDM edge functionals are normal-flux Legendre moments divided by the edge
//! length, and interior functionals carry a `1/sqrt(det J)` factor, so every
//! basis function has an L2 norm of order `h` like the nodal Lagrange basis.

mod reference;

use std::sync::Arc;

pub use reference::{eval_monomials, legendre01, monomial_exponents, Family, ReferenceElement, REF_VERTICES};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, triangle_rule};

const NONE: usize = usize::MAX;

/// Affine map from the reference triangle onto an element.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub origin: [f64; 2],
    /// Columns are `b - a` and `c - a`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    pub inv: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(mesh: &Mesh<f64>, k: usize) -> Self {
        let [a, b, c] = mesh.corners(k);
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        ElementMap {
            origin: a,
            jac,
            det,
            inv,
        }
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    pub fn to_physical(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * p[0] + self.jac[0][1] * p[1],
            self.origin[1] + self.jac[1][0] * p[0] + self.jac[1][1] * p[1],
        ]
    }

    /// `J v / det J`.
    pub fn piola(&self, v: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }

    /// `J^{-T} g`.
    pub fn covariant(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

/// Local basis values at a set of points, stored point-major (`p * n + i`).
#[derive(Clone, Debug, Default)]
pub struct BasisValues {
    pub n: usize,
    /// BDM vector values.
    pub vector: Vec<[f64; 2]>,
    /// BDM divergences.
    pub div: Vec<f64>,
    /// Lagrange values.
    pub scalar: Vec<f64>,
    /// Lagrange gradients.
    pub grad: Vec<[f64; 2]>,
}

/// Coefficients of a field split into its Omega_0 and Omega_1 components.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldPair {
    pub coeffs0: Vec<f64>,
    pub coeffs1: Vec<f64>,
}

impl FieldPair {
    pub fn side(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.coeffs0
        } else {
            &self.coeffs1
        }
    }
}

/// Scalar Lagrange or vector BDM space on a set of active elements.
///
/// Degrees of freedom are numbered free first; Dirichlet ones (Lagrange only)
/// follow at indices `num_free()..num_total()`.
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub family: Family,
    pub degree: usize,
    pub reference: Arc<ReferenceElement>,
    pub active: Vec<usize>,
    slot: Vec<usize>,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    scales: Vec<f64>,
    n_free: usize,
    n_dirichlet: usize,
    /// Lagrange node coordinates by DOF index.
    pub nodes: Vec<[f64; 2]>,
}

impl FeSpace {
    /// Space on `active`; `dirichlet` masks Lagrange nodes on the domain boundary.
    pub fn build(mesh: &Mesh<f64>, active: &[usize], family: Family, m: usize, dirichlet: bool) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::InvalidInput("empty active element set".into()));
        }
        if dirichlet && family == Family::Bdm {
            return Err(Error::InvalidInput("Dirichlet masking applies to Lagrange spaces only".into()));
        }
        let reference = Arc::new(ReferenceElement::new(family, m)?);
        let n = reference.n;
        let mut slot = vec![NONE; mesh.num_elements()];
        for (s, &k) in active.iter().enumerate() {
            slot[k] = s;
        }
        let mut dofs = vec![NONE; active.len() * n];
        let mut signs = vec![1.0; active.len() * n];
        let mut scales = vec![1.0; active.len() * n];
        let mut count = 0usize;
        let mut nodes = Vec::new();
        let mut is_dir = Vec::new();
        match family {
            Family::Bdm => {
                let mut edge_base = vec![NONE; mesh.edges.len()];
                for (s, &k) in active.iter().enumerate() {
                    let el = mesh.elements[k];
                    for i in 0..3 {
                        let e = mesh.element_edges[k][i];
                        if edge_base[e] == NONE {
                            edge_base[e] = count;
                            count += m + 1;
                        }
                        let reversed = el[(i + 1) % 3] > el[(i + 2) % 3];
                        let [p, q] = mesh.edges[e].vertices.map(|v| mesh.vertices[v]);
                        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
                        for kk in 0..=m {
                            let l = s * n + i * (m + 1) + kk;
                            dofs[l] = edge_base[e] + kk;
                            signs[l] = if reversed && kk % 2 == 0 { -1.0 } else { 1.0 };
                            scales[l] = len;
                        }
                    }
                    let det = ElementMap::new(mesh, k).det;
                    for t in 0..reference.interior {
                        let l = s * n + 3 * (m + 1) + t;
                        dofs[l] = count;
                        scales[l] = det.sqrt();
                        count += 1;
                    }
                }
                is_dir = vec![false; count];
            }
            Family::Lagrange => {
                let bdry = mesh.boundary_vertices();
                let mut vert = vec![NONE; mesh.num_vertices()];
                let mut edge_base = vec![NONE; mesh.edges.len()];
                for (s, &k) in active.iter().enumerate() {
                    let el = mesh.elements[k];
                    for i in 0..3 {
                        let v = el[i];
                        if vert[v] == NONE {
                            vert[v] = count;
                            count += 1;
                            nodes.push(mesh.vertices[v]);
                            is_dir.push(dirichlet && bdry[v]);
                        }
                        dofs[s * n + i] = vert[v];
                    }
                    for i in 0..3 {
                        let e = mesh.element_edges[k][i];
                        let edge = &mesh.edges[e];
                        if edge_base[e] == NONE {
                            edge_base[e] = count;
                            let [p, q] = edge.vertices.map(|v| mesh.vertices[v]);
                            for j in 1..m {
                                let t = j as f64 / m as f64;
                                nodes.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                                is_dir.push(dirichlet && edge.is_boundary());
                            }
                            count += m - 1;
                        }
                        let reversed = el[(i + 1) % 3] > el[(i + 2) % 3];
                        for j in 0..m - 1 {
                            let g = if reversed { m - 2 - j } else { j };
                            dofs[s * n + 3 + i * (m - 1) + j] = edge_base[e] + g;
                        }
                    }
                    let map = ElementMap::new(mesh, k);
                    for t in 0..reference.interior {
                        let l = 3 + 3 * (m - 1) + t;
                        dofs[s * n + l] = count;
                        nodes.push(map.to_physical(reference.nodes[l]));
                        is_dir.push(false);
                        count += 1;
                    }
                }
            }
        }
        // free DOFs first, Dirichlet DOFs last, both in order of first appearance
        let mut renum = vec![0; count];
        let n_free = is_dir.iter().filter(|&&d| !d).count();
        let (mut f, mut d) = (0, n_free);
        for i in 0..count {
            if is_dir[i] {
                renum[i] = d;
                d += 1;
            } else {
                renum[i] = f;
                f += 1;
            }
        }
        for x in dofs.iter_mut() {
            *x = renum[*x];
        }
        if !nodes.is_empty() {
            let mut sorted = vec![[0.0; 2]; count];
            for i in 0..count {
                sorted[renum[i]] = nodes[i];
            }
            nodes = sorted;
        }
        Ok(FeSpace {
            family,
            degree: m,
            reference,
            active: active.to_vec(),
            slot,
            dofs,
            signs,
            scales,
            n_free,
            n_dirichlet: count - n_free,
            nodes,
        })
    }

    /// Number of free scalar (Lagrange) or vector (BDM) DOFs.
    pub fn num_free(&self) -> usize {
        self.n_free
    }

    pub fn num_dirichlet(&self) -> usize {
        self.n_dirichlet
    }

    pub fn num_total(&self) -> usize {
        self.n_free + self.n_dirichlet
    }

    /// Free DOFs of the vector-valued Lagrange space (two components).
    pub fn vector_dofs(&self) -> usize {
        2 * self.n_free
    }

    pub fn local_dim(&self) -> usize {
        self.reference.n
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.slot[k] != NONE
    }

    /// DOF indices of element `k` (free or Dirichlet numbering).
    pub fn element_dofs(&self, k: usize) -> &[usize] {
        let n = self.reference.n;
        let s = self.slot[k];
        &self.dofs[s * n..(s + 1) * n]
    }

    pub fn element_signs(&self, k: usize) -> &[f64] {
        let n = self.reference.n;
        let s = self.slot[k];
        &self.signs[s * n..(s + 1) * n]
    }

    fn check_point(map: &ElementMap, x: [f64; 2], k: usize) -> Result<[f64; 2]> {
        let p = map.to_reference(x);
        let lam = [1.0 - p[0] - p[1], p[0], p[1]];
        if lam.iter().any(|&l| l < -1e-10) {
            return Err(Error::InvalidInput(format!(
                "point ({}, {}) lies outside element {k}",
                x[0], x[1]
            )));
        }
        Ok(p)
    }

    /// Local basis values at physical points of element `k`.
    pub fn eval_basis(&self, mesh: &Mesh<f64>, k: usize, pts: &[[f64; 2]]) -> Result<BasisValues> {
        if !self.is_active(k) {
            return Err(Error::InvalidInput(format!("element {k} is not active in this space")));
        }
        let map = ElementMap::new(mesh, k);
        let n = self.reference.n;
        let mut out = BasisValues {
            n,
            ..Default::default()
        };
        let s = self.slot[k];
        match self.family {
            Family::Bdm => {
                out.vector = vec![[0.0; 2]; pts.len() * n];
                out.div = vec![0.0; pts.len() * n];
                let mut v = vec![[0.0; 2]; n];
                let mut d = vec![0.0; n];
                for (q, &x) in pts.iter().enumerate() {
                    let p = Self::check_point(&map, x, k)?;
                    self.reference.eval_vector(p, &mut v, &mut d);
                    for i in 0..n {
                        let c = self.signs[s * n + i] * self.scales[s * n + i];
                        let pv = map.piola(v[i]);
                        out.vector[q * n + i] = [c * pv[0], c * pv[1]];
                        out.div[q * n + i] = c * d[i] / map.det;
                    }
                }
            }
            Family::Lagrange => {
                out.scalar = vec![0.0; pts.len() * n];
                out.grad = vec![[0.0; 2]; pts.len() * n];
                let mut v = vec![0.0; n];
                let mut g = vec![[0.0; 2]; n];
                for (q, &x) in pts.iter().enumerate() {
                    let p = Self::check_point(&map, x, k)?;
                    self.reference.eval_scalar(p, &mut v, &mut g);
                    for i in 0..n {
                        out.scalar[q * n + i] = v[i];
                        out.grad[q * n + i] = map.covariant(g[i]);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Canonical BDM interpolant of a vector field.
    pub fn interpolate_vector(&self, mesh: &Mesh<f64>, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.family, Family::Bdm);
        let m = self.degree;
        let n = self.reference.n;
        let mut out = vec![0.0; self.num_total()];
        let mut done = vec![false; self.num_total()];
        let (gx, gw) = gauss_legendre::<f64>(m + 4);
        let rule = triangle_rule::<f64>(2 * m + 4);
        let tests = self.reference.interior_tests();
        for &k in &self.active {
            let s = self.slot[k];
            for i in 0..3 {
                let first = self.dofs[s * n + i * (m + 1)];
                if done[first] {
                    continue;
                }
                let e = mesh.element_edges[k][i];
                let [p, q] = mesh.edges[e].vertices.map(|v| mesh.vertices[v]);
                let t = [q[0] - p[0], q[1] - p[1]];
                let len = t[0].hypot(t[1]);
                let nrm = [t[1] / len, -t[0] / len];
                for kk in 0..=m {
                    let mut acc = 0.0;
                    for (&sp, &w) in gx.iter().zip(&gw) {
                        let x = [p[0] + sp * t[0], p[1] + sp * t[1]];
                        let fv = f(x);
                        acc += w * legendre01(kk, sp) * (fv[0] * nrm[0] + fv[1] * nrm[1]);
                    }
                    out[first + kk] = acc;
                    done[first + kk] = true;
                }
            }
            let map = ElementMap::new(mesh, k);
            let area = 0.5 * map.det;
            for (t, q) in tests.iter().enumerate() {
                let l = s * n + 3 * (m + 1) + t;
                let mut acc = 0.0;
                for (p, w) in &rule {
                    let x = map.to_physical(*p);
                    let fv = f(x);
                    let qv = map.covariant(q(*p));
                    acc += w * area * (fv[0] * qv[0] + fv[1] * qv[1]);
                }
                out[self.dofs[l]] = acc / self.scales[l];
            }
        }
        out
    }

    /// Nodal Lagrange interpolant (free and Dirichlet DOFs).
    pub fn interpolate_scalar(&self, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
        assert_eq!(self.family, Family::Lagrange);
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Vector BDM field at `x` in element `k` from DOF values.
    pub fn eval_vector(&self, mesh: &Mesh<f64>, coeffs: &[f64], k: usize, x: [f64; 2]) -> Result<([f64; 2], f64)> {
        let b = self.eval_basis(mesh, k, &[x])?;
        let mut v = [0.0; 2];
        let mut d = 0.0;
        for (i, &g) in self.element_dofs(k).iter().enumerate() {
            v[0] += coeffs[g] * b.vector[i][0];
            v[1] += coeffs[g] * b.vector[i][1];
            d += coeffs[g] * b.div[i];
        }
        Ok((v, d))
    }

    /// Scalar Lagrange field and its gradient at `x` in element `k`.
    pub fn eval_scalar(&self, mesh: &Mesh<f64>, coeffs: &[f64], k: usize, x: [f64; 2]) -> Result<(f64, [f64; 2])> {
        let b = self.eval_basis(mesh, k, &[x])?;
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for (i, &d) in self.element_dofs(k).iter().enumerate() {
            v += coeffs[d] * b.scalar[i];
            g[0] += coeffs[d] * b.grad[i][0];
            g[1] += coeffs[d] * b.grad[i][1];
        }
        Ok((v, g))
    }
}
