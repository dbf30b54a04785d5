//! Local polynomial extensions from anchor elements and the projection ghost penalty.

use nalgebra::{DMatrix, DVector};

use crate::cutfem_geom::CutGeometry;
use crate::error::{Error, Result};
use crate::fem_spaces::{eval_monomials, monomial_exponents, Family, FeSpace};
use crate::linalg::SparseSym;
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;

/// Number of scalar components of a field in `space`.
pub fn components(space: &FeSpace) -> usize {
    match space.family {
        Family::Bdm => 2,
        Family::Lagrange => 1,
    }
}

/// Scaled monomial basis `((x - c) / s)^a ((y - c) / s)^b` of `P_r`.
#[derive(Clone, Debug)]
struct Monomials {
    center: [f64; 2],
    scale: f64,
    exps: Vec<(usize, usize)>,
}

impl Monomials {
    fn new(mesh: &Mesh<f64>, k: usize, r: usize) -> Self {
        Monomials {
            center: mesh.centroid(k),
            scale: mesh.diameter(k),
            exps: monomial_exponents(r),
        }
    }

    fn len(&self) -> usize {
        self.exps.len()
    }

    fn eval(&self, x: [f64; 2], out: &mut [f64]) {
        let p = [(x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale];
        let n = self.exps.len();
        let mut dx = vec![0.0; n];
        let mut dy = vec![0.0; n];
        eval_monomials(&self.exps, p, out, &mut dx, &mut dy);
    }
}

/// `E_K^r v`: the L2(K) projection of a field onto `P_r(K)`, extended as a polynomial.
#[derive(Clone, Debug)]
pub struct ExtensionOperator {
    pub anchor: usize,
    pub degree: usize,
    basis: Monomials,
    /// Monomial coefficients per scalar component.
    pub coeffs: Vec<Vec<f64>>,
}

impl ExtensionOperator {
    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.basis.exps
    }

    /// Centre and length scale of the monomial basis.
    pub fn frame(&self) -> ([f64; 2], f64) {
        (self.basis.center, self.basis.scale)
    }

    /// Value of every component at any physical point.
    pub fn eval(&self, x: [f64; 2]) -> Vec<f64> {
        let mut p = vec![0.0; self.basis.len()];
        self.basis.eval(x, &mut p);
        self.coeffs.iter().map(|c| c.iter().zip(&p).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Linear map from the DOFs of an anchor element to the monomial coefficients of
/// the projection, stored as `proj[(c * nm + a) * nd + j]`.
#[derive(Clone, Debug)]
struct ExtensionMap {
    basis: Monomials,
    ncomp: usize,
    dofs: Vec<usize>,
    proj: Vec<f64>,
}

impl ExtensionMap {
    fn new(mesh: &Mesh<f64>, space: &FeSpace, k: usize, r: usize) -> Result<Self> {
        if !space.is_active(k) {
            return Err(Error::InvalidInput(format!("anchor element {k} is not active in the space")));
        }
        let basis = Monomials::new(mesh, k, r);
        let nm = basis.len();
        let ncomp = components(space);
        let dofs = space.element_dofs(k).to_vec();
        let nd = dofs.len();
        let [a, b, c] = mesh.corners(k);
        let rule = QuadratureRule::triangle(a, b, c, 2 * space.degree.max(r) + 2);
        let vals = space.eval_basis(mesh, k, &rule.points)?;
        let mut mass = DMatrix::<f64>::zeros(nm, nm);
        let mut rhs = DMatrix::<f64>::zeros(nm, ncomp * nd);
        let mut p = vec![0.0; nm];
        for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            basis.eval(x, &mut p);
            for i in 0..nm {
                for j in 0..nm {
                    mass[(i, j)] += w * p[i] * p[j];
                }
                for j in 0..nd {
                    for cc in 0..ncomp {
                        let v = match space.family {
                            Family::Bdm => vals.vector[q * nd + j][cc],
                            Family::Lagrange => vals.scalar[q * nd + j],
                        };
                        rhs[(i, cc * nd + j)] += w * p[i] * v;
                    }
                }
            }
        }
        let chol = mass
            .cholesky()
            .ok_or_else(|| Error::InvalidInput(format!("singular local mass matrix on element {k}")))?;
        let sol = chol.solve(&rhs);
        let mut proj = vec![0.0; ncomp * nm * nd];
        for cc in 0..ncomp {
            for i in 0..nm {
                for j in 0..nd {
                    proj[(cc * nm + i) * nd + j] = sol[(i, cc * nd + j)];
                }
            }
        }
        Ok(ExtensionMap {
            basis,
            ncomp,
            dofs,
            proj,
        })
    }
}

/// Projection of the field with DOF values `coeffs` on the anchor `k` onto `P_r`.
pub fn local_extension(mesh: &Mesh<f64>, space: &FeSpace, coeffs: &[f64], k: usize, r: usize) -> Result<ExtensionOperator> {
    let map = ExtensionMap::new(mesh, space, k, r)?;
    let nm = map.basis.len();
    let nd = map.dofs.len();
    let coeffs = (0..map.ncomp)
        .map(|c| {
            (0..nm)
                .map(|a| (0..nd).map(|j| map.proj[(c * nm + a) * nd + j] * coeffs[map.dofs[j]]).sum())
                .collect()
        })
        .collect();
    Ok(ExtensionOperator {
        anchor: k,
        degree: r,
        basis: map.basis,
        coeffs,
    })
}

/// Residual rows `v - E_{M(K)} v` at the quadrature points of a cut element, one row
/// per point and component, on the distinct DOFs of `K` and its anchor.
struct PenaltyRows {
    dofs: Vec<usize>,
    weights: Vec<f64>,
    rows: Vec<f64>,
}

fn penalty_rows(
    mesh: &Mesh<f64>,
    space: &FeSpace,
    geom: &CutGeometry<f64>,
    k: usize,
    side: usize,
    r: usize,
) -> Result<PenaltyRows> {
    let anchor = geom
        .classification
        .anchor(side, k)
        .ok_or_else(|| Error::InvalidInput(format!("cut element {k} has no anchor on side {side}")))?;
    let map = ExtensionMap::new(mesh, space, anchor, r)?;
    let own = space.element_dofs(k);
    let mut dofs: Vec<usize> = own.to_vec();
    for &d in &map.dofs {
        if !dofs.contains(&d) {
            dofs.push(d);
        }
    }
    let pos = |d: usize| dofs.iter().position(|&e| e == d).unwrap();
    let own_pos: Vec<usize> = own.iter().map(|&d| pos(d)).collect();
    let anchor_pos: Vec<usize> = map.dofs.iter().map(|&d| pos(d)).collect();
    let nl = dofs.len();
    let nk = own.len();
    let na = map.dofs.len();
    let nm = map.basis.len();
    let [a, b, c] = mesh.corners(k);
    let rule = QuadratureRule::triangle(a, b, c, 2 * space.degree.max(r) + 2);
    let vals = space.eval_basis(mesh, k, &rule.points)?;
    let mut weights = Vec::with_capacity(rule.len() * map.ncomp);
    let mut rows = vec![0.0; rule.len() * map.ncomp * nl];
    let mut p = vec![0.0; nm];
    for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        map.basis.eval(x, &mut p);
        for cc in 0..map.ncomp {
            let row = &mut rows[weights.len() * nl..(weights.len() + 1) * nl];
            weights.push(w);
            for j in 0..nk {
                row[own_pos[j]] += match space.family {
                    Family::Bdm => vals.vector[q * nk + j][cc],
                    Family::Lagrange => vals.scalar[q * nk + j],
                };
            }
            for j in 0..na {
                let e: f64 = (0..nm).map(|i| p[i] * map.proj[(cc * nm + i) * na + j]).sum();
                row[anchor_pos[j]] -= e;
            }
        }
    }
    Ok(PenaltyRows { dofs, weights, rows })
}

/// Dense local penalty block of a cut element: `int_K |v - E_{M(K)} v|^2` over the
/// whole element, as a matrix on the returned (distinct) DOFs of `K` and its anchor.
pub fn penalty_block(
    mesh: &Mesh<f64>,
    space: &FeSpace,
    geom: &CutGeometry<f64>,
    k: usize,
    side: usize,
    r: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let pr = penalty_rows(mesh, space, geom, k, side, r)?;
    let nl = pr.dofs.len();
    let mut mat = vec![0.0; nl * nl];
    for (q, &w) in pr.weights.iter().enumerate() {
        let row = &pr.rows[q * nl..(q + 1) * nl];
        for i in 0..nl {
            let wi = w * row[i];
            for j in 0..nl {
                mat[i * nl + j] += wi * row[j];
            }
        }
    }
    Ok((pr.dofs, mat))
}

/// `s_{h,side}^r(v, v)` summed element by element from the residual `v - E v`.
///
/// Equal to `x^T S x` in exact arithmetic, but free of the cancellation in the
/// assembled quadratic form, which bottoms out near `1e-16 * sum |S_ij x_i x_j|`.
pub fn penalty_energy(
    mesh: &Mesh<f64>,
    space: &FeSpace,
    geom: &CutGeometry<f64>,
    r: usize,
    side: usize,
    x: &[f64],
) -> Result<f64> {
    let mut total = 0.0;
    for &k in &geom.classification.cut {
        let pr = penalty_rows(mesh, space, geom, k, side, r)?;
        let nl = pr.dofs.len();
        for (q, &w) in pr.weights.iter().enumerate() {
            let row = &pr.rows[q * nl..(q + 1) * nl];
            let d: f64 = row.iter().zip(&pr.dofs).map(|(a, &g)| a * x[g]).sum();
            total += w * d * d;
        }
    }
    Ok(total)
}

/// `-S_K x` on the DOFs of cut element `k`, formed as `-sum w row (row . x)` so that a
/// field with no penalty energy gives a residual at rounding level of `v - E v`.
pub fn penalty_residual(
    mesh: &Mesh<f64>,
    space: &FeSpace,
    geom: &CutGeometry<f64>,
    k: usize,
    side: usize,
    r: usize,
    x: &dyn Fn(usize) -> f64,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let pr = penalty_rows(mesh, space, geom, k, side, r)?;
    let nl = pr.dofs.len();
    let xl: Vec<f64> = pr.dofs.iter().map(|&g| x(g)).collect();
    let mut out = vec![0.0; nl];
    for (q, &w) in pr.weights.iter().enumerate() {
        let row = &pr.rows[q * nl..(q + 1) * nl];
        let d: f64 = row.iter().zip(&xl).map(|(a, b)| a * b).sum();
        for (o, a) in out.iter_mut().zip(row) {
            *o -= w * d * a;
        }
    }
    Ok((pr.dofs, out))
}

/// Penalty `s_{h,side}^r` on all DOFs (free and Dirichlet) of `space`.
pub fn assemble_penalty(
    mesh: &Mesh<f64>,
    space: &FeSpace,
    geom: &CutGeometry<f64>,
    r: usize,
    side: usize,
) -> Result<SparseSym> {
    let n = space.num_total();
    let blocks = geom
        .classification
        .cut
        .iter()
        .map(|&k| penalty_block(mesh, space, geom, k, side, r))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![Vec::new(); n];
    for (dofs, _) in &blocks {
        for &i in dofs {
            for &j in dofs {
                if j >= i {
                    rows[i].push(j as u32);
                }
            }
        }
    }
    let mut s = SparseSym::from_pattern(n, rows)?;
    for (dofs, mat) in &blocks {
        let nl = dofs.len();
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                if j >= i {
                    s.add(i, j, mat[a * nl + b]);
                }
            }
        }
    }
    Ok(s)
}

/// Largest `||E v||_{L2(patch)} / ||v||_{L2(k)}` over the given fields, the patch being
/// the vertex neighbourhood of `k`.
pub fn extension_ratio(mesh: &Mesh<f64>, space: &FeSpace, k: usize, r: usize, fields: &[Vec<f64>]) -> Result<f64> {
    let patch = mesh.delta_neighborhood(k)?.members;
    let deg = 2 * space.degree.max(r) + 2;
    let mut worst: f64 = 0.0;
    for coeffs in fields {
        let ext = local_extension(mesh, space, coeffs, k, r)?;
        let mut num = 0.0;
        for &e in &patch {
            let [a, b, c] = mesh.corners(e);
            let rule = QuadratureRule::triangle(a, b, c, deg);
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                num += w * ext.eval(x).iter().map(|v| v * v).sum::<f64>();
            }
        }
        let [a, b, c] = mesh.corners(k);
        let rule = QuadratureRule::triangle(a, b, c, deg);
        let mut den = 0.0;
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            den += w * match space.family {
                Family::Bdm => {
                    let (v, _) = space.eval_vector(mesh, coeffs, k, x)?;
                    v[0] * v[0] + v[1] * v[1]
                }
                Family::Lagrange => space.eval_scalar(mesh, coeffs, k, x)?.0.powi(2),
            };
        }
        if den > 0.0 {
            worst = worst.max((num / den).sqrt());
        }
    }
    Ok(worst)
}

/// Dense symmetric check used by tests: smallest eigenvalue of a dense matrix.
pub fn min_eigenvalue(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `x^T S x`.
pub fn energy(s: &SparseSym, x: &[f64]) -> f64 {
    let y = s.apply(x);
    DVector::from_column_slice(x).dot(&DVector::from_column_slice(&y))
}
