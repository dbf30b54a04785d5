//! Global least-squares systems, the discrete minus-norm operator and the tilde operator.

use rayon::prelude::*;

use crate::cutfem_geom::{AssumptionPolicy, CutGeometry};
use crate::elasticity::{ManufacturedCase, Material};
use crate::error::{Error, Result};
use crate::fem_spaces::{Family, FeSpace};
use crate::ghost_penalty::{penalty_block, penalty_energy, penalty_residual};
use crate::interface::Interface;
use crate::linalg::{factorize, Csr, Factorization, SparseSym};
use crate::mesh::Mesh;

/// Which interface weight the normal stress jump gets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Unweighted `(jump_N tau, jump_N rho)` on the interface.
    L2Method,
    /// `h (jump_N tau, jump_N rho)`: the L2 part of the minus-norm functional.
    L2Part,
}

/// Global numbering `[Sigma_0 | Sigma_1 | V_0 | V_1]` over free DOFs.
///
/// Each stress block holds row 0 then row 1 of the tensor; each displacement block
/// holds component 0 then component 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemLayout {
    pub n_sigma: [usize; 2],
    pub n_disp: [usize; 2],
    pub offsets: [usize; 5],
}

/// Where a global index lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofRef {
    Sigma { side: usize, row: usize, dof: usize },
    Disp { side: usize, comp: usize, dof: usize },
}

impl SystemLayout {
    pub fn new(sigma: &[FeSpace; 2], disp: &[FeSpace; 2]) -> Self {
        let n_sigma = [sigma[0].num_free(), sigma[1].num_free()];
        let n_disp = [disp[0].num_free(), disp[1].num_free()];
        let mut offsets = [0; 5];
        offsets[1] = 2 * n_sigma[0];
        offsets[2] = offsets[1] + 2 * n_sigma[1];
        offsets[3] = offsets[2] + 2 * n_disp[0];
        offsets[4] = offsets[3] + 2 * n_disp[1];
        SystemLayout {
            n_sigma,
            n_disp,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets[4]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of stress unknowns (both sides).
    pub fn sigma_len(&self) -> usize {
        self.offsets[2]
    }

    pub fn sigma(&self, side: usize, row: usize, dof: usize) -> usize {
        self.offsets[side] + row * self.n_sigma[side] + dof
    }

    /// `None` for Dirichlet DOFs.
    pub fn disp(&self, side: usize, comp: usize, dof: usize) -> Option<usize> {
        (dof < self.n_disp[side]).then(|| self.offsets[2 + side] + comp * self.n_disp[side] + dof)
    }

    pub fn locate(&self, g: usize) -> Option<DofRef> {
        if g >= self.len() {
            return None;
        }
        let b = (0..4).rev().find(|&b| g >= self.offsets[b])?;
        let local = g - self.offsets[b];
        Some(if b < 2 {
            let n = self.n_sigma[b];
            DofRef::Sigma {
                side: b,
                row: local / n,
                dof: local % n,
            }
        } else {
            let n = self.n_disp[b - 2];
            DofRef::Disp {
                side: b - 2,
                comp: local / n,
                dof: local % n,
            }
        })
    }
}

/// Stress rows and displacement components per side, on the spaces' full DOF sets
/// (displacements include the Dirichlet values).
#[derive(Clone, Debug, Default)]
pub struct FieldSet {
    pub sigma: [[Vec<f64>; 2]; 2],
    pub disp: [[Vec<f64>; 2]; 2],
}

/// Mesh, geometry and the four extended spaces of one run.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh<f64>,
    pub interface: Interface<f64>,
    pub geom: CutGeometry<f64>,
    pub m: usize,
    pub sigma: [FeSpace; 2],
    pub disp: [FeSpace; 2],
    pub layout: SystemLayout,
    /// Degree of the bulk and interface rules.
    pub quad_degree: usize,
}

impl Discretization {
    pub fn new(mesh: Mesh<f64>, interface: Interface<f64>, m: usize, n_sub: usize, policy: AssumptionPolicy) -> Result<Self> {
        let geom = CutGeometry::with_policy(&mesh, &interface, n_sub, policy)?;
        let cls = &geom.classification;
        let sigma = [
            FeSpace::build(&mesh, cls.covered(0), Family::Bdm, m, false)?,
            FeSpace::build(&mesh, cls.covered(1), Family::Bdm, m, false)?,
        ];
        let disp = [
            FeSpace::build(&mesh, cls.covered(0), Family::Lagrange, m, true)?,
            FeSpace::build(&mesh, cls.covered(1), Family::Lagrange, m, true)?,
        ];
        let layout = SystemLayout::new(&sigma, &disp);
        Ok(Discretization {
            mesh,
            interface,
            geom,
            m,
            sigma,
            disp,
            layout,
            quad_degree: 2 * m + 2,
        })
    }

    /// Global mesh size used in every interface weight.
    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    /// Exact displacement of each side at its Dirichlet nodes.
    pub fn dirichlet_values(&self, case: &ManufacturedCase) -> [Vec<[f64; 2]>; 2] {
        [0, 1].map(|i| {
            let sp = &self.disp[i];
            (sp.num_free()..sp.num_total()).map(|d| case.u(i, sp.nodes[d])).collect()
        })
    }

    /// Global free-DOF vector of the canonical interpolant of the exact solution.
    pub fn interpolate(&self, case: &ManufacturedCase) -> Vec<f64> {
        let mut x = vec![0.0; self.layout.len()];
        for i in 0..2 {
            for r in 0..2 {
                let c = self.sigma[i].interpolate_vector(&self.mesh, &|p| case.sigma(i, p)[r]);
                for d in 0..self.layout.n_sigma[i] {
                    x[self.layout.sigma(i, r, d)] = c[d];
                }
            }
            for comp in 0..2 {
                let c = self.disp[i].interpolate_scalar(&|p| case.u(i, p)[comp]);
                for d in 0..self.layout.n_disp[i] {
                    x[self.layout.disp(i, comp, d).unwrap()] = c[d];
                }
            }
        }
        x
    }

    /// Splits a global vector into per-space coefficient vectors, filling in Dirichlet data.
    pub fn split(&self, x: &[f64], dirichlet: &[Vec<[f64; 2]>; 2]) -> FieldSet {
        let mut out = FieldSet::default();
        for i in 0..2 {
            for r in 0..2 {
                out.sigma[i][r] = (0..self.layout.n_sigma[i]).map(|d| x[self.layout.sigma(i, r, d)]).collect();
            }
            for c in 0..2 {
                let mut v: Vec<f64> = (0..self.layout.n_disp[i]).map(|d| x[self.layout.disp(i, c, d).unwrap()]).collect();
                v.extend(dirichlet[i].iter().map(|u| u[c]));
                out.disp[i][c] = v;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Free(usize),
    Fixed(f64),
}

struct LocalBlock {
    slots: Vec<Slot>,
    mat: Vec<f64>,
    rhs: Vec<f64>,
}

/// Work items of the global loop.
#[derive(Clone, Copy, Debug)]
enum Item {
    Bulk { side: usize, k: usize },
    Interface { k: usize },
    Penalty { side: usize, k: usize },
}

/// `mat += w row row^T` over the nonzero entries of `row`.
fn add_gram(mat: &mut [f64], n: usize, w: f64, row: &[f64], nz: &mut Vec<usize>) {
    nz.clear();
    nz.extend((0..n).filter(|&i| row[i] != 0.0));
    for &i in nz.iter() {
        let wi = w * row[i];
        for &j in nz.iter() {
            mat[i * n + j] += wi * row[j];
        }
    }
}

/// Scatters local blocks into a symmetric matrix and a right-hand side, moving
/// Dirichlet columns to the right-hand side.
fn assemble_blocks(
    n: usize,
    items: &[Item],
    want_matrix: bool,
    build: &(dyn Fn(Item, bool) -> Result<Vec<LocalBlock>> + Sync),
) -> Result<(Option<SparseSym>, Vec<f64>)> {
    let chunk = 4096;
    let mut matrix = if want_matrix {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for part in items.chunks(chunk) {
            let blocks: Vec<Vec<LocalBlock>> = part.par_iter().map(|&it| build(it, false)).collect::<Result<_>>()?;
            for b in blocks.iter().flatten() {
                for s in &b.slots {
                    let Slot::Free(i) = *s else { continue };
                    for t in &b.slots {
                        if let Slot::Free(j) = *t {
                            if j >= i {
                                rows[i].push(j as u32);
                            }
                        }
                    }
                }
            }
            for r in rows.iter_mut() {
                if r.len() > 64 {
                    r.sort_unstable();
                    r.dedup();
                }
            }
        }
        Some(SparseSym::from_pattern(n, rows)?)
    } else {
        None
    };
    let mut rhs = vec![0.0; n];
    for part in items.chunks(chunk) {
        let blocks: Vec<Vec<LocalBlock>> = part.par_iter().map(|&it| build(it, true)).collect::<Result<_>>()?;
        for b in blocks.iter().flatten() {
            let nl = b.slots.len();
            for (a, s) in b.slots.iter().enumerate() {
                let Slot::Free(i) = *s else { continue };
                let mut r = b.rhs[a];
                for (c, t) in b.slots.iter().enumerate() {
                    match *t {
                        Slot::Free(j) => {
                            if j >= i {
                                if let Some(m) = matrix.as_mut() {
                                    m.add(i, j, b.mat[a * nl + c]);
                                }
                            }
                        }
                        Slot::Fixed(v) => r -= b.mat[a * nl + c] * v,
                    }
                }
                rhs[i] += r;
            }
        }
    }
    Ok((matrix, rhs))
}

struct Assembler<'a> {
    disc: &'a Discretization,
    material: &'a Material<f64>,
    case: Option<&'a ManufacturedCase>,
    sigma_weight: f64,
    dirichlet: [Vec<[f64; 2]>; 2],
}

impl Assembler<'_> {
    fn items(&self) -> Vec<Item> {
        let cls = &self.disc.geom.classification;
        let mut items = Vec::new();
        for side in 0..2 {
            items.extend(cls.covered(side).iter().map(|&k| Item::Bulk { side, k }));
        }
        for &k in &cls.cut {
            items.push(Item::Interface { k });
            items.push(Item::Penalty { side: 0, k });
            items.push(Item::Penalty { side: 1, k });
        }
        items
    }

    /// Slots of the `[tau row 0 | tau row 1 | v comp 0 | v comp 1]` unknowns on `k`.
    fn side_slots(&self, side: usize, k: usize, out: &mut Vec<Slot>) {
        let d = self.disc;
        let sd = d.sigma[side].element_dofs(k);
        for r in 0..2 {
            out.extend(sd.iter().map(|&g| Slot::Free(d.layout.sigma(side, r, g))));
        }
        let vd = d.disp[side].element_dofs(k);
        let nf = d.disp[side].num_free();
        for c in 0..2 {
            out.extend(vd.iter().map(|&g| match d.layout.disp(side, c, g) {
                Some(i) => Slot::Free(i),
                None => Slot::Fixed(self.dirichlet[side][g - nf][c]),
            }));
        }
    }

    fn build(&self, item: Item, values: bool) -> Result<Vec<LocalBlock>> {
        match item {
            Item::Bulk { side, k } => {
                let mut slots = Vec::new();
                self.side_slots(side, k, &mut slots);
                let (mat, rhs) = if values { self.bulk(side, k, slots.len())? } else { (Vec::new(), Vec::new()) };
                Ok(vec![LocalBlock { slots, mat, rhs }])
            }
            Item::Interface { k } => {
                let mut slots = Vec::new();
                self.side_slots(0, k, &mut slots);
                self.side_slots(1, k, &mut slots);
                let (mat, rhs) = if values {
                    self.interface(k, slots.len())?
                } else {
                    (Vec::new(), Vec::new())
                };
                Ok(vec![LocalBlock { slots, mat, rhs }])
            }
            Item::Penalty { side, k } => self.penalty(side, k),
        }
    }

    /// Calls `visit(w, rows, data, weights)` at each quadrature point of the bulk term on
    /// `(side, k)`: six residual rows over the local unknowns, `data` their targets.
    fn bulk_rows(&self, side: usize, k: usize, nl: usize, visit: &mut dyn FnMut(f64, &[f64], &[f64], &[f64])) -> Result<()> {
        let d = self.disc;
        let rule = d.geom.bulk_quadrature(&d.mesh, k, side, d.quad_degree);
        if rule.is_empty() {
            return Ok(());
        }
        let sb = d.sigma[side].eval_basis(&d.mesh, k, &rule.points)?;
        let vb = d.disp[side].eval_basis(&d.mesh, k, &rule.points)?;
        let (nb, nv) = (sb.n, vb.n);
        let (l, mu) = (self.material.lambda[side], self.material.mu[side]);
        let s = 0.5 / mu;
        let kappa = l / (2.0 * l + 2.0 * mu);
        let mut rows = vec![0.0; 6 * nl];
        let mut data = [0.0; 6];
        for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            rows.iter_mut().for_each(|v| *v = 0.0);
            // rows 0..4: (A tau - eps(v))[a][b] at 2a + b; rows 4, 5: div of tau rows
            for r in 0..2 {
                for j in 0..nb {
                    let psi = sb.vector[q * nb + j];
                    let col = r * nb + j;
                    rows[(2 * r) * nl + col] += s * psi[0];
                    rows[(2 * r + 1) * nl + col] += s * psi[1];
                    rows[col] -= s * kappa * psi[r];
                    rows[3 * nl + col] -= s * kappa * psi[r];
                    rows[(4 + r) * nl + col] = sb.div[q * nb + j];
                }
            }
            for c in 0..2 {
                for j in 0..nv {
                    let g = vb.grad[q * nv + j];
                    let col = 2 * nb + c * nv + j;
                    for b in 0..2 {
                        rows[(2 * c + b) * nl + col] -= 0.5 * g[b];
                        rows[(2 * b + c) * nl + col] -= 0.5 * g[b];
                    }
                }
            }
            if let Some(case) = self.case {
                let f = case.f(side, x);
                data[4] = -f[0];
                data[5] = -f[1];
            }
            visit(w, &rows, &data, &[1.0; 6]);
        }
        Ok(())
    }

    /// As [`Self::bulk_rows`] for the interface terms of `k`: eight rows (normal stress
    /// jump, displacement jump, tangential gradient jump) over the unknowns of both sides.
    fn interface_rows(&self, k: usize, nl: usize, visit: &mut dyn FnMut(f64, &[f64], &[f64], &[f64])) -> Result<()> {
        let d = self.disc;
        let rule = d.geom.interface_quadrature(&d.interface, k, d.quad_degree)?;
        if rule.is_empty() {
            return Ok(());
        }
        let h = d.h();
        let half = nl / 2;
        let sb = [0, 1].map(|i| d.sigma[i].eval_basis(&d.mesh, k, &rule.points));
        let vb = [0, 1].map(|i| d.disp[i].eval_basis(&d.mesh, k, &rule.points));
        let [sb0, sb1] = sb;
        let [vb0, vb1] = vb;
        let sb = [sb0?, sb1?];
        let vb = [vb0?, vb1?];
        let (nb, nv) = (sb[0].n, vb[0].n);
        let (ws, wu, wg) = (self.sigma_weight, 1.0 / h, h);
        let weights = [ws, ws, wu, wu, wg, wg, wg, wg];
        let mut rows = vec![0.0; 8 * nl];
        let mut data = [0.0; 8];
        for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let n = rule.normals[q];
            rows.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..2 {
                let sign = if i == 0 { 1.0 } else { -1.0 };
                let o = i * half;
                for r in 0..2 {
                    for j in 0..nb {
                        let psi = sb[i].vector[q * nb + j];
                        rows[r * nl + o + r * nb + j] = sign * (psi[0] * n[0] + psi[1] * n[1]);
                    }
                }
                for c in 0..2 {
                    for j in 0..nv {
                        let col = o + 2 * nb + c * nv + j;
                        let g = vb[i].grad[q * nv + j];
                        let gn = g[0] * n[0] + g[1] * n[1];
                        rows[(2 + c) * nl + col] = sign * vb[i].scalar[q * nv + j];
                        for b in 0..2 {
                            rows[(4 + 2 * c + b) * nl + col] = sign * (g[b] - gn * n[b]);
                        }
                    }
                }
            }
            if let Some(case) = self.case {
                let a = case.a(x, n);
                let b = case.b(x);
                let gb = case.grad_gamma_b(x, n);
                data = [a[0], a[1], b[0], b[1], gb[0][0], gb[0][1], gb[1][0], gb[1][1]];
            }
            visit(w, &rows, &data, &weights);
        }
        Ok(())
    }

    /// Local matrix and right-hand side of a family of residual rows.
    fn gram(&self, nl: usize, rows_of: impl FnOnce(&mut dyn FnMut(f64, &[f64], &[f64], &[f64])) -> Result<()>) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut mat = vec![0.0; nl * nl];
        let mut rhs = vec![0.0; nl];
        let mut nz = Vec::new();
        rows_of(&mut |w, rows, data, weights| {
            for (t, row) in rows.chunks(nl).enumerate() {
                let wt = w * weights[t];
                add_gram(&mut mat, nl, wt, row, &mut nz);
                if data[t] != 0.0 {
                    for (rv, v) in rhs.iter_mut().zip(row) {
                        *rv += wt * data[t] * v;
                    }
                }
            }
        })?;
        Ok((mat, rhs))
    }

    fn bulk(&self, side: usize, k: usize, nl: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.gram(nl, |v| self.bulk_rows(side, k, nl, v))
    }

    fn interface(&self, k: usize, nl: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.gram(nl, |v| self.interface_rows(k, nl, v))
    }

    /// Weighted sum of squared residuals of the bulk and interface terms at `x`.
    fn residual_sq(&self, item: Item, x: &[f64]) -> Result<f64> {
        let mut slots = Vec::new();
        let mut total = 0.0;
        let acc = |slots: &[Slot]| {
            let xl: Vec<f64> = slots
                .iter()
                .map(|s| match *s {
                    Slot::Free(i) => x[i],
                    Slot::Fixed(v) => v,
                })
                .collect();
            let nl = xl.len();
            move |w: f64, rows: &[f64], data: &[f64], weights: &[f64]| -> f64 {
                rows.chunks(nl)
                    .enumerate()
                    .map(|(t, row)| {
                        let r: f64 = row.iter().zip(&xl).map(|(a, b)| a * b).sum::<f64>() - data[t];
                        w * weights[t] * r * r
                    })
                    .sum()
            }
        };
        match item {
            Item::Bulk { side, k } => {
                self.side_slots(side, k, &mut slots);
                let f = acc(&slots);
                self.bulk_rows(side, k, slots.len(), &mut |w, r, d, wt| total += f(w, r, d, wt))?;
            }
            Item::Interface { k } => {
                self.side_slots(0, k, &mut slots);
                self.side_slots(1, k, &mut slots);
                let f = acc(&slots);
                self.interface_rows(k, slots.len(), &mut |w, r, d, wt| total += f(w, r, d, wt))?;
            }
            Item::Penalty { .. } => {}
        }
        Ok(total)
    }

    /// Contributions `(i, r_i)` of `item` to `b - A x`, summed from residual rows.
    fn residual_vec(&self, item: Item, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let d = self.disc;
        let value = |s: &Slot| match *s {
            Slot::Free(i) => x[i],
            Slot::Fixed(v) => v,
        };
        let mut slots = Vec::new();
        let mut out = Vec::new();
        let mut rows_residual = |slots: &[Slot], each: &dyn Fn(&mut dyn FnMut(f64, &[f64], &[f64], &[f64])) -> Result<()>| -> Result<()> {
            let xl: Vec<f64> = slots.iter().map(value).collect();
            let nl = xl.len();
            let mut acc = vec![0.0; nl];
            each(&mut |w, rows, data, weights| {
                for (t, row) in rows.chunks(nl).enumerate() {
                    let r = data[t] - row.iter().zip(&xl).map(|(a, b)| a * b).sum::<f64>();
                    let c = w * weights[t] * r;
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += c * v;
                    }
                }
            })?;
            for (s, v) in slots.iter().zip(acc) {
                if let Slot::Free(i) = *s {
                    out.push((i, v));
                }
            }
            Ok(())
        };
        match item {
            Item::Bulk { side, k } => {
                self.side_slots(side, k, &mut slots);
                let nl = slots.len();
                rows_residual(&slots, &|v| self.bulk_rows(side, k, nl, v))?;
            }
            Item::Interface { k } => {
                self.side_slots(0, k, &mut slots);
                self.side_slots(1, k, &mut slots);
                let nl = slots.len();
                rows_residual(&slots, &|v| self.interface_rows(k, nl, v))?;
            }
            Item::Penalty { side, k } => {
                let nf = d.disp[side].num_free();
                for r in 0..2 {
                    let (dofs, v) = penalty_residual(&d.mesh, &d.sigma[side], &d.geom, k, side, d.m, &|g| x[d.layout.sigma(side, r, g)])?;
                    out.extend(dofs.iter().map(|&g| d.layout.sigma(side, r, g)).zip(v));
                }
                for c in 0..2 {
                    let slot = |g: usize| match d.layout.disp(side, c, g) {
                        Some(i) => Slot::Free(i),
                        None => Slot::Fixed(self.dirichlet[side][g - nf][c]),
                    };
                    let (dofs, v) = penalty_residual(&d.mesh, &d.disp[side], &d.geom, k, side, d.m, &|g| value(&slot(g)))?;
                    for (g, r) in dofs.into_iter().zip(v) {
                        if let Slot::Free(i) = slot(g) {
                            out.push((i, r));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn penalty(&self, side: usize, k: usize) -> Result<Vec<LocalBlock>> {
        let d = self.disc;
        let (sd, smat) = penalty_block(&d.mesh, &d.sigma[side], &d.geom, k, side, d.m)?;
        let (vd, vmat) = penalty_block(&d.mesh, &d.disp[side], &d.geom, k, side, d.m)?;
        let nf = d.disp[side].num_free();
        let mut out = Vec::with_capacity(4);
        for r in 0..2 {
            out.push(LocalBlock {
                slots: sd.iter().map(|&g| Slot::Free(d.layout.sigma(side, r, g))).collect(),
                rhs: vec![0.0; sd.len()],
                mat: smat.clone(),
            });
        }
        for c in 0..2 {
            out.push(LocalBlock {
                slots: vd
                    .iter()
                    .map(|&g| match d.layout.disp(side, c, g) {
                        Some(i) => Slot::Free(i),
                        None => Slot::Fixed(self.dirichlet[side][g - nf][c]),
                    })
                    .collect(),
                rhs: vec![0.0; vd.len()],
                mat: vmat.clone(),
            });
        }
        Ok(out)
    }
}

fn assembler<'a>(
    disc: &'a Discretization,
    material: &'a Material<f64>,
    case: Option<&'a ManufacturedCase>,
    mode: Mode,
) -> Assembler<'a> {
    let dirichlet = match case {
        Some(c) => disc.dirichlet_values(c),
        None => [0, 1].map(|i| vec![[0.0; 2]; disc.disp[i].num_dirichlet()]),
    };
    Assembler {
        disc,
        material,
        case,
        sigma_weight: match mode {
            Mode::L2Method => 1.0,
            Mode::L2Part => disc.h(),
        },
        dirichlet,
    }
}

/// Matrix of the L2 method (`Mode::L2Method`) or of the L2 part of the minus-norm method.
pub fn assemble_l2_system(disc: &Discretization, material: &Material<f64>, mode: Mode) -> Result<SparseSym> {
    let a = assembler(disc, material, None, mode);
    let items = a.items();
    let (m, _) = assemble_blocks(disc.layout.len(), &items, true, &|it, v| a.build(it, v))?;
    Ok(m.expect("matrix requested"))
}

/// Right-hand side with the weights of the corresponding bilinear form; Dirichlet
/// data of the exact solution is lifted out of the bulk and penalty terms.
pub fn assemble_l2_rhs(disc: &Discretization, case: &ManufacturedCase, mode: Mode) -> Result<Vec<f64>> {
    let a = assembler(disc, &case.material, Some(case), mode);
    let items = a.items();
    Ok(assemble_blocks(disc.layout.len(), &items, false, &|it, v| a.build(it, v))?.1)
}

/// Matrix and right-hand side in one pass.
pub fn assemble_l2(disc: &Discretization, case: &ManufacturedCase, mode: Mode) -> Result<(SparseSym, Vec<f64>)> {
    let a = assembler(disc, &case.material, Some(case), mode);
    let items = a.items();
    let (m, rhs) = assemble_blocks(disc.layout.len(), &items, true, &|it, v| a.build(it, v))?;
    Ok((m.expect("matrix requested"), rhs))
}

/// The least-squares functional at `x` (free DOFs, Dirichlet values from `case`),
/// summed from residuals rather than from the assembled quadratic form.
pub fn functional_value(disc: &Discretization, case: &ManufacturedCase, x: &[f64], mode: Mode) -> Result<f64> {
    if x.len() != disc.layout.len() {
        return Err(Error::InvalidInput(format!("x has {} entries, expected {}", x.len(), disc.layout.len())));
    }
    let a = assembler(disc, &case.material, Some(case), mode);
    let items = a.items();
    let parts: Vec<f64> = items.par_iter().map(|&it| a.residual_sq(it, x)).collect::<Result<_>>()?;
    let mut total: f64 = parts.iter().sum();
    let fields = disc.split(x, &a.dirichlet);
    for side in 0..2 {
        for c in 0..2 {
            total += penalty_energy(&disc.mesh, &disc.sigma[side], &disc.geom, disc.m, side, &fields.sigma[side][c])?;
            total += penalty_energy(&disc.mesh, &disc.disp[side], &disc.geom, disc.m, side, &fields.disp[side][c])?;
        }
    }
    Ok(total)
}

/// `b - A x` of [`assemble_l2`], accumulated from the residuals of the least-squares
/// terms so that its rounding error does not carry the conditioning of `A`.
pub fn l2_residual(disc: &Discretization, case: &ManufacturedCase, x: &[f64], mode: Mode) -> Result<Vec<f64>> {
    if x.len() != disc.layout.len() {
        return Err(Error::InvalidInput(format!("x has {} entries, expected {}", x.len(), disc.layout.len())));
    }
    let a = assembler(disc, &case.material, Some(case), mode);
    let items = a.items();
    let mut r = vec![0.0; x.len()];
    for part in items.chunks(4096) {
        let contrib: Vec<Vec<(usize, f64)>> = part.par_iter().map(|&it| a.residual_vec(it, x)).collect::<Result<_>>()?;
        for (i, v) in contrib.into_iter().flatten() {
            r[i] += v;
        }
    }
    Ok(r)
}

/// `B`, `C` and the factorization of `B` of the discrete minus norm.
pub struct MinusNormOperator {
    /// Scalar P1 space on the elements covering Omega_0.
    pub space: FeSpace,
    pub b: SparseSym,
    /// Rows `comp * n + j` (component, P1 node), columns in the system layout.
    pub c: Csr,
    pub factor: Factorization,
}

impl std::fmt::Debug for MinusNormOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinusNormOperator")
            .field("n", &self.space.num_total())
            .field("c_nnz", &self.c.nnz())
            .finish()
    }
}

impl MinusNormOperator {
    /// Scalar dimension of `B`.
    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// `B^{-1}` applied to each component block of `g`.
    pub fn solve_b(&self, g: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = g.to_vec();
        for c in 0..2 {
            self.factor.solve_in_place(&mut out[c * n..(c + 1) * n]);
        }
        out
    }

    /// `C^T B^{-1} C x`.
    pub fn apply_coupling(&self, x: &[f64]) -> Vec<f64> {
        let g = self.c.matvec(x);
        self.c.matvec_t(&self.solve_b(&g))
    }

    /// `||v||_{-1/2,h}^2 = g^T B^{-1} g` from the interface moments `g` of `v`.
    pub fn minus_norm_sq(&self, g: &[f64]) -> f64 {
        let y = self.solve_b(g);
        g.iter().zip(&y).map(|(a, b)| a * b).sum()
    }
}

/// Builds `B` (H1 inner product on Omega_0 plus the P1 penalty) and the coupling `C`.
pub fn assemble_minus_norm(disc: &Discretization) -> Result<MinusNormOperator> {
    let d = disc;
    let cls = &d.geom.classification;
    let space = FeSpace::build(&d.mesh, cls.covered(0), Family::Lagrange, 1, false)?;
    let n = space.num_total();
    let mut blocks: Vec<(Vec<usize>, Vec<f64>)> = cls
        .covered(0)
        .par_iter()
        .map(|&k| -> Result<_> {
            let dofs = space.element_dofs(k).to_vec();
            let nl = dofs.len();
            let mut mat = vec![0.0; nl * nl];
            let rule = d.geom.bulk_quadrature(&d.mesh, k, 0, 4);
            if !rule.is_empty() {
                let b = space.eval_basis(&d.mesh, k, &rule.points)?;
                for (q, &w) in rule.weights.iter().enumerate() {
                    for i in 0..nl {
                        for j in 0..nl {
                            let (gi, gj) = (b.grad[q * nl + i], b.grad[q * nl + j]);
                            mat[i * nl + j] +=
                                w * (gi[0] * gj[0] + gi[1] * gj[1] + b.scalar[q * nl + i] * b.scalar[q * nl + j]);
                        }
                    }
                }
            }
            Ok((dofs, mat))
        })
        .collect::<Result<_>>()?;
    for &k in &cls.cut {
        blocks.push(penalty_block(&d.mesh, &space, &d.geom, k, 0, 1)?);
    }
    let mut rows = vec![Vec::new(); n];
    for (dofs, _) in &blocks {
        for &i in dofs {
            rows[i].extend(dofs.iter().filter(|&&j| j >= i).map(|&j| j as u32));
        }
    }
    let mut b = SparseSym::from_pattern(n, rows)?;
    for (dofs, mat) in &blocks {
        let nl = dofs.len();
        for (p, &i) in dofs.iter().enumerate() {
            for (q, &j) in dofs.iter().enumerate() {
                if j >= i {
                    b.add(i, j, mat[p * nl + q]);
                }
            }
        }
    }
    let mut trip = Vec::new();
    for &k in &cls.cut {
        let rule = d.geom.interface_quadrature(&d.interface, k, d.quad_degree)?;
        if rule.is_empty() {
            continue;
        }
        let pb = space.eval_basis(&d.mesh, k, &rule.points)?;
        let pd = space.element_dofs(k);
        for side in 0..2 {
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let sb = d.sigma[side].eval_basis(&d.mesh, k, &rule.points)?;
            let sd = d.sigma[side].element_dofs(k);
            for (q, &w) in rule.weights.iter().enumerate() {
                let nrm = rule.normals[q];
                for (j, &dj) in sd.iter().enumerate() {
                    let psi = sb.vector[q * sb.n + j];
                    let flux = sign * w * (psi[0] * nrm[0] + psi[1] * nrm[1]);
                    for (i, &di) in pd.iter().enumerate() {
                        let v = flux * pb.scalar[q * pb.n + i];
                        for r in 0..2 {
                            trip.push(((r * n + di) as u32, d.layout.sigma(side, r, dj) as u32, v));
                        }
                    }
                }
            }
        }
    }
    let c = Csr::from_triplets(2 * n, d.layout.len(), trip);
    let factor = factorize(&b).map_err(|e| e.at("minus-norm matrix B"))?;
    Ok(MinusNormOperator { space, b, c, factor })
}

/// Interface moments `int_Gamma v_c phi_j` of a vector function `v(x, n)`, laid out like the rows of `C`.
pub fn gamma_moments(disc: &Discretization, mno: &MinusNormOperator, v: &dyn Fn([f64; 2], [f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    let n = mno.dim();
    let mut g = vec![0.0; 2 * n];
    for &k in &disc.geom.classification.cut {
        let rule = disc.geom.interface_quadrature(&disc.interface, k, disc.quad_degree)?;
        if rule.is_empty() {
            continue;
        }
        let pb = mno.space.eval_basis(&disc.mesh, k, &rule.points)?;
        let pd = mno.space.element_dofs(k);
        for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let val = v(x, rule.normals[q]);
            for (i, &di) in pd.iter().enumerate() {
                let phi = pb.scalar[q * pb.n + i];
                g[di] += w * val[0] * phi;
                g[n + di] += w * val[1] * phi;
            }
        }
    }
    Ok(g)
}

/// `b - A x` of the minus-norm system: [`l2_residual`] of the L2 part plus
/// `C^T B^{-1} g`, with `g` the interface moments of `a - jump_N sigma_h` taken pointwise.
pub fn tilde_residual(disc: &Discretization, case: &ManufacturedCase, mno: &MinusNormOperator, x: &[f64]) -> Result<Vec<f64>> {
    let mut r = l2_residual(disc, case, x, Mode::L2Part)?;
    let n = mno.dim();
    let mut g = vec![0.0; 2 * n];
    for &k in &disc.geom.classification.cut {
        let rule = disc.geom.interface_quadrature(&disc.interface, k, disc.quad_degree)?;
        if rule.is_empty() {
            continue;
        }
        let pb = mno.space.eval_basis(&disc.mesh, k, &rule.points)?;
        let pd = mno.space.element_dofs(k);
        let sb = [0, 1].map(|i| disc.sigma[i].eval_basis(&disc.mesh, k, &rule.points));
        let [sb0, sb1] = sb;
        let sb = [sb0?, sb1?];
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let nrm = rule.normals[q];
            let mut val = case.a(p, nrm);
            for side in 0..2 {
                let sign = if side == 0 { 1.0 } else { -1.0 };
                for (j, &dj) in disc.sigma[side].element_dofs(k).iter().enumerate() {
                    let psi = sb[side].vector[q * sb[side].n + j];
                    let flux = sign * (psi[0] * nrm[0] + psi[1] * nrm[1]);
                    for (c, v) in val.iter_mut().enumerate() {
                        *v -= flux * x[disc.layout.sigma(side, c, dj)];
                    }
                }
            }
            for (i, &di) in pd.iter().enumerate() {
                let phi = pb.scalar[q * pb.n + i];
                g[di] += w * val[0] * phi;
                g[n + di] += w * val[1] * phi;
            }
        }
    }
    for (u, v) in r.iter_mut().zip(mno.c.matvec_t(&mno.solve_b(&g))) {
        *u += v;
    }
    Ok(r)
}

/// `A_{L2} x + C^T B^{-1} C x`.
pub fn apply_tilde(a: &SparseSym, mno: &MinusNormOperator, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.dim() || mno.c.ncols != a.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: x has {}, A has {}, C has {} columns",
            x.len(),
            a.dim(),
            mno.c.ncols
        )));
    }
    let mut y = a.apply(x);
    for (u, v) in y.iter_mut().zip(mno.apply_coupling(x)) {
        *u += v;
    }
    Ok(y)
}

/// Right-hand side of the minus-norm method: the L2-part data terms plus `C^T B^{-1} g_a`.
pub fn assemble_tilde_rhs(disc: &Discretization, case: &ManufacturedCase, mno: &MinusNormOperator) -> Result<Vec<f64>> {
    let mut rhs = assemble_l2_rhs(disc, case, Mode::L2Part)?;
    add_minus_norm_data(disc, case, mno, &mut rhs)?;
    Ok(rhs)
}

/// Adds `C^T B^{-1} g_a` to `rhs`.
pub fn add_minus_norm_data(disc: &Discretization, case: &ManufacturedCase, mno: &MinusNormOperator, rhs: &mut [f64]) -> Result<()> {
    let g = gamma_moments(disc, mno, &|x, n| case.a(x, n))?;
    if g.iter().all(|&v| v == 0.0) {
        return Ok(());
    }
    let t = mno.c.matvec_t(&mno.solve_b(&g));
    for (r, v) in rhs.iter_mut().zip(t) {
        *r += v;
    }
    Ok(())
}
