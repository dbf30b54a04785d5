//! Solves, error norms, observed orders, experiment configuration and CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::assembly::{
    add_minus_norm_data, apply_tilde, assemble_l2, assemble_l2_system, assemble_minus_norm, l2_residual, tilde_residual,
    Discretization, FieldSet, Mode,
};
use crate::cutfem_geom::{AssumptionPolicy, DEFAULT_N_SUB};
use crate::elasticity::{ManufacturedCase, Material};
use crate::error::{Error, Result};
use crate::linalg::{extreme_eigs, factorize, pcg_solve};
use crate::mesh::{Mesh, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    L2,
    Minus,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::L2 => "l2",
            Method::Minus => "minus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Method::L2),
            "minus" => Ok(Method::Minus),
            _ => Err(Error::Config(format!("unknown method '{s}', expected l2 or minus"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    L2,
    Minus,
    #[default]
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::L2 => vec![Method::L2],
            MethodChoice::Minus => vec![Method::Minus],
            MethodChoice::Both => vec![Method::L2, Method::Minus],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumptions {
    #[default]
    Strict,
    Relaxed,
}

impl From<Assumptions> for AssumptionPolicy {
    fn from(a: Assumptions) -> Self {
        match a {
            Assumptions::Strict => AssumptionPolicy::Strict,
            Assumptions::Relaxed => AssumptionPolicy::Relaxed,
        }
    }
}

/// Mesh size label `h`: the cell side of the uniform mesh of `(-1, 1)^2`.
///
/// Written in JSON as a number or as a fraction string such as `"1/20"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct MeshSize(pub f64);

impl MeshSize {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let v = match s.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| Error::Config(format!("bad mesh size '{s}'")))?;
                let b: f64 = b.trim().parse().map_err(|_| Error::Config(format!("bad mesh size '{s}'")))?;
                a / b
            }
            None => s.parse().map_err(|_| Error::Config(format!("bad mesh size '{s}'")))?,
        };
        Ok(MeshSize(v))
    }

    /// Cells per side, `2 / h`, which must be a whole number.
    pub fn cells(self) -> Result<usize> {
        let n = 2.0 / self.0;
        if !(self.0 > 0.0) || !n.is_finite() || (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
            return Err(Error::Config(format!("mesh size {} does not divide the side length 2", self.0)));
        }
        Ok(n.round() as usize)
    }

    /// `1/N` when `1/h` is a whole number, the decimal value otherwise.
    pub fn label(self) -> String {
        let inv = 1.0 / self.0;
        if (inv - inv.round()).abs() < 1e-9 * inv {
            format!("1/{}", inv.round() as u64)
        } else {
            format!("{}", self.0)
        }
    }
}

impl Serialize for MeshSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for MeshSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(MeshSize(v)),
            Raw::Text(t) => MeshSize::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialOverride {
    pub lambda: [f64; 2],
    pub mu: [f64; 2],
}

fn default_tol() -> f64 {
    1e-10
}

fn default_n_sub() -> usize {
    DEFAULT_N_SUB
}

/// One JSON experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: String,
    #[serde(default)]
    pub method: MethodChoice,
    pub degrees: Vec<usize>,
    pub mesh_sizes: Vec<MeshSize>,
    #[serde(default)]
    pub material: Option<MaterialOverride>,
    /// Polyline pieces per element for curved interfaces.
    #[serde(default = "default_n_sub")]
    pub n_sub: usize,
    /// Quadrature degree; `2m + 2` when absent.
    #[serde(default)]
    pub quad_degree: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// CG iteration cap; `10 N` when absent.
    #[serde(default)]
    pub maxit: Option<usize>,
    /// Estimate the condition number of the L2-method matrix for every run.
    #[serde(default)]
    pub condition: bool,
    /// Interface translation in multiples of `h`.
    #[serde(default)]
    pub interface_shift: [f64; 2],
    #[serde(default)]
    pub assumptions: Assumptions,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() || self.degrees.iter().any(|&m| !(1..=3).contains(&m)) {
            return Err(Error::Config(format!("degrees must be a non-empty subset of 1..=3, got {:?}", self.degrees)));
        }
        if self.mesh_sizes.is_empty() {
            return Err(Error::Config("mesh_sizes is empty".into()));
        }
        for h in &self.mesh_sizes {
            h.cells()?;
        }
        if self.mesh_sizes.windows(2).any(|w| w[1].0 >= w[0].0) {
            return Err(Error::Config("mesh_sizes must be strictly decreasing".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.n_sub == 0 {
            return Err(Error::Config("n_sub must be positive".into()));
        }
        self.manufactured_case()?;
        Ok(())
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase> {
        let material = match self.material {
            Some(o) => Material::new(o.lambda[0], o.lambda[1], o.mu[0], o.mu[1]).map_err(|e| Error::Config(e.to_string()))?,
            None => ManufacturedCase::default_material(&self.case)?,
        };
        ManufacturedCase::new(&self.case, material)
    }
}

/// L2 errors of the pieces of the energy norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub u_l2: f64,
    pub sigma_l2: f64,
    pub div_l2: f64,
    pub grad_l2: f64,
    /// `(|sigma|^2 + |div sigma|^2 + |u|^2 + |grad u|^2)^{1/2}` of the error.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub case: String,
    pub method: Method,
    pub m: usize,
    pub h: f64,
    pub errors: ErrorNorms,
    pub iterations: usize,
    pub kappa: Option<f64>,
}

/// Errors of a discrete solution over `Omega_0 ∪ Omega_1`.
pub fn compute_errors(disc: &Discretization, case: &ManufacturedCase, fields: &FieldSet) -> Result<ErrorNorms> {
    let deg = disc.quad_degree.max(2 * disc.m + 2);
    let (mut eu, mut es, mut ed, mut eg) = (0.0, 0.0, 0.0, 0.0);
    for side in 0..2 {
        let (ss, vs) = (&disc.sigma[side], &disc.disp[side]);
        for &k in disc.geom.classification.covered(side) {
            let rule = disc.geom.bulk_quadrature(&disc.mesh, k, side, deg);
            if rule.is_empty() {
                continue;
            }
            let sb = ss.eval_basis(&disc.mesh, k, &rule.points)?;
            let vb = vs.eval_basis(&disc.mesh, k, &rule.points)?;
            let (sd, vd) = (ss.element_dofs(k), vs.element_dofs(k));
            for (q, (&x, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let sigma = case.sigma(side, x);
                let dsig = case.div_sigma(side, x);
                let u = case.u(side, x);
                let gu = case.grad_u(side, x);
                for r in 0..2 {
                    let c = &fields.sigma[side][r];
                    let (mut v, mut dv) = ([0.0; 2], 0.0);
                    for (j, &g) in sd.iter().enumerate() {
                        let psi = sb.vector[q * sb.n + j];
                        v[0] += c[g] * psi[0];
                        v[1] += c[g] * psi[1];
                        dv += c[g] * sb.div[q * sb.n + j];
                    }
                    es += w * ((sigma[r][0] - v[0]).powi(2) + (sigma[r][1] - v[1]).powi(2));
                    ed += w * (dsig[r] - dv).powi(2);
                    let c = &fields.disp[side][r];
                    let (mut uv, mut gv) = (0.0, [0.0; 2]);
                    for (j, &g) in vd.iter().enumerate() {
                        uv += c[g] * vb.scalar[q * vb.n + j];
                        let gr = vb.grad[q * vb.n + j];
                        gv[0] += c[g] * gr[0];
                        gv[1] += c[g] * gr[1];
                    }
                    eu += w * (u[r] - uv).powi(2);
                    eg += w * ((gu[r][0] - gv[0]).powi(2) + (gu[r][1] - gv[1]).powi(2));
                }
            }
        }
    }
    let out = ErrorNorms {
        u_l2: eu.sqrt(),
        sigma_l2: es.sqrt(),
        div_l2: ed.sqrt(),
        grad_l2: eg.sqrt(),
        energy: (eu + es + ed + eg).sqrt(),
    };
    if ![out.u_l2, out.sigma_l2, out.div_l2, out.grad_l2].iter().all(|v| v.is_finite()) {
        return Err(Error::Breakdown("non-finite error norm".into()));
    }
    Ok(out)
}

/// Discrete solution and solver statistics.
#[derive(Clone, Debug)]
pub struct Solved {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves either method by CG preconditioned with a sparse Cholesky factorization:
/// of the L2-method matrix itself, or of the L2 part for the minus-norm method.
pub fn solve(disc: &Discretization, case: &ManufacturedCase, method: Method, tol: f64, maxit: Option<usize>) -> Result<Solved> {
    let n = disc.layout.len();
    let maxit = maxit.unwrap_or(10 * n);
    let mode = match method {
        Method::L2 => Mode::L2Method,
        Method::Minus => Mode::L2Part,
    };
    let (a, mut rhs) = assemble_l2(disc, case, mode).map_err(|e| e.at("assembly"))?;
    let mno = match method {
        Method::L2 => None,
        Method::Minus => {
            let mno = assemble_minus_norm(disc).map_err(|e| e.at("minus-norm operator"))?;
            add_minus_norm_data(disc, case, &mno, &mut rhs).map_err(|e| e.at("assembly"))?;
            Some(mno)
        }
    };
    let factor = factorize(&a).map_err(|e| e.at("factorization"))?;
    let mut op = |x: &[f64], y: &mut [f64]| -> Result<()> {
        match &mno {
            None => a.matvec(x, y),
            Some(mno) => y.copy_from_slice(&apply_tilde(&a, mno, x)?),
        }
        Ok(())
    };
    let mut pre = |x: &[f64], y: &mut [f64]| -> Result<()> {
        y.copy_from_slice(x);
        factor.solve_in_place(y);
        Ok(())
    };
    let res = pcg_solve(&mut op, &mut pre, &rhs, tol, maxit).map_err(|e| e.at("solve"))?;
    if !res.converged {
        return Err(Error::NotConverged {
            iterations: res.iterations,
            residual: res.residual,
        }
        .at("solve"));
    }
    let mut x = res.x;
    let mut iterations = res.iterations;
    // one correction against the residual of the least-squares terms
    let r = match &mno {
        None => l2_residual(disc, case, &x, mode),
        Some(mno) => tilde_residual(disc, case, mno, &x),
    }
    .map_err(|e| e.at("solve"))?;
    // the correction is small against x, so a loose relative tolerance keeps full accuracy
    let fix = pcg_solve(&mut op, &mut pre, &r, tol.max(1e-6), maxit).map_err(|e| e.at("solve"))?;
    if fix.converged {
        iterations += fix.iterations;
        for (u, d) in x.iter_mut().zip(&fix.x) {
            *u += d;
        }
    }
    Ok(Solved {
        x,
        iterations,
        residual: res.residual,
    })
}

/// `lambda_max / lambda_min` of the L2-method matrix on the free DOFs.
pub fn condition_number(disc: &Discretization, material: &Material<f64>) -> Result<f64> {
    let a = assemble_l2_system(disc, material, Mode::L2Method)?;
    let f = factorize(&a)?;
    let (hi, lo) = extreme_eigs(
        &mut |x, y| {
            a.matvec(x, y);
            Ok(())
        },
        &mut |x, y| {
            y.copy_from_slice(x);
            f.solve_in_place(y);
            Ok(())
        },
        a.dim(),
        20_000,
        1e-6,
    )?;
    Ok(hi / lo)
}

pub fn uniform_mesh(h: MeshSize) -> Result<Mesh<f64>> {
    Mesh::build_uniform(Rect::new(-1.0, 1.0, -1.0, 1.0), h.cells()?)
}

/// One `(m, h, method)` run of a configuration.
pub fn run_single(cfg: &ExperimentConfig, case: &ManufacturedCase, m: usize, h: MeshSize, method: Method) -> Result<ErrorReport> {
    let mesh = uniform_mesh(h).map_err(|e| e.at("mesh"))?;
    let shift = [cfg.interface_shift[0] * h.0, cfg.interface_shift[1] * h.0];
    let iface = case.interface.translated(shift);
    let mut disc = Discretization::new(mesh, iface, m, cfg.n_sub, cfg.assumptions.into()).map_err(|e| e.at("discretization"))?;
    if let Some(q) = cfg.quad_degree {
        disc.quad_degree = q;
    }
    let sol = solve(&disc, case, method, cfg.tol, cfg.maxit)?;
    let fields = disc.split(&sol.x, &disc.dirichlet_values(case));
    let errors = compute_errors(&disc, case, &fields).map_err(|e| e.at("errors"))?;
    let kappa = if cfg.condition {
        Some(condition_number(&disc, &case.material).map_err(|e| e.at("condition number"))?)
    } else {
        None
    };
    Ok(ErrorReport {
        case: case.name.clone(),
        method,
        m,
        h: h.0,
        errors,
        iterations: sol.iterations,
        kappa,
    })
}

/// Every `(method, m, h)` combination, methods outermost.
pub fn run_experiment(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&ErrorReport)) -> Result<Vec<ErrorReport>> {
    cfg.validate()?;
    let case = cfg.manufactured_case()?;
    let mut out = Vec::new();
    for method in cfg.method.methods() {
        for &m in &cfg.degrees {
            for &h in &cfg.mesh_sizes {
                let r = run_single(cfg, &case, m, h, method)?;
                progress(&r);
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// Observed order, or `Saturated` when an error is exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Order {
    Rate(f64),
    Saturated,
}

impl Order {
    pub fn rate(self) -> Option<f64> {
        match self {
            Order::Rate(r) => Some(r),
            Order::Saturated => None,
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Rate(r) => write!(f, "{r:.2}"),
            Order::Saturated => write!(f, "saturated"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orders {
    /// Between consecutive rows.
    pub pairwise: Vec<Order>,
    /// Slope of the least-squares line through `(log h, log err)`.
    pub least_squares: Order,
}

pub fn convergence_orders(rows: &[(f64, f64)]) -> Result<Orders> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput("at least two rows are needed for an order".into()));
    }
    if rows.windows(2).any(|w| !(w[1].0 < w[0].0)) || rows.iter().any(|r| !(r.0 > 0.0)) {
        return Err(Error::InvalidInput("mesh sizes must be positive and strictly decreasing".into()));
    }
    if rows.iter().any(|r| !(r.1 >= 0.0) || !r.1.is_finite()) {
        return Err(Error::InvalidInput("errors must be finite and non-negative".into()));
    }
    let pairwise = rows
        .windows(2)
        .map(|w| {
            if w[0].1 == 0.0 || w[1].1 == 0.0 {
                Order::Saturated
            } else {
                Order::Rate((w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
            }
        })
        .collect();
    let least_squares = if rows.iter().any(|r| r.1 == 0.0) {
        Order::Saturated
    } else {
        let n = rows.len() as f64;
        let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Order::Rate(sxy / sxx)
    };
    Ok(Orders { pairwise, least_squares })
}

pub const CSV_HEADER: &str = "case,method,m,h,u_l2,sigma_l2,energy,iters,kappa";

/// Least-squares orders of one `(case, method, m)` group.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderRow {
    pub case: String,
    pub method: Method,
    pub m: usize,
    pub u_l2: Order,
    pub sigma_l2: Order,
    pub energy: Order,
    /// Slope of `log kappa` against `log h`, when every run has one.
    pub kappa: Option<Order>,
}

/// Groups runs by `(case, method, m)` in first-appearance order and fits orders.
pub fn order_rows(reports: &[ErrorReport]) -> Result<Vec<OrderRow>> {
    let mut keys: Vec<(String, Method, usize)> = Vec::new();
    for r in reports {
        let key = (r.case.clone(), r.method, r.m);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = Vec::new();
    for (case, method, m) in keys {
        let mut group: Vec<&ErrorReport> = reports.iter().filter(|r| r.case == case && r.method == method && r.m == m).collect();
        group.sort_by(|a, b| b.h.total_cmp(&a.h));
        if group.len() < 2 {
            continue;
        }
        let fit = |f: &dyn Fn(&ErrorReport) -> f64| -> Result<Order> {
            let rows: Vec<(f64, f64)> = group.iter().map(|r| (r.h, f(r))).collect();
            Ok(convergence_orders(&rows)?.least_squares)
        };
        let kappa = if group.iter().all(|r| r.kappa.is_some()) {
            Some(fit(&|r| r.kappa.unwrap())?)
        } else {
            None
        };
        out.push(OrderRow {
            u_l2: fit(&|r| r.errors.u_l2)?,
            sigma_l2: fit(&|r| r.errors.sigma_l2)?,
            energy: fit(&|r| r.errors.energy)?,
            kappa,
            case,
            method,
            m,
        });
    }
    Ok(out)
}

/// Data rows, then one `order` row per group with least-squares orders in the error columns.
pub fn to_csv(reports: &[ErrorReport]) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for r in reports {
        writeln!(
            s,
            "{},{},{},{},{:.6e},{:.6e},{:.6e},{},{}",
            r.case,
            r.method.name(),
            r.m,
            MeshSize(r.h).label(),
            r.errors.u_l2,
            r.errors.sigma_l2,
            r.errors.energy,
            r.iterations,
            r.kappa.map(|k| format!("{k:.6e}")).unwrap_or_default()
        )
        .unwrap();
    }
    for o in order_rows(reports)? {
        writeln!(
            s,
            "{},{},{},order,{},{},{},,{}",
            o.case,
            o.method.name(),
            o.m,
            o.u_l2,
            o.sigma_l2,
            o.energy,
            o.kappa.map(|k| k.to_string()).unwrap_or_default()
        )
        .unwrap();
    }
    Ok(s)
}

/// Reads the data rows of a CSV written by [`to_csv`]; order rows are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<ErrorReport>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Config(format!("missing CSV header '{CSV_HEADER}'"))),
    }
    let num = |s: &str, what: &str, line: usize| -> Result<f64> {
        s.trim().parse().map_err(|_| Error::Config(format!("line {line}: bad {what} '{s}'")))
    };
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Config(format!("line {lineno}: expected 9 fields, found {}", f.len())));
        }
        if f[3] == "order" {
            continue;
        }
        let u_l2 = num(f[4], "u_l2", lineno)?;
        let sigma_l2 = num(f[5], "sigma_l2", lineno)?;
        let energy = num(f[6], "energy", lineno)?;
        out.push(ErrorReport {
            case: f[0].to_string(),
            method: Method::parse(f[1])?,
            m: f[2].parse().map_err(|_| Error::Config(format!("line {lineno}: bad degree '{}'", f[2])))?,
            h: MeshSize::parse(f[3])?.0,
            errors: ErrorNorms {
                u_l2,
                sigma_l2,
                energy,
                ..Default::default()
            },
            iterations: f[7].parse().map_err(|_| Error::Config(format!("line {lineno}: bad iteration count '{}'", f[7])))?,
            kappa: if f[8].is_empty() { None } else { Some(num(f[8], "kappa", lineno)?) },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_order_of_two_rows() {
        let o = convergence_orders(&[(0.2, 1e-1), (0.1, 2.5e-2)]).unwrap();
        assert!((o.pairwise[0].rate().unwrap() - 2.0).abs() < 1e-12);
        assert!((o.least_squares.rate().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_errors_have_order_zero() {
        let o = convergence_orders(&[(0.2, 0.3), (0.1, 0.3), (0.05, 0.3)]).unwrap();
        assert!(o.least_squares.rate().unwrap().abs() < 1e-12);
    }

    #[test]
    fn tabulated_row_fits_order_two() {
        let o = convergence_orders(&[(0.2, 1.86e-1), (0.1, 4.76e-2), (0.05, 1.19e-2), (0.025, 2.98e-3)]).unwrap();
        assert!((o.least_squares.rate().unwrap() - 1.99).abs() < 0.01);
    }

    #[test]
    fn zero_error_is_saturated() {
        let o = convergence_orders(&[(0.2, 1e-3), (0.1, 0.0)]).unwrap();
        assert_eq!(o.pairwise[0], Order::Saturated);
        assert_eq!(o.least_squares, Order::Saturated);
        assert!(convergence_orders(&[(0.2, 1.0)]).is_err());
        assert!(convergence_orders(&[(0.1, 1.0), (0.2, 1.0)]).is_err());
    }

    #[test]
    fn mesh_size_labels() {
        assert_eq!(MeshSize::parse("1/20").unwrap().cells().unwrap(), 40);
        assert_eq!(MeshSize(0.2).label(), "1/5");
        assert_eq!(MeshSize(0.2).cells().unwrap(), 10);
        assert!(MeshSize(0.3).cells().is_err());
        assert!(MeshSize::parse("x").is_err());
    }

    #[test]
    fn config_parsing_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"case":"ex1","method":"l2","degrees":[1],"mesh_sizes":["1/5",0.1]}"#).unwrap();
        assert_eq!(cfg.mesh_sizes, vec![MeshSize(0.2), MeshSize(0.1)]);
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.method.methods(), vec![Method::L2]);
        for bad in [
            r#"{"case":"ex1","degrees":[1],"mesh_sizes":[0.1,0.2]}"#,
            r#"{"case":"ex1","degrees":[4],"mesh_sizes":[0.2]}"#,
            r#"{"case":"ex9","degrees":[1],"mesh_sizes":[0.2]}"#,
            r#"{"case":"ex1","degrees":[1],"mesh_sizes":[0.2],"colour":1}"#,
            r#"{"case":"ex1","degrees":[1],"mesh_sizes":[0.2],"material":{"lambda":[-1,1],"mu":[1,1]}}"#,
        ] {
            let e = ExperimentConfig::from_json(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}: {e}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let mk = |h: f64, e: f64| ErrorReport {
            case: "ex1".into(),
            method: Method::Minus,
            m: 1,
            h,
            errors: ErrorNorms {
                u_l2: e * e,
                sigma_l2: e,
                energy: e,
                ..Default::default()
            },
            iterations: 3,
            kappa: None,
        };
        let reports = vec![mk(0.2, 0.1), mk(0.1, 0.05)];
        let text = to_csv(&reports).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.contains("ex1,minus,1,order,2.00,1.00,1.00,,"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].h, 0.1);
        assert!((back[0].errors.u_l2 - 0.01).abs() < 1e-12);
    }
}
