//! Acceptance criteria 1-9: one PASS/FAIL line each; exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

use unfitted_lsfem::assembly::{
    apply_tilde, assemble_l2_system, assemble_minus_norm, functional_value, gamma_moments, Discretization, Mode,
};
use unfitted_lsfem::cutfem_geom::{AssumptionPolicy, CutGeometry};
use unfitted_lsfem::elasticity::ManufacturedCase;
use unfitted_lsfem::fem_spaces::{monomial_exponents, Family, FeSpace};
use unfitted_lsfem::ghost_penalty::{assemble_penalty, min_eigenvalue, penalty_energy};
use unfitted_lsfem::interface::Interface;
use unfitted_lsfem::study::{
    compute_errors, condition_number, convergence_orders, order_rows, run_experiment, solve, uniform_mesh, ErrorReport,
    ExperimentConfig, MeshSize, Method, Order,
};
use unfitted_lsfem::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

struct Check {
    pass: bool,
    lines: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { pass: true, lines: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if !ok {
            self.pass = false;
        }
        self.lines.push(format!("{}{what}", if ok { "" } else { "[out] " }));
    }

    fn done(self) -> Outcome {
        Outcome {
            pass: self.pass,
            detail: self.lines.join("; "),
        }
    }
}

fn run(json: &str) -> Result<Vec<ErrorReport>> {
    run_experiment(&ExperimentConfig::from_json(json)?, &mut |_| {})
}

fn band(c: &mut Check, label: &str, o: Order, lo: f64, hi: f64) {
    match o.rate() {
        Some(r) => c.expect((lo..=hi).contains(&r), format!("{label} {r:.2} in [{lo}, {hi}]")),
        None => c.expect(false, format!("{label} saturated")),
    }
}

/// Order bands per `(m, column)`: u, sigma, energy.
fn orders_in_bands(c: &mut Check, reports: &[ErrorReport], bands: &dyn Fn(usize) -> [(f64, f64); 3]) -> Result<()> {
    for o in order_rows(reports)? {
        let b = bands(o.m);
        let tag = format!("{} {} m={}", o.case, o.method.name(), o.m);
        band(c, &format!("{tag} u"), o.u_l2, b[0].0, b[0].1);
        band(c, &format!("{tag} sigma"), o.sigma_l2, b[1].0, b[1].1);
        band(c, &format!("{tag} energy"), o.energy, b[2].0, b[2].1);
    }
    Ok(())
}

fn smooth_bands(m: usize) -> [(f64, f64); 3] {
    match m {
        1 => [(1.8, 2.2), (0.85, 1.15), (0.85, 1.15)],
        _ => [(2.8, 3.2), (1.8, 2.2), (1.8, 2.2)],
    }
}

fn criterion1(ex1: &[ErrorReport], secs: f64) -> Result<Outcome> {
    let mut c = Check::new();
    orders_in_bands(&mut c, ex1, &smooth_bands)?;
    c.expect(secs < 300.0, format!("runtime {secs:.0} s < 300 s"));
    Ok(c.done())
}

fn criterion2(ex1: &[ErrorReport]) -> Result<Outcome> {
    let mut c = Check::new();
    let mut worst: (f64, String) = (0.0, String::new());
    for r in ex1.iter().filter(|r| r.method == Method::Minus) {
        let l2 = ex1
            .iter()
            .find(|q| q.method == Method::L2 && q.m == r.m && q.h == r.h)
            .expect("matching L2 run");
        for (name, a, b) in [
            ("u", r.errors.u_l2, l2.errors.u_l2),
            ("sigma", r.errors.sigma_l2, l2.errors.sigma_l2),
            ("energy", r.errors.energy, l2.errors.energy),
        ] {
            let d = (a - b).abs() / b;
            if d > worst.0 {
                worst = (d, format!("{name} m={} h={}", r.m, MeshSize(r.h).label()));
            }
        }
    }
    c.expect(worst.0 < 0.15, format!("largest relative difference {:.2}% ({}) < 15%", 100.0 * worst.0, worst.1));
    Ok(c.done())
}

fn criterion3() -> Result<Outcome> {
    let mut c = Check::new();
    let cfg = |l: f64| {
        format!(r#"{{"case": "ex2", "degrees": [1], "mesh_sizes": ["1/10"], "material": {{"lambda": [{l}, 1], "mu": [1, 1]}}}}"#)
    };
    let (a, b) = (run(&cfg(100.0))?, run(&cfg(10000.0))?);
    for (x, y) in a.iter().zip(&b) {
        for (name, p, q) in [
            ("u", x.errors.u_l2, y.errors.u_l2),
            ("sigma", x.errors.sigma_l2, y.errors.sigma_l2),
            ("energy", x.errors.energy, y.errors.energy),
        ] {
            let d = (p - q).abs() / p.min(q);
            c.expect(d < 0.05, format!("{} {name} {:.3}%", x.method.name(), 100.0 * d));
        }
    }
    Ok(c.done())
}

fn strict_check(iface: &Interface<f64>, h: f64) -> std::result::Result<(), String> {
    let mesh = uniform_mesh(MeshSize(h)).map_err(|e| e.to_string())?;
    CutGeometry::with_policy(&mesh, iface, 8, AssumptionPolicy::Strict)
        .map(|_| ())
        .map_err(|e| e.to_string())
}

fn criterion4() -> Result<Outcome> {
    let mut c = Check::new();
    for (case, iface) in [("ex3", Interface::star()), ("ex4", Interface::lshape())] {
        for h in [0.1, 0.05, 0.025] {
            let label = MeshSize(h).label();
            match strict_check(&iface, h) {
                Ok(()) => c.expect(true, format!("{case} assumptions hold at h={label}")),
                Err(e) => c.expect(false, format!("{case} h={label}: {e}")),
            }
        }
    }
    match strict_check(&Interface::star(), 0.2) {
        Ok(()) => c.expect(true, "ex3 accepted at h=1/5".into()),
        Err(e) => c.expect(e.contains("assumption"), "ex3 refused at h=1/5 with a diagnostic (allowed)".into()),
    }
    // the star is measured from h = 1/10, with violations recorded rather than refused
    let star = run(r#"{"case": "ex3", "degrees": [1], "mesh_sizes": ["1/10", "1/20", "1/40"], "assumptions": "relaxed"}"#)?;
    orders_in_bands(&mut c, &star, &smooth_bands)?;
    let lshape = run(r#"{"case": "ex4", "degrees": [1], "mesh_sizes": ["1/5", "1/10", "1/20", "1/40"]}"#)?;
    orders_in_bands(&mut c, &lshape, &smooth_bands)?;
    Ok(c.done())
}

fn criterion5() -> Result<Outcome> {
    let mut c = Check::new();
    let t = Instant::now();
    let r = run(r#"{"case": "ex5", "method": "minus", "degrees": [1], "mesh_sizes": ["1/20", "1/40", "1/80", "1/160"]}"#)?;
    let secs = t.elapsed().as_secs_f64();
    orders_in_bands(&mut c, &r, &|_| [(1.15, 1.50), (0.40, 0.60), (0.40, 0.62)])?;
    c.expect(secs < 900.0, format!("runtime {secs:.0} s < 900 s"));
    Ok(c.done())
}

fn kappa_slope(shift: [f64; 2]) -> Result<(f64, Vec<f64>)> {
    let case = ManufacturedCase::by_name("ex1")?;
    let mut rows = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let iface = case.interface.translated([shift[0] * h, shift[1] * h]);
        // a shifted circle can cross an edge twice at h = 1/5; that is recorded, not refused
        let policy = if shift == [0.0, 0.0] {
            AssumptionPolicy::Strict
        } else {
            AssumptionPolicy::Relaxed
        };
        let disc = Discretization::new(uniform_mesh(MeshSize(h))?, iface, 1, 8, policy)?;
        rows.push((h, condition_number(&disc, &case.material)?));
    }
    let slope = convergence_orders(&rows)?.least_squares.rate().unwrap_or(f64::NAN);
    Ok((slope, rows.iter().map(|r| r.1).collect()))
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn criterion6() -> Result<Outcome> {
    let mut c = Check::new();
    let (s0, k0) = kappa_slope([0.0, 0.0])?;
    let (s1, k1) = kappa_slope([1.0 / 7.0, 1.0 / 13.0])?;
    c.expect((-2.4..=-1.6).contains(&s0), format!("slope {s0:.2} in [-2.4, -1.6] (kappa {})", sci(&k0)));
    let change = (s1 - s0).abs() / s0.abs();
    c.expect(
        change < 0.10,
        format!("shifted slope {s1:.2} (kappa {}), change {:.1}% < 10%", sci(&k1), 100.0 * change),
    );
    Ok(c.done())
}

fn criterion7() -> Result<Outcome> {
    let mut c = Check::new();
    let case = ManufacturedCase::by_name("patch")?;
    for m in [1, 2] {
        for h in [0.2, 0.1] {
            let d = Discretization::new(uniform_mesh(MeshSize(h))?, case.interface.clone(), m, 8, AssumptionPolicy::Strict)?;
            for method in [Method::L2, Method::Minus] {
                let s = solve(&d, &case, method, 1e-12, None)?;
                let e = compute_errors(&d, &case, &d.split(&s.x, &d.dirichlet_values(&case)))?;
                let worst = [e.u_l2, e.sigma_l2, e.div_l2, e.grad_l2, e.energy].into_iter().fold(0.0, f64::max);
                c.expect(
                    worst <= 1e-9,
                    format!("{} m={m} h={}: max error {worst:.1e}", method.name(), MeshSize(h).label()),
                );
            }
            let j = functional_value(&d, &case, &d.interpolate(&case), Mode::L2Method)?;
            c.expect(j <= 1e-18, format!("functional at the interpolant {j:.1e}"));
        }
    }
    Ok(c.done())
}

fn criterion8() -> Result<Outcome> {
    let mut c = Check::new();
    let case = ManufacturedCase::by_name("ex1")?;
    let d = Discretization::new(uniform_mesh(MeshSize(0.2))?, case.interface.clone(), 1, 8, AssumptionPolicy::Strict)?;
    let a = assemble_l2_system(&d, &case.material, Mode::L2Part)?;
    let mno = assemble_minus_norm(&d)?;
    let (n, nb) = (a.dim(), mno.dim());
    let bd = mno.b.to_dense();
    let binv = DMatrix::from_fn(nb, nb, |i, j| bd[i][j]).try_inverse().expect("B is invertible");
    let mut cm = DMatrix::zeros(2 * nb, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        for (i, v) in mno.c.matvec(&e).into_iter().enumerate() {
            cm[(i, j)] = v;
        }
        e[j] = 0.0;
    }
    let mut bi = DMatrix::zeros(2 * nb, 2 * nb);
    for comp in 0..2 {
        bi.view_mut((comp * nb, comp * nb), (nb, nb)).copy_from(&binv);
    }
    let ad = a.to_dense();
    let full = DMatrix::from_fn(n, n, |i, j| ad[i][j]) + cm.transpose() * bi * &cm;
    let scale = full.abs().max();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        e[j] = 1.0;
        for (i, v) in apply_tilde(&a, &mno, &e)?.into_iter().enumerate() {
            worst = worst.max((v - full[(i, j)]).abs());
        }
        e[j] = 0.0;
    }
    let rel = worst / scale;
    c.expect(rel <= 1e-10, format!("tilde operator vs dense composition {rel:.1e} (n = {n})"));

    let mut rng = rand::rngs::StdRng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let k: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let v = move |x: [f64; 2], _n: [f64; 2]| [k[0] + k[1] * x[0] + k[2] * (3.0 * x[1]).sin(), k[3] + k[4] * x[0] * x[1] + k[5] * x[1]];
        let g = gamma_moments(&d, &mno, &v)?;
        let lhs = mno.minus_norm_sq(&g);
        let w = mno.solve_b(&g);
        let mut rhs = 0.0;
        for comp in 0..2 {
            let wc = &w[comp * nb..(comp + 1) * nb];
            for &k in d.geom.classification.covered(0) {
                let rule = d.geom.bulk_quadrature(&d.mesh, k, 0, 6);
                if rule.is_empty() {
                    continue;
                }
                let b = mno.space.eval_basis(&d.mesh, k, &rule.points)?;
                let dofs = mno.space.element_dofs(k);
                for (q, &wq) in rule.weights.iter().enumerate() {
                    let (mut val, mut gr) = (0.0, [0.0; 2]);
                    for (i, &di) in dofs.iter().enumerate() {
                        val += wc[di] * b.scalar[q * b.n + i];
                        gr[0] += wc[di] * b.grad[q * b.n + i][0];
                        gr[1] += wc[di] * b.grad[q * b.n + i][1];
                    }
                    rhs += wq * (val * val + gr[0] * gr[0] + gr[1] * gr[1]);
                }
            }
            rhs += penalty_energy(&d.mesh, &mno.space, &d.geom, 1, 0, wc)?;
        }
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    c.expect(worst <= 1e-10, format!("minus-norm identity, 10 random v: {worst:.1e}"));
    Ok(c.done())
}

fn random_poly(rng: &mut impl Rng, deg: usize) -> impl Fn([f64; 2]) -> f64 {
    let exps = monomial_exponents(deg);
    let c: Vec<f64> = exps.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    move |x: [f64; 2]| exps.iter().zip(&c).map(|(&(a, b), c)| c * x[0].powi(a as i32) * x[1].powi(b as i32)).sum()
}

fn criterion9() -> Result<Outcome> {
    let mut c = Check::new();
    let mesh = uniform_mesh(MeshSize(0.2))?;
    let circle = Interface::circle([0.0, 0.0], 0.7);
    let geom = CutGeometry::new(&mesh, &circle, 8)?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);
    let (mut worst_energy, mut worst_eig): (f64, f64) = (0.0, 0.0);
    for side in 0..2 {
        let cov = geom.classification.covered(side);
        for m in 1..=3 {
            for fam in [Family::Lagrange, Family::Bdm] {
                let sp = FeSpace::build(&mesh, cov, fam, m, false)?;
                for _ in 0..20 {
                    let f = random_poly(&mut rng, m);
                    let g = random_poly(&mut rng, m);
                    let x = match fam {
                        Family::Lagrange => sp.interpolate_scalar(&f),
                        Family::Bdm => sp.interpolate_vector(&mesh, &|p| [f(p), g(p)]),
                    };
                    worst_energy = worst_energy.max(penalty_energy(&mesh, &sp, &geom, m, side, &x)?);
                }
                if m == 1 {
                    let s = assemble_penalty(&mesh, &sp, &geom, m, side)?;
                    let dm = s.to_dense();
                    let asym = (0..dm.len())
                        .flat_map(|i| (0..dm.len()).map(move |j| (i, j)))
                        .fold(0.0f64, |a, (i, j)| a.max((dm[i][j] - dm[j][i]).abs()));
                    c.expect(asym == 0.0, format!("side {side} {fam:?} penalty symmetric"));
                    worst_eig = worst_eig.min(min_eigenvalue(&dm) / s.max_abs());
                }
            }
        }
    }
    c.expect(worst_energy <= 1e-18, format!("penalty energy of random polynomials {worst_energy:.1e}"));
    c.expect(worst_eig >= -1e-12, format!("smallest scaled penalty eigenvalue {worst_eig:.1e}"));

    let cls = &geom.classification;
    let (mut area0, mut length, mut partition): (f64, f64, f64) = (0.0, 0.0, 0.0);
    area0 += cls.interior(0).iter().map(|&k| mesh.area(k)).sum::<f64>();
    for &k in &cls.cut {
        let cell = geom.cell(k).expect("cut cell");
        area0 += cell.area(0);
        length += cell.gamma_length();
        partition = partition.max((cell.area(0) + cell.area(1) - mesh.area(k)).abs());
    }
    let (da, dl) = ((area0 - PI * 0.49).abs(), (length - 2.0 * PI * 0.7).abs());
    c.expect(da <= 2e-3, format!("circle area error {da:.1e}"));
    c.expect(dl <= 2e-3, format!("circle length error {dl:.1e}"));
    c.expect(partition <= 1e-12, format!("cut partition error {partition:.1e}"));

    let lshape = Interface::lshape();
    let mesh = uniform_mesh(MeshSize(0.1))?;
    let geom = CutGeometry::new(&mesh, &lshape, 8)?;
    let total: f64 = geom.classification.cut.iter().map(|&k| geom.cell(k).expect("cut cell").gamma_length()).sum();
    let want = lshape.polygon().expect("polygon").perimeter();
    c.expect((total - want).abs() <= 1e-12, format!("L-shape chord lengths {:.1e}", (total - want).abs()));
    Ok(c.done())
}

fn report(n: usize, r: Result<Outcome>, secs: f64) -> bool {
    let (pass, detail) = match r {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {n}: {} ({secs:.1} s) {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    let mut ok = true;
    let t = Instant::now();
    let ex1 = run(r#"{"case": "ex1", "degrees": [1, 2], "mesh_sizes": ["1/5", "1/10", "1/20", "1/40"]}"#);
    let secs = t.elapsed().as_secs_f64();
    match ex1 {
        Ok(ex1) => {
            ok &= report(1, criterion1(&ex1, secs), secs);
            ok &= report(2, criterion2(&ex1), 0.0);
        }
        Err(e) => {
            let msg = e.to_string();
            ok &= report(1, Err(e), secs);
            ok &= report(
                2,
                Ok(Outcome {
                    pass: false,
                    detail: format!("error: {msg}"),
                }),
                0.0,
            );
        }
    }
    let criteria: [(usize, fn() -> Result<Outcome>); 7] = [
        (3, criterion3),
        (4, criterion4),
        (5, criterion5),
        (6, criterion6),
        (7, criterion7),
        (8, criterion8),
        (9, criterion9),
    ];
    for (n, f) in criteria {
        let t = Instant::now();
        let r = f();
        ok &= report(n, r, t.elapsed().as_secs_f64());
    }
    std::process::exit(if ok { 0 } else { 1 });
}
