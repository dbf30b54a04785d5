use std::path::PathBuf;
use std::process::Command;

use unfitted_lsfem::study::{parse_csv, run_experiment, to_csv, ExperimentConfig};

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lsfem-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn lsfem(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lsfem")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn single_run_gives_one_finite_row() {
    let cfg = config(r#"{"case": "ex1", "method": "l2", "degrees": [1], "mesh_sizes": ["1/5"]}"#);
    let mut seen = 0;
    let rows = run_experiment(&cfg, &mut |_| seen += 1).unwrap();
    assert_eq!((rows.len(), seen), (1, 1));
    let e = rows[0].errors;
    assert!([e.u_l2, e.sigma_l2, e.energy].iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(e.energy >= e.u_l2.max(e.sigma_l2).max(e.div_l2).max(e.grad_l2));
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let cfg = config(r#"{"case": "ex1", "degrees": [1], "mesh_sizes": ["1/5", "1/10"], "condition": true}"#);
    let a = to_csv(&run_experiment(&cfg, &mut |_| {}).unwrap()).unwrap();
    let b = to_csv(&run_experiment(&cfg, &mut |_| {}).unwrap()).unwrap();
    assert_eq!(a, b);
    let back = parse_csv(&a).unwrap();
    assert_eq!(back.len(), 4);
    assert!(back.iter().all(|r| r.kappa.is_some_and(|k| k > 1.0)));
}

#[test]
fn cli_solve_then_orders() {
    let cfg = scratch("solve.json");
    let csv = scratch("solve.csv");
    std::fs::write(&cfg, r#"{"case": "ex1", "method": "l2", "degrees": [1], "mesh_sizes": ["1/5", "1/10"]}"#).unwrap();
    let (code, _, err) = lsfem(&["solve", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("case,method,m,h,u_l2,sigma_l2,energy,iters,kappa\n"));
    assert!(text.contains("ex1,l2,1,order,"));
    let (code, out, err) = lsfem(&["orders", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().nth(1).unwrap().starts_with("ex1,l2,1,"));
}

#[test]
fn cli_exit_codes() {
    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"case": "ex9", "degrees": [1], "mesh_sizes": [0.2]}"#).unwrap();
    assert_eq!(lsfem(&["solve", "--config", bad.to_str().unwrap()]).0, 2);
    assert_eq!(lsfem(&["solve", "--config", "/nonexistent/config.json"]).0, 2);

    let star = scratch("star.json");
    std::fs::write(&star, r#"{"case": "ex3", "method": "l2", "degrees": [1], "mesh_sizes": ["1/5"]}"#).unwrap();
    let (code, _, err) = lsfem(&["solve", "--config", star.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("assumption"), "{err}");

    let capped = scratch("capped.json");
    std::fs::write(&capped, r#"{"case": "ex1", "method": "minus", "degrees": [1], "mesh_sizes": ["1/5"], "maxit": 2}"#).unwrap();
    let (code, _, err) = lsfem(&["solve", "--config", capped.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(err.contains("solve"), "{err}");
}

#[test]
fn cli_condition_sweep() {
    let cfg = scratch("cond.json");
    std::fs::write(&cfg, r#"{"case": "ex1", "degrees": [1], "mesh_sizes": ["1/5", "1/10"]}"#).unwrap();
    let (code, out, err) = lsfem(&["cond", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 4);
    assert!(out.contains("ex1,1,slope,"));
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 6);
}
