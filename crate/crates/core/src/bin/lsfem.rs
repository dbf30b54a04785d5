use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use unfitted_lsfem::study::{
    condition_number, order_rows, parse_csv, run_experiment, to_csv, uniform_mesh, ExperimentConfig, MeshSize, Order,
};
use unfitted_lsfem::assembly::Discretization;
use unfitted_lsfem::{Error, Result};

#[derive(Parser)]
#[command(name = "lsfem", about = "Unfitted least-squares FEM for elasticity interface problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a convergence study and write the CSV table.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; overrides the config, defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Print observed orders of a CSV table.
    Orders {
        #[arg(long)]
        csv: PathBuf,
    },
    /// Condition-number sweep of the L2-method matrix.
    Cond {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

fn set_threads(n: usize) -> Result<()> {
    let n = n.max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}

fn fmt_order(o: Order) -> String {
    o.to_string()
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Solve { config, out, threads } => {
            set_threads(threads)?;
            let cfg = ExperimentConfig::load(&config)?;
            let reports = run_experiment(&cfg, &mut |r| {
                eprintln!(
                    "{} {} m={} h={}: u {:.3e} sigma {:.3e} energy {:.3e} ({} iterations)",
                    r.case,
                    r.method.name(),
                    r.m,
                    MeshSize(r.h).label(),
                    r.errors.u_l2,
                    r.errors.sigma_l2,
                    r.errors.energy,
                    r.iterations
                );
            })?;
            let text = to_csv(&reports)?;
            match out.or(cfg.output) {
                Some(p) => std::fs::write(&p, text)?,
                None => print!("{text}"),
            }
        }
        Cmd::Orders { csv } => {
            let text = std::fs::read_to_string(&csv).map_err(|e| Error::Config(format!("cannot read {}: {e}", csv.display())))?;
            let reports = parse_csv(&text)?;
            println!("case,method,m,u_l2,sigma_l2,energy,kappa");
            for o in order_rows(&reports)? {
                println!(
                    "{},{},{},{},{},{},{}",
                    o.case,
                    o.method.name(),
                    o.m,
                    fmt_order(o.u_l2),
                    fmt_order(o.sigma_l2),
                    fmt_order(o.energy),
                    o.kappa.map(fmt_order).unwrap_or_default()
                );
            }
        }
        Cmd::Cond { config, threads } => {
            set_threads(threads)?;
            let cfg = ExperimentConfig::load(&config)?;
            let case = cfg.manufactured_case()?;
            println!("case,m,h,kappa");
            for &m in &cfg.degrees {
                let mut rows = Vec::new();
                for &h in &cfg.mesh_sizes {
                    let mesh = uniform_mesh(h)?;
                    let shift = [cfg.interface_shift[0] * h.0, cfg.interface_shift[1] * h.0];
                    let disc = Discretization::new(mesh, case.interface.translated(shift), m, cfg.n_sub, cfg.assumptions.into())
                        .map_err(|e| e.at("discretization"))?;
                    let k = condition_number(&disc, &case.material).map_err(|e| e.at("condition number"))?;
                    println!("{},{},{},{:.6e}", case.name, m, h.label(), k);
                    rows.push((h.0, k));
                }
                if rows.len() >= 2 {
                    let o = unfitted_lsfem::study::convergence_orders(&rows)?;
                    println!("{},{},slope,{}", case.name, m, fmt_order(o.least_squares));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
