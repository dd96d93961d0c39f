//! Experiment runner for the torus Euler solvers: configured runs with
//! binary/CSV output, cross-solver comparison, and the flow-derivative
//! validation battery.

mod config;
mod report;
mod snapshot;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use config::{load_config, RunConfig, SolverChoice};
use report::{compare_snapshots, write_comparison, write_diagnostics, ComparisonRow};
use snapshot::{read_snapshot, write_csv_mirror, write_snapshot, Snapshot};
use std::path::{Path, PathBuf};
use torus_euler::error::Error as SolverError;
use torus_euler::lagrangian::{solve, Diagnostics, StepDiagnostics};
use torus_euler::reference::{rk4_solve, EulerState};
use torus_euler::spectral::{bessel_norm, bessel_norm_vec};

/// Output directory environment override (weaker than --out).
const OUT_ENV: &str = "TORUS_EULER_OUT";

#[derive(Parser)]
#[command(
    name = "torus-euler",
    about = "Compressible isentropic Euler on the periodic torus: \
             Eulerian-Lagrangian and pseudo-spectral reference solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write snapshots + diagnostics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides config and TORUS_EULER_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solver override: lagrangian, reference or both.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long, default_value_t = false)]
        quiet: bool,
    },
    /// Validate the flow-derivative formulas; emits a CSV report.
    Frechet {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = false)]
        quiet: bool,
    },
    /// Compare two snapshot files, or all matching snapshots of two runs.
    Compare {
        /// First snapshot file or run directory.
        a: PathBuf,
        /// Second snapshot file or run directory.
        b: PathBuf,
        /// Write the comparison CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            solver,
            quiet,
        } => cmd_run(&config, out, solver, quiet),
        Command::Frechet { config, out, quiet } => cmd_frechet(&config, out, quiet),
        Command::Compare { a, b, out } => cmd_compare(&a, &b, out),
    }
}

fn resolve_out_dir(cfg_dir: &str, flag: Option<PathBuf>) -> PathBuf {
    if let Some(p) = flag {
        return p;
    }
    if let Ok(env_dir) = std::env::var(OUT_ENV) {
        if !env_dir.is_empty() {
            return PathBuf::from(env_dir);
        }
    }
    PathBuf::from(cfg_dir)
}

/// Render solver failures in the run report format.
fn failure_message(e: &SolverError) -> String {
    match e {
        SolverError::NoConvergence { t, .. }
        | SolverError::MapFolding { t, .. }
        | SolverError::Vacuum { t, .. }
        | SolverError::Blowup { t, .. } => {
            format!("no-convergence/blowup at t = {t}: {e}")
        }
        other => other.to_string(),
    }
}

fn cmd_run(
    config_path: &Path,
    out: Option<PathBuf>,
    solver_flag: Option<String>,
    quiet: bool,
) -> Result<()> {
    let mut cfg = load_config(config_path)?;
    if let Some(s) = solver_flag {
        cfg.solver = SolverChoice::parse(&s)?;
    }
    let out_dir = resolve_out_dir(&cfg.out_dir, out);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let beta = cfg.picard.beta_for(&cfg.grid);
    let p = cfg.picard.p;

    let lagrangian = if matches!(cfg.solver, SolverChoice::Lagrangian | SolverChoice::Both) {
        Some(run_lagrangian(&cfg, &out_dir, quiet)?)
    } else {
        None
    };
    let reference = if matches!(cfg.solver, SolverChoice::Reference | SolverChoice::Both) {
        Some(run_reference(&cfg, &out_dir, quiet)?)
    } else {
        None
    };

    if let (Some(lag), Some(eul)) = (&lagrangian, &reference) {
        let mut rows: Vec<ComparisonRow> = Vec::new();
        for (a, b) in lag.iter().zip(eul) {
            rows.push(compare_snapshots(a, b, beta, p)?);
        }
        let path = out_dir.join("comparison.csv");
        write_comparison(&path, &rows)?;
        if !quiet {
            if let Some(last) = rows.last() {
                println!(
                    "comparison: final rel-L2 rho = {:.3e}, u = {:.3e} -> {}",
                    last.rel_l2_rho,
                    last.rel_l2_u,
                    path.display()
                );
            }
        }
    }
    if !quiet {
        println!("run complete: outputs in {}", out_dir.display());
    }
    Ok(())
}

fn snapshot_path(out_dir: &Path, solver: &str, step: usize) -> PathBuf {
    out_dir.join(format!("{solver}_{step:06}.bin"))
}

fn run_lagrangian(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<Vec<Snapshot>> {
    let t0 = std::time::Instant::now();
    let (states, diag) = solve(&cfg.rho0, &cfg.u0, &cfg.law, cfg.t_final, &cfg.picard)
        .map_err(|e| anyhow!(failure_message(&e)))?;
    if !quiet {
        println!(
            "lagrangian: {} steps to t = {} in {:.2?}",
            states.len() - 1,
            cfg.t_final,
            t0.elapsed()
        );
    }
    write_diagnostics(&out_dir.join("lagrangian_diagnostics.csv"), &diag)?;
    let mut written = Vec::new();
    for (i, state) in states.iter().enumerate() {
        if i % cfg.snapshot_stride != 0 && i != states.len() - 1 {
            continue;
        }
        let snap = Snapshot::from_state(state.t, &state.rho, &state.u);
        let path = snapshot_path(out_dir, "lagrangian", i);
        write_snapshot(&path, &snap)?;
        write_csv_mirror(&path.with_extension("csv"), &snap)?;
        written.push(snap);
    }
    Ok(written)
}

fn run_reference(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<Vec<Snapshot>> {
    let t0 = std::time::Instant::now();
    let state0 = EulerState::new(0.0, cfg.rho0.clone(), cfg.u0.clone())
        .map_err(|e| anyhow!(failure_message(&e)))?;
    let states = rk4_solve(&state0, &cfg.law, cfg.t_final, cfg.dt)
        .map_err(|e| anyhow!(failure_message(&e)))?;
    if !quiet {
        println!(
            "reference: {} steps to t = {} in {:.2?}",
            states.len() - 1,
            cfg.t_final,
            t0.elapsed()
        );
    }
    let beta = cfg.picard.beta_for(&cfg.grid);
    let p = cfg.picard.p;
    let rows: Vec<StepDiagnostics> = states
        .iter()
        .map(|s| StepDiagnostics {
            t: s.t,
            mass: s.rho.mean() * torus_euler::grid::TWO_PI.powi(cfg.grid.dim() as i32),
            rho_norm: bessel_norm(&s.rho, beta, p).unwrap_or(f64::NAN),
            u_norm: bessel_norm_vec(&s.u, beta, p).unwrap_or(f64::NAN),
            residual_norm: f64::NAN, // not defined for the reference march
            min_rho: s.rho.min(),
            min_det: f64::NAN,
            picard_iters: 0,
            contraction: 0.0,
        })
        .collect();
    write_diagnostics(
        &out_dir.join("reference_diagnostics.csv"),
        &Diagnostics { beta, p, rows },
    )?;
    let mut written = Vec::new();
    for (i, state) in states.iter().enumerate() {
        if i % cfg.snapshot_stride != 0 && i != states.len() - 1 {
            continue;
        }
        let snap = Snapshot::from_state(state.t, &state.rho, &state.u);
        let path = snapshot_path(out_dir, "reference", i);
        write_snapshot(&path, &snap)?;
        write_csv_mirror(&path.with_extension("csv"), &snap)?;
        written.push(snap);
    }
    Ok(written)
}

fn cmd_frechet(config_path: &Path, out: Option<PathBuf>, quiet: bool) -> Result<()> {
    let cfg = load_config(config_path)?;
    let section = cfg
        .frechet
        .clone()
        .unwrap_or_else(|| config::FrechetSection {
            deltas: vec![3e-2, 1e-2, 3e-3],
            cases: None,
            dt: 1e-3,
        });
    let out_dir = resolve_out_dir(&cfg.out_dir, out);
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("frechet_report.csv");
    let mut buf = Vec::new();
    report::run_frechet_report(&cfg.grid, &section, &mut buf)?;
    std::fs::write(&path, &buf)?;
    if !quiet {
        println!("frechet report -> {}", path.display());
    }
    Ok(())
}

fn collect_snapshots(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "bin"))
        .collect();
    files.sort();
    Ok(files)
}

/// Step index parsed from `{solver}_{step}.bin`.
fn step_of(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    stem.rsplit('_').next()?.parse().ok()
}

fn cmd_compare(a: &Path, b: &Path, out: Option<PathBuf>) -> Result<()> {
    let files_a = collect_snapshots(a)?;
    let files_b = collect_snapshots(b)?;
    if files_a.is_empty() || files_b.is_empty() {
        bail!("no snapshots found to compare");
    }
    let mut pairs: Vec<(PathBuf, PathBuf)> = Vec::new();
    if files_a.len() == 1 && files_b.len() == 1 {
        pairs.push((files_a[0].clone(), files_b[0].clone()));
    } else {
        // prefer exact file-name matches (same solver and step); fall back
        // to step-number pairing for runs of different solvers
        for fa in &files_a {
            if let Some(fb) = files_b
                .iter()
                .find(|fb| fb.file_name() == fa.file_name())
            {
                pairs.push((fa.clone(), fb.clone()));
            }
        }
        if pairs.is_empty() {
            for fa in &files_a {
                let Some(step) = step_of(fa) else { continue };
                if let Some(fb) = files_b.iter().find(|fb| step_of(fb) == Some(step)) {
                    pairs.push((fa.clone(), fb.clone()));
                }
            }
        }
        if pairs.is_empty() {
            bail!("no snapshots with matching names or step numbers");
        }
    }

    let mut rows = Vec::new();
    for (fa, fb) in &pairs {
        let sa = read_snapshot(fa)?;
        let sb = read_snapshot(fb)?;
        // same default diagnostic indices as the run command: p = 2,
        // beta = d/p + 1.5
        let beta = sa.grid.dim() as f64 / 2.0 + 1.5;
        rows.push(compare_snapshots(&sa, &sb, beta, 2.0)?);
    }
    match out {
        Some(path) => write_comparison(&path, &rows)?,
        None => {
            let mut buf = Vec::new();
            report::write_comparison_to(&mut buf, &rows)?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
    }
    Ok(())
}
