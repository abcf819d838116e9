//! Command-line driver: profile search, sweeps, threshold bisection, the
//! vortex-area assembly, the parametric Plateau solver, and the cross-check
//! between the two routes.
//!
//! Exit codes: 0 success, 1 usage error, 2 solver failure.
//! `VORTEX_PLATEAU_LOG=info|debug` enables progress messages on stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};

use vortex_plateau::analysis;
use vortex_plateau::discretization;
use vortex_plateau::outer_optimizer::{minimize_over_profiles, OptimizerConfig};
use vortex_plateau::parametric_plateau;

static VERBOSITY: OnceLock<u8> = OnceLock::new();

fn verbosity() -> u8 {
    *VERBOSITY.get_or_init(|| match std::env::var("VORTEX_PLATEAU_LOG").as_deref() {
        Ok("debug") => 2,
        Ok("info") => 1,
        _ => 0,
    })
}

macro_rules! vlog {
    ($lvl:expr, $($arg:tt)*) => {
        if verbosity() >= $lvl {
            eprintln!($($arg)*);
        }
    };
}

#[derive(Parser)]
#[command(name = "vortex-plateau", version, about = "Spanning-area solvers for the doubled free-boundary problem")]
struct Cli {
    /// Optimizer configuration file (JSON); flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Concurrency across multistart branches.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridArgs {
    /// Cells along the doubled rectangle (even).
    #[arg(long, default_value_t = 128)]
    n1: usize,
    /// Cells across the vertical direction.
    #[arg(long, default_value_t = 128)]
    n2: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize over profiles at one half-length and write the report.
    Solve {
        #[arg(long)]
        l: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Report output path (JSON).
        #[arg(long, default_value = "solve_report.json")]
        out: PathBuf,
        /// Also export the solved graph surface as OBJ.
        #[arg(long)]
        obj: Option<PathBuf>,
    },
    /// Warm-started sweep over a range of half-lengths, streamed to CSV.
    Sweep {
        #[arg(long)]
        lmin: f64,
        #[arg(long)]
        lmax: f64,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Bisect the degenerate-transition half-length.
    Threshold {
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        #[arg(long, default_value_t = 0.5)]
        lo: f64,
        #[arg(long, default_value_t = 4.0)]
        hi: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "threshold.json")]
        out: PathBuf,
    },
    /// Assemble the relaxed area of the vortex-map graph.
    Vortex {
        #[arg(long)]
        l: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "vortex.json")]
        out: PathBuf,
    },
    /// Solve the parametric Plateau problem for the self-overlapping curve.
    Plateau {
        #[arg(long)]
        l: f64,
        /// Rings of the disc triangulation (6 refine^2 triangles).
        #[arg(long, default_value_t = 41)]
        refine: usize,
        #[arg(long, default_value_t = 400)]
        iters: usize,
        /// Polyline points per arc of the curve.
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value = "plateau.obj")]
        out: PathBuf,
    },
    /// Compare the parametric and graph-form routes.
    Crosscheck {
        #[arg(long)]
        l: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 41)]
        refine: usize,
        #[arg(long, default_value_t = 400)]
        iters: usize,
        #[arg(long, default_value = "crosscheck.json")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>, jobs: Option<usize>) -> Result<OptimizerConfig, String> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("cannot parse config {}: {e}", p.display()))?
        }
        None => OptimizerConfig::default(),
    };
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()
}

fn run(cli: Cli) -> Result<(), String> {
    let cfg = load_config(cli.config.as_ref(), cli.jobs)?;
    match cli.command {
        Command::Solve { l, grid, out, obj } => {
            vlog!(1, "solving profile minimization at l = {l} on {}x{}", grid.n1, grid.n2);
            let report = minimize_over_profiles(l, grid.n1, grid.n2, &cfg, None)
                .map_err(|e| e.to_string())?;
            write_json(&out, &report).map_err(|e| e.to_string())?;
            if let Some(obj_path) = obj {
                if let (Some(profile), Some(psi)) = (&report.best_profile, &report.best_psi) {
                    let mesh = discretization::build_fitted_mesh(profile, grid.n1, grid.n2)
                        .map_err(|e| e.to_string())?;
                    let mut f = BufWriter::new(File::create(&obj_path).map_err(|e| e.to_string())?);
                    discretization::write_obj(&mesh, psi, &mut f).map_err(|e| e.to_string())?;
                    vlog!(1, "surface written to {}", obj_path.display());
                } else {
                    vlog!(1, "degenerate minimizer: no surface to export");
                }
            }
            println!(
                "solve l={l}: value={:.9} degenerate={} evaluations={} -> {}",
                report.value,
                report.degenerate,
                report.outer_evaluations,
                out.display()
            );
        }
        Command::Sweep { lmin, lmax, steps, grid, out } => {
            let mut f = BufWriter::new(File::create(&out).map_err(|e| e.to_string())?);
            writeln!(f, "{}", analysis::SWEEP_CSV_HEADER).map_err(|e| e.to_string())?;
            let mut write_error: Option<String> = None;
            let records = analysis::sweep(lmin, lmax, steps, grid.n1, grid.n2, &cfg, |r| {
                vlog!(1, "l = {}: value {} degenerate {}", r.l, r.value, r.degenerate);
                if let Err(e) = writeln!(f, "{}", r.csv_row()).and_then(|_| f.flush()) {
                    write_error.get_or_insert(e.to_string());
                }
            });
            if let Some(e) = write_error {
                return Err(e);
            }
            let records = records.map_err(|e| e.to_string())?;
            println!("sweep {} points over [{lmin}, {lmax}] -> {}", records.len(), out.display());
        }
        Command::Threshold { tol, lo, hi, grid, out } => {
            let (a, b) = analysis::threshold_bisect(lo, hi, tol, grid.n1, grid.n2, &cfg)
                .map_err(|e| e.to_string())?;
            write_json(&out, &serde_json::json!({ "lower": a, "upper": b, "tol": tol }))
                .map_err(|e| e.to_string())?;
            println!("threshold interval [{a:.6}, {b:.6}] (width {:.6}) -> {}", b - a, out.display());
        }
        Command::Vortex { l, grid, out } => {
            let rec = analysis::vortex_relaxed_area(l, grid.n1, grid.n2, &cfg)
                .map_err(|e| e.to_string())?;
            write_json(&out, &rec).map_err(|e| e.to_string())?;
            println!(
                "vortex l={l}: ac_part={:.6} singular_part={:.6} total={:.6} -> {}",
                rec.ac_part,
                rec.singular_part,
                rec.total,
                out.display()
            );
        }
        Command::Plateau { l, refine, iters, m, out } => {
            let curve = parametric_plateau::build_gamma(l, m).map_err(|e| e.to_string())?;
            vlog!(1, "curve length {}", curve.total_length());
            let sol =
                parametric_plateau::solve_plateau(&curve, refine, iters).map_err(|e| e.to_string())?;
            let mut f = BufWriter::new(File::create(&out).map_err(|e| e.to_string())?);
            parametric_plateau::write_surface_obj(&sol.mesh, &mut f).map_err(|e| e.to_string())?;
            println!(
                "plateau l={l}: area={:.9} degenerate={} iterations={} -> {}",
                sol.area,
                sol.degenerate,
                sol.iterations,
                out.display()
            );
        }
        Command::Crosscheck { l, grid, refine, iters, out } => {
            let rec = parametric_plateau::compare_with_nonparametric(
                l, grid.n1, grid.n2, refine, iters, &cfg,
            )
            .map_err(|e| e.to_string())?;
            write_json(&out, &rec).map_err(|e| e.to_string())?;
            println!(
                "crosscheck l={l}: half_area={:.6} min_f2l={:.6} rel_gap={:.4e} -> {}",
                rec.half_area_parametric,
                rec.min_f2l,
                rec.rel_gap,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; usage problems exit 1
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
