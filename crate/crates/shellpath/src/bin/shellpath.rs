//! Command-line front end: benchmark runs, config-driven runs, and mesh
//! inspection.

use clap::{Parser, Subcommand};
use shellpath::cli;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "shellpath", version, about = "Nonlinear subdivision-surface thin-shell path following")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in benchmark (plate, sphere_octant, torus, airbag).
    Bench {
        /// Benchmark name.
        name: String,
        /// Uniform refinement levels on top of the base grid.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        /// Material case for the balloon benchmarks (1 or 2).
        #[arg(long, default_value_t = 1)]
        case: usize,
        /// Target pressure (overrides the benchmark default stop rule).
        #[arg(long)]
        pressure: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: String,
    },
    /// Run from a TOML configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Validate and describe an ASCII quad-mesh file.
    MeshInfo { path: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.command {
        Command::Bench {
            name,
            refine,
            case,
            pressure,
            out,
        } => cli::cmd_bench(&name, refine, case, pressure, &out).map(|s| summary_text(&s)),
        Command::Run { config } => cli::cmd_run(&config).map(|s| summary_text(&s)),
        Command::MeshInfo { path } => cli::cmd_mesh_info(&path),
    };
    match result {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn summary_text(s: &cli::RunSummary) -> String {
    let n_branch = s.history.records.iter().filter(|r| r.branch == 1).count();
    format!(
        "{} steps recorded ({} on the bifurcated branch), {} failed step retries\nstop: {}\nfinal pressure {:.6e}, max |u| {:.6e}\noutputs in {}",
        s.history.records.len(),
        n_branch,
        s.history.failed_steps,
        cli::describe_stop(&s.history.stop_reason),
        s.final_pressure,
        s.final_max_disp,
        s.out_dir.display()
    )
}
