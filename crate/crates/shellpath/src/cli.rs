//! Run orchestration behind the `shellpath` binary: resolve a configuration,
//! drive the continuation, and write history, snapshots, provenance and the
//! plot script into the output directory.

use crate::config::{ConfigError, ResolvedRun, RunConfig};
use crate::continuation::{run_continuation, PathHistory, StopReason};
use crate::mesh::ControlMesh;
use crate::output::{
    write_control_mesh_vtk, write_limit_surface_vtk, write_plot_script, write_run_json,
    HistoryWriter, OutputError,
};
use crate::problem::ShellSystem;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("model setup failed: {0}")]
    Setup(String),
    #[error("solver failed: {0}")]
    Solve(String),
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, std::io::Error),
}

pub struct RunSummary {
    pub history: PathHistory,
    pub out_dir: PathBuf,
    pub final_pressure: f64,
    pub final_max_disp: f64,
}

/// Execute a resolved run and write every artifact. Partial history is still
/// on disk if the solver aborts midway (the CSV is flushed per step).
pub fn execute(run: ResolvedRun) -> Result<RunSummary, CliError> {
    let out_dir = PathBuf::from(&run.output.directory);
    let system =
        ShellSystem::from_benchmark(&run.benchmark).map_err(|e| CliError::Setup(e.to_string()))?;

    let n_eigs = run
        .continuation
        .stability
        .as_ref()
        .map(|s| s.n_modes)
        .unwrap_or(0);
    let mut writer = HistoryWriter::create(&out_dir.join("history.csv"), n_eigs)?;
    write_plot_script(&out_dir.join("plot.gp"))?;
    write_run_json(
        &out_dir.join("run.json"),
        &run.config_echo,
        &[
            (
                "benchmark",
                serde_json::json!({
                    "name": run.benchmark.name,
                    "vertices": run.benchmark.mesh.n_vertices(),
                    "faces": run.benchmark.mesh.n_faces(),
                }),
            ),
        ],
    )?;

    let snapshot_every = run.output.snapshot_every;
    let samples = run.output.samples_per_element;
    let snap_dir = out_dir.join("snapshots");
    let mut snap_error: Option<OutputError> = None;
    let history = {
        let sys_ref = &system;
        let snap_err_ref = &mut snap_error;
        let writer_ref = &mut writer;
        let snap_dir = &snap_dir;
        run_continuation(sys_ref, &run.continuation, move |rec| {
            let _ = writer_ref.append(rec);
            if snapshot_every > 0 && rec.step % snapshot_every == 0 {
                let u_full = sys_ref.expand(&rec.u);
                let tag = format!("b{}_s{:04}", rec.branch, rec.step);
                if let Err(e) = write_limit_surface_vtk(
                    &snap_dir.join(format!("{tag}_limit.vtk")),
                    &sys_ref.model,
                    &u_full,
                    samples,
                ) {
                    *snap_err_ref = Some(e);
                }
                if let Err(e) = write_control_mesh_vtk(
                    &snap_dir.join(format!("{tag}_ctrl.vtk")),
                    &sys_ref.model,
                    &u_full,
                ) {
                    *snap_err_ref = Some(e);
                }
            }
        })
        .map_err(|e| CliError::Solve(e.to_string()))?
    };
    if let Some(e) = snap_error {
        return Err(e.into());
    }

    // Always snapshot the final state of each branch.
    for branch in [0usize, 1] {
        if let Some(rec) = history.records.iter().rev().find(|r| r.branch == branch) {
            let u_full = system.expand(&rec.u);
            let tag = format!("final_b{branch}");
            write_limit_surface_vtk(
                &snap_dir.join(format!("{tag}_limit.vtk")),
                &system.model,
                &u_full,
                samples,
            )?;
            write_control_mesh_vtk(
                &snap_dir.join(format!("{tag}_ctrl.vtk")),
                &system.model,
                &u_full,
            )?;
        }
    }

    let last = history
        .records
        .last()
        .ok_or_else(|| CliError::Solve("no converged steps".into()))?;
    Ok(RunSummary {
        final_pressure: last.pressure,
        final_max_disp: last.max_disp,
        history,
        out_dir,
    })
}

/// `shellpath bench <name> ...`
pub fn cmd_bench(
    name: &str,
    refine: usize,
    case: usize,
    pressure: Option<f64>,
    out: &str,
) -> Result<RunSummary, CliError> {
    let mut cfg = RunConfig::default();
    cfg.geometry.benchmark = Some(name.to_string());
    cfg.geometry.refine = refine;
    cfg.geometry.case = case;
    cfg.load.target_pressure = pressure;
    cfg.output.directory = out.to_string();
    if name == "torus" {
        cfg.stability.enabled = true;
        cfg.stability.branching = true;
    }
    let mut run = cfg.resolve()?;
    if pressure.is_some() {
        // Pressure override replaces the benchmark's own stop rule.
        run.continuation.stop.target_volume = None;
        run.continuation.stop.target_stretch = None;
    }
    execute(run)
}

/// `shellpath run --config <path>`
pub fn cmd_run(config_path: &Path) -> Result<RunSummary, CliError> {
    let cfg = RunConfig::from_path(config_path)?;
    execute(cfg.resolve()?)
}

/// `shellpath mesh-info <path>`: parse, validate and describe a mesh file.
pub fn cmd_mesh_info(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Read(path.into(), e))?;
    let mesh = ControlMesh::parse(&text).map_err(ConfigError::Mesh)?;
    let n_ev = (0..mesh.n_vertices())
        .filter(|&v| mesh.is_extraordinary(v))
        .count();
    let needs = mesh.faces_needing_subdivision();
    let mut out = format!(
        "{path}\n  vertices: {}\n  faces: {}\n  edges: {} ({} boundary)\n  closed: {}\n  extraordinary vertices: {}\n",
        mesh.n_vertices(),
        mesh.n_faces(),
        mesh.n_edges(),
        mesh.n_boundary_edges(),
        mesh.is_closed(),
        n_ev,
        path = path.display(),
    );
    if needs > 0 {
        out.push_str(&format!(
            "  note: {needs} faces touch more than one extraordinary vertex; they are pre-subdivided at load time\n"
        ));
    }
    Ok(out)
}

/// Human-readable stop reason for CLI output.
pub fn describe_stop(reason: &StopReason) -> &'static str {
    match reason {
        StopReason::TargetReached => "target reached",
        StopReason::MaxSteps => "max steps reached",
        StopReason::StepUnderflow => "arc-length step underflow",
        StopReason::ZeroTarget => "zero load target",
        StopReason::Failure(_) => "solver failure",
    }
}
