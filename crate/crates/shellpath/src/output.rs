//! Run outputs: crash-safe CSV history, legacy-VTK snapshots of the limit
//! surface and control mesh, a provenance record, and a gnuplot script for
//! the standard curves.

use crate::assembly::ShellModel;
use crate::continuation::StepRecord;
use nalgebra::DVector;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("history file {path} is not valid ({reason})")]
    BadHistory { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub const HISTORY_SCHEMA: &str = "shellpath-history-v1";

/// Incremental CSV writer: one flushed line per converged step.
pub struct HistoryWriter {
    file: BufWriter<File>,
    path: PathBuf,
    n_eigs: usize,
}

impl HistoryWriter {
    pub fn create(path: &Path, n_eigs: usize) -> Result<Self, OutputError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(path))?;
        }
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = HistoryWriter {
            file: BufWriter::new(file),
            path: path.to_path_buf(),
            n_eigs,
        };
        let mut header = String::from("step,branch,kappa,pressure,volume,max_disp");
        for k in 1..=n_eigs {
            header.push_str(&format!(",eig{k}"));
        }
        header.push_str(",newton_iters");
        w.write_line(&format!("# {HISTORY_SCHEMA}"))?;
        w.write_line(&header)?;
        Ok(w)
    }

    fn write_line(&mut self, line: &str) -> Result<(), OutputError> {
        writeln!(self.file, "{line}").map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))
    }

    pub fn append(&mut self, rec: &StepRecord) -> Result<(), OutputError> {
        let mut line = format!(
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            rec.step, rec.branch, rec.kappa, rec.pressure, rec.volume, rec.max_disp
        );
        for k in 0..self.n_eigs {
            let v = rec.eigenvalues.get(k).copied().unwrap_or(f64::NAN);
            line.push_str(&format!(",{v:.12e}"));
        }
        line.push_str(&format!(",{}", rec.newton_iterations));
        self.write_line(&line)
    }
}

/// Parsed history row (read-back validation and plotting helpers).
#[derive(Debug, Clone)]
pub struct HistoryRow {
    pub step: usize,
    pub branch: usize,
    pub kappa: f64,
    pub pressure: f64,
    pub volume: f64,
    pub max_disp: f64,
    pub eigenvalues: Vec<f64>,
    pub newton_iters: usize,
}

/// Read a history file back, validating the schema tag and column count.
pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>, OutputError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |reason: &str| OutputError::BadHistory {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let schema = lines
        .next()
        .ok_or_else(|| bad("empty file"))?
        .map_err(io_err(path))?;
    if schema.trim() != format!("# {HISTORY_SCHEMA}") {
        return Err(bad(&format!("unexpected schema line '{schema}'")));
    }
    let header = lines
        .next()
        .ok_or_else(|| bad("missing header"))?
        .map_err(io_err(path))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 7
        || cols[0] != "step"
        || cols[cols.len() - 1] != "newton_iters"
    {
        return Err(bad(&format!("unexpected header '{header}'")));
    }
    let n_eigs = cols.len() - 7;
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(bad(&format!("row has {} fields, expected {}", f.len(), cols.len())));
        }
        let parse = |s: &str| -> Result<f64, OutputError> {
            s.parse().map_err(|_| bad(&format!("bad number '{s}'")))
        };
        rows.push(HistoryRow {
            step: f[0].parse().map_err(|_| bad("bad step"))?,
            branch: f[1].parse().map_err(|_| bad("bad branch"))?,
            kappa: parse(f[2])?,
            pressure: parse(f[3])?,
            volume: parse(f[4])?,
            max_disp: parse(f[5])?,
            eigenvalues: f[6..6 + n_eigs]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_, _>>()?,
            newton_iters: f[f.len() - 1].parse().map_err(|_| bad("bad iters"))?,
        });
    }
    Ok(rows)
}

/// Write the deformed control polygon as a legacy-VTK unstructured grid.
pub fn write_control_mesh_vtk(
    path: &Path,
    model: &ShellModel,
    u_full: &DVector<f64>,
) -> Result<(), OutputError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let werr = io_err(path);
    let nv = model.mesh.n_vertices();
    let nf = model.mesh.n_faces();
    (|| -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "shellpath control mesh")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {nv} double")?;
        for (v, p) in model.mesh.vertices().iter().enumerate() {
            writeln!(
                w,
                "{:.9e} {:.9e} {:.9e}",
                p.x + u_full[3 * v],
                p.y + u_full[3 * v + 1],
                p.z + u_full[3 * v + 2]
            )?;
        }
        writeln!(w, "CELLS {nf} {}", 5 * nf)?;
        for f in model.mesh.faces() {
            writeln!(w, "4 {} {} {} {}", f[0], f[1], f[2], f[3])?;
        }
        writeln!(w, "CELL_TYPES {nf}")?;
        for _ in 0..nf {
            writeln!(w, "9")?; // VTK_QUAD
        }
        writeln!(w, "POINT_DATA {nv}")?;
        writeln!(w, "SCALARS disp_mag double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in 0..nv {
            let m = (u_full[3 * v].powi(2)
                + u_full[3 * v + 1].powi(2)
                + u_full[3 * v + 2].powi(2))
            .sqrt();
            writeln!(w, "{m:.9e}")?;
        }
        w.flush()
    })()
    .map_err(werr)
}

/// Sample every element on an `s x s` grid and write the deformed limit
/// surface with point data `|u|`, `u_z` and cell data `n^{ab} eps_ab`.
pub fn write_limit_surface_vtk(
    path: &Path,
    model: &ShellModel,
    u_full: &DVector<f64>,
    samples_per_element: usize,
) -> Result<(), OutputError> {
    let s = samples_per_element.max(1);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let ne = model.n_elements();
    let pts_per_elem = (s + 1) * (s + 1);
    let mut points = Vec::with_capacity(ne * pts_per_elem);
    let mut disp_mag = Vec::with_capacity(ne * pts_per_elem);
    let mut disp_z = Vec::with_capacity(ne * pts_per_elem);
    let mut cells = Vec::with_capacity(ne * s * s);
    let mut energy = Vec::with_capacity(ne * s * s);
    for e in 0..ne {
        let base = points.len();
        for j in 0..=s {
            for i in 0..=s {
                let t1 = i as f64 / s as f64;
                let t2 = j as f64 / s as f64;
                let sample = model
                    .sample_point(e, t1, t2, u_full)
                    .map_err(|err| OutputError::BadHistory {
                        path: path.to_path_buf(),
                        reason: err.to_string(),
                    })?;
                points.push(sample.ref_pos + sample.disp);
                disp_mag.push(sample.disp.norm());
                disp_z.push(sample.disp.z);
            }
        }
        for j in 0..s {
            for i in 0..s {
                let id = |a: usize, b: usize| base + b * (s + 1) + a;
                cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                let tc1 = (i as f64 + 0.5) / s as f64;
                let tc2 = (j as f64 + 0.5) / s as f64;
                let sample = model
                    .sample_point(e, tc1, tc2, u_full)
                    .map_err(|err| OutputError::BadHistory {
                        path: path.to_path_buf(),
                        reason: err.to_string(),
                    })?;
                energy.push(sample.membrane_energy_density);
            }
        }
    }

    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "shellpath limit surface")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", points.len())?;
        for p in &points {
            writeln!(w, "{:.9e} {:.9e} {:.9e}", p.x, p.y, p.z)?;
        }
        writeln!(w, "CELLS {} {}", cells.len(), 5 * cells.len())?;
        for c in &cells {
            writeln!(w, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
        }
        writeln!(w, "CELL_TYPES {}", cells.len())?;
        for _ in 0..cells.len() {
            writeln!(w, "9")?;
        }
        writeln!(w, "POINT_DATA {}", points.len())?;
        writeln!(w, "SCALARS disp_mag double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &disp_mag {
            writeln!(w, "{v:.9e}")?;
        }
        writeln!(w, "SCALARS disp_z double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &disp_z {
            writeln!(w, "{v:.9e}")?;
        }
        writeln!(w, "CELL_DATA {}", cells.len())?;
        writeln!(w, "SCALARS membrane_energy_density double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &energy {
            writeln!(w, "{v:.9e}")?;
        }
        w.flush()
    })()
    .map_err(io_err(path))
}

/// Gnuplot script rendering pressure-volume and pressure-displacement curves
/// from `history.csv`.
pub fn write_plot_script(path: &Path) -> Result<(), OutputError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let script = r##"# Render the standard curves from history.csv next to this script.
# Usage: gnuplot plot.gp
set datafile separator ","
set datafile commentschars "#"
set terminal pngcairo size 900,600
set key left top

set output "pressure_volume.png"
set xlabel "enclosed volume"
set ylabel "pressure"
plot "history.csv" skip 2 using 5:($2==0?$4:1/0) with linespoints title "principal", \
     "history.csv" skip 2 using 5:($2==1?$4:1/0) with linespoints title "bifurcated"

set output "pressure_maxdisp.png"
set xlabel "max |u|"
set ylabel "pressure"
plot "history.csv" skip 2 using 6:($2==0?$4:1/0) with linespoints title "principal", \
     "history.csv" skip 2 using 6:($2==1?$4:1/0) with linespoints title "bifurcated"
"##;
    fs::write(path, script).map_err(io_err(path))
}

/// Provenance record: configuration echo plus version info.
pub fn write_run_json(
    path: &Path,
    config_echo: &serde_json::Value,
    extra: &[(&str, serde_json::Value)],
) -> Result<(), OutputError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let mut doc = serde_json::json!({
        "tool": "shellpath",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_echo,
    });
    for (k, v) in extra {
        doc[*k] = v.clone();
    }
    let text = serde_json::to_string_pretty(&doc).expect("json serializable");
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn history_roundtrip_and_validation() {
        let dir = std::env::temp_dir().join("shellpath_hist_test");
        let path = dir.join("history.csv");
        let mut w = HistoryWriter::create(&path, 2).unwrap();
        let rec = StepRecord {
            step: 3,
            branch: 0,
            kappa: 0.5,
            pressure: 50.0,
            volume: 123.4,
            max_disp: 0.77,
            stretch: 1.1,
            eigenvalues: vec![2.0, 5.0],
            newton_iterations: 4,
            ds: 0.1,
            stability: None,
            u: DVector::zeros(1),
        };
        w.append(&rec).unwrap();
        let rows = read_history(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].step, 3);
        assert_eq!(rows[0].eigenvalues.len(), 2);
        assert!((rows[0].pressure - 50.0).abs() < 1e-12);

        // Corrupt the schema line: read-back must fail.
        let text = std::fs::read_to_string(&path).unwrap();
        let bad = text.replace(HISTORY_SCHEMA, "other-schema");
        std::fs::write(&path, bad).unwrap();
        assert!(read_history(&path).is_err());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn vtk_writers_produce_parseable_headers() {
        use crate::mesh::{open_grid, Vec3};
        use crate::shell_core::{MaterialModel, MaterialParams};
        let mesh = open_grid(2, 2, |i, j| Vec3::new(i as f64, j as f64, 0.0));
        let model = crate::assembly::ShellModel::new(
            mesh,
            MaterialParams {
                model: MaterialModel::MooneyRivlin { c1: 1.0, c2: 0.0 },
                thickness: 0.1,
            },
            &[],
            2,
        )
        .unwrap();
        let u = DVector::zeros(model.dofs.n_total());
        let dir = std::env::temp_dir().join("shellpath_vtk_test");
        let p1 = dir.join("ctrl.vtk");
        let p2 = dir.join("limit.vtk");
        write_control_mesh_vtk(&p1, &model, &u).unwrap();
        write_limit_surface_vtk(&p2, &model, &u, 2).unwrap();
        for p in [&p1, &p2] {
            let text = std::fs::read_to_string(p).unwrap();
            assert!(text.starts_with("# vtk DataFile Version 3.0"));
            assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
            assert!(text.contains("POINT_DATA"));
        }
        let limit = std::fs::read_to_string(&p2).unwrap();
        assert!(limit.contains("membrane_energy_density"));
        assert!(limit.contains("disp_z"));
        let _ = std::fs::remove_dir_all(&dir);
    }
}
