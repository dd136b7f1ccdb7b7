//! Run configuration: a nested key-value TOML document.
//!
//! ```toml
//! [geometry]
//! benchmark = "sphere_octant"   # plate | sphere_octant | torus | airbag
//! # mesh = "grid.mesh"          # alternatively: ASCII quad-mesh path
//! refine = 0
//! case = 1                      # balloon material case (1 or 2)
//!
//! [material]                    # optional; benchmark defaults otherwise
//! model = "mooney_rivlin"       # mooney_rivlin | stvk
//! c1 = 2.1125e5
//! c2 = 0.0
//! # youngs = 5e8
//! # poisson = 0.4
//! thickness = 0.1
//!
//! [load]
//! p_ref = 4225.0
//! initial_dkappa = 0.05
//! target_pressure = 5000.0      # stop rules (any subset)
//! # target_volume = 1e4
//! # target_stretch = 2.0
//!
//! [solver]
//! tol_rel = 0.01
//! max_newton_iter = 25
//! max_steps = 400
//! ds_min = 1e-9
//! ds_max = 1e300
//! psi = 0.0
//! target_iterations = 5
//! thickness_points = 2          # 2 | 4
//!
//! [stability]
//! enabled = false
//! n_modes = 6
//! zero_tol = 1e-6
//! beta = 1.0
//! branching = false
//!
//! [output]
//! directory = "out"
//! snapshot_every = 0            # steps between snapshots, 0 = none
//! samples_per_element = 4
//! ```

use crate::bench::{self, Benchmark};
use crate::continuation::{
    ArcLengthOptions, ContinuationConfig, NewtonOptions, StabilityOptions, StopRules,
};
use crate::mesh::{load_control_mesh, MeshError};
use crate::shell_core::{MaterialModel, MaterialParams};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Read(String, std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("missing key: {0}")]
    Missing(&'static str),
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("benchmark error: {0}")]
    Bench(#[from] bench::BenchError),
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    #[serde(default)]
    pub material: Option<MaterialSection>,
    #[serde(default)]
    pub load: LoadSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub output: OutputSection,
    /// Extra single-DOF constraints for mesh-path runs:
    /// `fixed = [[vertex, component, value], ...]` (0-based vertex ids).
    #[serde(default)]
    pub constraints: Option<ConstraintSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default)]
    pub benchmark: Option<String>,
    #[serde(default)]
    pub mesh: Option<String>,
    #[serde(default)]
    pub refine: usize,
    #[serde(default = "default_case")]
    pub case: usize,
}

fn default_case() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub model: String,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default)]
    pub youngs: Option<f64>,
    #[serde(default)]
    pub poisson: Option<f64>,
    pub thickness: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    #[serde(default)]
    pub p_ref: Option<f64>,
    #[serde(default)]
    pub initial_dkappa: Option<f64>,
    #[serde(default)]
    pub target_pressure: Option<f64>,
    #[serde(default)]
    pub target_volume: Option<f64>,
    #[serde(default)]
    pub target_stretch: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "d_tol_rel")]
    pub tol_rel: f64,
    #[serde(default = "d_max_newton")]
    pub max_newton_iter: usize,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub ds_min: Option<f64>,
    #[serde(default)]
    pub ds_max: Option<f64>,
    #[serde(default)]
    pub psi: f64,
    #[serde(default = "d_target_iters")]
    pub target_iterations: usize,
    #[serde(default = "d_thickness_points")]
    pub thickness_points: usize,
    /// "arc_length" (default) or "load_control".
    #[serde(default)]
    pub stepping: Option<String>,
}

fn d_tol_rel() -> f64 {
    0.01
}
fn d_max_newton() -> usize {
    25
}
fn d_target_iters() -> usize {
    5
}
fn d_thickness_points() -> usize {
    2
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol_rel: d_tol_rel(),
            max_newton_iter: d_max_newton(),
            max_steps: None,
            ds_min: None,
            ds_max: None,
            psi: 0.0,
            target_iterations: d_target_iters(),
            thickness_points: d_thickness_points(),
            stepping: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "d_n_modes")]
    pub n_modes: usize,
    #[serde(default = "d_zero_tol")]
    pub zero_tol: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default)]
    pub branching: bool,
}

fn d_n_modes() -> usize {
    6
}
fn d_zero_tol() -> f64 {
    1e-6
}
fn d_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "d_outdir")]
    pub directory: String,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "d_samples")]
    pub samples_per_element: usize,
}

fn d_outdir() -> String {
    "out".into()
}
fn d_samples() -> usize {
    4
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: d_outdir(),
            snapshot_every: 0,
            samples_per_element: d_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    #[serde(default)]
    pub fixed: Vec<(usize, usize, f64)>,
}

/// Fully resolved problem ready to run.
pub struct ResolvedRun {
    pub benchmark: Benchmark,
    pub continuation: ContinuationConfig,
    pub output: OutputSection,
    pub config_echo: serde_json::Value,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read(path.display().to_string(), e))?;
        Ok(toml::from_str(&text)?)
    }

    fn material_params(&self) -> Result<Option<MaterialParams>, ConfigError> {
        let Some(m) = &self.material else {
            return Ok(None);
        };
        let model = match m.model.as_str() {
            "mooney_rivlin" => MaterialModel::MooneyRivlin {
                c1: m.c1.ok_or(ConfigError::Missing("material.c1"))?,
                c2: m.c2.unwrap_or(0.0),
            },
            "stvk" => MaterialModel::StVenantKirchhoff {
                youngs: m.youngs.ok_or(ConfigError::Missing("material.youngs"))?,
                poisson: m.poisson.ok_or(ConfigError::Missing("material.poisson"))?,
            },
            other => {
                return Err(ConfigError::Invalid {
                    key: "material.model",
                    reason: format!("unknown model '{other}'"),
                })
            }
        };
        let params = MaterialParams {
            model,
            thickness: m.thickness,
        };
        params.validate().map_err(|e| ConfigError::Invalid {
            key: "material",
            reason: e.to_string(),
        })?;
        Ok(Some(params))
    }

    /// Resolve the configuration into a runnable benchmark description.
    pub fn resolve(&self) -> Result<ResolvedRun, ConfigError> {
        let mut benchmark = match (&self.geometry.benchmark, &self.geometry.mesh) {
            (Some(name), None) => {
                bench::generate(name, self.geometry.refine, self.geometry.case)?
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Read(path.clone(), e))?;
                let mut mesh = load_control_mesh(&text)?;
                for _ in 0..self.geometry.refine {
                    mesh = mesh.subdivide();
                }
                let material = self
                    .material_params()?
                    .ok_or(ConfigError::Missing("material"))?;
                let p_ref = self
                    .load
                    .p_ref
                    .ok_or(ConfigError::Missing("load.p_ref"))?;
                let constraints = self
                    .constraints
                    .as_ref()
                    .map(|c| c.fixed.clone())
                    .unwrap_or_default();
                Benchmark {
                    name: format!("mesh:{path}"),
                    mesh,
                    material,
                    constraints,
                    p_ref,
                    continuation: ContinuationConfig {
                        p_ref,
                        ..Default::default()
                    },
                    volume_scale: 1.0,
                    symmetry: None,
                    thickness_points: self.solver.thickness_points,
                }
            }
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid {
                    key: "geometry",
                    reason: "give either geometry.benchmark or geometry.mesh, not both".into(),
                })
            }
            (None, None) => return Err(ConfigError::Missing("geometry.benchmark")),
        };

        // Material / load overrides on top of the benchmark defaults.
        if let Some(params) = self.material_params()? {
            benchmark.material = params;
        }
        if let Some(p_ref) = self.load.p_ref {
            benchmark.p_ref = p_ref;
            benchmark.continuation.p_ref = p_ref;
        }
        benchmark.thickness_points = self.solver.thickness_points;
        if !matches!(self.solver.thickness_points, 2 | 4) {
            return Err(ConfigError::Invalid {
                key: "solver.thickness_points",
                reason: "must be 2 or 4".into(),
            });
        }

        let mut cc = benchmark.continuation.clone();
        if let Some(dk) = self.load.initial_dkappa {
            cc.initial_dkappa = dk;
        }
        if let Some(p) = self.load.target_pressure {
            cc.stop.target_kappa = Some(p / benchmark.p_ref);
        }
        if let Some(v) = self.load.target_volume {
            cc.stop.target_volume = Some(v);
        }
        if let Some(s) = self.load.target_stretch {
            cc.stop.target_stretch = Some(s);
        }
        if let Some(ms) = self.solver.max_steps {
            cc.max_steps = ms;
        }
        if let Some(d) = self.solver.ds_min {
            cc.ds_min = d;
        }
        if let Some(d) = self.solver.ds_max {
            cc.ds_max = d;
        }
        cc.target_iterations = self.solver.target_iterations;
        if let Some(stepping) = &self.solver.stepping {
            cc.stepping = match stepping.as_str() {
                "arc_length" => crate::continuation::Stepping::ArcLength,
                "load_control" => crate::continuation::Stepping::LoadControl,
                other => {
                    return Err(ConfigError::Invalid {
                        key: "solver.stepping",
                        reason: format!("unknown stepping '{other}'"),
                    })
                }
            };
        }
        cc.arc = ArcLengthOptions {
            psi: self.solver.psi,
            newton: NewtonOptions {
                tol_rel: self.solver.tol_rel,
                tol_abs: 1e-12,
                max_iter: self.solver.max_newton_iter,
                line_search: true,
                initial_damping: 0.0,
            },
            constraint_tol: 1e-8,
        };
        if self.stability.enabled {
            cc.stability = Some(StabilityOptions {
                n_modes: self.stability.n_modes,
                zero_tol: self.stability.zero_tol,
                beta: self.stability.beta,
                thickness: benchmark.material.thickness,
                enable_branching: self.stability.branching,
            });
        } else if self.stability.branching {
            return Err(ConfigError::Invalid {
                key: "stability.branching",
                reason: "requires stability.enabled = true".into(),
            });
        }
        validate_stop(&cc.stop)?;

        let config_echo = serde_json::to_value(self).expect("config serializable");
        Ok(ResolvedRun {
            benchmark,
            continuation: cc,
            output: self.output.clone(),
            config_echo,
        })
    }
}

fn validate_stop(stop: &StopRules) -> Result<(), ConfigError> {
    if stop.target_kappa.is_none()
        && stop.target_volume.is_none()
        && stop.target_stretch.is_none()
    {
        // Max-steps only runs are allowed (the torus benchmark works this
        // way), so nothing to check.
    }
    Ok(())
}
