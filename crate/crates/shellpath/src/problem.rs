//! Binds a [`ShellModel`] to the continuation driver and computes the
//! per-step observables (enclosed volume, maximum displacement, area
//! stretch).

use crate::assembly::{AssemblyError, ShellModel};
use crate::bench::Benchmark;
use crate::continuation::{ContinuationSystem, Observables, SolveError, SystemEval};
use crate::linalg::TangentMatrix;
use nalgebra::DVector;
use std::sync::OnceLock;

/// Maps the (constant-layout) assembly triplets onto a compressed sparsity
/// pattern of the reduced tangent, so repeated assemblies skip the sort.
struct SparsityPlan {
    /// Compressed unique (row, col) pairs, sorted by (col, row).
    pattern: Vec<(usize, usize)>,
    /// For each raw triplet: its slot in `pattern`, or none if constrained.
    slots: Vec<Option<u32>>,
}

pub struct ShellSystem {
    pub model: ShellModel,
    pub p_ref: f64,
    /// Multiplier applied to the flux volume (symmetric sector models).
    pub volume_scale: f64,
    reference_area: f64,
    plan: OnceLock<SparsityPlan>,
}

impl ShellSystem {
    pub fn new(model: ShellModel, p_ref: f64, volume_scale: f64) -> Self {
        let reference_area = model.reference_area();
        ShellSystem {
            model,
            p_ref,
            volume_scale,
            reference_area,
            plan: OnceLock::new(),
        }
    }

    fn build_plan(&self, k_triplets: &[(usize, usize, f64)]) -> SparsityPlan {
        let dofs = &self.model.dofs;
        // Reduced (row, col) per triplet, then compressed unique pattern.
        let reduced: Vec<Option<(usize, usize)>> = k_triplets
            .iter()
            .map(|&(r, c, _)| match (dofs.free_of(r), dofs.free_of(c)) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            })
            .collect();
        let mut pattern: Vec<(usize, usize)> = reduced.iter().flatten().copied().collect();
        pattern.sort_unstable_by_key(|&(r, c)| (c, r));
        pattern.dedup();
        let slots = reduced
            .iter()
            .map(|rc| {
                rc.map(|(r, c)| {
                    pattern
                        .binary_search_by_key(&(c, r), |&(pr, pc)| (pc, pr))
                        .expect("pattern contains every reduced pair") as u32
                })
            })
            .collect();
        SparsityPlan { pattern, slots }
    }

    pub fn from_benchmark(bench: &Benchmark) -> Result<Self, AssemblyError> {
        let model = ShellModel::new(
            bench.mesh.clone(),
            bench.material,
            &bench.constraints,
            bench.thickness_points,
        )?;
        Ok(ShellSystem::new(model, bench.p_ref, bench.volume_scale))
    }

    pub fn expand(&self, u_free: &DVector<f64>) -> DVector<f64> {
        self.model.dofs.expand(u_free)
    }

    /// Maximum control-point displacement magnitude.
    pub fn max_displacement(&self, u_full: &DVector<f64>) -> f64 {
        let mut max = 0.0f64;
        for v in 0..u_full.len() / 3 {
            let m = (u_full[3 * v].powi(2)
                + u_full[3 * v + 1].powi(2)
                + u_full[3 * v + 2].powi(2))
            .sqrt();
            max = max.max(m);
        }
        max
    }

    pub fn reference_area(&self) -> f64 {
        self.reference_area
    }
}

impl ContinuationSystem for ShellSystem {
    fn n_free(&self) -> usize {
        self.model.dofs.n_free()
    }

    fn assemble(&self, u_free: &DVector<f64>, kappa: f64) -> Result<SystemEval, SolveError> {
        let u = self.model.dofs.expand(u_free);
        let sys = self
            .model
            .assemble(&u, kappa, self.p_ref)
            .map_err(|e| SolveError::Assembly(e.to_string()))?;
        let plan = self.plan.get_or_init(|| self.build_plan(&sys.k_triplets));
        let dofs = &self.model.dofs;
        let nf = dofs.n_free();
        let mut residual = DVector::zeros(nf);
        let mut f_ext = DVector::zeros(nf);
        for dof in 0..dofs.n_total() {
            if let Some(fi) = dofs.free_of(dof) {
                residual[fi] = sys.residual[dof];
                f_ext[fi] = sys.f_ext[dof];
            }
        }
        let mut values = vec![0.0f64; plan.pattern.len()];
        debug_assert_eq!(plan.slots.len(), sys.k_triplets.len());
        for (slot, &(_, _, v)) in plan.slots.iter().zip(&sys.k_triplets) {
            if let Some(s) = slot {
                values[*s as usize] += v;
            }
        }
        let triplets: Vec<(usize, usize, f64)> = plan
            .pattern
            .iter()
            .zip(&values)
            .map(|(&(r, c), &v)| (r, c, v))
            .collect();
        Ok(SystemEval {
            residual,
            tangent: TangentMatrix::Sparse { n: nf, triplets },
            f_ext,
        })
    }

    fn residual_norm(&self, u_free: &DVector<f64>, kappa: f64) -> Result<f64, SolveError> {
        let u = self.model.dofs.expand(u_free);
        let r = self
            .model
            .assemble_residual(&u, kappa, self.p_ref)
            .map_err(|e| SolveError::Assembly(e.to_string()))?;
        Ok(self.model.dofs.restrict(&r).norm())
    }

    fn observe(&self, u_free: &DVector<f64>, _kappa: f64) -> Observables {
        let u = self.model.dofs.expand(u_free);
        let volume = self
            .model
            .surface_flux_volume(&u)
            .map(|v| v * self.volume_scale)
            .unwrap_or(f64::NAN);
        let area = self.model.surface_area(&u).unwrap_or(f64::NAN);
        Observables {
            volume,
            max_disp: self.max_displacement(&u),
            stretch: (area / self.reference_area).sqrt(),
        }
    }
}
