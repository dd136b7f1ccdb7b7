//! Global residual `R = F_int - kappa F_ext(u)` and tangent stiffness,
//! including the follower-pressure contribution, plus volume and energy
//! diagnostics.
//!
//! Elements integrate concurrently over immutable state; accumulation into
//! the global structures happens in a fixed element order so repeated
//! assembly of the same state is bit-identical.

use crate::basis::{eval_patch_basis, SquareQuadrature, ThicknessRule};
use crate::linalg::TangentMatrix;
use crate::mesh::{ControlMesh, MeshError, PatchStencil, Vec3};
use crate::shell_core::{
    strain_state, strain_variations, stress_resultants, surface_frames, EffectiveBasis,
    MaterialParams, MechanicsError, ReferenceFrame, StrainState, StressResultants, Sym2,
    ThicknessLaw, VariationSet,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("element {element}: {source}")]
    Element {
        element: usize,
        source: MechanicsError,
    },
    #[error("{0} element failures, first: {1}")]
    Aggregate(usize, String),
    #[error("enclosed volume requires a closed mesh ({0} boundary edges)")]
    OpenMesh(usize),
    #[error("state vector has {got} entries, model has {expected} degrees of freedom")]
    StateSize { got: usize, expected: usize },
}

/// Per-control-point degree-of-freedom table with single-DOF constraints.
#[derive(Debug, Clone)]
pub struct DofMap {
    n_vertices: usize,
    prescribed: Vec<Option<f64>>,
    free_index: Vec<Option<usize>>,
    n_free: usize,
}

impl DofMap {
    pub fn new(n_vertices: usize) -> Self {
        DofMap {
            n_vertices,
            prescribed: vec![None; 3 * n_vertices],
            free_index: Vec::new(),
            n_free: 0,
        }
    }

    pub fn fix(&mut self, vertex: usize, component: usize, value: f64) {
        self.prescribed[3 * vertex + component] = Some(value);
    }

    pub fn finalize(&mut self) {
        self.free_index = Vec::with_capacity(3 * self.n_vertices);
        let mut next = 0;
        for dof in 0..3 * self.n_vertices {
            if self.prescribed[dof].is_some() {
                self.free_index.push(None);
            } else {
                self.free_index.push(Some(next));
                next += 1;
            }
        }
        self.n_free = next;
    }

    pub fn n_total(&self) -> usize {
        3 * self.n_vertices
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.prescribed[dof].is_some()
    }

    pub fn free_of(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    /// Expand a free-DOF vector into the full vector with prescribed values.
    pub fn expand(&self, free: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(3 * self.n_vertices);
        for dof in 0..full.len() {
            full[dof] = match self.free_index[dof] {
                Some(f) => free[f],
                None => self.prescribed[dof].unwrap(),
            };
        }
        full
    }

    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        let mut free = DVector::zeros(self.n_free);
        for dof in 0..full.len() {
            if let Some(f) = self.free_index[dof] {
                free[f] = full[dof];
            }
        }
        free
    }
}

/// Precomputed per-quadrature-point data of one element.
struct QpData {
    weight: f64,
    eff: EffectiveBasis,
    geom_d1: [Vec3; 2],
    /// Precomputed reference frame (the reference never changes).
    reference: ReferenceFrame,
    /// Limit-surface position of the reference mid-surface.
    ref_pos: Vec3,
}

struct ElementData {
    face: usize,
    stencil: PatchStencil,
    qp: Vec<QpData>,
}

/// Assembled global system in full coordinates (constraints applied at the
/// reduction step).
pub struct AssembledSystem {
    pub residual: DVector<f64>,
    pub k_triplets: Vec<(usize, usize, f64)>,
    pub f_ext: DVector<f64>,
    /// Total internal strain energy (diagnostic).
    pub internal_energy: f64,
}

pub struct ShellModel {
    pub mesh: ControlMesh,
    pub material: MaterialParams,
    pub dofs: DofMap,
    elements: Vec<ElementData>,
    thickness_rule: ThicknessRule,
}

impl ShellModel {
    /// Build the model: pre-subdivides if needed was the caller's job; here
    /// every face must already be evaluable. `constraints` are single-DOF
    /// fixes `(vertex, component, value)`.
    pub fn new(
        mesh: ControlMesh,
        material: MaterialParams,
        constraints: &[(usize, usize, f64)],
        thickness_points: usize,
    ) -> Result<Self, AssemblyError> {
        material
            .validate()
            .map_err(|source| AssemblyError::Element { element: 0, source })?;
        let quad = SquareQuadrature::gauss_3x3();
        let thickness_rule = ThicknessRule::gauss(material.thickness, thickness_points);

        let mut elements = Vec::with_capacity(mesh.n_faces());
        for face in 0..mesh.n_faces() {
            let stencil = mesh.patch_stencil(face)?;
            let mut qp = Vec::with_capacity(quad.points.len());
            for (&(t1, t2), &w) in quad.points.iter().zip(&quad.weights) {
                let basis = eval_patch_basis(&stencil, t1, t2).expect("quadrature in range");
                let eff = EffectiveBasis::new(&stencil, &basis);
                let mut geom_d1 = [Vec3::zeros(); 2];
                let mut geom_d2 = [Vec3::zeros(); 3];
                let mut ref_pos = Vec3::zeros();
                for (sid, slot) in stencil.slots.iter().enumerate() {
                    let p = slot.ref_position(mesh.vertices());
                    ref_pos += basis.values[sid] * p;
                    for a in 0..2 {
                        geom_d1[a] += basis.d1[sid][a] * p;
                    }
                    for a in 0..3 {
                        geom_d2[a] += basis.d2[sid][a] * p;
                    }
                }
                let reference = crate::shell_core::reference_frame(
                    &geom_d1,
                    &geom_d2,
                    material.thickness,
                    &thickness_rule.points,
                    &format!("element {face}"),
                )
                .map_err(|source| AssemblyError::Element {
                    element: face,
                    source,
                })?;
                qp.push(QpData {
                    weight: w,
                    eff,
                    geom_d1,
                    reference,
                    ref_pos,
                });
            }
            elements.push(ElementData { face, stencil, qp });
        }

        let mut dofs = DofMap::new(mesh.n_vertices());
        for &(v, c, val) in constraints {
            dofs.fix(v, c, val);
        }
        dofs.finalize();

        Ok(ShellModel {
            mesh,
            material,
            dofs,
            elements,
            thickness_rule,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e].qp[0].eff.nodes
    }

    fn law(&self) -> ThicknessLaw {
        self.material.thickness_law()
    }

    fn check_state(&self, u: &DVector<f64>) -> Result<(), AssemblyError> {
        if u.len() != self.dofs.n_total() {
            return Err(AssemblyError::StateSize {
                got: u.len(),
                expected: self.dofs.n_total(),
            });
        }
        Ok(())
    }

    /// Frames, strain, resultants and variations at one quadrature point of
    /// one element under displacement state `u`.
    fn point_state(
        &self,
        elem: &ElementData,
        qp: &QpData,
        u: &DVector<f64>,
    ) -> Result<PointState, MechanicsError> {
        let nn = qp.eff.nodes.len();
        let mut disp_d1 = [Vec3::zeros(); 2];
        let mut disp_d2 = [Vec3::zeros(); 3];
        let mut disp_val = Vec3::zeros();
        for k in 0..nn {
            let node = qp.eff.nodes[k];
            for i in 0..3 {
                let ui = u[3 * node + i];
                disp_val[i] += qp.eff.val[k][i] * ui;
                for a in 0..2 {
                    disp_d1[a][i] += qp.eff.d1[k][a][i] * ui;
                }
                for a in 0..3 {
                    disp_d2[a][i] += qp.eff.d2[k][a][i] * ui;
                }
            }
        }
        let context = format!("element {}", elem.face);
        let deformed =
            crate::shell_core::deformed_frame(&qp.reference, &disp_d1, &disp_d2, self.law(), &context)?;
        let strain = strain_state(&qp.reference, &deformed);
        Ok(PointState {
            deformed,
            strain,
            disp_val,
        })
    }

    /// Internal force and tangent of one element: the integrals of
    /// `n . delta eps + m . delta kappa` and their linearization.
    pub fn element_internal(
        &self,
        e: usize,
        u: &DVector<f64>,
    ) -> Result<(Vec<usize>, DVector<f64>, DMatrix<f64>, f64), AssemblyError> {
        let elem = &self.elements[e];
        let nd = 3 * elem.qp[0].eff.nodes.len();
        let mut r_e = DVector::zeros(nd);
        let mut k_e = DMatrix::zeros(nd, nd);
        let mut energy = 0.0;
        for qp in &elem.qp {
            let ps = self
                .point_state(elem, qp, u)
                .map_err(|source| AssemblyError::Element {
                    element: elem.face,
                    source,
                })?;
            let res = stress_resultants(
                &self.material,
                &qp.reference,
                &ps.strain,
                &format!("element {}", elem.face),
            )
            .map_err(|source| AssemblyError::Element {
                element: elem.face,
                source,
            })?;
            let vs = strain_variations(&qp.eff, qp.reference.jac, &ps.deformed, self.law());
            let w = qp.weight * qp.reference.jac;
            energy += w * res.energy_area_density;
            accumulate_internal(&mut r_e, &mut k_e, &vs, &res, w);
        }
        Ok((elem.qp[0].eff.nodes.clone(), r_e, k_e, energy))
    }

    /// Follower-pressure load vector and its tangent for one element at
    /// pressure `p`: `f[r] = p int atilde_3 . delta_r u`.
    pub fn pressure_load(
        &self,
        e: usize,
        u: &DVector<f64>,
        p: f64,
    ) -> Result<(Vec<usize>, DVector<f64>, DMatrix<f64>), AssemblyError> {
        let elem = &self.elements[e];
        let nd = 3 * elem.qp[0].eff.nodes.len();
        let mut f_e = DVector::zeros(nd);
        let mut k_e = DMatrix::zeros(nd, nd);
        if p == 0.0 {
            return Ok((elem.qp[0].eff.nodes.clone(), f_e, k_e));
        }
        for qp in &elem.qp {
            let ps = self
                .point_state(elem, qp, u)
                .map_err(|source| AssemblyError::Element {
                    element: elem.face,
                    source,
                })?;
            let vs = strain_variations(&qp.eff, qp.reference.jac, &ps.deformed, self.law());
            let w = qp.weight * p;
            let a3t = ps.deformed.a3_tilde;
            for r in 0..nd {
                let ir = vs.comp[r];
                f_e[r] += w * a3t[ir] * vs.c_val[r];
                for s in 0..nd {
                    k_e[(r, s)] += w * vs.d_a3t[s][ir] * vs.c_val[r];
                }
            }
        }
        Ok((elem.qp[0].eff.nodes.clone(), f_e, k_e))
    }

    /// Residual vector only (no tangent): the cheap path for line searches.
    pub fn assemble_residual(
        &self,
        u: &DVector<f64>,
        kappa: f64,
        p_ref: f64,
    ) -> Result<DVector<f64>, AssemblyError> {
        self.check_state(u)?;
        let law = self.law();
        let results: Vec<Result<(Vec<usize>, DVector<f64>), AssemblyError>> = self
            .elements
            .par_iter()
            .map(|elem| {
                let nd = 3 * elem.qp[0].eff.nodes.len();
                let mut r = DVector::zeros(nd);
                for qp in &elem.qp {
                    let ps = self.point_state(elem, qp, u).map_err(|source| {
                        AssemblyError::Element {
                            element: elem.face,
                            source,
                        }
                    })?;
                    let res = stress_resultants(
                        &self.material,
                        &qp.reference,
                        &ps.strain,
                        &format!("element {}", elem.face),
                    )
                    .map_err(|source| AssemblyError::Element {
                        element: elem.face,
                        source,
                    })?;
                    let vs = strain_variations(&qp.eff, qp.reference.jac, &ps.deformed, law);
                    let w = qp.weight * qp.reference.jac;
                    let wp = qp.weight * kappa * p_ref;
                    let a3t = ps.deformed.a3_tilde;
                    for rd in 0..nd {
                        let de = Sym2(vs.d_membrane[rd]);
                        let dk = Sym2(vs.d_bending[rd]);
                        r[rd] += w * (res.n.ddot(&de) + res.m.ddot(&dk));
                        if wp != 0.0 {
                            r[rd] -= wp * a3t[vs.comp[rd]] * vs.c_val[rd];
                        }
                    }
                }
                Ok((elem.qp[0].eff.nodes.clone(), r))
            })
            .collect();
        let mut residual = DVector::zeros(self.dofs.n_total());
        for item in results {
            let (nodes, r) = item?;
            for rd in 0..r.len() {
                residual[3 * nodes[rd / 3] + rd % 3] += r[rd];
            }
        }
        Ok(residual)
    }

    /// Assemble residual, stiffness triplets and external load at state `u`
    /// (full coordinates, prescribed components included) and load factor
    /// `kappa`, with reference pressure `p_ref`.
    pub fn assemble(
        &self,
        u: &DVector<f64>,
        kappa: f64,
        p_ref: f64,
    ) -> Result<AssembledSystem, AssemblyError> {
        self.check_state(u)?;
        let n = self.dofs.n_total();
        let law = self.law();

        struct ElemOut {
            nodes: Vec<usize>,
            r_int: DVector<f64>,
            f_ext: DVector<f64>,
            k: DMatrix<f64>,
            energy: f64,
        }

        let results: Vec<Result<ElemOut, AssemblyError>> = self
            .elements
            .par_iter()
            .map(|elem| {
                let nd = 3 * elem.qp[0].eff.nodes.len();
                let mut r_int = DVector::zeros(nd);
                let mut f_ext = DVector::zeros(nd);
                let mut k = DMatrix::zeros(nd, nd);
                let mut energy = 0.0;
                for qp in &elem.qp {
                    let ps = self.point_state(elem, qp, u).map_err(|source| {
                        AssemblyError::Element {
                            element: elem.face,
                            source,
                        }
                    })?;
                    let res = stress_resultants(
                        &self.material,
                        &qp.reference,
                        &ps.strain,
                        &format!("element {}", elem.face),
                    )
                    .map_err(|source| AssemblyError::Element {
                        element: elem.face,
                        source,
                    })?;
                    let vs = strain_variations(&qp.eff, qp.reference.jac, &ps.deformed, law);
                    let w = qp.weight * qp.reference.jac;
                    energy += w * res.energy_area_density;
                    accumulate_internal(&mut r_int, &mut k, &vs, &res, w);

                    if p_ref != 0.0 {
                        let wp = qp.weight * p_ref;
                        let a3t = ps.deformed.a3_tilde;
                        let nd = r_int.len();
                        for r in 0..nd {
                            let ir = vs.comp[r];
                            f_ext[r] += wp * a3t[ir] * vs.c_val[r];
                            // K -= kappa * dF_ext/du (follower tangent).
                            if kappa != 0.0 {
                                for s in 0..nd {
                                    k[(r, s)] -= kappa * wp * vs.d_a3t[s][ir] * vs.c_val[r];
                                }
                            }
                        }
                    }
                }
                Ok(ElemOut {
                    nodes: elem.qp[0].eff.nodes.clone(),
                    r_int,
                    f_ext,
                    k,
                    energy,
                })
            })
            .collect();

        let mut residual = DVector::zeros(n);
        let mut f_ext = DVector::zeros(n);
        let mut k_triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut internal_energy = 0.0;
        let mut failures: Vec<String> = Vec::new();
        for item in results {
            match item {
                Ok(out) => {
                    let nd = out.r_int.len();
                    for r in 0..nd {
                        let gr = 3 * out.nodes[r / 3] + r % 3;
                        residual[gr] += out.r_int[r];
                        f_ext[gr] += out.f_ext[r];
                        for s in 0..nd {
                            let gs = 3 * out.nodes[s / 3] + s % 3;
                            // Keep zeros: a constant triplet layout lets
                            // callers cache the sparsity plan.
                            k_triplets.push((gr, gs, out.k[(r, s)]));
                        }
                    }
                    internal_energy += out.energy;
                }
                Err(e) => failures.push(e.to_string()),
            }
        }
        if !failures.is_empty() {
            return Err(AssemblyError::Aggregate(
                failures.len(),
                failures.swap_remove(0),
            ));
        }
        // R = F_int - kappa F_ext.
        residual.axpy(-kappa, &f_ext, 1.0);
        Ok(AssembledSystem {
            residual,
            k_triplets,
            f_ext,
            internal_energy,
        })
    }

    /// Reduce an assembled system to free DOFs.
    pub fn reduce(
        &self,
        sys: &AssembledSystem,
    ) -> (DVector<f64>, TangentMatrix, DVector<f64>) {
        let nf = self.dofs.n_free();
        let mut r = DVector::zeros(nf);
        let mut f = DVector::zeros(nf);
        for dof in 0..self.dofs.n_total() {
            if let Some(fi) = self.dofs.free_of(dof) {
                r[fi] = sys.residual[dof];
                f[fi] = sys.f_ext[dof];
            }
        }
        let triplets: Vec<(usize, usize, f64)> = sys
            .k_triplets
            .iter()
            .filter_map(|&(gr, gc, v)| {
                match (self.dofs.free_of(gr), self.dofs.free_of(gc)) {
                    (Some(a), Some(b)) => Some((a, b, v)),
                    _ => None,
                }
            })
            .collect();
        (
            r,
            TangentMatrix::Sparse {
                n: nf,
                triplets,
            },
            f,
        )
    }

    /// Divergence-theorem flux `V = (1/3) int x . atilde_3`; equals the
    /// enclosed volume for closed, outward-oriented meshes. For open meshes
    /// bounded by planes through the origin it still measures the enclosed
    /// sector volume, which is how symmetric benchmark models report volume.
    pub fn surface_flux_volume(&self, u: &DVector<f64>) -> Result<f64, AssemblyError> {
        self.check_state(u)?;
        let mut v = 0.0;
        for elem in &self.elements {
            for qp in &elem.qp {
                let ps = self
                    .point_state(elem, qp, u)
                    .map_err(|source| AssemblyError::Element {
                        element: elem.face,
                        source,
                    })?;
                let x = qp.ref_pos + ps.disp_val;
                v += qp.weight * x.dot(&ps.deformed.a3_tilde) / 3.0;
            }
        }
        Ok(v)
    }

    /// Enclosed volume of a closed mesh.
    pub fn enclosed_volume(&self, u: &DVector<f64>) -> Result<f64, AssemblyError> {
        if !self.mesh.is_closed() {
            return Err(AssemblyError::OpenMesh(self.mesh.n_boundary_edges()));
        }
        self.surface_flux_volume(u)
    }

    /// Deformed mid-surface area.
    pub fn surface_area(&self, u: &DVector<f64>) -> Result<f64, AssemblyError> {
        self.check_state(u)?;
        let mut a = 0.0;
        for elem in &self.elements {
            for qp in &elem.qp {
                let ps = self
                    .point_state(elem, qp, u)
                    .map_err(|source| AssemblyError::Element {
                        element: elem.face,
                        source,
                    })?;
                a += qp.weight * ps.deformed.jac;
            }
        }
        Ok(a)
    }

    /// Reference mid-surface area.
    pub fn reference_area(&self) -> f64 {
        let mut a = 0.0;
        for elem in &self.elements {
            for qp in &elem.qp {
                a += qp.weight * qp.geom_d1[0].cross(&qp.geom_d1[1]).norm();
            }
        }
        a
    }

    /// Evaluate limit-surface position, displacement and membrane energy
    /// density at a parameter point of one face.
    pub fn sample_point(
        &self,
        e: usize,
        t1: f64,
        t2: f64,
        u: &DVector<f64>,
    ) -> Result<SurfaceSample, AssemblyError> {
        let elem = &self.elements[e];
        let basis = eval_patch_basis(&elem.stencil, t1, t2).map_err(|err| {
            AssemblyError::Element {
                element: elem.face,
                source: MechanicsError::InvalidMaterial(err.to_string()),
            }
        })?;
        let eff = EffectiveBasis::new(&elem.stencil, &basis);
        let mut geom_d1 = [Vec3::zeros(); 2];
        let mut geom_d2 = [Vec3::zeros(); 3];
        let mut ref_pos = Vec3::zeros();
        for (sid, slot) in elem.stencil.slots.iter().enumerate() {
            let p = slot.ref_position(self.mesh.vertices());
            ref_pos += basis.values[sid] * p;
            for a in 0..2 {
                geom_d1[a] += basis.d1[sid][a] * p;
            }
            for a in 0..3 {
                geom_d2[a] += basis.d2[sid][a] * p;
            }
        }
        let mut disp_d1 = [Vec3::zeros(); 2];
        let mut disp_d2 = [Vec3::zeros(); 3];
        let mut disp = Vec3::zeros();
        for (k, &node) in eff.nodes.iter().enumerate() {
            for i in 0..3 {
                let ui = u[3 * node + i];
                disp[i] += eff.val[k][i] * ui;
                for a in 0..2 {
                    disp_d1[a][i] += eff.d1[k][a][i] * ui;
                }
                for a in 0..3 {
                    disp_d2[a][i] += eff.d2[k][a][i] * ui;
                }
            }
        }
        let (reference, deformed) = surface_frames(
            &geom_d1,
            &geom_d2,
            &disp_d1,
            &disp_d2,
            self.material.thickness,
            &self.thickness_rule.points,
            self.law(),
            &format!("element {}", elem.face),
        )
        .map_err(|source| AssemblyError::Element {
            element: elem.face,
            source,
        })?;
        let strain = strain_state(&reference, &deformed);
        let res = stress_resultants(
            &self.material,
            &reference,
            &strain,
            &format!("element {}", elem.face),
        )
        .map_err(|source| AssemblyError::Element {
            element: elem.face,
            source,
        })?;
        Ok(SurfaceSample {
            ref_pos,
            disp,
            normal: deformed.a3,
            membrane_energy_density: res.n.ddot(&strain.membrane),
        })
    }
}

pub struct SurfaceSample {
    pub ref_pos: Vec3,
    pub disp: Vec3,
    pub normal: Vec3,
    /// `n^{ab} eps_ab` at the mid-surface.
    pub membrane_energy_density: f64,
}

struct PointState {
    deformed: crate::shell_core::DeformedFrame,
    strain: StrainState,
    disp_val: Vec3,
}

/// Contract resultants with the variation set into element residual and
/// tangent. The internal tangent is symmetric; only the upper triangle is
/// computed and mirrored.
fn accumulate_internal(
    r_e: &mut DVector<f64>,
    k_e: &mut DMatrix<f64>,
    vs: &VariationSet,
    res: &StressResultants,
    w: f64,
) {
    let nd = vs.n_dofs;
    // Material rows: dn_s = D_nn deps_s + D_nm dkappa_s etc., with Voigt
    // doubling on the contraction index.
    let contract = |d: &[[f64; 3]; 3], x: &[f64; 3]| -> [f64; 3] {
        let mut out = [0.0; 3];
        for r in 0..3 {
            out[r] = d[r][0] * x[0] + d[r][1] * x[1] + 2.0 * d[r][2] * x[2];
        }
        out
    };
    let mut dn = vec![[0.0f64; 3]; nd];
    let mut dm = vec![[0.0f64; 3]; nd];
    for s in 0..nd {
        let de = &vs.d_membrane[s];
        let dk = &vs.d_bending[s];
        let n1 = contract(&res.d_nn, de);
        let n2 = contract(&res.d_nm, dk);
        let m1 = contract(&res.d_mn, de);
        let m2 = contract(&res.d_mm, dk);
        for v in 0..3 {
            dn[s][v] = n1[v] + n2[v];
            dm[s][v] = m1[v] + m2[v];
        }
    }

    for r in 0..nd {
        let de_r = Sym2(vs.d_membrane[r]);
        let dk_r = Sym2(vs.d_bending[r]);
        r_e[r] += w * (res.n.ddot(&de_r) + res.m.ddot(&dk_r));
        for s in r..nd {
            let pair = vs.pair(r, s);
            let material = Sym2(dn[s]).ddot(&de_r) + Sym2(dm[s]).ddot(&dk_r);
            let geometric =
                res.n.ddot(&Sym2(pair.dd_membrane)) + res.m.ddot(&Sym2(pair.dd_bending));
            let v = w * (material + geometric);
            k_e[(r, s)] += v;
            if s != r {
                k_e[(s, r)] += v;
            }
        }
    }
}
