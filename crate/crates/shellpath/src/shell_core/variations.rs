//! First and second variations of the kinematic quantities with respect to
//! element degrees of freedom.
//!
//! A DOF `r = 3 k + i` moves Cartesian component `i` of element node `k`, so
//! `delta_r a_alpha = N^k_{,alpha} c_i` and `delta_r a_{alpha,beta} =
//! N^k_{,alpha beta} c_i` are scalar multiples of the Cartesian axes. The
//! normal, Jacobian and thickness-stretch variations follow from
//! `atilde_3 = a_1 x a_2`; second variations of the strains come out of the
//! same product rules. The per-pair quantities are computed on demand by
//! [`VariationSet::pair`] to keep the element loop allocation-free.

use super::frames::DeformedFrame;
use super::material::ThicknessLaw;
use super::{Sym2, VOIGT};
use crate::basis::PatchBasis;
use crate::mesh::{PatchStencil, StencilSlot, Vec3};

/// Per-node, per-Cartesian-component scalar basis rows after folding ghost
/// slots onto their real donors. `val[k][i]` weights component `i` of node
/// `k`; mirror ghosts flip signs component-wise, so the fold stays diagonal.
#[derive(Debug, Clone)]
pub struct EffectiveBasis {
    /// Real (mesh-level) node ids of this element, sorted.
    pub nodes: Vec<usize>,
    pub val: Vec<[f64; 3]>,
    /// `d1[k][alpha][i]`
    pub d1: Vec<[[f64; 3]; 2]>,
    /// `d2[k][voigt ab][i]`
    pub d2: Vec<[[f64; 3]; 3]>,
}

impl EffectiveBasis {
    pub fn new(stencil: &PatchStencil, basis: &PatchBasis) -> Self {
        let nodes = stencil.real_nodes();
        let index_of = |v: usize| nodes.binary_search(&v).expect("node in stencil");
        let nn = nodes.len();
        let mut val = vec![[0.0; 3]; nn];
        let mut d1 = vec![[[0.0; 3]; 2]; nn];
        let mut d2 = vec![[[0.0; 3]; 3]; nn];
        for (slot_id, slot) in stencil.slots.iter().enumerate() {
            match slot {
                StencilSlot::Real(v) => {
                    let k = index_of(*v);
                    for i in 0..3 {
                        val[k][i] += basis.values[slot_id];
                        for a in 0..2 {
                            d1[k][a][i] += basis.d1[slot_id][a];
                        }
                        for a in 0..3 {
                            d2[k][a][i] += basis.d2[slot_id][a];
                        }
                    }
                }
                StencilSlot::Ghost(combo) => {
                    for (v, w) in &combo.terms {
                        let k = index_of(*v);
                        for i in 0..3 {
                            val[k][i] += w[i] * basis.values[slot_id];
                            for a in 0..2 {
                                d1[k][a][i] += w[i] * basis.d1[slot_id][a];
                            }
                            for a in 0..3 {
                                d2[k][a][i] += w[i] * basis.d2[slot_id][a];
                            }
                        }
                    }
                }
            }
        }
        EffectiveBasis { nodes, val, d1, d2 }
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.nodes.len()
    }
}

/// First variations per DOF plus the frame data needed to build pair terms.
#[derive(Debug, Clone)]
pub struct VariationSet {
    pub n_dofs: usize,
    /// Scalar coefficient of `delta_r a_alpha` along axis `i(r)`.
    pub c_d1: Vec<[f64; 2]>,
    /// Scalar coefficient of `delta_r a_{alpha,beta}` (Voigt) along `i(r)`.
    pub c_d2: Vec<[f64; 3]>,
    /// Basis value (for `delta_r u`).
    pub c_val: Vec<f64>,
    /// Cartesian component moved by DOF r.
    pub comp: Vec<usize>,
    /// `delta_r atilde_3`.
    pub d_a3t: Vec<Vec3>,
    /// `delta_r J`.
    pub d_jac: Vec<f64>,
    /// `delta_r a_3`.
    pub d_a3: Vec<Vec3>,
    /// `delta_r lambda3`.
    pub d_lambda3: Vec<f64>,
    /// `delta_r eps` (Voigt).
    pub d_membrane: Vec<[f64; 3]>,
    /// `delta_r kappa` (Voigt).
    pub d_bending: Vec<[f64; 3]>,
    /// `a_{alpha,beta} . delta_r a_3` per Voigt pair, reused by the second
    /// variations.
    pub da_dot_da3: Vec<[f64; 3]>,
    // frame copies for pair evaluation
    da: [Vec3; 3],
    a3_tilde: Vec3,
    a3: Vec3,
    jac: f64,
    jbar: f64,
    lambda3: f64,
    da_dot_a3: [f64; 3],
    incompressible: bool,
}

/// Second variations of the strains for one DOF pair.
#[derive(Debug, Clone, Copy)]
pub struct PairVariation {
    pub dd_membrane: [f64; 3],
    pub dd_bending: [f64; 3],
}

/// Assemble all per-DOF variations at one quadrature point.
pub fn strain_variations(
    basis: &EffectiveBasis,
    jbar: f64,
    deformed: &DeformedFrame,
    law: ThicknessLaw,
) -> VariationSet {
    let n_dofs = basis.n_dofs();
    let nn = basis.nodes.len();
    let a = deformed.a;
    let da = deformed.da;
    let a3t = deformed.a3_tilde;
    let a3 = deformed.a3;
    let jac = deformed.jac;
    let lambda3 = deformed.lambda3;
    let incompressible = law == ThicknessLaw::Incompressible;

    let mut set = VariationSet {
        n_dofs,
        c_d1: vec![[0.0; 2]; n_dofs],
        c_d2: vec![[0.0; 3]; n_dofs],
        c_val: vec![0.0; n_dofs],
        comp: vec![0; n_dofs],
        d_a3t: vec![Vec3::zeros(); n_dofs],
        d_jac: vec![0.0; n_dofs],
        d_a3: vec![Vec3::zeros(); n_dofs],
        d_lambda3: vec![0.0; n_dofs],
        d_membrane: vec![[0.0; 3]; n_dofs],
        d_bending: vec![[0.0; 3]; n_dofs],
        da_dot_da3: vec![[0.0; 3]; n_dofs],
        da,
        a3_tilde: a3t,
        a3,
        jac,
        jbar,
        lambda3,
        da_dot_a3: [da[0].dot(&a3), da[1].dot(&a3), da[2].dot(&a3)],
        incompressible,
    };

    let axis = [Vec3::x(), Vec3::y(), Vec3::z()];
    for k in 0..nn {
        for i in 0..3 {
            let r = 3 * k + i;
            set.comp[r] = i;
            set.c_val[r] = basis.val[k][i];
            set.c_d1[r] = [basis.d1[k][0][i], basis.d1[k][1][i]];
            set.c_d2[r] = [basis.d2[k][0][i], basis.d2[k][1][i], basis.d2[k][2][i]];

            // delta_r atilde_3 = delta_r a_1 x a_2 + a_1 x delta_r a_2
            let da3t = set.c_d1[r][0] * axis[i].cross(&a[1]) + set.c_d1[r][1] * a[0].cross(&axis[i]);
            let djac = a3.dot(&da3t);
            let da3 = (da3t - djac * a3) / jac;
            let dl3 = if incompressible {
                -jbar / (jac * jac) * djac
            } else {
                0.0
            };
            set.d_a3t[r] = da3t;
            set.d_jac[r] = djac;
            set.d_a3[r] = da3;
            set.d_lambda3[r] = dl3;

            for (v, &(al, be)) in VOIGT.iter().enumerate() {
                // delta_r eps_ab = 1/2 (delta_r a_a . a_b + delta_r a_b . a_a)
                set.d_membrane[r][v] =
                    0.5 * (set.c_d1[r][al] * a[be][i] + set.c_d1[r][be] * a[al][i]);
                let da_da3 = da[v].dot(&da3);
                set.da_dot_da3[r][v] = da_da3;
                // delta_r kappa = -lambda3 (delta_r a_{ab} . a_3
                //   + a_{ab} . delta_r a_3) - delta_r lambda3 (a_{ab} . a_3)
                set.d_bending[r][v] = -lambda3 * (set.c_d2[r][v] * a3[i] + da_da3)
                    - dl3 * set.da_dot_a3[v];
            }
        }
    }
    set
}

impl VariationSet {
    /// Second variations of membrane and bending strain for DOFs `(r, s)`.
    #[inline]
    pub fn pair(&self, r: usize, s: usize) -> PairVariation {
        let (ir, is) = (self.comp[r], self.comp[s]);
        let same = ir == is;

        // delta_s delta_r eps_ab = 1/2 (delta_r a_a . delta_s a_b
        //   + delta_r a_b . delta_s a_a); axes are orthonormal.
        let mut dd_membrane = [0.0; 3];
        if same {
            for v in 0..3 {
                let (al, be) = VOIGT[v];
                dd_membrane[v] = 0.5
                    * (self.c_d1[r][al] * self.c_d1[s][be] + self.c_d1[r][be] * self.c_d1[s][al]);
            }
        }

        // delta_s delta_r atilde_3 = delta_r a_1 x delta_s a_2
        //   + delta_s a_1 x delta_r a_2 = coeff * (e_ir x e_is).
        let cross_coeff = self.c_d1[r][0] * self.c_d1[s][1] - self.c_d1[s][0] * self.c_d1[r][1];
        let dd_a3t = cross_coeff * AXIS_CROSS[ir][is];

        let j = self.jac;
        let dr_j = self.d_jac[r];
        let ds_j = self.d_jac[s];
        let dd_j = (dd_a3t.dot(&self.a3_tilde) + self.d_a3t[r].dot(&self.d_a3t[s])) / j
            - dr_j * ds_j / j;
        let j2 = j * j;
        let dd_a3 = dd_a3t / j - (dd_j / j2) * self.a3_tilde - (dr_j / j2) * self.d_a3t[s]
            - (ds_j / j2) * self.d_a3t[r]
            + (2.0 * dr_j * ds_j / (j2 * j)) * self.a3_tilde;
        let dd_l3 = if self.incompressible {
            -self.jbar * (-2.0 / (j2 * j) * ds_j * dr_j + dd_j / j2)
        } else {
            0.0
        };

        let l3 = self.lambda3;
        let dr_l3 = self.d_lambda3[r];
        let ds_l3 = self.d_lambda3[s];
        let mut dd_bending = [0.0; 3];
        for v in 0..3 {
            let t_r = self.c_d2[r][v] * self.a3[ir] + self.da_dot_da3[r][v];
            let t_s = self.c_d2[s][v] * self.a3[is] + self.da_dot_da3[s][v];
            let mixed = self.c_d2[r][v] * self.d_a3[s][ir]
                + self.c_d2[s][v] * self.d_a3[r][is]
                + self.da[v].dot(&dd_a3);
            dd_bending[v] = -ds_l3 * t_r - l3 * mixed - dd_l3 * self.da_dot_a3[v] - dr_l3 * t_s;
        }

        PairVariation {
            dd_membrane,
            dd_bending,
        }
    }

    /// First variation of the membrane strain as a `Sym2`.
    pub fn membrane_row(&self, r: usize) -> Sym2 {
        Sym2(self.d_membrane[r])
    }

    /// First variation of the bending strain as a `Sym2`.
    pub fn bending_row(&self, r: usize) -> Sym2 {
        Sym2(self.d_bending[r])
    }
}

/// `e_i x e_j` lookup.
const AXIS_CROSS: [[Vec3; 3]; 3] = {
    let z = Vec3::new(0.0, 0.0, 0.0);
    let mut t = [[z; 3]; 3];
    t[0][1] = Vec3::new(0.0, 0.0, 1.0);
    t[1][0] = Vec3::new(0.0, 0.0, -1.0);
    t[1][2] = Vec3::new(1.0, 0.0, 0.0);
    t[2][1] = Vec3::new(-1.0, 0.0, 0.0);
    t[2][0] = Vec3::new(0.0, 1.0, 0.0);
    t[0][2] = Vec3::new(0.0, -1.0, 0.0);
    t
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_patch_basis;
    use crate::mesh::{open_grid, ControlMesh};
    use crate::shell_core::{strain_state, surface_frames};

    /// Small curved test patch with a displacement field applied.
    fn setup() -> (ControlMesh, Vec<Vec3>, usize) {
        let m = open_grid(4, 4, |i, j| {
            let x = i as f64 * 0.8;
            let y = j as f64 * 0.9;
            Vec3::new(x, y, 0.08 * x * x - 0.1 * x * y)
        });
        let disp: Vec<Vec3> = (0..m.n_vertices())
            .map(|k| {
                let s = k as f64;
                0.05 * Vec3::new((0.3 * s).sin(), (0.7 * s).cos(), (0.5 * s).sin())
            })
            .collect();
        let fid = (0..m.n_faces())
            .find(|&f| m.face(f).iter().all(|&v| !m.is_boundary_vertex(v)))
            .unwrap();
        (m, disp, fid)
    }

    fn frames_at(
        m: &ControlMesh,
        disp: &[Vec3],
        fid: usize,
        t: (f64, f64),
        law: ThicknessLaw,
    ) -> (
        EffectiveBasis,
        crate::shell_core::ReferenceFrame,
        DeformedFrame,
    ) {
        let st = m.patch_stencil(fid).unwrap();
        let basis = eval_patch_basis(&st, t.0, t.1).unwrap();
        let eff = EffectiveBasis::new(&st, &basis);
        let mut geom_d1 = [Vec3::zeros(); 2];
        let mut geom_d2 = [Vec3::zeros(); 3];
        for (sid, slot) in st.slots.iter().enumerate() {
            let p = slot.ref_position(m.vertices());
            for a in 0..2 {
                geom_d1[a] += basis.d1[sid][a] * p;
            }
            for a in 0..3 {
                geom_d2[a] += basis.d2[sid][a] * p;
            }
        }
        let mut disp_d1 = [Vec3::zeros(); 2];
        let mut disp_d2 = [Vec3::zeros(); 3];
        for (k, &node) in eff.nodes.iter().enumerate() {
            let u = disp[node];
            for a in 0..2 {
                for i in 0..3 {
                    disp_d1[a][i] += eff.d1[k][a][i] * u[i];
                }
            }
            for a in 0..3 {
                for i in 0..3 {
                    disp_d2[a][i] += eff.d2[k][a][i] * u[i];
                }
            }
        }
        let rule = crate::basis::ThicknessRule::gauss(0.1, 2);
        let (r, d) = surface_frames(
            &geom_d1, &geom_d2, &disp_d1, &disp_d2, 0.1, &rule.points, law, "test",
        )
        .unwrap();
        (eff, r, d)
    }

    #[test]
    fn translation_mode_has_zero_strain_variation() {
        let (m, disp, fid) = setup();
        let (eff, r, d) = frames_at(&m, &disp, fid, (0.4, 0.6), ThicknessLaw::Incompressible);
        let vs = strain_variations(&eff, r.jac, &d, ThicknessLaw::Incompressible);
        // Uniform translation along each axis: sum of all DOF variations of
        // one component. Requires the partition-of-unity derivatives.
        for i in 0..3 {
            let mut de = [0.0; 3];
            let mut dk = [0.0; 3];
            for k in 0..eff.nodes.len() {
                let rdof = 3 * k + i;
                for v in 0..3 {
                    de[v] += vs.d_membrane[rdof][v];
                    dk[v] += vs.d_bending[rdof][v];
                }
            }
            for v in 0..3 {
                assert!(de[v].abs() < 1e-10, "axis {i} eps {de:?}");
                assert!(dk[v].abs() < 1e-10, "axis {i} kappa {dk:?}");
            }
        }
    }

    #[test]
    fn first_variations_match_finite_differences() {
        for law in [ThicknessLaw::Incompressible, ThicknessLaw::Unit] {
            let (m, disp, fid) = setup();
            let t = (0.3, 0.7);
            let (eff, r, d) = frames_at(&m, &disp, fid, t, law);
            let vs = strain_variations(&eff, r.jac, &d, law);
            let h = 1e-6;
            for &(k, i) in &[(0usize, 0usize), (3, 1), (7, 2), (10, 0)] {
                let node = eff.nodes[k];
                let rdof = 3 * k + i;
                let mut dp = disp.clone();
                dp[node][i] += h;
                let mut dm = disp.clone();
                dm[node][i] -= h;
                let (_, rp, fp) = frames_at(&m, &dp, fid, t, law);
                let (_, rm, fm) = frames_at(&m, &dm, fid, t, law);
                let sp = strain_state(&rp, &fp);
                let sm = strain_state(&rm, &fm);
                for v in 0..3 {
                    let fd_e = (sp.membrane.0[v] - sm.membrane.0[v]) / (2.0 * h);
                    let fd_k = (sp.bending.0[v] - sm.bending.0[v]) / (2.0 * h);
                    let scale_e = fd_e.abs().max(1e-3);
                    let scale_k = fd_k.abs().max(1e-3);
                    assert!(
                        (fd_e - vs.d_membrane[rdof][v]).abs() <= 1e-5 * scale_e,
                        "eps[{v}] dof ({k},{i}): fd {fd_e} vs {}",
                        vs.d_membrane[rdof][v]
                    );
                    assert!(
                        (fd_k - vs.d_bending[rdof][v]).abs() <= 1e-5 * scale_k,
                        "kappa[{v}] dof ({k},{i}) law {law:?}: fd {fd_k} vs {}",
                        vs.d_bending[rdof][v]
                    );
                }
                // lambda3 and J variations too.
                let fd_j = (fp.jac - fm.jac) / (2.0 * h);
                assert!((fd_j - vs.d_jac[rdof]).abs() <= 1e-5 * fd_j.abs().max(1e-3));
                let fd_l = (fp.lambda3 - fm.lambda3) / (2.0 * h);
                assert!((fd_l - vs.d_lambda3[rdof]).abs() <= 1e-5 * fd_l.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn second_variations_match_finite_differences_and_are_symmetric() {
        let law = ThicknessLaw::Incompressible;
        let (m, disp, fid) = setup();
        let t = (0.55, 0.25);
        let (eff, r, d) = frames_at(&m, &disp, fid, t, law);
        let vs = strain_variations(&eff, r.jac, &d, law);
        let h = 1e-6;
        let pairs = [(0usize, 0usize), (2, 5), (10, 3), (8, 8), (14, 1)];
        for &(rdof, sdof) in &pairs {
            let p = vs.pair(rdof, sdof);
            let q = vs.pair(sdof, rdof);
            for v in 0..3 {
                assert!((p.dd_membrane[v] - q.dd_membrane[v]).abs() < 1e-12);
                assert!(
                    (p.dd_bending[v] - q.dd_bending[v]).abs()
                        < 1e-11 * p.dd_bending[v].abs().max(1.0)
                );
            }
            // FD of the first variation in direction s.
            let (ks, is) = (sdof / 3, sdof % 3);
            let node = eff.nodes[ks];
            let mut dp = disp.clone();
            dp[node][is] += h;
            let mut dm = disp.clone();
            dm[node][is] -= h;
            let (effp, rp, fp) = frames_at(&m, &dp, fid, t, law);
            let (effm, rm, fm) = frames_at(&m, &dm, fid, t, law);
            let vp = strain_variations(&effp, rp.jac, &fp, law);
            let vm = strain_variations(&effm, rm.jac, &fm, law);
            for v in 0..3 {
                let fd_e = (vp.d_membrane[rdof][v] - vm.d_membrane[rdof][v]) / (2.0 * h);
                let fd_k = (vp.d_bending[rdof][v] - vm.d_bending[rdof][v]) / (2.0 * h);
                assert!(
                    (fd_e - p.dd_membrane[v]).abs() <= 2e-5 * fd_e.abs().max(1e-3),
                    "dd eps[{v}] ({rdof},{sdof}): fd {fd_e} vs {}",
                    p.dd_membrane[v]
                );
                assert!(
                    (fd_k - p.dd_bending[v]).abs() <= 2e-5 * fd_k.abs().max(1e-3),
                    "dd kappa[{v}] ({rdof},{sdof}): fd {fd_k} vs {}",
                    p.dd_bending[v]
                );
            }
        }
    }
}
