//! Through-thickness integration of stress and tangent into membrane forces,
//! bending moments and the four resultant material matrices.

use super::frames::ReferenceFrame;
use super::material::{material_response, MaterialParams, ThicknessLaw};
use super::{MechanicsError, StrainState, Sym2};

/// `n^ab`, `m^ab` and the resultant moduli relating increments of membrane
/// and bending strain to increments of the resultants:
/// `d n = D_nn d eps + D_nm d kappa`, `d m = D_mn d eps + D_mm d kappa`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StressResultants {
    pub n: Sym2,
    pub m: Sym2,
    pub d_nn: [[f64; 3]; 3],
    pub d_nm: [[f64; 3]; 3],
    pub d_mn: [[f64; 3]; 3],
    pub d_mm: [[f64; 3]; 3],
    /// Strain energy per unit reference area (diagnostic).
    pub energy_area_density: f64,
}

/// Integrate the constitutive response over the thickness rule carried by
/// the reference frame.
pub fn stress_resultants(
    params: &MaterialParams,
    reference: &ReferenceFrame,
    strain: &StrainState,
    context: &str,
) -> Result<StressResultants, MechanicsError> {
    let mut out = StressResultants::default();
    let law = params.thickness_law();
    for tp in &reference.t3 {
        // Deformed in-plane metric at this station:
        // g_ab = gbar_ab + 2 (eps_ab + theta3 kappa_ab).
        let e_in = strain.membrane.add(&strain.bending.scale(tp.theta3));
        let g_cov = tp.gbar_cov.add(&e_in.scale(2.0));
        let lambda3 = match law {
            ThicknessLaw::Incompressible => {
                let det_ratio = tp.gbar_cov.det() / g_cov.det();
                if !(det_ratio > 0.0) {
                    return Err(MechanicsError::NonPositiveDefinite {
                        det: g_cov.det(),
                        context: context.to_string(),
                    });
                }
                det_ratio.sqrt()
            }
            ThicknessLaw::Unit => 1.0,
        };
        let resp = material_response(
            params.model,
            &tp.gbar_inv,
            &tp.gbar_cov,
            &g_cov,
            lambda3,
            context,
        )?;
        let w = tp.weight * tp.jc;
        let wt = w * tp.theta3;
        let wtt = wt * tp.theta3;
        for k in 0..3 {
            out.n.0[k] += w * resp.stress.0[k];
            out.m.0[k] += wt * resp.stress.0[k];
        }
        for r in 0..3 {
            for s in 0..3 {
                let c = resp.tangent[r][s];
                out.d_nn[r][s] += w * c;
                out.d_nm[r][s] += wt * c;
                out.d_mn[r][s] += wt * c;
                out.d_mm[r][s] += wtt * c;
            }
        }
        out.energy_area_density += w
            * super::material::energy_density(
                params.model,
                &tp.gbar_inv,
                &tp.gbar_cov,
                &g_cov,
                lambda3,
            );
    }
    Ok(out)
}
