//! Covariant frames, metrics and curvatures of the mid-surface, plus the
//! through-thickness reference data needed by the constitutive integration.

use super::{MechanicsError, Sym2};
use crate::mesh::Vec3;
use crate::shell_core::material::ThicknessLaw;

/// Reference mid-surface frame at one quadrature point, with pre-evaluated
/// shell-space metrics at the through-thickness rule points.
#[derive(Debug, Clone)]
pub struct ReferenceFrame {
    /// Covariant tangents `abar_1, abar_2`.
    pub a: [Vec3; 2],
    /// Unit normal `abar_3`.
    pub a3: Vec3,
    /// Second parametric derivatives `abar_{a,b}` in Voigt order [11, 22, 12].
    pub da: [Vec3; 3],
    /// Normal derivatives `abar_{3,a}` from the Weingarten relation.
    pub a3_d: [Vec3; 2],
    /// First fundamental form `abar_ab`.
    pub metric: Sym2,
    /// Contravariant metric `abar^ab`.
    pub metric_inv: Sym2,
    /// Second fundamental form `bbar_ab`.
    pub curvature: Sym2,
    /// Mid-surface Jacobian `Jbar = |abar_1 x abar_2|`.
    pub jac: f64,
    /// Reference thickness `hbar`.
    pub thickness: f64,
    /// Shell-space data at the thickness quadrature points.
    pub t3: Vec<ThicknessPointRef>,
}

/// Reference shell-space metrics at one `theta^3` station.
#[derive(Debug, Clone, Copy)]
pub struct ThicknessPointRef {
    pub theta3: f64,
    pub weight: f64,
    /// `gbar_ab = abar_ab - 2 theta3 bbar_ab` (higher-order term dropped).
    pub gbar_cov: Sym2,
    /// In-plane block of the contravariant metric; `gbar^33 = 1`.
    pub gbar_inv: Sym2,
    /// Thickness Jacobian ratio `J_c`.
    pub jc: f64,
}

/// Deformed mid-surface frame.
#[derive(Debug, Clone)]
pub struct DeformedFrame {
    pub a: [Vec3; 2],
    pub da: [Vec3; 3],
    /// Unnormalized normal `atilde_3 = a_1 x a_2`.
    pub a3_tilde: Vec3,
    /// Unit normal.
    pub a3: Vec3,
    pub metric: Sym2,
    /// `b_ab = lambda3 a_{a,b} . a_3` (the thickness stretch factors in).
    pub curvature: Sym2,
    pub jac: f64,
    /// Thickness stretch: `Jbar / J` for the incompressible law, 1 otherwise.
    pub lambda3: f64,
    /// Director `d = lambda3 a_3`.
    pub d: Vec3,
}

/// Build the reference frame from parametric derivatives of the reference
/// geometry. `geom_d1` holds the two first derivatives, `geom_d2` the three
/// second derivatives in Voigt order [11, 22, 12].
pub fn reference_frame(
    geom_d1: &[Vec3; 2],
    geom_d2: &[Vec3; 3],
    thickness: f64,
    theta3_points: &[(f64, f64)],
    context: &str,
) -> Result<ReferenceFrame, MechanicsError> {
    let abar = *geom_d1;
    let dabar = *geom_d2;
    let atilde_ref = abar[0].cross(&abar[1]);
    let jbar = atilde_ref.norm();
    if jbar <= 1e-14 {
        return Err(MechanicsError::SingularGeometry {
            jacobian: jbar,
            context: context.to_string(),
        });
    }
    let a3bar = atilde_ref / jbar;
    let metric_bar = Sym2([
        abar[0].dot(&abar[0]),
        abar[1].dot(&abar[1]),
        abar[0].dot(&abar[1]),
    ]);
    let metric_bar_inv = metric_bar.inverse();
    let curv_bar = Sym2([
        dabar[0].dot(&a3bar),
        dabar[1].dot(&a3bar),
        dabar[2].dot(&a3bar),
    ]);

    // Weingarten: abar_{3,a} = -bbar_{ac} abar^{cd} abar_d.
    let mut a3_d = [Vec3::zeros(), Vec3::zeros()];
    for alpha in 0..2 {
        let b_row = [curv_bar.get(alpha, 0), curv_bar.get(alpha, 1)];
        for delta in 0..2 {
            let coeff: f64 = (0..2)
                .map(|c| b_row[c] * metric_bar_inv.get(c, delta))
                .sum();
            a3_d[alpha] -= coeff * abar[delta];
        }
    }

    let mut t3 = Vec::with_capacity(theta3_points.len());
    for &(theta3, weight) in theta3_points {
        let gbar_cov = metric_bar.sub(&curv_bar.scale(2.0 * theta3));
        let g1 = abar[0] + theta3 * a3_d[0];
        let g2 = abar[1] + theta3 * a3_d[1];
        let jc = g1.cross(&g2).dot(&a3bar).abs() / jbar;
        t3.push(ThicknessPointRef {
            theta3,
            weight,
            gbar_cov,
            gbar_inv: gbar_cov.inverse(),
            jc,
        });
    }

    Ok(ReferenceFrame {
        a: abar,
        a3: a3bar,
        da: dabar,
        a3_d,
        metric: metric_bar,
        metric_inv: metric_bar_inv,
        curvature: curv_bar,
        jac: jbar,
        thickness,
        t3,
    })
}

/// Deformed frame on top of a reference frame and displacement derivatives.
pub fn deformed_frame(
    reference: &ReferenceFrame,
    disp_d1: &[Vec3; 2],
    disp_d2: &[Vec3; 3],
    law: ThicknessLaw,
    context: &str,
) -> Result<DeformedFrame, MechanicsError> {
    let abar = &reference.a;
    let dabar = &reference.da;
    let a = [abar[0] + disp_d1[0], abar[1] + disp_d1[1]];
    let da = [
        dabar[0] + disp_d2[0],
        dabar[1] + disp_d2[1],
        dabar[2] + disp_d2[2],
    ];
    let a3_tilde = a[0].cross(&a[1]);
    let jac = a3_tilde.norm();
    if jac <= 1e-14 {
        return Err(MechanicsError::SingularGeometry {
            jacobian: jac,
            context: context.to_string(),
        });
    }
    let a3 = a3_tilde / jac;
    let lambda3 = match law {
        ThicknessLaw::Incompressible => reference.jac / jac,
        ThicknessLaw::Unit => 1.0,
    };
    let metric = Sym2([a[0].dot(&a[0]), a[1].dot(&a[1]), a[0].dot(&a[1])]);
    let curvature = Sym2([
        lambda3 * da[0].dot(&a3),
        lambda3 * da[1].dot(&a3),
        lambda3 * da[2].dot(&a3),
    ]);

    Ok(DeformedFrame {
        a,
        da,
        a3_tilde,
        a3,
        metric,
        curvature,
        jac,
        lambda3,
        d: lambda3 * a3,
    })
}

/// Assemble reference and deformed frames from parametric derivatives of the
/// reference geometry and of the displacement field.
#[allow(clippy::too_many_arguments)]
pub fn surface_frames(
    geom_d1: &[Vec3; 2],
    geom_d2: &[Vec3; 3],
    disp_d1: &[Vec3; 2],
    disp_d2: &[Vec3; 3],
    thickness: f64,
    theta3_points: &[(f64, f64)],
    law: ThicknessLaw,
    context: &str,
) -> Result<(ReferenceFrame, DeformedFrame), MechanicsError> {
    let reference = reference_frame(geom_d1, geom_d2, thickness, theta3_points, context)?;
    let deformed = deformed_frame(&reference, disp_d1, disp_d2, law, context)?;
    Ok((reference, deformed))
}
