//! Constitutive response with plane-stress condensation.
//!
//! For the incompressible Mooney-Rivlin model the through-thickness stretch
//! follows from area incompressibility and the Lagrange multiplier pressure
//! from the plane-stress condition `S^33 = 0`. The condensed in-plane
//! tangent folds the thickness-direction strain increment back into the
//! in-plane components, which makes it the exact derivative of the stress
//! along the incompressibility constraint.
//!
//! Saint Venant-Kirchhoff is compressible; the thickness stretch stays at 1
//! and `E_33` is eliminated statically, giving the familiar plane-stress
//! moduli.

use super::{MechanicsError, Sym2, VOIGT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialModel {
    /// `W = c1 (I1 - 3) + c2 (I2 - 3)`, incompressible.
    MooneyRivlin { c1: f64, c2: f64 },
    /// `W = lambda/2 tr(E)^2 + mu E:E` via Young's modulus and Poisson ratio.
    StVenantKirchhoff { youngs: f64, poisson: f64 },
}

/// How the thickness stretch is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThicknessLaw {
    /// `lambda3 = Jbar / J` (incompressible models).
    Incompressible,
    /// `lambda3 = 1` (compressible plane-stress condensation).
    Unit,
}

#[derive(Debug, Clone, Copy)]
pub struct MaterialParams {
    pub model: MaterialModel,
    /// Reference thickness `hbar`.
    pub thickness: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), MechanicsError> {
        if !(self.thickness > 0.0) {
            return Err(MechanicsError::InvalidMaterial(format!(
                "thickness must be positive, got {}",
                self.thickness
            )));
        }
        match self.model {
            MaterialModel::MooneyRivlin { c1, c2 } => {
                if c1 < 0.0 || c2 < 0.0 || c1 + c2 <= 0.0 {
                    return Err(MechanicsError::InvalidMaterial(format!(
                        "Mooney-Rivlin needs c1 >= 0, c2 >= 0, c1 + c2 > 0 (got {c1}, {c2})"
                    )));
                }
            }
            MaterialModel::StVenantKirchhoff { youngs, poisson } => {
                if youngs <= 0.0 || !(0.0..0.5).contains(&poisson) {
                    return Err(MechanicsError::InvalidMaterial(format!(
                        "St.Venant-Kirchhoff needs E > 0 and 0 <= nu < 0.5 (got {youngs}, {poisson})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn thickness_law(&self) -> ThicknessLaw {
        match self.model {
            MaterialModel::MooneyRivlin { .. } => ThicknessLaw::Incompressible,
            MaterialModel::StVenantKirchhoff { .. } => ThicknessLaw::Unit,
        }
    }
}

/// In-plane second Piola-Kirchhoff stress and condensed tangent at one
/// through-thickness point.
#[derive(Debug, Clone, Copy)]
pub struct MaterialResponse {
    /// `S^ab` in Voigt order [11, 22, 12].
    pub stress: Sym2,
    /// Condensed tangent `Chat^{abcd}` as a Voigt 3x3 (minor and major
    /// symmetric by construction).
    pub tangent: [[f64; 3]; 3],
    /// Lagrange multiplier pressure (Mooney-Rivlin only).
    pub p_tilde: Option<f64>,
}

impl MaterialResponse {
    /// Reconstruct `S^33 = 2 dW/dC33 - p C^33`; zero by construction for the
    /// incompressible model.
    pub fn s33_residual(&self, dw_dc33: f64, lambda3: f64) -> f64 {
        match self.p_tilde {
            Some(p) => 2.0 * dw_dc33 - p / (lambda3 * lambda3),
            None => 0.0,
        }
    }
}

/// Evaluate stress and condensed tangent.
///
/// `gbar_inv`/`gbar_cov` are the reference in-plane metrics at this
/// through-thickness point, `g_cov` the deformed in-plane metric
/// (`C_ab = g_ab`), and `lambda3` the thickness stretch (1 for StVK).
pub fn material_response(
    model: MaterialModel,
    gbar_inv: &Sym2,
    gbar_cov: &Sym2,
    g_cov: &Sym2,
    lambda3: f64,
    context: &str,
) -> Result<MaterialResponse, MechanicsError> {
    let det = g_cov.det();
    if det <= 0.0 || g_cov.0[0] <= 0.0 {
        return Err(MechanicsError::NonPositiveDefinite {
            det,
            context: context.to_string(),
        });
    }
    match model {
        MaterialModel::MooneyRivlin { c1, c2 } => {
            Ok(mooney_rivlin(c1, c2, gbar_inv, g_cov, lambda3))
        }
        MaterialModel::StVenantKirchhoff { youngs, poisson } => {
            Ok(st_venant_kirchhoff(youngs, poisson, gbar_inv, gbar_cov, g_cov))
        }
    }
}

fn mooney_rivlin(c1: f64, c2: f64, gbar_inv: &Sym2, c_cov: &Sym2, lambda3: f64) -> MaterialResponse {
    let l2 = lambda3 * lambda3;
    let c_inv = c_cov.inverse();
    // In-plane trace tr_p = C_ab gbar^ab; the full trace I1 adds C_33.
    let tr_p = gbar_inv.ddot(c_cov);
    // dW/dC_ab = c1 gbar^ab + c2 [(tr_p + lambda3^2) gbar^ab - (gbar C gbar)^ab]
    let gcg = gbar_inv.sandwich(c_cov);
    let mut w1 = [0.0f64; 3];
    for k in 0..3 {
        w1[k] = c1 * gbar_inv.0[k] + c2 * ((tr_p + l2) * gbar_inv.0[k] - gcg.0[k]);
    }
    // dW/dC_33 = c1 + c2 tr_p; d2W/dC33^2 = 0; d2W/dC_ab dC33 = c2 gbar^ab.
    let w33 = c1 + c2 * tr_p;
    let p_tilde = 2.0 * l2 * w33;

    let mut stress = Sym2::ZERO;
    for k in 0..3 {
        stress.0[k] = 2.0 * w1[k] - p_tilde * c_inv.0[k];
    }

    // Tangent per the condensation: the explicit 4 dW2 term, the two
    // p-gradient terms, the p C^-1 derivative block, and the plane-stress
    // elimination which closes to + lambda3^2 * 6 W33 * Cinv x Cinv.
    let dp = |k: usize| 2.0 * l2 * c2 * gbar_inv.0[k];
    let mut tangent = [[0.0f64; 3]; 3];
    for (r, &(a, b)) in VOIGT.iter().enumerate() {
        for (s, &(c, d)) in VOIGT.iter().enumerate() {
            let w2 = c2 * gbar_inv.0[s] * gbar_inv.0[r]
                - 0.5 * c2
                    * (gbar_inv.get(a, c) * gbar_inv.get(b, d)
                        + gbar_inv.get(a, d) * gbar_inv.get(b, c));
            let pc = c_inv.0[r] * c_inv.0[s]
                - c_inv.get(a, c) * c_inv.get(b, d)
                - c_inv.get(a, d) * c_inv.get(b, c);
            let mut t = 4.0 * w2 - 2.0 * dp(s) * c_inv.0[r] - 2.0 * dp(r) * c_inv.0[s]
                - p_tilde * pc;
            // Static condensation of dE_33.
            t += l2 * 6.0 * w33 * c_inv.0[r] * c_inv.0[s];
            tangent[r][s] = t;
        }
    }

    MaterialResponse {
        stress,
        tangent,
        p_tilde: Some(p_tilde),
    }
}

fn st_venant_kirchhoff(
    youngs: f64,
    poisson: f64,
    gbar_inv: &Sym2,
    gbar_cov: &Sym2,
    g_cov: &Sym2,
) -> MaterialResponse {
    // Plane-stress moduli: lambda_bar = E nu / (1 - nu^2), mu = E / 2(1+nu).
    let mu = 0.5 * youngs / (1.0 + poisson);
    let lambda_bar = youngs * poisson / (1.0 - poisson * poisson);

    let strain = g_cov.sub(gbar_cov).scale(0.5);
    let tr = gbar_inv.ddot(&strain);
    let geg = gbar_inv.sandwich(&strain);

    let mut stress = Sym2::ZERO;
    for k in 0..3 {
        stress.0[k] = lambda_bar * tr * gbar_inv.0[k] + 2.0 * mu * geg.0[k];
    }

    let mut tangent = [[0.0f64; 3]; 3];
    for (r, &(a, b)) in VOIGT.iter().enumerate() {
        for (s, &(c, d)) in VOIGT.iter().enumerate() {
            tangent[r][s] = lambda_bar * gbar_inv.0[r] * gbar_inv.0[s]
                + mu
                    * (gbar_inv.get(a, c) * gbar_inv.get(b, d)
                        + gbar_inv.get(a, d) * gbar_inv.get(b, c));
        }
    }

    MaterialResponse {
        stress,
        tangent,
        p_tilde: None,
    }
}

/// Strain energy density per unit reference volume at a through-thickness
/// point. For Mooney-Rivlin the invariants include the thickness stretch;
/// for StVK the condensed `E_33` is substituted back.
pub fn energy_density(
    model: MaterialModel,
    gbar_inv: &Sym2,
    gbar_cov: &Sym2,
    g_cov: &Sym2,
    lambda3: f64,
) -> f64 {
    match model {
        MaterialModel::MooneyRivlin { c1, c2 } => {
            let l2 = lambda3 * lambda3;
            let tr_p = gbar_inv.ddot(g_cov);
            let i1 = tr_p + l2;
            // tr(C^2) restricted to this block structure.
            let gc = gbar_inv.sandwich(g_cov); // (gbar C gbar)^ab
            let tr_c2 = gc.ddot(g_cov) + l2 * l2;
            let i2 = 0.5 * (i1 * i1 - tr_c2);
            c1 * (i1 - 3.0) + c2 * (i2 - 3.0)
        }
        MaterialModel::StVenantKirchhoff { youngs, poisson } => {
            let mu = 0.5 * youngs / (1.0 + poisson);
            let lambda_l = youngs * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
            let strain = g_cov.sub(gbar_cov).scale(0.5);
            let tr_in = gbar_inv.ddot(&strain);
            let e33 = -lambda_l / (lambda_l + 2.0 * mu) * tr_in;
            let tr = tr_in + e33;
            let geg = gbar_inv.sandwich(&strain);
            let ee = geg.ddot(&strain) + e33 * e33;
            0.5 * lambda_l * tr * tr + mu * ee
        }
    }
}
