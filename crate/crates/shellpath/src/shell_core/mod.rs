//! Pointwise shell mechanics: geometric frames, membrane and bending
//! strains, constitutive response with plane-stress condensation, stress
//! resultants through the thickness, and first/second variations of the
//! kinematic quantities with respect to nodal degrees of freedom.
//!
//! Everything here is a pure function of its inputs and safe to evaluate
//! concurrently across quadrature points.

mod frames;
mod material;
mod resultants;
mod variations;

pub use frames::{
    deformed_frame, reference_frame, surface_frames, DeformedFrame, ReferenceFrame,
    ThicknessPointRef,
};
pub use material::{
    energy_density, material_response, MaterialModel, MaterialParams, MaterialResponse,
    ThicknessLaw,
};
pub use resultants::{stress_resultants, StressResultants};
pub use variations::{strain_variations, EffectiveBasis, PairVariation, VariationSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MechanicsError {
    #[error("degenerate surface tangents (J = {jacobian:.3e}) {context}")]
    SingularGeometry { jacobian: f64, context: String },
    #[error("deformed in-plane metric not positive definite (det = {det:.3e}) {context}")]
    NonPositiveDefinite { det: f64, context: String },
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
}

/// Symmetric 2x2 surface tensor, components ordered `[11, 22, 12]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2(pub [f64; 3]);

impl Sym2 {
    pub const ZERO: Sym2 = Sym2([0.0; 3]);

    #[inline]
    pub fn det(&self) -> f64 {
        self.0[0] * self.0[1] - self.0[2] * self.0[2]
    }

    /// Inverse of a symmetric 2x2 tensor (no positivity check).
    #[inline]
    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2([self.0[1] / d, self.0[0] / d, -self.0[2] / d])
    }

    /// Full contraction `A^{ab} B_{ab}` between a contravariant and a
    /// covariant symmetric tensor (the off-diagonal term counts twice).
    #[inline]
    pub fn ddot(&self, other: &Sym2) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + 2.0 * self.0[2] * other.0[2]
    }

    /// `(A B A)^{ab}` for symmetric `A` (indices up) and `B` (indices down).
    #[inline]
    pub fn sandwich(&self, b: &Sym2) -> Sym2 {
        let a = self.0;
        let m = [
            [a[0] * b.0[0] + a[2] * b.0[2], a[0] * b.0[2] + a[2] * b.0[1]],
            [a[2] * b.0[0] + a[1] * b.0[2], a[2] * b.0[2] + a[1] * b.0[1]],
        ];
        Sym2([
            m[0][0] * a[0] + m[0][1] * a[2],
            m[1][0] * a[2] + m[1][1] * a[1],
            m[0][0] * a[2] + m[0][1] * a[1],
        ])
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    #[inline]
    pub fn add(&self, other: &Sym2) -> Sym2 {
        Sym2([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
        ])
    }

    #[inline]
    pub fn sub(&self, other: &Sym2) -> Sym2 {
        Sym2([
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
        ])
    }

    /// Component by Voigt index pair, e.g. `get(0,1) = A_12`.
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.0[a]
        } else {
            self.0[2]
        }
    }
}

/// Voigt pair table for the `[11, 22, 12]` ordering.
pub const VOIGT: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];
/// Contraction weights for the Voigt ordering (12 counts twice).
pub const VOIGT_WEIGHT: [f64; 3] = [1.0, 1.0, 2.0];

/// Membrane strain and bending strain of the mid-surface.
#[derive(Debug, Clone, Copy, Default)]
pub struct StrainState {
    pub membrane: Sym2,
    pub bending: Sym2,
}

/// `eps_ab = (a_ab - abar_ab)/2`, `kappa_ab = -b_ab + bbar_ab`.
pub fn strain_state(reference: &ReferenceFrame, deformed: &DeformedFrame) -> StrainState {
    StrainState {
        membrane: deformed.metric.sub(&reference.metric).scale(0.5),
        bending: reference.curvature.sub(&deformed.curvature),
    }
}
