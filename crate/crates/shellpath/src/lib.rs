//! Nonlinear Kirchhoff-Love thin shells on Catmull-Clark subdivision
//! surfaces.
//!
//! The crate traces inflation equilibrium paths of hyperelastic shells with
//! arc-length continuation, monitors stability through eigenvalues of the
//! tangent stiffness, and follows post-bifurcation branches by perturbing
//! along critical eigenvectors.
//!
//! Pipeline: [`mesh`] owns the quad control grid and patch stencils,
//! [`basis`] evaluates limit-surface bases and derivatives, [`shell_core`]
//! computes pointwise membrane/bending mechanics with plane-stress-condensed
//! material tangents, [`assembly`] integrates residuals and tangent
//! stiffness including the follower-pressure terms, and [`continuation`]
//! drives Newton / arc-length path following with eigenvalue stability
//! checks. [`bench`] generates the built-in benchmark problems and [`cli`]
//! wires everything to the `shellpath` binary.
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability.

pub mod assembly;
pub mod basis;
pub mod bench;
pub mod cli;
pub mod config;
pub mod shell_core;
pub mod continuation;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod problem;
