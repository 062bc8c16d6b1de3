//! Tolerances shared across the crate.
//!
//! Kept in one place so that every module agrees on what "on the sphere",
//! "in the group" and "the same value" mean.

/// Unit vectors are renormalized when their norm drifts past this.
pub const SPHERE_TOL: f64 = 1e-12;

/// Maximum tolerated `|g^T J g - J|` for a group element after renormalization.
pub const GROUP_RESIDUAL: f64 = 1e-9;

/// Beyond this residual `renormalize` refuses to project (integrator blow-up).
pub const GROUP_BLOWUP: f64 = 0.1;

/// Steps between two renormalizations of the group element in the lift.
pub const RENORM_CADENCE: usize = 16;

/// Two constant values closer than this (chordal) are the same point of the sphere.
pub const CLUSTER_TOL: f64 = 1e-9;

/// Relative tolerance for the adaptive construction of sampled pieces.
pub const QUADRATURE_TOL: f64 = 1e-11;

/// Gauss-Legendre order on every sub-interval of a sampled piece.
pub const GL_ORDER: usize = 8;

/// Sampled pieces start from this many sub-intervals before refinement.
pub const MIN_SUBINTERVALS: usize = 8;

/// Hard cap on sub-intervals per sampled piece.
pub const MAX_SUBINTERVALS: usize = 4096;

/// Default lined test: smallest singular value of `M(z)` at most this times `L`.
pub const LINED_TOL: f64 = 1e-8;

/// Orthogonality tolerance for rotations handed to `psi` and friends.
pub const ROTATION_TOL: f64 = 1e-9;

/// Settings record gathering the defaults above, for callers that want to
/// carry them around (scene files, sessions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsSettings {
    pub group_residual: f64,
    pub renorm_cadence: usize,
    pub cluster_tol: f64,
    pub quadrature_tol: f64,
    pub lined_tol: f64,
}

impl Default for NumericsSettings {
    fn default() -> Self {
        Self {
            group_residual: GROUP_RESIDUAL,
            renorm_cadence: RENORM_CADENCE,
            cluster_tol: CLUSTER_TOL,
            quadrature_tol: QUADRATURE_TOL,
            lined_tol: LINED_TOL,
        }
    }
}
