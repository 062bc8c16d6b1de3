use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharmerError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("zero vector is not allowed here")]
    ZeroVector,

    #[error("cannot normalize a (near) zero vector onto the sphere")]
    NotOnSphere,

    #[error("matrix is not a proper rotation (residual {residual:.3e})")]
    NotOrthogonal { residual: f64 },

    #[error("matrix is too far from the Lorentz group (residual {residual:.3e})")]
    NotInGroup { residual: f64 },

    #[error("SU(1,1) constraint |a|^2 - |b|^2 = 1 violated (value {value:.6})")]
    Su11Constraint { value: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("configurations have different partitions")]
    PartitionMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration is lined (smallest singular value of M = {sigma_min:.3e})")]
    Lined { sigma_min: f64 },

    #[error("curve starts at distance {distance:.3e} from the snout")]
    StartMismatch { distance: f64 },

    #[error(
        "path leaves the admissible open ball of radius {radius:.6} (L - 2 sed) at t = {t:.6}, |gamma| = {norm:.6}"
    )]
    OutsideAdmissibleBall { radius: f64, t: f64, norm: f64 },

    #[error("configuration takes only {0} distinct value(s); the group ODE needs at least 3")]
    TooFewValues(usize),

    #[error("curve is not closed (gap {gap:.3e})")]
    NotClosed { gap: f64 },

    #[error("curve is not C2 at t = {t}")]
    NotC2 { t: f64 },

    #[error(
        "inadmissible crossing of a lined configuration at t = {t0:.9}: curvature {kappa:.6}, required {required:.6}, <gamma', p> = {orthogonality:.3e}"
    )]
    InadmissibleCrossing {
        t0: f64,
        kappa: f64,
        required: f64,
        orthogonality: f64,
    },

    #[error("tangency with the lined sphere at t = {t0:.9} with vanishing velocity")]
    DegenerateTangency { t0: f64 },

    #[error("path leaves the image of the bivalued endpoint map at t = {t:.6} (|gamma| = {norm:.6})")]
    OutsideBivaluedImage { t: f64, norm: f64 },

    #[error("configuration is not bivalued")]
    NotBivalued,

    #[error("configuration is not nomadic (sed = {sed:.6})")]
    NotNomadic { sed: f64 },

    #[error("configuration has spherical dimension 0; use the bivalued model")]
    ZeroSphericalDimension,

    #[error("snout is not at the origin (|f| = {norm:.3e})")]
    NotAtOrigin { norm: f64 },

    #[error("no rotation maps the reference onto this configuration (residual {residual:.3e})")]
    NoRotationFit { residual: f64 },

    #[error("lift stopped early at t = {t:.6}: {reason}")]
    LiftStopped { t: f64, reason: String },

    #[error("connectivity probe failed at s = {s:.6}: {reason}")]
    ProbeFailed { s: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, CharmerError>;
