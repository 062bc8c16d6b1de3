use charmer_core::error::CharmerError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scene: {0}")]
    Scene(String),
    #[error("scene parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CharmerError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// The JSON object printed when a command fails.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub kind: &'static str,
    /// Name of the violated precondition, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precondition: Option<&'static str>,
    pub message: String,
}

impl CliError {
    pub fn record(&self) -> ErrorRecord {
        let (kind, precondition) = match self {
            CliError::Scene(_) => ("scene", Some("valid_scene")),
            CliError::Parse(_) => ("parse", Some("valid_scene")),
            CliError::Io(_) => ("io", None),
            CliError::Core(e) => core_kind(e),
        };
        ErrorRecord {
            status: "error",
            kind,
            precondition,
            message: self.to_string(),
        }
    }
}

fn core_kind(e: &CharmerError) -> (&'static str, Option<&'static str>) {
    use CharmerError::*;
    match e {
        DimensionMismatch { .. } => ("dimension_mismatch", None),
        DimensionTooSmall(_) => ("dimension_too_small", None),
        ZeroVector => ("zero_vector", None),
        NotOnSphere => ("not_on_sphere", None),
        NotOrthogonal { .. } => ("not_orthogonal", None),
        NotInGroup { .. } => ("not_in_group", None),
        Su11Constraint { .. } => ("su11_constraint", None),
        InvalidPartition(_) => ("invalid_partition", None),
        PartitionMismatch => ("partition_mismatch", None),
        InvalidArgument(_) => ("invalid_argument", None),
        Lined { .. } => ("lined", Some("not_lined")),
        StartMismatch { .. } => ("start_mismatch", Some("curve_starts_at_snout")),
        OutsideAdmissibleBall { .. } => ("outside_admissible_ball", Some("admissible_ball")),
        TooFewValues(_) => ("too_few_values", Some("three_values")),
        NotClosed { .. } => ("not_closed", Some("closed_loop")),
        NotC2 { .. } => ("not_c2", Some("c2_at_crossing")),
        InadmissibleCrossing { .. } => ("inadmissible_crossing", Some("crossing_admissible")),
        DegenerateTangency { .. } => ("degenerate_tangency", Some("crossing_admissible")),
        OutsideBivaluedImage { .. } => ("outside_bivalued_image", Some("bivalued_image")),
        NotBivalued => ("not_bivalued", Some("two_values")),
        NotNomadic { .. } => ("not_nomadic", Some("nomadic")),
        ZeroSphericalDimension => ("zero_spherical_dimension", Some("positive_spherical_dimension")),
        NotAtOrigin { .. } => ("not_at_origin", Some("snout_at_origin")),
        NoRotationFit { .. } => ("no_rotation_fit", None),
        LiftStopped { .. } => ("lift_stopped", None),
        ProbeFailed { .. } => ("probe_failed", None),
    }
}
