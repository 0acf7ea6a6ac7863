use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient observations: need at least {needed}, got {got}")]
    InsufficientObservations { needed: usize, got: usize },
    #[error("estimation failure: {0}")]
    Estimation(Failure),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for every outcome the failure-rate statistic counts: numerical
    /// failures and problems with too few people.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(self, Error::Estimation(_) | Error::InsufficientObservations { .. })
    }
}

impl From<Failure> for Error {
    fn from(f: Failure) -> Self {
        Error::Estimation(f)
    }
}

/// Why an estimate could not be produced. All kinds are counted the same way
/// by the Monte Carlo failure rate; the kind is kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Failure {
    /// A linear system lost rank (people collinear with the camera, coincident
    /// points, all lines identical).
    RankDeficient,
    /// A solved `1/f^2` term was not positive.
    NonPositiveFocal,
    /// Depths could not be made all positive with one sign of the scale.
    Cheirality,
    /// The ground plane offset came out non-positive.
    NonPositiveOffset,
    /// The vertical vanishing point or horizon is at infinity.
    PointAtInfinity,
    /// No generalized eigenpair passed the distortion filters.
    NoDistortionCandidate,
    /// RANSAC never produced a usable consensus set.
    NoConsensus,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Failure::RankDeficient => "rank-deficient system",
            Failure::NonPositiveFocal => "non-positive 1/f^2 solution",
            Failure::Cheirality => "depths of mixed sign",
            Failure::NonPositiveOffset => "non-positive ground plane offset",
            Failure::PointAtInfinity => "degenerate point at infinity",
            Failure::NoDistortionCandidate => "no admissible distortion eigenpair",
            Failure::NoConsensus => "no consensus set",
        };
        f.write_str(s)
    }
}
