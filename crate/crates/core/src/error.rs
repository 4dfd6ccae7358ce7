use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("scaling exponent must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("all coordinates are zero")]
    AllZero,
    #[error("at least two values are required")]
    TooFewValues,
    #[error("operation requires a finite place")]
    NotFinitePlace,
    #[error("prime factor does not fit in 64 bits")]
    PrimeTooLarge,
    #[error("point at infinity has no chart compatible with this operation")]
    ChartMismatch,
    #[error("type-1 endpoint lies at infinite distance")]
    Type1Endpoint,
    #[error("objects live over different places")]
    PlaceMismatch,
    #[error("radii must satisfy 0 <= r <= s")]
    BadRadii,
    #[error("segments do not abut to form a segment")]
    NotAbuttable,
    #[error("bound parameters violate their preconditions")]
    BadBoundParameters,
    #[error("residue characteristic 2 is not supported here")]
    ResidueCharTwo,
    #[error("center coincides with a branch point")]
    BranchPointCenter,
    #[error("quadruple has repeated points")]
    DegenerateQuadruple,
    #[error("Legendre parameter must differ from 0 and 1")]
    BadLegendreParameter,
    #[error("level {level} exceeds cap {cap}")]
    LevelTooLarge { level: u32, cap: u32 },
    #[error("pairing of coincident Dirac masses is undefined")]
    SingularPair,
    #[error("quadrature did not reach the requested tolerance")]
    QuadratureFailure,
    #[error("quartic root finder did not converge")]
    NonConvergentRoots,
    #[error("{excluded} of {total} sample pairs coincide")]
    CoincidentAtoms { excluded: u64, total: u64 },
    #[error("degenerate pair configuration")]
    DegenerateConfig,
    #[error("finite set is empty")]
    EmptyF,
    #[error("too few samples")]
    TooFewSamples,
    #[error("precision exhausted in p-adic iteration")]
    PrecisionExhausted,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotPrime(_) => "NotPrime",
            Error::BadEpsilon(_) => "BadEpsilon",
            Error::ZeroInput => "ZeroInput",
            Error::AllZero => "AllZero",
            Error::TooFewValues => "TooFewValues",
            Error::NotFinitePlace => "NotFinitePlace",
            Error::PrimeTooLarge => "PrimeTooLarge",
            Error::ChartMismatch => "ChartMismatch",
            Error::Type1Endpoint => "Type1Endpoint",
            Error::PlaceMismatch => "PlaceMismatch",
            Error::BadRadii => "BadRadii",
            Error::NotAbuttable => "NotAbuttable",
            Error::BadBoundParameters => "BadBoundParameters",
            Error::ResidueCharTwo => "ResidueCharTwo",
            Error::BranchPointCenter => "BranchPointCenter",
            Error::DegenerateQuadruple => "DegenerateQuadruple",
            Error::BadLegendreParameter => "BadLegendreParameter",
            Error::LevelTooLarge { .. } => "LevelTooLarge",
            Error::SingularPair => "SingularPair",
            Error::QuadratureFailure => "QuadratureFailure",
            Error::NonConvergentRoots => "NonConvergentRoots",
            Error::CoincidentAtoms { .. } => "CoincidentAtoms",
            Error::DegenerateConfig => "DegenerateConfig",
            Error::EmptyF => "EmptyF",
            Error::TooFewSamples => "TooFewSamples",
            Error::PrecisionExhausted => "PrecisionExhausted",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
