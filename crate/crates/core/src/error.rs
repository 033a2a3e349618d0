use core::fmt;

/// Errors raised by the numeric pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Grid dimensions are too small or do not match the data length.
    InvalidDimensions { width: usize, height: usize },
    /// Two inputs that must share dimensions do not.
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    /// Intensity outside `[0, 1]` or not finite.
    InvalidIntensity,
    /// A numeric parameter is outside its documented range.
    InvalidParameter(&'static str),
    /// A sequence has fewer frames than the operation needs.
    SequenceTooShort { frames: usize, required: usize },
    /// An LBP sample point falls outside the volume.
    OutOfBorder { x: usize, y: usize, t: usize },
    /// The volume cannot host the requested radii and block grid.
    VolumeTooSmall,
    /// Block grids of different sizes were combined.
    BlockGridMismatch { expected: usize, found: usize },
    /// An operation was given no input items.
    Empty(&'static str),
    /// Training data contains fewer than two classes.
    SingleClass,
    /// Feature vectors have differing lengths or hold non-finite values.
    InvalidFeatures(&'static str),
    /// Two feature vectors describe different videos.
    IdMismatch,
    /// The dataset cannot be split under the requested protocol.
    ProtocolPrecondition(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimensions { width, height } => {
                write!(f, "invalid grid dimensions {width}x{height}")
            }
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidIntensity => f.write_str("intensity outside [0, 1] or not finite"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::SequenceTooShort { frames, required } => write!(f, "sequence too short: {frames} frames, at least {required} required"),
            Error::OutOfBorder { x, y, t } => {
                write!(f, "sample at ({x}, {y}, {t}) reaches outside the volume")
            }
            Error::VolumeTooSmall => f.write_str("volume too small for radii and block grid"),
            Error::BlockGridMismatch { expected, found } => {
                write!(f, "block grid mismatch: expected {expected}, found {found}")
            }
            Error::Empty(what) => write!(f, "empty input: {what}"),
            Error::SingleClass => f.write_str("training set needs at least two classes"),
            Error::InvalidFeatures(what) => write!(f, "invalid features: {what}"),
            Error::IdMismatch => f.write_str("feature vectors belong to different videos"),
            Error::ProtocolPrecondition(what) => write!(f, "protocol precondition: {what}"),
        }
    }
}

impl core::error::Error for Error {}
