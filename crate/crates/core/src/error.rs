use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
///
/// Variants split into two families: input errors (bad files, bad
/// parameters, violated preconditions) and numerical failures (degenerate
/// geometry discovered while solving). [`Error::is_numerical`] tells them
/// apart; the CLI maps them to exit codes 1 and 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("light position {index} has zero length")]
    ZeroVector { index: usize },
    #[error("light {index} is not above the wafer plane (z = {z})")]
    BelowPlane { index: usize, z: f64 },
    #[error("at least {required} lights are required, got {got}")]
    TooFewLights { required: usize, got: usize },
    #[error("at least 3 images are required (one per light direction), got {got}")]
    TooFewImages { got: usize },
    #[error("light direction matrix is rank deficient (coplanar light set)")]
    RankDeficientLights,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("raster is empty")]
    EmptyRaster,
    #[error("plane fit is degenerate: fewer than 3 non-collinear valid pixels")]
    DegenerateFit,
    #[error("leveling weights underflowed at pixel ({x}, {y}); depth_sigma is too small")]
    DegenerateWeights { x: usize, y: usize },
    #[error("at least 3 points are required, got {0}")]
    TooFewPoints(usize),
    #[error("points are collinear; no circle fits them")]
    CollinearPoints,
    #[error("no contour at level {level} um")]
    NoContour { level: f64 },
    #[error("only open contours at level {level} um (via truncated by the image border)")]
    OpenContourOnly { level: f64 },
    #[error("no via found: depth range {range} um is below the noise floor {floor} um")]
    NoVia { range: f64, floor: f64 },
    #[error("length mismatch: {measured} measurements vs {reference} references")]
    LengthMismatch { measured: usize, reference: usize },
    #[error("numerical aperture {na} must lie in (0, {immersion})")]
    InvalidNA { na: f64, immersion: f64 },
    #[error("refractive index {0} must exceed the exit medium index")]
    InvalidIndex(f64),
    #[error("lateral offset {0} mm must be positive")]
    NonpositiveOffset(f64),
    #[error("vias {0} and {1} overlap")]
    OverlappingVias(usize, usize),
    #[error("{path}: image is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        path: PathBuf,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0}")]
    UnsupportedMaxval(u32),
    #[error("bad magic: expected FDM1")]
    BadMagic,
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    /// True for failures discovered while solving, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficientLights
                | Error::DegenerateFit
                | Error::DegenerateWeights { .. }
                | Error::CollinearPoints
                | Error::NoContour { .. }
                | Error::OpenContourOnly { .. }
                | Error::NoVia { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
