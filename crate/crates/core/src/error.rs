use std::io;

/// Errors produced by the crossview library.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// Arguments violate an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Configuration or registry content is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A camera sits inside an occupied voxel.
    #[error("degenerate viewpoint{}: camera at ({x:.3}, {y:.3}, {z:.3}) is inside occupied voxel", frame.map(|f| format!(" at frame {f}")).unwrap_or_default())]
    DegenerateViewpoint {
        frame: Option<usize>,
        x: f64,
        y: f64,
        z: f64,
    },
    /// Cell elevations exceed the occupancy grid height.
    #[error("elevation exceeds max_height {max_height} m at cells {cells:?}")]
    ElevationTooHigh {
        max_height: f64,
        cells: Vec<(usize, usize)>,
    },
    /// A non-sky point lies outside the height-field footprint.
    #[error("point {index} at ({x:.3}, {y:.3}) lies outside the height-field footprint")]
    OutsideFootprint { index: usize, x: f64, y: f64 },
    /// Two rasters or channels that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// An internal invariant failed a runtime check.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A file does not follow its declared format.
    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
