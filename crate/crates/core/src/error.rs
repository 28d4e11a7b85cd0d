use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: both must be positive")]
    InvalidDimensions { width: usize, height: usize },

    #[error("disk radius {radius} out of range (0, {max}]")]
    RadiusOutOfRange { radius: f64, max: f64 },

    #[error("ragged raster: row {row} has {found} cells, expected {expected}")]
    RaggedRaster {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("empty raster")]
    EmptyRaster,

    #[error("malformed bitmap: {0}")]
    Bitmap(String),

    #[error("window contains no pixels inside the {width}x{height} grid")]
    EmptyWindow { width: usize, height: usize },

    #[error("l_max must be at least 1, got {0}")]
    InvalidLMax(i32),

    #[error("no transmitting pixels in the {arm} arm")]
    NoTransmission { arm: &'static str },

    #[error("at least 2 realizations are required, got {0}")]
    TooFewRealizations(usize),

    #[error("mean detected intensity is zero in the {arm} arm")]
    DegenerateIntensity { arm: &'static str },

    #[error("invalid offset grid: {0}")]
    InvalidOffsets(String),

    #[error("image is empty")]
    EmptyImage,

    #[error("window centred at rim point ({x:.2}, {y:.2}) is clipped by the grid boundary")]
    RimWindowClipped { x: f64, y: f64 },

    #[error("degenerate binning: {0}")]
    DegenerateBinning(String),

    #[error("no correlation curve for filter orientation {0:.6} rad")]
    MissingCurve(f64),

    #[error("correlation denominator vanishes at ({theta_a:.6}, {theta_b:.6})")]
    ZeroDenominator { theta_a: f64, theta_b: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
