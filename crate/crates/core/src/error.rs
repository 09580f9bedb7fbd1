//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors raised by point-set construction, test statistics, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// Fewer points than the operation supports.
    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },

    /// A coordinate was NaN or infinite.
    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },

    /// Window bounds are inverted or degenerate.
    #[error("invalid window: xmin < xmax and ymin < ymax required (got [{xmin}, {xmax}] x [{ymin}, {ymax}])")]
    InvalidWindow {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },

    /// Points and labels (or graph and point set) disagree in length.
    #[error("length mismatch: {left} vs {right} ({context})")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    /// A class label is outside `0..num_classes`.
    #[error("class label {label} out of range for {num_classes} classes")]
    ClassOutOfRange { label: usize, num_classes: usize },

    /// Fewer than two classes declared.
    #[error("at least two classes required, got {got}")]
    TooFewClasses { got: usize },

    /// An index argument out of range.
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// A class too small for the requested test.
    #[error("class {class} has only {size} point(s); test undefined")]
    DegenerateClass { class: usize, size: usize },

    /// Parameter outside its documented domain.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// A matrix operation received a non-symmetric input.
    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },

    /// Numerical breakdown (non-PSD covariance, |r| = 1 degeneracy, ...).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The coefficient-fit system is singular; more configurations needed.
    #[error("moment coefficient fit is singular: {0}")]
    SingularFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
