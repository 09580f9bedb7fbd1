//! Tests of spatial segregation and association built on nearest-neighbor
//! contingency tables, plus the Monte Carlo machinery and second-order
//! diagnostics that go with them.
//!
//! The pipeline: a [`geom::MarkedPointSet`] yields a [`geom::NnGraph`]
//! (nearest neighbors, shared-NN count `Q`, reflexive count `R`), the graph
//! yields an [`nnct::Nnct`], and the class sizes together with `(Q, R)`
//! determine the conditional cell-count moments
//! ([`moments::MomentModel`]) that drive the overall and class-specific
//! chi-square tests in [`stat_tests`]. [`pattern`] generates the null and
//! alternative processes, [`mc`] runs simulation/randomization inference
//! and the size/power harness, and [`secondorder`] provides Ripley K/L,
//! case-control K differences, and pair correlation with simulation
//! envelopes.

pub mod chisq;
pub mod error;
pub mod geom;
pub mod linalg;
pub mod mc;
pub mod moments;
pub mod nnct;
pub mod pattern;
pub mod secondorder;

pub use error::{Error, Result};
pub use geom::{build_nn_graph, MarkedPointSet, NnGraph, Point2, RectWindow};
pub use moments::{cell_moments, MomentModel};
pub use nnct::{build_nnct, expected_counts, Nnct};
pub use pattern::{generate, generate_replicate, PatternKind, PatternSpec};
pub use stat_tests::{
    all_tests, base_class_specific, dixon_overall, nn_class_specific, TestKind, TestReport,
};
