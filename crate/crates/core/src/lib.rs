//! Spectra of Neumann Laplacians on domains with many small room-and-passage
//! resonators attached along one edge, and of the limit operators they
//! converge to.
//!
//! The pipeline runs geometry → mesh → assembly → eigen → limit → analysis;
//! [`study`] ties the stages together for an ε sweep.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod eigen;
pub mod geometry;
pub mod limit;
pub mod mesh;
pub mod sparse;
pub mod study;

pub use analysis::{hausdorff_distance, AnalysisError, ConvergenceReport, Interval, TrendVerdict};
pub use assembly::{AssemblyError, DensityField, TraceMap};
pub use eigen::spectrum::{SpectralTag, Spectrum};
pub use eigen::{EigSolveOptions, EigenError, EigenSolution, Pencil};
pub use geometry::{
    BaseDomain, GeometryError, PerturbationParams, PerturbedDomain, RegimeClass, ScalingNumbers, ShapeSpec,
};
pub use limit::{LimitError, LimitProblem, LimitSolver};
pub use mesh::{MeshError, TriMesh};
pub use sparse::SparseSymMatrix;
pub use study::{StudyArtifacts, StudyConfig, StudyError};
