//! Densities `λ(z)|dz|` of curvature −1: closed forms, solvers and Schwarzians.
//!
//! Closed-form hyperbolic densities, a Green's-function solver for the
//! Liouville equation `Δu = e^{2u}` on the unit disk, a Perron iteration for
//! bounded multiply connected domains, the explicit metric of the twice
//! punctured plane, and Schwarzian derivatives of metrics and maps.

pub mod agard;
pub mod closed_forms;
pub mod density;
pub mod domain;
pub mod error;
pub mod geodesic;
pub mod green;
pub mod grid;
pub mod maps;
pub mod path;
pub mod perron;
pub mod schwarzian;
pub mod special;

pub use density::{curvature_estimate, eval_density, glue_max, pullback, Density, DensityKind};
pub use domain::{DomainSpec, Rect, RoundDisk};
pub use error::{MetricError, Result};
pub use grid::{Grid, NodeKind};
pub use path::{path_length, PathPolyline};
pub use num_complex::Complex64;
