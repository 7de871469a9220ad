//! Sparse ordinary kriging for functional data.
//!
//! Longitudinal observations at a set of sites are smoothed into curves
//! ([`basis`]), spatial dependence between curves is summarised by the
//! trace-variogram ([`variogram`]), and the curve at an unobserved site is
//! predicted as a weighted combination of observed curves. The weights come
//! either from ordinary functional kriging ([`ofk`]) or from its adaptive-lasso
//! penalised counterpart ([`sofk`]), solved with an augmented Lagrangian outer
//! loop and an accelerated proximal-gradient inner loop. Tuning parameters are
//! chosen by leave-one-out cross-validation ([`cv`]), and [`simgen`] provides a
//! synthetic data generator together with the OFK-vs-SOFK experiment loop.
//!
//! Site order is the canonical index order for every vector and matrix in the
//! crate: row `i` of a coefficient matrix, entry `i` of a weight vector and
//! row/column `i` of a kriging matrix all refer to the `i`-th site as loaded.

pub mod basis;
pub mod cv;
pub mod error;
pub mod io;
pub mod linalg;
pub mod ofk;
pub mod simgen;
pub mod sofk;
pub mod variogram;

mod optim;

pub use basis::{BasisDescriptor, BasisKind, FunctionalDataset};
pub use cv::{CvGrid, CvReport};
pub use error::{Error, Result};
pub use io::{LocationSet, LongitudinalTable, Site};
pub use ofk::{KrigingSystem, OfkSolution};
pub use sofk::{SofkConfig, SofkProblem, SofkSolution};
pub use variogram::{EmpiricalTraceVariogram, VariogramFamily, VariogramModel};
