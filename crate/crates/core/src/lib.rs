//! Numerical toolkit for the Riesz alpha-energy calculus of log-concave
//! functions.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! grid_convex  -> logconcave -> quad -> variation -> measure -> minkowski
//! (conjugates)    (f = e^-phi)  (I_a,   (delta I_a)   (R_a(f,.))  (inverse
//!                                energies)                         problem)
//! ```
//!
//! * [`grid_convex`] holds the discrete convex-analysis engine: lattice
//!   functions with values in R union {+inf}, linear-time Legendre
//!   transforms, the Asplund combine `(s phi* + t psi*)*`, epigraph scaling
//!   and subgradients.
//! * [`logconcave`] models f = e^{-phi} with analytic or grid backing,
//!   support sets with Gauss/radial maps, total masses and growth
//!   certificates phi >= b|x| + c.
//! * [`quad`] integrates the Riesz kernel |x-y|^{alpha-n} with exact local
//!   primitives near the diagonal, an epsilon-regularized fallback and a
//!   reproducible Monte Carlo path.
//! * [`variation`] evaluates the first variation of the energy along the
//!   Asplund sum by four independent routes that cross-check each other.
//! * [`measure`] builds the energy measure (the push-forward of
//!   I_a(f,y) f(y) dy under grad phi), its spherical companion, and the
//!   admissibility checks for inverse-problem data.
//! * [`minkowski`] solves the even inverse problem by constrained
//!   minimization over even max-affine potentials and verifies the result.
//!
//! Everything is deterministic: Monte Carlo is seeded and counter-based,
//! parallel reductions happen in a fixed order, so a given configuration
//! reproduces bit-identical results at any thread count.

pub mod error;
pub mod ext;
pub mod grid;
pub mod grid_convex;
pub mod logconcave;
pub mod measure;
pub mod minkowski;
pub mod quad;
pub mod support;
pub mod variation;

pub use error::{CoreError, Result};
pub use ext::Ext;
pub use grid::GridSpec;
pub use grid_convex::GridConvexFunction;
pub use logconcave::{GrowthCondition, LogConcaveFunction};
pub use measure::{AdmissibilityReport, DiscreteMeasure};
pub use minkowski::{MaxAffineEven, SolverConfig, SolverResult};
pub use quad::{EnergyReport, QuadMethod, QuadratureConfig};
pub use support::SupportSet;
pub use variation::{VariationReport, VariationRoute};
