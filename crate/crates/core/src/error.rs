use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("function has no finite value")]
    ImproperFunction,
    #[error("grid spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("dual grid too small: conjugating argmax reached the dual boundary at {0} node(s)")]
    DualGridTooSmall(usize),
    #[error("scale parameter must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("point lies outside the finite domain")]
    OutsideDomain,
    #[error("no finite neighbor for finite-difference slope")]
    NoFiniteNeighbor,
    #[error("direction is not unit length: |u| = {0}")]
    NonUnitDirection(f64),
    #[error("origin is not interior to the support")]
    OriginNotInterior,
    #[error("no growth certificate: function is not coercive on its box")]
    CertificateNotFound,
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("support set is unbounded")]
    UnboundedBody,
    #[error("weight field grows faster than the density decays")]
    WeightBlowup,
    #[error("measure has no atoms")]
    EmptyMeasure,
    #[error("measures live in different ambient spaces")]
    AmbientMismatch,
    #[error("beta1 must be positive, got {0}")]
    NonpositiveBeta1(f64),
    #[error("measure fails the admissibility conditions: {0}")]
    InadmissibleMeasure(String),
    #[error("no feasible point: constraint never reached tau within the slope budget")]
    NoFeasiblePoint,
    #[error("conjugate is not integrable: {0}")]
    ConjugateNotIntegrable(String),
    #[error("invalid quadrature config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
