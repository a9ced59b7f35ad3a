use thiserror::Error;

use crate::cover::{PointId, RegionId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the geometric layer (jets, covers, groups, sheaves).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{op}: shape mismatch ({left_rows}x{left_cols} vs {right_rows}x{right_cols})")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("{op}: operands are defined on different point sets")]
    DomainMismatch { op: &'static str },

    #[error("singular matrix at point {point} (|det| = {det:e})")]
    Singular { point: PointId, det: f64 },

    #[error("non-finite value at point {point}")]
    NonFinite { point: PointId },

    #[error("unknown region {0}")]
    UnknownRegion(RegionId),

    #[error("region is not contained in the field's domain (point {point} missing)")]
    NotContained { point: PointId },

    #[error("pieces {alpha} and {beta} disagree at point {point} (residual {residual:e})")]
    OverlapMismatch {
        alpha: RegionId,
        beta: RegionId,
        point: PointId,
        residual: f64,
    },

    #[error("no Jacobian from chart {from} to chart {to} at point {point}")]
    MissingJacobian {
        from: RegionId,
        to: RegionId,
        point: PointId,
    },

    #[error("invalid cover: {0}")]
    InvalidCover(String),

    #[error("missing cocycle entry for ({0}, {1})")]
    MissingCocycle(RegionId, RegionId),

    #[error("missing local form for chart {0}")]
    MissingForm(RegionId),

    #[error("regions {0} and {1} do not overlap")]
    EmptyOverlap(RegionId, RegionId),

    #[error("basis expansion residual {residual:e} at point {point}")]
    ExpansionResidual { point: PointId, residual: f64 },

    #[error("adjoint action leaves the Lie algebra span at point {point} (residual {residual:e})")]
    LeavesSpan { point: PointId, residual: f64 },

    #[error("invalid group element at point {point}: {reason}")]
    InvalidElement { point: PointId, reason: String },

    #[error("invalid group model: {0}")]
    InvalidModel(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("connection propagation disagrees on chart {chart} at point {point} (residual {residual:e})")]
    CycleInconsistency {
        chart: RegionId,
        point: PointId,
        residual: f64,
    },

    #[error("chart {0} is not reachable through overlaps")]
    Disconnected(RegionId),

    #[error("precondition `{check}` failed (residual {residual:e}, tolerance {tolerance:e})")]
    Precondition {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("value on chart {chart} at point {point} lies outside the image of the Lie algebra map (residual {residual:e})")]
    NotInImage {
        chart: RegionId,
        point: PointId,
        residual: f64,
    },

    #[error("Lie algebra map is not injective (smallest singular value {0:e})")]
    NotInjective(f64),
}
