//! Point sets in Euclidean space: windows, spatial indexing, Delone
//! constants and patch recurrence.

mod delone;
mod index;
mod point;
mod point_set;
pub mod segment;

pub use delone::{
    delone_constants, find_translated_copy, patch_at, repetitivity_profile,
    repetitivity_profile_with, separation, DeloneConstants, Patch, ProfileEntry, ProfileOptions,
};
pub use index::{GridIndex, IndexError, MAX_CELLS};
pub use point::{Point, Window};
pub use point_set::{default_cell_size, PointSet, PointSetData, DUPLICATE_TOL};

pub(crate) use point::{dist, dot, norm};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point {0} lies outside the window")]
    PointOutsideWindow(usize),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("point set is empty")]
    EmptySet,
    #[error("window is degenerate")]
    DegenerateWindow,
    #[error("ball does not fit inside the window")]
    BallOutsideWindow,
    #[error("window too small for the requested radii")]
    WindowTooSmall,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("parse error: {0}")]
    Parse(String),
}
