//! Explicit bi-Lipschitz rectification of Delone sets.
//!
//! Given a finite window of a Delone set that is a boundedly displaced image
//! of the integer lattice, this crate builds a homeomorphism of Euclidean
//! space, identity outside a bounded region, that carries every matched
//! point exactly onto its lattice partner:
//!
//! - [`geom`]: point sets, grid index, Delone constants, patch recurrence.
//! - [`generators`]: lattices, perturbed lattices, the Fibonacci chain and
//!   chair-tiling vertices.
//! - [`matching`]: bottleneck matching onto lattice points.
//! - [`rectify`]: the homeomorphism itself, built from ball pushes and Dehn
//!   half-twists, with evaluation, inversion and constant bounds.
//! - [`verify`]: independent checks of a plan.
//! - [`render`]: SVG figures of planar constructions.
//! - [`cli`]: the `delone` command line.

pub mod cli;
pub mod generators;
pub mod geom;
pub mod matching;
pub mod rectify;
pub mod render;
pub mod verify;

pub use geom::{Point, PointSet, Window};
