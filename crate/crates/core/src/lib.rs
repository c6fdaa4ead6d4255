//! Hyperbolic convex hulls and volumes in the Klein model.
//!
//! The Klein model represents hyperbolic n-space as the open Euclidean unit
//! ball in which geodesics are straight chords. Hyperbolic and Euclidean
//! convex hulls therefore coincide, and every volume computation reduces to
//! integrating the density `(1 - |x|^2)^{-(n+1)/2}` over a Euclidean polytope.
//!
//! Modules:
//!
//! - [`klein`]: points, metric, volume density, isometries and balls.
//! - [`hull`]: Euclidean convex hulls inside the ball, membership and apex
//!   triangulation.
//! - [`volume`]: hyperbolic volume of simplices, polytopes and regions.
//! - [`cones`]: vertex cones hanging from ideal vertices, the facet
//!   decomposition maps and the bounding integral.
//! - [`extension`]: epsilon-extensions, greedy packings and hull/extension
//!   volume ratios.
//! - [`experiments`]: the experiment driver behind the `hypervol` CLI.

pub mod cones;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod hull;
pub mod klein;
pub mod quadrature;
pub mod rng;
pub mod volume;

pub use error::{HypError, Result};
pub use klein::{IdealPoint, Isometry, KleinPoint, BOUNDARY_TOL};
pub use hull::{Polytope, Simplex};
pub use volume::{Budget, VolumeEstimate, VolumeMethod};
