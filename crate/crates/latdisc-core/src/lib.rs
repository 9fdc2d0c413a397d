//! Lattice-point discrepancy of convex planar bodies with flat boundary
//! points.
//!
//! The crate measures how the number of integer lattice points in a dilated,
//! translated convex body deviates from its area, and connects that
//! discrepancy to the decay of the body's Fourier transform. Boundary points
//! where the curvature vanishes to finite order slow the Fourier decay along
//! their normal directions and, when the normal is rational, contribute an
//! explicit oscillating main term to the discrepancy; everything here exists
//! to compute both sides of that correspondence and check them against each
//! other.
//!
//! Module map:
//! - [`body`]: body constructors (disk, flat-point ellipse variants,
//!   rotations, profile bodies), slice geometry, flat-point metadata.
//! - [`lattice`]: exact lattice counting, one-dimensional discrepancy
//!   profiles in the offset, and Monte Carlo L^p norms of the discrepancy.
//! - [`spectral`]: Fourier transforms of indicator functions (slice and
//!   boundary routes), directional decay fits, and Parseval checks.
//! - [`asymptotics`]: the flat-point main term, its interference corollary,
//!   one-dimensional model integrals, and predicted growth exponents.
//! - [`numerics`], [`quad`], [`rng`], [`error`]: shared numeric kernels,
//!   oscillatory quadrature, keyed randomness, and the error type.

// Parameter validation uses `!(x > 0.0)` style on purpose: the negation
// rejects NaN along with out-of-range values, which `x <= 0.0` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod body;
pub mod error;
pub mod lattice;
pub mod numerics;
pub mod quad;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
