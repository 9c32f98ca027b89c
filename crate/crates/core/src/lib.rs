//! Prescribed-curvature convex hypersurfaces in hyperbolic space.
//!
//! The primal problem F(κ) = f(ν) for a closed strictly convex hypersurface
//! of H^{n+1} is transported by the Gauss map to the dual problem
//! F̃(κ̃) = 1/f on a spacelike graph in de Sitter space N, which is solved by
//! a logarithmic curvature flow started at a slice barrier. The solution is
//! then mapped back and verified against the primal equation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli_io;
pub mod curvfunc;
pub mod duality;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod lorentz;
pub mod sphere_grid;

pub use curvfunc::{CurvatureFunctionSpec, Family};
pub use geometry::{Ambient, GraphHypersurface, ShapeField};
pub use sphere_grid::{build_grid, covariant_jet, sphere_integrate, SphereGrid};
