//! Numerical Lorentzian geometry with a potential f: symbolic metrics, Bakry-Emery curvature,
//! weighted and conformal connections, geodesics, Jacobi congruences and hypersurface data.
//!
//! Sign conventions: signature (-,+,...,+), R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y]Z,
//! Ric(Y,Z) = tr(X ↦ R(X,Y)Z), future-directed means positive t component.

#![allow(clippy::needless_range_loop)]

pub mod congruence;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod frame;
pub mod geodesic;
pub mod hypersurface;
pub mod ode;
pub mod spacetime;

pub use curvature::ConnectionKind;
pub use error::{GeometryError, Result};
pub use expr::{parse_expr, Expression};
pub use ode::IntegrationControl;
pub use spacetime::{build_spacetime, Builtin, SpacetimeModel, SpacetimeSpec, SyntheticDimension, TangentVector};
