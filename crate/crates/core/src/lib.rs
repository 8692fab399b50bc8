//! Jet-based evaluation of intrinsic and extrinsic conformal Laplacians and
//! Q-curvatures, with numerical verification of their transformation laws.

pub mod config;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod hypersurface;
pub mod jet;
pub mod operators;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
pub use expr::Expr;
pub use geometry::{Axis, Chart, ExprField, Metric, PointGeometry, ScalarField, Tensor};
pub use jet::Jet;
