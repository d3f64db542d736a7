//! Warped products with possibly vanishing warping functions, a numerical
//! distance engine for them, and distance-only curvature comparisons.

pub mod certify;
pub mod comparison;
pub mod constructions;
pub mod convexity;
pub mod expr;
pub mod metric;
pub mod model;
pub mod warp;
pub mod warped;
