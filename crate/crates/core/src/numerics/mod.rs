//! Special functions, quadrature, root finding and seeded random streams.

mod bessel;
mod integrate;
mod quadrature;
mod rng;
mod roots;

pub use bessel::{bessel_k0, bessel_k1};
pub use integrate::{integrate_adaptive, integrate_with, IntegrateOptions};
pub use quadrature::{chebyshev_nodes, QuadratureRule};
pub use rng::RngStream;
pub use roots::find_root_bracketed;
