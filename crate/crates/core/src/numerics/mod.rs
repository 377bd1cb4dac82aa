//! Numeric kernels: special functions, one-dimensional distributions,
//! adaptive quadrature, Bessel K0, random-walk Metropolis, and reproducible
//! RNG streams.

mod bessel;
mod dist;
mod mh;
pub(crate) mod quad;
mod rng;
pub mod special;

pub use bessel::bessel_k0;
pub use dist::{Dist1D, Tabulated};
pub use mh::{mh_sample, MhOptions, MhRun};
pub use quad::{quad, quad_default};
pub use rng::RngStream;
