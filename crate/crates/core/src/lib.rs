//! Numerical verification of rotation-valued matrix fields.
//!
//! * [`smallmat`]: 2x2/3x3 linear algebra, nearest rotations, Levi-Civita symbol.
//! * [`fields`]: grids, matrix fields, finite-difference div/curl/Laplacian, analytic test fields.
//! * [`identities`]: pointwise identities for rotation fields and gradient reconstruction from the curl.
//! * [`rigidity`]: best-fit rotations, rigidity quotients, circulation/flux certificates.
//! * [`bvapprox`]: piecewise-constant rotation approximants on cube covers.
//! * [`cli`]: configuration and report emission behind the `rotcurl` binary.

pub mod bvapprox;
pub mod cli;
pub mod error;
pub mod fields;
pub mod identities;
pub mod rigidity;
pub mod smallmat;

pub use error::{Error, Result};
