//! SL(3) Kuznetsov weight kernels.
//!
//! The long-element and w4 kernels are evaluated two ways, by their power
//! series and by Mellin-Barnes contour integrals, together with the completed
//! GL(3) Whittaker function, the weight transforms H_w against symmetric test
//! functions, and the SL(3, Z) Kloosterman sums of the geometric side.

pub mod contour;
pub mod dd;
pub mod error;
pub mod gamma;
pub mod geometry;
pub mod kernel;
pub mod kloosterman;
pub mod kuznetsov;
pub mod mb;
pub mod ode;
pub mod quad;
pub mod series;
pub mod spectral;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use spectral::{SpectralParams, WeylElement};
