//! Perturbation determinants, resonances and regularized spectral shift
//! functions for one-dimensional semiclassical Schrodinger operators
//! `-h^2 d^2/dx^2 + V` with compactly supported `V`.

pub mod counterexample;
pub mod determinants;
pub mod distortion;
pub mod error;
pub mod freefield;
pub mod grid;
pub mod nystrom;
pub mod potentials;
pub mod quadrature;
pub mod resonances;
pub mod special;
pub mod ssf;
pub mod zeta;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
