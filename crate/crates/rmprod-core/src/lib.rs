#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod invariant_measure;
pub mod lyapunov;
pub mod pade_stieltjes;
pub mod quadrature;
pub mod schrodinger;
pub mod simulate;
pub mod special_functions;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use quadrature::QuadratureConfig;
