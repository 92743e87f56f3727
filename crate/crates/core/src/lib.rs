//! Spectral continuation and verification of sign-changing solutions to
//!
//! ```text
//!   -lambda u_xx - u_tt = u   in Omega_h
//!                     u = 0   on the boundary
//!          du/deta = -1 / +1  on the upper / lower boundary
//! ```
//!
//! on perturbed strips `Omega_h = {(x, tau / h(x))}` bifurcating from the
//! flat strip of half-height `(2m + 1) pi` where `u = sin t`.

pub mod continuation;
pub mod domain;
pub mod error;
pub mod linear_analysis;
pub mod operators;
pub mod persist;
pub mod verify;

pub use error::{Error, Result};
