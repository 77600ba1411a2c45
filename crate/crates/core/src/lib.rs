//! Desk-scale numerics for p-adic Euclidean quantum fields.
//!
//! Everything lives on a finite window of `Q_p^N`: functions supported in
//! the ball of radius `p^K` and constant on cells of radius `p^{-K}`. On
//! that window the crate provides an exact Fourier transform, Green
//! functions of elliptic pseudodifferential operators, samplers for
//! Gaussian and Lévy white noise, a truncated Wick calculus, and
//! Schwinger functions with their symmetry, invariance, growth and
//! cluster checks.
//!
//! The guide in `book/` walks through each layer; its code blocks are
//! compiled as doc-tests of this crate.

pub mod error;
pub mod green;
pub mod io;
pub mod lattice;
pub mod noise;
pub mod padic;
pub mod schwinger;
pub mod stats;
pub mod symbols;
pub mod wick;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/padic.md")]
    mod padic {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/green.md")]
    mod green {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/wick.md")]
    mod wick {}
    #[doc = include_str!("../../../book/src/schwinger.md")]
    mod schwinger {}
}
