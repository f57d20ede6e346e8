//! Non-interacting density-functional theory on the one-dimensional torus.
//!
//! The crate solves `h(v) = -Δ + v` on `T = R / 2πZ` for potentials `v` in the
//! dual Sobolev space H⁻¹(T), which admits Dirac deltas alongside ordinary
//! functions. On top of the spectral solver it provides N-particle Slater
//! determinant and natural-orbital machinery, the explicit single-particle
//! Kohn–Sham inversion `v = Δ√ρ / √ρ`, and a set of numerical experiments that
//! check ground-state positivity, non-degeneracy, the Hohenberg–Kohn property
//! and Courant's nodal bound.
//!
//! The guide in `book/` walks through the same material with runnable snippets.

pub mod cli;
pub mod error;
pub mod fourier;
pub mod ks_inverse;
pub mod lab;
pub mod many_body;
pub mod spectral;

pub use error::{Error, Result};
pub use fourier::{Delta, Grid, PeriodicFunction, Potential};
pub use spectral::{EigenSolution, GalerkinOperator};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fourier.md")]
    mod fourier {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/many_body.md")]
    mod many_body {}
    #[doc = include_str!("../../../book/src/kohn_sham.md")]
    mod kohn_sham {}
    #[doc = include_str!("../../../book/src/theorem_lab.md")]
    mod theorem_lab {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
