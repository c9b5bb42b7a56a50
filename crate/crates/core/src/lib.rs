//! Critical couplings for bound states of the spinless Salpeter equation
//! with attractive, spherically symmetric potentials.
//!
//! A coupling `g` produces an `ell`-wave bound state exactly when it exceeds
//! the critical value `g_c^(ell)`. This crate gives two routes to it:
//!
//! * [`bounds`]: variational upper limits from two-parameter trial
//!   functions, for massless and massive particles;
//! * [`nystrom`]: the zero-energy integral eigenproblem solved on a
//!   refinement ladder with extrapolation.
//!
//! Both sit on [`kernels`] (the position-space kernels), [`specfun`]
//! (Bessel, Legendre and Bickley-type functions), [`quadrature`] and
//! [`potentials`]. [`tables`] recomputes the reference tables.

pub mod bounds;
pub mod exec;
pub mod kernels;
pub mod nystrom;
pub mod potentials;
pub mod quadrature;
pub mod specfun;
pub mod tables;

