//! Special functions used by the partial-wave kernels.
//!
//! Everything here is a pure function of its arguments. The public entry
//! points validate their domain and return [`SpecFunError`]; the crate-internal
//! `*_unchecked` style helpers skip validation for use in hot loops where the
//! caller has already established positivity.

mod bessel;
mod legendre;
mod tails;

pub use bessel::{bessel_i_half, bessel_k0, bessel_k1, bessel_k_half};
pub use legendre::{legendre_p, legendre_q};
pub use tails::{f_function, h_function, k0_tail};

pub(crate) use bessel::{i_half_scaled, k0_raw, k1_raw, k_half_scaled};
pub(crate) use legendre::{legendre_p_raw, legendre_q_gap};
pub(crate) use tails::{ki1_raw, ki2_raw};

use thiserror::Error;

/// Largest angular momentum the recurrences are validated for.
pub const MAX_ELL: u32 = 10;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("{function}: argument {x} outside domain {domain}")]
    Domain {
        function: &'static str,
        x: f64,
        domain: &'static str,
    },
    #[error("{function}: argument {x} is within 1e-12 of 1; the diagonal singularity belongs to the caller")]
    Diagonal { function: &'static str, x: f64 },
    #[error("angular momentum {0} outside supported range 0..={MAX_ELL}")]
    UnsupportedEll(u32),
}

/// A validated positive, finite argument.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EvalPoint(f64);

impl EvalPoint {
    pub fn new(x: f64) -> Result<Self, SpecFunError> {
        if x.is_finite() && x > 0.0 {
            Ok(Self(x))
        } else {
            Err(SpecFunError::Domain {
                function: "EvalPoint",
                x,
                domain: "(0, inf)",
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

pub(crate) fn positive(function: &'static str, x: f64) -> Result<f64, SpecFunError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(SpecFunError::Domain {
            function,
            x,
            domain: "(0, inf)",
        })
    }
}

pub(crate) fn check_ell(ell: u32) -> Result<u32, SpecFunError> {
    if ell <= MAX_ELL {
        Ok(ell)
    } else {
        Err(SpecFunError::UnsupportedEll(ell))
    }
}
