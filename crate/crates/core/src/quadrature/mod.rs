//! Integration backbone: composite Gauss–Legendre grids on mapped
//! semi-infinite domains, triangular double integrals that never touch the
//! diagonal, and adaptive Gauss–Kronrod for kernel definitions.

mod adaptive;
mod double;
mod gauss;
mod grid;

pub use adaptive::{
    integrate_adaptive, integrate_adaptive_floored, integrate_adaptive_with_hints,
    integrate_semi_infinite, integrate_semi_infinite_floored, Singularity,
    SingularityHint, GRADING_LEVELS, GRADING_RATIO, MAX_PANELS,
};
pub use double::double_integral_triangular;
pub use gauss::gauss_legendre;
pub use grid::{gauss_panels, DomainMap, GridSpec, QuadratureGrid};

use thiserror::Error;

/// Value of an integral together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance {0} below the supported floor")]
    InvalidTolerance(f64),
    #[error("breakpoints must be finite and strictly increasing")]
    InvalidBreakpoints,
    #[error("{0} nodes per panel is outside 4..=64")]
    InvalidPanelSize(usize),
    #[error("grid needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("invalid domain map parameter {0}")]
    InvalidMap(f64),
    #[error("integrand not finite at x = {x} (value {value})")]
    NonFinite { x: f64, value: f64 },
    #[error("no convergence after {panels} panels: best {best:e}, estimate {estimate:e}")]
    NonConvergence {
        best: f64,
        estimate: f64,
        panels: usize,
    },
}

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 55.0);
        let w: Vec<f64> = (0..1000).map(|_| 0.1).collect();
        assert!((pairwise_sum(&w) - 100.0).abs() < 1e-12);
    }
}
