//! Nyström solution of `phi(x) = g ∫_0^inf K(x, y) phi(y) dy / alpha`.
//!
//! The symmetric kernel is discretized on a composite Gauss grid as
//! `M_ij = sqrt(w_i) K(x_i, x_j) sqrt(w_j)`. For kernels with a logarithmic
//! diagonal the rule `Σ_j w_j K_ij phi_j` is replaced by
//! `Σ_{j≠i} w_j G_ij (psi_j - psi_i) + psi_i ∫_P G(x_i, y) dy` on the panels
//! `P` around `x_i`, where `psi = sqrt(v) phi` is smooth. Only the diagonal
//! changes: `M_ii = v(x_i) (∫_P G(x_i, y) dy - Σ_{j∈P, j≠i} w_j G_ij)`. On the
//! unbounded last panel `sqrt(v(y))` stays inside the integral. The
//! eigenvalues `mu` of `M` give the characteristic numbers `g = alpha / mu`.

pub mod eigen;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::kernels::{KernelError, KernelSpec, DIAGONAL_THRESHOLD};
use crate::potentials::Potential;
use crate::quadrature::{
    integrate_adaptive_with_hints, integrate_semi_infinite_floored, DomainMap, GridSpec, QuadResult,
    QuadratureError, QuadratureGrid, SingularityHint,
};

pub use eigen::EigenError;

/// Panels on each side of `x_i` included in the singularity subtraction.
pub const SUBTRACTION_HALF_WIDTH: usize = 1;
/// Relative tolerance of the panel integrals `R_i`.
pub const PANEL_INTEGRAL_TOL: f64 = 1e-9;
/// Relative size below which a whole matrix row is treated as zero.
pub const NEGLIGIBLE_ROW: f64 = 1e-20;
/// Smallest grid in the refinement ladder.
pub const DEFAULT_START_N: usize = 200;
/// Largest grid the ladder will try.
pub const MAX_N: usize = 3200;
/// Default relative tolerance between successive grids.
pub const DEFAULT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NystromError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("matrix entry ({row}, {col}) is not finite")]
    Overflow { row: usize, col: usize },
    #[error("the kernel has no positive eigenvalue: no bound state at any coupling")]
    NoBoundState,
    #[error("no convergence up to n = {n}: best g1 = {best}, last change {last_change:e} (trend {trend:?})")]
    NonConvergence {
        n: usize,
        best: f64,
        last_change: f64,
        trend: Vec<f64>,
    },
}

/// The symmetric Nyström matrix of one kernel and potential on one grid.
#[derive(Debug, Clone)]
pub struct DiscretizedProblem {
    pub grid: QuadratureGrid,
    /// Row-major `n x n`.
    pub matrix: Vec<f64>,
    pub spec: KernelSpec,
    pub pot: Potential,
}

impl DiscretizedProblem {
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n() + j]
    }

    /// Rows with some entry above [`NEGLIGIBLE_ROW`] times the largest entry.
    /// Dropping the others moves every eigenvalue by less than
    /// `n * NEGLIGIBLE_ROW * max |M_ij|`.
    pub fn active_indices(&self) -> Vec<usize> {
        let n = self.n();
        let max = self.matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..n)
            .filter(|&i| self.matrix[i * n..(i + 1) * n].iter().any(|v| v.abs() >= NEGLIGIBLE_ROW * max && *v != 0.0))
            .collect()
    }

    /// `(Σ_ij M_ij^2)^{1/2}`, the discrete Hilbert–Schmidt norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `G(x, y)` with the argument nudged off an exact diagonal hit.
fn green_near(spec: &KernelSpec, x: f64, y: f64) -> Result<f64, KernelError> {
    let gap = 2.0 * DIAGONAL_THRESHOLD * (x + y);
    let y = if (x - y).abs() < gap {
        if y >= x {
            x + gap
        } else {
            x - gap
        }
    } else {
        y
    };
    spec.green(x, y)
}

/// Relative error accepted when the potential underflows to zero inside a
/// panel and the adaptive rule cannot meet [`PANEL_INTEGRAL_TOL`].
pub const UNDERFLOW_TOL: f64 = 1e-6;

fn settle(r: Result<QuadResult, QuadratureError>) -> Result<f64, NystromError> {
    match r {
        Ok(q) => Ok(q.value),
        Err(QuadratureError::NonConvergence { best, estimate, .. }) if estimate <= UNDERFLOW_TOL * best.abs() => Ok(best),
        Err(e) => Err(e.into()),
    }
}

/// `∫_a^b G(x, y) sqrt(v(y)) dy` with `b` possibly infinite and `x`
/// anywhere; without a potential the weight is 1.
fn region_integral(spec: &KernelSpec, pot: Option<&Potential>, x: f64, a: f64, b: f64) -> Result<f64, NystromError> {
    let failure = std::cell::RefCell::new(None);
    let f = |y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let sv = pot.map_or(1.0, |p| p.sqrt_eval(y));
        if sv == 0.0 {
            return 0.0;
        }
        match green_near(spec, x, y) {
            Ok(g) => g * sv,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let c = x.clamp(a, b);
    let hint = [SingularityHint::log(c)];
    let mut total = 0.0;
    if c > a {
        total += settle(integrate_adaptive_with_hints(f, a, c, PANEL_INTEGRAL_TOL, &hint))?;
    }
    if b.is_finite() {
        if b > c {
            total += settle(integrate_adaptive_with_hints(f, c, b, PANEL_INTEGRAL_TOL, &hint))?;
        }
    } else {
        total += settle(integrate_adaptive_with_hints(f, c, 2.0 * c, PANEL_INTEGRAL_TOL, &hint))?;
        let floor = PANEL_INTEGRAL_TOL * total.abs();
        total += settle(integrate_semi_infinite_floored(f, 2.0 * c, PANEL_INTEGRAL_TOL, floor))?;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(total)
}

/// Assembles the symmetric Nyström matrix.
pub fn discretize(spec: &KernelSpec, pot: &Potential, grid: &QuadratureGrid) -> Result<DiscretizedProblem, NystromError> {
    let x = grid.nodes();
    let w = grid.weights();
    let n = x.len();
    let layout = grid
        .spec()
        .ok_or_else(|| NystromError::InvalidRequest("the grid must come from a GridSpec".into()))?;
    if let Some(k) = x.windows(2).position(|p| p[1] - p[0] < DIAGONAL_THRESHOLD * (p[0] + p[1])) {
        return Err(KernelError::Diagonal { x: x[k], y: x[k + 1] }.into());
    }
    let sv: Vec<f64> = x.iter().map(|&xi| pot.sqrt_eval(xi)).collect();
    let sw: Vec<f64> = w.iter().map(|wi| wi.sqrt()).collect();
    // Upper triangle of G, row by row; zero where the potential vanishes.
    let upper = exec::try_map_indexed(n, |i| -> Result<Vec<f64>, NystromError> {
        (i + 1..n)
            .map(|j| {
                if sv[i] == 0.0 || sv[j] == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(spec.green(x[i], x[j])?)
                }
            })
            .collect()
    })?;
    let g = |i: usize, j: usize| if i < j { upper[i][j - i - 1] } else { upper[j][i - j - 1] };
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        for (off, &gij) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            let m = (sw[i] * sv[i]) * gij * (sv[j] * sw[j]);
            if !m.is_finite() {
                return Err(NystromError::Overflow { row: i, col: j });
            }
            matrix[i * n + j] = m;
            matrix[j * n + i] = m;
        }
    }
    let diagonal = exec::try_map_indexed(n, |i| -> Result<f64, NystromError> {
        if sv[i] == 0.0 {
            return Ok(0.0);
        }
        if spec.variant.is_log_singular() {
            let per = layout.n_per_panel;
            let panel = i / per;
            let first = panel.saturating_sub(SUBTRACTION_HALF_WIDTH);
            let last = (panel + SUBTRACTION_HALF_WIDTH).min(layout.panels - 1);
            let unbounded = last == layout.panels - 1 && layout.panel_bounds(last).1.is_infinite();
            let finite_end = if unbounded { last } else { last + 1 };
            let a = layout.panel_bounds(first).0;
            let mut d = 0.0;
            if finite_end > first {
                let b = layout.panel_bounds(finite_end - 1).1;
                let r = region_integral(spec, None, x[i], a, b)?;
                let off: f64 = (first * per..finite_end * per).filter(|&j| j != i).map(|j| w[j] * g(i, j)).sum();
                d += sv[i] * sv[i] * (r - off);
            }
            if unbounded {
                let a = layout.panel_bounds(last).0;
                let r = region_integral(spec, Some(pot), x[i], a, f64::INFINITY)?;
                let off: f64 = (last * per..n).filter(|&j| j != i).map(|j| w[j] * g(i, j) * sv[j]).sum();
                d += sv[i] * (r - off);
            }
            Ok(d)
        } else {
            Ok(w[i] * sv[i] * spec.green(x[i], x[i])? * sv[i])
        }
    })?;
    for (i, d) in diagonal.into_iter().enumerate() {
        if !d.is_finite() {
            return Err(NystromError::Overflow { row: i, col: i });
        }
        matrix[i * n + i] = d;
    }
    Ok(DiscretizedProblem {
        grid: grid.clone(),
        matrix,
        spec: *spec,
        pot: pot.clone(),
    })
}

/// Characteristic numbers `g_1 <= g_2 <= ...` on one grid, or the whole
/// refinement ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCouplings {
    /// Ascending; `values[0]` is the critical coupling.
    pub values: Vec<f64>,
    /// Ground state at the nodes, non-negative, with `Σ w_i phi_i^2 = 1`.
    pub eigenfunction: Vec<f64>,
    pub nodes: Vec<f64>,
    pub n: usize,
    pub richardson_estimate: Option<f64>,
    /// `(n, g_1)` for every grid tried.
    pub sequence: Vec<(usize, f64)>,
}

impl CriticalCouplings {
    /// The extrapolated value when available, else the finest-grid value.
    pub fn best(&self) -> f64 {
        self.richardson_estimate.unwrap_or(self.values[0])
    }
}

/// The `k` smallest characteristic numbers of a discretized problem.
pub fn characteristic_numbers(prob: &DiscretizedProblem, k: usize, alpha: f64) -> Result<CriticalCouplings, NystromError> {
    let n = prob.n();
    if k == 0 || k > n / 4 {
        return Err(NystromError::InvalidRequest(format!("k = {k} must lie in 1..={}", n / 4)));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(NystromError::InvalidRequest(format!("alpha = {alpha} must be positive")));
    }
    let active = prob.active_indices();
    let m = active.len();
    if m < k {
        return Err(NystromError::NoBoundState);
    }
    let sub: Vec<f64> = active
        .iter()
        .flat_map(|&i| active.iter().map(move |&j| (i, j)))
        .map(|(i, j)| prob.entry(i, j))
        .collect();
    let (mu, v_active) = eigen::top_eigenpairs(sub, m, k)?;
    if mu.iter().any(|&m| m <= 0.0) {
        return Err(NystromError::NoBoundState);
    }
    let mut v = vec![0.0; n];
    for (&i, vi) in active.iter().zip(v_active) {
        v[i] = vi;
    }
    let values: Vec<f64> = mu.iter().map(|m| alpha / m).collect();
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let eigenfunction = v
        .iter()
        .zip(prob.grid.weights())
        .map(|(vi, wi)| sign * vi / wi.sqrt())
        .collect();
    Ok(CriticalCouplings {
        values: values.clone(),
        eigenfunction,
        nodes: prob.grid.nodes().to_vec(),
        n,
        richardson_estimate: None,
        sequence: vec![(n, values[0])],
    })
}

/// Options for [`converge`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergeOptions {
    pub map: DomainMap,
    pub start_n: usize,
    pub max_n: usize,
    pub tol: f64,
    /// Characteristic numbers to report.
    pub k: usize,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            map: DomainMap::Rational { scale: 1.0 },
            start_n: DEFAULT_START_N,
            max_n: MAX_N,
            tol: DEFAULT_TOL,
            k: 3,
        }
    }
}

/// Extrapolates the limit of `g(n), g(2n), g(4n)` assuming error `~ n^-q`,
/// with `q` estimated from the three values and clamped to `[1, 4]`.
pub fn richardson(g1: f64, g2: f64, g3: f64) -> f64 {
    let (d1, d2) = (g1 - g2, g2 - g3);
    let q = if d2 != 0.0 && d1 / d2 > 0.0 {
        (d1 / d2).log2().clamp(1.0, 4.0)
    } else {
        2.0
    };
    g3 - d2 / (2f64.powf(q) - 1.0)
}

/// Refines the grid `start_n, 2 start_n, ...` until successive `g_1` agree to
/// `tol` (relative), with at least three grids.
pub fn converge(spec: &KernelSpec, pot: &Potential, alpha: f64, opts: &ConvergeOptions) -> Result<CriticalCouplings, NystromError> {
    if !(opts.tol >= 1e-6) {
        return Err(NystromError::InvalidRequest(format!("tol = {} must be >= 1e-6", opts.tol)));
    }
    if opts.start_n < 16 || opts.max_n < 4 * opts.start_n {
        return Err(NystromError::InvalidRequest(format!(
            "grid ladder {}..{} needs at least three levels",
            opts.start_n, opts.max_n
        )));
    }
    let mut sequence: Vec<(usize, f64)> = Vec::new();
    let mut n = opts.start_n;
    loop {
        let grid = GridSpec::nystrom(n, opts.map).build()?;
        let prob = discretize(spec, pot, &grid)?;
        let mut cc = characteristic_numbers(&prob, opts.k.min(n / 4), alpha)?;
        sequence.push((cc.n, cc.values[0]));
        let len = sequence.len();
        if len >= 3 {
            let (g1, g2, g3) = (sequence[len - 3].1, sequence[len - 2].1, sequence[len - 1].1);
            let change = (g3 - g2).abs() / g3;
            if change < opts.tol {
                cc.richardson_estimate = Some(richardson(g1, g2, g3));
                cc.sequence = sequence;
                return Ok(cc);
            }
            if 2 * n > opts.max_n {
                return Err(NystromError::NonConvergence {
                    n,
                    best: g3,
                    last_change: change,
                    trend: sequence.iter().map(|s| s.1).collect(),
                });
            }
        }
        n *= 2;
    }
}
