//! Variational upper limits on the critical coupling.
//!
//! For the trial function `f(x)^2 ∝ x^{ap-1} v(x)^p` the Rayleigh quotient of
//! the symmetric kernel gives
//!
//! ```text
//! g_c <= alpha N / D,   N = ∫ x^{ap-1} v^p dx,
//!                       D = 2 ∫ dx w(x) ∫_0^x dy w(y) G(x, y),
//!                       w = x^{(ap-1)/2} v^{(p+1)/2}.
//! ```
//!
//! `a = 1` with the massless kernel is the ultrarelativistic limit, the
//! kernel `2y / (pi x)` gives its simplified form, and the massive limit uses
//! the minorized kernel with `1 <= a <= 2`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::kernels::{massless_ratio, KernelError, KernelSpec, KernelVariant};
use crate::potentials::Potential;
use crate::quadrature::{pairwise_sum, GridSpec, QuadratureError, QuadratureGrid};

pub const DEFAULT_P_RANGE: (f64, f64) = (0.5, 6.0);
pub const DEFAULT_A_RANGE: (f64, f64) = (1.0, 2.0);
/// Number of log-spaced points in the initial scan over `p`.
pub const P_SCAN_POINTS: usize = 25;
/// Number of points in the initial scan over `a`.
pub const A_SCAN_POINTS: usize = 15;
/// An optimum closer than this to a range endpoint is flagged.
pub const BOUNDARY_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("invalid bound request: {0}")]
    InvalidRequest(String),
    #[error("the {integral} integral diverges: {reason}")]
    Divergent { integral: &'static str, reason: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    /// Massless kernel with the `x^{p-1} v^p` trial family.
    VariationalMassless,
    /// `l = 0` massless bound with the kernel minorized by `2y / (pi x)`.
    SimplifiedMassless,
    /// Minorized massive kernel with the `x^{ap-1} v^p` family.
    VariationalMassive,
}

impl BoundMethod {
    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::VariationalMassless => "variational-massless",
            BoundMethod::SimplifiedMassless => "simplified-massless",
            BoundMethod::VariationalMassive => "variational-massive",
        }
    }

    fn kernel(self, ell: u32, beta: f64) -> Result<KernelSpec, BoundError> {
        let variant = match self {
            BoundMethod::VariationalMassless => KernelVariant::MasslessExact,
            BoundMethod::SimplifiedMassless => KernelVariant::MasslessSimplified,
            BoundMethod::VariationalMassive => KernelVariant::MassiveMinorized,
        };
        KernelSpec::new(ell, beta, variant).map_err(|e| BoundError::InvalidRequest(e.to_string()))
    }
}

impl FromStr for BoundMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            BoundMethod::VariationalMassless,
            BoundMethod::SimplifiedMassless,
            BoundMethod::VariationalMassive,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| {
            format!("unknown method `{s}` (expected variational-massless, simplified-massless or variational-massive)")
        })
    }
}

/// Everything needed to minimize a bound.
#[derive(Debug, Clone)]
pub struct BoundRequest {
    pub pot: Potential,
    pub ell: u32,
    pub beta: f64,
    pub alpha: f64,
    pub method: BoundMethod,
    pub p_range: (f64, f64),
    /// Ignored by the massless methods, which fix `a = 1`.
    pub a_range: (f64, f64),
    pub grid: GridSpec,
}

impl BoundRequest {
    /// Request with default ranges and grid.
    pub fn new(pot: Potential, ell: u32, beta: f64, alpha: f64, method: BoundMethod) -> Self {
        Self {
            pot,
            ell,
            beta,
            alpha,
            method,
            p_range: DEFAULT_P_RANGE,
            a_range: match method {
                BoundMethod::VariationalMassive => DEFAULT_A_RANGE,
                _ => (1.0, 1.0),
            },
            grid: GridSpec::bound_default(),
        }
    }

    pub fn with_p_range(mut self, lo: f64, hi: f64) -> Self {
        self.p_range = (lo, hi);
        self
    }

    pub fn with_a_range(mut self, lo: f64, hi: f64) -> Self {
        self.a_range = (lo, hi);
        self
    }

    pub fn with_a(self, a: f64) -> Self {
        self.with_a_range(a, a)
    }

    fn validate(&self) -> Result<KernelSpec, BoundError> {
        let bad = |m: String| Err(BoundError::InvalidRequest(m));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha = {} must be positive", self.alpha));
        }
        let (plo, phi) = self.p_range;
        if !(plo > 0.1 && phi < 10.0 && plo <= phi) {
            return bad(format!("p range [{plo}, {phi}] must lie within (0.1, 10)"));
        }
        let (alo, ahi) = self.a_range;
        if self.method == BoundMethod::VariationalMassive {
            if !(alo >= 1.0 && ahi <= 2.0 && alo <= ahi) {
                return bad(format!("a range [{alo}, {ahi}] must lie within [1, 2]"));
            }
        } else if (alo, ahi) != (1.0, 1.0) {
            return bad("the massless trial family fixes a = 1".into());
        }
        self.method.kernel(self.ell, self.beta)
    }
}

/// Whether an optimum sits on the edge of its search range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundaryFlags {
    pub p_at_edge: bool,
    pub a_at_edge: bool,
}

impl BoundaryFlags {
    pub fn any(self) -> bool {
        self.p_at_edge || self.a_at_edge
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub p_opt: f64,
    pub a_opt: Option<f64>,
    /// Change in the bound when the outer grid is halved.
    pub integral_error: f64,
    pub evaluations: usize,
    pub boundary: BoundaryFlags,
    pub method: BoundMethod,
}

/// Kernel values on the outer-node by inner-ratio product grid.
enum KernelTable {
    /// Scale-invariant kernels depend on the ratio `s` only.
    Ratio(Vec<f64>),
    /// `G(x_i, x_i s_k)` stored row-major.
    Full(Vec<f64>),
}

/// Precomputed grid data for evaluating the Rayleigh quotient at many
/// `(p, a)` with a fixed potential and kernel.
pub struct BoundEvaluator {
    alpha: f64,
    weights: Vec<f64>,
    ln_x: Vec<f64>,
    ln_v: Vec<f64>,
    inner_w: Vec<f64>,
    ln_s: Vec<f64>,
    /// `ln v(x_i s_k)`, row-major.
    ln_v_inner: Vec<f64>,
    x: Vec<f64>,
    table: KernelTable,
    origin_exponent: f64,
    tail_exponent: f64,
}

impl BoundEvaluator {
    pub fn new(pot: &Potential, kernel: &KernelSpec, alpha: f64, grid: &GridSpec) -> Result<Self, BoundError> {
        let outer = grid.build()?;
        let inner = QuadratureGrid::inner_default();
        Self::with_grids(pot, kernel, alpha, &outer, &inner)
    }

    pub fn with_grids(
        pot: &Potential,
        kernel: &KernelSpec,
        alpha: f64,
        outer: &QuadratureGrid,
        inner: &QuadratureGrid,
    ) -> Result<Self, BoundError> {
        let x = outer.nodes().to_vec();
        let s = inner.nodes();
        let (n, m) = (x.len(), s.len());
        let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ln_v: Vec<f64> = x.iter().map(|&v| pot.eval(v).ln()).collect();
        let ln_s: Vec<f64> = s.iter().map(|v| v.ln()).collect();
        let rows = exec::map_indexed(n, |i| s.iter().map(|&sk| pot.eval(x[i] * sk).ln()).collect::<Vec<_>>());
        let ln_v_inner = rows.concat();
        let table = if kernel.is_scale_invariant() {
            KernelTable::Ratio(
                s.iter()
                    .map(|&sk| match kernel.variant {
                        KernelVariant::MasslessSimplified => 2.0 * std::f64::consts::FRAC_1_PI * sk,
                        _ => massless_ratio(kernel.ell, sk),
                    })
                    .collect(),
            )
        } else {
            let rows = exec::try_map_indexed(n, |i| {
                s.iter()
                    .map(|&sk| kernel.green_ordered(x[i], x[i] * sk))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            KernelTable::Full(rows.concat())
        };
        debug_assert_eq!(ln_v_inner.len(), n * m);
        let tail_exponent = {
            let (v2, v3) = (pot.eval(1e2), pot.eval(1e3));
            if v3 == 0.0 || v2 == 0.0 {
                f64::INFINITY
            } else {
                -(v3 / v2).log10()
            }
        };
        Ok(Self {
            alpha,
            weights: outer.weights().to_vec(),
            ln_x,
            ln_v,
            inner_w: inner.weights().to_vec(),
            ln_s,
            ln_v_inner,
            x,
            table,
            origin_exponent: pot.origin_exponent(),
            tail_exponent,
        })
    }

    /// Rejects `(p, a)` for which the numerator integral diverges.
    fn check_integrable(&self, p: f64, a: f64) -> Result<(), BoundError> {
        // x^{ap-1} v^p ~ x^{ap-1+ps} at the origin and x^{ap-1-pd} in the tail.
        let s = self.origin_exponent;
        if s.is_finite() && a * p - 1.0 + p * s <= -1.0 {
            return Err(BoundError::Divergent {
                integral: "numerator",
                reason: format!("x^(ap-1) v^p is not integrable at the origin for p = {p}, a = {a}"),
            });
        }
        let d = self.tail_exponent;
        if d.is_finite() && d < 20.0 && a * p - 1.0 - p * d >= -1.0 {
            return Err(BoundError::Divergent {
                integral: "numerator",
                reason: format!("v decays like x^-{d:.3}, too slowly for p = {p}, a = {a}"),
            });
        }
        Ok(())
    }

    /// Bound value at `(p, a)`.
    pub fn evaluate(&self, p: f64, a: f64) -> Result<f64, BoundError> {
        self.check_integrable(p, a)?;
        let cx = 0.5 * (a * p - 1.0);
        let cv = 0.5 * (p + 1.0);
        let m = self.inner_w.len();
        let num_terms: Vec<f64> = (0..self.x.len())
            .map(|i| self.weights[i] * ((a * p - 1.0) * self.ln_x[i] + p * self.ln_v[i]).exp())
            .collect();
        let numerator = pairwise_sum(&num_terms);
        let rows = exec::map_indexed(self.x.len(), |i| {
            let wx = (cx * self.ln_x[i] + cv * self.ln_v[i]).exp();
            if wx == 0.0 {
                return 0.0;
            }
            let lv = &self.ln_v_inner[i * m..(i + 1) * m];
            let mut terms = Vec::with_capacity(m);
            for k in 0..m {
                let g = match &self.table {
                    KernelTable::Ratio(t) => t[k],
                    KernelTable::Full(t) => t[i * m + k],
                };
                let wy = (cx * (self.ln_x[i] + self.ln_s[k]) + cv * lv[k]).exp();
                terms.push(self.inner_w[k] * wy * g);
            }
            2.0 * self.weights[i] * wx * self.x[i] * pairwise_sum(&terms)
        });
        let denominator = pairwise_sum(&rows);
        if !(numerator.is_finite() && numerator > 0.0) {
            return Err(BoundError::Divergent {
                integral: "numerator",
                reason: format!("quadrature gave {numerator:e}"),
            });
        }
        if !(denominator.is_finite() && denominator > 0.0) {
            return Err(BoundError::Divergent {
                integral: "denominator",
                reason: format!("quadrature gave {denominator:e}"),
            });
        }
        Ok(self.alpha * numerator / denominator)
    }
}

/// Massless bound at fixed `p` on the default grid.
pub fn bound_massless(pot: &Potential, ell: u32, p: f64, alpha: f64) -> Result<f64, BoundError> {
    let k = BoundMethod::VariationalMassless.kernel(ell, 0.0)?;
    BoundEvaluator::new(pot, &k, alpha, &GridSpec::bound_default())?.evaluate(p, 1.0)
}

/// Simplified (`l = 0`) massless bound at fixed `p`.
pub fn bound_massless_simplified(pot: &Potential, p: f64, alpha: f64) -> Result<f64, BoundError> {
    let k = BoundMethod::SimplifiedMassless.kernel(0, 0.0)?;
    BoundEvaluator::new(pot, &k, alpha, &GridSpec::bound_default())?.evaluate(p, 1.0)
}

/// Massive bound at fixed `(p, a)`.
pub fn bound_massive(pot: &Potential, ell: u32, beta: f64, p: f64, a: f64, alpha: f64) -> Result<f64, BoundError> {
    if !(1.0..=2.0).contains(&a) {
        return Err(BoundError::InvalidRequest(format!("a = {a} outside [1, 2]")));
    }
    let k = BoundMethod::VariationalMassive.kernel(ell, beta)?;
    BoundEvaluator::new(pot, &k, alpha, &GridSpec::bound_default())?.evaluate(p, a)
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimizes `f` on `[lo, hi]` after a scan of `points` samples (log-spaced
/// when `log` is set). Returns `(argmin, min, evaluations)`.
fn scan_then_golden<F>(f: F, lo: f64, hi: f64, points: usize, log: bool, rel_tol: f64) -> Result<(f64, f64, usize), BoundError>
where
    F: Fn(f64) -> Result<f64, BoundError> + Sync,
{
    if hi <= lo {
        return Ok((lo, f(lo)?, 1));
    }
    let at = |i: usize| {
        let t = i as f64 / (points - 1) as f64;
        if log {
            lo * (hi / lo).powf(t)
        } else {
            lo + (hi - lo) * t
        }
    };
    let values = exec::try_map_indexed(points, |i| f(at(i)))?;
    let mut evals = points;
    let best = (0..points)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("points > 0");
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(points - 1)));
    let mut best_x = at(best);
    let mut best_f = values[best];
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    evals += 2;
    while b - a > rel_tol * (a.abs() + b.abs()) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2)?;
        }
        evals += 1;
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best_f {
            best_f = v;
            best_x = x;
        }
    }
    Ok((best_x, best_f, evals))
}

/// Golden-section tolerance on the trial parameters; the bound is quadratic
/// at its minimum, so this settles the value to ~1e-10 relative.
const PARAM_TOL: f64 = 1e-5;

fn minimize_p(ev: &BoundEvaluator, a: f64, range: (f64, f64)) -> Result<(f64, f64, usize), BoundError> {
    scan_then_golden(|p| ev.evaluate(p, a), range.0, range.1, P_SCAN_POINTS, true, PARAM_TOL)
}

fn at_edge(x: f64, range: (f64, f64)) -> bool {
    range.1 > range.0 && ((x - range.0).abs() < BOUNDARY_MARGIN || (range.1 - x).abs() < BOUNDARY_MARGIN)
}

/// Minimizes the bound over `p` (and `a` for the massive method).
pub fn minimize_bound(req: &BoundRequest) -> Result<BoundResult, BoundError> {
    let kernel = req.validate()?;
    let ev = BoundEvaluator::new(&req.pot, &kernel, req.alpha, &req.grid)?;
    let (p_opt, a_opt, value, evaluations) = if req.a_range.0 == req.a_range.1 {
        let a = req.a_range.0;
        let (p, v, n) = minimize_p(&ev, a, req.p_range)?;
        (p, a, v, n)
    } else {
        let inner_evals = std::sync::atomic::AtomicUsize::new(0);
        let (a, v, _) = scan_then_golden(
            |a| {
                let (_, v, n) = minimize_p(&ev, a, req.p_range)?;
                inner_evals.fetch_add(n, std::sync::atomic::Ordering::Relaxed);
                Ok(v)
            },
            req.a_range.0,
            req.a_range.1,
            A_SCAN_POINTS,
            false,
            PARAM_TOL,
        )?;
        let (p, v2, n) = minimize_p(&ev, a, req.p_range)?;
        debug_assert!((v2 - v).abs() <= 1e-12 * v);
        (p, a, v2, inner_evals.into_inner() + n)
    };
    let integral_error = match req.grid.coarsened().build() {
        Ok(coarse) if req.grid.panels >= 4 => {
            let cev = BoundEvaluator::with_grids(&req.pot, &kernel, req.alpha, &coarse, &QuadratureGrid::inner_default())?;
            (cev.evaluate(p_opt, a_opt)? - value).abs()
        }
        _ => 0.0,
    };
    Ok(BoundResult {
        value,
        p_opt,
        a_opt: (req.method == BoundMethod::VariationalMassive).then_some(a_opt),
        integral_error,
        evaluations,
        boundary: BoundaryFlags {
            p_at_edge: at_edge(p_opt, req.p_range),
            a_at_edge: at_edge(a_opt, req.a_range),
        },
        method: req.method,
    })
}
