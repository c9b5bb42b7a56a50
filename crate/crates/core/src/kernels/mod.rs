//! Partial-wave Green functions of the kinetic operator `sqrt(p^2 + m^2) - m`
//! at zero energy, in the dimensionless variables `x = r / R`, `beta = m R`.
//!
//! With `a = |x - y|`, `b = x + y` and `c(u) = (x^2 + y^2 - u^2) / (2xy)`:
//!
//! * massless: `G = Q_l((x^2 + y^2) / (2xy)) / pi`;
//! * massive, exact: `G = S + (G_K1 - R_Ki1) / pi`, where
//!   `S = beta ∫_a^b P_l(c) du`, `G_K1 = beta ∫_a^b K1(beta u) P_l(c) du` and
//!   `R_Ki1 = beta ∫_a^b Ki1(beta u) P_l(c) du`;
//! * massive, minorized: `Ki1(t) <= (pi/2) e^{-t}` turns the last term into
//!   `T / 2` with `T = 2 beta sqrt(xy) K_{l+1/2}(beta x>) I_{l+1/2}(beta x<)`.
//!
//! Every function evaluates with its arguments sorted, so `f(x, y)` and
//! `f(y, x)` are the same floating-point number.

pub mod reference;

use std::f64::consts::FRAC_1_PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potentials::Potential;
use std::sync::OnceLock;

use crate::quadrature::{gauss_legendre, QuadratureError};
use crate::specfun::{
    check_ell, i_half_scaled, k0_raw, k1_raw, k_half_scaled, ki1_raw, ki2_raw, legendre_p_raw,
    legendre_q_gap, SpecFunError, MAX_ELL,
};

/// Pairs with `|x - y| / (x + y)` below this are on the diagonal.
pub const DIAGONAL_THRESHOLD: f64 = 1e-12;

/// The top panel of the rule in `ln u` spans this factor in `u` at `l = 0`.
const LOG_PANEL_RATIO: f64 = 4.0;
/// The top panel narrows as `1 / (1 + LOG_PANEL_ELL_SHRINK l)` to follow
/// the `2l` sign changes of `P_l(c(u))`.
const LOG_PANEL_ELL_SHRINK: f64 = 0.25;
/// Each panel below the top one is this much wider in `ln u`.
const LOG_PANEL_GROWTH: f64 = 2.0;
/// Gauss nodes per panel of the rule in `ln u`.
const LOG_PANEL_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel evaluated on the diagonal at x = {x}, y = {y}")]
    Diagonal { x: f64, y: f64 },
    #[error("kernel arguments must be positive and finite (x = {x}, y = {y})")]
    Domain { x: f64, y: f64 },
    #[error("invalid kernel specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("kernel quadrature: {0}")]
    Quadrature(#[from] QuadratureError),
}

/// Which Green function a [`KernelSpec`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelVariant {
    /// `Q_l(...) / pi`; requires `beta = 0`.
    MasslessExact,
    /// `2 x< / (pi x>)`, the `l = 0` lower bound of the massless kernel.
    MasslessSimplified,
    /// `G_K1 / pi + S - T / 2`.
    MassiveMinorized,
    /// Full massive kernel.
    MassiveExact,
    /// `S` alone: the nonrelativistic Green function times `beta`.
    Nonrelativistic,
}

impl KernelVariant {
    pub fn is_massless(self) -> bool {
        matches!(self, KernelVariant::MasslessExact | KernelVariant::MasslessSimplified)
    }

    /// True when the kernel diverges logarithmically on the diagonal.
    pub fn is_log_singular(self) -> bool {
        matches!(
            self,
            KernelVariant::MasslessExact | KernelVariant::MassiveMinorized | KernelVariant::MassiveExact
        )
    }
}

/// Angular momentum, dimensionless mass and kernel variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub ell: u32,
    pub beta: f64,
    pub variant: KernelVariant,
}

/// A kernel value plus whether it was taken on the diagonal (only possible
/// for kernels that are finite there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub diagonal_flag: bool,
}

impl KernelSpec {
    pub fn new(ell: u32, beta: f64, variant: KernelVariant) -> Result<Self, KernelError> {
        check_ell(ell)?;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(KernelError::InvalidSpec(format!("beta = {beta} must be finite and >= 0")));
        }
        if variant.is_massless() && beta != 0.0 {
            return Err(KernelError::InvalidSpec(format!("{variant:?} requires beta = 0")));
        }
        if !variant.is_massless() && beta == 0.0 {
            return Err(KernelError::InvalidSpec(format!("{variant:?} requires beta > 0")));
        }
        if variant == KernelVariant::MasslessSimplified && ell != 0 {
            return Err(KernelError::InvalidSpec("the simplified massless kernel is l = 0 only".into()));
        }
        Ok(Self { ell, beta, variant })
    }

    pub fn massless(ell: u32) -> Result<Self, KernelError> {
        Self::new(ell, 0.0, KernelVariant::MasslessExact)
    }

    /// `G(x, y)`.
    pub fn green(&self, x: f64, y: f64) -> Result<f64, KernelError> {
        let (hi, lo) = ordered(x, y)?;
        if self.variant.is_log_singular() {
            off_diagonal(hi, lo)?;
        }
        self.green_ordered(hi, lo)
    }

    /// `G(hi, lo)` for validated `hi >= lo > 0`, off the diagonal when the
    /// kernel is singular there.
    pub(crate) fn green_ordered(&self, hi: f64, lo: f64) -> Result<f64, KernelError> {
        let (l, b) = (self.ell, self.beta);
        Ok(match self.variant {
            KernelVariant::MasslessExact => massless_ordered(l, hi, lo),
            KernelVariant::MasslessSimplified => 2.0 * FRAC_1_PI * lo / hi,
            KernelVariant::Nonrelativistic => s_ordered(l, b, hi, lo),
            KernelVariant::MassiveMinorized => {
                FRAC_1_PI * g_ordered(l, b, hi, lo)? + s_ordered(l, b, hi, lo) - 0.5 * t_ordered(l, b, hi, lo)
            }
            KernelVariant::MassiveExact if l == 0 => {
                s_ordered(l, b, hi, lo) + FRAC_1_PI * (g_ordered(l, b, hi, lo)? - r_ordered(l, b, hi, lo)?)
            }
            KernelVariant::MassiveExact => s_ordered(l, b, hi, lo) + FRAC_1_PI * g_minus_r_ordered(l, b, hi, lo),
        })
    }

    /// True when `G(lam x, lam y) = G(x, y)`.
    pub fn is_scale_invariant(&self) -> bool {
        self.variant.is_massless()
    }
}

fn ordered(x: f64, y: f64) -> Result<(f64, f64), KernelError> {
    if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
        return Err(KernelError::Domain { x, y });
    }
    Ok(if x >= y { (x, y) } else { (y, x) })
}

fn off_diagonal(hi: f64, lo: f64) -> Result<(), KernelError> {
    if (hi - lo) < DIAGONAL_THRESHOLD * (hi + lo) {
        Err(KernelError::Diagonal { x: hi, y: lo })
    } else {
        Ok(())
    }
}

fn check(ell: u32, beta: Option<f64>, x: f64, y: f64) -> Result<(f64, f64), KernelError> {
    if ell > MAX_ELL {
        return Err(SpecFunError::UnsupportedEll(ell).into());
    }
    if let Some(b) = beta {
        if !(b.is_finite() && b > 0.0) {
            return Err(KernelError::InvalidSpec(format!("beta = {b} must be positive")));
        }
    }
    ordered(x, y)
}

/// `G_l(0; r, r2) = Q_l((r^2 + r2^2) / (2 r r2)) / pi`.
pub fn g_massless(ell: u32, r: f64, r2: f64) -> Result<f64, KernelError> {
    let (hi, lo) = check(ell, None, r, r2)?;
    off_diagonal(hi, lo)?;
    Ok(massless_ordered(ell, hi, lo))
}

pub(crate) fn massless_ordered(ell: u32, hi: f64, lo: f64) -> f64 {
    let s = lo / hi;
    massless_ratio(ell, s)
}

/// Massless kernel as a function of `s = x< / x>` alone.
pub(crate) fn massless_ratio(ell: u32, s: f64) -> f64 {
    let d = 1.0 - s;
    let two_s = 2.0 * s;
    FRAC_1_PI * legendre_q_gap(ell, (1.0 + s * s) / two_s, d * d / two_s)
}

/// `S_l = 2 beta x<^{l+1} x>^{-l} / (2l + 1)`.
pub fn script_s(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let (hi, lo) = check(ell, Some(beta), x, y)?;
    Ok(s_ordered(ell, beta, hi, lo))
}

fn s_ordered(ell: u32, beta: f64, hi: f64, lo: f64) -> f64 {
    2.0 * beta / (2 * ell + 1) as f64 * lo * (lo / hi).powi(ell as i32)
}

/// `G_K1 = beta ∫_{|x-y|}^{x+y} K1(beta u) P_l(c(u)) du` (closed forms for
/// `l = 0, 1`).
pub fn script_g(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let (hi, lo) = check(ell, Some(beta), x, y)?;
    off_diagonal(hi, lo)?;
    g_ordered(ell, beta, hi, lo)
}

/// Below this `beta min(x, y)` the `l = 1` closed form cancels too much and
/// the integral is evaluated directly.
const G1_CLOSED_FORM_MIN: f64 = 1e-2;

fn g_ordered(ell: u32, beta: f64, hi: f64, lo: f64) -> Result<f64, KernelError> {
    let a = hi - lo;
    let b = hi + lo;
    match ell {
        0 => Ok(k0_raw(beta * a) - k0_raw(beta * b)),
        1 if beta * lo >= G1_CLOSED_FORM_MIN => Ok(k0_raw(beta * a)
            + k0_raw(beta * b)
            + (b * k1_raw(beta * b) - a * k1_raw(beta * a)) / (beta * hi * lo)),
        _ => Ok(k0_raw(beta * a) - k0_raw(beta * b) + legendre_remainder(ell, beta, hi, lo, k1_raw)),
    }
}

fn log_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(LOG_PANEL_NODES))
}

/// `∫_a^b h(u) du / u` by composite Gauss–Legendre in `sigma = ln u`, which
/// turns the `1/u` growth of `K1` and the `u ln u` term of `Ki1` into smooth
/// functions of `sigma`.
fn log_scale_integral(ell: u32, a: f64, b: f64, h: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = log_rule();
    let (la, lb) = (a.ln(), b.ln());
    let base = LOG_PANEL_RATIO.ln() / (1.0 + LOG_PANEL_ELL_SHRINK * ell as f64);
    let mut total = 0.0;
    let mut hi = lb;
    let mut width = base;
    while hi > la {
        let mut lo = hi - width;
        if lo - la < 0.5 * base {
            lo = la;
        }
        let half = 0.5 * (hi - lo);
        let sum: f64 = nodes.iter().zip(weights).map(|(t, w)| w * h((lo + half * (1.0 + t)).exp())).sum();
        total += half * sum;
        hi = lo;
        width *= LOG_PANEL_GROWTH;
    }
    total
}

/// `P_l(c(u)) - 1` vanishes like `(u^2 - a^2) / (2 x y)`, so the stretch of
/// `[a, b]` below `REMAINDER_FLOOR * b` is dropped.
const REMAINDER_FLOOR: f64 = 1e-7;

/// Above this `beta |x - y|` the remainder profile decays on the scale
/// `1 / beta` and is integrated in `t = beta (u - a)`.
const DECAY_SWITCH: f64 = 2.0;
/// `e^{-t}` beyond this `t` is dropped.
const DECAY_SPAN: f64 = 45.0;

/// `beta ∫_a^b f(beta u) (P_l(c(u)) - 1) du` for `a = x - y`, `b = x + y`.
fn legendre_remainder(ell: u32, beta: f64, hi: f64, lo: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (a, b) = (hi - lo, hi + lo);
    let h = |u: f64| f(beta * u) * (legendre_p_raw(ell, cosine(a, hi, lo, u)) - 1.0);
    if beta * a >= DECAY_SWITCH {
        let span = (beta * (b - a)).min(DECAY_SPAN);
        return decay_scale_integral(ell, span, |t| h(a + t / beta));
    }
    log_scale_integral(ell, a.max(REMAINDER_FLOOR * b), b, |u| beta * u * h(u))
}

/// `∫_0^span h(t) dt` for `h` carrying a factor near `e^{-t}`, on Gauss
/// panels that start at width 1 and widen by `LOG_PANEL_GROWTH`.
fn decay_scale_integral(ell: u32, span: f64, h: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = log_rule();
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut width = 1.0 / (1.0 + LOG_PANEL_ELL_SHRINK * ell as f64);
    while lo < span {
        let mut hi = lo + width;
        if span - hi < 0.5 * width {
            hi = span;
        }
        let half = 0.5 * (hi - lo);
        let sum: f64 = nodes.iter().zip(weights).map(|(t, w)| w * h(lo + half * (1.0 + t))).sum();
        total += half * sum;
        lo = hi;
        width *= LOG_PANEL_GROWTH;
    }
    total
}

/// `G - R` for `l >= 1` with one quadrature over the shared profile `K1 - Ki1`.
fn g_minus_r_ordered(ell: u32, beta: f64, hi: f64, lo: f64) -> f64 {
    let (a, b) = (beta * (hi - lo), beta * (hi + lo));
    k0_raw(a) - k0_raw(b) - ki2_raw(a) + ki2_raw(b) + legendre_remainder(ell, beta, hi, lo, |z| k1_raw(z) - ki1_raw(z))
}

/// `c(u) = 1 - (u^2 - a^2) / (2 x y)`, exact near `u = a`.
fn cosine(a: f64, hi: f64, lo: f64, u: f64) -> f64 {
    (1.0 - (u - a) * (u + a) / (2.0 * hi * lo)).clamp(-1.0, 1.0)
}

/// `T_l = 2 beta sqrt(xy) K_{l+1/2}(beta x>) I_{l+1/2}(beta x<)`.
pub fn script_t(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let (hi, lo) = check(ell, Some(beta), x, y)?;
    Ok(t_ordered(ell, beta, hi, lo))
}

fn t_ordered(ell: u32, beta: f64, hi: f64, lo: f64) -> f64 {
    let (bh, bl) = (beta * hi, beta * lo);
    2.0 * beta * (hi * lo).sqrt() * k_half_scaled(ell, bh) * i_half_scaled(ell, bl) * (-(bh - bl)).exp()
}

/// `R_Ki1 = beta ∫_{|x-y|}^{x+y} Ki1(beta u) P_l(c(u)) du`.
fn r_ordered(ell: u32, beta: f64, hi: f64, lo: f64) -> Result<f64, KernelError> {
    let a = hi - lo;
    let b = hi + lo;
    if ell == 0 {
        return Ok(ki2_raw(beta * a) - ki2_raw(beta * b));
    }
    Ok(ki2_raw(beta * a) - ki2_raw(beta * b) + legendre_remainder(ell, beta, hi, lo, ki1_raw))
}

/// Lower bound `G_K1 / pi + S - T / 2` on the massive kernel.
pub fn g_minorized(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    KernelSpec::new(ell, beta, KernelVariant::MassiveMinorized)?.green(x, y)
}

/// Full massive kernel `G_l(beta; x, y)`.
pub fn g_massive_exact(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    KernelSpec::new(ell, beta, KernelVariant::MassiveExact)?.green(x, y)
}

/// `K(x, y) = v(x)^{1/2} G(x, y) v(y)^{1/2}`; zero wherever `v` vanishes.
pub fn symmetric_kernel(
    spec: &KernelSpec,
    pot: &Potential,
    x: f64,
    y: f64,
) -> Result<KernelValue, KernelError> {
    let (hi, lo) = ordered(x, y)?;
    let (vh, vl) = (pot.eval(hi), pot.eval(lo));
    let on_diagonal = hi - lo < DIAGONAL_THRESHOLD * (hi + lo);
    if vh == 0.0 || vl == 0.0 {
        return Ok(KernelValue {
            value: 0.0,
            diagonal_flag: on_diagonal,
        });
    }
    if on_diagonal && spec.variant.is_log_singular() {
        return Err(KernelError::Diagonal { x: hi, y: lo });
    }
    let g = spec.green_ordered(hi, lo)?;
    Ok(KernelValue {
        value: vh.sqrt() * g * vl.sqrt(),
        diagonal_flag: on_diagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::potentials::Builtin;
    use crate::specfun::bessel_k0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn massless_closed_forms() {
        let g0 = g_massless(0, 2.0, 1.0).unwrap();
        assert!((g0 - 3f64.ln() / PI).abs() < 1e-15);
        assert!((g0 - 0.349_699).abs() < 1e-6);
        let g1 = g_massless(1, 2.0, 1.0).unwrap();
        assert!((g1 - (1.25 * 3f64.ln() - 1.0) / PI).abs() < 1e-15);
        assert!((g1 - 0.118_814).abs() < 1e-6);
        // The two closed forms, written out in r and r'.
        for &(r, q) in &[(0.3f64, 0.7), (5.0, 4.9), (1.0, 12.0)] {
            let lg = ((r + q) / (r - q)).abs().ln();
            assert!(close(g_massless(0, r, q).unwrap(), lg / PI, 1e-13));
            let z = (r * r + q * q) / (2.0 * r * q);
            assert!(close(g_massless(1, r, q).unwrap(), (z * lg - 1.0) / PI, 1e-11));
        }
    }

    #[test]
    fn massless_matches_angular_integral() {
        for &(l, x, y) in &[(2, 3.0, 1.0), (0, 2.0, 1.0), (1, 1.3, 0.4), (5, 0.5, 2.5)] {
            let want = reference::g_massless_angular(l, x, y).unwrap();
            let got = g_massless(l, x, y).unwrap();
            assert!(close(got, want, 1e-9), "l={l} got={got} want={want}");
        }
    }

    #[test]
    fn massless_diagonal_and_scale() {
        assert!(matches!(g_massless(0, 1.0, 1.0), Err(KernelError::Diagonal { .. })));
        assert!(matches!(g_massless(0, 1.0, 1.0 + 1e-13), Err(KernelError::Diagonal { .. })));
        assert!(g_massless(0, 1.0, 1.0 + 1e-10).is_ok());
        assert!(matches!(g_massless(0, -1.0, 1.0), Err(KernelError::Domain { .. })));
        for l in 0..=10 {
            let g = g_massless(l, 2.0, 0.7).unwrap();
            for lam in [0.1, 3.0, 17.0] {
                assert!(close(g_massless(l, 2.0 * lam, 0.7 * lam).unwrap(), g, 1e-13));
            }
        }
    }

    #[test]
    fn script_s_values() {
        for &(x, y) in &[(1.0, 2.0), (3.0, 0.5)] {
            assert!((script_s(0, 1.0, x, y).unwrap() - 2.0 * f64::min(x, y)).abs() < 1e-15);
        }
        assert!((script_s(1, 2.0, 1.0, 3.0).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        let want = reference::script_s_integral(2, 0.5, 2.0, 2.0).unwrap();
        assert!(close(script_s(2, 0.5, 2.0, 2.0).unwrap(), want, 1e-10));
        for l in 0..=4 {
            let want = reference::script_s_integral(l, 1.7, 0.8, 2.3).unwrap();
            assert!(close(script_s(l, 1.7, 0.8, 2.3).unwrap(), want, 1e-10), "l={l}");
        }
    }

    #[test]
    fn script_g_values() {
        let g0 = script_g(0, 1.0, 2.0, 1.0).unwrap();
        assert!((g0 - (bessel_k0(1.0).unwrap() - bessel_k0(3.0).unwrap())).abs() < 1e-15);
        assert!((g0 - 0.386_284).abs() < 1e-6);
        for &(l, b, x, y) in &[
            (1, 1.0, 2.0, 1.0),
            (0, 0.3, 0.5, 4.0),
            (1, 2.5, 0.9, 1.0),
            (2, 1.0, 2.0, 1.0),
            (3, 0.2, 5.0, 1.5),
            (1, 0.004, 1.0, 1.5),
        ] {
            let want = reference::script_g_integral(l, b, x, y).unwrap();
            let got = script_g(l, b, x, y).unwrap();
            assert!(close(got, want, 1e-9), "l={l} b={b} got={got} want={want}");
        }
        // K1(u) ~ 1/u ties G_K1 to the massless log at small beta.
        let g = script_g(0, 1e-6, 2.0, 1.0).unwrap();
        assert!((g - 3f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn script_t_values() {
        let t = script_t(0, 1.0, 2.0, 1.0).unwrap();
        let want = (-1.0f64).exp() - (-3.0f64).exp();
        assert!((t - want).abs() < 1e-15);
        assert!((t - 0.318_092).abs() < 1e-6);
        for &(l, b, x, y) in &[(1, 1.0, 1.0, 1.0), (0, 0.7, 1.0, 2.0), (2, 1.3, 0.6, 1.1), (4, 3.0, 2.0, 2.5)] {
            let want = reference::script_t_integral(l, b, x, y).unwrap();
            let got = script_t(l, b, x, y).unwrap();
            assert!(close(got, want, 1e-9), "l={l} got={got} want={want}");
        }
        assert!(script_t(0, 50.0, 2.0, 1.0).unwrap() < 1e-20);
        assert_eq!(script_t(3, 1.0, 2.0, 1.0).unwrap(), script_t(3, 1.0, 1.0, 2.0).unwrap());
    }

    #[test]
    fn minorized_grouping_and_limits() {
        let (b, x, y) = (1.0, 2.0, 1.0);
        let printed = FRAC_1_PI * (bessel_k0(b * (x - y)).unwrap() - bessel_k0(b * (x + y)).unwrap())
            + 2.0 * b * y
            + 0.5 * ((-b * (x + y)).exp() - (-b * (x - y)).exp());
        assert!((g_minorized(0, b, x, y).unwrap() - printed).abs() < 1e-12);

        let small = g_minorized(0, 1e-6, 2.0, 1.0).unwrap();
        assert!(close(small, g_massless(0, 2.0, 1.0).unwrap(), 1e-4));
        let big = g_minorized(0, 50.0, 2.0, 1.0).unwrap();
        assert!(close(big, script_s(0, 50.0, 2.0, 1.0).unwrap(), 1e-8));
    }

    #[test]
    fn massive_exact_checks() {
        let small = g_massive_exact(0, 1e-6, 2.0, 1.0).unwrap();
        assert!(close(small, g_massless(0, 2.0, 1.0).unwrap(), 1e-4));
        let exact = g_massive_exact(0, 1.0, 2.0, 1.0).unwrap();
        assert!(exact >= g_minorized(0, 1.0, 2.0, 1.0).unwrap());
        for &(l, b, x, y) in &[(0, 1.0, 2.0, 1.0), (1, 0.5, 1.0, 3.0), (2, 2.0, 0.7, 0.9)] {
            let want = reference::g_massive_theta(l, b, x, y).unwrap();
            let got = g_massive_exact(l, b, x, y).unwrap();
            assert!(close(got, want, 1e-8), "l={l} got={got} want={want}");
        }
    }

    #[test]
    fn log_scale_rule_across_ell_and_scales() {
        for &l in &[1, 2, 5, 10] {
            for &(b, x, y) in &[(1.0, 1.0, 1.0 + 1e-6), (0.3, 0.01, 0.02), (30.0, 2.0, 1.7), (0.004, 1.0, 2.5), (2.0, 8.0, 0.5), (0.0483, 0.0679, 0.0907), (0.0284, 0.665, 0.502), (19.34, 2.805, 8.794), (13.2, 9.658, 3.214), (0.0074, 9.67, 0.0123)]
            {
                let scale = script_g(0, b, x, y).unwrap();
                let want = reference::script_g_integral(l, b, x, y).unwrap();
                let got = script_g(l, b, x, y).unwrap();
                assert!((got - want).abs() <= 1e-10 * want.abs().max(scale), "G l={l} b={b} x={x} y={y} got={got} want={want}");
                let scale = g_massive_exact(0, b, x, y).unwrap();
                let want = reference::g_massive_theta(l, b, x, y).unwrap();
                let got = g_massive_exact(l, b, x, y).unwrap();
                assert!((got - want).abs() <= 1e-8 * want.abs().max(scale), "exact l={l} b={b} x={x} y={y} got={got} want={want}");
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(0, 1.0, KernelVariant::MasslessExact).is_err());
        assert!(KernelSpec::new(0, 0.0, KernelVariant::MassiveExact).is_err());
        assert!(KernelSpec::new(1, 0.0, KernelVariant::MasslessSimplified).is_err());
        assert!(KernelSpec::new(11, 0.0, KernelVariant::MasslessExact).is_err());
        assert!(KernelSpec::new(0, f64::NAN, KernelVariant::MassiveExact).is_err());
        let s = KernelSpec::new(0, 0.0, KernelVariant::MasslessSimplified).unwrap();
        assert!((s.green(1.0, 1.0).unwrap() - 2.0 / PI).abs() < 1e-16);
    }

    #[test]
    fn symmetric_kernel_composition() {
        let pot = Potential::from_builtin(Builtin::Exp);
        let spec = KernelSpec::massless(0).unwrap();
        let k = symmetric_kernel(&spec, &pot, 2.0, 1.0).unwrap();
        let want = (-1.0f64).exp() * (-0.5f64).exp() * 3f64.ln() / PI;
        assert!((k.value - want).abs() < 1e-15);
        assert!((k.value - 0.0780).abs() < 1e-4);
        assert!(!k.diagonal_flag);
        let zero = Potential::parse_expression("0").unwrap();
        assert_eq!(symmetric_kernel(&spec, &zero, 2.0, 1.0).unwrap().value, 0.0);
        assert_eq!(symmetric_kernel(&spec, &zero, 1.0, 1.0).unwrap().value, 0.0);
        assert!(symmetric_kernel(&spec, &pot, 1.0, 1.0).is_err());
    }
}
