//! Direct quadrature of the defining integrals behind each kernel.
//!
//! These are slow and exist to cross-check the closed forms and the
//! production evaluation paths; none of them share code with those paths
//! beyond the Bessel and Legendre primitives.

use std::f64::consts::{FRAC_PI_2, PI};

use super::KernelError;
use crate::quadrature::{integrate_adaptive_with_hints, integrate_semi_infinite, SingularityHint};
use crate::specfun::{bessel_k1, legendre_p};

const TOL: f64 = 1e-13;

fn plain_cosine(x: f64, y: f64, u: f64) -> f64 {
    ((x * x + y * y - u * u) / (2.0 * x * y)).clamp(-1.0, 1.0)
}

fn p(ell: u32, c: f64) -> f64 {
    legendre_p(ell, c).expect("cosine is clamped to [-1, 1]")
}

/// `(xy / pi) ∫_0^pi sin(t) P_l(cos t) / D^2 dt`, `D^2 = x^2 + y^2 - 2xy cos t`.
pub fn g_massless_angular(ell: u32, x: f64, y: f64) -> Result<f64, KernelError> {
    let r = integrate_adaptive_with_hints(
        |t| {
            let d2 = x * x + y * y - 2.0 * x * y * t.cos();
            t.sin() * p(ell, t.cos()) / d2
        },
        0.0,
        PI,
        TOL,
        &[SingularityHint::log(0.0)],
    )?;
    Ok(x * y / PI * r.value)
}

/// `beta ∫_{|x-y|}^{x+y} P_l(c(u)) du`.
pub fn script_s_integral(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let r = integrate_adaptive_with_hints(
        |u| p(ell, plain_cosine(x, y, u)),
        (x - y).abs(),
        x + y,
        TOL,
        &[],
    )?;
    Ok(beta * r.value)
}

/// `beta ∫_{|x-y|}^{x+y} K1(beta u) P_l(c(u)) du`.
pub fn script_g_integral(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let a = (x - y).abs();
    let r = integrate_adaptive_with_hints(
        |u| bessel_k1(beta * u).expect("u > 0") * p(ell, plain_cosine(x, y, u)),
        a,
        x + y,
        TOL,
        &[SingularityHint::log(a)],
    )?;
    Ok(beta * r.value)
}

/// `beta x y ∫_{-1}^{1} e^{-beta D} / D P_l(t) dt`, `D = sqrt(x^2 + y^2 - 2xyt)`,
/// integrated in `w = sqrt(1 - t)` so the `x = y` endpoint stays bounded.
pub fn script_t_integral(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let r = integrate_adaptive_with_hints(
        |w| {
            let t = 1.0 - w * w;
            let d = ((x - y) * (x - y) + 2.0 * x * y * w * w).sqrt();
            2.0 * w * (-beta * d).exp() / d * p(ell, t)
        },
        0.0,
        std::f64::consts::SQRT_2,
        TOL,
        &[],
    )?;
    Ok(beta * x * y * r.value)
}

/// `F(y) = ∫_y^inf K1(z) / z dz + pi / 2`.
pub fn f_first_form(y: f64) -> Result<f64, KernelError> {
    let r = integrate_semi_infinite(|z| bessel_k1(z).map_or(0.0, |k| k / z), y, TOL)?;
    Ok(r.value + FRAC_PI_2)
}

/// `(beta x y / 2) ∫_0^pi sin(t) H(beta D) / D P_l(cos t) dt` with
/// `H = 1 + (2/pi) F` and `F` from [`f_first_form`].
pub fn g_massive_theta(ell: u32, beta: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    let failure = std::cell::RefCell::new(None);
    let integrand = |t: f64| {
        let d = ((x - y).powi(2) + 4.0 * x * y * (0.5 * t).sin().powi(2)).sqrt();
        match f_first_form(beta * d) {
            Ok(f) => t.sin() * (1.0 + 2.0 / PI * f) / d * p(ell, t.cos()),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let knee = (x - y).abs() / (x * y).sqrt();
    let mut total = 0.0;
    if knee > 0.0 && knee < 0.5 * PI {
        total += integrate_adaptive_with_hints(integrand, 0.0, knee, 1e-12, &[SingularityHint::log(0.0)])?.value;
        total += integrate_adaptive_with_hints(integrand, knee, PI, 1e-12, &[SingularityHint::log(knee)])?.value;
    } else {
        total += integrate_adaptive_with_hints(integrand, 0.0, PI, 1e-12, &[SingularityHint::log(0.0)])?.value;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(0.5 * beta * x * y * total)
}
