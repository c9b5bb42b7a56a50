//! Integrals of K0 and the functions F and H of the relativistic kinetic
//! Green function.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};

use super::{k1_raw, positive, SpecFunError};

/// `int_y^inf K0(z) dz`, the Bickley function `Ki_1(y)`.
pub fn k0_tail(y: f64) -> Result<f64, SpecFunError> {
    positive("k0_tail", y).map(ki1_raw)
}

/// `F(y) = K1(y) + pi/2 - int_y^inf K0(z) dz`.
pub fn f_function(y: f64) -> Result<f64, SpecFunError> {
    positive("f_function", y).map(f_raw)
}

/// `H(x) = 1 + (2/pi) F(x)`.
pub fn h_function(x: f64) -> Result<f64, SpecFunError> {
    positive("h_function", x).map(|x| 1.0 + FRAC_2_PI * f_raw(x))
}

pub(crate) fn f_raw(y: f64) -> f64 {
    k1_raw(y) + FRAC_PI_2 - ki1_raw(y)
}

pub(crate) fn ki1_raw(y: f64) -> f64 {
    bickley_scaled(1, y) * (-y).exp()
}

/// Bickley function `Ki_2(y) = int_0^inf exp(-y cosh t) / cosh^2 t dt`,
/// the antiderivative (with a minus sign) of `Ki_1`.
pub(crate) fn ki2_raw(y: f64) -> f64 {
    bickley_scaled(2, y) * (-y).exp()
}

/// `e^y Ki_n(y)` by the trapezoidal rule on the cosh representation.
///
/// The integrand is even and analytic in the strip |Im t| < pi/2, so the
/// trapezoidal sum converges like exp(-pi^2 / h); the step also shrinks as
/// 1/sqrt(y) to resolve the Gaussian-like peak at large y.
fn bickley_scaled(order: i32, y: f64) -> f64 {
    let h = (0.4 / y.sqrt()).min(0.25);
    // y (cosh t - 1) = 40 bounds the exponential; 2^n e^{-n t} < 1e-17
    // bounds 1/cosh^n t.
    let n = order as f64;
    let t_cut = (17.0 * std::f64::consts::LN_10 + n * std::f64::consts::LN_2) / n;
    let t_max = (1.0 + 40.0 / y).acosh().min(t_cut);
    let steps = (t_max / h).ceil() as usize;
    let mut sum = 0.5;
    for k in 1..=steps {
        let t = k as f64 * h;
        let e = t.exp();
        let em1 = t.exp_m1();
        // cosh t - 1 = (e^t - 1)^2 / (2 e^t), free of cancellation.
        let cosh_m1 = em1 * em1 / (2.0 * e);
        let cosh = 1.0 + cosh_m1;
        sum += (-y * cosh_m1).exp() / cosh.powi(order);
    }
    h * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_adaptive, integrate_semi_infinite};
    use crate::specfun::{k0_raw, k1_raw};

    const GRID: [f64; 7] = [0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

    fn ki_oracle(order: i32, y: f64) -> f64 {
        let t_max = (1.0 + 50.0 / y).asinh() + 5.0;
        integrate_adaptive(
            |t| (-y * t.cosh()).exp() / t.cosh().powi(order),
            0.0,
            t_max,
            1e-15,
        )
        .unwrap()
        .value
    }

    fn f_first_form(y: f64) -> f64 {
        integrate_semi_infinite(|z| k1_raw(z) / z, y, 1e-14).unwrap().value + FRAC_PI_2
    }

    #[test]
    fn tail_matches_cosh_quadrature() {
        for &y in GRID.iter().chain(&[1e-6, 2.0, 30.0, 200.0]) {
            let want = ki_oracle(1, y);
            assert!((ki1_raw(y) - want).abs() <= 1e-12 * want, "y={y} got={} want={want}", ki1_raw(y));
            let want2 = ki_oracle(2, y);
            assert!((ki2_raw(y) - want2).abs() <= 1e-12 * want2, "y={y}");
        }
    }

    #[test]
    fn tail_matches_direct_integral_of_k0() {
        for &y in &[0.1, 1.0, 4.0] {
            let direct = integrate_semi_infinite(k0_raw, y, 1e-14).unwrap().value;
            assert!((ki1_raw(y) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_limits_and_bound() {
        assert!((k0_tail(1e-8).unwrap() - FRAC_PI_2).abs() < 1e-6);
        let bound = FRAC_PI_2 * (-1.0_f64).exp();
        assert!(k0_tail(1.0).unwrap() <= bound);
        for &y in &GRID {
            assert!(k0_tail(y).unwrap() < FRAC_PI_2 * (-y).exp());
        }
    }

    #[test]
    fn f_two_forms_agree() {
        for &y in &GRID {
            let a = f_first_form(y);
            let b = f_function(y).unwrap();
            assert!((a - b).abs() < 1e-9 * a.max(1.0), "y={y} first={a} second={b}");
        }
        assert!((f_function(1.0).unwrap() - f_first_form(1.0)).abs() < 1e-10);
    }

    #[test]
    fn f_and_h_limits() {
        assert!((f_function(50.0).unwrap() - FRAC_PI_2).abs() < 1e-12);
        let x = 1e-6;
        let xh = x * h_function(x).unwrap();
        assert!((xh - FRAC_2_PI).abs() < 1e-4 * FRAC_2_PI);
        assert!((h_function(50.0).unwrap() - 2.0).abs() < 1e-10);
        let h1 = 1.0 + FRAC_2_PI * f_first_form(1.0);
        assert!((h_function(1.0).unwrap() - h1).abs() < 1e-10);
    }

    #[test]
    fn f_brackets() {
        for &y in &GRID {
            let k1 = k1_raw(y);
            let f = f_raw(y);
            assert!(k1 < f && f < k1 + FRAC_PI_2);
            assert!(f > k1 + FRAC_PI_2 - FRAC_PI_2 * (-y).exp());
        }
    }

    #[test]
    fn monotone_decreasing() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for i in 0..300 {
            let y = 1e-3 * 1.04_f64.powi(i);
            let cur = (ki1_raw(y), f_raw(y));
            // F saturates at pi/2 to working precision once y exceeds ~30.
            assert!(cur.0 < prev.0 && cur.1 <= prev.1, "y={y}");
            assert!(y > 30.0 || cur.1 < prev.1, "y={y}");
            prev = cur;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(k0_tail(0.0).is_err());
        assert!(f_function(-1.0).is_err());
        assert!(h_function(f64::INFINITY).is_err());
    }
}
