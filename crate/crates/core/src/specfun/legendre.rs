use super::{check_ell, SpecFunError};

/// Smallest admissible `x - 1` for [`legendre_q`].
pub const Q_DIAGONAL_GAP: f64 = 1e-12;

/// Legendre polynomial `P_ell(y)` by Bonnet's recurrence.
pub fn legendre_p(ell: u32, y: f64) -> Result<f64, SpecFunError> {
    let ell = check_ell(ell)?;
    if !(y.abs() <= 1.0) {
        return Err(SpecFunError::Domain {
            function: "legendre_p",
            x: y,
            domain: "[-1, 1]",
        });
    }
    Ok(legendre_p_raw(ell, y))
}

/// Bonnet recurrence without domain checks; valid for any real `y`.
pub(crate) fn legendre_p_raw(ell: u32, y: f64) -> f64 {
    match ell {
        0 => 1.0,
        1 => y,
        _ => {
            let mut prev = 1.0;
            let mut cur = y;
            for n in 1..ell {
                let nf = n as f64;
                let next = ((2.0 * nf + 1.0) * y * cur - nf * prev) / (nf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Legendre function of the second kind `Q_ell(x)` for `x > 1`.
///
/// Arguments closer to 1 than [`Q_DIAGONAL_GAP`] are rejected: the logarithmic
/// singularity there is the quadrature layer's business.
pub fn legendre_q(ell: u32, x: f64) -> Result<f64, SpecFunError> {
    let ell = check_ell(ell)?;
    if !x.is_finite() || x <= 1.0 {
        return Err(SpecFunError::Domain {
            function: "legendre_q",
            x,
            domain: "(1, inf)",
        });
    }
    let gap = x - 1.0;
    if gap < Q_DIAGONAL_GAP {
        return Err(SpecFunError::Diagonal {
            function: "legendre_q",
            x,
        });
    }
    Ok(legendre_q_gap(ell, x, gap))
}

/// `Q_ell(z)` given `z` and `z - 1` separately, so callers that know the gap
/// in closed form (e.g. `(r - r')^2 / (2 r r')`) keep full relative accuracy
/// near the diagonal.
pub(crate) fn legendre_q_gap(ell: u32, z: f64, gap: f64) -> f64 {
    let q0 = 0.5 * (2.0 / gap).ln_1p();
    if ell == 0 {
        return q0;
    }
    // Growth rate of the dominant (P-like) solution.
    let rho = z + (gap * (z + 1.0)).sqrt();
    let log_rho = rho.ln();
    if 2.0 * ell as f64 * log_rho <= 3.0 * std::f64::consts::LN_10 {
        // Upward recurrence loses at most ~3 digits here.
        let mut prev = q0;
        let mut cur = z * q0 - 1.0;
        for n in 1..ell {
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0) * z * cur - nf * prev) / (nf + 1.0);
            prev = cur;
            cur = next;
        }
        cur
    } else {
        // Q is the minimal solution: run the recurrence downward and
        // normalize against Q0.
        let extra = (20.0 / log_rho).ceil() as usize + 5;
        let start = ell as usize + extra;
        let mut upper = 0.0_f64;
        let mut cur = 1e-30_f64;
        let mut at_ell = 0.0;
        for k in (1..=start).rev() {
            let kf = k as f64;
            let lower = ((2.0 * kf + 1.0) * z * cur - (kf + 1.0) * upper) / kf;
            upper = cur;
            cur = lower;
            if k - 1 == ell as usize {
                at_ell = cur;
            }
            if cur.abs() > 1e250 {
                cur *= 1e-250;
                upper *= 1e-250;
                at_ell *= 1e-250;
            }
        }
        at_ell * (q0 / cur)
    }
}
