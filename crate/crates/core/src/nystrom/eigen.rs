//! Dense symmetric eigensolver: Householder reduction to tridiagonal form,
//! implicit QL with Wilkinson shifts for the eigenvalues, and inverse
//! iteration plus back-transformation for selected eigenvectors.

use thiserror::Error;

/// Maximum QL sweeps spent on any one eigenvalue.
pub const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("matrix is not square: {len} entries for n = {n}")]
    Shape { n: usize, len: usize },
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("QL iteration did not converge for eigenvalue {index} after {iterations} sweeps")]
    NonConvergence { index: usize, iterations: usize },
}

/// `Q^T A Q = T` with `T` tridiagonal and `Q` a product of reflectors.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[k]` couples rows `k` and `k + 1`.
    pub off: Vec<f64>,
    /// Reflector `k` acts on indices `k + 1..n` as `I - tau v v^T`.
    reflectors: Vec<(f64, Vec<f64>)>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Maps an eigenvector of `T` to one of `A`.
    pub fn back_transform(&self, z: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        for (k, (tau, v)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let tail = &mut x[k + 1..];
            let dot: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
            let s = tau * dot;
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
        x
    }
}

fn validate(a: &[f64], n: usize) -> Result<(), EigenError> {
    if a.len() != n * n {
        return Err(EigenError::Shape { n, len: a.len() });
    }
    if let Some(k) = a.iter().position(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite { row: k / n, col: k % n });
    }
    Ok(())
}

/// Householder tridiagonalization of the symmetric row-major `n x n` matrix.
pub fn tridiagonalize(mut a: Vec<f64>, n: usize) -> Result<Tridiagonal, EigenError> {
    validate(&a, n)?;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<f64> = (0..m).map(|i| a[(k + 1 + i) * n + k]).collect();
        diag[k] = a[k * n + k];
        let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if scale == 0.0 {
            off[k] = 0.0;
            reflectors.push((0.0, v));
            continue;
        }
        // Scaled so that squaring neither underflows nor overflows.
        for x in &mut v {
            *x /= scale;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let tau = 2.0 / vnorm2;
        off[k] = alpha * scale;
        // p = tau A v on the trailing block, w = p - (tau/2)(p.v) v.
        let mut p = vec![0.0; m];
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = tau * row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        let kdot = 0.5 * tau * p.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kdot * vi).collect();
        for i in 0..m {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..m {
                row[j] -= vi * w[j] + wi * v[j];
            }
        }
        reflectors.push((tau, v));
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        off[n - 2] = a[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        diag[n - 1] = a[n * n - 1];
    }
    Ok(Tridiagonal { diag, off, reflectors })
}

/// All eigenvalues of the symmetric tridiagonal matrix, ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, EigenError> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let norm = d.iter().zip(&e).fold(0.0f64, |m, (a, b)| m.max(a.abs() + b.abs()));
    let floor = f64::EPSILON * f64::EPSILON * norm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(EigenError::NonConvergence { index: l, iterations: iter - 1 });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Unit eigenvector of the tridiagonal matrix for the eigenvalue `lambda`
/// by inverse iteration.
pub fn tridiagonal_eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag.iter().chain(off).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let shift = lambda + 64.0 * f64::EPSILON * scale;
    let mut z = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..4 {
        z = solve_shifted(diag, off, shift, &z, scale);
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        for v in &mut z {
            *v /= norm;
        }
    }
    z
}

/// Solves `(T - shift I) x = b` by Gaussian elimination with partial pivoting.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, b: &[f64], scale: f64) -> Vec<f64> {
    let n = diag.len();
    let tiny = f64::EPSILON * scale;
    // Row i holds (a, b, c) = entries at columns i, i+1, i+2 after pivoting.
    let mut r0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut r1: Vec<f64> = off.to_vec();
    r1.push(0.0);
    let mut r2 = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    let mut x = b.to_vec();
    for i in 0..n - 1 {
        if sub[i].abs() > r0[i].abs() {
            // Swap rows i and i+1.
            let (a0, a1, a2) = (r0[i], r1[i], r2[i]);
            r0[i] = sub[i];
            r1[i] = r0[i + 1];
            r2[i] = r1[i + 1];
            let f = a0 / r0[i];
            r0[i + 1] = a1 - f * r1[i];
            r1[i + 1] = a2 - f * r2[i];
            x.swap(i, i + 1);
            x[i + 1] -= f * x[i];
        } else {
            let piv = if r0[i] == 0.0 { tiny } else { r0[i] };
            r0[i] = piv;
            let f = sub[i] / piv;
            r0[i + 1] -= f * r1[i];
            r1[i + 1] -= f * r2[i];
            x[i + 1] -= f * x[i];
        }
        sub[i] = 0.0;
    }
    if r0[n - 1] == 0.0 {
        r0[n - 1] = tiny;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        if i + 1 < n {
            s -= r1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= r2[i] * x[i + 2];
        }
        x[i] = s / r0[i];
    }
    x
}

/// Largest `k` eigenvalues (descending) and the unit eigenvector of the
/// largest one.
pub fn top_eigenpairs(a: Vec<f64>, n: usize, k: usize) -> Result<(Vec<f64>, Vec<f64>), EigenError> {
    let t = tridiagonalize(a, n)?;
    let mut values = tridiagonal_eigenvalues(&t.diag, &t.off)?;
    values.reverse();
    values.truncate(k);
    let z = tridiagonal_eigenvector(&t.diag, &t.off, values[0]);
    Ok((values, t.back_transform(&z)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    fn oracle(a: &[f64], n: usize) -> Vec<f64> {
        let m = DMatrix::from_row_slice(n, n, a);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn eigenvalues_match_oracle() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (17, 4), (120, 5)] {
            let a = random_symmetric(n, seed);
            let t = tridiagonalize(a.clone(), n).unwrap();
            let got = tridiagonal_eigenvalues(&t.diag, &t.off).unwrap();
            let want = oracle(&a, n);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12 * n as f64, "n={n} {g} vs {w}");
            }
        }
    }

    #[test]
    fn top_eigenvector_satisfies_equation() {
        let n = 80;
        let mut a = random_symmetric(n, 9);
        for i in 0..n {
            a[i * n + i] += if i == 3 { 5.0 } else { 0.0 };
        }
        let (vals, v) = top_eigenpairs(a.clone(), n, 3).unwrap();
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        for i in 0..n {
            let av: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
            assert!((av - vals[0] * v[i]).abs() < 1e-10, "row {i}");
        }
    }

    #[test]
    fn diagonal_and_degenerate_inputs() {
        let a = vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let (vals, v) = top_eigenpairs(a, 3, 3).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        assert!((v[0].abs() - 1.0).abs() < 1e-14);
        // Graded tail: tiny couplings between vanishing diagonal entries.
        let n = 40;
        let mut graded = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                graded[i * n + j] = (-(3.0 * (i + j) as f64)).exp();
            }
        }
        let t = tridiagonalize(graded.clone(), n).unwrap();
        assert!(t.diag.iter().chain(&t.off).all(|v| v.is_finite()));
        let (vals, _) = top_eigenpairs(graded.clone(), n, 2).unwrap();
        assert!((vals[0] - oracle(&graded, n)[n - 1]).abs() < 1e-14);
        for i in 0..n {
            for j in 0..n {
                graded[i * n + j] = (-(9.0 * (i + j) as f64)).exp();
            }
        }
        let t = tridiagonalize(graded, n).unwrap();
        assert!(t.diag.iter().chain(&t.off).all(|v| v.is_finite()));
        let zero = vec![0.0; 16];
        let (vals, _) = top_eigenpairs(zero, 4, 2).unwrap();
        assert_eq!(vals, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(tridiagonalize(vec![1.0; 5], 2), Err(EigenError::Shape { .. })));
        let mut a = vec![0.0; 4];
        a[3] = f64::NAN;
        assert!(matches!(tridiagonalize(a, 2), Err(EigenError::NonFinite { row: 1, col: 1 })));
    }
}
