//! Special functions for the analytic eigenfunction catalog: Bessel `J_n`
//! and its zeros, associated Legendre functions and spherical harmonics,
//! and orthonormal Hermite functions.
//!
//! Everything is implemented from scratch (power series, three-term
//! recurrences, bracketed bisection); no external math library is used.
//! Tolerances: `bessel_j` is good to about `1e-10` absolute for
//! `n ≤ 20, x ≤ 100`; zeros are bisected to `1e-12`.

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by special-function evaluation.
#[derive(Debug, Error)]
pub enum SpecFunError {
    /// The bracketing/bisection loop failed to converge.
    #[error("bessel zero bracketing failed for (n={0}, k={1})")]
    ConvergenceFailure(usize, usize),
}

/// Bessel function of the first kind `J_n(x)` for `n ≥ 0`, `x ≥ 0`.
///
/// Power series for `x ≤ 12`; for larger `x` a downward (Miller)
/// recurrence seeded well above `max(n, x)` and normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    debug_assert!(x >= 0.0, "bessel_j requires x >= 0");
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= 12.0 {
        return bessel_series(n, x);
    }
    bessel_miller(n, x)
}

/// Power series `Σ (−1)^m (x/2)^{n+2m} / (m! (n+m)!)`.
fn bessel_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    // Leading term (x/2)^n / n! built multiplicatively to avoid overflow.
    let mut term = 1.0;
    for j in 1..=n {
        term *= half / j as f64;
    }
    let mut sum = term;
    let x2 = half * half;
    for m in 1..200 {
        term *= -x2 / (m as f64 * (n + m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-10) {
            break;
        }
    }
    sum
}

/// Miller's downward recurrence with sum normalization.
fn bessel_miller(n: usize, x: f64) -> f64 {
    let start = {
        let base = x.max(n as f64) as usize;
        // Enough guard orders for 1e-12 relative accuracy.
        let m = base + 40 + (base as f64).sqrt() as usize;
        if m % 2 == 0 { m } else { m + 1 }
    };
    let mut jkp = 0.0_f64; // J_{k+1}
    let mut jk = 1e-30_f64; // J_k, seeded at k = start
    let mut result = 0.0;
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k % 2 == 0 {
            norm += if k == 0 { jk } else { 2.0 * jk };
        }
        if k == n {
            result = jk;
        }
        if k > 0 {
            // J_{k−1} = (2k/x) J_k − J_{k+1}
            let jm = 2.0 * k as f64 / x * jk - jkp;
            jkp = jk;
            jk = jm;
            if jk.abs() > 1e250 {
                jkp /= 1e250;
                jk /= 1e250;
                norm /= 1e250;
                result /= 1e250;
            }
        }
    }
    result / norm
}

/// Eagerly built table of Bessel zeros `j_{n,k}`.
///
/// Row `n = 0` is bracketed from McMahon's asymptotic guess; row `n` is
/// bracketed by the interlacing `j_{n−1,k} < j_{n,k} < j_{n−1,k+1}` and
/// refined by bisection only.
#[derive(Debug, Clone)]
pub struct BesselZeroTable {
    /// `rows[n][k−1] = j_{n,k}`.
    rows: Vec<Vec<f64>>,
}

impl BesselZeroTable {
    /// Build the zeros `j_{n,k}` for all `n ≤ n_max`, `k ≤ k_max`.
    pub fn new(n_max: usize, k_max: usize) -> Result<Self, SpecFunError> {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            // Row n needs k_max + (n_max − n) entries so that interlacing
            // brackets are available for the rows above.
            let want = k_max + (n_max - n);
            let mut row = Vec::with_capacity(want);
            for k in 1..=want {
                let (mut lo, mut hi) = if n == 0 {
                    // McMahon: j_{0,k} ≈ β − 1/(8β), β = (k − 1/4)π.
                    let beta = (k as f64 - 0.25) * std::f64::consts::PI;
                    let guess = beta - 1.0 / (8.0 * beta);
                    (guess - 0.5, guess + 0.5)
                } else {
                    let below: &Vec<f64> = &rows[n - 1];
                    (below[k - 1], below[k])
                };
                // Nudge brackets off the endpoints (interlacing is strict).
                let span = hi - lo;
                lo += 1e-9 * span;
                hi -= 1e-9 * span;
                let flo = bessel_j(n, lo);
                let fhi = bessel_j(n, hi);
                if flo == 0.0 {
                    row.push(lo);
                    continue;
                }
                if flo * fhi > 0.0 {
                    return Err(SpecFunError::ConvergenceFailure(n, k));
                }
                let mut a = lo;
                let mut b = hi;
                let mut fa = flo;
                while b - a > 1e-13 {
                    let mid = 0.5 * (a + b);
                    let fm = bessel_j(n, mid);
                    if fa * fm <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                row.push(0.5 * (a + b));
            }
            rows.push(row);
        }
        Ok(BesselZeroTable { rows })
    }

    /// Zero `j_{n,k}` (`k ≥ 1`).
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.rows[n][k - 1]
    }
}

/// Convenience wrapper: the `k`-th positive zero of `J_n` (`n ≤ 20`,
/// `k ≤ 50`), bisected to `1e-12`.
pub fn bessel_zero(n: usize, k: usize) -> Result<f64, SpecFunError> {
    assert!(n <= 20 && (1..=50).contains(&k), "bessel_zero range: n <= 20, 1 <= k <= 50");
    let table = BesselZeroTable::new(n, k)?;
    Ok(table.get(n, k))
}

/// Associated Legendre function `P_l^m(t)` for `0 ≤ m ≤ l`, `t ∈ [−1,1]`,
/// with the Condon–Shortley phase, by the stable upward-`l` recurrence.
pub fn legendre_p(l: usize, m: usize, t: f64) -> f64 {
    assert!(m <= l, "legendre_p requires m <= l");
    assert!((-1.0..=1.0).contains(&t), "legendre_p requires t in [-1,1]");
    // P_m^m = (−1)^m (2m−1)!! (1−t²)^{m/2}
    let somx2 = ((1.0 - t) * (1.0 + t)).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    // P_{m+1}^m = t (2m+1) P_m^m
    let mut pmmp1 = t * (2.0 * m as f64 + 1.0) * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = (t * (2.0 * ll as f64 - 1.0) * pmmp1 - (ll + m - 1) as f64 * pmm)
            / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Spherical harmonic `Y_l^m(α, β)` with the normalization
/// `√((2l+1)/(4π) · (l−m)!/(l+m)!) P_l^m(cos α) e^{imβ}`; negative `m`
/// via `Y_l^{−m} = (−1)^m conj(Y_l^m)`.
pub fn spherical_harmonic(l: usize, m: i64, alpha: f64, beta: f64) -> Complex64 {
    assert!(m.unsigned_abs() as usize <= l, "spherical_harmonic requires |m| <= l");
    if m < 0 {
        let y = spherical_harmonic(l, -m, alpha, beta);
        let sign = if (-m) % 2 == 0 { 1.0 } else { -1.0 };
        return sign * y.conj();
    }
    let mu = m as usize;
    // (l−m)!/(l+m)! as a product to avoid factorial overflow.
    let mut ratio = 1.0;
    for j in (l - mu + 1)..=(l + mu) {
        ratio /= j as f64;
    }
    let norm = ((2.0 * l as f64 + 1.0) / (4.0 * std::f64::consts::PI) * ratio).sqrt();
    let p = legendre_p(l, mu, alpha.cos());
    norm * p * Complex64::new(0.0, m as f64 * beta).exp()
}

/// Orthonormal Hermite function `Φ_k(x) = H_k(x) e^{−x²/2} / √(2^k k! √π)`
/// by the three-term recurrence
/// `Φ_{k+1} = √(2/(k+1)) x Φ_k − √(k/(k+1)) Φ_{k−1}`.
pub fn hermite_fn(k: usize, x: f64) -> f64 {
    assert!(k <= 30, "hermite_fn supports k <= 30");
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if k == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = std::f64::consts::SQRT_2 * x * h0;
    for j in 1..k {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * x * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}
