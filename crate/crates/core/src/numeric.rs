//! Exact combinatorics helpers shared by the counting and Uniform models.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

/// Pascal triangle of exact binomial coefficients, `C(n, k)` for `n <= max_n`.
#[derive(Debug, Clone)]
pub struct Binomials {
    rows: Vec<Vec<BigUint>>,
}

impl Binomials {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = Vec::with_capacity(n + 1);
            for k in 0..=n {
                if k == 0 || k == n {
                    row.push(BigUint::one());
                } else {
                    let prev = &rows[n - 1];
                    row.push(&prev[k - 1] + &prev[k]);
                }
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// `C(n, k)`, defined as zero when `n < 0`, `k < 0` or `k > n`.
    pub fn get(&self, n: i64, k: i64) -> BigUint {
        if n < 0 || k < 0 || k > n {
            return BigUint::zero();
        }
        let (n, k) = (n as usize, k as usize);
        if n <= self.max_n() {
            self.rows[n][k].clone()
        } else {
            binomial(n as i64, k as i64)
        }
    }
}

/// `C(n, k)` by the multiplicative formula, zero outside the usual domain.
pub fn binomial(n: i64, k: i64) -> BigUint {
    if n < 0 || k < 0 || k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Multinomial `N! / prod n_i!` with `N = sum n_i`.
pub fn multinomial(parts: &[u32]) -> BigUint {
    let mut total: i64 = 0;
    let mut acc = BigUint::one();
    for &p in parts {
        total += p as i64;
        acc *= binomial(total, p as i64);
    }
    acc
}

/// Converts `num / den` to `f64` without overflowing for very large operands.
pub fn ratio_to_f64(num: &BigInt, den: &BigUint) -> f64 {
    if den.is_zero() {
        return f64::NAN;
    }
    let den = BigInt::from(den.clone());
    let bits = num.bits().max(den.bits());
    let shift = bits.saturating_sub(960);
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (&den >> shift).to_f64().unwrap_or(f64::NAN);
    if d == 0.0 {
        return f64::NAN;
    }
    n / d
}

pub fn uratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    ratio_to_f64(&BigInt::from(num.clone()), den)
}
