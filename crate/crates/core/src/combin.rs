//! Exact small-combinatorics helpers shared across modules.

/// Exact binomial coefficient `C(n, k)`.
///
/// Panics on u128 overflow; the largest value this crate ever needs is
/// around `n·C(n−1,r) ≲ 10^16` for the construction grids.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n-k+i+1) / (i+1) is exact at every step
        acc = acc
            .checked_mul((n - k + i + 1) as u128)
            .expect("binomial overflow")
            / (i + 1) as u128;
    }
    acc
}

/// `C(n, k)` as f64 (exact while the result stays below 2^53; falls back to
/// a float product once the exact value overflows u128).
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - k + i + 1) as u128) {
            Some(x) => acc = x / (i + 1) as u128,
            None => {
                let mut f = 1.0f64;
                for j in 0..k {
                    f *= (n - k + j + 1) as f64 / (j + 1) as f64;
                }
                return f;
            }
        }
    }
    acc as f64
}

/// `ln Γ(x)` for x > 0: Stirling series with correction terms for
/// x ≥ 10, shifted up by the recurrence below that.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma: x must be positive");
    let mut shift = 0.0f64;
    let mut x = x;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
        + shift
}

/// `ln C(n, k)` for real `n ≥ k`: term-wise sum while k is small (exact
/// to rounding), gamma-function form beyond.
///
/// The large-k branch evaluates `ln Γ(n+1) − ln Γ(n−k+1)` as a Stirling
/// difference — the naive subtraction of two ~n·ln n terms would cancel
/// away ten digits when k ≪ n.
pub fn ln_binomial(n: f64, k: u64) -> f64 {
    assert!(k as f64 <= n + 0.5, "ln_binomial: k > n");
    if k <= 100_000 {
        let mut acc = 0.0f64;
        for i in 0..k {
            acc += ((n - i as f64) / (i + 1) as f64).ln();
        }
        return acc;
    }
    let kf = k as f64;
    let a = n + 1.0;
    let b = n - kf + 1.0;
    let rising = if b >= 10.0 {
        // ln Γ(a) − ln Γ(b) with a − b = k, all terms O(k·ln n)
        (b - 0.5) * (kf / b).ln_1p() + kf * a.ln() - kf + 1.0 / (12.0 * a)
            - 1.0 / (12.0 * b)
            - 1.0 / (360.0 * a * a * a)
            + 1.0 / (360.0 * b * b * b)
    } else {
        ln_gamma(a) - ln_gamma(b)
    };
    rising - ln_gamma(kf + 1.0)
}

/// Checked `base^exp` in u128.
pub fn checked_pow(base: u128, exp: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Smallest integer `u ≥ 0` with `u^r ≥ x` (exact integer ceiling of x^{1/r}).
pub fn ceil_nth_root(x: u128, r: u32) -> u128 {
    assert!(r >= 1);
    if x <= 1 {
        return x;
    }
    let mut lo: u128 = 1; // lo^r < x
    let mut hi: u128 = 2;
    while checked_pow(hi, r).is_some_and(|p| p < x) {
        lo = hi;
        hi *= 2;
    }
    // invariant: lo^r < x <= hi^r (overflow means "definitely >= x")
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if checked_pow(mid, r).is_none_or(|p| p >= x) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Ceiling of a nonnegative float, snapping values within a few ulps of an
/// integer first so that dyadic inputs never straddle a boundary.
pub fn ceil_guarded(x: f64) -> u64 {
    assert!(x >= 0.0 && x.is_finite(), "ceil_guarded: bad input {x}");
    let r = x.round();
    let snapped = if (x - r).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
        r
    } else {
        x
    };
    snapped.ceil() as u64
}
