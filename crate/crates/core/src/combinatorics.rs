//! Combinatorial kernels behind the segment estimators.
//!
//! Binomial coefficients are handled in log space. Central binomials such as
//! `C(2n, n)` overflow `f64` long before `n = 600`, so every ratio used here is
//! formed by adding and subtracting logarithms and exponentiating once.
//!
//! Log-factorials below [`TABLE_CAPACITY`] come from a table accumulated with
//! compensated summation, which keeps ratios of binomials with arguments up to
//! a few thousand accurate to roughly `1e-13` relative. Beyond the table a
//! Stirling series is used.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use crate::error::{ensure, Result};

/// Largest argument served from the log-factorial table.
pub const TABLE_CAPACITY: u64 = 1 << 15;

/// Largest `n` for which [`log_binomial`] takes the exact integer path.
pub const EXACT_BINOMIAL_LIMIT: u64 = 60;

/// `harel_area` switches from the exact expression to the Stirling asymptote
/// at this argument.
pub const HAREL_STIRLING_SWITCH: u64 = 150;

/// Largest walk half-length accepted by [`walk_area_oracle`].
pub const WALK_ORACLE_LIMIT: u64 = 10;

/// A nonnegative number stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNumber {
    /// `ln(value)`; meaningless when `zero_flag` is set.
    pub log_magnitude: f64,
    pub zero_flag: bool,
}

impl LogNumber {
    pub const ZERO: LogNumber = LogNumber {
        log_magnitude: f64::NEG_INFINITY,
        zero_flag: true,
    };
    pub const ONE: LogNumber = LogNumber {
        log_magnitude: 0.0,
        zero_flag: false,
    };

    pub fn from_ln(log_magnitude: f64) -> Self {
        LogNumber {
            log_magnitude,
            zero_flag: false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero_flag
    }

    /// `ln(value)`, or `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.zero_flag {
            f64::NEG_INFINITY
        } else {
            self.log_magnitude
        }
    }

    pub fn value(&self) -> f64 {
        if self.zero_flag {
            0.0
        } else {
            self.log_magnitude.exp()
        }
    }

    pub fn mul(self, other: LogNumber) -> LogNumber {
        if self.zero_flag || other.zero_flag {
            LogNumber::ZERO
        } else {
            LogNumber::from_ln(self.log_magnitude + other.log_magnitude)
        }
    }

    /// Division by zero yields `+inf` in log space.
    pub fn div(self, other: LogNumber) -> LogNumber {
        if self.zero_flag {
            LogNumber::ZERO
        } else if other.zero_flag {
            LogNumber::from_ln(f64::INFINITY)
        } else {
            LogNumber::from_ln(self.log_magnitude - other.log_magnitude)
        }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// `ln(k!)` as an unevaluated sum `hi + lo`.
struct LogFactorials {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl LogFactorials {
    fn build(capacity: u64) -> Self {
        let cap = capacity as usize;
        let mut hi = Vec::with_capacity(cap + 1);
        let mut lo = Vec::with_capacity(cap + 1);
        hi.push(0.0);
        lo.push(0.0);
        let (mut acc, mut comp) = (0.0f64, 0.0f64);
        for k in 1..=cap {
            let (s, e) = two_sum(acc, (k as f64).ln());
            acc = s;
            comp += e;
            hi.push(acc);
            lo.push(comp);
        }
        LogFactorials { hi, lo }
    }
}

fn table() -> &'static LogFactorials {
    static TABLE: OnceLock<LogFactorials> = OnceLock::new();
    TABLE.get_or_init(|| LogFactorials::build(TABLE_CAPACITY))
}

/// `ln(n!)` as `(hi, lo)`.
fn ln_factorial_dd(n: u64) -> (f64, f64) {
    if n <= TABLE_CAPACITY {
        let t = table();
        (t.hi[n as usize], t.lo[n as usize])
    } else {
        let x = n as f64;
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
        let (s, e) = two_sum(x * x.ln() - x, 0.5 * (2.0 * PI * x).ln());
        let (s2, e2) = two_sum(s, series);
        (s2, e + e2)
    }
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    let (hi, lo) = ln_factorial_dd(n);
    hi + lo
}

fn exact_binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// `ln C(n, k)` for `0 <= k <= n`.
fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if n <= EXACT_BINOMIAL_LIMIT {
        return (exact_binomial(n, k) as f64).ln();
    }
    let (hn, ln_) = ln_factorial_dd(n);
    let (hk, lk) = ln_factorial_dd(k);
    let (hr, lr) = ln_factorial_dd(n - k);
    let (d1, e1) = two_sum(hn, -hk);
    let (d2, e2) = two_sum(d1, -hr);
    d2 + (e1 + e2 + (ln_ - lk - lr))
}

/// `ln C(n, k)`, or `-inf` when `k` is outside `[0, n]`.
#[inline]
pub(crate) fn ln_choose_or_neg_inf(n: i64, k: i64) -> f64 {
    if n < 0 || k < 0 || k > n {
        f64::NEG_INFINITY
    } else {
        ln_choose(n as u64, k as u64)
    }
}

/// Binomial coefficient `C(n, k)` in log space.
///
/// Returns [`LogNumber::ZERO`] when `k < 0` or `k > n`. Arguments up to
/// [`EXACT_BINOMIAL_LIMIT`] are computed exactly in integers first.
pub fn log_binomial(n: u64, k: i64) -> LogNumber {
    if k < 0 || k as u64 > n {
        LogNumber::ZERO
    } else {
        LogNumber::from_ln(ln_choose(n, k as u64))
    }
}

/// Expected absolute area under a uniformly random balanced walk of `2n`
/// unit steps, evaluated exactly: `n 2^(2n-1) / C(2n, n)`.
pub fn harel_area_exact(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let ln_b = (n as f64).ln() + (2 * n - 1) as f64 * LN_2 - ln_choose(2 * n, n);
    ln_b.exp()
}

/// Large-`n` form of the expected walk area, `n sqrt(pi n) / 2`.
pub fn harel_area_asymptotic(n: u64) -> f64 {
    let x = n as f64;
    0.5 * x * (PI * x).sqrt()
}

/// Expected walk area `B(n)`: exact below [`HAREL_STIRLING_SWITCH`], the
/// Stirling asymptote from there on.
pub fn harel_area(n: u64) -> f64 {
    if n < HAREL_STIRLING_SWITCH {
        harel_area_exact(n)
    } else {
        harel_area_asymptotic(n)
    }
}

/// Brute-force mean area over all `C(2n, n)` balanced walks of `2n` unit
/// steps. A path's area is the sum of `|height|` after each step.
pub fn walk_area_oracle(n: u64) -> Result<f64> {
    ensure!(
        n <= WALK_ORACLE_LIMIT,
        InvalidInput,
        "walk enumeration is limited to n <= {WALK_ORACLE_LIMIT}, got {n}"
    );
    if n == 0 {
        return Ok(0.0);
    }
    let steps = 2 * n as u32;
    let (mut total, mut count) = (0u64, 0u64);
    for mask in 0u32..(1u32 << steps) {
        if mask.count_ones() != n as u32 {
            continue;
        }
        let mut height = 0i64;
        for bit in 0..steps {
            height += if mask >> bit & 1 == 1 { 1 } else { -1 };
            total += height.unsigned_abs();
        }
        count += 1;
    }
    Ok(total as f64 / count as f64)
}

/// Probability that the first of the `n - m + 1` balanced segments holds
/// exactly `m_prime` demand points when `n - m` removed supply points are
/// placed uniformly among the `m` matched pairs:
/// `C(n - m' - 1, n - m - 1) / C(n, n - m)`.
pub fn stars_bars_prob(m_prime: u64, m: u64, n: u64) -> Result<f64> {
    ensure!(
        n > m,
        Precondition,
        "stars-and-bars probability needs n > m (got m = {m}, n = {n})"
    );
    Ok(stars_bars_unchecked(m_prime, m, n))
}

#[inline]
pub(crate) fn stars_bars_unchecked(m_prime: u64, m: u64, n: u64) -> f64 {
    let num = ln_choose_or_neg_inf(n as i64 - m_prime as i64 - 1, (n - m) as i64 - 1);
    if num == f64::NEG_INFINITY {
        return 0.0;
    }
    (num - ln_choose(n, n - m)).exp()
}

/// Probability that the balanced segment starting at the `k`-th selected
/// removal holds `m_hat` demand points, given `a` demand points remain to its
/// right and `excess - k` removals are still to come.
///
/// This is the product of the chance that the walk returns to its starting
/// level after exactly `2 m_hat` steps and the ballot-theorem chance that it
/// never returns afterwards.
pub fn ballot_segment_prob(m_hat: u64, k: u64, a: u64, excess: u64) -> Result<f64> {
    ensure!(
        excess > k,
        Precondition,
        "ballot probability needs excess - k >= 1 (excess = {excess}, k = {k})"
    );
    ensure!(
        m_hat <= a,
        Precondition,
        "segment cannot hold more demand points than remain (m_hat = {m_hat}, a = {a})"
    );
    Ok(ballot_prob(m_hat, a, excess - k))
}

/// [`ballot_segment_prob`] with `remaining = excess - k >= 1` and
/// `m_hat <= a` assumed.
#[inline]
pub(crate) fn ballot_prob(m_hat: u64, a: u64, remaining: u64) -> f64 {
    debug_assert!(remaining >= 1 && m_hat <= a);
    let ln_return = ln_choose(a, m_hat) + ln_choose(a + remaining, m_hat)
        - ln_choose(2 * a + remaining, 2 * m_hat);
    let tail = remaining as f64 / (2 * a + remaining - 2 * m_hat) as f64;
    ln_return.exp() * tail
}

/// Expected number of returns to zero of a uniformly random balanced walk
/// with `2 m_hat` steps (the final return included).
pub fn expected_zero_returns(m_hat: u64) -> f64 {
    if m_hat == 0 {
        return 0.0;
    }
    let denom = ln_choose(2 * m_hat - 1, m_hat);
    (1..=m_hat)
        .map(|j| {
            (ln_choose(2 * j - 1, j) + ln_choose(2 * m_hat - 2 * j, m_hat - j) - denom).exp()
        })
        .sum()
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse Mills ratio `phi(z) / (1 - Phi(z))`.
///
/// Past `z = 30` both numerator and denominator approach underflow, so the
/// continued fraction for the Mills ratio is used instead.
pub fn upper_inverse_mills(z: f64) -> f64 {
    if z <= 30.0 {
        return normal_pdf(z) / normal_cdf(-z);
    }
    // (1 - Phi(z)) / phi(z) = 1 / (z + 1 / (z + 2 / (z + 3 / (z + ...))))
    let mut frac = z;
    for k in (1..=40).rev() {
        frac = z + k as f64 / frac;
    }
    frac
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn small_binomials() {
        assert_eq!(log_binomial(4, 2).value().round(), 6.0);
        assert!((log_binomial(4, 2).value() - 6.0).abs() < 1e-12);
        assert_eq!(log_binomial(0, 0).value(), 1.0);
        assert!(log_binomial(3, 4).is_zero());
        assert!(log_binomial(3, -1).is_zero());
        assert_eq!(log_binomial(3, -1).value(), 0.0);
    }

    #[test]
    fn exact_path_matches_integers() {
        // C(60, 30) = 118264581564861424
        let v = log_binomial(60, 30).value();
        assert!(rel(v, 118_264_581_564_861_424.0) < 1e-14);
    }

    #[test]
    fn log_binomial_400_200_matches_ratio_accumulation() {
        let oracle: f64 = (1..=200).map(|i| ((200 + i) as f64 / i as f64).ln()).sum();
        let got = log_binomial(400, 200).ln();
        assert!(rel(got, oracle) < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn table_continuity_across_capacity() {
        // The table and the Stirling tail must agree at the seam.
        let n = TABLE_CAPACITY;
        let from_table = ln_factorial(n);
        let x = n as f64;
        let stirling = x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + 1.0 / (12.0 * x);
        assert!((from_table - stirling).abs() < 1e-9);
        assert!(ln_factorial(n + 1) > from_table);
        assert!(((ln_factorial(n + 1) - from_table) - (x + 1.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn log_number_arithmetic() {
        let six = log_binomial(4, 2);
        let three = log_binomial(3, 1);
        assert!((six.div(three).value() - 2.0).abs() < 1e-14);
        assert!((six.mul(three).value() - 18.0).abs() < 1e-12);
        assert!(LogNumber::ZERO.mul(six).is_zero());
        assert!(LogNumber::ZERO.div(six).is_zero());
        assert_eq!(LogNumber::ONE.value(), 1.0);
    }

    #[test]
    fn harel_small_values() {
        assert_eq!(harel_area(0), 0.0);
        assert!((harel_area(1) - 1.0).abs() < 1e-14);
        assert!((harel_area(2) - 8.0 / 3.0).abs() < 1e-14);
        assert!((harel_area(3) - 4.8).abs() < 1e-13);
    }

    #[test]
    fn harel_branches_agree_at_switch() {
        let n = HAREL_STIRLING_SWITCH;
        for k in [n - 1, n, n + 1] {
            let e = harel_area_exact(k);
            let a = harel_area_asymptotic(k);
            assert!(rel(a, e) < 1e-3, "n = {k}: {a} vs {e}");
        }
    }

    #[test]
    fn walk_oracle_small_cases() {
        assert_eq!(walk_area_oracle(0).unwrap(), 0.0);
        assert!((walk_area_oracle(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((walk_area_oracle(2).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert!((walk_area_oracle(3).unwrap() - 4.8).abs() < 1e-12);
        assert!(walk_area_oracle(11).is_err());
    }

    #[test]
    fn harel_matches_enumeration() {
        for n in 0..=8 {
            let e = walk_area_oracle(n).unwrap();
            let h = harel_area(n);
            assert!((h - e).abs() <= 1e-12 * e.max(1.0), "n = {n}: {h} vs {e}");
        }
    }

    #[test]
    fn stars_bars_examples() {
        assert!((stars_bars_prob(0, 1, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((stars_bars_prob(1, 1, 2).unwrap() - 0.5).abs() < 1e-15);
        for (m, n) in [(3u64, 5u64), (10, 11), (7, 30)] {
            let last = stars_bars_prob(m, m, n).unwrap();
            let expect = 1.0 / log_binomial(n, (n - m) as i64).value();
            assert!(rel(last, expect) < 1e-12);
        }
        assert!(stars_bars_prob(0, 2, 2).is_err());
        assert_eq!(stars_bars_prob(5, 3, 7).unwrap(), 0.0);
    }

    #[test]
    fn ballot_examples() {
        assert!((ballot_segment_prob(0, 0, 1, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((ballot_segment_prob(1, 0, 1, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let total: f64 = (0..=5).map(|mh| ballot_segment_prob(mh, 2, 5, 5).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(ballot_segment_prob(0, 3, 2, 3).is_err());
        assert!(ballot_segment_prob(3, 0, 2, 3).is_err());
    }

    #[test]
    fn zero_return_examples() {
        assert_eq!(expected_zero_returns(0), 0.0);
        assert!((expected_zero_returns(1) - 1.0).abs() < 1e-15);
    }

    /// Mean number of returns to zero over all balanced walks of `2 m` steps.
    fn zero_return_enumeration(m: u32) -> f64 {
        let (mut total, mut count) = (0u64, 0u64);
        for mask in 0u32..(1u32 << (2 * m)) {
            if mask.count_ones() != m {
                continue;
            }
            let mut h = 0i32;
            for bit in 0..2 * m {
                h += if mask >> bit & 1 == 1 { 1 } else { -1 };
                if h == 0 {
                    total += 1;
                }
            }
            count += 1;
        }
        total as f64 / count as f64
    }

    #[test]
    fn zero_returns_match_enumeration() {
        for m in 1..=8u32 {
            let e = zero_return_enumeration(m);
            let got = expected_zero_returns(m as u64);
            assert!((got - e).abs() < 1e-12, "m = {m}: {got} vs {e}");
        }
    }

    #[test]
    fn normal_basics() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_pdf(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        assert!(normal_cdf(-40.0) >= 0.0);
    }

    #[test]
    fn cdf_matches_simpson_integration() {
        // Phi(x) = 1/2 - integral of phi over [x, 0] for x < 0.
        let x = -0.5 / 10f64.sqrt();
        let steps = 2000;
        let h = -x / steps as f64;
        let mut acc = normal_pdf(x) + normal_pdf(0.0);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * normal_pdf(x + i as f64 * h);
        }
        let oracle = 0.5 - acc * h / 3.0;
        assert!((normal_cdf(x) - oracle).abs() < 1e-10);
        assert!((normal_cdf(x) - 0.43717).abs() < 1e-4);
    }

    #[test]
    fn inverse_mills_is_continuous_at_branch() {
        let below = normal_pdf(29.999) / normal_cdf(-29.999);
        let above = upper_inverse_mills(30.001);
        assert!(rel(above, below) < 1e-4);
        // Large z: ratio ~ z + 1/z.
        assert!(rel(upper_inverse_mills(100.0), 100.0 + 0.01) < 1e-6);
        assert!(upper_inverse_mills(-40.0).abs() < 1e-300);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ballot_sums_to_one(a in 0u64..=50, r in 1u64..=20) {
                let total: f64 = (0..=a).map(|mh| ballot_prob(mh, a, r)).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }

            #[test]
            fn stars_bars_sums_to_one(m in 0u64..=100, extra in 1u64..=200) {
                let n = (m + extra).min(300);
                let total: f64 = (0..=m).map(|mp| stars_bars_prob(mp, m, n).unwrap()).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }

            #[test]
            fn zero_returns_bounded_and_monotone(m in 0u64..400) {
                let e = expected_zero_returns(m);
                prop_assert!(e >= 0.0 && e <= m as f64 + 1e-12);
                prop_assert!(expected_zero_returns(m + 1) >= e);
            }

            #[test]
            fn cdf_symmetry(x in -8.0f64..8.0) {
                prop_assert!((1.0 - normal_cdf(x) - normal_cdf(-x)).abs() < 1e-12);
            }

            #[test]
            fn binomial_ratio_small_args(n in 0u64..=2000, k in 0u64..=2000) {
                prop_assume!(k < n);
                // C(n, k+1) / C(n, k) = (n - k) / (k + 1)
                let r = log_binomial(n, k as i64 + 1).div(log_binomial(n, k as i64)).value();
                let expect = (n - k) as f64 / (k + 1) as f64;
                prop_assert!(((r - expect) / expect).abs() < 1e-12);
            }
        }
    }
}
