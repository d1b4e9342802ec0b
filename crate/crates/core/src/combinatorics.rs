//! Small counting and parity helpers shared by the recursions and samplers.

/// `n choose k` as a float (exact for the sizes used here, n <= ~1000).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `(a + b + c)! / (a! b! c!)`.
pub fn multinomial(a: usize, b: usize, c: usize) -> f64 {
    binomial(a + b + c, a) * binomial(b + c, b)
}

/// Probability of exactly `k` successes out of `n` with success probability `p`.
pub fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// `1 - (1 - p)^n`, accurate for tiny `p`.
pub fn at_least_one(p: f64, n: usize) -> f64 {
    if p >= 1.0 {
        return if n > 0 { 1.0 } else { 0.0 };
    }
    -f64::exp_m1(n as f64 * f64::ln_1p(-p))
}

/// Probability that an odd number of independent flips occur, where each
/// `(p, count)` term contributes `count` flips of probability `p`.
///
/// Uses `(1 - prod (1 - 2p)^count) / 2`, evaluated in the log domain while
/// every factor is positive so that `1e-5`-scale rates keep full precision.
pub fn odd_parity(terms: &[(f64, usize)]) -> f64 {
    let mut log_sum = 0.0;
    let mut positive = true;
    for &(p, count) in terms {
        if count == 0 {
            continue;
        }
        let base = 1.0 - 2.0 * p;
        if base <= 0.0 {
            positive = false;
            break;
        }
        log_sum += count as f64 * f64::ln_1p(-2.0 * p);
    }
    if positive {
        return -f64::exp_m1(log_sum) / 2.0;
    }
    let prod: f64 = terms
        .iter()
        .map(|&(p, count)| (1.0 - 2.0 * p).powi(count as i32))
        .product();
    (1.0 - prod) / 2.0
}

/// Error of a majority vote over `m` independent results, each wrong with
/// probability `e`. Even votes drop one result at random first, so they cost
/// the same as `m - 1`. An empty vote is defined as error-free.
pub fn vote_error(m: usize, e: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let m = if m % 2 == 0 { m - 1 } else { m };
    ((m + 1) / 2..=m).map(|i| binomial_pmf(m, i, e)).sum()
}

/// `num / den`, defined as zero when the conditioning weight vanishes.
pub(crate) fn cond(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert!((binomial(80, 40) / 1.075_072_087_333_362e23 - 1.0).abs() < 1e-12);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(multinomial(1, 1, 0), 2.0);
        assert_eq!(multinomial(2, 2, 2), 90.0);
    }

    #[test]
    fn vote_examples() {
        assert_abs_diff_eq!(vote_error(3, 0.1), 0.028, epsilon = 1e-15);
        for e in [0.0, 0.01, 0.3] {
            assert_eq!(vote_error(2, e), vote_error(1, e));
            assert_abs_diff_eq!(vote_error(1, e), e, epsilon = 1e-15);
        }
    }

    #[test]
    fn parity_small_rates_keep_precision() {
        let p = 1e-9;
        assert_abs_diff_eq!(odd_parity(&[(p, 2)]), 2.0 * p * (1.0 - p), epsilon = 1e-22);
        assert_abs_diff_eq!(odd_parity(&[(0.5, 1), (0.1, 3)]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(odd_parity(&[(0.9, 1)]), 0.9, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn parity_matches_direct_product(p in 0.0..1.0f64, q in 0.0..1.0f64, a in 0usize..6, b in 0usize..6) {
            let direct = (1.0 - (1.0 - 2.0 * p).powi(a as i32) * (1.0 - 2.0 * q).powi(b as i32)) / 2.0;
            prop_assert!((odd_parity(&[(p, a), (q, b)]) - direct).abs() < 1e-12);
        }

        #[test]
        fn pmf_normalizes(n in 0usize..60, p in 0.0..=1.0f64) {
            let total: f64 = (0..=n).map(|k| binomial_pmf(n, k, p)).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn at_least_one_matches_definition(p in 0.0..=1.0f64, n in 0usize..100) {
            prop_assert!((at_least_one(p, n) - (1.0 - (1.0 - p).powi(n as i32))).abs() < 1e-12);
        }
    }
}
