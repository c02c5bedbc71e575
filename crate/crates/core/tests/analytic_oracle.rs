//! Checks the log-space Poisson evaluation against an independent
//! arbitrary-precision oracle built on big rationals.

use d2dcache::analytic::{prob_fewer_than, steady_state_pmf};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// exp(n) for integer n as a big rational, summed far enough past the
/// dominant terms that the truncation error is below 10^-40 relative.
fn exp_big(n: u64) -> BigRational {
    let terms = (4 * n).max(n + 200);
    let n_big = BigInt::from(n);
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for j in 1..=terms {
        term = term * BigRational::from_integer(n_big.clone())
            / BigRational::from_integer(BigInt::from(j));
        sum += term.clone();
    }
    sum
}

/// Poisson pmf N^i e^{-N} / i! with integer N, exact up to the exp(n)
/// truncation.
fn pmf_oracle(n: u64, i: u64) -> f64 {
    let n_big = BigInt::from(n);
    let mut num = BigRational::one();
    for j in 1..=i {
        num = num * BigRational::from_integer(n_big.clone())
            / BigRational::from_integer(BigInt::from(j));
    }
    (num / exp_big(n)).to_f64().unwrap()
}

fn cdf_oracle(n: u64, m: u64) -> f64 {
    let n_big = BigInt::from(n);
    let mut term = BigRational::one();
    let mut sum = BigRational::zero();
    for i in 0..m {
        if i > 0 {
            term = term * BigRational::from_integer(n_big.clone())
                / BigRational::from_integer(BigInt::from(i));
        }
        sum += term.clone();
    }
    (sum / exp_big(n)).to_f64().unwrap()
}

#[test]
fn oracle_reproduces_frozen_values() {
    // values computed with the oracle above and frozen
    assert!((pmf_oracle(100, 100) - 0.03986099680914714).abs() < 1e-16);
    assert!((cdf_oracle(5, 4) - 0.2650259152973617).abs() < 1e-16);
    assert!((cdf_oracle(20, 2) - 4.3284226071209714e-8).abs() < 1e-22);
}

#[test]
fn pmf_matches_oracle() {
    assert!(
        (steady_state_pmf(100.0, 100).unwrap() - 0.03986099680914714).abs()
            / 0.03986099680914714
            < 1e-12
    );
    for (n, i) in [(1u64, 0u64), (1, 3), (5, 5), (20, 1), (20, 30), (100, 80), (170, 170)] {
        let got = steady_state_pmf(n as f64, i).unwrap();
        let want = pmf_oracle(n, i);
        assert!(
            (got - want).abs() <= 1e-12 * want,
            "pmf({n}, {i}) = {got}, oracle = {want}"
        );
    }
}

#[test]
fn partial_cdf_matches_oracle() {
    assert!(
        (prob_fewer_than(5.0, 4).unwrap() - 0.2650259152973617).abs() / 0.2650259152973617
            < 1e-12
    );
    for (n, m) in [(1u64, 1u64), (5, 4), (20, 2), (50, 40), (100, 90)] {
        let got = prob_fewer_than(n as f64, m).unwrap();
        let want = cdf_oracle(n, m);
        assert!(
            (got - want).abs() <= 1e-12 * want,
            "P(X < {m} | N = {n}) = {got}, oracle = {want}"
        );
    }
}
