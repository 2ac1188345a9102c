//! Exact divisor sums and exact counting oracles.

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{exp_series, CoefficientSeries};

/// Default memory guard for the counting tables: 1 GiB.
pub const DEFAULT_BUDGET: u64 = 1 << 30;

/// Divisors of `m` in increasing order, by trial division up to the square root.
pub fn divisors(m: u64) -> Vec<u64> {
    assert!(m >= 1, "divisors of zero");
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= m {
        if m % d == 0 {
            small.push(d);
            if d * d != m {
                large.push(m / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

pub fn two_adic_valuation(m: u64) -> u32 {
    assert!(m >= 1);
    m.trailing_zeros()
}

fn pow_u(j: u64, c: u32) -> Integer {
    Integer::from(j).pow(c)
}

/// σ_c(m) = Σ_{j | m} j^c.
pub fn sigma(m: u64, c: u32) -> Integer {
    divisors(m).into_iter().map(|j| pow_u(j, c)).sum()
}

/// Sum of j^c over the odd divisors j of m.
pub fn sigma_odd(m: u64, c: u32) -> Integer {
    divisors(m)
        .into_iter()
        .filter(|j| j % 2 == 1)
        .map(|j| pow_u(j, c))
        .sum()
}

/// The correction factor ω(m) relating the alternating divisor sum to the odd one.
///
/// For c ≥ 1 this is ((2^c − 2)/(2^c − 1))·2^{χc} + 1/(2^c − 1); at c = 0 the
/// same expression degenerates and its limit 1 − χ is used.
pub fn omega(m: u64, c: u32) -> Rational {
    let chi = two_adic_valuation(m);
    if c == 0 {
        return Rational::from(1 - i64::from(chi));
    }
    let two_c = Integer::from(1) << c;
    let denom = Integer::from(&two_c - 1u32);
    let lead = Rational::from((Integer::from(&two_c - 2u32), denom.clone()));
    let scale = Integer::from(1) << (chi * c);
    lead * Rational::from(scale) + Rational::from((Integer::from(1), denom))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorProfile {
    pub m: u64,
    pub c: u32,
    #[serde(serialize_with = "crate::report::ser_display")]
    pub sigma: Integer,
    #[serde(serialize_with = "crate::report::ser_display")]
    pub sigma_odd: Integer,
    pub chi: u32,
    #[serde(serialize_with = "crate::report::ser_display")]
    pub omega: Rational,
}

pub fn divisor_profile(m: u64, c: u32) -> DivisorProfile {
    DivisorProfile {
        m,
        c,
        sigma: sigma(m, c),
        sigma_odd: sigma_odd(m, c),
        chi: two_adic_valuation(m),
        omega: omega(m, c),
    }
}

/// Σ_{jk = m} j^c (−1)^{k+1}, by direct enumeration of factor pairs.
pub fn alternating_divisor_sum(m: u64, c: u32) -> Integer {
    let mut acc = Integer::new();
    for j in divisors(m) {
        let k = m / j;
        if k % 2 == 1 {
            acc += pow_u(j, c);
        } else {
            acc -= pow_u(j, c);
        }
    }
    acc
}

/// The two closed forms of the alternating sum: σ_c^odd(m)·ω(m) and σ_c(m) − 2σ_c(m/2).
pub fn alternating_closed_forms(m: u64, c: u32) -> (Rational, Integer) {
    let via_omega = Rational::from(sigma_odd(m, c)) * omega(m, c);
    let half = if m % 2 == 0 { sigma(m / 2, c) } else { Integer::new() };
    (via_omega, sigma(m, c) - half * 2u32)
}

/// Divisor power sums σ_c(n) (or the odd-divisor variant) for every n in `start..end`.
///
/// Segmented sieve: each d contributes d^c to its multiples inside the range.
pub fn sigma_range(start: u64, end: u64, c: u32, odd_only: bool) -> Vec<Integer> {
    let start = start.max(1);
    if end <= start {
        return Vec::new();
    }
    let len = (end - start) as usize;
    let narrow = (c as f64 + 1.0) * (end as f64).log2() < 120.0;
    if narrow {
        let mut acc = vec![0u128; len];
        for d in 1..end {
            if odd_only && d % 2 == 0 {
                continue;
            }
            let w = (d as u128).pow(c);
            let mut k = start.div_ceil(d) * d;
            while k < end {
                acc[(k - start) as usize] += w;
                k += d;
            }
        }
        acc.into_iter().map(Integer::from).collect()
    } else {
        let mut acc = vec![Integer::new(); len];
        for d in 1..end {
            if odd_only && d % 2 == 0 {
                continue;
            }
            let w = pow_u(d, c);
            let mut k = start.div_ceil(d) * d;
            while k < end {
                acc[(k - start) as usize] += &w;
                k += d;
            }
        }
        acc
    }
}

/// Σ_{j² | n} j² for every n in `start..end`.
pub fn square_divisor_sum_range(start: u64, end: u64) -> Vec<Integer> {
    let start = start.max(1);
    if end <= start {
        return Vec::new();
    }
    let mut acc = vec![0u128; (end - start) as usize];
    let mut j = 1u64;
    while j * j < end {
        let sq = j * j;
        let mut k = start.div_ceil(sq) * sq;
        while k < end {
            acc[(k - start) as usize] += sq as u128;
            k += sq;
        }
        j += 1;
    }
    acc.into_iter().map(Integer::from).collect()
}

// ---------------------------------------------------------------------------
// Counting oracles
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum CountKind {
    Partitions,
    DistinctParts,
    PlanePartitions,
    Bell,
    /// n!·a_n for f = exp(g), g an exponential generating function.
    Assembly(CoefficientSeries),
}

impl CountKind {
    pub fn parse(name: &str) -> Result<CountKind> {
        match name {
            "partitions" => Ok(CountKind::Partitions),
            "distinct_parts" => Ok(CountKind::DistinctParts),
            "plane_partitions" => Ok(CountKind::PlanePartitions),
            "bell" => Ok(CountKind::Bell),
            other => Err(Error::Usage(format!(
                "unknown count kind `{other}` (expected partitions, distinct_parts, plane_partitions, bell)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CountKind::Partitions => "partitions",
            CountKind::DistinctParts => "distinct_parts",
            CountKind::PlanePartitions => "plane_partitions",
            CountKind::Bell => "bell",
            CountKind::Assembly(_) => "assembly",
        }
    }

    fn estimated_bits(&self, n: u64) -> f64 {
        let x = n as f64;
        let nats = match self {
            CountKind::Partitions => std::f64::consts::PI * (2.0 * x / 3.0).sqrt(),
            CountKind::DistinctParts => std::f64::consts::PI * (x / 3.0).sqrt(),
            CountKind::PlanePartitions => 2.01 * x.powf(2.0 / 3.0),
            CountKind::Bell | CountKind::Assembly(_) => x * (x + 1.0).ln(),
        };
        nats / std::f64::consts::LN_2 + 64.0
    }

    /// Rough peak memory of the table needed to produce the n-th count.
    pub fn estimated_bytes(&self, n: u64) -> u64 {
        let per = self.estimated_bits(n) / 8.0 + 32.0;
        let rows = match self {
            CountKind::Bell => 2.0 * (n as f64 + 1.0),
            CountKind::Assembly(_) => 2.0 * (n as f64 + 1.0),
            _ => n as f64 + 1.0,
        };
        (per * rows).min(u64::MAX as f64) as u64
    }
}

/// Exact count of the objects of size `n`, refusing tables larger than `budget` bytes.
pub fn exact_count(kind: &CountKind, n: u64, budget: u64) -> Result<Integer> {
    let needed = kind.estimated_bytes(n);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let n_us = n as usize;
    Ok(match kind {
        CountKind::Partitions => partition_counts(n_us).pop().unwrap(),
        CountKind::DistinctParts => distinct_part_counts(n_us).pop().unwrap(),
        CountKind::PlanePartitions => plane_partition_counts(n_us).pop().unwrap(),
        CountKind::Bell => bell_numbers(n_us).pop().unwrap(),
        CountKind::Assembly(g) => {
            let g = if g.truncation_order() < n_us { g.extend(n_us)? } else { g.clone() };
            let f = exp_series(&g)?;
            let a = f.exact(n_us).expect("exp_series output is exact");
            let scaled = Rational::from(a * Integer::from(Integer::factorial(n as u32)));
            if *scaled.denom() != 1 {
                return Err(Error::NotIntegral(scaled.to_string()));
            }
            scaled.into_numer_denom().0
        }
    })
}

/// p(0..=n) by dynamic programming over the allowed part sizes.
pub fn partition_counts(n: usize) -> Vec<Integer> {
    let mut p = vec![Integer::new(); n + 1];
    p[0] = Integer::from(1);
    for part in 1..=n {
        for j in part..=n {
            let (lo, hi) = p.split_at_mut(j);
            hi[0] += &lo[j - part];
        }
    }
    p
}

/// Partitions into distinct parts, q(0..=n), with 0/1 multiplicity per part.
pub fn distinct_part_counts(n: usize) -> Vec<Integer> {
    let mut q = vec![Integer::new(); n + 1];
    q[0] = Integer::from(1);
    for part in 1..=n {
        for j in (part..=n).rev() {
            let (lo, hi) = q.split_at_mut(j);
            hi[0] += &lo[j - part];
        }
    }
    q
}

/// Plane partitions: Π_j (1 − z^j)^{−j}, one unbounded-part pass per factor.
pub fn plane_partition_counts(n: usize) -> Vec<Integer> {
    let mut pl = vec![Integer::new(); n + 1];
    pl[0] = Integer::from(1);
    for part in 1..=n {
        for _ in 0..part {
            for j in part..=n {
                let (lo, hi) = pl.split_at_mut(j);
                hi[0] += &lo[j - part];
            }
        }
    }
    pl
}

/// Bell numbers B(0..=n) from the Bell triangle.
pub fn bell_numbers(n: usize) -> Vec<Integer> {
    let mut out = vec![Integer::from(1)];
    let mut row = vec![Integer::from(1)];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().unwrap().clone());
        for x in &row {
            let v = Integer::from(next.last().unwrap() + x);
            next.push(v);
        }
        out.push(next[0].clone());
        row = next;
    }
    out.truncate(n + 1);
    out
}

/// p(0..=n) from Euler's pentagonal recurrence; much faster than the table for large n.
pub fn partition_numbers_pentagonal(n: usize) -> Vec<Integer> {
    let mut p: Vec<Integer> = Vec::with_capacity(n + 1);
    p.push(Integer::from(1));
    for m in 1..=n {
        let mut acc = Integer::new();
        let mut k = 1usize;
        loop {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > m {
                break;
            }
            let plus = k % 2 == 1;
            let g2 = k * (3 * k + 1) / 2;
            if plus {
                acc += &p[m - g1];
            } else {
                acc -= &p[m - g1];
            }
            if g2 <= m {
                if plus {
                    acc += &p[m - g2];
                } else {
                    acc -= &p[m - g2];
                }
            }
            k += 1;
        }
        p.push(acc);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }

    // Brute-force partition count by recursive enumeration of nonincreasing parts.
    fn brute_partitions(n: u64, max: u64) -> u64 {
        if n == 0 {
            return 1;
        }
        (1..=max.min(n)).map(|p| brute_partitions(n - p, p)).sum()
    }

    fn brute_distinct(n: u64, max: u64) -> u64 {
        if n == 0 {
            return 1;
        }
        (1..=max.min(n)).map(|p| brute_distinct(n - p, p - 1)).sum()
    }

    #[test]
    fn profile_of_six() {
        let p = divisor_profile(6, 1);
        assert_eq!(p.sigma, 12);
        assert_eq!(p.sigma_odd, 4);
        assert_eq!(p.chi, 1);
    }

    #[test]
    fn omega_of_twelve_with_c_one() {
        let p = divisor_profile(12, 1);
        assert_eq!(p.chi, 2);
        assert_eq!(p.omega, 1);
    }

    #[test]
    fn odd_m_has_unit_omega() {
        for m in (1..200).step_by(2) {
            for c in 0..4 {
                assert_eq!(omega(m, c), 1);
                assert_eq!(two_adic_valuation(m), 0);
                assert_eq!(alternating_divisor_sum(m, c), sigma(m, c));
            }
        }
    }

    #[test]
    fn alternating_sum_of_twelve() {
        assert_eq!(alternating_divisor_sum(12, 1), 4);
        let (a, b) = alternating_closed_forms(12, 1);
        assert_eq!(a, 4);
        assert_eq!(b, 4);
    }

    #[test]
    fn powers_of_two_give_omega() {
        for r in 0..12 {
            let m = 1u64 << r;
            for c in 0..4 {
                assert_eq!(Rational::from(alternating_divisor_sum(m, c)), omega(m, c), "m={m} c={c}");
            }
        }
    }

    #[test]
    fn sieve_matches_enumeration() {
        for c in 0..4 {
            let s = sigma_range(90, 400, c, false);
            let o = sigma_range(90, 400, c, true);
            for (i, m) in (90..400).enumerate() {
                assert_eq!(s[i], sigma(m, c));
                assert_eq!(o[i], sigma_odd(m, c));
            }
        }
        let wide = sigma_range(1000, 1100, 12, false);
        assert_eq!(wide[7], sigma(1007, 12));
    }

    #[test]
    fn square_sieve_matches_enumeration() {
        let s = square_divisor_sum_range(1, 300);
        for m in 1..300u64 {
            let direct: u64 = divisors(m).into_iter().filter(|j| m % (j * j) == 0).map(|j| j * j).sum();
            assert_eq!(s[(m - 1) as usize], direct);
        }
    }

    #[test]
    fn partition_oracles_small() {
        let p = partition_counts(30);
        let q = distinct_part_counts(30);
        for n in 0..=30u64 {
            assert_eq!(p[n as usize], brute_partitions(n, n));
            assert_eq!(q[n as usize], brute_distinct(n, n));
        }
        assert_eq!(exact_count(&CountKind::Partitions, 10, DEFAULT_BUDGET).unwrap(), 42);
        assert_eq!(exact_count(&CountKind::DistinctParts, 10, DEFAULT_BUDGET).unwrap(), 10);
    }

    #[test]
    fn pentagonal_matches_table() {
        assert_eq!(partition_numbers_pentagonal(400), partition_counts(400));
    }

    #[test]
    fn plane_partitions_prefix() {
        let pl = plane_partition_counts(10);
        let known = [1, 1, 3, 6, 13, 24, 48, 86, 160, 282, 500];
        for (a, b) in pl.iter().zip(known) {
            assert_eq!(*a, b);
        }
    }

    // Restricted growth strings enumerate set partitions one-to-one.
    fn brute_bell(n: usize) -> u64 {
        fn go(i: usize, n: usize, max: usize) -> u64 {
            if i == n {
                return 1;
            }
            (0..=max + 1).map(|v| go(i + 1, n, max.max(v))).sum()
        }
        if n == 0 { 1 } else { go(1, n, 0) }
    }

    #[test]
    fn bell_triangle_matches_enumeration() {
        let b = bell_numbers(8);
        for n in 0..=8 {
            assert_eq!(b[n], brute_bell(n), "n={n}");
        }
        assert_eq!(exact_count(&CountKind::Bell, 5, DEFAULT_BUDGET).unwrap(), 52);
    }

    #[test]
    fn budget_guard() {
        let err = exact_count(&CountKind::Partitions, 1_000_000, 1 << 20).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn sigma_one_over_n_at_least_one() {
        for n in 1..2000u64 {
            assert!(sigma(n, 1) >= n);
        }
    }

    proptest! {
        #[test]
        fn sigma_is_multiplicative(a in 1u64..500, b in 1u64..500, c in 0u32..4) {
            prop_assume!(gcd(a, b) == 1);
            prop_assert_eq!(sigma(a * b, c), sigma(a, c) * sigma(b, c));
        }

        #[test]
        fn profile_ordering(m in 1u64..100_000, c in 0u32..5) {
            let p = divisor_profile(m, c);
            prop_assert!(p.sigma >= p.sigma_odd);
            prop_assert!(p.sigma_odd >= 1);
        }

        #[test]
        fn closed_forms_agree(m in 1u64..20_000, c in 0u32..6) {
            let direct = alternating_divisor_sum(m, c);
            let (a, b) = alternating_closed_forms(m, c);
            prop_assert_eq!(Rational::from(direct.clone()), a);
            prop_assert_eq!(direct, b);
        }
    }
}
