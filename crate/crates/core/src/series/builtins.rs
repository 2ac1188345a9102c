//! Catalog of generating functions of set constructions.

use std::sync::Arc;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use super::{CoeffSource, CoefficientSeries, Params, Provenance, Radius};
use crate::error::{Error, Result};
use crate::number_theory::{partition_numbers_pentagonal, sigma_range, square_divisor_sum_range};

#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    SetsOfSets,
    PointedSets,
    Lists,
    ListsGamma(Rational),
    Cycles,
    Functions,
    RootedTrees,
    Trees,
    PowerAlpha(Rational),
    Partitions,
    DistinctParts,
    PlanePartitions,
    ColoredPartitions(u32),
    SquarePartitions,
    BinaryPartitions,
    Monomial(usize),
    Polynomial(Vec<Rational>),
}

pub const NAMES: &[&str] = &[
    "sets_of_sets",
    "pointed_sets",
    "lists",
    "lists_gamma",
    "cycles",
    "functions",
    "rooted_trees",
    "trees",
    "power_alpha",
    "partitions",
    "distinct_parts",
    "plane_partitions",
    "colored_partitions",
    "square_partitions",
    "binary_partitions",
    "monomial",
    "polynomial",
];

fn param<'a>(params: &'a Params, key: &str) -> Result<&'a str> {
    params
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::InvalidParameter { name: key.into(), reason: "missing".into() })
}

fn bad(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name: name.into(), reason: reason.into() }
}

impl Builtin {
    pub fn parse(name: &str, params: &Params) -> Result<Builtin> {
        let rational = |key: &str| -> Result<Rational> {
            super::io::parse_rational(param(params, key)?).map_err(|e| bad(key, e.to_string()))
        };
        let b = match name {
            "sets_of_sets" => Builtin::SetsOfSets,
            "pointed_sets" => Builtin::PointedSets,
            "lists" => Builtin::Lists,
            "lists_gamma" => {
                let g = rational("gamma")?;
                if g <= 0 {
                    return Err(bad("gamma", "must be positive"));
                }
                Builtin::ListsGamma(g)
            }
            "cycles" => Builtin::Cycles,
            "functions" => Builtin::Functions,
            "rooted_trees" => Builtin::RootedTrees,
            "trees" => Builtin::Trees,
            "power_alpha" => Builtin::PowerAlpha(rational("alpha")?),
            "partitions" => Builtin::Partitions,
            "distinct_parts" => Builtin::DistinctParts,
            "plane_partitions" => Builtin::PlanePartitions,
            "colored_partitions" => {
                let c: u32 = param(params, "c")?.parse().map_err(|_| bad("c", "expected a nonnegative integer"))?;
                if c > 16 {
                    return Err(bad("c", "at most 16"));
                }
                Builtin::ColoredPartitions(c)
            }
            "square_partitions" => Builtin::SquarePartitions,
            "binary_partitions" => Builtin::BinaryPartitions,
            "monomial" => {
                let k: usize = param(params, "k")?.parse().map_err(|_| bad("k", "expected a positive integer"))?;
                if k == 0 {
                    return Err(bad("k", "z^0 is constant"));
                }
                Builtin::Monomial(k)
            }
            "polynomial" => {
                let list = param(params, "coeffs")?
                    .split(';')
                    .map(|s| super::io::parse_rational(s).map_err(|e| bad("coeffs", e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                if list.iter().any(|c| *c < 0) {
                    return Err(bad("coeffs", "coefficients must be nonnegative"));
                }
                if list.iter().skip(1).all(|c| *c == 0) {
                    return Err(Error::ConstantSeries);
                }
                Builtin::Polynomial(list)
            }
            other => return Err(Error::UnknownBuiltin(other.into())),
        };
        Ok(b)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::SetsOfSets => "sets_of_sets",
            Builtin::PointedSets => "pointed_sets",
            Builtin::Lists => "lists",
            Builtin::ListsGamma(_) => "lists_gamma",
            Builtin::Cycles => "cycles",
            Builtin::Functions => "functions",
            Builtin::RootedTrees => "rooted_trees",
            Builtin::Trees => "trees",
            Builtin::PowerAlpha(_) => "power_alpha",
            Builtin::Partitions => "partitions",
            Builtin::DistinctParts => "distinct_parts",
            Builtin::PlanePartitions => "plane_partitions",
            Builtin::ColoredPartitions(_) => "colored_partitions",
            Builtin::SquarePartitions => "square_partitions",
            Builtin::BinaryPartitions => "binary_partitions",
            Builtin::Monomial(_) => "monomial",
            Builtin::Polynomial(_) => "polynomial",
        }
    }

    pub fn params(&self) -> Params {
        let mut p = Params::new();
        match self {
            Builtin::ListsGamma(g) => {
                p.insert("gamma".into(), g.to_string());
            }
            Builtin::PowerAlpha(a) => {
                p.insert("alpha".into(), a.to_string());
            }
            Builtin::ColoredPartitions(c) => {
                p.insert("c".into(), c.to_string());
            }
            Builtin::Monomial(k) => {
                p.insert("k".into(), k.to_string());
            }
            Builtin::Polynomial(list) => {
                let s: Vec<String> = list.iter().map(|c| c.to_string()).collect();
                p.insert("coeffs".into(), s.join(";"));
            }
            _ => {}
        }
        p
    }

    pub fn radius(&self) -> Radius {
        match self {
            Builtin::SetsOfSets | Builtin::PointedSets | Builtin::Monomial(_) | Builtin::Polynomial(_) => {
                Radius::Infinite
            }
            Builtin::Functions | Builtin::RootedTrees | Builtin::Trees => Radius::inv_e(),
            _ => Radius::one(),
        }
    }

    /// The δ in b_n = n^{n−δ}/n! for the mapping/tree family.
    fn tree_shift(&self) -> Option<i64> {
        match self {
            Builtin::Functions => Some(0),
            Builtin::RootedTrees => Some(1),
            Builtin::Trees => Some(2),
            _ => None,
        }
    }

    fn divisor_family(&self, start: u64, end: u64) -> Option<Vec<Integer>> {
        let v = match self {
            Builtin::Partitions => sigma_range(start, end, 1, false),
            Builtin::DistinctParts => sigma_range(start, end, 1, true),
            Builtin::PlanePartitions => sigma_range(start, end, 2, false),
            Builtin::ColoredPartitions(c) => sigma_range(start, end, c + 1, false),
            Builtin::SquarePartitions => square_divisor_sum_range(start, end),
            Builtin::BinaryPartitions => (start..end)
                .map(|m| (Integer::from(1) << (m.trailing_zeros() + 1)) - 1u32)
                .collect(),
            _ => return None,
        };
        Some(v)
    }
}

/// Number of positive-index terms, with index 0 handled by the callers.
fn split_zero(start: usize) -> (bool, usize) {
    (start == 0, start.max(1))
}

impl CoeffSource for Builtin {
    fn exact_range(&self, start: usize, end: usize) -> Option<Vec<Rational>> {
        if end <= start {
            return Some(Vec::new());
        }
        let (has_zero, s) = split_zero(start);
        let mut out = Vec::with_capacity(end - start);
        if has_zero {
            out.push(match self {
                Builtin::Polynomial(list) => list[0].clone(),
                _ => Rational::new(),
            });
        }
        if s >= end {
            return Some(out);
        }
        match self {
            Builtin::SetsOfSets | Builtin::PointedSets => {
                let shift = usize::from(*self == Builtin::PointedSets);
                let mut fact = Integer::from(Integer::factorial((s - shift) as u32));
                for n in s..end {
                    if n > s {
                        fact *= (n - shift) as u64;
                    }
                    out.push(Rational::from((Integer::from(1), fact.clone())));
                }
            }
            Builtin::Lists => out.extend((s..end).map(|_| Rational::from(1))),
            Builtin::ListsGamma(g) => {
                let mut b = Rational::from(1);
                for n in 1..end {
                    if n >= s {
                        out.push(b.clone());
                    }
                    b = b * (g.clone() + (n as u64 - 1)) / n as u64;
                }
            }
            Builtin::Cycles => out.extend((s..end).map(|n| Rational::from((1, n as u64)))),
            Builtin::Functions | Builtin::RootedTrees | Builtin::Trees => {
                let delta = self.tree_shift().unwrap();
                let mut fact = Integer::from(Integer::factorial(s as u32));
                for n in s..end {
                    if n > s {
                        fact *= n as u64;
                    }
                    let e = n as i64 - delta;
                    let base = Integer::from(n as u64);
                    let q = if e >= 0 {
                        Rational::from((base.pow(e as u32), fact.clone()))
                    } else {
                        Rational::from((Integer::from(1), base.pow((-e) as u32) * &fact))
                    };
                    out.push(q);
                }
            }
            Builtin::PowerAlpha(alpha) => {
                if *alpha.denom() != 1 {
                    return None;
                }
                let k = alpha.numer().to_i32()?;
                out.extend((s..end).map(|n| {
                    let base = Integer::from(n as u64);
                    if k >= 0 {
                        Rational::from(base.pow(k as u32))
                    } else {
                        Rational::from((Integer::from(1), base.pow((-k) as u32)))
                    }
                }));
            }
            Builtin::Monomial(k) => {
                out.extend((s..end).map(|n| if n == *k { Rational::from(1) } else { Rational::new() }))
            }
            Builtin::Polynomial(list) => out.extend((s..end).map(|n| list.get(n).cloned().unwrap_or_default())),
            _ => {
                let sums = self.divisor_family(s as u64, end as u64).unwrap();
                out.extend(sums.into_iter().zip(s..end).map(|(v, n)| Rational::from((v, n as u64))));
            }
        }
        Some(out)
    }

    fn float_range(&self, start: usize, end: usize, prec: u32) -> Vec<Float> {
        if end <= start {
            return Vec::new();
        }
        let (has_zero, s) = split_zero(start);
        let work = prec + 64;
        let mut out = Vec::with_capacity(end - start);
        if has_zero {
            out.push(match self {
                Builtin::Polynomial(list) => Float::with_val(prec, &list[0]),
                _ => Float::new(prec),
            });
        }
        if s >= end {
            return out;
        }
        let round = |x: &Float| Float::with_val(prec, x);
        match self {
            Builtin::SetsOfSets | Builtin::PointedSets => {
                let shift = usize::from(*self == Builtin::PointedSets);
                let mut b = Float::with_val(work, Float::factorial((s - shift) as u32)).recip();
                for n in s..end {
                    if n > s {
                        b /= (n - shift) as u64;
                    }
                    out.push(round(&b));
                }
            }
            Builtin::ListsGamma(g) => {
                let gf = Float::with_val(work, g);
                // (γ)_{n−1}/(n−1)! = Γ(γ+n−1)/(Γ(γ)Γ(n))
                let mut b = {
                    let a = Float::with_val(work, &gf + (s as u64 - 1)).ln_gamma();
                    let c = Float::with_val(work, gf.ln_gamma_ref());
                    let d = Float::with_val(work, s as u64).ln_gamma();
                    Float::with_val(work, a - c - d).exp()
                };
                for n in s..end {
                    if n > s {
                        let m = n - 1;
                        b *= Float::with_val(work, &gf + (m as u64 - 1));
                        b /= m as u64;
                    }
                    out.push(round(&b));
                }
            }
            Builtin::Functions | Builtin::RootedTrees | Builtin::Trees => {
                let delta = self.tree_shift().unwrap();
                let mut b = {
                    let n = Float::with_val(work, s as u64);
                    let lg = Float::with_val(work, s as u64 + 1).ln_gamma();
                    let l = Float::with_val(work, n.ln_ref()) * (s as i64 - delta) - lg;
                    l.exp()
                };
                for n in s..end {
                    if n > s {
                        let m = (n - 1) as u64;
                        let base = Float::with_val(work, Float::with_val(work, m).recip() + 1u32);
                        b *= base.pow(m as i64 - delta);
                    }
                    out.push(round(&b));
                }
            }
            Builtin::PowerAlpha(alpha) if *alpha.denom() != 1 => {
                let a = Float::with_val(work, alpha);
                for n in s..end {
                    let x = Float::with_val(work, n as u64).pow(&a);
                    out.push(round(&x));
                }
            }
            _ => {
                let exact = self.exact_range(s, end).unwrap();
                out.extend(exact.iter().map(|q| Float::with_val(prec, q)));
            }
        }
        out
    }

    fn degree(&self) -> Option<usize> {
        match self {
            Builtin::Monomial(k) => Some(*k),
            Builtin::Polynomial(list) => list.iter().rposition(|c| *c != 0),
            _ => None,
        }
    }

    fn exp_coefficients(&self, n: usize) -> Option<Vec<Rational>> {
        match self {
            Builtin::Partitions => Some(partition_numbers_pentagonal(n).into_iter().map(Rational::from).collect()),
            _ => None,
        }
    }
}

/// Builtin series `name` with coefficients materialised through index `n`.
pub fn builtin(name: &str, params: &Params, n: usize) -> Result<CoefficientSeries> {
    let b = Builtin::parse(name, params)?;
    let provenance = Provenance::Builtin { name: b.name().into(), params: b.params() };
    let radius = b.radius();
    CoefficientSeries::from_source(Arc::new(b), n, radius, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Coeff;

    fn p(kv: &[(&str, &str)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn catalog_examples() {
        let g = builtin("partitions", &Params::new(), 6).unwrap();
        assert_eq!(g.exact(6).unwrap(), 2);
        let g = builtin("sets_of_sets", &Params::new(), 3).unwrap();
        assert_eq!(g.exact(3).unwrap(), Rational::from((1, 6)));
        let g = builtin("functions", &Params::new(), 30).unwrap();
        for n in 1..=30u32 {
            let scaled = g.exact(n as usize).unwrap() * Integer::from(Integer::factorial(n))
                / Integer::from(n).pow(n);
            assert_eq!(scaled, 1);
        }
    }

    #[test]
    fn radii_follow_family() {
        assert!(!builtin("sets_of_sets", &Params::new(), 4).unwrap().radius().is_finite());
        assert_eq!(builtin("partitions", &Params::new(), 4).unwrap().radius().to_f64(), 1.0);
        let r = builtin("trees", &Params::new(), 4).unwrap().radius().to_f64();
        assert!((r - (-1f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(builtin("nope", &Params::new(), 4), Err(Error::UnknownBuiltin(_))));
        assert!(matches!(
            builtin("lists_gamma", &p(&[("gamma", "0")]), 4),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(builtin("lists_gamma", &Params::new(), 4), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn lists_gamma_two_is_n() {
        let g = builtin("lists_gamma", &p(&[("gamma", "2")]), 12).unwrap();
        for n in 1..=12 {
            assert_eq!(g.exact(n).unwrap(), n as u64);
        }
    }

    #[test]
    fn sparse_families() {
        let sq = builtin("square_partitions", &Params::new(), 20).unwrap();
        assert_eq!(sq.exact(4).unwrap(), Rational::from((5, 4)));
        assert_eq!(sq.exact(3).unwrap(), Rational::from((1, 3)));
        let bin = builtin("binary_partitions", &Params::new(), 20).unwrap();
        assert_eq!(bin.exact(12).unwrap(), Rational::from((7, 12)));
        assert_eq!(bin.exact(7).unwrap(), Rational::from((1, 7)));
    }

    #[test]
    fn inexact_power() {
        let g = builtin("power_alpha", &p(&[("alpha", "1/2")]), 10).unwrap();
        assert!(matches!(g.coeff(4), Some(Coeff::Inexact(_))));
        assert_eq!(g.coeff(4).unwrap().to_float(64).to_f64(), 2.0);
        let g = builtin("power_alpha", &p(&[("alpha", "-2")]), 10).unwrap();
        assert_eq!(g.exact(5).unwrap(), Rational::from((1, 25)));
    }

    #[test]
    fn polynomials() {
        let g = builtin("polynomial", &p(&[("coeffs", "0;1;1")]), 8).unwrap();
        assert_eq!(g.polynomial_degree(), Some(2));
        let m = builtin("monomial", &p(&[("k", "2")]), 8).unwrap();
        assert_eq!(m.polynomial_degree(), Some(2));
        assert_eq!(m.positive_indices(), vec![2]);
    }

    // Float ranges take shortcuts (ratio recurrences, log-gamma starts); compare with exact values.
    #[test]
    fn float_ranges_agree_with_exact() {
        let prec = 256;
        let cases: Vec<Builtin> = vec![
            Builtin::SetsOfSets,
            Builtin::PointedSets,
            Builtin::ListsGamma(Rational::from((5, 2))),
            Builtin::Functions,
            Builtin::RootedTrees,
            Builtin::Trees,
            Builtin::PlanePartitions,
            Builtin::ColoredPartitions(3),
            Builtin::BinaryPartitions,
        ];
        for b in cases {
            for (lo, hi) in [(0usize, 40usize), (37, 300)] {
                let exact = b.exact_range(lo, hi).unwrap();
                let fl = b.float_range(lo, hi, prec);
                for (i, (q, x)) in exact.iter().zip(&fl).enumerate() {
                    let want = Float::with_val(prec, q);
                    if want.is_zero() {
                        assert!(x.is_zero());
                        continue;
                    }
                    let rel = Float::with_val(prec, x / &want) - 1u32;
                    assert!(rel.abs().to_f64() < 1e-60, "{b:?} n={}", lo + i);
                }
            }
        }
    }
}
