//! Truncated power series with nonnegative coefficients, exact where possible.

mod builtins;
pub mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rug::ops::Pow;
use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};

pub use builtins::{builtin, Builtin, NAMES};

/// Working precision used when nothing else is configured.
pub const DEFAULT_PREC: u32 = 256;
/// Precision at which finite radii are stored.
pub const RADIUS_PREC: u32 = 512;

#[derive(Clone, Debug)]
pub enum Coeff {
    Exact(Rational),
    /// A rounded value, e.g. n^α for irrational α.
    Inexact(Float),
}

impl Coeff {
    pub fn to_float(&self, prec: u32) -> Float {
        match self {
            Coeff::Exact(q) => Float::with_val(prec, q),
            Coeff::Inexact(x) => Float::with_val(prec, x),
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Coeff::Exact(q) => Some(q),
            Coeff::Inexact(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Exact(q) => *q == 0,
            Coeff::Inexact(x) => x.is_zero(),
        }
    }

    fn is_negative(&self) -> bool {
        match self {
            Coeff::Exact(q) => *q < 0,
            Coeff::Inexact(x) => x.is_sign_negative() && !x.is_zero(),
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Exact(q) => write!(f, "{q}"),
            Coeff::Inexact(x) => write!(f, "{}", x.to_string_radix(10, Some(40))),
        }
    }
}

/// Declared radius of convergence of the full series.
#[derive(Clone, Debug)]
pub enum Radius {
    Finite(Float),
    Infinite,
}

impl Radius {
    pub fn one() -> Radius {
        Radius::Finite(Float::with_val(RADIUS_PREC, 1))
    }

    pub fn inv_e() -> Radius {
        let e = Float::with_val(RADIUS_PREC, 1).exp();
        Radius::Finite(e.recip())
    }

    pub fn finite(r: Float) -> Radius {
        Radius::Finite(Float::with_val(RADIUS_PREC, r))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Radius::Finite(_))
    }

    pub fn value(&self) -> Option<&Float> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Radius::Finite(r) => r.to_f64(),
            Radius::Infinite => f64::INFINITY,
        }
    }

    /// True when 0 < t < R.
    pub fn contains(&self, t: &Float) -> bool {
        if !(t.is_finite() && *t > 0) {
            return false;
        }
        match self {
            Radius::Finite(r) => t < r,
            Radius::Infinite => true,
        }
    }

    pub fn parse(s: &str) -> Result<Radius> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Radius::Infinite);
        }
        let v = Float::parse(s).map_err(|e| Error::Parse(format!("radius `{s}`: {e}")))?;
        let r = Float::with_val(RADIUS_PREC, v);
        if !(r.is_finite() && r > 0) {
            return Err(Error::Parse(format!("radius `{s}` must be positive")));
        }
        Ok(Radius::Finite(r))
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Infinite => write!(f, "inf"),
            Radius::Finite(r) => write!(f, "{}", fmt_float(r, 30)),
        }
    }
}

/// Decimal rendering with `digits` significant digits; deterministic.
pub fn fmt_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let y = x.to_f64();
    if y.is_finite() && y != 0.0 && digits <= 17 {
        return format!("{:.*e}", digits.saturating_sub(1), y);
    }
    x.to_string_radix(10, Some(digits))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Builtin { name: String, params: BTreeMap<String, String> },
    File { path: String },
    Derived { description: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Builtin { name, params } => {
                write!(f, "builtin:{name}")?;
                if !params.is_empty() {
                    let kv: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    write!(f, ":{}", kv.join(","))?;
                }
                Ok(())
            }
            Provenance::File { path } => write!(f, "file:{path}"),
            Provenance::Derived { description } => write!(f, "{description}"),
        }
    }
}

/// Generator of coefficients beyond the stored truncation.
pub trait CoeffSource: Send + Sync + fmt::Debug {
    /// Exact b_n for n in `start..end`, or None for an inexact family.
    fn exact_range(&self, start: usize, end: usize) -> Option<Vec<Rational>>;

    /// b_n for n in `start..end`, rounded to `prec` bits.
    fn float_range(&self, start: usize, end: usize, prec: u32) -> Vec<Float> {
        self.exact_range(start, end)
            .expect("exact family")
            .iter()
            .map(|q| Float::with_val(prec, q))
            .collect()
    }

    /// Degree when the family is a polynomial.
    fn degree(&self) -> Option<usize> {
        None
    }

    /// Exact a_0..=a_n of exp(g), when a faster route than the recurrence exists.
    fn exp_coefficients(&self, _n: usize) -> Option<Vec<Rational>> {
        None
    }
}

#[derive(Clone)]
pub struct CoefficientSeries {
    coeffs: Vec<Coeff>,
    radius: Radius,
    provenance: Provenance,
    source: Option<Arc<dyn CoeffSource>>,
}

impl fmt::Debug for CoefficientSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSeries")
            .field("provenance", &self.provenance.to_string())
            .field("truncation_order", &self.truncation_order())
            .field("radius", &self.radius.to_string())
            .finish()
    }
}

fn validate(coeffs: &[Coeff]) -> Result<()> {
    if coeffs.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "N".into(),
            reason: "truncation order must be at least 1".into(),
        });
    }
    if let Some(index) = coeffs.iter().position(Coeff::is_negative) {
        return Err(Error::NegativeCoefficient { index });
    }
    Ok(())
}

impl CoefficientSeries {
    /// Build from stored coefficients b_0..b_N. Fails on negative or all-zero (n ≥ 1) input.
    pub fn new(coeffs: Vec<Coeff>, radius: Radius, provenance: Provenance) -> Result<Self> {
        validate(&coeffs)?;
        if coeffs[1..].iter().all(Coeff::is_zero) {
            return Err(Error::ConstantSeries);
        }
        Ok(CoefficientSeries { coeffs, radius, provenance, source: None })
    }

    pub fn from_rationals(coeffs: Vec<Rational>, radius: Radius, provenance: Provenance) -> Result<Self> {
        Self::new(coeffs.into_iter().map(Coeff::Exact).collect(), radius, provenance)
    }

    /// Materialise b_0..=b_n from `source`; the source stays attached for later extension.
    pub fn from_source(
        source: Arc<dyn CoeffSource>,
        n: usize,
        radius: Radius,
        provenance: Provenance,
    ) -> Result<Self> {
        let coeffs = materialize(source.as_ref(), 0, n + 1);
        validate(&coeffs)?;
        // a source may still be nonconstant beyond n (e.g. monomial z^k with k > n)
        let nonconstant = coeffs[1..].iter().any(|c| !c.is_zero())
            || source.degree().map_or(true, |d| d > n);
        if !nonconstant {
            return Err(Error::ConstantSeries);
        }
        Ok(CoefficientSeries { coeffs, radius, provenance, source: Some(source) })
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Coeff] {
        &self.coeffs
    }

    pub fn radius(&self) -> &Radius {
        &self.radius
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn source(&self) -> Option<&Arc<dyn CoeffSource>> {
        self.source.as_ref()
    }

    pub fn coeff(&self, n: usize) -> Option<&Coeff> {
        self.coeffs.get(n)
    }

    /// Exact b_n within the truncation, or beyond it when a source or polynomial shape allows.
    pub fn exact(&self, n: usize) -> Option<Rational> {
        if let Some(c) = self.coeffs.get(n) {
            return c.as_exact().cloned();
        }
        if let Some(src) = &self.source {
            return src.exact_range(n, n + 1).map(|mut v| v.pop().unwrap());
        }
        self.polynomial_degree().map(|_| Rational::new())
    }

    /// All stored coefficients as exact rationals.
    pub fn exact_coeffs(&self) -> Result<Vec<Rational>> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(index, c)| c.as_exact().cloned().ok_or(Error::InexactCoefficient { index }))
            .collect()
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.iter().all(|c| c.as_exact().is_some())
    }

    /// Degree of g when it is known to be a polynomial.
    ///
    /// Builtin polynomials report it through their source; a stored series without a
    /// source and with infinite radius is read as a polynomial as well.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match &self.source {
            Some(src) => src.degree(),
            None if !self.radius.is_finite() => {
                self.coeffs.iter().rposition(|c| !c.is_zero())
            }
            None => None,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.polynomial_degree().is_some()
    }

    /// A copy with coefficients 0..=n, reusing what is already stored.
    pub fn extend(&self, n: usize) -> Result<Self> {
        let mut out = self.clone();
        let have = self.coeffs.len();
        if n + 1 <= have {
            out.coeffs.truncate(n + 1);
            return Ok(out);
        }
        let more = match (&self.source, self.polynomial_degree()) {
            (Some(src), _) => materialize(src.as_ref(), have, n + 1),
            (None, Some(_)) => vec![Coeff::Exact(Rational::new()); n + 1 - have],
            (None, None) => {
                return Err(Error::TruncationInsufficient {
                    t: "extension".into(),
                    available: have,
                })
            }
        };
        if let Some(i) = more.iter().position(Coeff::is_negative) {
            return Err(Error::NegativeCoefficient { index: have + i });
        }
        out.coeffs.extend(more);
        Ok(out)
    }

    /// b_n rounded to `prec` bits for n in `start..end`, drawing on the source past the truncation.
    pub fn float_range(&self, start: usize, end: usize, prec: u32) -> Result<Vec<Float>> {
        let mut out = Vec::with_capacity(end.saturating_sub(start));
        let stored_end = end.min(self.coeffs.len());
        for n in start..stored_end {
            out.push(self.coeffs[n].to_float(prec));
        }
        let from = start.max(self.coeffs.len());
        if from < end {
            match (&self.source, self.polynomial_degree()) {
                (Some(src), _) => {
                    let tail = src.float_range(from, end, prec);
                    if let Some(i) = tail.iter().position(|x| x.is_sign_negative() && !x.is_zero()) {
                        return Err(Error::NegativeCoefficient { index: from + i });
                    }
                    out.extend(tail);
                }
                (None, Some(_)) => out.extend((from..end).map(|_| Float::new(prec))),
                (None, None) => {
                    return Err(Error::TruncationInsufficient {
                        t: "coefficient request".into(),
                        available: self.coeffs.len(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Upper bound on the indices that can ever be nonzero, if finite.
    pub fn index_ceiling(&self) -> Option<usize> {
        match (&self.source, self.polynomial_degree()) {
            (_, Some(d)) => Some(d),
            (Some(_), None) => None,
            (None, None) => Some(self.truncation_order()),
        }
    }

    /// g(cz): b_n ↦ b_n cⁿ with radius R/c.
    pub fn scaled(&self, c: &Rational) -> Result<Self> {
        if *c <= 0 {
            return Err(Error::InvalidParameter { name: "c".into(), reason: "scale must be positive".into() });
        }
        let prec = DEFAULT_PREC;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, b)| match b {
                Coeff::Exact(q) => Coeff::Exact(Rational::from(q * c.clone().pow(n as i32))),
                Coeff::Inexact(x) => {
                    Coeff::Inexact(Float::with_val(prec, x * Float::with_val(prec, c).pow(n as u32)))
                }
            })
            .collect();
        let radius = match &self.radius {
            Radius::Infinite => Radius::Infinite,
            Radius::Finite(r) => Radius::Finite(Float::with_val(RADIUS_PREC, r / Float::with_val(RADIUS_PREC, c))),
        };
        let source = self.source.as_ref().map(|s| {
            Arc::new(ScaledSource { inner: s.clone(), c: c.clone() }) as Arc<dyn CoeffSource>
        });
        Ok(CoefficientSeries {
            coeffs,
            radius,
            provenance: Provenance::Derived { description: format!("({})(({})z)", self.provenance, c) },
            source,
        })
    }

    /// Indices n ≥ 1 within the truncation with b_n > 0.
    pub fn positive_indices(&self) -> Vec<usize> {
        (1..self.coeffs.len()).filter(|&n| !self.coeffs[n].is_zero()).collect()
    }
}

fn materialize(src: &dyn CoeffSource, start: usize, end: usize) -> Vec<Coeff> {
    match src.exact_range(start, end) {
        Some(v) => v.into_iter().map(Coeff::Exact).collect(),
        None => src.float_range(start, end, DEFAULT_PREC).into_iter().map(Coeff::Inexact).collect(),
    }
}

#[derive(Debug)]
struct ScaledSource {
    inner: Arc<dyn CoeffSource>,
    c: Rational,
}

impl CoeffSource for ScaledSource {
    fn exact_range(&self, start: usize, end: usize) -> Option<Vec<Rational>> {
        let v = self.inner.exact_range(start, end)?;
        let mut p = self.c.clone().pow(start as i32);
        Some(
            v.into_iter()
                .map(|b| {
                    let out = b * &p;
                    p *= &self.c;
                    out
                })
                .collect(),
        )
    }

    fn float_range(&self, start: usize, end: usize, prec: u32) -> Vec<Float> {
        let v = self.inner.float_range(start, end, prec + 32);
        let c = Float::with_val(prec + 32, &self.c);
        let mut p = Float::with_val(prec + 32, c.clone().pow(start as u32));
        v.into_iter()
            .map(|b| {
                let out = Float::with_val(prec, &b * &p);
                p *= &c;
                out
            })
            .collect()
    }

    fn degree(&self) -> Option<usize> {
        self.inner.degree()
    }
}

// ---------------------------------------------------------------------------
// exp / log
// ---------------------------------------------------------------------------

/// Coefficients a_0..a_N of f = exp(g) by n·a_n = Σ k b_k a_{n−k}.
pub fn exp_series(g: &CoefficientSeries) -> Result<CoefficientSeries> {
    let b = g.exact_coeffs()?;
    if b[0] != 0 {
        return Err(Error::NonzeroConstantTerm);
    }
    let n_max = b.len() - 1;
    let a = match g.source().and_then(|s| s.exp_coefficients(n_max)) {
        Some(fast) => fast,
        None => exp_recurrence(&b),
    };
    CoefficientSeries::from_rationals(
        a,
        g.radius().clone(),
        Provenance::Derived { description: format!("exp({})", g.provenance()) },
    )
}

pub(crate) fn exp_recurrence(b: &[Rational]) -> Vec<Rational> {
    let n_max = b.len() - 1;
    let weighted: Vec<(usize, Rational)> = (1..=n_max)
        .filter(|&k| b[k] != 0)
        .map(|k| (k, Rational::from(&b[k] * k as u64)))
        .collect();
    let mut a = Vec::with_capacity(n_max + 1);
    a.push(Rational::from(1));
    for n in 1..=n_max {
        let mut acc = Rational::new();
        for (k, kb) in &weighted {
            if *k > n {
                break;
            }
            acc += Rational::from(kb * &a[n - k]);
        }
        a.push(acc / n as u64);
    }
    a
}

/// Coefficients of g = log f, inverting the exponential recurrence.
///
/// A constant term a_0 ≠ 1 leaves b_0 = log a_0, which is stored inexactly.
pub fn log_series(f: &CoefficientSeries) -> Result<CoefficientSeries> {
    let a = f.exact_coeffs()?;
    if a[0] == 0 {
        return Err(Error::ZeroConstantTerm);
    }
    let a0 = a[0].clone();
    let c: Vec<Rational> = a.iter().map(|x| Rational::from(x / &a0)).collect();
    let n_max = c.len() - 1;
    let mut b: Vec<Rational> = vec![Rational::new(); n_max + 1];
    for n in 1..=n_max {
        let mut acc = Rational::from(&c[n] * n as u64);
        for k in 1..n {
            if b[k] != 0 && c[n - k] != 0 {
                acc -= Rational::from(&b[k] * k as u64) * &c[n - k];
            }
        }
        b[n] = acc / n as u64;
        if b[n] < 0 {
            return Err(Error::NegativeCoefficient { index: n });
        }
    }
    let mut coeffs: Vec<Coeff> = b.into_iter().map(Coeff::Exact).collect();
    if a0 != 1 {
        let l = Float::with_val(DEFAULT_PREC, &a0).ln();
        if l.is_sign_negative() {
            return Err(Error::NegativeCoefficient { index: 0 });
        }
        coeffs[0] = Coeff::Inexact(l);
    }
    CoefficientSeries::new(
        coeffs,
        f.radius().clone(),
        Provenance::Derived { description: format!("log({})", f.provenance()) },
    )
}

// ---------------------------------------------------------------------------
// Unlabeled constructions from an ordinary generating function
// ---------------------------------------------------------------------------

/// Counts c_1, c_2, ... of the objects of each size; stored with c[0] = c_1.
#[derive(Clone, Debug)]
pub struct OgfSpec {
    c: Vec<Rational>,
}

impl OgfSpec {
    pub fn new(c: Vec<Rational>) -> Result<OgfSpec> {
        if let Some(i) = c.iter().position(|x| *x < 0) {
            return Err(Error::NegativeCoefficient { index: i + 1 });
        }
        if c.iter().all(|x| *x == 0) {
            return Err(Error::ConstantSeries);
        }
        Ok(OgfSpec { c })
    }

    /// c_j, zero beyond the stored list.
    pub fn get(&self, j: usize) -> Rational {
        if j == 0 {
            return Rational::new();
        }
        self.c.get(j - 1).cloned().unwrap_or_default()
    }
}

#[derive(Debug)]
struct OgfSource {
    c: OgfSpec,
    alternating: bool,
}

impl CoeffSource for OgfSource {
    fn exact_range(&self, start: usize, end: usize) -> Option<Vec<Rational>> {
        Some(
            (start..end)
                .map(|m| {
                    if m == 0 {
                        return Rational::new();
                    }
                    let mut acc = Rational::new();
                    for j in crate::number_theory::divisors(m as u64) {
                        let j = j as usize;
                        let cj = self.c.get(j);
                        if cj == 0 {
                            continue;
                        }
                        let k = m / j;
                        let term = cj * j as u64;
                        if self.alternating && k % 2 == 0 {
                            acc -= term;
                        } else {
                            acc += term;
                        }
                    }
                    acc / m as u64
                })
                .collect(),
        )
    }
}

/// Multisets: b_m = (1/m) Σ_{j|m} j c_j. The radius is 1 since the counts are finitely many.
pub fn multiset_from_ogf(c: &OgfSpec, n: usize) -> Result<CoefficientSeries> {
    CoefficientSeries::from_source(
        Arc::new(OgfSource { c: c.clone(), alternating: false }),
        n,
        Radius::one(),
        Provenance::Derived { description: "multiset(ogf)".into() },
    )
}

#[derive(Debug)]
pub enum SelectionOutcome {
    Series(CoefficientSeries),
    NegativeCoefficient { index: usize, value: Rational },
}

/// Selections: b_m = (1/m) Σ_{jk=m} j c_j (−1)^{k+1}, which may go negative.
pub fn selection_from_ogf(c: &OgfSpec, n: usize) -> Result<SelectionOutcome> {
    let src = OgfSource { c: c.clone(), alternating: true };
    let b = src.exact_range(0, n + 1).unwrap();
    if let Some(index) = b.iter().position(|x| *x < 0) {
        return Ok(SelectionOutcome::NegativeCoefficient { index, value: b[index].clone() });
    }
    Ok(SelectionOutcome::Series(CoefficientSeries::from_source(
        Arc::new(src),
        n,
        Radius::one(),
        Provenance::Derived { description: "selection(ogf)".into() },
    )?))
}

/// Parameters given as strings, parsed per builtin.
pub type Params = BTreeMap<String, String>;

#[cfg(test)]
fn factorial_rational(n: usize) -> Rational {
    Rational::from(rug::Integer::factorial(n as u32))
}
