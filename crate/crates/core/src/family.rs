//! The Khinchin family of f = exp(g): log f, mean, variance, masses and characteristic functions.

use std::sync::{Arc, Mutex, RwLock};

use num_complex::Complex64;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{fmt_float, CoefficientSeries, Radius};

/// Adaptive truncation rule for the real-axis sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TailPolicy {
    /// A term is negligible when below `eps` times the running partial sum.
    pub eps: f64,
    /// Number of consecutive negligible nonzero terms that ends a sum.
    pub consecutive: usize,
    /// Hard ceiling on the number of coefficients of g ever materialised.
    pub max_terms: usize,
}

impl Default for TailPolicy {
    fn default() -> Self {
        TailPolicy { eps: 1e-30, consecutive: 10, max_terms: 1 << 22 }
    }
}

/// Anything usable as an evaluation point.
pub trait Point {
    fn to_float(&self, prec: u32) -> Float;
}

impl Point for f64 {
    fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, *self)
    }
}

impl Point for Float {
    fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, self)
    }
}

impl Point for &Float {
    fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, *self)
    }
}

/// Real-axis sums at one t: g(t) = Σ b_n tⁿ, S_k = Σ n^k b_n tⁿ, D_k = Σ n(n−1)..(n−k+1) b_n tⁿ.
#[derive(Debug)]
pub struct RealSums {
    pub t: Float,
    pub g: Float,
    pub s1: Float,
    pub s2: Float,
    pub s3: Float,
    pub d2: Float,
    pub d3: Float,
    /// b_n tⁿ rounded to f64, n = 0..terms (b_0 included at index 0).
    pub weights: Vec<f64>,
}

impl RealSums {
    pub fn terms(&self) -> usize {
        self.weights.len()
    }
}

const CHUNK: usize = 4096;

/// Multiply-adds allowed for one extension of the coefficients of f.
const RECURRENCE_WORK: f64 = 2e8;

/// Grow-only chunked store; readers take a snapshot of the chunk list.
#[derive(Default)]
struct ChunkCache {
    chunks: RwLock<Vec<Arc<Vec<Float>>>>,
}

impl ChunkCache {
    fn snapshot(&self) -> Vec<Arc<Vec<Float>>> {
        self.chunks.read().unwrap().clone()
    }
}

pub struct FamilyEvaluator {
    series: CoefficientSeries,
    prec: u32,
    tail: TailPolicy,
    /// Largest number of coefficients of f the mass computations may build.
    max_f_coeffs: usize,
    b0: Float,
    b_cache: ChunkCache,
    f_cache: RwLock<Arc<Vec<Float>>>,
    memo: Mutex<Vec<Arc<RealSums>>>,
}

impl std::fmt::Debug for FamilyEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyEvaluator")
            .field("series", &self.series)
            .field("prec", &self.prec)
            .field("tail", &self.tail)
            .finish()
    }
}

impl FamilyEvaluator {
    pub fn new(series: CoefficientSeries) -> Self {
        Self::with_options(series, crate::series::DEFAULT_PREC, TailPolicy::default())
    }

    pub fn with_options(series: CoefficientSeries, prec: u32, tail: TailPolicy) -> Self {
        let b0 = series.coeff(0).map(|c| c.to_float(prec)).unwrap_or_else(|| Float::new(prec));
        FamilyEvaluator {
            series,
            prec,
            tail,
            max_f_coeffs: 1 << 17,
            b0,
            b_cache: ChunkCache::default(),
            f_cache: RwLock::new(Arc::new(Vec::new())),
            memo: Mutex::new(Vec::new()),
        }
    }

    pub fn with_max_f_coeffs(mut self, n: usize) -> Self {
        self.max_f_coeffs = n;
        self
    }

    pub fn series(&self) -> &CoefficientSeries {
        &self.series
    }

    pub fn radius(&self) -> &Radius {
        self.series.radius()
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn tail_policy(&self) -> &TailPolicy {
        &self.tail
    }

    pub fn point(&self, t: impl Point) -> Float {
        t.to_float(self.prec)
    }

    fn check_domain(&self, t: &Float) -> Result<()> {
        if self.radius().contains(t) {
            Ok(())
        } else {
            Err(Error::Domain { t: fmt_float(t, 17), radius: self.radius().to_string() })
        }
    }

    /// Make sure chunks covering indices < `end` exist; returns the snapshot.
    fn b_chunks(&self, end: usize) -> Result<Vec<Arc<Vec<Float>>>> {
        let snap = self.b_cache.snapshot();
        if snap.len() * CHUNK >= end {
            return Ok(snap);
        }
        let mut w = self.b_cache.chunks.write().unwrap();
        while w.len() * CHUNK < end {
            let lo = w.len() * CHUNK;
            let hi = lo + CHUNK;
            let block = match self.series.index_ceiling() {
                Some(c) if lo > c => vec![Float::new(self.prec); CHUNK],
                Some(c) if hi > c + 1 => {
                    let mut v = self.series.float_range(lo, c + 1, self.prec)?;
                    v.resize(CHUNK, Float::new(self.prec));
                    v
                }
                _ => self.series.float_range(lo, hi, self.prec)?,
            };
            w.push(Arc::new(block));
        }
        Ok(w.clone())
    }

    /// The real-axis sums at t, memoised for the most recent points.
    pub fn sums(&self, t: impl Point) -> Result<Arc<RealSums>> {
        let t = self.point(t);
        self.check_domain(&t)?;
        if let Some(hit) = self.memo.lock().unwrap().iter().find(|s| s.t == t) {
            return Ok(hit.clone());
        }
        let sums = Arc::new(self.compute_sums(t)?);
        let mut memo = self.memo.lock().unwrap();
        if memo.len() >= 16 {
            memo.remove(0);
        }
        memo.push(sums.clone());
        Ok(sums)
    }

    fn compute_sums(&self, t: Float) -> Result<RealSums> {
        let p = self.prec;
        let ceiling = self.series.index_ceiling();
        let limit = match ceiling {
            Some(c) => (c + 1).min(self.tail.max_terms),
            None => self.tail.max_terms,
        };
        let eps = Float::with_val(p, self.tail.eps);
        let mut g = self.b0.clone();
        let mut s1 = Float::new(p);
        let mut s2 = Float::new(p);
        let mut s3 = Float::new(p);
        let mut d2 = Float::new(p);
        let mut d3 = Float::new(p);
        let mut pw = Float::with_val(p, 1);
        let mut term = Float::new(p);
        let mut x = Float::new(p);
        let mut y = Float::new(p);
        let mut bound = Float::new(p);
        let mut weights = vec![self.b0.to_f64()];
        let mut quiet = 0usize;
        let mut chunks = self.b_chunks(CHUNK.min(limit.max(1)))?;
        let mut n = 1usize;
        let mut finished = false;
        while n < limit {
            if n >= chunks.len() * CHUNK {
                let want = (chunks.len() * 2 * CHUNK).min(limit);
                chunks = self.b_chunks(want)?;
            }
            pw *= &t;
            let b = &chunks[n / CHUNK][n % CHUNK];
            if b.is_zero() {
                weights.push(0.0);
                n += 1;
                continue;
            }
            term.assign(b * &pw);
            weights.push(term.to_f64());
            g += &term;
            let nn = n as u64;
            x.assign(&term * nn);
            s1 += &x;
            x *= nn;
            s2 += &x;
            x *= nn;
            s3 += &x;
            y.assign(&term * (nn * (nn - 1)));
            d2 += &y;
            y *= nn.saturating_sub(2);
            d3 += &y;
            // n³ bₙ tⁿ against the running Σ n³ bₙ tⁿ
            bound.assign(&s3 * &eps);
            if x < bound {
                quiet += 1;
                if quiet >= self.tail.consecutive {
                    finished = true;
                    n += 1;
                    break;
                }
            } else {
                quiet = 0;
            }
            n += 1;
        }
        let complete = self.series.polynomial_degree().is_some_and(|d| d < limit);
        if !finished && !complete {
            return Err(Error::TruncationInsufficient { t: fmt_float(&t, 17), available: n });
        }
        Ok(RealSums { t, g, s1, s2, s3, d2, d3, weights })
    }

    /// log f(t) = g(t).
    pub fn log_f(&self, t: impl Point) -> Result<Float> {
        Ok(self.sums(t)?.g.clone())
    }

    /// m(t) = t g′(t).
    pub fn mean(&self, t: impl Point) -> Result<Float> {
        Ok(self.sums(t)?.s1.clone())
    }

    /// σ²(t) = t g′(t) + t² g″(t).
    pub fn variance(&self, t: impl Point) -> Result<Float> {
        Ok(self.sums(t)?.s2.clone())
    }

    pub fn sigma(&self, t: impl Point) -> Result<Float> {
        Ok(self.sums(t)?.s2.clone().sqrt())
    }

    pub fn second_derivative(&self, t: impl Point) -> Result<Float> {
        let s = self.sums(t)?;
        Ok(Float::with_val(self.prec, &s.d2 / Float::with_val(self.prec, s.t.square_ref())))
    }

    pub fn third_derivative(&self, t: impl Point) -> Result<Float> {
        let s = self.sums(t)?;
        let t3 = Float::with_val(self.prec, &s.t * &s.t) * &s.t;
        Ok(Float::with_val(self.prec, &s.d3 / t3))
    }

    /// g‴(t)/g″(t)^{3/2}; the t-powers cancel so this is D₃/D₂^{3/2}.
    pub fn gaussianity_ratio(&self, t: impl Point) -> Result<Float> {
        let s = self.sums(t)?;
        if s.d2.is_zero() {
            return Err(Error::DegenerateSecondDerivative { t: fmt_float(&s.t, 17) });
        }
        let denom = Float::with_val(self.prec, s.d2.sqrt_ref()) * &s.d2;
        Ok(Float::with_val(self.prec, &s.d3 / denom))
    }

    /// Coefficients of exp(g − b_0) for indices < `end`.
    pub fn f_coefficients(&self, end: usize) -> Result<Arc<Vec<Float>>> {
        {
            let have = self.f_cache.read().unwrap();
            if have.len() >= end {
                return Ok(have.clone());
            }
        }
        if end > self.max_f_coeffs {
            return Err(Error::CoefficientRangeExhausted { needed: end, available: self.max_f_coeffs });
        }
        let mut w = self.f_cache.write().unwrap();
        if w.len() >= end {
            return Ok(w.clone());
        }
        let target = end.max(2 * w.len()).min(self.max_f_coeffs);
        let fast = self.series.source().and_then(|s| {
            let b0_zero = self.series.coeff(0).is_some_and(|c| c.is_zero());
            if b0_zero { s.exp_coefficients(target - 1) } else { None }
        });
        let v = match fast {
            Some(q) => q.iter().map(|x| Float::with_val(self.prec, x)).collect(),
            None => self.f_by_recurrence(&w, target)?,
        };
        *w = Arc::new(v);
        Ok(w.clone())
    }

    fn f_by_recurrence(&self, have: &[Float], target: usize) -> Result<Vec<Float>> {
        let chunks = self.b_chunks(target)?;
        let p = self.prec + 32;
        let weighted: Vec<(usize, Float)> = (1..target)
            .filter_map(|k| {
                let b = &chunks[k / CHUNK][k % CHUNK];
                (!b.is_zero()).then(|| (k, Float::with_val(p, b * k as u64)))
            })
            .collect();
        let work: f64 = weighted.iter().map(|(k, _)| (target - k) as f64).sum();
        if work > RECURRENCE_WORK {
            // work grows quadratically in the target
            let reachable = (target as f64 * (RECURRENCE_WORK / work).sqrt()) as usize;
            return Err(Error::CoefficientRangeExhausted { needed: target, available: reachable.max(have.len()) });
        }
        let mut a: Vec<Float> = have.iter().map(|x| Float::with_val(p, x)).collect();
        if a.is_empty() {
            a.push(Float::with_val(p, 1));
        }
        let mut acc = Float::new(p);
        let mut tmp = Float::new(p);
        for n in a.len()..target {
            acc.assign(0);
            for (k, kb) in &weighted {
                if *k > n {
                    break;
                }
                tmp.assign(kb * &a[n - k]);
                acc += &tmp;
            }
            acc /= n as u64;
            a.push(acc.clone());
        }
        Ok(a.into_iter().map(|x| Float::with_val(self.prec, x)).collect())
    }

    /// log P(X_t = n); −∞ when a_n = 0.
    pub fn log_mass(&self, t: impl Point, n: usize) -> Result<Float> {
        let s = self.sums(t)?;
        let a = self.f_coefficients(n + 1)?;
        if a[n].is_zero() {
            return Ok(Float::with_val(self.prec, f64::NEG_INFINITY));
        }
        let p = self.prec;
        let ln_t = Float::with_val(p, s.t.ln_ref());
        let g_rest = Float::with_val(p, &s.g - &self.b0);
        Ok(Float::with_val(p, a[n].ln_ref()) + ln_t * n as u64 - g_rest)
    }

    /// P(X_t = n) = a_n tⁿ / f(t).
    pub fn mass(&self, t: impl Point, n: usize) -> Result<Float> {
        Ok(self.log_mass(t, n)?.exp())
    }

    /// Σ_{n<end} P(X_t = n), accumulated at working precision.
    pub fn mass_sum(&self, t: impl Point, end: usize) -> Result<Float> {
        let s = self.sums(t)?;
        let a = self.f_coefficients(end)?;
        let p = self.prec;
        let mut acc = Float::new(p);
        let mut pw = Float::with_val(p, 1);
        for an in a.iter().take(end) {
            acc += Float::with_val(p, an * &pw);
            pw *= &s.t;
        }
        let g_rest = Float::with_val(p, &s.g - &self.b0);
        Ok(acc * Float::with_val(p, -g_rest).exp())
    }

    pub fn theta_kernel(&self, t: impl Point) -> Result<ThetaKernel> {
        ThetaKernel::new(&*self.sums(t)?)
    }

    /// E e^{iθX_t} = f(te^{iθ})/f(t).
    pub fn char_fn(&self, t: impl Point, theta: f64) -> Result<Complex64> {
        Ok(self.theta_kernel(t)?.char_fn(theta))
    }

    /// E e^{iθ(X_t − m)/σ}.
    pub fn normalized_char(&self, t: impl Point, theta: f64) -> Result<Complex64> {
        Ok(self.theta_kernel(t)?.normalized_char(theta))
    }
}

/// Sum with Neumaier compensation.
#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.c
    }
}

/// cos x − 1 + x²/2 without cancellation.
fn cos_gauss_remainder(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        // x⁴/24 − x⁶/720 + x⁸/40320 − x¹⁰/3628800 + x¹²/479001600
        x2 * x2
            * (1.0 / 24.0
                - x2 * (1.0 / 720.0 - x2 * (1.0 / 40320.0 - x2 * (1.0 / 3628800.0 - x2 / 479001600.0))))
    } else {
        let s = (0.5 * x).sin();
        0.5 * x * x - 2.0 * s * s
    }
}

/// sin x − x without cancellation.
fn sin_remainder(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        -x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 * (1.0 / 362880.0 - x2 / 39916800.0))))
    } else {
        x.sin() - x
    }
}

/// e^z − 1 for complex z, stable for small |z|.
pub fn complex_expm1(z: Complex64) -> Complex64 {
    let em1 = z.re.exp_m1();
    let s = (0.5 * z.im).sin();
    let re = em1 * z.im.cos() - 2.0 * s * s;
    let im = z.re.exp() * z.im.sin();
    Complex64::new(re, im)
}

/// The weights b_n tⁿ at a fixed t, for sums over θ.
#[derive(Clone, Debug)]
pub struct ThetaKernel {
    pub t: f64,
    pub mean: f64,
    pub sigma: f64,
    terms: Vec<(f64, f64)>,
}

impl ThetaKernel {
    pub fn new(s: &RealSums) -> Result<ThetaKernel> {
        let overflow = || Error::NumericOverflow { t: fmt_float(&s.t, 17) };
        let terms: Vec<(f64, f64)> = s
            .weights
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, w)| **w != 0.0)
            .map(|(n, w)| (n as f64, *w))
            .collect();
        if terms.iter().any(|(_, w)| !w.is_finite()) {
            return Err(overflow());
        }
        let mean = s.s1.to_f64();
        let sigma = s.s2.to_f64().sqrt();
        if !(mean.is_finite() && sigma.is_finite()) {
            return Err(overflow());
        }
        Ok(ThetaKernel { t: s.t.to_f64(), mean, sigma, terms })
    }

    /// Re g(te^{iθ}) − g(t) = −2 Σ b_n tⁿ sin²(nθ/2).
    pub fn re_delta(&self, theta: f64) -> f64 {
        let mut acc = Neumaier::default();
        for &(n, w) in &self.terms {
            let s = (0.5 * n * theta).sin();
            acc.add(-2.0 * w * s * s);
        }
        acc.value()
    }

    /// g(te^{iθ}) − g(t).
    pub fn delta(&self, theta: f64) -> Complex64 {
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for &(n, w) in &self.terms {
            let (s, c) = (0.5 * n * theta).sin_cos();
            re.add(-2.0 * w * s * s);
            im.add(w * 2.0 * s * c);
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn char_fn(&self, theta: f64) -> Complex64 {
        self.delta(theta).exp()
    }

    /// log(φ̆(θ) e^{θ²/2}) for the normalised variable, term by term.
    pub fn gauss_log_ratio(&self, theta: f64) -> Complex64 {
        let phi = theta / self.sigma;
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for &(n, w) in &self.terms {
            let x = n * phi;
            re.add(w * cos_gauss_remainder(x));
            im.add(w * sin_remainder(x));
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn normalized_char(&self, theta: f64) -> Complex64 {
        (self.gauss_log_ratio(theta) - 0.5 * theta * theta).exp()
    }

    /// |φ̆(θ) e^{θ²/2} − 1|.
    pub fn major_arc_value(&self, theta: f64) -> f64 {
        complex_expm1(self.gauss_log_ratio(theta)).norm()
    }

    pub fn terms(&self) -> usize {
        self.terms.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{builtin, Params, Provenance};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rug::Rational;

    fn ev(name: &str) -> FamilyEvaluator {
        FamilyEvaluator::new(builtin(name, &Params::new(), 64).unwrap())
    }

    fn z() -> FamilyEvaluator {
        FamilyEvaluator::new(builtin("monomial", &[("k".to_string(), "1".to_string())].into(), 4).unwrap())
    }

    fn z_squared() -> FamilyEvaluator {
        FamilyEvaluator::new(builtin("monomial", &[("k".to_string(), "2".to_string())].into(), 4).unwrap())
    }

    // ---------------------------------------------------------------
    // closed forms
    // ---------------------------------------------------------------

    #[test]
    fn poisson_family() {
        let e = z();
        assert_eq!(e.log_f(3.0).unwrap().to_f64(), 3.0);
        assert_eq!(e.mean(2.5).unwrap().to_f64(), 2.5);
        assert_eq!(e.variance(2.5).unwrap().to_f64(), 2.5);
        assert_relative_eq!(e.mass(2.0, 0).unwrap().to_f64(), (-2f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn bell_family() {
        let e = ev("sets_of_sets");
        for t in [0.5, 2.0, 7.0] {
            assert_relative_eq!(e.log_f(t).unwrap().to_f64(), t.exp() - 1.0, max_relative = 1e-14);
            assert_relative_eq!(e.mean(t).unwrap().to_f64(), t * t.exp(), max_relative = 1e-14);
            assert_relative_eq!(e.variance(t).unwrap().to_f64(), t * (t + 1.0) * t.exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn geometric_family() {
        let e = ev("cycles");
        for t in [0.1, 0.5, 0.9, 0.99] {
            assert_relative_eq!(e.mean(t).unwrap().to_f64(), t / (1.0 - t), max_relative = 1e-14);
            assert_relative_eq!(e.variance(t).unwrap().to_f64(), t / (1.0 - t).powi(2), max_relative = 1e-14);
        }
        assert_relative_eq!(e.mass(0.5, 3).unwrap().to_f64(), 0.0625, max_relative = 1e-15);
    }

    #[test]
    fn partition_function_near_one() {
        let e = ev("partitions");
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        let target = -(2.0 * std::f64::consts::PI).sqrt().ln();
        let mut last = f64::INFINITY;
        for k in [6, 8, 10, 12] {
            let s = 2f64.powi(-k);
            let t = Float::with_val(256, -s).exp();
            let lf = e.log_f(&t).unwrap().to_f64();
            let dev = (lf - zeta2 / s - 0.5 * s.ln() - target).abs();
            assert!(dev < last);
            last = dev;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn outside_domain() {
        let e = ev("partitions");
        assert!(matches!(e.log_f(1.0), Err(Error::Domain { .. })));
        assert!(matches!(e.log_f(-0.5), Err(Error::Domain { .. })));
        assert!(matches!(ev("functions").mean(0.37), Err(Error::Domain { .. })));
    }

    #[test]
    fn truncated_file_series_reports_insufficiency() {
        let g = CoefficientSeries::from_rationals(
            vec![Rational::new(), Rational::from(1), Rational::from(1), Rational::from(1)],
            Radius::one(),
            Provenance::Derived { description: "short".into() },
        )
        .unwrap();
        let e = FamilyEvaluator::new(g);
        assert!(matches!(e.log_f(0.9), Err(Error::TruncationInsufficient { .. })));
    }

    #[test]
    fn term_ceiling() {
        let g = builtin("cycles", &Params::new(), 8).unwrap();
        let e = FamilyEvaluator::with_options(g, 128, TailPolicy { max_terms: 5000, ..TailPolicy::default() });
        assert!(matches!(e.mean(0.999), Err(Error::TruncationInsufficient { .. })));
    }

    #[test]
    fn gaussianity_examples() {
        let c = ev("cycles");
        for t in [0.01, 0.3, 0.9, 0.999] {
            assert_relative_eq!(c.gaussianity_ratio(t).unwrap().to_f64(), 2.0, max_relative = 1e-12);
        }
        let b = ev("sets_of_sets");
        for t in [0.5, 3.0, 10.0] {
            assert_relative_eq!(b.gaussianity_ratio(t).unwrap().to_f64(), (-t / 2.0).exp(), max_relative = 1e-12);
        }
        let l = ev("lists");
        let r: Vec<f64> = [0.9, 0.99, 0.999].iter().map(|&t| l.gaussianity_ratio(t).unwrap().to_f64()).collect();
        assert!(r[0] > r[1] && r[1] > r[2]);
        assert!(matches!(z().gaussianity_ratio(1.0), Err(Error::DegenerateSecondDerivative { .. })));
    }

    #[test]
    fn characteristic_functions() {
        let e = z();
        assert_eq!(e.char_fn(3.0, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(e.normalized_char(3.0, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        for theta in [0.3, 1.0, 2.5, -1.7] {
            let v = e.char_fn(4.0, theta).unwrap();
            assert_relative_eq!(v.norm(), (4.0 * (theta.cos() - 1.0)).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn bell_normalized_char_closed_form() {
        let (t, theta): (f64, f64) = (2.0, 1.0);
        let e = FamilyEvaluator::new(builtin("sets_of_sets", &Params::new(), 8).unwrap());
        let got = e.normalized_char(t, theta).unwrap();
        let i = Complex64::i();
        let inner = (i * theta * (-t / 2.0).exp() / (t * (t + 1.0)).sqrt()).exp() * t;
        let want = (inner.exp() - t.exp() - i * theta * (t / (t + 1.0)).sqrt() * (t / 2.0).exp()).exp();
        assert!((got - want).norm() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn normalized_char_is_char_fn_rescaled() {
        let e = ev("partitions");
        let k = e.theta_kernel(0.9).unwrap();
        for theta in [0.1, 0.7, 2.0] {
            assert_relative_eq!(k.normalized_char(theta).norm(), k.char_fn(theta / k.sigma).norm(), max_relative = 1e-10);
        }
    }

    #[test]
    fn masses_sum_to_one() {
        let eps = 1e-30;
        for (name, t) in [("sets_of_sets", 1.5), ("partitions", 0.5), ("cycles", 0.3)] {
            let e = ev(name);
            let mut end = 16;
            // extend until the next block of masses is negligible
            loop {
                let s = e.mass_sum(t, end).unwrap();
                let s2 = e.mass_sum(t, 2 * end).unwrap();
                let d = Float::with_val(256, &s2 - &s).abs().to_f64();
                if d < eps / 100.0 {
                    let err = Float::with_val(256, s2 - 1u32).abs().to_f64();
                    assert!(err <= 10.0 * eps, "{name}: {err}");
                    break;
                }
                end *= 2;
            }
        }
        let e = z_squared();
        assert_eq!(e.mass(3.0, 3).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn float_recurrence_matches_exact() {
        let g = builtin("plane_partitions", &Params::new(), 60).unwrap();
        let exact = crate::series::exp_recurrence(&g.exact_coeffs().unwrap());
        let e = FamilyEvaluator::new(g);
        let a = e.f_coefficients(61).unwrap();
        for n in 0..=60 {
            let want = Float::with_val(256, &exact[n]);
            let rel = Float::with_val(256, &a[n] / want) - 1u32;
            assert!(rel.abs().to_f64() < 1e-70);
        }
    }

    #[test]
    fn forests_mean_over_sigma_shrinks() {
        let e = ev("rooted_trees");
        let r = (-1f64).exp();
        let v: Vec<f64> = (3..=8)
            .map(|k| {
                let t = r * (1.0 - 2f64.powi(-k));
                (e.mean(t).unwrap() / e.sigma(t).unwrap()).to_f64()
            })
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    // ---------------------------------------------------------------
    // asymptotic comparisons
    // ---------------------------------------------------------------

    fn gamma(x: f64) -> f64 {
        Float::with_val(64, x).gamma().to_f64()
    }

    // Σ n^{β−1} tⁿ (1−t)^β / Γ(β) → 1 as t ↑ 1
    fn power_sum_ratio(beta: &str, k: i32) -> f64 {
        let b: f64 = crate::series::io::parse_rational(beta).unwrap().to_f64();
        let alpha = crate::series::io::parse_rational(beta).unwrap() - 1u32;
        let g = builtin("power_alpha", &[("alpha".to_string(), alpha.to_string())].into(), 8).unwrap();
        let e = FamilyEvaluator::with_options(g, 128, TailPolicy::default());
        let t = 1.0 - 2f64.powi(-k);
        e.log_f(t).unwrap().to_f64() * (1.0 - t).powf(b) / gamma(b)
    }

    #[test]
    fn power_sums_approach_gamma() {
        for beta in ["1/2", "3/2", "2", "3"] {
            let errs: Vec<f64> = [4, 8, 12].iter().map(|&k| (power_sum_ratio(beta, k) - 1.0).abs()).collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "beta={beta}: {errs:?}");
            // error is O((1−t)^{min(β,1)})
            assert!(errs[2] < 0.02, "beta={beta}: {errs:?}");
        }
    }

    #[test]
    #[ignore = "about 10⁸ coefficients; run explicitly"]
    fn power_sums_approach_gamma_far() {
        for beta in ["1/2", "2"] {
            let e = (power_sum_ratio(beta, 20) - 1.0).abs();
            assert!(e < 1e-5);
        }
    }

    #[test]
    fn poisson_moments_approach_powers() {
        let e = FamilyEvaluator::new(builtin("sets_of_sets", &Params::new(), 8).unwrap());
        let mut last = [f64::INFINITY; 3];
        for k in [2, 6, 10, 14] {
            let t = 2f64.powi(k);
            let s = e.sums(t).unwrap();
            let lead = Float::with_val(256, t).exp();
            for (j, sk) in [&s.s1, &s.s2, &s.s3].into_iter().enumerate() {
                let r = Float::with_val(256, sk / &lead) / t.powi(j as i32 + 1);
                let err = (r.to_f64() - 1.0).abs();
                assert!(err < last[j] || err < 1e-25, "j={j} k={k}: {err} vs {}", last[j]);
                last[j] = err;
            }
        }
        assert!(last[2] < 1e-3);
    }

    // ---------------------------------------------------------------
    // properties
    // ---------------------------------------------------------------

    const BUILTINS: &[&str] = &[
        "sets_of_sets", "pointed_sets", "lists", "cycles", "functions", "rooted_trees", "trees",
        "partitions", "distinct_parts", "plane_partitions", "square_partitions", "binary_partitions",
    ];

    #[test]
    fn mean_increasing_on_grid() {
        for name in BUILTINS {
            let e = ev(name);
            let r = e.radius().to_f64();
            let top = if r.is_finite() { r * (1.0 - 1.0 / 64.0) } else { 40.0 };
            let mut prev = Float::with_val(256, -1);
            for i in 1..=100 {
                let t = top * i as f64 / 100.0;
                let m = e.mean(t).unwrap();
                assert!(m > prev, "{name} at {t}");
                assert!(m <= e.variance(t).unwrap(), "{name} at {t}");
                prev = m;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn characteristic_function_bounded(idx in 0usize..12, u in 0.05f64..0.95, theta in -3.14f64..3.14) {
            let name = BUILTINS[idx];
            let e = ev(name);
            let r = e.radius().to_f64();
            let t = if r.is_finite() { r * u } else { 20.0 * u };
            let k = e.theta_kernel(t).unwrap();
            prop_assert!(k.char_fn(theta).norm() <= 1.0 + 1e-12);
            prop_assert!(k.re_delta(theta) <= 0.0);
            prop_assert!((k.normalized_char(theta).norm() - k.char_fn(theta / k.sigma).norm()).abs() < 1e-9);
        }

        #[test]
        fn log_f_monotone(idx in 0usize..12, u in 0.05f64..0.9, v in 0.0001f64..0.05) {
            let e = ev(BUILTINS[idx]);
            let r = e.radius().to_f64();
            let (a, b) = if r.is_finite() { (r * u, r * (u + v)) } else { (10.0 * u, 10.0 * (u + v)) };
            prop_assert!(e.log_f(a).unwrap() < e.log_f(b).unwrap());
        }
    }
}
