//! Saddle radius m(tₙ) = n and the coefficient estimates built on it.

use std::f64::consts::PI;

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::Serialize;

use crate::admissibility::{TrendReport, TrendRule, TrendVerdict};
use crate::error::{Error, Result};
use crate::family::FamilyEvaluator;
use crate::number_theory::{exact_count, CountKind, DEFAULT_BUDGET};
use crate::series::{exp_series, fmt_float, Provenance, Radius};

pub const MAX_ITERATIONS: usize = 200;
const PROBE_STEPS: i32 = 40;
const STALL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleMode {
    ExactSaddle,
    BaezDuarte,
}

#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub n: u64,
    pub t: Float,
    pub m_at_t: Float,
    pub sigma_at_t: Float,
    pub log_f_at_t: Float,
    pub residual: Float,
    pub mode: SaddleMode,
    pub iterations: usize,
}

impl SaddleSolution {
    fn at(ev: &FamilyEvaluator, n: u64, t: Float, mode: SaddleMode, iterations: usize) -> Result<Self> {
        let s = ev.sums(&t)?;
        let residual = Float::with_val(ev.precision(), &s.s1 - n).abs();
        Ok(SaddleSolution {
            n,
            m_at_t: s.s1.clone(),
            sigma_at_t: Float::with_val(ev.precision(), s.s2.sqrt_ref()),
            log_f_at_t: s.g.clone(),
            residual,
            t,
            mode,
            iterations,
        })
    }
}

/// Mean and variance at t, bundled for the solver.
fn moments(ev: &FamilyEvaluator, t: &Float) -> Result<(Float, Float)> {
    let s = ev.sums(t)?;
    Ok((s.s1.clone(), s.s2.clone()))
}

/// Find t with m(t) = target; `n` labels errors.
fn solve_mean(ev: &FamilyEvaluator, target: &Float, n: u64) -> Result<(Float, usize)> {
    let p = ev.precision();
    if *target <= 0 {
        return Err(Error::InvalidParameter { name: "n".into(), reason: "must be positive".into() });
    }
    let radius = ev.radius().clone();
    let mut hi = match &radius {
        Radius::Finite(r) => Float::with_val(p, r / 2u32),
        Radius::Infinite => Float::with_val(p, 1),
    };
    let mut lo = Float::new(p);
    let (mut m_hi, _) = moments(ev, &hi)?;
    // shrink until the bracket's lower end sits below the target
    if m_hi > *target {
        loop {
            let cand = Float::with_val(p, &hi / 2u32);
            let (m, _) = moments(ev, &cand)?;
            if m < *target {
                lo = cand;
                break;
            }
            hi = cand;
            if hi < 1e-60 {
                return Err(Error::NoConvergence { n, iterations: 0 });
            }
        }
    } else {
        let mut k = 0;
        while m_hi < *target {
            k += 1;
            let next = match &radius {
                Radius::Finite(r) => Float::with_val(p, &hi + r) / 2u32,
                Radius::Infinite => Float::with_val(p, &hi * 2u32),
            };
            let stalled = |m: &Float| Error::MeanBounded { n, ceiling: fmt_float(m, 12) };
            if k > PROBE_STEPS {
                return Err(stalled(&m_hi));
            }
            let m_next = match moments(ev, &next) {
                Ok((m, _)) => m,
                // the probe cannot get closer to the radius within the term budget
                Err(Error::TruncationInsufficient { .. }) => return Err(stalled(&m_hi)),
                Err(e) => return Err(e),
            };
            let gain = Float::with_val(p, &m_next - &m_hi) / &m_hi;
            if gain.to_f64() < STALL && m_next < *target {
                return Err(stalled(&m_next));
            }
            lo = hi;
            hi = next;
            m_hi = m_next;
        }
    }
    for _ in 0..10 {
        let mid = Float::with_val(p, &lo + &hi) / 2u32;
        let (m, _) = moments(ev, &mid)?;
        if m < *target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tol = Float::with_val(p, target * 1e-20f64);
    let mut t = Float::with_val(p, &lo + &hi) / 2u32;
    for it in 1..=MAX_ITERATIONS {
        let (m, var) = moments(ev, &t)?;
        let diff = Float::with_val(p, &m - target);
        if Float::with_val(p, diff.abs_ref()) <= tol {
            return Ok((t, it));
        }
        if diff < 0 {
            lo = t.clone();
        } else {
            hi = t.clone();
        }
        // m′(t) = σ²(t)/t
        let step = Float::with_val(p, &diff * &t) / &var;
        let mut next = Float::with_val(p, &t - &step);
        if next <= lo || next >= hi {
            next = Float::with_val(p, &lo + &hi) / 2u32;
        }
        if next == t {
            return Ok((t, it));
        }
        t = next;
    }
    Err(Error::NoConvergence { n, iterations: MAX_ITERATIONS })
}

/// The saddle radius tₙ with m(tₙ) = n.
pub fn solve_saddle(ev: &FamilyEvaluator, n: u64) -> Result<SaddleSolution> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n".into(), reason: "must be at least 1".into() });
    }
    let target = Float::with_val(ev.precision(), n);
    let (t, it) = solve_mean(ev, &target, n)?;
    SaddleSolution::at(ev, n, t, SaddleMode::ExactSaddle, it)
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Exact coefficients of f = e^g for series where they can be computed independently.
#[derive(Clone, Debug)]
pub enum Oracle {
    Count(CountKind),
    /// Bell(n)/n!.
    Bell,
    /// Exact exponential recurrence on the series' own coefficients.
    Recurrence,
}

/// Largest n for which the generic exact recurrence is attempted.
pub const RECURRENCE_LIMIT: u64 = 3000;

impl Oracle {
    pub fn for_series(ev: &FamilyEvaluator) -> Option<Oracle> {
        let g = ev.series();
        if let Provenance::Builtin { name, params } = g.provenance() {
            if params.is_empty() {
                match name.as_str() {
                    "partitions" => return Some(Oracle::Count(CountKind::Partitions)),
                    "distinct_parts" => return Some(Oracle::Count(CountKind::DistinctParts)),
                    "plane_partitions" => return Some(Oracle::Count(CountKind::PlanePartitions)),
                    "sets_of_sets" => return Some(Oracle::Bell),
                    _ => {}
                }
            }
        }
        let b0_zero = g.coeff(0).is_some_and(|c| c.is_zero());
        (b0_zero && g.is_exact() && (g.source().is_some() || g.is_polynomial())).then_some(Oracle::Recurrence)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Oracle::Count(k) => k.name(),
            Oracle::Bell => "bell",
            Oracle::Recurrence => "exp_recurrence",
        }
    }

    /// log aₙ, or None when aₙ = 0 or the oracle cannot reach n.
    pub fn log_coefficient(&self, ev: &FamilyEvaluator, n: u64, budget: u64) -> Result<Option<Float>> {
        let p = ev.precision() + 64;
        let ln = |x: &Integer| Float::with_val(p, x).ln();
        let v = match self {
            Oracle::Count(k) => {
                let c = exact_count(k, n, budget)?;
                if c == 0 { return Ok(None) }
                ln(&c)
            }
            Oracle::Bell => {
                let c = exact_count(&CountKind::Bell, n, budget)?;
                ln(&c) - Float::with_val(p, n + 1).ln_gamma()
            }
            Oracle::Recurrence => {
                if n > RECURRENCE_LIMIT {
                    return Ok(None);
                }
                let g = ev.series().extend(n as usize)?;
                let a = exp_series(&g)?.exact(n as usize).expect("exact");
                if a == 0 {
                    return Ok(None);
                }
                let (num, den) = a.into_numer_denom();
                ln(&num) - ln(&den)
            }
        };
        // e^{b₀} factor when the series carries a constant term
        let b0 = ev.series().coeff(0).map(|c| c.to_float(p)).unwrap_or_else(|| Float::new(p));
        Ok(Some(v + b0))
    }
}

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct EstimateComparison {
    pub n: u64,
    pub t: f64,
    pub log_estimate: f64,
    /// Same formula with σ̃ in place of σ, when the scheme supplies one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_estimate_sigma_tilde: Option<f64>,
    pub log_exact: Option<f64>,
    pub log_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_ratio_sigma_tilde: Option<f64>,
    pub scheme: String,
}

impl EstimateComparison {
    pub fn ratio(&self) -> Option<f64> {
        self.log_ratio.map(f64::exp)
    }
}

/// log f(t) − n log t − log(√(2π) σ).
fn log_formula(log_f: &Float, t: &Float, n: u64, sigma: &Float) -> Float {
    let p = t.prec();
    let mut v = Float::with_val(p, log_f - Float::with_val(p, t.ln_ref()) * n);
    v -= Float::with_val(p, sigma * (2.0 * PI).sqrt()).ln();
    v
}

fn compare(
    ev: &FamilyEvaluator,
    n: u64,
    t: &Float,
    est: Float,
    est_tilde: Option<Float>,
    scheme: String,
    oracle: Option<&Oracle>,
    budget: u64,
) -> Result<EstimateComparison> {
    let exact = match oracle {
        Some(o) => o.log_coefficient(ev, n, budget)?,
        None => None,
    };
    let diff = |e: &Float| exact.as_ref().map(|x| Float::with_val(e.prec(), e - x).to_f64());
    Ok(EstimateComparison {
        n,
        t: t.to_f64(),
        log_ratio: diff(&est),
        log_ratio_sigma_tilde: est_tilde.as_ref().and_then(diff),
        log_estimate: est.to_f64(),
        log_estimate_sigma_tilde: est_tilde.map(|e| e.to_f64()),
        log_exact: exact.map(|x| x.to_f64()),
        scheme,
    })
}

/// Hayman's formula at the saddle radius, compared with the series' oracle when one exists.
pub fn hayman_estimate(ev: &FamilyEvaluator, n: u64) -> Result<EstimateComparison> {
    hayman_estimate_with(ev, n, Oracle::for_series(ev).as_ref(), DEFAULT_BUDGET)
}

pub fn hayman_estimate_with(
    ev: &FamilyEvaluator,
    n: u64,
    oracle: Option<&Oracle>,
    budget: u64,
) -> Result<EstimateComparison> {
    let s = solve_saddle(ev, n)?;
    let est = log_formula(&s.log_f_at_t, &s.t, n, &s.sigma_at_t);
    compare(ev, n, &s.t, est, None, "saddle".into(), oracle, budget)
}

/// A closed-form stand-in m̃ for the mean with an explicit inverse.
pub trait ApproxScheme: Send + Sync {
    fn name(&self) -> String;
    fn m_tilde(&self, ev: &FamilyEvaluator, t: &Float) -> Result<Float>;
    fn sigma_tilde(&self, _ev: &FamilyEvaluator, _t: &Float) -> Option<Float> {
        None
    }
    /// τₙ with m̃(τₙ) = n.
    fn inverse(&self, ev: &FamilyEvaluator, n: u64) -> Result<Float>;
}

/// m̃ = m; τₙ is the saddle radius itself.
#[derive(Clone, Debug)]
pub struct Identity;

impl ApproxScheme for Identity {
    fn name(&self) -> String {
        "identity".into()
    }
    fn m_tilde(&self, ev: &FamilyEvaluator, t: &Float) -> Result<Float> {
        ev.mean(t)
    }
    fn inverse(&self, ev: &FamilyEvaluator, n: u64) -> Result<Float> {
        Ok(solve_saddle(ev, n)?.t)
    }
}

/// With t = R e^{−s}: m̃ = A/s^p, σ̃² = pA/s^{p+1}, τₙ = R e^{−(A/n)^{1/p}}.
#[derive(Clone, Debug)]
pub struct PowerOfLog {
    pub a: f64,
    pub p: f64,
    pub label: String,
}

impl PowerOfLog {
    /// The scheme for partitions: A = ζ(2), p = 2.
    pub fn euler_partitions() -> PowerOfLog {
        PowerOfLog { a: PI * PI / 6.0, p: 2.0, label: "euler".into() }
    }

    fn s_of(&self, ev: &FamilyEvaluator, t: &Float) -> Result<Float> {
        let r = ev.radius().value().ok_or_else(|| Error::Inapplicable("scheme needs a finite radius".into()))?;
        let q = Float::with_val(ev.precision(), t / r);
        Ok(-q.ln())
    }
}

impl ApproxScheme for PowerOfLog {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn m_tilde(&self, ev: &FamilyEvaluator, t: &Float) -> Result<Float> {
        let s = self.s_of(ev, t)?;
        let prec = ev.precision();
        Ok(Float::with_val(prec, self.a) / s.pow(Float::with_val(prec, self.p)))
    }
    fn sigma_tilde(&self, ev: &FamilyEvaluator, t: &Float) -> Option<Float> {
        let s = self.s_of(ev, t).ok()?;
        let prec = ev.precision();
        let var = Float::with_val(prec, self.p * self.a) / s.pow(Float::with_val(prec, self.p + 1.0));
        Some(var.sqrt())
    }
    fn inverse(&self, ev: &FamilyEvaluator, n: u64) -> Result<Float> {
        if n == 0 {
            return Err(Error::SchemeUndefined(n));
        }
        let prec = ev.precision();
        let r = ev.radius().value().ok_or(Error::SchemeUndefined(n))?;
        let s = (Float::with_val(prec, self.a) / n).pow(Float::with_val(prec, 1.0 / self.p));
        Ok(Float::with_val(prec, r) * (-s).exp())
    }
}

/// m̃ = c·m; τₙ solves m(τ) = n/c.
#[derive(Clone, Debug)]
pub struct ScaledMean(pub f64);

impl ApproxScheme for ScaledMean {
    fn name(&self) -> String {
        format!("scaled_mean:{}", self.0)
    }
    fn m_tilde(&self, ev: &FamilyEvaluator, t: &Float) -> Result<Float> {
        Ok(ev.mean(t)? * self.0)
    }
    fn inverse(&self, ev: &FamilyEvaluator, n: u64) -> Result<Float> {
        if !(self.0 > 0.0) || n == 0 {
            return Err(Error::SchemeUndefined(n));
        }
        let target = Float::with_val(ev.precision(), n) / self.0;
        Ok(solve_mean(ev, &target, n)?.0)
    }
}

/// Scheme by name: `identity`, `euler`, `power_of_log:A:p` or `scaled_mean:c`.
pub fn scheme_by_name(name: &str) -> Result<Box<dyn ApproxScheme>> {
    let parts: Vec<&str> = name.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}` in scheme `{name}`")));
    match parts.as_slice() {
        ["identity"] | ["saddle"] => Ok(Box::new(Identity)),
        ["euler"] => Ok(Box::new(PowerOfLog::euler_partitions())),
        ["power_of_log", a, p] => Ok(Box::new(PowerOfLog { a: num(a)?, p: num(p)?, label: name.into() })),
        ["scaled_mean", c] => Ok(Box::new(ScaledMean(num(c)?))),
        _ => Err(Error::Usage(format!("unknown scheme `{name}`"))),
    }
}

/// The coefficient formula evaluated at τₙ = scheme⁻¹(n), with σ and (if given) σ̃.
pub fn baez_duarte_estimate(ev: &FamilyEvaluator, scheme: &dyn ApproxScheme, n: u64) -> Result<EstimateComparison> {
    baez_duarte_estimate_with(ev, scheme, n, Oracle::for_series(ev).as_ref(), DEFAULT_BUDGET)
}

pub fn baez_duarte_estimate_with(
    ev: &FamilyEvaluator,
    scheme: &dyn ApproxScheme,
    n: u64,
    oracle: Option<&Oracle>,
    budget: u64,
) -> Result<EstimateComparison> {
    let tau = scheme.inverse(ev, n)?;
    if !ev.radius().contains(&tau) {
        return Err(Error::SchemeUndefined(n));
    }
    let s = ev.sums(&tau)?;
    let sigma = Float::with_val(ev.precision(), s.s2.sqrt_ref());
    let est = log_formula(&s.g, &tau, n, &sigma);
    let est_tilde = scheme.sigma_tilde(ev, &tau).map(|st| log_formula(&s.g, &tau, n, &st));
    compare(ev, n, &tau, est, est_tilde, scheme.name(), oracle, budget)
}

/// log p̃(n) = π√(2n/3) − log(4√3 n).
pub fn hardy_ramanujan(n: u64) -> f64 {
    let x = n as f64;
    PI * (2.0 * x / 3.0).sqrt() - (4.0 * 3f64.sqrt() * x).ln()
}

/// |m(t) − m̃(t)|/σ(t) along the grid.
pub fn scheme_condition_check(
    ev: &FamilyEvaluator,
    scheme: &dyn ApproxScheme,
    grid: &[Float],
    rule: &TrendRule,
) -> TrendReport {
    let values: Vec<Option<f64>> = grid
        .iter()
        .map(|t| {
            let s = ev.sums(t).ok()?;
            let mt = scheme.m_tilde(ev, t).ok()?;
            let gap = Float::with_val(ev.precision(), &s.s1 - &mt).abs();
            Some((gap / Float::with_val(ev.precision(), s.s2.sqrt_ref())).to_f64())
        })
        .collect();
    let grid_f: Vec<f64> = grid.iter().map(Float::to_f64).collect();
    let mut r = TrendReport::new("abs_mean_gap_over_sigma", grid_f, values, rule);
    if !r.values.is_empty() && r.values.iter().all(|v| *v == Some(0.0)) {
        r.verdict = TrendVerdict::ToZero;
        r.notes.push("identically zero".into());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::approach_grid;
    use crate::series::{builtin, Params};
    use approx::assert_relative_eq;
    use rug::Rational;

    fn ev(name: &str) -> FamilyEvaluator {
        FamilyEvaluator::new(builtin(name, &Params::new(), 64).unwrap())
    }

    fn mono(k: usize) -> FamilyEvaluator {
        FamilyEvaluator::new(builtin("monomial", &[("k".to_string(), k.to_string())].into(), 8).unwrap())
    }

    /// t with t·e^t = 5 by plain bisection in f64.
    fn bisect_te_t(n: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, n);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < n { lo = mid } else { hi = mid }
        }
        lo
    }

    #[test]
    fn saddle_examples() {
        let s = solve_saddle(&mono(1), 7).unwrap();
        assert_relative_eq!(s.t.to_f64(), 7.0, max_relative = 1e-15);
        let s = solve_saddle(&ev("sets_of_sets"), 5).unwrap();
        assert_relative_eq!(s.t.to_f64(), bisect_te_t(5.0), max_relative = 1e-14);
        assert_relative_eq!(s.t.to_f64(), 1.326724665242200, max_relative = 1e-12);
        let s = solve_saddle(&ev("cycles"), 9).unwrap();
        assert_relative_eq!(s.t.to_f64(), 0.9, max_relative = 1e-15);
        assert!(s.residual <= 9e-20);
        assert_eq!(s.mode, SaddleMode::ExactSaddle);
    }

    #[test]
    fn saddle_is_monotone_in_n() {
        let e = ev("partitions");
        let ts: Vec<f64> = (1..30).map(|n| solve_saddle(&e, n).unwrap().t.to_f64()).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn saddle_rejects_zero() {
        assert!(matches!(solve_saddle(&mono(1), 0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn stirling() {
        let e = mono(1);
        let c = hayman_estimate(&e, 20).unwrap();
        assert_relative_eq!(c.ratio().unwrap(), 1.004175, epsilon = 2e-6);
        for n in [10u64, 50] {
            let r = hayman_estimate(&e, n).unwrap().ratio().unwrap();
            let n = n as f64;
            assert!((r - 1.0 - 1.0 / (12.0 * n)).abs() < 1.0 / (n * n));
            // second-order correction helps
            assert!((r * (1.0 - 1.0 / (12.0 * n)) - 1.0).abs() < (r - 1.0).abs());
        }
    }

    #[test]
    fn partitions_and_bell_estimates() {
        let r = hayman_estimate(&ev("partitions"), 100).unwrap().ratio().unwrap();
        assert!((0.95..=1.05).contains(&r), "{r}");
        let e = ev("sets_of_sets");
        let lr: Vec<f64> = [10u64, 20, 50].iter().map(|&n| hayman_estimate(&e, n).unwrap().log_ratio.unwrap().abs()).collect();
        assert!(lr[0] > lr[1] && lr[1] > lr[2] && lr[2] < 0.1, "{lr:?}");
    }

    #[test]
    fn identity_scheme_matches_hayman() {
        let e = ev("partitions");
        let a = hayman_estimate(&e, 60).unwrap();
        let b = baez_duarte_estimate(&e, &Identity, 60).unwrap();
        assert_relative_eq!(a.log_estimate, b.log_estimate, max_relative = 1e-14);
    }

    #[test]
    fn euler_scheme_partitions() {
        let e = ev("partitions");
        let d: Vec<f64> = [100u64, 200, 500]
            .iter()
            .map(|&n| baez_duarte_estimate(&e, &PowerOfLog::euler_partitions(), n).unwrap().log_ratio.unwrap().abs())
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2] && d[2] < 0.05, "{d:?}");
    }

    #[test]
    fn scheme_conditions() {
        let e = ev("partitions");
        let grid = approach_grid(&Radius::one(), 4..=10, 256);
        let rule = TrendRule::default();
        assert_eq!(scheme_condition_check(&e, &Identity, &grid, &rule).verdict, TrendVerdict::ToZero);
        let r = scheme_condition_check(&e, &PowerOfLog::euler_partitions(), &grid, &rule);
        assert!(r.strictly_decreasing(), "{:?}", r.values);
        let r = scheme_condition_check(&e, &ScaledMean(2.0), &grid, &rule);
        assert_eq!(r.verdict, TrendVerdict::Increasing);
        assert!(r.present().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn hardy_ramanujan_values() {
        let p100 = 190569292f64;
        let r = (hardy_ramanujan(100) - p100.ln()).exp();
        assert!((1.03..=1.06).contains(&r), "{r}");
        assert!(hardy_ramanujan(1).is_finite());
    }

    #[test]
    fn rescaling_shifts_estimate() {
        let g = builtin("partitions", &Params::new(), 64).unwrap();
        let h = g.scaled(&Rational::from((1, 3))).unwrap();
        let a = hayman_estimate(&FamilyEvaluator::new(g), 80).unwrap();
        let b = hayman_estimate(&FamilyEvaluator::new(h), 80).unwrap();
        assert_relative_eq!(b.log_estimate, a.log_estimate - 80.0 * 3f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn bounded_mean_detected() {
        let e = FamilyEvaluator::with_options(
            builtin("rooted_trees", &Params::new(), 64).unwrap(),
            256,
            crate::family::TailPolicy { max_terms: 1 << 14, ..Default::default() },
        );
        assert!(solve_saddle(&e, 2).is_ok());
        assert!(matches!(solve_saddle(&e, 10_000), Err(Error::MeanBounded { .. })));
    }
}
