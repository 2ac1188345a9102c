//! Hayman-class checks: growth envelopes, the two quasi-criteria, the gcd rule for
//! polynomials, and the arc / local-limit diagnostics behind them.

use std::f64::consts::PI;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyEvaluator;
use crate::series::{fmt_float, CoefficientSeries, Radius};

pub const REPORT_VERSION: u32 = 1;

/// Slack when comparing a fitted exponent with −1.
pub const EXPONENT_TOL: f64 = 0.01;

// ---------------------------------------------------------------------------
// Trend rule
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrendRule {
    /// How many trailing grid points must be strictly monotone.
    pub tail_points: usize,
    /// final/initial must exceed this (or fall below its inverse) for a limit verdict.
    pub ratio: f64,
}

impl Default for TrendRule {
    fn default() -> Self {
        TrendRule { tail_points: 5, ratio: 1e3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendVerdict {
    ToZero,
    ToInfinity,
    /// Monotone decreasing tail, but the ratio threshold is not reached on this grid.
    Decreasing,
    Increasing,
    NoTrend,
}

impl TrendRule {
    pub fn classify(&self, values: &[f64]) -> TrendVerdict {
        let n = values.len();
        if n < 2 || values.iter().any(|v| !v.is_finite()) {
            return TrendVerdict::NoTrend;
        }
        let k = self.tail_points.min(n).max(2);
        let tail = &values[n - k..];
        let ratio = values[n - 1] / values[0];
        if tail.windows(2).all(|w| w[1] < w[0]) {
            if ratio.abs() < 1.0 / self.ratio {
                TrendVerdict::ToZero
            } else {
                TrendVerdict::Decreasing
            }
        } else if tail.windows(2).all(|w| w[1] > w[0]) {
            if ratio.abs() > self.ratio {
                TrendVerdict::ToInfinity
            } else {
                TrendVerdict::Increasing
            }
        } else {
            TrendVerdict::NoTrend
        }
    }
}

/// A quantity sampled along a grid approaching the radius, with its trend verdict.
#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    pub quantity: String,
    pub grid: Vec<f64>,
    pub values: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Vec<Option<f64>>>,
    pub final_over_initial: Option<f64>,
    pub verdict: TrendVerdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl TrendReport {
    pub fn new(quantity: &str, grid: Vec<f64>, values: Vec<Option<f64>>, rule: &TrendRule) -> TrendReport {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let mut notes = Vec::new();
        if present.len() < values.len() {
            notes.push(format!("{} of {} grid points unavailable", values.len() - present.len(), values.len()));
        }
        let final_over_initial = (present.len() >= 2).then(|| present[present.len() - 1] / present[0]);
        TrendReport {
            quantity: quantity.into(),
            grid,
            verdict: rule.classify(&present),
            values,
            argmax: None,
            final_over_initial,
            notes,
        }
    }

    /// The available values, in grid order.
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.values.iter().all(Option::is_some) && self.present().windows(2).all(|w| w[1] < w[0])
    }
}

// ---------------------------------------------------------------------------
// Growth envelopes
// ---------------------------------------------------------------------------

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Indices of the lower convex hull of points sorted by x.
fn lower_hull(x: &[f64], y: &[f64]) -> Vec<usize> {
    let mut st: Vec<usize> = Vec::new();
    for i in 0..x.len() {
        while st.len() >= 2 {
            let (o, a) = (st[st.len() - 2], st[st.len() - 1]);
            if cross((x[o], y[o]), (x[a], y[a]), (x[i], y[i])) <= 0.0 {
                st.pop();
            } else {
                break;
            }
        }
        st.push(i);
    }
    st
}

/// The hull polyline evaluated at every x.
fn hull_values(x: &[f64], y: &[f64], hull: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut seg = 0;
    for &xi in x {
        while seg + 2 < hull.len() && x[hull[seg + 1]] < xi {
            seg += 1;
        }
        if hull.len() == 1 {
            out.push(y[hull[0]]);
            continue;
        }
        let (a, b) = (hull[seg], hull[seg + 1]);
        let w = (xi - x[a]) / (x[b] - x[a]);
        out.push(y[a] + w * (y[b] - y[a]));
    }
    out
}

fn lsq_slope(x: &[f64], v: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(v) {
        sxy += (a - mx) * (b - mv);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Least-squares slopes of the lower convex and upper concave envelopes of (x, y).
pub fn envelope_slopes(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lo = hull_values(x, y, &lower_hull(x, y));
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let hi: Vec<f64> = hull_values(x, &neg, &lower_hull(x, &neg)).into_iter().map(|v| -v).collect();
    let (a, b) = (lsq_slope(x, &lo), lsq_slope(x, &hi));
    if a > b {
        let m = 0.5 * (a + b);
        (m, m)
    } else {
        (a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScale {
    /// b_n against B βⁿ/n!.
    Exponential,
    /// b_n against B n^β/Rⁿ.
    Geometric,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub scale: FitScale,
    pub window: [usize; 2],
    pub beta_hat: f64,
    pub lambda_hat: f64,
    #[serde(rename = "B_hat")]
    pub b_hat: f64,
    #[serde(rename = "L_hat")]
    pub l_hat: f64,
    /// Widest gap, in log scale, between a fitted bound and the data over the window.
    pub residual: f64,
    pub margin: f64,
    pub half_window: [usize; 2],
    pub half_beta_hat: f64,
    pub half_lambda_hat: f64,
    pub half_margin: f64,
    pub stable: bool,
}

impl GrowthFit {
    /// Open interval of admissible cut exponents α, if nonempty.
    pub fn cut_window(&self) -> Option<(f64, f64)> {
        let (lo, hi) = match self.scale {
            FitScale::Exponential => (self.lambda_hat / 3.0, self.beta_hat / 2.0),
            FitScale::Geometric => (self.lambda_hat / 3.0 + 4.0 / 3.0, self.beta_hat / 2.0 + 1.5),
        };
        (lo < hi).then_some((lo, hi))
    }
}

fn margin(scale: FitScale, beta: f64, lambda: f64) -> f64 {
    match scale {
        FitScale::Exponential => 3.0 * beta - 2.0 * lambda,
        FitScale::Geometric => 3.0 * beta + 1.0 - 2.0 * lambda,
    }
}

/// Default fitting window [N/4, N] for truncation N.
pub fn default_window(n: usize) -> (usize, usize) {
    ((n / 4).max(1), n)
}

fn fit_growth(g: &CoefficientSeries, window: (usize, usize), scale: FitScale) -> Result<GrowthFit> {
    let (lo, hi) = window;
    if lo < 1 || hi < lo + 8 {
        return Err(Error::BadWindow { lo, hi, n: g.truncation_order() });
    }
    let prec = 192;
    let b = g
        .float_range(lo, hi + 1, prec)
        .map_err(|_| Error::BadWindow { lo, hi, n: g.truncation_order() })?;
    if let Some(i) = b.iter().position(|v| v.is_zero()) {
        return Err(Error::Inapplicable(format!("b_{} = 0 inside the window [{lo}, {hi}]", lo + i)));
    }
    let ln_r = match (scale, g.radius()) {
        (FitScale::Geometric, Radius::Finite(r)) => Some(Float::with_val(prec, r.ln_ref())),
        (FitScale::Geometric, Radius::Infinite) => {
            return Err(Error::Inapplicable("geometric scale needs a finite radius".into()))
        }
        _ => None,
    };
    let mut x = Vec::with_capacity(b.len());
    let mut y = Vec::with_capacity(b.len());
    for (i, bn) in b.iter().enumerate() {
        let n = (lo + i) as u64;
        let mut l = Float::with_val(prec, bn.ln_ref());
        match &ln_r {
            Some(lr) => {
                l += Float::with_val(prec, lr * n);
                x.push((n as f64).ln());
            }
            None => {
                l += Float::with_val(prec, n + 1).ln_gamma();
                x.push(n as f64);
            }
        }
        y.push(l.to_f64());
    }
    let to_exponent = |s: f64| match scale {
        FitScale::Exponential => s.exp(),
        FitScale::Geometric => s,
    };
    let (s_lo, s_hi) = envelope_slopes(&x, &y);
    let mid = (hi - lo) / 2;
    let (h_lo, h_hi) = envelope_slopes(&x[mid..], &y[mid..]);
    let (beta, lambda) = (to_exponent(s_lo), to_exponent(s_hi));
    let (hb, hl) = (to_exponent(h_lo), to_exponent(h_hi));
    let log_b = x.iter().zip(&y).map(|(xi, yi)| yi - s_lo * xi).fold(f64::INFINITY, f64::min);
    let log_l = x.iter().zip(&y).map(|(xi, yi)| yi - s_hi * xi).fold(f64::NEG_INFINITY, f64::max);
    let residual = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (log_l + s_hi * xi - yi).max(yi - log_b - s_lo * xi))
        .fold(0.0, f64::max);
    let m = margin(scale, beta, lambda);
    let hm = margin(scale, hb, hl);
    Ok(GrowthFit {
        scale,
        window: [lo, hi],
        beta_hat: beta,
        lambda_hat: lambda,
        b_hat: log_b.exp(),
        l_hat: log_l.exp(),
        residual,
        margin: m,
        half_window: [lo + mid, hi],
        half_beta_hat: hb,
        half_lambda_hat: hl,
        half_margin: hm,
        stable: (m > 0.0) == (hm > 0.0),
    })
}

/// Envelopes of b_n·n! against βⁿ over the window (entire case).
pub fn fit_quasiexponential(g: &CoefficientSeries, window: (usize, usize)) -> Result<GrowthFit> {
    let fit = fit_growth(g, window, FitScale::Exponential)?;
    if !fit.stable {
        return Err(Error::Inapplicable(format!(
            "envelopes unstable: margin {:.4} on the full window, {:.4} on its last half",
            fit.margin, fit.half_margin
        )));
    }
    Ok(fit)
}

/// Envelopes of b_n Rⁿ against n^β over the window (finite radius).
///
/// Both exponents at or below −1 is returned as a fit (the criterion then fails);
/// a lower envelope at −1 under an upper one above it is inapplicable.
pub fn fit_quasigeometric(g: &CoefficientSeries, window: (usize, usize)) -> Result<GrowthFit> {
    let fit = fit_growth(g, window, FitScale::Geometric)?;
    let floor = -1.0 + EXPONENT_TOL;
    if fit.beta_hat <= floor && fit.lambda_hat > floor {
        return Err(Error::Inapplicable(format!(
            "lower envelope β̂ = {:.4} is at or below −1 while λ̂ = {:.4} is above it",
            fit.beta_hat, fit.lambda_hat
        )));
    }
    if fit.beta_hat > floor && !fit.stable {
        return Err(Error::Inapplicable(format!(
            "envelopes unstable: margin {:.4} on the full window, {:.4} on its last half",
            fit.margin, fit.half_margin
        )));
    }
    Ok(fit)
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Hayman,
    FailsHypothesis,
    Inapplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct GcdCheck {
    pub degree: usize,
    pub gcd: u64,
    pub verdict: Verdict,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

pub fn polynomial_gcd_check(g: &CoefficientSeries) -> Result<GcdCheck> {
    let degree = g.polynomial_degree().ok_or(Error::NotPolynomial)?;
    let g = g.extend(degree.max(1))?;
    let q = g.positive_indices().into_iter().fold(0u64, |acc, n| gcd(acc, n as u64));
    let verdict = if q == 1 { Verdict::Hayman } else { Verdict::FailsHypothesis };
    Ok(GcdCheck { degree, gcd: q, verdict })
}

// ---------------------------------------------------------------------------
// Cut function and the ω_g condition
// ---------------------------------------------------------------------------

/// ω_g(t) = (b₁t + 8b₂t² + (9/2)t³g‴(t))/6.
pub fn omega_g(ev: &FamilyEvaluator, t: &Float) -> Result<Float> {
    let s = ev.sums(t)?;
    let p = ev.precision();
    let b1 = ev.series().coeff(1).map(|c| c.to_float(p)).unwrap_or_else(|| Float::new(p));
    let b2 = ev.series().coeff(2).map(|c| c.to_float(p)).unwrap_or_else(|| Float::new(p));
    let mut acc = Float::with_val(p, &b1 * &s.t);
    acc += Float::with_val(p, &b2 * Float::with_val(p, s.t.square_ref())) * 8u32;
    acc += Float::with_val(p, &s.d3 * 4.5f64);
    Ok(acc / 6u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Cut {
    /// h(t) = e^{−αt}
    Exponential { alpha: f64 },
    /// h(t) = (1 − t/R)^α
    Geometric { alpha: f64, radius: f64 },
    /// h(t) = t^{−α}
    Power { alpha: f64 },
}

impl Cut {
    pub fn alpha(&self) -> f64 {
        match *self {
            Cut::Exponential { alpha } | Cut::Geometric { alpha, .. } | Cut::Power { alpha } => alpha,
        }
    }

    /// h(t), capped at π.
    pub fn h(&self, t: f64) -> f64 {
        let v = match *self {
            Cut::Exponential { alpha } => (-alpha * t).exp(),
            Cut::Geometric { alpha, radius } => (1.0 - t / radius).powf(alpha),
            Cut::Power { alpha } => t.powf(-alpha),
        };
        v.min(PI)
    }

    /// The cut form matching a series' radius.
    pub fn for_radius(radius: &Radius, alpha: f64) -> Cut {
        match radius {
            Radius::Infinite => Cut::Exponential { alpha },
            Radius::Finite(r) => Cut::Geometric { alpha, radius: r.to_f64() },
        }
    }
}

fn cut_values(ev: &FamilyEvaluator, cut: &Cut, grid: &[Float]) -> Vec<Option<f64>> {
    grid.par_iter()
        .map(|t| {
            let w = omega_g(ev, t).ok()?.to_f64();
            Some(w * cut.h(t.to_f64()).powi(3))
        })
        .collect()
}

/// ω_g(t)·h(t)³ along the grid, after checking α against the admissible window.
pub fn cut_check(
    ev: &FamilyEvaluator,
    cut: &Cut,
    window: (f64, f64),
    grid: &[Float],
    rule: &TrendRule,
) -> Result<TrendReport> {
    let alpha = cut.alpha();
    if !(alpha > window.0 && alpha < window.1) {
        return Err(Error::CutOutsideWindow { alpha, lo: window.0, hi: window.1 });
    }
    Ok(TrendReport::new("omega_g_h3", grid_f64(grid), cut_values(ev, cut, grid), rule))
}

pub fn grid_f64(grid: &[Float]) -> Vec<f64> {
    grid.iter().map(Float::to_f64).collect()
}

/// t = R(1 − 2^{−k}) for finite R, t = 2^k otherwise.
pub fn approach_grid(radius: &Radius, ks: impl IntoIterator<Item = i32>, prec: u32) -> Vec<Float> {
    ks.into_iter()
        .map(|k| match radius {
            Radius::Finite(r) => {
                let u = Float::with_val(prec, Float::with_val(prec, 2).pow(-k));
                Float::with_val(prec, r * Float::with_val(prec, 1 - u))
            }
            Radius::Infinite => Float::with_val(prec, 2).pow(k),
        })
        .collect()
}

/// The six-point default grid: k = 4..9 toward a finite radius, t = 2^k (k = 3..8) otherwise.
pub fn default_grid(radius: &Radius, prec: u32) -> Vec<Float> {
    match radius {
        Radius::Finite(_) => approach_grid(radius, 4..=9, prec),
        Radius::Infinite => approach_grid(radius, 3..=8, prec),
    }
}

// ---------------------------------------------------------------------------
// Arc diagnostics
// ---------------------------------------------------------------------------

/// Sup of `f` on [a, b]: Chebyshev-spaced coarse pass (plus geometric spacing near a > 0),
/// then golden-section refinement around the best local maxima.
pub fn sup_on_interval<F>(f: F, a: f64, b: f64, points: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(b > a) {
        return (a, f(a));
    }
    let m = points.max(8);
    let mut xs: Vec<f64> = (0..m)
        .map(|i| a + (b - a) * 0.5 * (1.0 - (PI * i as f64 / (m - 1) as f64).cos()))
        .collect();
    if a > 0.0 {
        let q = m / 2;
        xs.extend((0..q).map(|j| a * (b / a).powf(j as f64 / (q - 1) as f64)));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let fs: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let n = xs.len();
    let mut best = (xs[0], fs[0]);
    for i in 0..n {
        if fs[i] > best.1 {
            best = (xs[i], fs[i]);
        }
    }
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || fs[i] >= fs[i - 1]) && (i + 1 == n || fs[i] >= fs[i + 1]))
        .collect();
    peaks.sort_by(|&i, &j| fs[j].total_cmp(&fs[i]).then(i.cmp(&j)));
    peaks.truncate(8);
    let refined: Vec<(f64, f64)> = peaks
        .par_iter()
        .map(|&i| {
            let lo = xs[i.saturating_sub(1)];
            let hi = xs[(i + 1).min(n - 1)];
            golden_max(&f, lo, hi, 60)
        })
        .collect();
    for r in refined {
        if r.1 > best.1 {
            best = r;
        }
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ArcValue {
    pub value: f64,
    pub argmax: f64,
}

/// σ(t)·sup_{h ≤ |θ| ≤ π} |f(te^{iθ})|/f(t).
pub fn minor_arc_diagnostic(ev: &FamilyEvaluator, t: &Float, h: f64, points: usize) -> Result<ArcValue> {
    if !(h > 0.0 && h <= PI) {
        return Err(Error::InvalidParameter { name: "h".into(), reason: format!("{h} not in (0, π]") });
    }
    let k = ev.theta_kernel(t)?;
    let ln_sigma = k.sigma.ln();
    let (theta, v) = sup_on_interval(|th| ln_sigma + k.re_delta(th), h, PI, points);
    Ok(ArcValue { value: v.exp(), argmax: theta })
}

/// sup_{|θ| ≤ hσ} |φ̆(θ)e^{θ²/2} − 1| for the normalised variable.
pub fn major_arc_diagnostic(ev: &FamilyEvaluator, t: &Float, h: f64, points: usize) -> Result<ArcValue> {
    if !(h > 0.0 && h <= PI) {
        return Err(Error::InvalidParameter { name: "h".into(), reason: format!("{h} not in (0, π]") });
    }
    let k = ev.theta_kernel(t)?;
    let (theta, v) = sup_on_interval(|th| k.major_arc_value(th), 0.0, h * k.sigma, points);
    Ok(ArcValue { value: v, argmax: theta })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalLimitValue {
    pub value: f64,
    pub argmax: i64,
    pub range_end: usize,
}

/// sup_n |P(X_t = n)√(2π)σ − e^{−(n−m)²/2σ²}| over n ∈ [−1, m + 12σ].
pub fn central_limit_sup(ev: &FamilyEvaluator, t: &Float) -> Result<LocalLimitValue> {
    let s = ev.sums(t)?;
    let p = ev.precision();
    let m = s.s1.to_f64();
    let var = s.s2.to_f64();
    let sigma = var.sqrt();
    let end_f = (m + 12.0 * sigma).ceil();
    if !(end_f < 1e15) {
        return Err(Error::CoefficientRangeExhausted { needed: usize::MAX, available: 0 });
    }
    let end = end_f as usize;
    let a = ev.f_coefficients(end + 1)?;
    let ln_t = Float::with_val(p, s.t.ln_ref());
    let b0 = ev.series().coeff(0).map(|c| c.to_float(p)).unwrap_or_else(|| Float::new(p));
    let g_rest = Float::with_val(p, &s.g - &b0);
    let scale = (2.0 * PI).sqrt() * sigma;
    let gauss = |n: f64| (-(n - m) * (n - m) / (2.0 * var)).exp();
    let mut best = (-1i64, gauss(-1.0));
    let vals: Vec<f64> = (0..=end)
        .into_par_iter()
        .map(|n| {
            let mass = if a[n].is_zero() {
                0.0
            } else {
                let l = Float::with_val(p, a[n].ln_ref()) + Float::with_val(p, &ln_t * n as u64) - &g_rest;
                l.to_f64().exp()
            };
            (mass * scale - gauss(n as f64)).abs()
        })
        .collect();
    for (n, v) in vals.into_iter().enumerate() {
        if v > best.1 {
            best = (n as i64, v);
        }
    }
    Ok(LocalLimitValue { value: best.1, argmax: best.0, range_end: end })
}

// ---------------------------------------------------------------------------
// Lemma bounds
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    /// Re g(te^{iθ}) − g(t) ≤ B(e^{βt cos θ} − e^{βt})
    Exponential,
    /// Re g(te^{iθ}) − g(t) ≤ B(|1 − ue^{iθ}|^{−β} − (1 − u)^{−β}), u = t/R
    Geometric,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LemmaCheck {
    pub max_violation: f64,
    pub max_relative_violation: f64,
    pub at_t: f64,
    pub at_theta: f64,
    pub certified: bool,
}

pub fn default_theta_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| PI * i as f64 / (points - 1) as f64).collect()
}

/// Largest lhs − rhs of the lemma inequality over the (t, θ) grid.
pub fn lemma_bound_check(
    ev: &FamilyEvaluator,
    kind: LemmaKind,
    b: f64,
    beta: f64,
    t_grid: &[f64],
    thetas: &[f64],
) -> Result<LemmaCheck> {
    let r = ev.radius().to_f64();
    let mut out = LemmaCheck {
        max_violation: f64::NEG_INFINITY,
        max_relative_violation: f64::NEG_INFINITY,
        at_t: f64::NAN,
        at_theta: f64::NAN,
        certified: true,
    };
    for &t in t_grid {
        let k = ev.theta_kernel(t)?;
        let rows: Vec<(f64, f64, f64)> = thetas
            .par_iter()
            .map(|&th| {
                let lhs = k.re_delta(th);
                let s2 = (0.5 * th).sin().powi(2);
                let rhs = match kind {
                    LemmaKind::Exponential => b * (beta * t).exp() * (-2.0 * beta * t * s2).exp_m1(),
                    LemmaKind::Geometric => {
                        let u = t / r;
                        let q = 4.0 * u * s2 / ((1.0 - u) * (1.0 - u));
                        b * (1.0 - u).powf(-beta) * (-0.5 * beta * q.ln_1p()).exp_m1()
                    }
                };
                let scale = lhs.abs().max(rhs.abs());
                let rel = if scale > 0.0 { (lhs - rhs) / scale } else { 0.0 };
                (th, lhs - rhs, rel)
            })
            .collect();
        for (th, v, rel) in rows {
            if v > out.max_violation {
                out.max_violation = v;
                out.at_t = t;
                out.at_theta = th;
            }
            out.max_relative_violation = out.max_relative_violation.max(rel);
        }
    }
    out.certified = out.max_relative_violation <= 1e-12;
    Ok(out)
}

/// B_β with b_n ≥ B n^β ≥ B_β Γ(n+β+1)/(Γ(β+1) n!) for 1 ≤ n ≤ n_max.
pub fn gamma_comparison_constant(b: f64, beta: f64, n_max: usize) -> f64 {
    let lg = |x: f64| Float::with_val(64, x).ln_gamma().to_f64();
    let lg_b1 = lg(beta + 1.0);
    (1..=n_max)
        .map(|n| {
            let n = n as f64;
            (beta * n.ln() + lg_b1 + lg(n + 1.0) - lg(n + beta + 1.0)).exp()
        })
        .fold(f64::INFINITY, f64::min)
        * b
}

// ---------------------------------------------------------------------------
// Full report
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Quasiexponential,
    Quasigeometric,
    PolynomialGcd,
    Inapplicable,
}

#[derive(Clone, Debug)]
pub struct ReportOptions {
    pub window: Option<(usize, usize)>,
    pub grid: Option<Vec<Float>>,
    pub alpha: Option<f64>,
    pub theta_points: usize,
    pub rule: TrendRule,
    pub diagnostics: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { window: None, grid: None, alpha: None, theta_points: 512, rule: TrendRule::default(), diagnostics: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub cut: Cut,
    pub variance: TrendReport,
    pub cut_condition: TrendReport,
    pub minor_arc: TrendReport,
    pub major_arc: TrendReport,
    pub central_limit: TrendReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub report_version: u32,
    pub series: String,
    pub radius: String,
    pub criterion: Criterion,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempted: Option<Criterion>,
    pub fit: Option<GrowthFit>,
    pub margin: Option<f64>,
    pub verdict: Verdict,
    pub cut_exponent_window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<GcdCheck>,
    pub notes: Vec<String>,
    pub diagnostics: Option<Diagnostics>,
}

pub fn full_report(ev: &FamilyEvaluator, opts: &ReportOptions) -> AdmissibilityReport {
    let g = ev.series();
    let mut notes = Vec::new();
    let mut fit = None;
    let mut polynomial = None;
    let mut attempted = None;
    let (criterion, verdict) = if let Some(degree) = g.polynomial_degree() {
        match polynomial_gcd_check(g) {
            Ok(c) => {
                let v = c.verdict;
                if v != Verdict::Hayman {
                    notes.push(format!("positive coefficients sit on multiples of {}", c.gcd));
                }
                polynomial = Some(c);
                (Criterion::PolynomialGcd, v)
            }
            Err(e) => {
                notes.push(format!("degree {degree}: {e}"));
                (Criterion::Inapplicable, Verdict::Inapplicable)
            }
        }
    } else {
        let window = opts.window.unwrap_or_else(|| default_window(g.truncation_order()));
        let (crit, res) = if g.radius().is_finite() {
            (Criterion::Quasigeometric, fit_quasigeometric(g, window))
        } else {
            (Criterion::Quasiexponential, fit_quasiexponential(g, window))
        };
        match res {
            Ok(f) => {
                let v = if crit == Criterion::Quasigeometric && f.beta_hat <= -1.0 + EXPONENT_TOL {
                    notes.push(format!(
                        "fitted exponents β̂ = {:.4}, λ̂ = {:.4} are not above −1",
                        f.beta_hat, f.lambda_hat
                    ));
                    Verdict::FailsHypothesis
                } else if f.margin > 0.0 {
                    Verdict::Hayman
                } else {
                    if f.margin == 0.0 {
                        notes.push("margin is exactly 0; the criterion needs a strict inequality".into());
                    }
                    Verdict::FailsHypothesis
                };
                if crit == Criterion::Quasigeometric {
                    notes.push(
                        "λ̂ is the fitted upper envelope on the window; bounds valid for all n are not certified".into(),
                    );
                }
                fit = Some(f);
                (crit, v)
            }
            Err(e) => {
                attempted = Some(crit);
                notes.push(e.to_string());
                (Criterion::Inapplicable, Verdict::Inapplicable)
            }
        }
    };
    let window = fit.as_ref().and_then(GrowthFit::cut_window);
    let diagnostics = opts.diagnostics.then(|| {
        let cut = match (polynomial.as_ref(), g.radius()) {
            (Some(c), _) => Cut::Power { alpha: opts.alpha.unwrap_or(0.4 * c.degree as f64) },
            (None, r) => {
                let fallback = if r.is_finite() { 17.0 / 12.0 } else { 5.0 / 12.0 };
                let alpha = opts.alpha.or(window.map(|(a, b)| 0.5 * (a + b))).unwrap_or(fallback);
                Cut::for_radius(r, alpha)
            }
        };
        if let (Some((lo, hi)), Some(a)) = (window, opts.alpha) {
            if !(a > lo && a < hi) {
                notes.push(format!("cut exponent {a} lies outside the admissible window ({lo:.4}, {hi:.4})"));
            }
        }
        let grid = opts.grid.clone().unwrap_or_else(|| default_grid(g.radius(), ev.precision()));
        diagnostics(ev, &grid, cut, opts.theta_points, &opts.rule)
    });
    AdmissibilityReport {
        report_version: REPORT_VERSION,
        series: g.provenance().to_string(),
        radius: g.radius().to_string(),
        criterion,
        attempted,
        margin: fit.as_ref().map(|f| f.margin),
        fit,
        verdict,
        cut_exponent_window: window.map(|(a, b)| [a, b]),
        polynomial,
        notes,
        diagnostics,
    }
}

fn diagnostics(ev: &FamilyEvaluator, grid: &[Float], cut: Cut, points: usize, rule: &TrendRule) -> Diagnostics {
    let ts = grid_f64(grid);
    let rows: Vec<_> = grid
        .par_iter()
        .map(|t| {
            let h = cut.h(t.to_f64());
            let var = ev.variance(t).map(|v| v.to_f64());
            let minor = minor_arc_diagnostic(ev, t, h, points);
            let major = major_arc_diagnostic(ev, t, h, points);
            let clt = central_limit_sup(ev, t);
            (var, minor, major, clt)
        })
        .collect();
    let mut notes: [Vec<String>; 4] = Default::default();
    let mut record = |slot: usize, t: &Float, e: &Error| {
        notes[slot].push(format!("t = {}: {e}", fmt_float(t, 17)));
    };
    let mut var = Vec::new();
    let mut minor = Vec::new();
    let mut major = Vec::new();
    let mut clt = Vec::new();
    for (t, (v, mi, ma, c)) in grid.iter().zip(rows) {
        var.push(v.map_err(|e| record(0, t, &e)).ok());
        minor.push(mi.map_err(|e| record(1, t, &e)).ok());
        major.push(ma.map_err(|e| record(2, t, &e)).ok());
        clt.push(c.map_err(|e| record(3, t, &e)).ok());
    }
    let with_argmax = |name: &str, vals: &[Option<ArcValue>], extra: Vec<String>| {
        let mut r = TrendReport::new(name, ts.clone(), vals.iter().map(|v| v.map(|a| a.value)).collect(), rule);
        r.argmax = Some(vals.iter().map(|v| v.map(|a| a.argmax)).collect());
        r.notes.extend(extra);
        r
    };
    let [n_var, n_minor, n_major, n_clt] = notes;
    let mut variance = TrendReport::new("variance", ts.clone(), var, rule);
    variance.notes.extend(n_var);
    let mut central = TrendReport::new("central_limit_sup", ts.clone(), clt.iter().map(|c| c.map(|v| v.value)).collect(), rule);
    central.argmax = Some(clt.iter().map(|c| c.map(|v| v.argmax as f64)).collect());
    central.notes.extend(n_clt);
    Diagnostics {
        cut,
        variance,
        cut_condition: TrendReport::new("omega_g_h3", ts.clone(), cut_values(ev, &cut, grid), rule),
        minor_arc: with_argmax("minor_arc", &minor, n_minor),
        major_arc: with_argmax("major_arc", &major, n_major),
        central_limit: central,
    }
}
