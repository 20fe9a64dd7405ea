//! Preliminary estimators, variance estimators and confidence intervals.
//!
//! Preliminary estimators only look at the (hypothetical) initial samples,
//! which are simple random samples; Rao-Blackwellization then averages them
//! over reorderings consistent with the reduced data.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::netpop::NodeId;

/// Upper end of the population-size search for the M0 estimator.
pub const M0_SEARCH_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn check_overlap(n01: u64, n02: u64, m: u64) -> Result<()> {
    if m > n01.min(n02) {
        return Err(Error::validation(format!("overlap {m} exceeds min({n01}, {n02})")));
    }
    Ok(())
}

/// Bias-adjusted Lincoln-Petersen (Chapman) estimator of N.
pub fn chapman_lp(n01: u64, n02: u64, m: u64) -> Result<f64> {
    check_overlap(n01, n02, m)?;
    Ok(((n01 + 1) * (n02 + 1)) as f64 / (m + 1) as f64 - 1.0)
}

/// Seber's variance estimator for [`chapman_lp`].
pub fn seber_var(n01: u64, n02: u64, m: u64) -> Result<f64> {
    check_overlap(n01, n02, m)?;
    let num = ((n01 + 1) * (n02 + 1) * (n01 - m) * (n02 - m)) as f64;
    let den = ((m + 1) * (m + 1) * (m + 2)) as f64;
    Ok(num / den)
}

/// Mean out-degree over the union of the initial samples.
pub fn avg_outdegree_est(union_degrees: &[u32]) -> Result<f64> {
    if union_degrees.is_empty() {
        return Err(Error::validation("mean out-degree of an empty set"));
    }
    let sum: u64 = union_degrees.iter().map(|&d| u64::from(d)).sum();
    Ok(sum as f64 / union_degrees.len() as f64)
}

/// Without-replacement variance of [`avg_outdegree_est`], with `n_hat` standing
/// in for N in the finite population correction (clamped at zero).
pub fn avg_outdegree_var(union_degrees: &[u32], n_hat: f64) -> Result<f64> {
    let size = union_degrees.len();
    if size < 2 {
        return Err(Error::validation(format!("need at least 2 units for a variance, got {size}")));
    }
    if n_hat.is_nan() || n_hat <= 0.0 {
        return Err(Error::validation(format!("population size estimate {n_hat} must be positive")));
    }
    let mean = avg_outdegree_est(union_degrees)?;
    let ss: f64 = union_degrees.iter().map(|&d| (f64::from(d) - mean).powi(2)).sum();
    let s2 = ss / (size - 1) as f64;
    let fpc = ((n_hat - size as f64) / n_hat).max(0.0);
    Ok(fpc * s2 / size as f64)
}

/// Capture-history summary of K samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaptureSummary {
    pub k: usize,
    /// Units common to the first two samples (0 when K < 2).
    pub overlap_m: u64,
    /// Distinct units M.
    pub distinct: u64,
    /// `freq[j - 1]` = number of units caught exactly j times.
    pub freq: Vec<u64>,
    pub sizes: Vec<u64>,
    pub total_captures: u64,
}

impl CaptureSummary {
    pub fn from_samples<S: AsRef<[NodeId]>>(samples: &[S]) -> Self {
        let tagged: Vec<Vec<(NodeId, u32)>> =
            samples.iter().map(|s| s.as_ref().iter().map(|&u| (u, 0)).collect()).collect();
        InitialSamples::new(&tagged).summary
    }

    /// f_j, 1-based.
    pub fn f(&self, j: usize) -> u64 {
        self.freq.get(j.wrapping_sub(1)).copied().unwrap_or(0)
    }

    pub fn check(&self) -> Result<()> {
        let m: u64 = self.freq.iter().sum();
        let caps: u64 = self.freq.iter().enumerate().map(|(j, f)| (j as u64 + 1) * f).sum();
        if m != self.distinct || caps != self.total_captures {
            return Err(Error::Internal("capture frequencies inconsistent".into()));
        }
        Ok(())
    }
}

/// Chao's lower-bound estimator, with the bias-corrected form when f2 = 0.
pub fn chao_lb(s: &CaptureSummary) -> f64 {
    let (f1, f2) = (s.f(1) as f64, s.f(2) as f64);
    let m = s.distinct as f64;
    if f2 > 0.0 {
        m + f1 * f1 / (2.0 * f2)
    } else {
        m + f1 * (f1 - 1.0) / 2.0
    }
}

/// Variance estimator for [`chao_lb`].
pub fn chao_lb_var(s: &CaptureSummary) -> f64 {
    let (f1, f2) = (s.f(1) as f64, s.f(2) as f64);
    if f2 > 0.0 {
        let r = f1 / f2;
        f2 * (r.powi(4) / 4.0 + r.powi(3) + r.powi(2) / 2.0)
    } else if f1 > 0.0 {
        let n_hat = chao_lb(s);
        let v = f1 * (f1 - 1.0) / 2.0 + f1 * (2.0 * f1 - 1.0).powi(2) / 4.0 - f1.powi(4) / (4.0 * n_hat);
        v.max(0.0)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct M0Fit {
    /// Maximizing N, or `f64::INFINITY` when no finite maximum exists.
    pub n_hat: f64,
    pub finite: bool,
}

/// n·ln p + (KN − n)·ln(1 − p) with p = n / (KN).
fn m0_binomial_part(n: f64, kn: f64) -> f64 {
    let p = n / kn;
    let rest = kn - n;
    let tail = if rest > 0.0 { rest * (-p).ln_1p() } else { 0.0 };
    n * p.ln() + tail
}

/// ℓ(N+1) − ℓ(N) for the M0 profile log-likelihood.
fn m0_step(n: u64, distinct: u64, k: usize) -> impl Fn(u64) -> f64 {
    let (nf, kf, mf) = (n as f64, k as f64, distinct as f64);
    move |big_n: u64| {
        let x = big_n as f64;
        ((x + 1.0) / (x + 1.0 - mf)).ln() + m0_binomial_part(nf, kf * (x + 1.0)) - m0_binomial_part(nf, kf * x)
    }
}

/// Maximum-likelihood N under model M0 (equal catchability for everyone on
/// every occasion), found by bisection on the sign of the discrete profile
/// log-likelihood differences over `[M, M0_SEARCH_CAP]`.
pub fn m0_mle(s: &CaptureSummary) -> Result<M0Fit> {
    if s.k < 2 {
        return Err(Error::validation("M0 estimator needs at least two samples"));
    }
    if s.distinct == 0 {
        return Err(Error::validation("M0 estimator needs at least one capture"));
    }
    if s.total_captures == s.distinct {
        return Ok(M0Fit { n_hat: f64::INFINITY, finite: false });
    }
    let step = m0_step(s.total_captures, s.distinct, s.k);
    // first N with ℓ(N+1) <= ℓ(N)
    let (mut lo, mut hi) = (s.distinct, M0_SEARCH_CAP);
    if step(hi) > 0.0 {
        return Ok(M0Fit { n_hat: f64::INFINITY, finite: false });
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if step(mid) > 0.0 {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    Ok(M0Fit { n_hat: lo as f64, finite: true })
}

/// Asymptotic variance of the M0 estimator at `n_hat`.
pub fn m0_var(s: &CaptureSummary, n_hat: f64) -> f64 {
    if !n_hat.is_finite() {
        return f64::INFINITY;
    }
    let k = s.k as f64;
    let p = s.total_captures as f64 / (k * n_hat);
    if p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    let den = q.powf(-k) - k / q + k - 1.0;
    if den > 0.0 {
        n_hat / den
    } else {
        f64::INFINITY
    }
}

/// Rao-Blackwell variance estimate E[v̂ | d_r] − Var[θ̂ | d_r] for a discrete
/// conditional distribution. Falls back to E[v̂ | d_r] (flag set) when the
/// difference is negative.
pub fn rb_variance(points: &[f64], var_ests: &[f64], weights: &[f64]) -> Result<(f64, bool)> {
    if points.len() != var_ests.len() || points.len() != weights.len() {
        return Err(Error::validation("points, variances and weights differ in length"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("weights sum to {total}, not 1")));
    }
    let mean: f64 = points.iter().zip(weights).map(|(p, w)| p * w).sum();
    let expected_var: f64 = var_ests.iter().zip(weights).map(|(v, w)| v * w).sum();
    let spread: f64 = points.iter().zip(weights).map(|(p, w)| w * (p - mean).powi(2)).sum();
    Ok(resolve_rb_variance(expected_var, spread))
}

pub(crate) fn resolve_rb_variance(expected_var: f64, spread: f64) -> (f64, bool) {
    let v = expected_var - spread;
    if v < 0.0 {
        (expected_var, true)
    } else {
        (v, false)
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn two_sided_z(level: f64) -> f64 {
    normal_quantile((1.0 + level) / 2.0)
}

/// Normal-theory interval point ± z·√var.
pub fn ci_clt(point: f64, var_est: f64, level: f64) -> Interval {
    let half = two_sided_z(level) * var_est.max(0.0).sqrt();
    Interval { lo: point - half, hi: point + half }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogInterval {
    pub interval: Interval,
    /// The point estimate did not exceed the observed count.
    pub degenerate: bool,
}

/// Log-transformed interval for a population size: the number of unseen units
/// `point - m_observed` is treated as log-normal, so the lower end never drops
/// below the observed count.
pub fn ci_log(point: f64, var_est: f64, m_observed: f64, level: f64) -> LogInterval {
    let unseen = point - m_observed;
    if unseen.is_nan() || unseen <= 0.0 {
        return LogInterval { interval: Interval { lo: m_observed, hi: m_observed }, degenerate: true };
    }
    let c = (two_sided_z(level) * (var_est.max(0.0) / (unseen * unseen)).ln_1p().sqrt()).exp();
    LogInterval { interval: Interval { lo: m_observed + unseen / c, hi: m_observed + unseen * c }, degenerate: false }
}

/// Hypothetical initial samples, with each unit's out-degree.
#[derive(Clone, Debug)]
pub struct InitialSamples {
    pub summary: CaptureSummary,
    /// Out-degrees of the distinct units, in ascending id order.
    pub union_degrees: Vec<u32>,
}

impl InitialSamples {
    pub fn new<S: AsRef<[(NodeId, u32)]>>(samples: &[S]) -> Self {
        let k = samples.len();
        let sizes: Vec<u64> = samples.iter().map(|s| s.as_ref().len() as u64).collect();
        let mut all: Vec<(NodeId, u32)> = samples.iter().flat_map(|s| s.as_ref().iter().copied()).collect();
        all.sort_unstable_by_key(|&(u, _)| u);
        let mut freq = vec![0u64; k.max(1)];
        let mut union_degrees = Vec::with_capacity(all.len());
        let mut i = 0;
        while i < all.len() {
            let mut j = i + 1;
            while j < all.len() && all[j].0 == all[i].0 {
                j += 1;
            }
            let times = j - i;
            if times > freq.len() {
                freq.resize(times, 0);
            }
            freq[times - 1] += 1;
            union_degrees.push(all[i].1);
            i = j;
        }
        let overlap_m = if k >= 2 {
            let mut a: Vec<NodeId> = samples[0].as_ref().iter().map(|p| p.0).collect();
            let mut b: Vec<NodeId> = samples[1].as_ref().iter().map(|p| p.0).collect();
            a.sort_unstable();
            b.sort_unstable();
            sorted_overlap(&a, &b)
        } else {
            0
        };
        InitialSamples {
            summary: CaptureSummary {
                k,
                overlap_m,
                distinct: union_degrees.len() as u64,
                freq,
                sizes: sizes.clone(),
                total_captures: sizes.iter().sum(),
            },
            union_degrees,
        }
    }

    /// Chapman estimate from the first two samples.
    pub fn chapman(&self) -> Result<f64> {
        let s = &self.summary;
        if s.k < 2 {
            return Err(Error::validation("Lincoln-Petersen needs at least two samples"));
        }
        chapman_lp(s.sizes[0], s.sizes[1], s.overlap_m)
    }
}

fn sorted_overlap(a: &[NodeId], b: &[NodeId]) -> u64 {
    let (mut i, mut j, mut m) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                m += 1;
                i += 1;
                j += 1;
            }
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub point: f64,
    pub var: f64,
}

/// The preliminary estimators available to Rao-Blackwellization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    /// Chapman's estimator on the first two initial samples, Seber variance.
    Chapman,
    /// Model M0 maximum likelihood.
    M0,
    /// Chao's lower bound.
    ChaoLb,
    /// Mean out-degree of the initial-sample union; the variance plugs in the
    /// Chapman estimate from the first two samples.
    AvgOutDegree,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Chapman, Estimator::M0, Estimator::ChaoLb, Estimator::AvgOutDegree];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Chapman => "chapman",
            Estimator::M0 => "m0",
            Estimator::ChaoLb => "chao_lb",
            Estimator::AvgOutDegree => "avg_outdegree",
        }
    }

    /// True for population-size estimators (log intervals apply).
    pub fn is_population_size(&self) -> bool {
        !matches!(self, Estimator::AvgOutDegree)
    }

    pub fn min_samples(&self) -> usize {
        2
    }

    pub fn evaluate(&self, init: &InitialSamples) -> Result<Estimate> {
        let s = &init.summary;
        if s.k < self.min_samples() {
            return Err(Error::validation(format!("{} needs at least {} samples", self.name(), self.min_samples())));
        }
        Ok(match self {
            Estimator::Chapman => Estimate {
                point: chapman_lp(s.sizes[0], s.sizes[1], s.overlap_m)?,
                var: seber_var(s.sizes[0], s.sizes[1], s.overlap_m)?,
            },
            Estimator::M0 => {
                let fit = m0_mle(s)?;
                Estimate { point: fit.n_hat, var: m0_var(s, fit.n_hat) }
            }
            Estimator::ChaoLb => Estimate { point: chao_lb(s), var: chao_lb_var(s) },
            Estimator::AvgOutDegree => Estimate {
                point: avg_outdegree_est(&init.union_degrees)?,
                var: avg_outdegree_var(&init.union_degrees, init.chapman()?)?,
            },
        })
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::validation(format!("unknown estimator `{s}`")))
    }
}

/// Rao-Blackwellized estimate with its variance pieces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbEstimate {
    pub point: f64,
    /// Variance estimate after the conservative fallback.
    pub var: f64,
    pub fallback_used: bool,
    /// E[v̂ | d_r].
    pub mean_var_est: f64,
    /// Var[θ̂ | d_r].
    pub spread: f64,
}

impl RbEstimate {
    pub(crate) fn from_moments(point: f64, mean_var_est: f64, spread: f64) -> Self {
        let (var, fallback_used) = resolve_rb_variance(mean_var_est, spread);
        RbEstimate { point, var, fallback_used, mean_var_est, spread }
    }
}

/// A point estimate with its variance and both intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateReport {
    pub point: f64,
    pub var_est: f64,
    pub ci_clt: Interval,
    /// Present for population-size estimators.
    pub ci_log: Option<LogInterval>,
    pub fallback_used: bool,
}

impl EstimateReport {
    /// `m_observed` is the count the log interval is anchored at; pass `None`
    /// for estimators of other quantities.
    pub fn new(point: f64, var_est: f64, m_observed: Option<f64>, level: f64, fallback_used: bool) -> Self {
        EstimateReport {
            point,
            var_est,
            ci_clt: ci_clt(point, var_est, level),
            ci_log: m_observed.map(|m| ci_log(point, var_est, m, level)),
            fallback_used,
        }
    }
}
