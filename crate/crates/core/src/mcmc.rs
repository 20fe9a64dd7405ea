//! Metropolis-Hastings resampling over consistent reorderings.
//!
//! The chain is an independence sampler: each proposal rebuilds every sample
//! from scratch with the candidate distribution (forced units first, a uniform
//! fill of the remaining initial slots, then a replay of link tracing confined
//! to the sample), and is accepted with probability
//! min{ p(cand)/p(cur) · c(cur)/c(cand), 1 }, where p is the q product and c
//! the candidate probability. Both are carried in logs.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::estimators::{Estimate, Estimator, RbEstimate};
use crate::reorder::{ReorderContext, Reordering, Replay, SampleFrame};
use crate::sampler::Design;

/// Chain length R; the average runs over the R + 1 states l = 0..R.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub iterations: u64,
    pub record_trace: bool,
}

impl ChainConfig {
    pub fn new(iterations: u64) -> Self {
        ChainConfig { iterations, record_trace: false }
    }

    /// 20,000 resamples for two samples, 30,000 for more.
    pub fn default_for(k: usize) -> Self {
        ChainConfig::new(if k <= 2 { 20_000 } else { 30_000 })
    }
}

/// One iteration of the chain, as written to the trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub accepted: bool,
    pub points: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult {
    pub estimates: Vec<(Estimator, RbEstimate)>,
    pub iterations: u64,
    pub accepted: u64,
    /// Proposals that stalled or failed the final-active-set rule.
    pub zero_proposals: u64,
    pub trace: Option<Vec<TraceRow>>,
}

impl ChainResult {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.iterations as f64
    }

    pub fn get(&self, e: Estimator) -> Option<&RbEstimate> {
        self.estimates.iter().find(|(x, _)| *x == e).map(|(_, r)| r)
    }

    pub fn fallback_used(&self) -> bool {
        self.estimates.iter().any(|(_, r)| r.fallback_used)
    }
}

/// Writes `iteration,accepted,<estimator>...` rows.
pub fn write_trace<W: Write>(rows: &[TraceRow], estimators: &[Estimator], mut out: W) -> Result<()> {
    write!(out, "iteration,accepted")?;
    for e in estimators {
        write!(out, ",{e}")?;
    }
    writeln!(out)?;
    for row in rows {
        write!(out, "{},{}", row.iteration, row.accepted as u8)?;
        for p in &row.points {
            write!(out, ",{p}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn check_forced(frame: &SampleFrame, k: usize) -> Result<()> {
    if frame.forced_initial().len() > frame.n0() {
        return Err(Error::Infeasible(format!(
            "sample {k}: {} members have no in-sample ties but the initial sample holds {}",
            frame.forced_initial().len(),
            frame.n0()
        )));
    }
    Ok(())
}

/// Ties from the placed set to unplaced members of the sample, after `u` is
/// added.
fn inside_after(frame: &SampleFrame, replay: &Replay, inside: u64, u: u32) -> u64 {
    let fresh = frame.neighbors(u).iter().filter(|&&v| !replay.placed(v)).count() as u64;
    inside - u64::from(replay.ties_to(u)) + fresh
}

/// Log of the q product, evaluated alongside a proposal.
struct Target {
    ln_q: f64,
}

impl Target {
    fn step(&mut self, replay: &Replay, u: u32) {
        self.ln_q += (f64::from(replay.ties_to(u)) / replay.out_ties() as f64).ln();
    }
}

/// Draws one sample ordering from the candidate distribution into `order`.
/// Returns (ln candidate prob, ln q product), or `None` when the sample
/// cannot be completed or breaks the final-active-set rule.
fn propose_sample<R: Rng + ?Sized>(
    frame: &SampleFrame,
    replay: &mut Replay,
    order: &mut Vec<u32>,
    rng: &mut R,
) -> Option<(f64, f64)> {
    let len = frame.len();
    let n0 = frame.n0();
    let forced = frame.forced_initial();
    order.clear();
    order.extend_from_slice(forced);
    let free: Vec<u32> = (0..len as u32).filter(|u| forced.binary_search(u).is_err()).collect();
    let fill = n0 - forced.len();
    for i in index::sample(rng, free.len(), fill) {
        order.push(free[i]);
    }
    let mut ln_c = -ln_binomial(free.len() as u64, fill as u64);

    replay.reset(len);
    let mut inside = 0u64;
    for &u in order.iter() {
        inside = inside_after(frame, replay, inside, u);
        replay.add(frame, u);
    }
    let mut target = Target { ln_q: 0.0 };
    while order.len() < len {
        if inside == 0 {
            return None;
        }
        let mut pick = rng.random_range(0..inside);
        let u = (0..len as u32)
            .filter(|&v| !replay.placed(v))
            .find(|&v| {
                let t = u64::from(replay.ties_to(v));
                if pick < t {
                    true
                } else {
                    pick -= t;
                    false
                }
            })
            .expect("pick is below the total tie count");
        ln_c += (replay.ties_to(u) as f64 / inside as f64).ln();
        target.step(replay, u);
        inside = inside_after(frame, replay, inside, u);
        replay.add(frame, u);
        order.push(u);
    }
    if frame.truncated() && replay.out_ties() != 0 {
        return None;
    }
    Some((ln_c, target.ln_q))
}

/// Log candidate probability of one sample ordering; `None` when the
/// candidate distribution cannot produce it.
pub fn candidate_ln_prob(frame: &SampleFrame, order: &[u32], replay: &mut Replay) -> Option<f64> {
    let n0 = frame.n0();
    let forced = frame.forced_initial();
    if !forced.iter().all(|f| order[..n0].contains(f)) {
        return None;
    }
    let free = (frame.len() - forced.len()) as u64;
    let mut ln_c = -ln_binomial(free, (n0 - forced.len()) as u64);
    replay.reset(frame.len());
    let mut inside = 0u64;
    for &u in &order[..n0] {
        inside = inside_after(frame, replay, inside, u);
        replay.add(frame, u);
    }
    for &u in &order[n0..] {
        let ties = replay.ties_to(u);
        if ties == 0 {
            return None;
        }
        ln_c += (f64::from(ties) / inside as f64).ln();
        inside = inside_after(frame, replay, inside, u);
        replay.add(frame, u);
    }
    Some(ln_c)
}

/// Candidate probability of a whole tuple; 0 if any sample is unreachable.
pub fn candidate_prob_of(ctx: &ReorderContext, r: &Reordering) -> Result<f64> {
    let orders = ctx.localize(r)?;
    let mut replay = Replay::default();
    let mut ln = 0.0;
    for (frame, order) in ctx.frames().iter().zip(&orders) {
        match candidate_ln_prob(frame, order, &mut replay) {
            Some(v) => ln += v,
            None => return Ok(0.0),
        }
    }
    Ok(ln.exp())
}

/// A candidate tuple in local indices with its candidate probability, or
/// `None` for the zero-probability outcome.
pub fn propose_candidate<R: Rng + ?Sized>(ctx: &ReorderContext, rng: &mut R) -> Result<Option<(Vec<Vec<u32>>, f64)>> {
    for (k, frame) in ctx.frames().iter().enumerate() {
        check_forced(frame, k)?;
    }
    let mut replay = Replay::default();
    let mut orders = Vec::with_capacity(ctx.k());
    let mut ln_c = 0.0;
    for frame in ctx.frames() {
        let mut order = Vec::with_capacity(frame.len());
        let Some((c, _)) = propose_sample(frame, &mut replay, &mut order, rng) else {
            return Ok(None);
        };
        ln_c += c;
        orders.push(order);
    }
    Ok(Some((orders, ln_c.exp())))
}

/// Σ_k ln q_k and Σ_k ln c_k of a tuple; `None` if either probability is 0.
fn tuple_logs(ctx: &ReorderContext, orders: &[Vec<u32>], replay: &mut Replay) -> Option<(f64, f64)> {
    let mut ln_q = 0.0;
    let mut ln_c = 0.0;
    for (frame, order) in ctx.frames().iter().zip(orders) {
        ln_q += frame.ln_q_product(order, replay)?;
        ln_c += candidate_ln_prob(frame, order, replay)?;
    }
    Some((ln_q, ln_c))
}

/// Acceptance probability of moving from `current` to `candidate` (local
/// orders).
pub fn acceptance_probability(ctx: &ReorderContext, current: &[Vec<u32>], candidate: &[Vec<u32>]) -> f64 {
    let mut replay = Replay::default();
    let Some((q_cur, c_cur)) = tuple_logs(ctx, current, &mut replay) else {
        return 1.0;
    };
    let Some((q_cand, c_cand)) = tuple_logs(ctx, candidate, &mut replay) else {
        return 0.0;
    };
    ((q_cand - q_cur) + (c_cur - c_cand)).exp().min(1.0)
}

/// Outcome of a single iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Accepted,
    Rejected,
    ZeroProbability,
}

/// Running sums over the visited states for one estimator.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    var_sum: f64,
    /// Some state had no finite estimate (M0 without recaptures).
    unbounded: bool,
}

impl Moments {
    fn push(&mut self, e: Estimate) {
        self.count += 1;
        if !e.point.is_finite() || !e.var.is_finite() {
            self.unbounded = true;
            return;
        }
        let delta = e.point - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (e.point - self.mean);
        self.var_sum += e.var;
    }

    fn finish(&self) -> RbEstimate {
        if self.unbounded {
            return RbEstimate::from_moments(f64::INFINITY, f64::INFINITY, 0.0);
        }
        let n = self.count as f64;
        RbEstimate::from_moments(self.mean, self.var_sum / n, self.m2 / n)
    }
}

/// A running chain. Exposed so callers can inspect visited states.
pub struct Chain<'a> {
    ctx: &'a ReorderContext,
    estimators: Vec<Estimator>,
    current: Vec<Vec<u32>>,
    cur_ln_q: f64,
    cur_ln_c: f64,
    cur_est: Vec<Estimate>,
    candidate: Vec<Vec<u32>>,
    replay: Replay,
    moments: Vec<Moments>,
    iterations: u64,
    accepted: u64,
    zero: u64,
}

impl<'a> Chain<'a> {
    /// Starts at the original ordering (state l = 0) and records its
    /// preliminary estimates.
    pub fn new(ctx: &'a ReorderContext, original: &Reordering, estimators: &[Estimator]) -> Result<Self> {
        if ctx.design() != Design::LinkTracing {
            return Err(Error::validation("the resampling chain needs the link-tracing design"));
        }
        for (k, frame) in ctx.frames().iter().enumerate() {
            check_forced(frame, k)?;
        }
        let current = ctx.localize(original)?;
        let mut replay = Replay::default();
        let (cur_ln_q, cur_ln_c) = tuple_logs(ctx, &current, &mut replay)
            .ok_or_else(|| Error::validation("the original ordering has zero probability under the design"))?;
        let init = ctx.initial_samples(&current);
        let cur_est = estimators.iter().map(|e| e.evaluate(&init)).collect::<Result<Vec<_>>>()?;
        let mut moments = vec![Moments::default(); estimators.len()];
        for (m, &e) in moments.iter_mut().zip(&cur_est) {
            m.push(e);
        }
        let candidate = current.iter().map(|o| Vec::with_capacity(o.len())).collect();
        Ok(Chain {
            ctx,
            estimators: estimators.to_vec(),
            current,
            cur_ln_q,
            cur_ln_c,
            cur_est,
            candidate,
            replay,
            moments,
            iterations: 0,
            accepted: 0,
            zero: 0,
        })
    }

    /// Current state in local indices.
    pub fn current(&self) -> &[Vec<u32>] {
        &self.current
    }

    pub fn current_estimates(&self) -> &[Estimate] {
        &self.cur_est
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Step> {
        self.iterations += 1;
        let outcome = self.transition(rng)?;
        match outcome {
            Step::Accepted => self.accepted += 1,
            Step::ZeroProbability => self.zero += 1,
            Step::Rejected => {}
        }
        for (m, &e) in self.moments.iter_mut().zip(&self.cur_est) {
            m.push(e);
        }
        Ok(outcome)
    }

    fn transition<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Step> {
        let mut ln_q = 0.0;
        let mut ln_c = 0.0;
        for (frame, order) in self.ctx.frames().iter().zip(self.candidate.iter_mut()) {
            match propose_sample(frame, &mut self.replay, order, rng) {
                Some((c, q)) => {
                    ln_c += c;
                    ln_q += q;
                }
                None => return Ok(Step::ZeroProbability),
            }
        }
        let ln_alpha = (ln_q - self.cur_ln_q) + (self.cur_ln_c - ln_c);
        if ln_alpha < 0.0 && rng.random::<f64>() >= ln_alpha.exp() {
            return Ok(Step::Rejected);
        }
        let init = self.ctx.initial_samples(&self.candidate);
        for (slot, e) in self.cur_est.iter_mut().zip(&self.estimators) {
            *slot = e.evaluate(&init)?;
        }
        std::mem::swap(&mut self.current, &mut self.candidate);
        self.cur_ln_q = ln_q;
        self.cur_ln_c = ln_c;
        Ok(Step::Accepted)
    }

    pub fn finish(&self) -> ChainResult {
        ChainResult {
            estimates: self.estimators.iter().zip(&self.moments).map(|(&e, m)| (e, m.finish())).collect(),
            iterations: self.iterations,
            accepted: self.accepted,
            zero_proposals: self.zero,
            trace: None,
        }
    }
}

/// Runs R iterations from the original ordering and averages the estimators
/// over states l = 0..R.
pub fn run_chain<R: Rng + ?Sized>(
    ctx: &ReorderContext,
    original: &Reordering,
    estimators: &[Estimator],
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<ChainResult> {
    if cfg.iterations == 0 {
        return Err(Error::validation("the chain needs at least one iteration"));
    }
    let mut chain = Chain::new(ctx, original, estimators)?;
    let mut trace = cfg.record_trace.then(|| Vec::with_capacity(cfg.iterations as usize));
    for l in 1..=cfg.iterations {
        let step = chain.step(rng)?;
        if let Some(rows) = trace.as_mut() {
            rows.push(TraceRow {
                iteration: l,
                accepted: step == Step::Accepted,
                points: chain.cur_est.iter().map(|e| e.point).collect(),
            });
        }
    }
    let mut result = chain.finish();
    result.trace = trace;
    Ok(result)
}
