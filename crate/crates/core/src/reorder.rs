//! Reorderings of the observed samples and their selection probabilities.
//!
//! Everything here is computed from the reduced data alone: the selection
//! probability of a hypothetical order depends only on the out-degrees of the
//! sampled units and the ties among them, since the number of ties leaving the
//! current sample is Σ w_i+ − 2·(ties inside the sample).

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::estimators::{Estimate, Estimator, InitialSamples, RbEstimate};
use crate::netpop::NodeId;
use crate::sampler::{Design, ObservedData, ReducedData};

/// Default bound on the number of reordering tuples enumerated exactly.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// One sample in a hypothetical order. The first `n0` units form the initial
/// sample and are treated as a set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SampleOrdering {
    pub units: Vec<NodeId>,
    pub n0: usize,
}

/// Jump and forced-jump indicators of one sample, one entry per position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpRecord {
    pub jump: Vec<bool>,
    pub forced: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reordering {
    pub samples: Vec<SampleOrdering>,
    /// Required under the random-jump design.
    pub jumps: Option<Vec<JumpRecord>>,
}

impl Reordering {
    pub fn new(samples: Vec<SampleOrdering>) -> Self {
        Reordering { samples, jumps: None }
    }

    pub fn with_jumps(samples: Vec<SampleOrdering>, jumps: Vec<JumpRecord>) -> Self {
        Reordering { samples, jumps: Some(jumps) }
    }

    /// The original order of the observed samples, with their jump records.
    pub fn original(d0: &ObservedData) -> Self {
        let samples = d0.samples.iter().map(|s| SampleOrdering { units: s.units.clone(), n0: s.n0 }).collect();
        let jumps = d0.design.has_jumps().then(|| {
            d0.samples
                .iter()
                .map(|s| JumpRecord { jump: s.jump_flags.clone(), forced: s.forced_flags.clone() })
                .collect()
        });
        Reordering { samples, jumps }
    }
}

/// One sample of the reduced data in local indices `0..|s_k|`.
#[derive(Clone, Debug)]
pub struct SampleFrame {
    units: Vec<NodeId>,
    degree: Vec<u32>,
    nbrs: Vec<Vec<u32>>,
    n0: usize,
    target: usize,
    truncated: bool,
    forced: Vec<u32>,
}

impl SampleFrame {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn unit(&self, local: u32) -> NodeId {
        self.units[local as usize]
    }

    pub fn degree(&self, local: u32) -> u32 {
        self.degree[local as usize]
    }

    /// Ties from `local` to other members of this sample.
    pub fn neighbors(&self, local: u32) -> &[u32] {
        &self.nbrs[local as usize]
    }

    /// Members with no tie to any other member: no order can recruit them by
    /// tracing, so they belong to every consistent initial sample.
    pub fn forced_initial(&self) -> &[u32] {
        &self.forced
    }

    pub fn local_of(&self, u: NodeId) -> Option<u32> {
        self.units.binary_search(&u).ok().map(|i| i as u32)
    }

    /// Number of orderings R_k = C(|s_k|, n0) · (|s_k| − n0)!.
    pub fn reordering_count(&self) -> f64 {
        reordering_count(self.len(), self.n0)
    }

    pub fn to_ordering(&self, order: &[u32]) -> SampleOrdering {
        SampleOrdering { units: order.iter().map(|&l| self.unit(l)).collect(), n0: self.n0 }
    }

    /// (unit, out-degree) pairs of the initial sample of `order`.
    pub fn initial_units(&self, order: &[u32]) -> Vec<(NodeId, u32)> {
        order[..self.n0].iter().map(|&l| (self.unit(l), self.degree(l))).collect()
    }

    /// Product of adaptive step probabilities, with the final-active-set rule
    /// for samples that stopped early. Zero when the order is untraceable.
    pub fn q_product(&self, order: &[u32], replay: &mut Replay) -> f64 {
        let mut q = 1.0;
        if self.replay_steps(order, replay, |ties, out| q *= f64::from(ties) / out as f64) {
            q
        } else {
            0.0
        }
    }

    /// Natural log of [`Self::q_product`]; `None` for probability zero.
    pub fn ln_q_product(&self, order: &[u32], replay: &mut Replay) -> Option<f64> {
        let mut ln_q = 0.0;
        self.replay_steps(order, replay, |ties, out| ln_q += (f64::from(ties) / out as f64).ln()).then_some(ln_q)
    }

    /// Replays `order`, passing (w_{a_t,i}, w_{a_t,+}) of each adaptive step
    /// to `step`. Returns false as soon as the order is untraceable.
    fn replay_steps(&self, order: &[u32], replay: &mut Replay, mut step: impl FnMut(u32, i64)) -> bool {
        replay.reset(self.len());
        for &u in &order[..self.n0] {
            replay.add(self, u);
        }
        for &u in &order[self.n0..] {
            let ties = replay.ties_to(u);
            let out = replay.out_ties();
            if ties == 0 || out == 0 {
                return false;
            }
            step(ties, out);
            replay.add(self, u);
        }
        !(self.truncated && replay.out_ties() != 0)
    }
}

/// R = C(size, n0) · (size − n0)! as a float.
pub fn reordering_count(size: usize, n0: usize) -> f64 {
    if n0 > size {
        return 0.0;
    }
    let mut r = 1.0;
    // C(size, n0) * (size - n0)! = size! / n0!
    for i in (n0 + 1)..=size {
        r *= i as f64;
    }
    r
}

/// Incremental state of a hypothetical sample while it is replayed: which
/// members are placed, how many ties each unplaced member receives from the
/// placed ones, and how many ties leave the placed set.
#[derive(Clone, Debug, Default)]
pub struct Replay {
    placed: Vec<bool>,
    ties: Vec<u32>,
    out: i64,
    size: usize,
}

impl Replay {
    pub fn reset(&mut self, len: usize) {
        self.placed.clear();
        self.placed.resize(len, false);
        self.ties.clear();
        self.ties.resize(len, 0);
        self.out = 0;
        self.size = 0;
    }

    pub fn add(&mut self, frame: &SampleFrame, u: u32) {
        let ui = u as usize;
        debug_assert!(!self.placed[ui]);
        self.placed[ui] = true;
        self.size += 1;
        self.out += i64::from(frame.degree[ui]) - 2 * i64::from(self.ties[ui]);
        for &v in &frame.nbrs[ui] {
            self.ties[v as usize] += 1;
        }
    }

    /// w_{a_t,i}: ties from the placed set to member `u`.
    pub fn ties_to(&self, u: u32) -> u32 {
        self.ties[u as usize]
    }

    /// w_{a_t,+}: ties from the placed set to every unplaced unit of the
    /// population.
    pub fn out_ties(&self) -> i64 {
        self.out
    }

    pub fn placed(&self, u: u32) -> bool {
        self.placed[u as usize]
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// The reduced data arranged for replaying reorderings.
#[derive(Clone, Debug)]
pub struct ReorderContext {
    design: Design,
    frames: Vec<SampleFrame>,
    jump_sum: Option<Vec<u32>>,
}

impl ReorderContext {
    pub fn new(dr: &ReducedData) -> Result<Self> {
        let mut frames = Vec::with_capacity(dr.k());
        for k in 0..dr.k() {
            let units = dr.members[k].clone();
            if units.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::validation(format!("member set {k} is not sorted and distinct")));
            }
            let index: HashMap<NodeId, u32> = units.iter().enumerate().map(|(i, &u)| (u, i as u32)).collect();
            let degree = units
                .iter()
                .map(|u| {
                    dr.degrees.get(u).copied().ok_or_else(|| Error::validation(format!("no out-degree for unit {u}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut nbrs = vec![Vec::new(); units.len()];
            for &(a, b) in &dr.edges {
                if let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) {
                    nbrs[ia as usize].push(ib);
                    nbrs[ib as usize].push(ia);
                }
            }
            for (i, list) in nbrs.iter_mut().enumerate() {
                list.sort_unstable();
                if list.len() as u32 > degree[i] {
                    return Err(Error::validation(format!(
                        "unit {} has more in-sample ties than its out-degree",
                        units[i]
                    )));
                }
            }
            let (n0, target) = (dr.initial_sizes[k], dr.final_sizes[k]);
            if n0 == 0 || n0 > units.len() || units.len() > target {
                return Err(Error::validation(format!(
                    "sample {k}: need 1 <= n0 <= |s| <= n, got {n0}, {}, {target}",
                    units.len()
                )));
            }
            let forced = (0..units.len() as u32).filter(|&i| nbrs[i as usize].is_empty()).collect();
            frames.push(SampleFrame { units, degree, nbrs, n0, target, truncated: dr.truncated[k], forced });
        }
        Ok(ReorderContext { design: dr.design, frames, jump_sum: dr.jump_sum.clone() })
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn k(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, k: usize) -> &SampleFrame {
        &self.frames[k]
    }

    pub fn frames(&self) -> &[SampleFrame] {
        &self.frames
    }

    pub fn jump_sum(&self) -> Option<&[u32]> {
        self.jump_sum.as_deref()
    }

    /// Converts a reordering to local indices, checking it ranges over exactly
    /// the member sets with the right initial sizes.
    pub fn localize(&self, r: &Reordering) -> Result<Vec<Vec<u32>>> {
        if r.samples.len() != self.k() {
            return Err(Error::validation(format!(
                "reordering has {} samples, data has {}",
                r.samples.len(),
                self.k()
            )));
        }
        r.samples
            .iter()
            .zip(&self.frames)
            .enumerate()
            .map(|(k, (s, frame))| {
                if s.n0 != frame.n0 || s.units.len() != frame.len() {
                    return Err(Error::validation(format!("sample {k}: sizes differ from the data")));
                }
                let mut seen = vec![false; frame.len()];
                s.units
                    .iter()
                    .map(|&u| {
                        let l = frame
                            .local_of(u)
                            .ok_or_else(|| Error::validation(format!("unit {u} is not in sample {k}")))?;
                        if std::mem::replace(&mut seen[l as usize], true) {
                            return Err(Error::validation(format!("unit {u} repeated in sample {k}")));
                        }
                        Ok(l)
                    })
                    .collect()
            })
            .collect()
    }

    /// Initial samples of a tuple of local orderings.
    pub fn initial_samples<O: AsRef<[u32]>>(&self, orders: &[O]) -> InitialSamples {
        let sets: Vec<Vec<(NodeId, u32)>> =
            self.frames.iter().zip(orders).map(|(f, o)| f.initial_units(o.as_ref())).collect();
        InitialSamples::new(&sets)
    }
}

/// Π_k Π_t q_t over the adaptive steps of each sample (link-tracing design).
pub fn q_product(ctx: &ReorderContext, r: &Reordering) -> Result<f64> {
    let orders = ctx.localize(r)?;
    let mut replay = Replay::default();
    Ok(ctx.frames.iter().zip(&orders).map(|(f, o)| f.q_product(o, &mut replay)).product())
}

/// One adaptive step replayed under the random-jump design.
#[derive(Clone, Copy, Debug)]
enum JumpStep {
    Traced {
        ties: u32,
        out: i64,
    },
    /// Voluntary jump taken with `placed` units already in the sample.
    Jumped {
        placed: usize,
    },
    Forced {
        placed: usize,
    },
}

/// Replays one sample with its jump record, validating the J/H flags against
/// the tie counts.
fn replay_jumps(frame: &SampleFrame, order: &[u32], rec: &JumpRecord, replay: &mut Replay) -> Result<Vec<JumpStep>> {
    let len = frame.len();
    if rec.jump.len() != len || rec.forced.len() != len {
        return Err(Error::validation("jump records need one entry per position"));
    }
    replay.reset(len);
    let mut steps = Vec::with_capacity(len - frame.n0);
    for (t, &u) in order.iter().enumerate() {
        let (jumped, forced) = (rec.jump[t], rec.forced[t]);
        if t < frame.n0 {
            if jumped || forced {
                return Err(Error::validation("jump flags set inside the initial sample"));
            }
            replay.add(frame, u);
            continue;
        }
        if forced && !jumped {
            return Err(Error::validation(format!("position {}: H=1 with J=0", t + 1)));
        }
        let out = replay.out_ties();
        let placed = replay.size();
        let step = match (out == 0, forced) {
            (true, true) => JumpStep::Forced { placed },
            (true, false) => return Err(Error::validation(format!("position {}: ties exhausted but H=0", t + 1))),
            (false, true) => return Err(Error::validation(format!("position {}: H=1 while ties remained", t + 1))),
            (false, false) if jumped => JumpStep::Jumped { placed },
            (false, false) => JumpStep::Traced { ties: replay.ties_to(u), out },
        };
        steps.push(step);
        replay.add(frame, u);
    }
    Ok(steps)
}

fn jump_records<'a>(ctx: &ReorderContext, r: &'a Reordering) -> Result<&'a [JumpRecord]> {
    let recs = r.jumps.as_deref().ok_or_else(|| Error::validation("random-jump reorderings need jump records"))?;
    if recs.len() != ctx.k() {
        return Err(Error::validation("one jump record per sample is required"));
    }
    Ok(recs)
}

/// 1 / C(N, n0).
fn inv_binomial(n: f64, n0: usize) -> f64 {
    (0..n0).map(|i| (i + 1) as f64 / (n - i as f64)).product()
}

/// Full selection probability of a random-jump reordering, evaluated at a
/// hypothetical population size. Only meaningful for checking the
/// factorization; estimation never needs N.
pub fn ordered_prob_with_jumps(ctx: &ReorderContext, r: &Reordering, d: f64, n_hypothetical: u64) -> Result<f64> {
    let orders = ctx.localize(r)?;
    let recs = jump_records(ctx, r)?;
    let big_n = n_hypothetical as f64;
    let mut replay = Replay::default();
    let mut prob = 1.0;
    for ((frame, order), rec) in ctx.frames.iter().zip(&orders).zip(recs) {
        if (n_hypothetical as usize) < frame.len() {
            return Err(Error::validation(format!("hypothetical population {n_hypothetical} smaller than a sample")));
        }
        prob *= inv_binomial(big_n, frame.n0);
        for step in replay_jumps(frame, order, rec, &mut replay)? {
            prob *= match step {
                JumpStep::Traced { ties, out } => d * f64::from(ties) / out as f64,
                JumpStep::Jumped { placed } => (1.0 - d) / (big_n - placed as f64),
                JumpStep::Forced { placed } => 1.0 / (big_n - placed as f64),
            };
        }
    }
    Ok(prob)
}

/// The N-free factor of [`ordered_prob_with_jumps`]:
/// Π (d·q_t)^(1−J) · (1−d)^(J(1−H)).
pub fn jump_weight(ctx: &ReorderContext, r: &Reordering, d: f64) -> Result<f64> {
    let orders = ctx.localize(r)?;
    let recs = jump_records(ctx, r)?;
    let mut replay = Replay::default();
    let mut w = 1.0;
    for ((frame, order), rec) in ctx.frames.iter().zip(&orders).zip(recs) {
        for step in replay_jumps(frame, order, rec, &mut replay)? {
            w *= match step {
                JumpStep::Traced { ties, out } => d * f64::from(ties) / out as f64,
                JumpStep::Jumped { .. } => 1.0 - d,
                JumpStep::Forced { .. } => 1.0,
            };
        }
    }
    Ok(w)
}

/// Position-wise jump totals of a reordering, padded to `len`.
pub fn jump_totals(r: &Reordering, len: usize) -> Option<Vec<u32>> {
    let recs = r.jumps.as_ref()?;
    let mut sum = vec![0u32; len];
    for rec in recs {
        for (t, &j) in rec.jump.iter().enumerate() {
            if t < len {
                sum[t] += j as u32;
            }
        }
    }
    Some(sum)
}

/// Whether a reordering could have produced the reduced data: every traced
/// step follows a tie, samples that stopped early end with no ties leaving
/// the final sample, and under the random-jump design the jump flags are
/// realizable with the observed jump totals.
pub fn is_consistent(ctx: &ReorderContext, r: &Reordering) -> bool {
    let Ok(orders) = ctx.localize(r) else {
        return false;
    };
    let mut replay = Replay::default();
    match ctx.design {
        Design::LinkTracing => ctx.frames.iter().zip(&orders).all(|(f, o)| f.ln_q_product(o, &mut replay).is_some()),
        Design::RandomJumps { d } => {
            let Ok(recs) = jump_records(ctx, r) else {
                return false;
            };
            for ((frame, order), rec) in ctx.frames.iter().zip(&orders).zip(recs) {
                let Ok(steps) = replay_jumps(frame, order, rec, &mut replay) else {
                    return false;
                };
                let feasible = steps.iter().all(|s| match *s {
                    JumpStep::Traced { ties, .. } => ties > 0,
                    JumpStep::Jumped { .. } => d < 1.0,
                    JumpStep::Forced { .. } => true,
                });
                if !feasible {
                    return false;
                }
            }
            let observed = ctx.jump_sum.as_deref().unwrap_or(&[]);
            jump_totals(r, observed.len()).as_deref() == Some(observed)
                && recs.iter().all(|rec| rec.jump.iter().skip(observed.len()).all(|&j| !j))
        }
    }
}

fn check_cap(needed: f64, cap: u64) -> Result<()> {
    if needed > cap as f64 {
        Err(Error::Capacity { needed, cap })
    } else {
        Ok(())
    }
}

/// All R_k orderings of one sample in local indices: every initial subset (in
/// ascending order) followed by every permutation of the remaining members.
pub fn enumerate_local(frame: &SampleFrame, cap: u64) -> Result<impl Iterator<Item = Vec<u32>> + '_> {
    check_cap(frame.reordering_count(), cap)?;
    let len = frame.len() as u32;
    let n0 = frame.n0;
    Ok((0..len).combinations(n0).flat_map(move |init| {
        let rest: Vec<u32> = (0..len).filter(|u| !init.contains(u)).collect();
        let adaptive = rest.len();
        rest.into_iter().permutations(adaptive).map(move |tail| {
            let mut order = init.clone();
            order.extend(tail);
            order
        })
    }))
}

/// All R_k orderings of sample `k`, each exactly once.
pub fn enumerate_reorderings(
    ctx: &ReorderContext,
    k: usize,
    cap: u64,
) -> Result<impl Iterator<Item = SampleOrdering> + '_> {
    let frame = ctx.frame(k);
    Ok(enumerate_local(frame, cap)?.map(move |o| frame.to_ordering(&o)))
}

/// Sorts the initial prefix so orderings differing only inside the initial
/// sample compare equal.
pub fn canonical(order: &[u32], n0: usize) -> Vec<u32> {
    let mut c = order.to_vec();
    c[..n0].sort_unstable();
    c
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// Π_k R_k.
    pub tuples: f64,
    /// Tuples with positive probability.
    pub consistent: f64,
}

/// The conditional distribution p(s_(x1..xK) | d_r) of the link-tracing
/// design. It factorizes over samples, so each sample keeps its own list of
/// consistent orderings and q products.
#[derive(Clone, Debug)]
pub struct ConditionalDistribution {
    per_sample: Vec<Vec<(Vec<u32>, f64)>>,
    totals: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl ConditionalDistribution {
    /// Consistent orderings of sample `k` (canonical) with unnormalized q.
    pub fn sample(&self, k: usize) -> &[(Vec<u32>, f64)] {
        &self.per_sample[k]
    }

    /// Normalized probability of a tuple of orderings.
    pub fn probability<O: AsRef<[u32]>>(&self, orders: &[O], frames: &[SampleFrame]) -> f64 {
        let mut p = 1.0;
        for (k, o) in orders.iter().enumerate() {
            let key = canonical(o.as_ref(), frames[k].n0);
            let q = self.per_sample[k].iter().find(|(ord, _)| *ord == key).map_or(0.0, |(_, q)| *q);
            p *= q / self.totals[k];
        }
        p
    }

    /// Every consistent tuple with its normalized probability.
    pub fn tuples(&self) -> impl Iterator<Item = (Vec<&[u32]>, f64)> + '_ {
        self.per_sample.iter().map(|list| 0..list.len()).multi_cartesian_product().map(move |idx| {
            let mut p = 1.0;
            let orders = idx
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let (o, q) = &self.per_sample[k][i];
                    p *= q / self.totals[k];
                    o.as_slice()
                })
                .collect();
            (orders, p)
        })
    }
}

/// Enumerates every reordering tuple of a link-tracing study and weights the
/// consistent ones by their q products. The 1/C(N, n0k) factors are common to
/// all tuples and cancel in the normalization.
pub fn conditional_distribution(ctx: &ReorderContext, cap: u64) -> Result<ConditionalDistribution> {
    if ctx.design.has_jumps() {
        return Err(Error::validation("exact enumeration is only available for the link-tracing design"));
    }
    let tuples: f64 = ctx.frames.iter().map(SampleFrame::reordering_count).product();
    check_cap(tuples, cap)?;
    let mut replay = Replay::default();
    let mut per_sample = Vec::with_capacity(ctx.k());
    let mut totals = Vec::with_capacity(ctx.k());
    for frame in &ctx.frames {
        let mut list = Vec::new();
        let mut total = 0.0;
        for order in enumerate_local(frame, cap)? {
            let q = frame.q_product(&order, &mut replay);
            total += q;
            if q > 0.0 {
                list.push((order, q));
            }
        }
        if list.is_empty() {
            return Err(Error::Internal("no ordering of a sample is consistent; the original order always is".into()));
        }
        per_sample.push(list);
        totals.push(total);
    }
    let consistent = per_sample.iter().map(|l| l.len() as f64).product();
    Ok(ConditionalDistribution { per_sample, totals, diagnostics: Diagnostics { tuples, consistent } })
}

/// Exact Rao-Blackwellization of several preliminary estimators.
#[derive(Clone, Debug)]
pub struct ExactRb {
    pub estimates: Vec<(Estimator, RbEstimate)>,
    pub diagnostics: Diagnostics,
}

impl ExactRb {
    pub fn get(&self, e: Estimator) -> Option<&RbEstimate> {
        self.estimates.iter().find(|(x, _)| *x == e).map(|(_, r)| r)
    }

    /// Whether the conservative variance fallback was needed anywhere.
    pub fn negative_variance(&self) -> bool {
        self.estimates.iter().any(|(_, r)| r.fallback_used)
    }
}

/// Rao-Blackwellizes the preliminary estimators exactly by enumeration.
///
/// Preliminary estimates depend only on the hypothetical initial samples, so
/// each sample's consistent orderings are first merged by initial set; the
/// weighted sums are unchanged.
pub fn exact_rb(ctx: &ReorderContext, estimators: &[Estimator], cap: u64) -> Result<ExactRb> {
    let dist = conditional_distribution(ctx, cap)?;
    let groups: Vec<Vec<(&[u32], f64)>> = (0..ctx.k())
        .map(|k| {
            let n0 = ctx.frame(k).n0;
            let mut by_initial: BTreeMap<&[u32], f64> = BTreeMap::new();
            for (order, q) in dist.sample(k) {
                *by_initial.entry(&order[..n0]).or_default() += q / dist.totals[k];
            }
            by_initial.into_iter().collect()
        })
        .collect();

    let mut weights = Vec::new();
    let mut values: Vec<Vec<Estimate>> = vec![Vec::new(); estimators.len()];
    for idx in groups.iter().map(|g| 0..g.len()).multi_cartesian_product() {
        let mut w = 1.0;
        let sets: Vec<Vec<(NodeId, u32)>> = idx
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let (init, p) = groups[k][i];
                w *= p;
                let frame = ctx.frame(k);
                init.iter().map(|&l| (frame.unit(l), frame.degree(l))).collect()
            })
            .collect();
        let init = InitialSamples::new(&sets);
        for (e, out) in estimators.iter().zip(values.iter_mut()) {
            out.push(e.evaluate(&init)?);
        }
        weights.push(w);
    }

    let estimates = estimators
        .iter()
        .zip(&values)
        .map(|(&e, vals)| {
            let point: f64 = vals.iter().zip(&weights).map(|(v, w)| v.point * w).sum();
            let mean_var: f64 = vals.iter().zip(&weights).map(|(v, w)| v.var * w).sum();
            let spread: f64 = vals.iter().zip(&weights).map(|(v, w)| w * (v.point - point).powi(2)).sum();
            (e, RbEstimate::from_moments(point, mean_var, spread))
        })
        .collect();
    Ok(ExactRb { estimates, diagnostics: dist.diagnostics })
}
