//! Adaptive web sampling designs and the data they produce.
//!
//! A study consists of K independent samples. Each starts with a simple random
//! initial sample and grows by tracing ties out of the active set (always the
//! entire current sample here). Under the random-jump design a unit may instead
//! be drawn uniformly from the unsampled units.

mod text;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::netpop::{NodeId, PopulationGraph};
use crate::rng::stream_rng;

pub use text::{read_observed, read_reduced, write_observed, write_reduced};

/// Which sampled units contribute ties at each adaptive step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ActiveSetPolicy {
    #[default]
    EntireCurrentSample,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Design {
    /// Recruitment only by tracing ties; a sample stops early when the active
    /// set has no ties left to unsampled units.
    LinkTracing,
    /// Trace a tie with probability `d`, otherwise jump uniformly at random.
    /// Jumps are forced when no ties are left.
    RandomJumps { d: f64 },
}

impl Design {
    pub fn has_jumps(&self) -> bool {
        matches!(self, Design::RandomJumps { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignConfig {
    pub initial_sizes: Vec<usize>,
    pub final_sizes: Vec<usize>,
    pub design: Design,
    pub policy: ActiveSetPolicy,
}

impl DesignConfig {
    /// K samples sharing the same initial and final sizes.
    pub fn uniform(k: usize, n0: usize, n: usize, design: Design) -> Self {
        DesignConfig { initial_sizes: vec![n0; k], final_sizes: vec![n; k], design, policy: ActiveSetPolicy::default() }
    }

    pub fn k(&self) -> usize {
        self.initial_sizes.len()
    }

    pub fn validate(&self, population: usize) -> Result<()> {
        if self.initial_sizes.is_empty() {
            return Err(Error::validation("a study needs at least one sample"));
        }
        if self.initial_sizes.len() != self.final_sizes.len() {
            return Err(Error::validation("initial and final size lists differ in length"));
        }
        for (&n0, &n) in self.initial_sizes.iter().zip(&self.final_sizes) {
            check_sizes(n0, n, population)?;
        }
        if let Design::RandomJumps { d } = self.design {
            check_trace_probability(d)?;
        }
        Ok(())
    }
}

fn check_sizes(n0: usize, n: usize, population: usize) -> Result<()> {
    if n0 == 0 || n0 > n {
        return Err(Error::validation(format!("need 1 <= n0 <= n, got n0={n0}, n={n}")));
    }
    if n > population {
        return Err(Error::validation(format!("final size {n} exceeds population size {population}")));
    }
    Ok(())
}

fn check_trace_probability(d: f64) -> Result<()> {
    if d > 0.0 && d <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("trace probability d={d} outside (0, 1]")))
    }
}

/// One sample's full selection record.
///
/// `jump_flags` and `forced_flags` are indexed by position (0-based, so
/// position `t` here is time `t + 1`) and are always false inside the initial
/// sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedSample {
    pub units: Vec<NodeId>,
    pub n0: usize,
    /// Desired final size n_k.
    pub target: usize,
    pub jump_flags: Vec<bool>,
    pub forced_flags: Vec<bool>,
    /// Sampling stopped before `target` because ties were exhausted.
    pub truncated: bool,
}

impl OrderedSample {
    /// A link-tracing sample record with no jumps.
    pub fn traced(units: Vec<NodeId>, n0: usize, target: usize) -> Self {
        let len = units.len();
        OrderedSample {
            truncated: len < target,
            units,
            n0,
            target,
            jump_flags: vec![false; len],
            forced_flags: vec![false; len],
        }
    }

    pub fn with_flags(mut self, jump: &[bool], forced: &[bool]) -> Self {
        self.jump_flags = jump.to_vec();
        self.forced_flags = forced.to_vec();
        self
    }

    pub fn initial(&self) -> &[NodeId] {
        &self.units[..self.n0]
    }

    pub fn check(&self) -> Result<()> {
        let len = self.units.len();
        if self.n0 == 0 || self.n0 > len || len > self.target {
            return Err(Error::validation(format!(
                "sample sizes inconsistent: n0={}, |s|={len}, n={}",
                self.n0, self.target
            )));
        }
        if self.jump_flags.len() != len || self.forced_flags.len() != len {
            return Err(Error::validation("flag vectors must have one entry per position"));
        }
        let distinct: BTreeSet<_> = self.units.iter().collect();
        if distinct.len() != len {
            return Err(Error::validation("a sample contains a unit twice"));
        }
        for t in 0..len {
            if t < self.n0 && (self.jump_flags[t] || self.forced_flags[t]) {
                return Err(Error::validation("jump flags set inside the initial sample"));
            }
            if self.forced_flags[t] && !self.jump_flags[t] {
                return Err(Error::validation(format!("position {}: H=1 with J=0", t + 1)));
            }
        }
        if self.truncated != (len < self.target) {
            return Err(Error::validation("truncation flag disagrees with the sample size"));
        }
        Ok(())
    }
}

/// The observed data d0: ordered samples plus the degrees of every sampled
/// unit and the ties among units sampled together.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedData {
    pub design: Design,
    pub samples: Vec<OrderedSample>,
    pub degrees: BTreeMap<NodeId, u32>,
    /// Present ties `(i, j)`, `i < j`, between units of a common sample. A
    /// within-sample pair missing here is an observed absence.
    pub edges: BTreeSet<(NodeId, NodeId)>,
}

impl ObservedData {
    /// Records what a survey of `samples` reveals about `g`.
    pub fn observe(g: &PopulationGraph, design: Design, samples: Vec<OrderedSample>) -> Self {
        let mut degrees = BTreeMap::new();
        let mut edges = BTreeSet::new();
        for s in &samples {
            for &u in &s.units {
                degrees.insert(u, g.out_degree(u));
            }
            let members: BTreeSet<NodeId> = s.units.iter().copied().collect();
            for &u in &s.units {
                for &v in g.neighbors(u) {
                    if u < v && members.contains(&v) {
                        edges.insert((u, v));
                    }
                }
            }
        }
        ObservedData { design, samples, degrees, edges }
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    pub fn check(&self) -> Result<()> {
        for s in &self.samples {
            s.check()?;
            if !self.design.has_jumps() && s.jump_flags.iter().any(|&j| j) {
                return Err(Error::validation("jump recorded under the link-tracing design"));
            }
            if self.design.has_jumps() && s.truncated {
                return Err(Error::validation("a random-jump sample cannot stop early"));
            }
            for u in &s.units {
                if !self.degrees.contains_key(u) {
                    return Err(Error::validation(format!("no out-degree observed for unit {u}")));
                }
            }
        }
        for &(i, j) in &self.edges {
            if i >= j {
                return Err(Error::validation(format!("tie ({i},{j}) not stored as i < j")));
            }
            let together = self.samples.iter().any(|s| s.units.contains(&i) && s.units.contains(&j));
            if !together {
                return Err(Error::validation(format!("tie ({i},{j}) is not within one sample")));
            }
        }
        Ok(())
    }

    /// Jump-vector length L = max_k n_k.
    pub fn jump_len(&self) -> usize {
        self.samples.iter().map(|s| s.target).max().unwrap_or(0)
    }

    /// The reduction r(d0): forget selection times and forced-jump records,
    /// keep only the position-wise jump total across samples.
    pub fn reduce(&self) -> ReducedData {
        let jump_sum = self.design.has_jumps().then(|| {
            let mut sum = vec![0u32; self.jump_len()];
            for s in &self.samples {
                for (t, &j) in s.jump_flags.iter().enumerate() {
                    sum[t] += j as u32;
                }
            }
            sum
        });
        ReducedData {
            design: self.design,
            members: self
                .samples
                .iter()
                .map(|s| {
                    let mut m = s.units.clone();
                    m.sort_unstable();
                    m
                })
                .collect(),
            initial_sizes: self.samples.iter().map(|s| s.n0).collect(),
            final_sizes: self.samples.iter().map(|s| s.target).collect(),
            truncated: self.samples.iter().map(|s| s.truncated).collect(),
            degrees: self.degrees.clone(),
            edges: self.edges.clone(),
            jump_sum,
        }
    }
}

/// The sufficient statistic d_r.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedData {
    pub design: Design,
    /// Member set of each sample, sorted ascending.
    pub members: Vec<Vec<NodeId>>,
    pub initial_sizes: Vec<usize>,
    pub final_sizes: Vec<usize>,
    pub truncated: Vec<bool>,
    pub degrees: BTreeMap<NodeId, u32>,
    pub edges: BTreeSet<(NodeId, NodeId)>,
    /// 𝒥, present only under the random-jump design.
    pub jump_sum: Option<Vec<u32>>,
}

impl ReducedData {
    pub fn k(&self) -> usize {
        self.members.len()
    }

    /// Distinct units across all final samples.
    pub fn distinct_units(&self) -> usize {
        self.members.iter().flatten().collect::<BTreeSet<_>>().len()
    }
}

struct Frontier {
    in_sample: Vec<bool>,
    links: Vec<u32>,
    candidates: Vec<NodeId>,
    total: u64,
    size: usize,
}

impl Frontier {
    fn new(n: usize) -> Self {
        Frontier { in_sample: vec![false; n], links: vec![0; n], candidates: Vec::new(), total: 0, size: 0 }
    }

    fn add(&mut self, g: &PopulationGraph, u: NodeId) {
        let ui = u.index();
        self.in_sample[ui] = true;
        self.total -= u64::from(self.links[ui]);
        self.size += 1;
        for &v in g.neighbors(u) {
            let vi = v.index();
            if !self.in_sample[vi] {
                if self.links[vi] == 0 {
                    self.candidates.push(v);
                }
                self.links[vi] += 1;
                self.total += 1;
            }
        }
    }

    /// Draws an unsampled unit with probability proportional to its ties from
    /// the current sample. Requires `total > 0`.
    fn trace<R: Rng + ?Sized>(&mut self, rng: &mut R) -> NodeId {
        self.candidates.retain(|v| !self.in_sample[v.index()]);
        let mut r = rng.random_range(0..self.total);
        for &v in &self.candidates {
            let w = u64::from(self.links[v.index()]);
            if r < w {
                return v;
            }
            r -= w;
        }
        unreachable!("tie counts out of sync with frontier total")
    }

    fn jump<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        let n = self.in_sample.len();
        if self.size * 2 < n {
            loop {
                let v = rng.random_range(0..n);
                if !self.in_sample[v] {
                    return NodeId(v as u32);
                }
            }
        }
        let outside: Vec<usize> = (0..n).filter(|&v| !self.in_sample[v]).collect();
        NodeId(outside[rng.random_range(0..outside.len())] as u32)
    }
}

fn initial_sample<R: Rng + ?Sized>(g: &PopulationGraph, n0: usize, rng: &mut R) -> Vec<NodeId> {
    index::sample(rng, g.n(), n0).into_iter().map(|i| NodeId(i as u32)).collect()
}

/// Draws one sample under the link-tracing design.
pub fn draw_sample_no_jumps<R: Rng + ?Sized>(
    g: &PopulationGraph,
    n0: usize,
    n: usize,
    _policy: ActiveSetPolicy,
    rng: &mut R,
) -> Result<OrderedSample> {
    check_sizes(n0, n, g.n())?;
    let mut units = initial_sample(g, n0, rng);
    let mut frontier = Frontier::new(g.n());
    for &u in &units {
        frontier.add(g, u);
    }
    while units.len() < n {
        if frontier.total == 0 {
            break;
        }
        let next = frontier.trace(rng);
        frontier.add(g, next);
        units.push(next);
    }
    Ok(OrderedSample::traced(units, n0, n))
}

/// Draws one sample under the random-jump design. Never stops early.
pub fn draw_sample_with_jumps<R: Rng + ?Sized>(
    g: &PopulationGraph,
    n0: usize,
    n: usize,
    d: f64,
    _policy: ActiveSetPolicy,
    rng: &mut R,
) -> Result<OrderedSample> {
    check_sizes(n0, n, g.n())?;
    check_trace_probability(d)?;
    let mut units = initial_sample(g, n0, rng);
    let mut jump_flags = vec![false; n0];
    let mut forced_flags = vec![false; n0];
    let mut frontier = Frontier::new(g.n());
    for &u in &units {
        frontier.add(g, u);
    }
    while units.len() < n {
        let (next, jumped, forced) = if frontier.total == 0 {
            (frontier.jump(rng), true, true)
        } else if d >= 1.0 || rng.random_bool(d) {
            (frontier.trace(rng), false, false)
        } else {
            (frontier.jump(rng), true, false)
        };
        frontier.add(g, next);
        units.push(next);
        jump_flags.push(jumped);
        forced_flags.push(forced);
    }
    Ok(OrderedSample { units, n0, target: n, jump_flags, forced_flags, truncated: false })
}

/// Draws all K samples of one replication. Sample `k` of replication `rep`
/// uses the stream `(seed, rep, k)`.
pub fn draw_study(g: &PopulationGraph, cfg: &DesignConfig, seed: u64, rep: u64) -> Result<ObservedData> {
    cfg.validate(g.n())?;
    let samples = (0..cfg.k())
        .map(|k| {
            let mut rng = stream_rng(seed, &[rep, k as u64]);
            let (n0, n) = (cfg.initial_sizes[k], cfg.final_sizes[k]);
            match cfg.design {
                Design::LinkTracing => draw_sample_no_jumps(g, n0, n, cfg.policy, &mut rng),
                Design::RandomJumps { d } => draw_sample_with_jumps(g, n0, n, d, cfg.policy, &mut rng),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservedData::observe(g, cfg.design, samples))
}
