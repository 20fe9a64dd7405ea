//! Shared fixtures for the integration tests and the acceptance runner.
#![allow(dead_code)]

use linktrace::reorder::{JumpRecord, SampleOrdering};
use linktrace::sampler::{draw_study, ObservedData, OrderedSample};
use linktrace::{Design, DesignConfig, NodeId, PopulationGraph, ReorderContext, Reordering};

pub const A: u32 = 0;
pub const B: u32 = 1;
pub const C: u32 = 2;
pub const D: u32 = 3;
pub const E: u32 = 4;

pub fn ids(v: &[u32]) -> Vec<NodeId> {
    v.iter().map(|&i| NodeId(i)).collect()
}

/// Two samples of three with single-unit initial samples. Degrees: A 2, B 3,
/// C 3, D 3, E 1; units 5.. are unsampled neighbors.
pub fn abcde_graph() -> PopulationGraph {
    PopulationGraph::from_edges(9, [(A, B), (A, D), (B, C), (B, 5), (C, 6), (C, 7), (D, E), (D, 8)]).unwrap()
}

pub fn abcde_data() -> ObservedData {
    let samples = vec![OrderedSample::traced(ids(&[A, B, C]), 1, 3), OrderedSample::traced(ids(&[A, D, E]), 1, 3)];
    ObservedData::observe(&abcde_graph(), Design::LinkTracing, samples)
}

/// Same people as [`abcde_graph`] except that D's only tie is to A and E is
/// isolated.
pub fn jump_graph() -> PopulationGraph {
    PopulationGraph::from_edges(8, [(A, B), (A, D), (B, C), (B, 5), (C, 6), (C, 7)]).unwrap()
}

pub fn flags(v: &[u8]) -> Vec<bool> {
    v.iter().map(|&x| x == 1).collect()
}

/// Sample 1 traces A→B then jumps to C; sample 2 starts at the isolated E,
/// is forced to jump to D and traces D→A.
pub fn jump_data(d: f64) -> ObservedData {
    let samples = vec![
        OrderedSample::traced(ids(&[A, B, C]), 1, 3).with_flags(&flags(&[0, 0, 1]), &flags(&[0, 0, 0])),
        OrderedSample::traced(ids(&[E, D, A]), 1, 3).with_flags(&flags(&[0, 1, 0]), &flags(&[0, 1, 0])),
    ];
    ObservedData::observe(&jump_graph(), Design::RandomJumps { d }, samples)
}

/// The trace-only version of the jump example: sample 1 is fully traced.
pub fn jump_data_d1() -> ObservedData {
    let samples = vec![
        OrderedSample::traced(ids(&[A, B, C]), 1, 3).with_flags(&flags(&[0, 0, 0]), &flags(&[0, 0, 0])),
        OrderedSample::traced(ids(&[E, D, A]), 1, 3).with_flags(&flags(&[0, 1, 0]), &flags(&[0, 1, 0])),
    ];
    ObservedData::observe(&jump_graph(), Design::RandomJumps { d: 1.0 }, samples)
}

pub fn ordering(units: &[u32], n0: usize) -> SampleOrdering {
    SampleOrdering { units: ids(units), n0 }
}

pub fn jumps(j: &[u8], h: &[u8]) -> JumpRecord {
    JumpRecord { jump: flags(j), forced: flags(h) }
}

pub fn reordering(samples: &[&[u32]], n0: usize) -> Reordering {
    Reordering::new(samples.iter().map(|s| ordering(s, n0)).collect())
}

pub fn context(d0: &ObservedData) -> ReorderContext {
    ReorderContext::new(&d0.reduce()).unwrap()
}

/// A small study small enough to enumerate: Π R_k stays below `cap`.
pub struct Instance {
    pub name: String,
    pub graph: PopulationGraph,
    pub data: ObservedData,
}

/// Enumerable link-tracing studies on small random graphs, plus the ABCDE
/// example. Each has between 4 and 200 consistent reordering tuples; the
/// last one contains a sample that stopped early.
pub fn enumerable_instances() -> Vec<Instance> {
    let mut out = vec![Instance { name: "abcde".into(), graph: abcde_graph(), data: abcde_data() }];
    // (N, mean degree, seed, K, n0, n, need a truncated sample)
    let specs: [(usize, f64, u64, usize, usize, usize, bool); 6] = [
        (16, 2.0, 16, 2, 1, 4, false),
        (12, 2.0, 21, 2, 1, 3, false),
        (20, 2.5, 22, 3, 1, 3, false),
        (14, 3.0, 23, 2, 2, 4, false),
        (30, 3.0, 24, 2, 2, 4, false),
        (16, 2.0, 16, 2, 1, 4, true),
    ];
    for (n, deg, seed, k, n0, size, truncated) in specs {
        let graph = linktrace::netpop::generate_synthetic(n, deg, seed).unwrap();
        let cfg = DesignConfig::uniform(k, n0, size, Design::LinkTracing);
        let (rep, data) = (0..500)
            .map(|rep| (rep, draw_study(&graph, &cfg, seed, rep).unwrap()))
            .find(|(_, d0)| {
                let ctx = context(d0);
                let dist = linktrace::reorder::conditional_distribution(&ctx, 100_000);
                matches!(dist, Ok(d) if d.diagnostics.consistent > 3.0 && d.diagnostics.consistent <= 200.0)
                    && d0.samples.iter().any(|s| s.truncated) == truncated
            })
            .expect("some replication is enumerable");
        out.push(Instance { name: format!("n{n}-k{k}-seed{seed}-rep{rep}"), graph, data });
    }
    out
}

/// Probability of one ordered sample computed directly on the population
/// graph, independently of the reduced-data replay: 1/C(N, n0) times the
/// product of w(a_t, i)/w(a_t, +) with w(a_t, +) counted by scanning every
/// unit outside the current sample.
pub fn graph_sample_probability(g: &PopulationGraph, units: &[NodeId], n0: usize, truncated: bool) -> f64 {
    let big_n = g.n() as f64;
    let mut p = 1.0;
    for i in 0..n0 {
        p *= (i + 1) as f64 / (big_n - i as f64);
    }
    let mut in_sample = vec![false; g.n()];
    for u in &units[..n0] {
        in_sample[u.index()] = true;
    }
    let out_ties = |in_sample: &[bool]| -> (Vec<u32>, u32) {
        let mut to = vec![0u32; g.n()];
        let mut total = 0;
        for v in g.nodes() {
            if in_sample[v.index()] {
                continue;
            }
            for &a in g.neighbors(v) {
                if in_sample[a.index()] {
                    to[v.index()] += 1;
                    total += 1;
                }
            }
        }
        (to, total)
    };
    for u in &units[n0..] {
        let (to, total) = out_ties(&in_sample);
        if total == 0 {
            return 0.0;
        }
        p *= f64::from(to[u.index()]) / f64::from(total);
        in_sample[u.index()] = true;
    }
    if truncated && out_ties(&in_sample).1 != 0 {
        return 0.0;
    }
    p
}

/// The graph with `extra` isolated units appended; tie counts are unchanged,
/// only N grows.
pub fn padded(g: &PopulationGraph, extra: usize) -> PopulationGraph {
    PopulationGraph::from_edges(g.n() + extra, g.edges().map(|(a, b)| (a.0, b.0))).unwrap()
}

/// Largest relative gap between the conditional reordering probabilities
/// obtained by normalizing q products and by normalizing full probabilities
/// computed on the graph padded to three population sizes.
pub fn no_jump_factorization_gap(inst: &Instance) -> f64 {
    use linktrace::reorder::{conditional_distribution, enumerate_local};
    let ctx = context(&inst.data);
    let dist = conditional_distribution(&ctx, 1_000_000).unwrap();
    let mut worst: f64 = 0.0;
    for extra in [0usize, 90, 990] {
        let g = padded(&inst.graph, extra);
        let per_sample: Vec<Vec<(Vec<u32>, f64)>> = ctx
            .frames()
            .iter()
            .map(|f| {
                enumerate_local(f, 1_000_000)
                    .unwrap()
                    .map(|o| {
                        let units: Vec<NodeId> = o.iter().map(|&l| f.unit(l)).collect();
                        let p = graph_sample_probability(&g, &units, f.n0(), f.truncated());
                        (o, p)
                    })
                    .collect()
            })
            .collect();
        let totals: Vec<f64> = per_sample.iter().map(|l| l.iter().map(|(_, p)| p).sum()).collect();
        for (orders, p_q) in dist.tuples() {
            let mut p_full = 1.0;
            for (k, o) in orders.iter().enumerate() {
                let n0 = ctx.frame(k).n0();
                let want = linktrace::reorder::canonical(o, n0);
                let p: f64 = per_sample[k]
                    .iter()
                    .filter(|(x, _)| linktrace::reorder::canonical(x, n0) == want)
                    .map(|(_, p)| p)
                    .sum();
                p_full *= p / totals[k];
            }
            worst = worst.max(((p_full - p_q) / p_q).abs());
        }
    }
    worst
}

/// Every (ordering, jump pattern) tuple of the jump example that is
/// consistent with its reduced data.
pub fn jump_tuples(ctx: &ReorderContext) -> Vec<Reordering> {
    use itertools::Itertools;
    use linktrace::reorder::{enumerate_reorderings, is_consistent};
    let per_sample: Vec<Vec<(SampleOrdering, JumpRecord)>> = (0..ctx.k())
        .map(|k| {
            let len = ctx.frame(k).len();
            let n0 = ctx.frame(k).n0();
            enumerate_reorderings(ctx, k, 1000)
                .unwrap()
                .flat_map(|o| {
                    let adaptive = len - n0;
                    (0..(1u32 << (2 * adaptive))).map(move |bits| {
                        let mut jump = vec![false; len];
                        let mut forced = vec![false; len];
                        for t in 0..adaptive {
                            jump[n0 + t] = bits >> (2 * t) & 1 == 1;
                            forced[n0 + t] = bits >> (2 * t + 1) & 1 == 1;
                        }
                        (o.clone(), JumpRecord { jump, forced })
                    })
                })
                .collect()
        })
        .collect();
    per_sample
        .iter()
        .map(|l| l.iter())
        .multi_cartesian_product()
        .map(|picks| {
            let (samples, jumps): (Vec<_>, Vec<_>) = picks.into_iter().cloned().unzip();
            Reordering::with_jumps(samples, jumps)
        })
        .filter(|r| is_consistent(ctx, r))
        .collect()
}

/// Largest relative gap between conditional probabilities of the consistent
/// jump-design tuples computed from the N-free weights and from the full
/// probabilities at N = 10, 100, 1000.
pub fn jump_factorization_gap(d: f64) -> (f64, usize) {
    use linktrace::reorder::{jump_weight, ordered_prob_with_jumps};
    let d0 = jump_data(d);
    let ctx = context(&d0);
    let tuples = jump_tuples(&ctx);
    let weights: Vec<f64> = tuples.iter().map(|r| jump_weight(&ctx, r, d).unwrap()).collect();
    let wsum: f64 = weights.iter().sum();
    let mut worst: f64 = 0.0;
    for big_n in [10u64, 100, 1000] {
        let full: Vec<f64> = tuples.iter().map(|r| ordered_prob_with_jumps(&ctx, r, d, big_n).unwrap()).collect();
        let fsum: f64 = full.iter().sum();
        for (w, f) in weights.iter().zip(&full) {
            let (a, b) = (w / wsum, f / fsum);
            worst = worst.max(((a - b) / a).abs());
        }
    }
    (worst, tuples.len())
}

/// Chain-vs-enumeration comparison on one instance.
#[derive(Debug)]
pub struct ChainCheck {
    pub exact_point: f64,
    pub chain_point: f64,
    pub exact_var: f64,
    pub chain_var: f64,
    /// E[v̂ | d_r], the scale for the variance tolerance.
    pub prelim_var: f64,
    pub tv: f64,
    pub states: usize,
}

impl ChainCheck {
    pub fn point_rel(&self) -> f64 {
        ((self.chain_point - self.exact_point) / self.exact_point).abs()
    }

    pub fn var_rel(&self) -> f64 {
        (self.chain_var - self.exact_var).abs() / self.prelim_var
    }
}

/// Runs the chain for `iterations` (estimates) and `tv_iterations` (state
/// frequencies) and compares with exact enumeration.
pub fn chain_vs_exact(inst: &Instance, iterations: u64, tv_iterations: u64, seed: u64) -> ChainCheck {
    use linktrace::mcmc::{run_chain, Chain};
    use linktrace::reorder::{canonical, conditional_distribution, exact_rb};
    use linktrace::rng::stream_rng;
    use linktrace::{ChainConfig, Estimator};
    use std::collections::HashMap;

    let ctx = context(&inst.data);
    let original = Reordering::original(&inst.data);
    let exact = exact_rb(&ctx, &[Estimator::Chapman], 1_000_000).unwrap();
    let ex = exact.get(Estimator::Chapman).unwrap();
    let mut rng = stream_rng(seed, &[1]);
    let res = run_chain(&ctx, &original, &[Estimator::Chapman], &ChainConfig::new(iterations), &mut rng).unwrap();
    let ch = res.get(Estimator::Chapman).unwrap();

    let dist = conditional_distribution(&ctx, 1_000_000).unwrap();
    let key = |orders: &[Vec<u32>]| -> Vec<Vec<u32>> {
        orders.iter().enumerate().map(|(k, o)| canonical(o, ctx.frame(k).n0())).collect()
    };
    let mut counts: HashMap<Vec<Vec<u32>>, u64> = HashMap::new();
    let mut chain = Chain::new(&ctx, &original, &[]).unwrap();
    let mut rng = stream_rng(seed, &[2]);
    for _ in 0..tv_iterations {
        chain.step(&mut rng).unwrap();
        *counts.entry(key(chain.current())).or_default() += 1;
    }
    let mut tv = 0.0;
    let mut states = 0;
    for (orders, p) in dist.tuples() {
        states += 1;
        let owned: Vec<Vec<u32>> = orders.iter().map(|o| o.to_vec()).collect();
        let f = counts.remove(&key(&owned)).unwrap_or(0) as f64 / tv_iterations as f64;
        tv += (f - p).abs();
    }
    // visits to states outside the support would count fully
    tv += counts.values().sum::<u64>() as f64 / tv_iterations as f64;
    ChainCheck {
        exact_point: ex.point,
        chain_point: ch.point,
        exact_var: ex.var,
        chain_var: ch.var,
        prelim_var: ex.mean_var_est,
        tv: tv / 2.0,
        states,
    }
}
