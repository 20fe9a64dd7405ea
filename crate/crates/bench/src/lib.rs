//! Shared fixtures for the benchmarks.

use linktrace::harness::STUDY_POPULATION;
use linktrace::sampler::draw_study;
use linktrace::{Design, DesignConfig, ObservedData, PopulationGraph, ReorderContext};

/// The synthetic study population used by the replication studies.
pub fn study_population() -> PopulationGraph {
    STUDY_POPULATION.load().expect("synthetic population")
}

/// One replication of the K-sample design with n0 = 60 and n = 70.
pub fn study_draw(g: &PopulationGraph, k: usize, rep: u64) -> (ObservedData, ReorderContext) {
    let cfg = DesignConfig::uniform(k, 60, 70, Design::LinkTracing);
    let d0 = draw_study(g, &cfg, 1, rep).expect("draw");
    let ctx = ReorderContext::new(&d0.reduce()).expect("reduced data");
    (d0, ctx)
}

/// A study small enough for exact enumeration: two samples of five from a
/// 40-unit population, two initial units each.
pub fn enumerable_draw() -> (ObservedData, ReorderContext) {
    let g = linktrace::netpop::generate_synthetic(40, 3.0, 11).expect("graph");
    let cfg = DesignConfig::uniform(2, 2, 5, Design::LinkTracing);
    let d0 = draw_study(&g, &cfg, 3, 0).expect("draw");
    let ctx = ReorderContext::new(&d0.reduce()).expect("reduced data");
    (d0, ctx)
}
