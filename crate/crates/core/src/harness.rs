//! Replication studies: draw K-sample studies from a population, compute
//! preliminary and resampled Rao-Blackwell estimates, and tally interval
//! coverage against the true population values.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{Estimate, EstimateReport, Estimator, InitialSamples, RbEstimate};
use crate::mcmc::{run_chain, ChainConfig, TraceRow};
use crate::netpop::{generate_synthetic, load_edge_list, NodeId, PopulationGraph};
use crate::reorder::{ReorderContext, Reordering};
use crate::rng::stream_rng;
use crate::sampler::{draw_study, Design, DesignConfig};

const CHAIN_STREAM: u64 = 0x6d63_6d63;
const SRS_STREAM: u64 = 0x0073_7273;

/// Where the population comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Synthetic { nodes: usize, mean_degree: f64, seed: u64 },
}

impl GraphSource {
    pub fn load(&self) -> Result<PopulationGraph> {
        match self {
            GraphSource::File(path) => {
                let f = std::fs::File::open(path)?;
                load_edge_list(std::io::BufReader::new(f))
            }
            GraphSource::Synthetic { nodes, mean_degree, seed } => generate_synthetic(*nodes, *mean_degree, *seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub graph: GraphSource,
    pub design: DesignConfig,
    pub replications: u64,
    pub mcmc_iterations: u64,
    pub estimators: Vec<Estimator>,
    pub level: f64,
    pub seed: u64,
    /// Size of each simple random sample in the SRS baseline; 0 disables it.
    pub srs_size: usize,
    pub srs_replications: u64,
    /// Keep per-iteration chain traces for the first this-many replications.
    pub trace_replications: u64,
}

/// Named configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Two samples, 2000 replications, 20,000 resamples.
    Paper2Sample,
    /// Three samples, 2000 replications, 30,000 resamples.
    Paper3Sample,
    /// Two samples, 500 replications, 5,000 resamples.
    Desk2Sample,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-2sample" => Ok(Preset::Paper2Sample),
            "paper-3sample" => Ok(Preset::Paper3Sample),
            "desk-2sample" => Ok(Preset::Desk2Sample),
            _ => Err(Error::validation(format!("unknown preset `{s}` (paper-2sample, paper-3sample, desk-2sample)"))),
        }
    }
}

/// Synthetic stand-in for the study population: 595 people, mean degree 2.45.
pub const STUDY_POPULATION: GraphSource = GraphSource::Synthetic { nodes: 595, mean_degree: 2.45, seed: 1987 };

impl StudyConfig {
    pub fn preset(p: Preset) -> Self {
        let (k, reps, iters, estimators) = match p {
            Preset::Paper2Sample => (2, 2000, 20_000, vec![Estimator::Chapman, Estimator::AvgOutDegree]),
            Preset::Desk2Sample => (2, 500, 5_000, vec![Estimator::Chapman, Estimator::AvgOutDegree]),
            Preset::Paper3Sample => (3, 2000, 30_000, vec![Estimator::M0, Estimator::ChaoLb, Estimator::AvgOutDegree]),
        };
        StudyConfig {
            graph: STUDY_POPULATION,
            design: DesignConfig::uniform(k, 60, 70, Design::LinkTracing),
            replications: reps,
            mcmc_iterations: iters,
            estimators,
            level: 0.95,
            seed: 1,
            srs_size: 70,
            srs_replications: reps,
            trace_replications: 0,
        }
    }

    /// Parses `key=value` lines on top of the two-sample desk preset.
    ///
    /// Keys: `preset`, `graph` (`synthetic` or a file path), `nodes`,
    /// `mean_degree`, `graph_seed`, `samples`, `initial_size`, `final_size`,
    /// `replications`, `mcmc_iterations`, `estimators` (comma list), `level`,
    /// `seed`, `srs_size`, `srs_replications`, `trace_replications`.
    pub fn parse<R: BufRead>(source: R) -> Result<Self> {
        let mut cfg = StudyConfig::preset(Preset::Desk2Sample);
        let mut srs_reps_set = false;
        let (mut k, mut n0, mut n) = (2usize, 60usize, 70usize);
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let no = idx + 1;
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::parse(no, format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(no: usize, key: &str, v: &str) -> Result<T> {
                v.parse().map_err(|_| Error::parse(no, format!("bad value `{v}` for `{key}`")))
            }
            match key {
                "preset" => {
                    let keep = cfg.graph.clone();
                    cfg = StudyConfig::preset(value.parse()?);
                    cfg.graph = keep;
                    k = cfg.design.k();
                    n0 = cfg.design.initial_sizes[0];
                    n = cfg.design.final_sizes[0];
                }
                "graph" if value == "synthetic" => {
                    if !matches!(cfg.graph, GraphSource::Synthetic { .. }) {
                        cfg.graph = STUDY_POPULATION;
                    }
                }
                "graph" => cfg.graph = GraphSource::File(PathBuf::from(value)),
                "nodes" | "mean_degree" | "graph_seed" => {
                    let GraphSource::Synthetic { nodes, mean_degree, seed } = &mut cfg.graph else {
                        return Err(Error::parse(no, format!("`{key}` needs graph=synthetic")));
                    };
                    match key {
                        "nodes" => *nodes = num(no, key, value)?,
                        "mean_degree" => *mean_degree = num(no, key, value)?,
                        _ => *seed = num(no, key, value)?,
                    }
                }
                "samples" => k = num(no, key, value)?,
                "initial_size" => n0 = num(no, key, value)?,
                "final_size" => n = num(no, key, value)?,
                "replications" => cfg.replications = num(no, key, value)?,
                "mcmc_iterations" => cfg.mcmc_iterations = num(no, key, value)?,
                "estimators" => {
                    cfg.estimators =
                        value.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?
                }
                "level" => cfg.level = num(no, key, value)?,
                "seed" => cfg.seed = num(no, key, value)?,
                "srs_size" => cfg.srs_size = num(no, key, value)?,
                "srs_replications" => {
                    cfg.srs_replications = num(no, key, value)?;
                    srs_reps_set = true;
                }
                "trace_replications" => cfg.trace_replications = num(no, key, value)?,
                _ => return Err(Error::parse(no, format!("unknown key `{key}`"))),
            }
        }
        cfg.design = DesignConfig::uniform(k, n0, n, Design::LinkTracing);
        if !srs_reps_set {
            cfg.srs_replications = cfg.replications;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::validation("replications must be at least 1"));
        }
        if self.mcmc_iterations == 0 {
            return Err(Error::validation("mcmc_iterations must be at least 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::validation(format!("level {} outside (0, 1)", self.level)));
        }
        if self.design.design.has_jumps() {
            return Err(Error::validation("studies use the link-tracing design"));
        }
        for e in &self.estimators {
            if self.design.k() < e.min_samples() {
                return Err(Error::validation(format!(
                    "{e} needs at least {} samples, study has {}",
                    e.min_samples(),
                    self.design.k()
                )));
            }
        }
        Ok(())
    }
}

/// Everything recorded about one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub rep: u64,
    /// Per estimator, in config order.
    pub prelim: Vec<Estimate>,
    pub rb: Vec<RbEstimate>,
    /// Distinct units in the initial samples (|M|).
    pub distinct_initial: u64,
    /// Distinct units in the final samples.
    pub distinct_final: u64,
    pub truncated: bool,
    pub acceptance_rate: f64,
    pub trace: Option<Vec<TraceRow>>,
}

/// Runs one replication: draw, preliminary estimates, resampling chain.
pub fn run_replication(g: &PopulationGraph, cfg: &StudyConfig, rep: u64) -> Result<ReplicationRecord> {
    let d0 = draw_study(g, &cfg.design, cfg.seed, rep)?;
    let dr = d0.reduce();
    let ctx = ReorderContext::new(&dr)?;
    let original = Reordering::original(&d0);
    let sets: Vec<Vec<(NodeId, u32)>> =
        d0.samples.iter().map(|s| s.initial().iter().map(|&u| (u, d0.degrees[&u])).collect()).collect();
    let init = InitialSamples::new(&sets);
    let prelim = cfg.estimators.iter().map(|e| e.evaluate(&init)).collect::<Result<Vec<_>>>()?;
    let chain_cfg = ChainConfig { iterations: cfg.mcmc_iterations, record_trace: rep < cfg.trace_replications };
    let mut rng = stream_rng(cfg.seed, &[CHAIN_STREAM, rep]);
    let chain = run_chain(&ctx, &original, &cfg.estimators, &chain_cfg, &mut rng)?;
    Ok(ReplicationRecord {
        rep,
        prelim,
        rb: chain.estimates.iter().map(|(_, r)| *r).collect(),
        distinct_initial: init.summary.distinct,
        distinct_final: dr.distinct_units() as u64,
        truncated: dr.truncated.iter().any(|&t| t),
        acceptance_rate: chain.acceptance_rate(),
        trace: chain.trace,
    })
}

/// Aggregates over replications for one estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorRow {
    pub estimator: Estimator,
    pub truth: f64,
    pub mean_prelim: f64,
    pub var_prelim: f64,
    pub mean_rb: f64,
    pub var_rb: f64,
    pub var_srs: Option<f64>,
    pub cover_clt_prelim: f64,
    pub cover_clt_rb: f64,
    pub cover_log_prelim: Option<f64>,
    pub cover_log_rb: Option<f64>,
    pub len_clt_prelim: f64,
    pub len_clt_rb: f64,
    pub len_log_prelim: Option<f64>,
    pub len_log_rb: Option<f64>,
    pub fallback_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub rows: Vec<EstimatorRow>,
    pub replications: u64,
}

/// Sample mean and variance (divisor n − 1).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (mean_var(xs).1 / xs.len() as f64).sqrt()
}

/// Var(a) − Var(b) for paired draws, with the standard error of the
/// difference from the per-draw squared deviations.
pub fn paired_variance_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let scale = a.len() as f64 / (a.len() as f64 - 1.0);
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| scale * ((x - ma).powi(2) - (y - mb).powi(2))).collect();
    (va - vb, std_error(&d))
}

/// Mean of a − b for paired draws, with its standard error.
pub fn paired_mean_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    (mean_var(&d).0, std_error(&d))
}

fn rate(hits: impl Iterator<Item = bool>) -> f64 {
    let (mut n, mut h) = (0u64, 0u64);
    for x in hits {
        n += 1;
        h += x as u64;
    }
    h as f64 / n as f64
}

/// Aggregates records into table rows. `truth` is N for population-size
/// estimators and the mean out-degree otherwise.
pub fn summarize(
    estimators: &[Estimator],
    records: &[ReplicationRecord],
    g: &PopulationGraph,
    level: f64,
    srs: &[Option<f64>],
) -> StudyResult {
    let rows = estimators
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let truth = if e.is_population_size() { g.n() as f64 } else { g.mean_out_degree() };
            let pre: Vec<f64> = records.iter().map(|r| r.prelim[i].point).collect();
            let rb: Vec<f64> = records.iter().map(|r| r.rb[i].point).collect();
            let (mean_prelim, var_prelim) = mean_var(&pre);
            let (mean_rb, var_rb) = mean_var(&rb);
            let reports: Vec<(EstimateReport, EstimateReport)> = records
                .iter()
                .map(|r| {
                    let (m0, m1) = if e.is_population_size() {
                        (Some(r.distinct_initial as f64), Some(r.distinct_final as f64))
                    } else {
                        (None, None)
                    };
                    let p = r.prelim[i];
                    let b = r.rb[i];
                    (
                        EstimateReport::new(p.point, p.var, m0, level, false),
                        EstimateReport::new(b.point, b.var, m1, level, b.fallback_used),
                    )
                })
                .collect();
            let mean_of = |f: &dyn Fn(&(EstimateReport, EstimateReport)) -> f64| {
                reports.iter().map(f).sum::<f64>() / reports.len() as f64
            };
            let log = e.is_population_size();
            EstimatorRow {
                estimator: e,
                truth,
                mean_prelim,
                var_prelim,
                mean_rb,
                var_rb,
                var_srs: srs.get(i).copied().flatten(),
                cover_clt_prelim: rate(reports.iter().map(|r| r.0.ci_clt.contains(truth))),
                cover_clt_rb: rate(reports.iter().map(|r| r.1.ci_clt.contains(truth))),
                cover_log_prelim: log
                    .then(|| rate(reports.iter().map(|r| r.0.ci_log.unwrap().interval.contains(truth)))),
                cover_log_rb: log.then(|| rate(reports.iter().map(|r| r.1.ci_log.unwrap().interval.contains(truth)))),
                len_clt_prelim: mean_of(&|r| r.0.ci_clt.length()),
                len_clt_rb: mean_of(&|r| r.1.ci_clt.length()),
                len_log_prelim: log.then(|| mean_of(&|r| r.0.ci_log.unwrap().interval.length())),
                len_log_rb: log.then(|| mean_of(&|r| r.1.ci_log.unwrap().interval.length())),
                fallback_rate: rate(records.iter().map(|r| r.rb[i].fallback_used)),
            }
        })
        .collect();
    StudyResult { rows, replications: records.len() as u64 }
}

/// Monte Carlo variance of an estimator applied to K simple random samples
/// of the given sizes (no link tracing).
pub fn srs_baseline(g: &PopulationGraph, sizes: &[usize], e: Estimator, replications: u64, seed: u64) -> Result<f64> {
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > g.n()) {
        return Err(Error::validation(format!("SRS size {bad} outside [1, {}]", g.n())));
    }
    if replications < 2 {
        return Err(Error::validation("the SRS baseline needs at least two replications"));
    }
    let points = srs_points(g, sizes, e, replications, seed)?;
    Ok(mean_var(&points).1)
}

/// Point estimates of the SRS baseline, one per replication.
pub fn srs_points(
    g: &PopulationGraph,
    sizes: &[usize],
    e: Estimator,
    replications: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, &[SRS_STREAM, rep]);
            let sets: Vec<Vec<(NodeId, u32)>> = sizes
                .iter()
                .map(|&s| {
                    index::sample(&mut rng, g.n(), s)
                        .into_iter()
                        .map(|i| {
                            let u = NodeId(i as u32);
                            (u, g.out_degree(u))
                        })
                        .collect()
                })
                .collect();
            e.evaluate(&InitialSamples::new(&sets)).map(|x| x.point)
        })
        .collect()
}

/// A finished study: configuration, per-replication records and the table.
#[derive(Clone, Debug)]
pub struct Study {
    pub records: Vec<ReplicationRecord>,
    pub result: StudyResult,
}

pub fn run_study(cfg: &StudyConfig) -> Result<Study> {
    let g = cfg.graph.load()?;
    run_study_on(&g, cfg)
}

/// Runs a study on an already loaded population.
pub fn run_study_on(g: &PopulationGraph, cfg: &StudyConfig) -> Result<Study> {
    cfg.validate()?;
    cfg.design.validate(g.n())?;
    let records =
        (0..cfg.replications).into_par_iter().map(|rep| run_replication(g, cfg, rep)).collect::<Result<Vec<_>>>()?;
    let srs = cfg
        .estimators
        .iter()
        .map(|&e| {
            if cfg.srs_size == 0 || cfg.srs_replications < 2 {
                return Ok(None);
            }
            srs_baseline(g, &vec![cfg.srs_size; cfg.design.k()], e, cfg.srs_replications, cfg.seed).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    let result = summarize(&cfg.estimators, &records, g, cfg.level, &srs);
    Ok(Study { records, result })
}

// ---------------------------------------------------------------- reports

const TABLE_HEADER: &str = "estimator,truth,mean_prelim,var_prelim,mean_rb,var_rb,var_srs,fallback_rate";
const COVERAGE_HEADER: &str =
    "estimator,clt_prelim,clt_rb,log_prelim,log_rb,len_clt_prelim,len_clt_rb,len_log_prelim,len_log_rb";

fn decimals(e: Estimator) -> usize {
    if e.is_population_size() {
        0
    } else {
        3
    }
}

fn round_to(x: f64, places: usize) -> f64 {
    let s = format!("{x:.places$}");
    s.parse().unwrap_or(x)
}

impl EstimatorRow {
    /// The row as it reads back from the CSV output: size quantities as
    /// integers, mean out-degree quantities and all rates to 3 decimals.
    pub fn rounded(&self) -> Self {
        let p = decimals(self.estimator);
        let r = |x: f64| round_to(x, p);
        let c = |x: f64| round_to(x, 3);
        EstimatorRow {
            estimator: self.estimator,
            truth: round_to(self.truth, 3),
            mean_prelim: r(self.mean_prelim),
            var_prelim: r(self.var_prelim),
            mean_rb: r(self.mean_rb),
            var_rb: r(self.var_rb),
            var_srs: self.var_srs.map(r),
            cover_clt_prelim: c(self.cover_clt_prelim),
            cover_clt_rb: c(self.cover_clt_rb),
            cover_log_prelim: self.cover_log_prelim.map(c),
            cover_log_rb: self.cover_log_rb.map(c),
            len_clt_prelim: r(self.len_clt_prelim),
            len_clt_rb: r(self.len_clt_rb),
            len_log_prelim: self.len_log_prelim.map(r),
            len_log_rb: self.len_log_rb.map(r),
            fallback_rate: c(self.fallback_rate),
        }
    }
}

fn cell(x: Option<f64>, places: usize) -> String {
    x.map_or(String::new(), |v| format!("{v:.places$}"))
}

/// Writes `table.csv` content: one row per estimator.
pub fn write_table_csv<W: Write>(result: &StudyResult, mut out: W) -> Result<()> {
    writeln!(out, "{TABLE_HEADER}")?;
    for row in &result.rows {
        let p = decimals(row.estimator);
        writeln!(
            out,
            "{},{:.3},{:.p$},{:.p$},{:.p$},{:.p$},{},{:.3}",
            row.estimator,
            row.truth,
            row.mean_prelim,
            row.var_prelim,
            row.mean_rb,
            row.var_rb,
            cell(row.var_srs, p),
            row.fallback_rate
        )?;
    }
    Ok(())
}

/// Writes `coverage.csv` content: one row per estimator.
pub fn write_coverage_csv<W: Write>(result: &StudyResult, mut out: W) -> Result<()> {
    writeln!(out, "{COVERAGE_HEADER}")?;
    for row in &result.rows {
        let p = decimals(row.estimator);
        writeln!(
            out,
            "{},{:.3},{:.3},{},{},{:.p$},{:.p$},{},{}",
            row.estimator,
            row.cover_clt_prelim,
            row.cover_clt_rb,
            cell(row.cover_log_prelim, 3),
            cell(row.cover_log_rb, 3),
            row.len_clt_prelim,
            row.len_clt_rb,
            cell(row.len_log_prelim, p),
            cell(row.len_log_rb, p)
        )?;
    }
    Ok(())
}

fn csv_records<R: BufRead>(source: R, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = source.lines();
    let first = lines.next().transpose()?;
    if first.as_deref().map(str::trim) != Some(header) {
        return Err(Error::parse(1, format!("expected header `{header}`")));
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != width {
            return Err(Error::parse(idx + 2, format!("expected {width} fields, got {}", fields.len())));
        }
        out.push((idx + 2, fields));
    }
    Ok(out)
}

fn field(no: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::parse(no, format!("bad number `{s}`")))
}

fn opt_field(no: usize, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(no, s).map(Some)
    }
}

/// Reads `table.csv` and `coverage.csv` back into rows.
pub fn read_report<R1: BufRead, R2: BufRead>(table: R1, coverage: R2) -> Result<StudyResult> {
    let table = csv_records(table, TABLE_HEADER)?;
    let coverage = csv_records(coverage, COVERAGE_HEADER)?;
    if table.len() != coverage.len() {
        return Err(Error::validation("table and coverage have different row counts"));
    }
    let rows = table
        .iter()
        .zip(&coverage)
        .map(|((no, t), (cno, c))| {
            let (no, cno) = (*no, *cno);
            if t[0] != c[0] {
                return Err(Error::parse(cno, format!("estimator `{}` does not match `{}`", c[0], t[0])));
            }
            Ok(EstimatorRow {
                estimator: t[0].parse()?,
                truth: field(no, &t[1])?,
                mean_prelim: field(no, &t[2])?,
                var_prelim: field(no, &t[3])?,
                mean_rb: field(no, &t[4])?,
                var_rb: field(no, &t[5])?,
                var_srs: opt_field(no, &t[6])?,
                fallback_rate: field(no, &t[7])?,
                cover_clt_prelim: field(cno, &c[1])?,
                cover_clt_rb: field(cno, &c[2])?,
                cover_log_prelim: opt_field(cno, &c[3])?,
                cover_log_rb: opt_field(cno, &c[4])?,
                len_clt_prelim: field(cno, &c[5])?,
                len_clt_rb: field(cno, &c[6])?,
                len_log_prelim: opt_field(cno, &c[7])?,
                len_log_rb: opt_field(cno, &c[8])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyResult { rows, replications: 0 })
}

/// Human-readable aligned table.
pub fn format_table(result: &StudyResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "replications: {}", result.replications);
    let _ = writeln!(
        s,
        "{:<14} {:>9} {:>10} {:>11} {:>10} {:>11} {:>11}",
        "estimator", "truth", "E[prelim]", "Var[prelim]", "E[RB]", "Var[RB]", "Var[SRS]"
    );
    for row in &result.rows {
        let p = decimals(row.estimator);
        let _ = writeln!(
            s,
            "{:<14} {:>9.3} {:>10.p$} {:>11.p$} {:>10.p$} {:>11.p$} {:>11}",
            row.estimator.name(),
            row.truth,
            row.mean_prelim,
            row.var_prelim,
            row.mean_rb,
            row.var_rb,
            cell(row.var_srs, p)
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<14} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "coverage", "CLT prel", "CLT RB", "log prel", "log RB", "len prel", "len RB"
    );
    for row in &result.rows {
        let p = decimals(row.estimator);
        let (lp, lr) = match (row.len_log_prelim, row.len_log_rb) {
            (Some(a), Some(b)) => (a, b),
            _ => (row.len_clt_prelim, row.len_clt_rb),
        };
        let _ = writeln!(
            s,
            "{:<14} {:>10.3} {:>10.3} {:>10} {:>10} {:>10.p$} {:>10.p$}",
            row.estimator.name(),
            row.cover_clt_prelim,
            row.cover_clt_rb,
            cell(row.cover_log_prelim, 3),
            cell(row.cover_log_rb, 3),
            lp,
            lr
        );
    }
    s
}

/// Writes `table.csv`, `coverage.csv` and the aligned table to `dir`, plus
/// chain traces under `dir/trace/` when any were recorded.
pub fn emit_report(study: &Study, estimators: &[Estimator], dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_table_csv(&study.result, std::fs::File::create(dir.join("table.csv"))?)?;
    write_coverage_csv(&study.result, std::fs::File::create(dir.join("coverage.csv"))?)?;
    std::fs::write(dir.join("table.txt"), format_table(&study.result))?;
    let traced: Vec<_> = study.records.iter().filter_map(|r| r.trace.as_ref().map(|t| (r.rep, t))).collect();
    if !traced.is_empty() {
        let tdir = dir.join("trace");
        std::fs::create_dir_all(&tdir)?;
        for (rep, rows) in traced {
            let f = std::fs::File::create(tdir.join(format!("rep{rep:05}.csv")))?;
            crate::mcmc::write_trace(rows, estimators, std::io::BufWriter::new(f))?;
        }
    }
    Ok(())
}
