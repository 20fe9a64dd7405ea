use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use linktrace::estimators::EstimateReport;
use linktrace::harness::{emit_report, format_table, run_study, Preset, StudyConfig};
use linktrace::mcmc::{run_chain, write_trace};
use linktrace::netpop::{generate_synthetic, load_edge_list};
use linktrace::reorder::{exact_rb, DEFAULT_ENUMERATION_CAP};
use linktrace::rng::stream_rng;
use linktrace::sampler::{draw_study, read_observed, write_observed};
use linktrace::{ChainConfig, Design, DesignConfig, Error, Estimator, ReorderContext, Reordering};

#[derive(Parser)]
#[command(name = "linktrace", version, about = "Link-tracing samples and Rao-Blackwellized population estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replication study and write table.csv and coverage.csv.
    Simulate {
        /// key=value study configuration.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// paper-2sample, paper-3sample or desk-2sample.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        replications: Option<u64>,
        #[arg(long)]
        mcmc_iterations: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Keep chain traces for this many replications.
        #[arg(long)]
        trace: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimate from a serialized observed dataset.
    Estimate {
        #[arg(long)]
        d0: PathBuf,
        /// Comma-separated estimators.
        #[arg(long, default_value = "chapman,avg_outdegree", value_delimiter = ',')]
        estimators: Vec<Estimator>,
        #[arg(long, default_value_t = 20_000)]
        iterations: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Enumerate reorderings exactly instead of running the chain.
        #[arg(long)]
        exact: bool,
        /// Directory for estimates.csv and the chain trace.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic population as an edge list.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        mean_degree: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw one K-sample study from an edge list and write the observed data.
    Draw {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 2)]
        samples: usize,
        #[arg(long)]
        initial: usize,
        #[arg(long)]
        r#final: usize,
        /// Trace probability d; enables random jumps.
        #[arg(long)]
        jump: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let invalid = err.chain().any(|e| {
                matches!(
                    e.downcast_ref::<Error>(),
                    Some(Error::Validation(_) | Error::Parse { .. } | Error::Range { .. } | Error::Infeasible(_))
                )
            });
            ExitCode::from(if invalid { 2 } else { 1 })
        }
    }
}

fn open(path: &PathBuf) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Simulate { config, preset, replications, mcmc_iterations, seed, trace, out } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => StudyConfig::parse(open(&path)?)?,
                (None, Some(p)) => StudyConfig::preset(p.parse::<Preset>()?),
                (None, None) => StudyConfig::preset(Preset::Desk2Sample),
            };
            if let Some(r) = replications {
                cfg.replications = r;
                cfg.srs_replications = r;
            }
            if let Some(r) = mcmc_iterations {
                cfg.mcmc_iterations = r;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trace {
                cfg.trace_replications = t;
            }
            cfg.validate()?;
            let study = run_study(&cfg)?;
            emit_report(&study, &cfg.estimators, &out)?;
            print!("{}", format_table(&study.result));
            println!("wrote {}", out.display());
        }
        Command::Estimate { d0, estimators, iterations, level, seed, exact, out } => {
            let d0 = read_observed(open(&d0)?)?;
            let dr = d0.reduce();
            let ctx = ReorderContext::new(&dr)?;
            let original = Reordering::original(&d0);
            let init = ctx.initial_samples(&ctx.localize(&original)?);
            let prelim = estimators.iter().map(|e| e.evaluate(&init)).collect::<linktrace::Result<Vec<_>>>()?;
            let (rb, trace) = if exact {
                let res = exact_rb(&ctx, &estimators, DEFAULT_ENUMERATION_CAP)?;
                println!(
                    "exact enumeration: {} tuples, {} consistent",
                    res.diagnostics.tuples, res.diagnostics.consistent
                );
                (res.estimates.into_iter().map(|(_, r)| r).collect::<Vec<_>>(), None)
            } else {
                let cfg = ChainConfig { iterations, record_trace: out.is_some() };
                let mut rng = stream_rng(seed, &[]);
                let res = run_chain(&ctx, &original, &estimators, &cfg, &mut rng)?;
                println!("chain: {} iterations, acceptance rate {:.3}", res.iterations, res.acceptance_rate());
                (res.estimates.iter().map(|(_, r)| *r).collect(), res.trace)
            };
            let mut rows = Vec::new();
            for ((e, p), r) in estimators.iter().zip(&prelim).zip(&rb) {
                let anchor = |m: u64| e.is_population_size().then_some(m as f64);
                let pre = EstimateReport::new(p.point, p.var, anchor(init.summary.distinct), level, false);
                let post =
                    EstimateReport::new(r.point, r.var, anchor(dr.distinct_units() as u64), level, r.fallback_used);
                rows.push((*e, pre, post));
            }
            println!(
                "{:<14} {:>12} {:>12} {:>12} {:>12}  {:<22} {:<22}",
                "estimator", "prelim", "var", "RB", "var", "RB CLT interval", "RB log interval"
            );
            for (e, pre, post) in &rows {
                let log =
                    post.ci_log.map_or(String::from("-"), |l| format!("({:.3}, {:.3})", l.interval.lo, l.interval.hi));
                println!(
                    "{:<14} {:>12.3} {:>12.3} {:>12.3} {:>12.3}  {:<22} {:<22}{}",
                    e.name(),
                    pre.point,
                    pre.var_est,
                    post.point,
                    post.var_est,
                    format!("({:.3}, {:.3})", post.ci_clt.lo, post.ci_clt.hi),
                    log,
                    if post.fallback_used { "  [conservative variance]" } else { "" }
                );
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let mut f = BufWriter::new(File::create(dir.join("estimates.csv"))?);
                writeln!(f, "estimator,prelim,prelim_var,rb,rb_var,fallback")?;
                for (e, pre, post) in &rows {
                    writeln!(
                        f,
                        "{e},{},{},{},{},{}",
                        pre.point, pre.var_est, post.point, post.var_est, post.fallback_used as u8
                    )?;
                }
                if let Some(trace) = trace {
                    std::fs::create_dir_all(dir.join("trace"))?;
                    write_trace(&trace, &estimators, BufWriter::new(File::create(dir.join("trace/chain.csv"))?))?;
                }
            }
        }
        Command::Generate { nodes, mean_degree, seed, out } => {
            let g = generate_synthetic(nodes, mean_degree, seed)?;
            g.write_edge_list(BufWriter::new(File::create(&out)?))?;
            println!("{} nodes, {} edges, mean degree {:.3}", g.n(), g.edge_count(), g.mean_out_degree());
        }
        Command::Draw { graph, samples, initial, r#final, jump, seed, out } => {
            let g = load_edge_list(open(&graph)?)?;
            let design = jump.map_or(Design::LinkTracing, |d| Design::RandomJumps { d });
            let cfg = DesignConfig::uniform(samples, initial, r#final, design);
            let d0 = draw_study(&g, &cfg, seed, 0)?;
            write_observed(&d0, BufWriter::new(File::create(&out)?))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
