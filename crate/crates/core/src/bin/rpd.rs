//! Command-line front-end.
//!
//! Exit codes: 0 success, 2 input error, 3 empty regularized direction set,
//! 4 too many failed Monte Carlo runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use rpd::directions::{fmt17, sample_checksum};
use rpd::io::read_curve_file;
use rpd::probes::{degeneracy_demo, DegeneracyConfig};
use rpd::simulation::execute_run;
use rpd::{
    depth_ranks, filter_pool, rpd_batch, rpd_median, tune_beta, unregularized_depth, DirectionPool, Error,
    ExperimentConfig, FunctionalSample, NotionRegistry, NotionRequest,
};

#[derive(Parser)]
#[command(name = "rpd", version, about = "Regularized projection depth for functional data")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct PoolArgs {
    /// Quantile level used to tune beta.
    #[arg(long, default_value_t = 0.01)]
    u: f64,
    /// Number of random directions.
    #[arg(long = "M", default_value_t = 10_000)]
    directions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First row of each curve file holds the grid abscissae.
    #[arg(long)]
    grid_header: bool,
    /// Fixed beta instead of tuning from --u (testing only).
    #[arg(long, hide = true)]
    beta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Depth of query curves relative to a reference sample.
    Depth {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[command(flatten)]
        pool: PoolArgs,
        /// Load a saved direction pool instead of sampling one.
        #[arg(long)]
        load_pool: Option<PathBuf>,
        /// Save the direction pool as JSON.
        #[arg(long)]
        save_pool: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Depth and normalized midrank of every sample curve, least deep first.
    Outliers {
        #[arg(long)]
        sample: PathBuf,
        #[command(flatten)]
        pool: PoolArgs,
        /// Depth notion: rpd, fd or id.
        #[arg(long = "depth", default_value = "rpd")]
        notion: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The deepest sample curve.
    Median {
        #[arg(long)]
        sample: PathBuf,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// Monte Carlo shape-outlier ranking experiment.
    Table1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write per-curve depths and ranks of run 0.
        #[arg(long)]
        per_curve: bool,
    },
    /// Minimum sample depth with and without regularization as M grows.
    Degeneracy {
        #[arg(long, default_value_t = 101)]
        dim: usize,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,200000")]
        schedule: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        u: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::EmptyDirectionSet { .. } | Error::DegenerateSample => 3,
        Error::ExperimentFailed { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((context, e)) => {
            eprintln!("error: {context}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

type CmdResult = Result<(), (String, Error)>;

fn ctx<T>(context: impl std::fmt::Display, r: rpd::Result<T>) -> Result<T, (String, Error)> {
    r.map_err(|e| (context.to_string(), e))
}

fn read(path: &Path, header: bool) -> Result<FunctionalSample, (String, Error)> {
    ctx(path.display(), read_curve_file(path, header))
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => ctx(p.display(), std::fs::write(p, text).map_err(Error::from)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_u(u: f64) -> CmdResult {
    if (0.0..1.0).contains(&u) {
        Ok(())
    } else {
        Err((
            "--u".into(),
            Error::Domain(format!("quantile level {u} is outside [0, 1)")),
        ))
    }
}

fn beta_for(pool: &DirectionPool, args: &PoolArgs, what: &str) -> Result<f64, (String, Error)> {
    match args.beta {
        Some(b) => Ok(b),
        None => ctx(what, tune_beta(pool, args.u)),
    }
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Depth {
            sample,
            query,
            pool: args,
            load_pool,
            save_pool,
            out,
        } => {
            check_u(args.u)?;
            let reference = read(&sample, args.grid_header)?;
            let queries = read(&query, args.grid_header)?;
            let pool = match load_pool {
                Some(p) => {
                    let text = ctx(p.display(), std::fs::read_to_string(&p).map_err(Error::from))?;
                    let pool = ctx(p.display(), DirectionPool::from_json(&text))?;
                    if pool.source_checksum() != sample_checksum(&reference) {
                        return Err((
                            p.display().to_string(),
                            Error::Domain(format!(
                                "pool was built from a different sample than {}",
                                sample.display()
                            )),
                        ));
                    }
                    pool
                }
                None => ctx(
                    sample.display(),
                    DirectionPool::build(&reference, args.directions, args.seed),
                )?,
            };
            if let Some(p) = save_pool {
                let text = ctx(p.display(), pool.to_json())?;
                ctx(p.display(), std::fs::write(&p, text).map_err(Error::from))?;
            }
            let beta = beta_for(&pool, &args, &sample.display().to_string())?;
            let reg = ctx(sample.display(), filter_pool(&pool, beta))?;
            let depths = ctx(query.display(), rpd_batch(&queries, &reg))?;
            let mut text = String::from("query,depth,worst_direction,beta\n");
            for (i, d) in depths.iter().enumerate() {
                let _ = writeln!(text, "{i},{},{},{}", fmt17(d.value), d.worst_direction, fmt17(beta));
            }
            emit(out.as_deref(), &text)
        }
        Command::Outliers {
            sample,
            pool: args,
            notion,
            out,
        } => {
            check_u(args.u)?;
            let registry = NotionRegistry::builtin();
            let notion = ctx("--depth", registry.get(&notion))?;
            let reference = read(&sample, args.grid_header)?;
            let levels = [args.u];
            let outputs = ctx(
                sample.display(),
                notion.evaluate(&NotionRequest {
                    reference: &reference,
                    queries: &reference,
                    levels: &levels,
                    directions: args.directions,
                    seed: args.seed,
                    beta_override: args.beta,
                }),
            )?;
            let depths = &outputs[0].depths;
            let ranks = ctx("ranks", depth_ranks(depths))?.ranks;
            let mut order: Vec<usize> = (0..depths.len()).collect();
            order.sort_by(|&a, &b| depths[a].total_cmp(&depths[b]).then(a.cmp(&b)));
            let mut text = String::from("curve,depth,rank\n");
            for i in order {
                let _ = writeln!(text, "{i},{},{}", fmt17(depths[i]), fmt17(ranks[i]));
            }
            emit(out.as_deref(), &text)
        }
        Command::Median { sample, pool: args } => {
            check_u(args.u)?;
            let reference = read(&sample, args.grid_header)?;
            let pool = ctx(
                sample.display(),
                DirectionPool::build(&reference, args.directions, args.seed),
            )?;
            let (index, curve, depth, beta) = if reference.len() == 1 {
                // Every projected MAD of a single curve is zero; the curve sits on every median.
                let curve = reference.curve(0);
                let depth = ctx(sample.display(), unregularized_depth(&curve, &pool))?;
                (0, curve, depth, "NA".to_string())
            } else {
                let beta = beta_for(&pool, &args, &sample.display().to_string())?;
                let reg = ctx(sample.display(), filter_pool(&pool, beta))?;
                let median = ctx(sample.display(), rpd_median(&reference, &reg))?;
                (median.index, median.curve, median.depth.value, fmt17(beta))
            };
            let values: Vec<String> = curve.values().iter().copied().map(fmt17).collect();
            let text = format!(
                "index,{index}\ndepth,{}\nbeta,{beta}\nvalues,{}\n",
                fmt17(depth),
                values.join(",")
            );
            emit(None, &text)
        }
        Command::Table1 {
            config,
            out_dir,
            per_curve,
        } => table1(&config, &out_dir, per_curve),
        Command::Degeneracy {
            dim,
            n,
            schedule,
            seed,
            u,
            out,
        } => {
            check_u(u)?;
            let cfg = DegeneracyConfig {
                dim,
                n,
                schedule,
                seed,
                u,
                ..Default::default()
            };
            let rows = ctx("degeneracy", degeneracy_demo(&cfg))?;
            let mut text = String::from("M,unregularized_min_depth,beta,regularized_min_depth,min_bound_slack\n");
            for r in rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    r.directions,
                    fmt17(r.unregularized_min_depth),
                    fmt17(r.beta),
                    fmt17(r.regularized_min_depth),
                    fmt17(r.min_bound_slack)
                );
            }
            emit(out.as_deref(), &text)
        }
    }
}

fn table1(config: &Path, out_dir: &Path, per_curve: bool) -> CmdResult {
    let text = ctx(config.display(), std::fs::read_to_string(config).map_err(Error::from))?;
    let cfg = ctx(config.display(), ExperimentConfig::from_json(&text))?;
    let registry = NotionRegistry::builtin();
    let started = Instant::now();
    let report = ctx("experiment", rpd::run_experiment(&cfg, &registry))?;
    let elapsed = started.elapsed().as_secs_f64();

    ctx(out_dir.display(), std::fs::create_dir_all(out_dir).map_err(Error::from))?;
    let write = |name: &str, body: String| -> CmdResult {
        let p = out_dir.join(name);
        ctx(p.display(), std::fs::write(&p, body).map_err(Error::from))
    };
    write(
        "report.json",
        ctx("report", serde_json::to_string_pretty(&report).map_err(Error::from))? + "\n",
    )?;
    write("table1.csv", report.table_csv())?;
    write(
        "timing.json",
        format!("{{\n  \"seconds\": {elapsed},\n  \"runs\": {}\n}}\n", cfg.runs),
    )?;

    if per_curve {
        let outcome = ctx("run 0", execute_run(&cfg, &registry, 0))?;
        let mut body = String::from("curve,outlier");
        for c in &outcome.columns {
            let label = match c.level {
                Some(u) => format!("{}_u{}", c.depth, u),
                None => c.depth.clone(),
            };
            let _ = write!(body, ",{label}_depth,{label}_rank");
        }
        body.push('\n');
        for i in 0..outcome.n_clean + outcome.n_outliers {
            let _ = write!(body, "{i},{}", u8::from(i >= outcome.n_clean));
            for c in &outcome.columns {
                let _ = write!(body, ",{},{}", fmt17(c.depths[i]), fmt17(c.ranks[i]));
            }
            body.push('\n');
        }
        write("run0_curves.csv", body)?;
    }

    for s in &report.results {
        let label = match s.u {
            Some(u) => format!("{} (u = {u})", s.depth.to_uppercase()),
            None => s.depth.to_uppercase(),
        };
        match (s.mean, s.sd) {
            (Some(m), Some(sd)) => println!("{label:<16} {m:.3} ({sd:.3})"),
            _ => println!("{label:<16} undefined (no outliers)"),
        }
    }
    for name in &report.unimplemented {
        println!("{:<16} unimplemented", name.to_uppercase());
    }
    if report.single_run {
        println!("single run: standard deviations are reported as 0");
    }
    if report.runs_failed > 0 {
        println!("{} of {} runs failed and were excluded", report.runs_failed, cfg.runs);
    }
    eprintln!("{} runs in {elapsed:.1} s", cfg.runs);
    Ok(())
}
