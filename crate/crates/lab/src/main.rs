use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ktrp_core::density::sample_points;
use ktrp_core::fairness::deterministic_fairness_ratio;
use ktrp_core::fairness::fairness_lp;
use ktrp_core::ktsp::{ktsp_exact, ktsp_grid_scheme, ktsp_nonuniform_scheme};
use ktrp_core::logistics::{sdd_dispatch_trp, sdd_dispatch_tsp};
use ktrp_core::trp::{trp_apriori_scheme, trp_exact};
use ktrp_core::tsp::{strip_tour, strip_two_opt, tsp_exact};
use ktrp_core::{PointSet, RandomSeed};
use ktrp_lab::experiment::{run_experiment, ExperimentConfig};
use ktrp_lab::formats::{
    read_json, read_points_csv, write_json, write_points_csv, write_route_csv, DensityJson, KtspJson, MixJson,
    PlanJson, PointsJson, SquareJson, TrpJson, TspJson,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "ktrp", version, about = "Probabilistic k-TSP and repairman routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON input for the subcommand (density, fairness, dispatch or experiment config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Draw points from a grid density (`--config`, uniform when omitted).
    Sample {
        #[arg(long)]
        n: usize,
    },
    /// Closed tour through every point.
    Tsp {
        #[command(flatten)]
        input: PointsArg,
        #[arg(long, value_enum, default_value_t = TspMethodArg::TwoOpt)]
        method: TspMethodArg,
    },
    /// Short open path through k points; `--config` selects the density-aware scheme.
    Ktsp {
        #[command(flatten)]
        input: PointsArg,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Latency-minded route through every point, ordered by the `--config` density.
    Trp {
        #[command(flatten)]
        input: PointsArg,
        /// Uniform grid resolution when no density is given.
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Solve the fairness LP for a population density (`--config`).
    Fairness,
    /// Same-day-delivery dispatch plans (`--config`).
    Dispatch {
        /// Report whole-order loads next to the fluid ones.
        #[arg(long)]
        integer: bool,
    },
    /// Run a Monte Carlo experiment (`--config`).
    Experiment,
}

#[derive(Args)]
struct PointsArg {
    /// Points as `x,y` CSV or as JSON `{square, points}`.
    #[arg(long)]
    points: PathBuf,
    /// Bounding square `x0,y0,side` for CSV input (unit square by default).
    #[arg(long, value_parser = parse_square)]
    square: Option<SquareJson>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TspMethodArg {
    Strip,
    TwoOpt,
    Exact,
}

fn parse_square(s: &str) -> std::result::Result<SquareJson, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    match v[..] {
        [x, y, side] => Ok(SquareJson { origin: [x, y], side }),
        _ => Err("expected x0,y0,side".into()),
    }
}

#[derive(Deserialize)]
struct FairnessRequest {
    #[serde(flatten)]
    density: DensityJson,
    k: usize,
    p: Vec<f64>,
    #[serde(default)]
    epsilon: f64,
}

#[derive(Serialize)]
struct FairnessReport {
    mix: MixJson,
    deterministic_ratio: Option<f64>,
}

#[derive(Deserialize)]
struct DispatchRequest {
    lambda: f64,
    a: f64,
    #[serde(rename = "T")]
    deadline: f64,
    #[serde(rename = "T_cutoff")]
    cutoff: f64,
    m: usize,
}

#[derive(Serialize)]
struct DispatchReport {
    tsp: PlanJson,
    trp: PlanJson,
}

fn main() -> ExitCode {
    // clap uses 2 for usage errors; that code is reserved for failed checks.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Destination for a single result file.
fn sink(common: &Common, stem: &str) -> Result<Box<dyn Write>> {
    match &common.out {
        None => Ok(Box::new(io::stdout().lock())),
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let ext = if common.format == Format::Csv { "csv" } else { "json" };
            let path = dir.join(format!("{stem}.{ext}"));
            Ok(Box::new(
                File::create(&path).with_context(|| format!("creating {}", path.display()))?,
            ))
        }
    }
}

fn load_points(arg: &PointsArg) -> Result<PointSet> {
    let is_json = arg.points.extension().is_some_and(|e| e == "json");
    if is_json {
        let pj: PointsJson = read_json(&arg.points)?;
        return pj.to_point_set();
    }
    let file = File::open(&arg.points).with_context(|| format!("opening {}", arg.points.display()))?;
    let square = arg.square.map(SquareJson::to_square).transpose()?;
    read_points_csv(file, square)
}

fn config_path(common: &Common) -> Result<&Path> {
    common.config.as_deref().context("this subcommand needs --config")
}

fn run(cli: Cli) -> Result<bool> {
    let common = &cli.common;
    let seed = RandomSeed::new(common.seed.unwrap_or(0), 0);
    match &cli.command {
        Command::Sample { n } => {
            let d = match &common.config {
                Some(p) => read_json::<DensityJson>(p)?.to_density()?,
                None => DensityJson::uniform(1).to_density()?,
            };
            let ps = sample_points(&d, *n, seed);
            let out = sink(common, "points")?;
            match common.format {
                Format::Csv => write_points_csv(&ps, out)?,
                Format::Json => write_json(&PointsJson::from(&ps), out)?,
            }
        }
        Command::Tsp { input, method } => {
            let ps = load_points(input)?;
            let r = match method {
                TspMethodArg::Strip => strip_tour(&ps)?,
                TspMethodArg::TwoOpt => strip_two_opt(&ps)?,
                TspMethodArg::Exact => tsp_exact(&ps)?,
            };
            let out = sink(common, "tsp")?;
            match common.format {
                Format::Csv => write_route_csv(&ps, &r.route.order, out)?,
                Format::Json => write_json(&TspJson::from(&r), out)?,
            }
        }
        Command::Ktsp { input, k, exact } => {
            let ps = load_points(input)?;
            let r = if *exact {
                ktsp_exact(&ps, *k)?
            } else if let Some(p) = &common.config {
                ktsp_nonuniform_scheme(&ps, &read_json::<DensityJson>(p)?.to_density()?, *k)?
            } else {
                ktsp_grid_scheme(&ps, *k)?
            };
            let out = sink(common, "ktsp")?;
            match common.format {
                Format::Csv => write_route_csv(&ps, &r.route.order, out)?,
                Format::Json => write_json(&KtspJson::from(&r), out)?,
            }
        }
        Command::Trp { input, m, exact } => {
            let ps = load_points(input)?;
            let r = if *exact {
                trp_exact(&ps)?
            } else {
                let mut dj = match &common.config {
                    Some(p) => read_json::<DensityJson>(p)?,
                    None => DensityJson::uniform(*m),
                };
                if common.config.is_none() {
                    dj.square = ps.square().into();
                }
                trp_apriori_scheme(&ps, &dj.to_density()?)?
            };
            let out = sink(common, "trp")?;
            match common.format {
                Format::Csv => write_route_csv(&ps, &r.route.order, out)?,
                Format::Json => write_json(&TrpJson::from(&r), out)?,
            }
        }
        Command::Fairness => {
            let req: FairnessRequest = read_json(config_path(common)?)?;
            let pop = req.density.to_population()?;
            let mix = fairness_lp(&pop, req.k, &req.p, req.epsilon)?;
            let ratio = deterministic_fairness_ratio(&pop);
            let report = FairnessReport {
                mix: MixJson::from(&mix),
                // JSON has no infinity; disjoint populations report null.
                deterministic_ratio: ratio.is_finite().then_some(ratio),
            };
            if common.format == Format::Csv {
                bail!("fairness output is JSON only");
            }
            write_json(&report, sink(common, "fairness")?)?;
        }
        Command::Dispatch { integer } => {
            let req: DispatchRequest = read_json(config_path(common)?)?;
            let tsp = sdd_dispatch_tsp(req.lambda, req.a, req.deadline, req.cutoff, req.m)?;
            let trp = sdd_dispatch_trp(req.lambda, req.a, req.lambda * req.cutoff, req.m, req.deadline)?;
            if common.format == Format::Csv {
                bail!("dispatch output is JSON only");
            }
            let report = DispatchReport {
                tsp: PlanJson::new(&tsp, *integer),
                trp: PlanJson::new(&trp, *integer),
            };
            write_json(&report, sink(common, "dispatch")?)?;
        }
        Command::Experiment => {
            let mut cfg = ExperimentConfig::load(config_path(common)?)?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let workers = common.workers.or(cfg.workers).unwrap_or(1);
            let out = common
                .out
                .clone()
                .or(cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let summary = run_experiment(&cfg, workers, &out)?;
            for c in &summary.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {}: {} in [{}, {}]",
                    c.name, c.observed, c.accept[0], c.accept[1]
                );
            }
            println!("wrote {}", out.join(format!("{}.csv", cfg.name)).display());
            return Ok(summary.pass);
        }
    }
    Ok(true)
}
