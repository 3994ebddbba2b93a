//! `identset`: identified-set sweeps, core vertices and sampling scatter
//! data for finite games with multiple equilibria.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use identset_core::capacity::capacity_from_combos;
use identset_core::identify::{
    bench_method, compare_singleton, core_barycenter, core_vertices, identify, montecarlo_scatter, IdentifyOptions,
    Method, Model, PointResult, Witness, DEFAULT_MC_DRAWS, MAX_GRID_POINTS,
};
use identset_core::mixed::{mixed_capacity_function, ConvexConfig, CONVEX_TOL};
use identset_core::{Builtin, Capacity, Error, GameDescriptor, GridSpec, ProbabilityVector};
use serde::Serialize;

use crate::io::{labelled, num, read_probability, Format, Output};

#[derive(Parser)]
#[command(
    name = "identset",
    version,
    about = "Sharp identified sets for games with multiple equilibria"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GameArgs {
    /// JSON game descriptor (`{"builtin": ...}` or `{"custom": ...}`).
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "builtin",
        required_unless_present = "builtin"
    )]
    game: Option<PathBuf>,
    /// Built-in game: jovanovic, family-bargaining or oligopoly-2type.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    /// Parameter value, comma-separated; overrides the descriptor's.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[arg(long, default_value = "maxflow")]
    method: Option<String>,
    /// Seed for simulated combinations and integrals.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draws for simulated combinations and integrals.
    #[arg(long, default_value_t = DEFAULT_MC_DRAWS)]
    mc_draws: usize,
    /// Tolerance of the mixed convex route.
    #[arg(long, default_value_t = CONVEX_TOL)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Membership at a single parameter value.
    Check {
        #[command(flatten)]
        game: GameArgs,
        /// Observed distribution, CSV `outcome,mass`.
        #[arg(long, value_name = "FILE")]
        p: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Membership over a parameter grid, one record per point.
    Identify {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, value_name = "FILE")]
        p: PathBuf,
        /// Grid JSON, e.g. `{"alpha1": {"min": -1, "max": 0, "steps": 100}}`.
        #[arg(long, value_name = "FILE")]
        grid: PathBuf,
        /// Overrides the grid's method (default maxflow).
        #[arg(long)]
        method: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MC_DRAWS)]
        mc_draws: usize,
        #[arg(long, default_value_t = CONVEX_TOL)]
        tol: f64,
        /// First grid index to evaluate (resume a sweep).
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// Largest grid accepted.
        #[arg(long, default_value_t = MAX_GRID_POINTS)]
        max_points: usize,
        /// Record wall time per point (output then differs between runs).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sharp set versus the singleton-class relaxation over a grid.
    CompareSingleton {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, value_name = "FILE")]
        p: PathBuf,
        #[arg(long, value_name = "FILE")]
        grid: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Extreme points of the core of the likelihood.
    CoreVertices {
        #[command(flatten)]
        game: GameArgs,
        /// Use the mixed-strategy envelope likelihood (2×2 games).
        #[arg(long)]
        mixed: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Empirical distributions sampled around a core point.
    McScatter {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        mixed: bool,
        /// `barycenter`, `vertex:K`, or a CSV `outcome,mass` file.
        #[arg(long, default_value = "barycenter")]
        dgp: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        sample_size: u64,
        /// Fraction of samples kept, closest to the dgp first.
        #[arg(long, default_value_t = 0.95)]
        keep: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Throughput of membership methods over a grid.
    Bench {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, value_name = "FILE")]
        p: PathBuf,
        #[arg(long, value_name = "FILE")]
        grid: PathBuf,
        /// Comma-separated methods.
        #[arg(long, value_delimiter = ',', default_value = "maxflow,submodular")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let kind = c
            .downcast_ref::<std::io::Error>()
            .map(std::io::Error::kind)
            .or_else(|| {
                c.downcast_ref::<serde_json::Error>()
                    .and_then(serde_json::Error::io_error_kind)
            });
        kind == Some(std::io::ErrorKind::BrokenPipe)
    })
}

/// 3 for method/game incompatibility, 2 for every other input problem.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Incompatible { .. } | Error::Unsupported(_)) => 3,
        _ => 2,
    }
}

fn descriptor(args: &GameArgs) -> Result<GameDescriptor> {
    match (&args.game, &args.builtin) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(GameDescriptor::from_json(&text)?)
        }
        (None, Some(name)) => Ok(GameDescriptor::builtin(name.parse::<Builtin>()?)),
        (None, None) => bail!("one of --game or --builtin is required"),
    }
}

/// The resolved game with `--theta` applied.
fn resolve(args: &GameArgs) -> Result<identset_core::games::descriptor::ResolvedGame> {
    let mut resolved = descriptor(args)?.resolve()?;
    if let Some(theta) = &args.theta {
        resolved.theta = theta.clone();
    }
    Ok(resolved)
}

fn model(args: &GameArgs, p: &Path) -> Result<Model> {
    let resolved = resolve(args)?;
    let p = read_probability(p, &resolved.game.space)?;
    Ok(Model::new(resolved, p)?)
}

fn parse_method(s: Option<&str>, fallback: Option<Method>) -> Result<Method> {
    match s {
        Some(s) => Ok(s.parse()?),
        None => Ok(fallback.unwrap_or(Method::Maxflow)),
    }
}

fn read_grid(path: &Path) -> Result<GridSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(GridSpec::from_json(&text)?)
}

fn point_row(r: &PointResult) -> (Vec<String>, Vec<String>) {
    let mut header = vec!["index".to_string()];
    header.extend(r.theta.keys().cloned());
    header.extend(["verdict", "witness", "method"].map(String::from));
    let mut fields = vec![r.index.to_string()];
    fields.extend(r.theta.values().map(|v| num(*v)));
    fields.push(r.verdict.as_str().into());
    fields.push(match &r.witness {
        Some(Witness::Subset(labels)) => labels.join(";"),
        Some(Witness::Function(f)) => f.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";"),
        None => String::new(),
    });
    fields.push(r.method.name().into());
    if let Some(ms) = r.ms {
        header.push("ms".into());
        fields.push(num(ms));
    }
    (header, fields)
}

/// The likelihood at the descriptor's (or `--theta`'s) parameter value.
fn capacity(args: &GameArgs, mixed: bool, seed: u64) -> Result<(Capacity, identset_core::OutcomeSpace)> {
    let resolved = resolve(args)?;
    if resolved.theta.is_empty() && !resolved.game.param_names.is_empty() {
        bail!("a parameter value is needed: pass --theta or set it in the descriptor");
    }
    let p = ProbabilityVector::new(vec![1.0 / resolved.game.space.len() as f64; resolved.game.space.len()])?;
    let space = resolved.game.space.clone();
    let theta = resolved.theta.clone();
    let model = Model::new(resolved, p)?;
    let opts = IdentifyOptions {
        seed,
        ..Default::default()
    };
    let cap = if mixed {
        model.check_method(Method::MixedSubmodular)?;
        mixed_capacity_function(&model.mixed_spec(&theta, &opts)?)?
    } else {
        capacity_from_combos(&model.combos(&theta, &opts)?)
    };
    Ok((cap, space))
}

#[derive(Serialize)]
struct VertexRecord {
    index: usize,
    vertex: std::collections::BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct ScatterRecord {
    index: usize,
    p: std::collections::BTreeMap<String, f64>,
    distance: f64,
    inside: bool,
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Check { game, p, solve, out } => {
            let model = model(&game, &p)?;
            let theta = model.resolved.theta.clone();
            let grid = GridSpec::point(model.param_names(), &theta);
            if theta.len() != model.param_names().len() {
                bail!(
                    "expected {} parameter value(s) {:?}, got {}",
                    model.param_names().len(),
                    model.param_names(),
                    theta.len()
                );
            }
            let opts = IdentifyOptions {
                method: parse_method(solve.method.as_deref(), None)?,
                seed: solve.seed,
                mc_draws: solve.mc_draws,
                convex: ConvexConfig {
                    tol: solve.tol,
                    ..Default::default()
                },
                ..Default::default()
            };
            let mut output = Output::open(out.out.as_ref(), out.format)?;
            identify(&model, &grid, &opts, |r| {
                output
                    .write(r, || point_row(r))
                    .map_err(|e| Error::Parse(e.to_string()))
            })?;
            output.finish()
        }
        Command::Identify {
            game,
            p,
            grid,
            method,
            seed,
            mc_draws,
            tol,
            start,
            max_points,
            timing,
            out,
        } => {
            let model = model(&game, &p)?;
            let grid = read_grid(&grid)?;
            let opts = IdentifyOptions {
                method: parse_method(method.as_deref(), grid.method)?,
                seed,
                mc_draws,
                convex: ConvexConfig {
                    tol,
                    ..Default::default()
                },
                timing,
                start,
                max_points,
            };
            let mut output = Output::open(out.out.as_ref(), out.format)?;
            let mut inside = 0usize;
            let n = identify(&model, &grid, &opts, |r| {
                if r.verdict == identset_core::Verdict::In {
                    inside += 1;
                }
                output
                    .write(r, || point_row(r))
                    .map_err(|e| Error::Parse(e.to_string()))
            })?;
            output.finish()?;
            eprintln!("{n} point(s), {inside} in the identified set");
            Ok(())
        }
        Command::CompareSingleton {
            game,
            p,
            grid,
            seed,
            out,
        } => {
            let model = model(&game, &p)?;
            let grid = read_grid(&grid)?;
            let opts = IdentifyOptions {
                seed,
                ..Default::default()
            };
            let cmp = compare_singleton(&model, &grid, &opts)?;
            let mut output = Output::open(out.out.as_ref(), out.format)?;
            for pt in &cmp.points {
                output.write(pt, || {
                    let mut header = vec!["index".to_string()];
                    header.extend(pt.theta.keys().cloned());
                    header.extend(["sharp", "singleton"].map(String::from));
                    let mut fields = vec![pt.index.to_string()];
                    fields.extend(pt.theta.values().map(|v| num(*v)));
                    fields.extend([pt.sharp.to_string(), pt.singleton.to_string()]);
                    (header, fields)
                })?;
            }
            output.finish()?;
            eprintln!(
                "{} point(s): {} sharp, {} singleton-class",
                cmp.points.len(),
                cmp.sharp().count(),
                cmp.singleton().count()
            );
            Ok(())
        }
        Command::CoreVertices { game, mixed, seed, out } => {
            let (cap, space) = capacity(&game, mixed, seed)?;
            let vertices = core_vertices(&cap)?;
            let mut output = Output::open(out.out.as_ref(), out.format)?;
            for (index, v) in vertices.iter().enumerate() {
                let rec = VertexRecord {
                    index,
                    vertex: labelled(&space, v.masses()),
                };
                output.write(&rec, || {
                    let mut header = vec!["index".to_string()];
                    header.extend(space.labels().iter().cloned());
                    let mut fields = vec![index.to_string()];
                    fields.extend(v.masses().iter().map(|x| num(*x)));
                    (header, fields)
                })?;
            }
            output.finish()
        }
        Command::McScatter {
            game,
            mixed,
            dgp,
            samples,
            sample_size,
            keep,
            seed,
            out,
        } => {
            let (cap, space) = capacity(&game, mixed, seed)?;
            let dgp = match dgp.as_str() {
                "barycenter" => core_barycenter(&core_vertices(&cap)?)?,
                s if s.starts_with("vertex:") => {
                    let k: usize = s["vertex:".len()..].parse().context("vertex index")?;
                    core_vertices(&cap)?
                        .into_iter()
                        .nth(k)
                        .ok_or_else(|| anyhow!("the core has fewer than {} vertices", k + 1))?
                }
                path => read_probability(&PathBuf::from(path), &space)?,
            };
            let scatter = montecarlo_scatter(&cap, &dgp, samples, sample_size, seed, keep)?;
            if !scatter.dgp_in_core {
                eprintln!("warning: the data-generating distribution is outside the core");
            }
            let mut output = Output::open(out.out.as_ref(), out.format)?;
            for pt in &scatter.points {
                let rec = ScatterRecord {
                    index: pt.index,
                    p: labelled(&space, &pt.p),
                    distance: pt.distance,
                    inside: pt.inside,
                };
                output.write(&rec, || {
                    let mut header = vec!["index".to_string()];
                    header.extend(space.labels().iter().cloned());
                    header.extend(["distance", "inside"].map(String::from));
                    let mut fields = vec![pt.index.to_string()];
                    fields.extend(pt.p.iter().map(|x| num(*x)));
                    fields.extend([num(pt.distance), pt.inside.to_string()]);
                    (header, fields)
                })?;
            }
            output.finish()?;
            eprintln!(
                "{} kept of {}, {:.2}% outside the core",
                scatter.points.len(),
                scatter.samples,
                100.0 * scatter.outside_fraction()
            );
            Ok(())
        }
        Command::Bench {
            game,
            p,
            grid,
            methods,
            seed,
            format,
            out,
        } => {
            let model = model(&game, &p)?;
            let plan = read_grid(&grid)?.plan(model.param_names(), MAX_GRID_POINTS)?;
            let thetas: Vec<Vec<f64>> = (0..plan.len()).map(|k| plan.theta(k)).collect();
            let mut output = Output::open(out.as_ref(), format)?;
            for m in &methods {
                let opts = IdentifyOptions {
                    method: m.parse()?,
                    seed,
                    ..Default::default()
                };
                let rec = bench_method(&model, &thetas, &opts)?;
                output.write(&rec, || {
                    (
                        ["game", "method", "points", "seconds", "per_second", "inside"]
                            .map(String::from)
                            .to_vec(),
                        vec![
                            rec.game.clone(),
                            rec.method.name().into(),
                            rec.points.to_string(),
                            num(rec.seconds),
                            num(rec.per_second),
                            rec.inside.to_string(),
                        ],
                    )
                })?;
            }
            output.finish()
        }
    }
}
