//! Command-line driver: run, sample, enumerate, pcm and converge over a
//! single run-config file. Every artifact embeds the config hash and seed;
//! identical (config, seed) pairs produce byte-identical outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tapestry_core::config::{parse_config, load_primitive_table, RunConfig};
use tapestry_core::engine::{self, enumerate_plays};
use tapestry_core::error::Error;
use tapestry_core::interp::{configuration_extend, interpret, pcm, pcm_c};
use tapestry_core::io;
use tapestry_core::oracle::{convergence_study, AnalyticState, StudyConfig};

#[derive(Parser)]
#[command(name = "tapestry", about = "Discrete causal-tapestry simulator", version)]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, default_value = "run.cfg")]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured expression and write per-tick snapshots plus a
    /// grid export of the final interpretation.
    Run,
    /// Draw independent seeded plays and write their event logs.
    Sample {
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Exhaustively enumerate the play space and report the leaves.
    Enumerate,
    /// Enumerate, then export the process covering map; optionally the
    /// configuration-space variant for a product of the given arity.
    Pcm {
        #[arg(long)]
        configuration: Option<usize>,
    },
    /// Run the convergence study declared in the config.
    Converge,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: category={} {err}", err.category());
            let code = match err.category() {
                c if c.starts_with("config") || c == "expression" || c == "parameter" => 2,
                "budget" => 3,
                "capacity" => 4,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

struct Ctx {
    config: RunConfig,
    hash: u64,
    out_dir: PathBuf,
    base_dir: PathBuf,
}

fn load(cli: &Cli) -> Result<Ctx, Error> {
    let text = std::fs::read_to_string(&cli.config)?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.out_dir));
    let hash = io::fnv1a64(config.render().as_bytes());
    let base_dir = cli.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    std::fs::create_dir_all(&out_dir)?;
    Ok(Ctx { config, hash, out_dir, base_dir })
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    let ctx = load(cli)?;
    match &cli.command {
        Command::Run => cmd_run(&ctx),
        Command::Sample { count } => cmd_sample(&ctx, *count),
        Command::Enumerate => cmd_enumerate(&ctx),
        Command::Pcm { configuration } => cmd_pcm(&ctx, *configuration),
        Command::Converge => cmd_converge(&ctx),
    }
}

fn build_expr(ctx: &Ctx) -> Result<tapestry_core::algebra::ProcessExpr, Error> {
    let table = load_primitive_table(&ctx.config, &ctx.base_dir)?;
    ctx.config.build_expr(&table)
}

fn cmd_run(ctx: &Ctx) -> Result<(), Error> {
    let cfg = ctx.config.generation_config()?;
    let initial = ctx.config.initial_tapestry()?;
    let expr = build_expr(ctx)?;
    let out = engine::run(&expr, &initial, ctx.config.ticks, &cfg)?;
    for t in &out.tapestries {
        let path = ctx.out_dir.join(format!("tapestry_{:04}.tsv", t.tick()));
        std::fs::write(path, io::write_snapshot(t, ctx.hash, ctx.config.seed))?;
    }
    let last = out.tapestries.last().expect("at least one tick");
    let phi = interpret(last, &cfg.params);
    let points: Vec<Vec<f64>> = cfg
        .domain
        .sites()
        .iter()
        .map(|s| s.real(cfg.params.l_p))
        .collect();
    let grid = io::write_grid(&phi, &points, ctx.hash, ctx.config.seed)?;
    std::fs::write(ctx.out_dir.join("grid.tsv"), grid)?;
    for w in &out.warnings {
        eprintln!("warning: {w:?}");
    }
    println!(
        "ran {} ticks, final tapestry holds {} informons, artifacts in {}",
        ctx.config.ticks,
        last.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

fn cmd_sample(ctx: &Ctx, count: usize) -> Result<(), Error> {
    let cfg = ctx.config.generation_config()?;
    let initial = ctx.config.initial_tapestry()?;
    let expr = build_expr(ctx)?;
    let plays =
        engine::sample_plays(&expr, &initial, ctx.config.ticks, &cfg, count, ctx.config.seed)?;
    let mut log = io::artifact_header("plays", ctx.hash, ctx.config.seed);
    for (i, play) in plays.iter().enumerate() {
        log.push_str(&play.to_log(i));
    }
    std::fs::write(ctx.out_dir.join("plays.log"), log)?;
    println!("sampled {count} plays into {}", ctx.out_dir.display());
    Ok(())
}

fn cmd_enumerate(ctx: &Ctx) -> Result<(), Error> {
    let cfg = ctx.config.generation_config()?;
    let initial = ctx.config.initial_tapestry()?;
    let expr = build_expr(ctx)?;
    let tree = enumerate_plays(&expr, &initial, ctx.config.ticks, &cfg)?;
    let leaves = tree.maximal_tapestries();
    let mut out = io::artifact_header("leaves", ctx.hash, ctx.config.seed);
    out.push_str(&format!("# leaves={}\n", leaves.len()));
    for (i, t) in leaves.iter().enumerate() {
        let sites: Vec<String> = t
            .informons()
            .iter()
            .map(|n| format!("{}:{},{}", n.point.site, n.strength.re, n.strength.im))
            .collect();
        out.push_str(&format!("{i}\t{}\n", sites.join(";")));
    }
    std::fs::write(ctx.out_dir.join("leaves.tsv"), out)?;
    println!("enumerated {} maximal tapestries into {}", leaves.len(), ctx.out_dir.display());
    Ok(())
}

fn cmd_pcm(ctx: &Ctx, configuration: Option<usize>) -> Result<(), Error> {
    let cfg = ctx.config.generation_config()?;
    let initial = ctx.config.initial_tapestry()?;
    let expr = build_expr(ctx)?;
    let tree = enumerate_plays(&expr, &initial, ctx.config.ticks, &cfg)?;
    let result = pcm(&tree, &cfg.params);
    std::fs::write(
        ctx.out_dir.join("pcm.tsv"),
        io::write_pcm(&result.elements, ctx.hash, ctx.config.seed),
    )?;
    println!("pcm has {} elements", result.len());
    if let Some(n) = configuration {
        let (extended, report) = configuration_extend(&tree)?;
        let configs = pcm_c(&extended, n, &cfg.params)?;
        for (i, ci) in configs.iter().enumerate() {
            std::fs::write(
                ctx.out_dir.join(format!("configuration_{i:03}.tsv")),
                io::write_configuration(ci, ctx.hash, ctx.config.seed),
            )?;
        }
        println!(
            "configuration map: {} maximal tapestries after closure (pool {})",
            configs.len(),
            report.candidate_pool
        );
    }
    Ok(())
}

fn cmd_converge(ctx: &Ctx) -> Result<(), Error> {
    let study = ctx.config.study.as_ref().ok_or_else(|| {
        Error::Parameter("config has no study_* section for converge".into())
    })?;
    let (sigma, k0, x0) = match &ctx.config.initial {
        tapestry_core::config::InitialDecl::Gaussian { sigma, k0, x0 } => {
            (*sigma, k0.clone(), x0.clone())
        }
        _ => (1.0, vec![0.0], vec![0.0]),
    };
    let state = AnalyticState::new(sigma, x0, k0)?;
    let report = convergence_study(
        &state,
        &StudyConfig {
            spacings: study.spacings.clone(),
            t_final: study.t_final,
            tau: study.tau,
            cone_base_sigmas: study.cone_base_sigmas,
            cone_growth: study.cone_growth,
            padding_widths: 6.0,
            renormalize: ctx.config.renormalize,
        },
    )?;
    std::fs::write(
        ctx.out_dir.join("convergence.tsv"),
        io::write_convergence_table(&report, ctx.hash, ctx.config.seed),
    )?;
    for r in &report.rows {
        println!(
            "l_p={:<8} error={:.6e} leak={:.3e} ({} ticks, {} sites, {:.2}s)",
            r.l_p, r.l2_error, r.norm_leak, r.ticks, r.sites, r.runtime_s
        );
    }
    println!(
        "fitted order {:.3}, monotone: {}",
        report.fitted_order, report.monotone
    );
    Ok(())
}
