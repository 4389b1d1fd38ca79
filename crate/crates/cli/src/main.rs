use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use offgrid_core::array_model::{synthesize_snapshot, ArrayGeometry, Snapshot, SourceScene};
use offgrid_core::dictionary::{build_dictionary, FrequencyGrid};
use offgrid_core::estimators::{estimate, DEFAULT_ETA};
use offgrid_core::harness::{
    complexity_probe, format_rmse, growth_exponent, run_sweep, write_outputs, ComplexityConfig, ExperimentConfig, MuRule,
};
use offgrid_core::rip::{self, estimate_probabilities, Generator, ProbeConfig};
use offgrid_core::{EstimatorConfig, Method};

/// Off-grid direction-of-arrival estimation with Taylor-expanded dictionaries.
#[derive(Parser)]
#[command(name = "offgrid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep from a TOML config and write CSV and plot data.
    Simulate(SimulateArgs),
    /// Estimate the block-RIP success probabilities of the normalised dictionary.
    RipProbe(RipArgs),
    /// Estimate source frequencies from one snapshot file.
    Estimate(EstimateArgs),
    /// Time solver iterations against the grid size.
    Complexity(ComplexityArgs),
    /// Write a synthetic snapshot for a half-wavelength ULA.
    Synthesize(SynthesizeArgs),
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    ula: usize,
    /// Source frequencies in [-1, 1).
    #[arg(short, long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    frequencies: Vec<f64>,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct RipArgs {
    /// Sensors of the half-wavelength ULA.
    #[arg(long, default_value_t = 8)]
    sensors: usize,
    #[arg(long, default_value_t = 0.01)]
    grid_size: f64,
    /// Block lengths probed with the gaussian generator.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    block_len: Vec<usize>,
    /// Also probe proportional blocks of length 3.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    proportional: bool,
    /// Numbers of active blocks.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14,16")]
    sparsity: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV output; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Snapshot file with one `re,im` pair per sensor.
    #[arg(short, long)]
    snapshot: PathBuf,
    /// Geometry file (TOML with `positions` in half-wavelength units).
    #[arg(short, long, conflicts_with = "ula")]
    geometry: Option<PathBuf>,
    /// Use an `M`-element half-wavelength ULA instead of a geometry file.
    #[arg(long)]
    ula: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    grid_size: f64,
    #[arg(short, long, value_delimiter = ',', default_value = "taylor2_glasso")]
    method: Vec<Method>,
    /// Number of sources.
    #[arg(short = 'k', long, default_value_t = 1)]
    sources: usize,
    /// Noise standard deviation; sets `μ = σ√(M ln M)`.
    #[arg(long, conflicts_with = "mu")]
    noise_std: Option<f64>,
    /// Regularisation weight.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, default_value_t = 16)]
    sensors: usize,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    grid_points: Vec<usize>,
    #[arg(short, long, value_delimiter = ',', default_value = "lasso,neighbor_glasso,taylor1_glasso,taylor2_glasso")]
    method: Vec<Method>,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV output; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    let out = run_sweep(&cfg)?;
    write_outputs(&args.out, &cfg, &out)?;
    println!("{:<16} {:>12} {:>10} {:>6} {:>6} {:>10}", "method", out.axis, "rmse_db", "pcd", "fail", "crb_db");
    for r in &out.rows {
        let rmse = match r.rmse_db {
            Some(v) if v.is_finite() => format!("{v:.2}"),
            other => format_rmse(other),
        };
        let crb = r.crb_db.map(|v| format!("{v:.2}")).unwrap_or_default();
        println!(
            "{:<16} {:>12} {:>10} {:>6.3} {:>6} {:>10}",
            r.method.name(),
            r.sweep_value,
            rmse,
            r.pcd,
            r.n_fail,
            crb
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn rip_probe(args: RipArgs) -> Result<()> {
    let geo = ArrayGeometry::ula(args.sensors)?;
    let dict = build_dictionary(&geo, &FrequencyGrid::new(args.grid_size)?, 2)?;
    let mut runs: Vec<(usize, Generator)> = args.block_len.iter().map(|&b| (b, Generator::Gaussian)).collect();
    if args.proportional {
        runs.push((3, Generator::Proportional));
    }
    let mut rows = Vec::new();
    for (b, generator) in runs {
        let cfg = ProbeConfig {
            block_len: b,
            sparsities: args.sparsity.clone(),
            trials: args.trials,
            generator,
            seed: args.seed,
        };
        for e in estimate_probabilities(&dict, &cfg)? {
            rows.push((b, generator, e));
        }
    }
    rip::write_csv(output(&args.out)?, &rows)?;
    Ok(())
}

fn estimate_cmd(args: EstimateArgs) -> Result<()> {
    let geo = match (&args.geometry, args.ula) {
        (Some(path), _) => ArrayGeometry::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(m)) => ArrayGeometry::ula(m)?,
        (None, None) => bail!("either --geometry or --ula is required"),
    };
    let snapshot = Snapshot::load(&args.snapshot).with_context(|| format!("loading {}", args.snapshot.display()))?;
    let m = geo.num_sensors();
    let mu = match (args.mu, args.noise_std) {
        (Some(mu), _) => mu,
        (None, Some(sigma)) => MuRule::NoiseScaled.mu(sigma, m),
        (None, None) => bail!("either --mu or --noise-std is required"),
    };
    let grid = FrequencyGrid::new(args.grid_size)?;
    let dict = build_dictionary(&geo, &grid, 2)?;
    let mut w = io::stdout().lock();
    let mut header = vec!["method".to_string(), "status".into(), "iterations".into()];
    header.extend((1..=args.sources).map(|k| format!("u_hat_{k}")));
    header.extend((1..=args.sources).map(|k| format!("p_hat_{k}")));
    writeln!(w, "{}", header.join(","))?;
    for method in args.method {
        let mut cfg = EstimatorConfig::new(method, mu, args.sources);
        cfg.eta = args.eta;
        let r = estimate(&snapshot, &dict, &cfg)?;
        let mut rec = vec![method.name().to_string(), r.status.as_str().to_string(), r.solver.iterations.to_string()];
        for values in [&r.frequencies, &r.offsets] {
            rec.extend((0..args.sources).map(|k| values.get(k).map(|v| v.to_string()).unwrap_or_default()));
        }
        writeln!(w, "{}", rec.join(","))?;
    }
    Ok(())
}

fn complexity(args: ComplexityArgs) -> Result<()> {
    let cfg = ComplexityConfig {
        num_sensors: args.sensors,
        grid_points: args.grid_points,
        methods: args.method.clone(),
        trials: args.trials,
        seed: args.seed,
        ..Default::default()
    };
    let rows = complexity_probe(&cfg)?;
    let mut w = output(&args.out)?;
    writeln!(w, "method,L,per_iteration_ms,iterations")?;
    for r in &rows {
        writeln!(w, "{},{},{},{}", r.method.name(), r.num_grid, r.per_iteration_ms, r.iterations)?;
    }
    for m in args.method {
        if let Some(slope) = growth_exponent(&rows, m) {
            eprintln!("{m}: per-iteration time grows as L^{slope:.2}");
        }
    }
    Ok(())
}

fn synthesize(args: SynthesizeArgs) -> Result<()> {
    let geo = ArrayGeometry::ula(args.ula)?;
    let scene = SourceScene::unit_amplitude(args.frequencies, args.snr_db)?;
    synthesize_snapshot(&geo, &scene, args.seed).save(&args.out)?;
    println!("noise_std = {}", scene.noise_std());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::RipProbe(a) => rip_probe(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Complexity(a) => complexity(a),
        Command::Synthesize(a) => synthesize(a),
    }
}
