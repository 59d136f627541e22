use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gridless::harness::{
    self, parse_methods, report, ExperimentConfig, ExperimentKind, RunOptions,
};
use gridless::metrics::{detect, reconstruct_full, rsnr, success, DETECTION_THRESHOLD};
use gridless::model::{draw_spectrum, draw_spectrum_spaced};
use gridless::rng::stream;
use gridless::{solver, Instance, SampleSet, SolveOutcome, SolverConfig, TAU};

#[derive(Parser)]
#[command(
    name = "gridless",
    version,
    about = "Gridless line spectral estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover one instance and print the final state.
    Solve(SolveArgs),
    /// Success rate and RSNR against the number of measurements M.
    SweepM(SweepArgs),
    /// Two-component resolution against the spacing coefficient mu.
    SweepSpacing(SweepArgs),
    /// Re-aggregate the trials persisted in an output directory.
    Report {
        /// Run directory written by a sweep.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment TOML; its `kind` is replaced by the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (default: the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of proposed,fixed_grid,oracle_ls.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated axis values (M for sweep-m, mu for sweep-spacing).
    #[arg(long)]
    values: Option<String>,
    /// Worker threads (0: all cores).
    #[arg(long, env = harness::WORKERS_ENV)]
    workers: Option<usize>,
    /// Write per-iteration traces of the proposed method to trace.jsonl.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON to solve; a fresh instance is drawn when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Experiment TOML supplying the `[solver]` section.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short = 'L', long = "len", default_value_t = 64)]
    len: usize,
    #[arg(short = 'M', long = "m", default_value_t = 20)]
    m: usize,
    #[arg(short = 'K', long = "k", default_value_t = 3)]
    k: usize,
    /// Draw a two-component pair `mu / L` cycles apart instead.
    #[arg(long)]
    mu: Option<f64>,
    /// Minimum separation of drawn frequencies, in units of 2pi/L.
    #[arg(long, default_value_t = 2.0)]
    min_separation: f64,
    /// Write instance.json and outcome.json here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print one JSON line per iteration to stderr.
    #[arg(long)]
    trace: bool,
}

fn sweep(kind: ExperimentKind, args: SweepArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(kind),
    };
    cfg.kind = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.trials {
        cfg.n_trials = n;
    }
    if let Some(list) = &args.methods {
        cfg.methods = parse_methods(list)?;
    }
    if let Some(list) = &args.values {
        let parts = list.split(',').map(str::trim).filter(|s| !s.is_empty());
        match kind {
            ExperimentKind::SpacingSweep => {
                cfg.mu_values = parts
                    .map(|s| s.parse().with_context(|| format!("bad mu value `{s}`")))
                    .collect::<Result<_>>()?;
            }
            _ => {
                cfg.m_values = parts
                    .map(|s| s.parse().with_context(|| format!("bad M value `{s}`")))
                    .collect::<Result<_>>()?;
            }
        }
    }
    if let Some(out) = args.out {
        cfg.output = out;
    }
    cfg.validate()?;
    let opts = RunOptions {
        out_dir: Some(cfg.output.clone()),
        workers: args.workers,
        trace: args.trace,
    };
    let out = harness::run_experiment(&cfg, &opts)?;
    print!("{}", report::to_csv(&out.rows));
    eprintln!("wrote {}", cfg.output.display());
    Ok(())
}

fn draw(args: &SolveArgs) -> Result<Instance> {
    let mut rng = stream(args.seed);
    let spectrum = match args.mu {
        Some(mu) => draw_spectrum_spaced(mu, args.len, &mut rng)?,
        None => {
            let sp =
                (args.min_separation > 0.0).then(|| TAU * args.min_separation / args.len as f64);
            draw_spectrum(args.k, sp, &mut rng)?
        }
    };
    let samples = SampleSet::draw(args.len, args.m, &mut rng)?;
    Ok(Instance::new(&spectrum, &samples, args.seed))
}

fn write_outcome(path: &Path, value: &SolveOutcome) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn solve(args: SolveArgs) -> Result<()> {
    let cfg: SolverConfig = match &args.config {
        Some(path) => ExperimentConfig::load(path)?.solver,
        None => SolverConfig::default(),
    };
    let instance = match &args.instance {
        Some(path) => Instance::load(path)?,
        None => draw(&args)?,
    };
    let (spectrum, signal, meas) = instance.realize()?;
    let len = signal.len();

    let stderr = std::io::stderr();
    let outcome = solver::run_with_observer(&meas.y, &meas.samples, &cfg, &mut |r| {
        if args.trace {
            if let Ok(line) = serde_json::to_string(r) {
                let _ = writeln!(stderr.lock(), "{line}");
            }
        }
    })?;
    let st = &outcome.state;
    let u_hat = reconstruct_full(st.theta_hat.thetas(), &st.z_hat, len)?;
    let detected = detect(&st.z_hat, st.theta_hat.thetas(), DETECTION_THRESHOLD);
    let (ok, err) = success(spectrum.freqs(), &detected, spectrum.k());

    println!("L = {len}, M = {}, K = {}", meas.samples.m(), spectrum.k());
    println!(
        "iterations {} ({}), epsilon {:e}, atoms {}",
        outcome.history.len(),
        if outcome.converged {
            "converged"
        } else {
            "iteration limit"
        },
        st.epsilon,
        st.theta_hat.len()
    );
    println!(
        "objective {:.6e}, residual {:.3e}",
        st.objective, st.residual
    );
    println!("true freqs     {:?}", spectrum.freqs());
    println!("detected freqs {detected:?}");
    println!(
        "rsnr {:.2} dB, freq error {err:e} cycles, success {ok}",
        rsnr(&signal, &u_hat)?
    );

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        instance.save(&dir.join("instance.json"))?;
        write_outcome(&dir.join("outcome.json"), &outcome)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::SweepM(args) => sweep(ExperimentKind::MSweep, args),
        Command::SweepSpacing(args) => sweep(ExperimentKind::SpacingSweep, args),
        Command::Report { out } => {
            if !out.is_dir() {
                bail!("{} is not a run directory", out.display());
            }
            let (cfg, rows) = report::reaggregate(&out)?;
            if rows.is_empty() {
                bail!("no trial records in {}", out.display());
            }
            report::emit_report(&cfg, &rows, &out)?;
            print!("{}", report::to_csv(&rows));
            Ok(())
        }
    }
}
