//! Monte Carlo experiments: measurement-count and spacing sweeps.
//!
//! Every trial draws from its own stream derived from `(seed, axis value,
//! trial index)`, so results do not depend on scheduling. Trials run on a
//! rayon pool; records are streamed to `trials.partial.jsonl` as they finish
//! and rewritten in trial order to `trials.jsonl` at the end. Aggregation is
//! a fold in trial order, which makes the summary CSV byte-reproducible.

mod config;
pub mod report;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{parse_methods, ExperimentConfig, ExperimentKind, Method};

use crate::baseline;
use crate::error::{Error, Result};
use crate::metrics::{detect, reconstruct_full, rsnr, success, TrialResult, DETECTION_THRESHOLD};
use crate::model::{
    draw_spectrum, draw_spectrum_spaced, subsample, synthesize, FullSignal, LineSpectrum, SampleSet,
};
use crate::rng::{derive_seed, stream};
use crate::solver::{self, IterationRecord, SolveOutcome, SolverState};
use crate::TAU;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "GRIDLESS_WORKERS";

pub const PARTIAL_FILE: &str = "trials.partial.jsonl";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const CONFIG_FILE: &str = "config.toml";
pub const CSV_FILE: &str = "summary.csv";
pub const JSON_FILE: &str = "summary.json";

/// One method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub axis_value: f64,
    pub trial_index: u64,
    #[serde(flatten)]
    pub result: TrialResult,
    /// Failure description when the method did not complete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Mean RSNR and success rate of one method at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub axis_value: f64,
    pub method: String,
    pub mean_rsnr_db: f64,
    pub success_rate: f64,
    pub n_trials: usize,
}

/// Per-iteration trace line of a proposed-method run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceLine {
    pub axis_value: f64,
    pub trial_index: u64,
    pub iteration: usize,
    pub epsilon: f64,
    pub objective: f64,
    pub residual: f64,
    pub active: usize,
    pub atoms: usize,
}

impl TraceLine {
    fn new(axis_value: f64, trial_index: u64, r: &IterationRecord) -> Self {
        Self {
            axis_value,
            trial_index,
            iteration: r.iteration,
            epsilon: r.epsilon,
            objective: r.objective,
            residual: r.residual,
            active: r.active,
            atoms: r.atoms,
        }
    }
}

/// Ground truth and measurements of one trial.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub seed: u64,
    pub spectrum: LineSpectrum,
    pub signal: FullSignal,
    pub samples: SampleSet,
    pub y: Vec<Complex64>,
}

/// Stream seed of trial `trial_index` at `axis_value`.
pub fn trial_seed(cfg: &ExperimentConfig, axis_value: f64, trial_index: u64) -> u64 {
    derive_seed(cfg.seed, &[axis_value.to_bits(), trial_index])
}

/// Draw the instance of one trial.
pub fn draw_instance(
    cfg: &ExperimentConfig,
    axis_value: f64,
    trial_index: u64,
) -> Result<TrialInstance> {
    let seed = trial_seed(cfg, axis_value, trial_index);
    let mut rng = stream(seed);
    let spectrum = match cfg.kind {
        ExperimentKind::SpacingSweep => draw_spectrum_spaced(axis_value, cfg.len, &mut rng)?,
        _ => {
            let spacing =
                (cfg.min_separation > 0.0).then(|| TAU * cfg.min_separation / cfg.len as f64);
            draw_spectrum(cfg.components(), spacing, &mut rng)?
        }
    };
    let signal = synthesize(&spectrum, cfg.len);
    let samples = SampleSet::draw(cfg.len, cfg.measurements_at(axis_value), &mut rng)?;
    let y = subsample(&signal, &samples)?.y;
    Ok(TrialInstance {
        seed,
        spectrum,
        signal,
        samples,
        y,
    })
}

fn score(
    method: Method,
    inst: &TrialInstance,
    thetas: &[f64],
    z: &[Complex64],
    elapsed_ms: f64,
) -> Result<TrialResult> {
    let u_hat = reconstruct_full(thetas, z, inst.signal.len())?;
    let detected = detect(z, thetas, DETECTION_THRESHOLD);
    let (ok, err) = success(inst.spectrum.freqs(), &detected, inst.spectrum.k());
    Ok(TrialResult {
        method: method.label().to_string(),
        seed: inst.seed,
        rsnr_db: rsnr(&inst.signal, &u_hat)?,
        detected_count: detected.len(),
        detected_freqs: detected,
        freq_error: err,
        success: ok,
        timing_ms: elapsed_ms,
    })
}

/// Record of a method that failed: scored on the state it reached, if the
/// error carries one, else on an empty estimate (0 dB).
fn failed(
    method: Method,
    inst: &TrialInstance,
    err: &Error,
    elapsed_ms: f64,
) -> Result<(TrialResult, Option<String>)> {
    let mut result = match err {
        Error::IllConditioned {
            state: Some(st), ..
        } => score(method, inst, st.theta_hat.thetas(), &st.z_hat, elapsed_ms)?,
        _ => score(method, inst, &[], &[], elapsed_ms)?,
    };
    result.success = false;
    Ok((result, Some(err.to_string())))
}

fn run_method(
    method: Method,
    cfg: &ExperimentConfig,
    inst: &TrialInstance,
    trace: Option<&mut Vec<IterationRecord>>,
) -> Result<(TrialResult, Option<String>)> {
    let start = Instant::now();
    let ms = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    let outcome: Result<(Vec<f64>, Vec<Complex64>)> = match method {
        Method::Proposed => {
            let mut sink = trace;
            solver::run_with_observer(&inst.y, &inst.samples, &cfg.solver, &mut |r| {
                if let Some(t) = sink.as_deref_mut() {
                    t.push(r.clone());
                }
            })
            .map(|o: SolveOutcome| split(o.state))
        }
        Method::FixedGrid => {
            baseline::fixed_grid_irls(&inst.y, &inst.samples, &cfg.solver).map(|o| split(o.state))
        }
        Method::OracleLs => baseline::oracle_ls(&inst.y, &inst.samples, inst.spectrum.freqs())
            .map(|(amps, _)| (inst.spectrum.freqs().to_vec(), amps)),
    };
    let elapsed = ms(start);
    match outcome {
        Ok((thetas, z)) => Ok((score(method, inst, &thetas, &z, elapsed)?, None)),
        Err(e) => failed(method, inst, &e, elapsed),
    }
}

fn split(state: SolverState) -> (Vec<f64>, Vec<Complex64>) {
    (state.theta_hat.thetas().to_vec(), state.z_hat)
}

/// Run every configured method on trial `trial_index` at `axis_value`.
///
/// Method failures become unsuccessful records with a diagnostic; only an
/// invalid configuration or an undrawable instance is an error.
pub fn run_trial(
    cfg: &ExperimentConfig,
    axis_value: f64,
    trial_index: u64,
) -> Result<Vec<TrialRecord>> {
    Ok(run_trial_traced(cfg, axis_value, trial_index, false)?.0)
}

fn run_trial_traced(
    cfg: &ExperimentConfig,
    axis_value: f64,
    trial_index: u64,
    trace: bool,
) -> Result<(Vec<TrialRecord>, Vec<TraceLine>)> {
    let inst = draw_instance(cfg, axis_value, trial_index)?;
    let mut history = Vec::new();
    let mut records = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let sink = (trace && method == Method::Proposed).then_some(&mut history);
        let (result, diagnostic) = run_method(method, cfg, &inst, sink)?;
        records.push(TrialRecord {
            axis_value,
            trial_index,
            result,
            diagnostic,
        });
    }
    let lines = history
        .iter()
        .map(|r| TraceLine::new(axis_value, trial_index, r))
        .collect();
    Ok((records, lines))
}

/// Where and how to run an experiment.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` reads [`WORKERS_ENV`], then uses all cores.
    pub workers: Option<usize>,
    /// Write per-iteration traces of the proposed method.
    pub trace: bool,
}

/// Aggregated rows together with the per-trial records they came from.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<AggregateRow>,
    pub records: Vec<TrialRecord>,
}

fn worker_count(opt: Option<usize>) -> Result<usize> {
    if let Some(n) = opt {
        return Ok(n);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "{WORKERS_ENV} must be a non-negative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(0),
    }
}

struct Sinks {
    partial: BufWriter<File>,
    trace: Option<BufWriter<File>>,
    path: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn write_line<T: Serialize>(w: &mut impl Write, path: &Path, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::parse(path, e.to_string()))?;
    writeln!(w, "{line}").map_err(|e| Error::io(path, e))
}

/// Run all trials of `cfg` and aggregate them.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let axes = cfg.axis_values();
    let tasks: Vec<(f64, u64)> = axes
        .iter()
        .flat_map(|&a| (0..cfg.n_trials as u64).map(move |i| (a, i)))
        .collect();

    let sinks = match &opts.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let cfg_path = dir.join(CONFIG_FILE);
            fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;
            let trace = if opts.trace {
                Some(create(&dir.join(TRACE_FILE))?)
            } else {
                None
            };
            Some(Mutex::new(Sinks {
                partial: create(&dir.join(PARTIAL_FILE))?,
                trace,
                path: dir.clone(),
            }))
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(opts.workers)?)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let per_task: Vec<Vec<TrialRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(axis, idx)| -> Result<Vec<TrialRecord>> {
                let (records, trace) = run_trial_traced(cfg, axis, idx, opts.trace)?;
                if let Some(sinks) = &sinks {
                    let mut s = sinks.lock().unwrap_or_else(|p| p.into_inner());
                    let partial_path = s.path.join(PARTIAL_FILE);
                    for r in &records {
                        write_line(&mut s.partial, &partial_path, r)?;
                    }
                    s.partial.flush().map_err(|e| Error::io(&partial_path, e))?;
                    let trace_path = s.path.join(TRACE_FILE);
                    if let Some(t) = s.trace.as_mut() {
                        for line in &trace {
                            write_line(t, &trace_path, line)?;
                        }
                        t.flush().map_err(|e| Error::io(&trace_path, e))?;
                    }
                }
                Ok(records)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let records: Vec<TrialRecord> = per_task.into_iter().flatten().collect();
    let rows = aggregate(&records, &axes, &cfg.methods);

    if let Some(dir) = &opts.out_dir {
        let path = dir.join(TRIALS_FILE);
        let mut w = create(&path)?;
        for r in &records {
            write_line(&mut w, &path, r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        report::emit_report(cfg, &rows, dir)?;
    }
    Ok(ExperimentOutput { rows, records })
}

/// Fold per-trial records into one row per (axis value, method), in the
/// given axis and method order. Sums run in trial-index order.
pub fn aggregate(records: &[TrialRecord], axes: &[f64], methods: &[Method]) -> Vec<AggregateRow> {
    let mut rows = Vec::with_capacity(axes.len() * methods.len());
    for &axis in axes {
        for method in methods {
            let mut sel: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| {
                    r.axis_value.to_bits() == axis.to_bits() && r.result.method == method.label()
                })
                .collect();
            if sel.is_empty() {
                continue;
            }
            sel.sort_by_key(|r| r.trial_index);
            let n = sel.len();
            let rsnr_sum: f64 = sel.iter().map(|r| r.result.rsnr_db).sum();
            let successes = sel.iter().filter(|r| r.result.success).count();
            rows.push(AggregateRow {
                axis_value: axis,
                method: method.label().to_string(),
                mean_rsnr_db: rsnr_sum / n as f64,
                success_rate: successes as f64 / n as f64,
                n_trials: n,
            });
        }
    }
    rows
}
