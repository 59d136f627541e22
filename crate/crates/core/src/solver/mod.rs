//! Iterative reweighted majorization-minimization solver.
//!
//! Each outer iteration
//!
//! 1. reweights with `d_n = 1 / (|z_n|^2 + eps)` (the log-sum majorizer),
//! 2. moves the active frequencies downhill on `f(theta) = y^H X^{-1} y`,
//!    which keeps `f` below the current weighted norm `z^H D z`,
//! 3. recomputes the weighted minimum-norm coefficients on the new grid,
//! 4. prunes vanishing atoms and merges coincident ones once `eps` is small,
//! 5. shrinks `eps` when the coefficients have settled.
//!
//! Steps 1-3 never increase the log-sum objective for a fixed `eps`; the run
//! history records both sides of that inequality for every iteration.

mod descent;
mod objective;
mod prune;
mod system;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use descent::active_set;
pub use objective::{logsum_objective, make_weights, surrogate_q, Weights};

use crate::dictionary::FreqGrid;
use crate::error::{Error, Result};
use crate::model::SampleSet;
use descent::{descend, DescentInput, DescentMode, StepMemory};

/// Solver knobs. Defaults follow the reference configuration in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Initial atom count; `None` uses the signal length `L`.
    pub n_atoms: Option<usize>,
    pub eps0: f64,
    pub eps_floor: f64,
    pub eps_factor: f64,
    /// Relative coefficient change below which `eps` is reduced.
    pub eps_trigger: f64,
    /// Stop once `||z_new - z||_2` falls below this with `eps` at its floor.
    pub stop_tol: f64,
    pub max_outer: usize,
    pub gd_max_steps: usize,
    pub gd_backtracks: usize,
    /// Largest trial step in radians; `None` uses `1 / (M L)`.
    pub gd_init_step: Option<f64>,
    pub armijo_c: f64,
    pub active_frac: f64,
    pub prune_rel: f64,
    /// Pruning and merging start once `eps` drops below this.
    pub prune_eps: f64,
    pub merge_rad: f64,
    pub feas_tol: f64,
    pub ridge_rel: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_atoms: None,
            eps0: 1.0,
            eps_floor: 1e-8,
            eps_factor: 0.1,
            eps_trigger: 1e-2,
            stop_tol: 1e-6,
            max_outer: 500,
            gd_max_steps: 5,
            gd_backtracks: 10,
            gd_init_step: None,
            armijo_c: 1e-4,
            active_frac: 0.05,
            prune_rel: 1e-6,
            prune_eps: 1e-4,
            merge_rad: 1e-4,
            feas_tol: 1e-8,
            ridge_rel: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        let positive = [
            ("eps0", self.eps0),
            ("eps_floor", self.eps_floor),
            ("eps_trigger", self.eps_trigger),
            ("stop_tol", self.stop_tol),
            ("armijo_c", self.armijo_c),
            ("prune_rel", self.prune_rel),
            ("prune_eps", self.prune_eps),
            ("merge_rad", self.merge_rad),
            ("feas_tol", self.feas_tol),
            ("ridge_rel", self.ridge_rel),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.eps_floor > self.eps0 {
            return bad("eps_floor must not exceed eps0");
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return bad("eps_factor must lie in (0, 1)");
        }
        if !(self.active_frac > 0.0 && self.active_frac <= 1.0) {
            return bad("active_frac must lie in (0, 1]");
        }
        if self.n_atoms == Some(0) {
            return bad("n_atoms must be positive");
        }
        if let Some(s) = self.gd_init_step {
            if !(s > 0.0) {
                return bad("gd_init_step must be positive");
            }
        }
        if self.max_outer == 0 {
            return bad("max_outer must be positive");
        }
        Ok(())
    }

    pub(crate) fn init_step(&self, samples: &SampleSet) -> f64 {
        self.gd_init_step
            .unwrap_or_else(|| 1.0 / (samples.m() as f64 * samples.parent_len() as f64))
    }
}

/// Current iterate of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub theta_hat: FreqGrid,
    pub z_hat: Vec<Complex64>,
    pub epsilon: f64,
    pub iteration: usize,
    /// Log-sum objective of `z_hat` at `epsilon`.
    pub objective: f64,
    /// `||y - A(theta_hat) z_hat||_2`.
    pub residual: f64,
}

/// One outer iteration, as recorded in the history and the trace stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub epsilon: f64,
    /// Log-sum objective of the incoming coefficients.
    pub objective_prev: f64,
    /// Log-sum objective after the coefficient update, same `epsilon`.
    pub objective: f64,
    /// `z^H D z` for the incoming coefficients.
    pub weighted_norm_prev: f64,
    /// `f(theta)` at the frequencies returned by the descent step.
    pub f_accepted: f64,
    pub residual: f64,
    pub residual_rel: f64,
    pub active: usize,
    pub atoms: usize,
    pub descent_steps: usize,
    pub dz_norm: f64,
    pub pruned: usize,
    pub merged: usize,
}

/// Final state of a run with its per-iteration history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub state: SolverState,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

fn check_inputs(y: &[Complex64], samples: &SampleSet, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if y.len() != samples.m() {
        return Err(Error::InvalidInput(format!(
            "{} measurements for {} sample indices",
            y.len(),
            samples.m()
        )));
    }
    Ok(())
}

/// Weighted minimum-norm coefficients `D^{-1} A^H (A D^{-1} A^H)^{-1} y`.
pub fn z_update(
    grid: &FreqGrid,
    samples: &SampleSet,
    w: &Weights,
    y: &[Complex64],
    cfg: &SolverConfig,
) -> Result<Vec<Complex64>> {
    Ok(system::solve(
        grid.thetas(),
        samples,
        &w.inverse(),
        y,
        cfg.ridge_rel,
        cfg.feas_tol,
    )?
    .z)
}

/// Reduced objective `y^H (A D^{-1} A^H)^{-1} y`.
pub fn f_theta(
    grid: &FreqGrid,
    samples: &SampleSet,
    w: &Weights,
    y: &[Complex64],
    cfg: &SolverConfig,
) -> Result<f64> {
    Ok(system::solve(
        grid.thetas(),
        samples,
        &w.inverse(),
        y,
        cfg.ridge_rel,
        cfg.feas_tol,
    )?
    .f)
}

/// `df / dtheta_i` for each `i` in `active`, in the same order.
pub fn grad_f(
    grid: &FreqGrid,
    samples: &SampleSet,
    w: &Weights,
    y: &[Complex64],
    active: &[usize],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if let Some(&bad) = active.iter().find(|&&i| i >= grid.len()) {
        return Err(Error::InvalidInput(format!(
            "atom index {bad} out of range"
        )));
    }
    let sol = system::solve(
        grid.thetas(),
        samples,
        &w.inverse(),
        y,
        cfg.ridge_rel,
        cfg.feas_tol,
    )?;
    Ok(system::gradient(grid.thetas(), samples, &sol, active))
}

/// One frequency search from `state.theta_hat` under weights `w`.
///
/// The result satisfies `f(theta_new) <= z_hat^H D z_hat` whenever `z_hat`
/// is feasible for `theta_hat`; if no step improves `f` the grid is returned
/// unchanged.
pub fn theta_descent(
    state: &SolverState,
    samples: &SampleSet,
    w: &Weights,
    y: &[Complex64],
    cfg: &SolverConfig,
) -> Result<FreqGrid> {
    let init = cfg.init_step(samples);
    let mut memory = StepMemory::new(state.theta_hat.len(), init);
    let dinv = w.inverse();
    let mode = if state.epsilon <= cfg.eps_floor {
        DescentMode::Sequential
    } else {
        DescentMode::Joint
    };
    let input = DescentInput {
        grid: &state.theta_hat,
        z_hat: &state.z_hat,
        dinv: &dinv,
        samples,
        y,
    };
    Ok(descend(&input, mode, &mut memory, cfg, init)?.grid)
}

/// Next `eps`: reduced by `eps_factor` (not below the floor) once the
/// relative coefficient change drops below `eps_trigger`.
pub fn anneal(epsilon: f64, z_change_rel: f64, cfg: &SolverConfig) -> f64 {
    if z_change_rel < cfg.eps_trigger {
        (epsilon * cfg.eps_factor).max(cfg.eps_floor)
    } else {
        epsilon
    }
}

/// Drop atoms with negligible coefficients and collapse near-duplicates,
/// re-solving the coefficients under the restricted weights `w`.
///
/// Does nothing while `eps >= prune_eps`. Never removes the last atom, and
/// never commits a removal whose re-solve fails the feasibility test.
pub fn prune_and_merge(
    state: &SolverState,
    samples: &SampleSet,
    w: &Weights,
    y: &[Complex64],
    cfg: &SolverConfig,
) -> Result<SolverState> {
    if state.epsilon >= cfg.prune_eps {
        return Ok(state.clone());
    }
    let out = prune::prune_and_merge(
        &state.theta_hat,
        &state.z_hat,
        &w.inverse(),
        samples,
        y,
        cfg,
    )?;
    let Some(sol) = out.solution else {
        return Ok(state.clone());
    };
    Ok(SolverState {
        theta_hat: state.theta_hat.retain_indices(&out.keep),
        objective: logsum_objective(&sol.z, state.epsilon),
        residual: sol.residual,
        z_hat: sol.z,
        epsilon: state.epsilon,
        iteration: state.iteration,
    })
}

/// Joint frequency and coefficient recovery from measurements `y`.
pub fn run(y: &[Complex64], samples: &SampleSet, cfg: &SolverConfig) -> Result<SolveOutcome> {
    run_with_observer(y, samples, cfg, &mut |_| {})
}

/// [`run`], calling `observer` after every outer iteration.
pub fn run_with_observer(
    y: &[Complex64],
    samples: &SampleSet,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<SolveOutcome> {
    run_loop(y, samples, cfg, true, observer)
}

pub(crate) fn run_loop(
    y: &[Complex64],
    samples: &SampleSet,
    cfg: &SolverConfig,
    learn_frequencies: bool,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<SolveOutcome> {
    check_inputs(y, samples, cfg)?;
    let n0 = cfg.n_atoms.unwrap_or(samples.parent_len());
    let init_step = cfg.init_step(samples);
    let mut grid = FreqGrid::uniform(n0)?;
    let first = system::solve(
        grid.thetas(),
        samples,
        &vec![1.0; n0],
        y,
        cfg.ridge_rel,
        cfg.feas_tol,
    )?;
    let mut z = first.z;
    let mut residual = first.residual;
    let mut eps = cfg.eps0;
    let mut memory = StepMemory::new(n0, init_step);
    let mut history = Vec::new();
    let mut converged = false;

    let snapshot =
        |grid: &FreqGrid, z: &[Complex64], eps: f64, it: usize, residual: f64| SolverState {
            theta_hat: grid.clone(),
            z_hat: z.to_vec(),
            epsilon: eps,
            iteration: it,
            objective: logsum_objective(z, eps),
            residual,
        };
    let attach = |e: Error, state: SolverState| match e {
        Error::IllConditioned { residual_rel, .. } => Error::IllConditioned {
            residual_rel,
            state: Some(Box::new(state)),
        },
        other => other,
    };

    for it in 0..cfg.max_outer {
        let w = make_weights(&z, eps);
        let dinv = w.inverse();
        let objective_prev = logsum_objective(&z, eps);
        let weighted_norm_prev = w.weighted_norm(&z);

        let (new_grid, sol, active, descent_steps) = if learn_frequencies {
            let mode = if eps <= cfg.eps_floor {
                DescentMode::Sequential
            } else {
                DescentMode::Joint
            };
            let input = DescentInput {
                grid: &grid,
                z_hat: &z,
                dinv: &dinv,
                samples,
                y,
            };
            let out = descend(&input, mode, &mut memory, cfg, init_step)
                .map_err(|e| attach(e, snapshot(&grid, &z, eps, it, residual)))?;
            (out.grid, out.solution, out.active, out.steps_taken)
        } else {
            let sol = system::solve(
                grid.thetas(),
                samples,
                &dinv,
                y,
                cfg.ridge_rel,
                cfg.feas_tol,
            )
            .map_err(|e| attach(e, snapshot(&grid, &z, eps, it, residual)))?;
            (grid.clone(), sol, 0, 0)
        };

        let objective = logsum_objective(&sol.z, eps);
        let dz_norm = sol
            .z
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let z_norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let dz_rel = if z_norm > 0.0 {
            dz_norm / z_norm
        } else {
            dz_norm
        };

        let mut record = IterationRecord {
            iteration: it,
            epsilon: eps,
            objective_prev,
            objective,
            weighted_norm_prev,
            f_accepted: sol.f,
            residual: sol.residual,
            residual_rel: sol.residual_rel(),
            active,
            atoms: new_grid.len(),
            descent_steps,
            dz_norm,
            pruned: 0,
            merged: 0,
        };

        grid = new_grid;
        z = sol.z;
        residual = sol.residual;

        if eps < cfg.prune_eps {
            let out = prune::prune_and_merge(&grid, &z, &dinv, samples, y, cfg)?;
            if let Some(sol) = out.solution {
                grid = grid.retain_indices(&out.keep);
                memory.retain_indices(&out.keep);
                record.pruned = out.pruned;
                record.merged = out.merged;
                // feasibility of the coefficients carried into the next iteration
                record.residual = sol.residual;
                record.residual_rel = sol.residual_rel();
                z = sol.z;
                residual = sol.residual;
            }
        }
        observer(&record);
        let changed_atoms = record.pruned + record.merged > 0;
        history.push(record);

        let at_floor = eps <= cfg.eps_floor;
        if at_floor && dz_norm <= cfg.stop_tol && !changed_atoms {
            converged = true;
            break;
        }
        eps = anneal(eps, dz_rel, cfg);
    }

    let iteration = history.len();
    Ok(SolveOutcome {
        state: snapshot(&grid, &z, eps, iteration, residual),
        history,
        converged,
    })
}
