//! Frequency search: backtracking gradient steps on `f(theta)` that keep the
//! reduced objective at or below the current weighted norm `z^H D z`.

use num_complex::Complex64;

use super::system::{gradient, solve, WeightedSolution};
use super::SolverConfig;
use crate::dictionary::FreqGrid;
use crate::error::Result;
use crate::model::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DescentMode {
    /// Joint normalized-gradient steps over the whole active set.
    Joint,
    /// One coordinate step per active atom, in index order.
    Sequential,
}

/// Last accepted step lengths, reused to seed the next backtracking search.
#[derive(Debug, Clone)]
pub(crate) struct StepMemory {
    pub joint: f64,
    pub per_atom: Vec<f64>,
    /// Set once `per_atom` has been seeded from the joint scale.
    sequential: bool,
}

impl StepMemory {
    pub fn new(n: usize, init: f64) -> Self {
        Self {
            joint: init,
            per_atom: vec![init; n],
            sequential: false,
        }
    }

    pub fn retain_indices(&mut self, keep: &[usize]) {
        self.per_atom = keep.iter().map(|&i| self.per_atom[i]).collect();
    }
}

/// Atoms whose coefficient magnitude is at least `frac` of the largest.
pub fn active_set(z: &[Complex64], frac: f64) -> Vec<usize> {
    let max = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    z.iter()
        .enumerate()
        .filter(|(_, v)| v.norm() >= frac * max)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) struct DescentResult {
    pub grid: FreqGrid,
    pub solution: WeightedSolution,
    pub active: usize,
    pub steps_taken: usize,
}

pub(crate) struct DescentInput<'a> {
    pub grid: &'a FreqGrid,
    pub z_hat: &'a [Complex64],
    pub dinv: &'a [f64],
    pub samples: &'a SampleSet,
    pub y: &'a [Complex64],
}

/// Backtracking descent from `input.grid`.
///
/// Initial trial steps are `min(gd_init_step, 2 * last_step)`; each trial is
/// halved up to `gd_backtracks` times until the Armijo condition holds. A
/// search in which nothing is accepted records its smallest trial as the
/// last step, so later searches probe finer scales. Grids with fewer atoms
/// than samples are returned unchanged.
pub(crate) fn descend(
    input: &DescentInput<'_>,
    mode: DescentMode,
    memory: &mut StepMemory,
    cfg: &SolverConfig,
    init_step: f64,
) -> Result<DescentResult> {
    let solve_at = |grid: &FreqGrid| {
        solve(
            grid.thetas(),
            input.samples,
            input.dinv,
            input.y,
            cfg.ridge_rel,
            cfg.feas_tol,
        )
    };
    let start = solve_at(input.grid)?;
    let active = active_set(input.z_hat, cfg.active_frac);
    // with fewer atoms than samples X is singular: the feasible set is a
    // single point and there is no reduced objective to descend
    if input.grid.len() < input.samples.m() {
        return Ok(DescentResult {
            grid: input.grid.clone(),
            solution: start,
            active: active.len(),
            steps_taken: 0,
        });
    }
    let mut grid = input.grid.clone();
    let mut sol = start;
    let mut steps = 0;

    match mode {
        DescentMode::Joint => {
            for _ in 0..cfg.gd_max_steps {
                let g = gradient(grid.thetas(), input.samples, &sol, &active);
                let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if !(gmax > 0.0) || !gmax.is_finite() {
                    break;
                }
                // direction -g / max|g|; slope along it is -|g|^2 / max|g|
                let slope = -g.iter().map(|v| v * v).sum::<f64>() / gmax;
                let mut step = init_step.min(2.0 * memory.joint);
                let mut accepted = None;
                for _ in 0..=cfg.gd_backtracks {
                    let mut trial = grid.clone();
                    for (&n, gn) in active.iter().zip(&g) {
                        trial.set(n, grid.thetas()[n] - step * gn / gmax);
                    }
                    if let Ok(s) = solve_at(&trial) {
                        if s.f <= sol.f + cfg.armijo_c * step * slope {
                            accepted = Some((trial, s));
                            break;
                        }
                    }
                    step *= 0.5;
                }
                match accepted {
                    Some((trial, s)) => {
                        memory.joint = step;
                        grid = trial;
                        sol = s;
                        steps += 1;
                    }
                    None => {
                        memory.joint = 2.0 * step;
                        break;
                    }
                }
            }
        }
        DescentMode::Sequential => {
            // the first sequential pass starts from the scale the joint
            // searches had reached
            if !memory.sequential {
                memory.sequential = true;
                memory.per_atom.fill(memory.joint);
            }
            for &n in &active {
                let g = gradient(grid.thetas(), input.samples, &sol, &[n])[0];
                if !(g.abs() > 0.0) || !g.is_finite() {
                    continue;
                }
                let mut step = init_step.min(2.0 * memory.per_atom[n]);
                let mut accepted = None;
                for _ in 0..=cfg.gd_backtracks {
                    let mut trial = grid.clone();
                    trial.set(n, grid.thetas()[n] - step * g.signum());
                    if let Ok(s) = solve_at(&trial) {
                        if s.f <= sol.f - cfg.armijo_c * step * g.abs() {
                            accepted = Some((trial, s));
                            break;
                        }
                    }
                    step *= 0.5;
                }
                match accepted {
                    Some((trial, s)) => {
                        memory.per_atom[n] = step;
                        grid = trial;
                        sol = s;
                        steps += 1;
                    }
                    None => memory.per_atom[n] = 2.0 * step,
                }
            }
        }
    }

    Ok(DescentResult {
        grid,
        solution: sol,
        active: active.len(),
        steps_taken: steps,
    })
}
