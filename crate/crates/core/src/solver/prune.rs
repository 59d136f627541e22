//! Pruning of vanishing atoms and merging of coincident ones.

use num_complex::Complex64;

use super::system::{solve, WeightedSolution};
use super::SolverConfig;
use crate::dictionary::FreqGrid;
use crate::error::Result;
use crate::model::{circular_distance, SampleSet};

pub(crate) struct PruneOutcome {
    /// Surviving atom indices into the input grid, ascending.
    pub keep: Vec<usize>,
    pub solution: Option<WeightedSolution>,
    pub pruned: usize,
    pub merged: usize,
}

impl PruneOutcome {
    fn unchanged(n: usize) -> Self {
        Self {
            keep: (0..n).collect(),
            solution: None,
            pruned: 0,
            merged: 0,
        }
    }
}

/// Indices removed by merging atoms closer than `merge_rad`.
///
/// The atom with the larger coefficient survives; on an exact tie the lower
/// index does.
fn merge_losers(thetas: &[f64], z: &[Complex64], merge_rad: f64) -> Vec<bool> {
    let n = thetas.len();
    let mut removed = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| thetas[a].total_cmp(&thetas[b]).then(a.cmp(&b)));
    loop {
        let alive: Vec<usize> = order.iter().copied().filter(|&i| !removed[i]).collect();
        if alive.len() < 2 {
            break;
        }
        let pair = (0..alive.len()).find_map(|k| {
            let (a, b) = (alive[k], alive[(k + 1) % alive.len()]);
            (a != b && circular_distance(thetas[a], thetas[b]) < merge_rad).then_some((a, b))
        });
        let Some((a, b)) = pair else { break };
        let (za, zb) = (z[a].norm(), z[b].norm());
        let loser = if za > zb || (za == zb && a < b) { b } else { a };
        removed[loser] = true;
    }
    removed
}

pub(crate) fn prune_and_merge(
    grid: &FreqGrid,
    z: &[Complex64],
    dinv: &[f64],
    samples: &SampleSet,
    y: &[Complex64],
    cfg: &SolverConfig,
) -> Result<PruneOutcome> {
    let n = grid.len();
    let merged_away = merge_losers(grid.thetas(), z, cfg.merge_rad);
    let alive: Vec<usize> = (0..n).filter(|&i| !merged_away[i]).collect();
    let merged = n - alive.len();

    let max = alive.iter().map(|&i| z[i].norm()).fold(0.0, f64::max);
    let mut keep: Vec<usize> = alive
        .iter()
        .copied()
        .filter(|&i| z[i].norm() >= cfg.prune_rel * max)
        .collect();
    if keep.is_empty() {
        // all-zero coefficients: hold on to one atom
        keep.push(alive[0]);
    }
    if keep.len() == n {
        return Ok(PruneOutcome::unchanged(n));
    }

    let attempt = |keep: &[usize]| {
        let thetas: Vec<f64> = keep.iter().map(|&i| grid.thetas()[i]).collect();
        let w: Vec<f64> = keep.iter().map(|&i| dinv[i]).collect();
        solve(&thetas, samples, &w, y, cfg.ridge_rel, cfg.feas_tol).ok()
    };

    let mut candidates = vec![keep];
    // a removal that breaks feasibility is dropped; merges alone may still go
    if merged > 0 {
        candidates.push(alive.clone());
    }

    for keep in candidates {
        if let Some(sol) = attempt(&keep) {
            let pruned = alive.len() - keep.len();
            return Ok(PruneOutcome {
                keep,
                solution: Some(sol),
                pruned,
                merged,
            });
        }
    }
    Ok(PruneOutcome::unchanged(n))
}
