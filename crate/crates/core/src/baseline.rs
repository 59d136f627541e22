//! Reference methods: the same reweighted loop on a frozen grid, and least
//! squares on the true frequencies.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dictionary::{Dict, FreqGrid};
use crate::error::{Error, Result};
use crate::metrics::reconstruct_full;
use crate::model::{FullSignal, SampleSet};
use crate::solver::{self, SolveOutcome, SolverConfig};

/// Reweighted MM with the frequencies held at the initial uniform grid.
pub fn fixed_grid_irls(
    y: &[Complex64],
    samples: &SampleSet,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    solver::run_loop(y, samples, cfg, false, &mut |_| {})
}

/// Smallest-to-largest singular value ratio treated as rank deficient.
const RANK_RTOL: f64 = 1e-10;

/// Least-squares amplitudes of the components `freqs` and the implied
/// reconstruction over `1..=samples.parent_len()`.
pub fn oracle_ls(
    y: &[Complex64],
    samples: &SampleSet,
    freqs: &[f64],
) -> Result<(Vec<Complex64>, FullSignal)> {
    let k = freqs.len();
    if k == 0 || k > samples.m() {
        return Err(Error::InvalidInput(format!(
            "oracle needs 1..={} frequencies, got {k}",
            samples.m()
        )));
    }
    if y.len() != samples.m() {
        return Err(Error::InvalidInput("measurement length mismatch".into()));
    }
    let a: DMatrix<Complex64> = Dict::build(&FreqGrid::new(freqs.to_vec())?, samples).matrix;
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_RTOL * smax) {
        return Err(Error::RankDeficient(format!(
            "singular values span [{smin:e}, {smax:e}]"
        )));
    }
    let amps = svd
        .solve(&DVector::from_column_slice(y), 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let amps: Vec<Complex64> = amps.iter().copied().collect();
    let u_hat = reconstruct_full(freqs, &amps, samples.parent_len())?;
    Ok((amps, u_hat))
}
