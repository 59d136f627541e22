//! Trial evaluation: reconstruction quality, frequency detection, success.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{circular_distance, cis_neg, FullSignal};
use crate::TAU;

/// RSNR reported for (numerically) exact reconstructions.
pub const RSNR_CAP_DB: f64 = 300.0;
/// Relative error below which RSNR is capped.
pub const RSNR_CAP_RATIO: f64 = 1e-15;
/// Coefficient magnitude above which an atom counts as a detection.
pub const DETECTION_THRESHOLD: f64 = 1e-3;
/// Largest frequency error, in cycles, of a successful trial.
pub const SUCCESS_FREQ_TOL: f64 = 1e-3;

/// Metrics of one method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: String,
    pub seed: u64,
    pub rsnr_db: f64,
    pub detected_freqs: Vec<f64>,
    pub detected_count: usize,
    /// `(1/2pi) ||w - w_hat||_2` after matching, in cycles; infinite on a
    /// count mismatch.
    #[serde(with = "inf_as_null")]
    pub freq_error: f64,
    pub success: bool,
    pub timing_ms: f64,
}

/// JSON has no infinity; store it as `null`.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `u_hat_l = sum_n z_n exp(-i theta_n l)`, `l = 1..=len`.
pub fn reconstruct_full(thetas: &[f64], z: &[Complex64], len: usize) -> Result<FullSignal> {
    if thetas.len() != z.len() {
        return Err(Error::InvalidInput(format!(
            "{} frequencies but {} coefficients",
            thetas.len(),
            z.len()
        )));
    }
    let values = (1..=len)
        .map(|l| {
            thetas
                .iter()
                .zip(z)
                .map(|(&t, zn)| zn * cis_neg(t, l as f64))
                .sum()
        })
        .collect();
    Ok(FullSignal { values })
}

/// `20 log10(||u|| / ||u - u_hat||)`, capped at [`RSNR_CAP_DB`].
pub fn rsnr(u: &FullSignal, u_hat: &FullSignal) -> Result<f64> {
    if u.len() != u_hat.len() {
        return Err(Error::InvalidInput("signal lengths differ".into()));
    }
    let un = u.norm();
    if un == 0.0 {
        return Err(Error::InvalidInput("reference signal is all zero".into()));
    }
    let en = u
        .values
        .iter()
        .zip(&u_hat.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let ratio = en / un;
    if ratio < RSNR_CAP_RATIO {
        return Ok(RSNR_CAP_DB);
    }
    Ok((-20.0 * ratio.log10()).min(RSNR_CAP_DB))
}

/// Frequencies of atoms with `|z_n| > threshold`, ascending.
pub fn detect(z: &[Complex64], thetas: &[f64], threshold: f64) -> Vec<f64> {
    let mut out: Vec<f64> = z
        .iter()
        .zip(thetas)
        .filter(|(v, _)| v.norm() > threshold)
        .map(|(_, &t)| t)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Matching error in cycles between two equally sized frequency sets.
///
/// Both lists are sorted by their position on the circle; an optimal
/// assignment between points on a circle is a cyclic shift of the sorted
/// orders, so the minimum over all `K` shifts is taken.
pub fn matched_error(true_freqs: &[f64], detected: &[f64]) -> f64 {
    assert_eq!(true_freqs.len(), detected.len());
    if true_freqs.is_empty() {
        return 0.0;
    }
    let sort = |v: &[f64]| {
        let mut s: Vec<f64> = v.iter().map(|&t| crate::model::wrap_angle(t)).collect();
        s.sort_by(f64::total_cmp);
        s
    };
    let (a, b) = (sort(true_freqs), sort(detected));
    let k = a.len();
    (0..k)
        .map(|shift| {
            (0..k)
                .map(|i| circular_distance(a[i], b[(i + shift) % k]).powi(2))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
        / TAU
}

/// `(success, error)`; a count mismatch yields `(false, inf)`.
pub fn success(true_freqs: &[f64], detected: &[f64], k: usize) -> (bool, f64) {
    if detected.len() != k || true_freqs.len() != k {
        return (false, f64::INFINITY);
    }
    let e = matched_error(true_freqs, detected);
    (e <= SUCCESS_FREQ_TOL, e)
}
