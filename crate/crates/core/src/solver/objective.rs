//! Log-sum penalty, its quadratic majorizer, and the reweighting step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `sum_i log(|z_i|^2 + eps)`.
pub fn logsum_objective(z: &[Complex64], epsilon: f64) -> f64 {
    z.iter().map(|v| (v.norm_sqr() + epsilon).ln()).sum()
}

/// Quadratic upper bound of the log-sum penalty anchored at `z_ref`:
/// `sum_i (|z_i|^2 + eps) / (|r_i|^2 + eps) + log(|r_i|^2 + eps) - 1`.
pub fn surrogate_q(z: &[Complex64], z_ref: &[Complex64], epsilon: f64) -> f64 {
    assert_eq!(z.len(), z_ref.len(), "surrogate_q: length mismatch");
    z.iter()
        .zip(z_ref)
        .map(|(v, r)| {
            let denom = r.norm_sqr() + epsilon;
            (v.norm_sqr() + epsilon) / denom + denom.ln() - 1.0
        })
        .sum()
}

/// Diagonal reweighting `d_n = 1 / (|z_n|^2 + eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub d: Vec<f64>,
    pub epsilon: f64,
}

impl Weights {
    /// Unit weights, `D = I`.
    pub fn identity(n: usize) -> Self {
        Self {
            d: vec![1.0; n],
            epsilon: 1.0,
        }
    }

    /// `D^{-1}` diagonal, i.e. `|z_n|^2 + eps` for reweighted weights.
    pub fn inverse(&self) -> Vec<f64> {
        self.d.iter().map(|d| 1.0 / d).collect()
    }

    /// `z^H D z`.
    pub fn weighted_norm(&self, z: &[Complex64]) -> f64 {
        self.d.iter().zip(z).map(|(d, v)| d * v.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

pub fn make_weights(z_hat: &[Complex64], epsilon: f64) -> Weights {
    assert!(epsilon > 0.0, "make_weights: epsilon must be positive");
    Weights {
        d: z_hat
            .iter()
            .map(|v| 1.0 / (v.norm_sqr() + epsilon))
            .collect(),
        epsilon,
    }
}
