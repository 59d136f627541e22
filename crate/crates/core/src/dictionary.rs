//! Parametric dictionary `A(theta)` of sampled complex exponentials.
//!
//! Column `n` is the atom `a(theta_n)` with entries `exp(-i theta_n m_j)` over
//! the sample times `m_j`. Atoms are not normalized.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cis_neg, wrap_angle, SampleSet};
use crate::TAU;

/// Learnable atom frequencies, each kept in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqGrid {
    thetas: Vec<f64>,
}

impl FreqGrid {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::InvalidInput(
                "frequency grid needs at least one atom".into(),
            ));
        }
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite grid frequency".into()));
        }
        Ok(Self {
            thetas: thetas.into_iter().map(wrap_angle).collect(),
        })
    }

    /// `n` points `2 pi k / n`, `k = 0..n`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new((0..n).map(|k| TAU * k as f64 / n as f64).collect())
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn set(&mut self, n: usize, theta: f64) {
        self.thetas[n] = wrap_angle(theta);
    }

    /// Keep the atoms whose index satisfies `keep`.
    pub(crate) fn retain_indices(&self, keep: &[usize]) -> Self {
        Self {
            thetas: keep.iter().map(|&i| self.thetas[i]).collect(),
        }
    }
}

/// Materialized dictionary for one grid and sample set.
#[derive(Debug, Clone)]
pub struct Dict {
    pub matrix: DMatrix<Complex64>,
    pub samples: SampleSet,
    pub grid: FreqGrid,
}

impl Dict {
    pub fn build(grid: &FreqGrid, samples: &SampleSet) -> Self {
        let m = samples.m();
        let matrix = DMatrix::from_fn(m, grid.len(), |j, n| {
            cis_neg(grid.thetas[n], samples.indices()[j] as f64)
        });
        Self {
            matrix,
            samples: samples.clone(),
            grid: grid.clone(),
        }
    }

    pub fn column(&self, n: usize) -> DVector<Complex64> {
        self.matrix.column(n).into_owned()
    }
}

/// `a(theta)`: entry `j` is `exp(-i theta m_j)`.
pub fn atom(theta: f64, samples: &SampleSet) -> DVector<Complex64> {
    DVector::from_iterator(
        samples.m(),
        samples.indices().iter().map(|&m| cis_neg(theta, m as f64)),
    )
}

/// `d a(theta) / d theta`: entry `j` is `-i m_j exp(-i theta m_j)`.
pub fn atom_deriv(theta: f64, samples: &SampleSet) -> DVector<Complex64> {
    DVector::from_iterator(
        samples.m(),
        samples.indices().iter().map(|&m| {
            let mf = m as f64;
            Complex64::new(0.0, -mf) * cis_neg(theta, mf)
        }),
    )
}

/// `X = A diag(dinv) A^H`.
///
/// Entry `(j, k)` depends only on the lag `m_j - m_k`, so the matrix is
/// filled from the lag sums `r(d) = sum_n dinv_n exp(-i theta_n d)`. The
/// diagonal is exactly real and the lower triangle is the exact conjugate of
/// the upper one.
pub fn weighted_gram(dict: &Dict, dinv: &[f64]) -> DMatrix<Complex64> {
    gram_from_parts(dict.grid.thetas(), &dict.samples, dinv)
}

pub(crate) fn gram_from_parts(
    thetas: &[f64],
    samples: &SampleSet,
    dinv: &[f64],
) -> DMatrix<Complex64> {
    debug_assert_eq!(thetas.len(), dinv.len());
    let lags = lag_sums(thetas, dinv, samples.span());
    let idx = samples.indices();
    let m = idx.len();
    let mut x = DMatrix::zeros(m, m);
    for j in 0..m {
        x[(j, j)] = lags[0];
        for k in 0..j {
            let r = lags[idx[j] - idx[k]];
            x[(j, k)] = r;
            x[(k, j)] = r.conj();
        }
    }
    x
}

/// `r(d)` for `d = 0..=span`.
pub(crate) fn lag_sums(thetas: &[f64], dinv: &[f64], span: usize) -> Vec<Complex64> {
    let mut lags = vec![Complex64::new(0.0, 0.0); span + 1];
    lags[0] = Complex64::new(dinv.iter().sum(), 0.0);
    for (&theta, &w) in thetas.iter().zip(dinv) {
        for (d, slot) in lags.iter_mut().enumerate().skip(1) {
            *slot += w * cis_neg(theta, d as f64);
        }
    }
    lags
}

/// `dX / d theta_n = dinv_n (a'_n a_n^H + a_n a'_n^H)`, Hermitian.
pub fn gram_deriv(dict: &Dict, dinv: &[f64], n: usize) -> DMatrix<Complex64> {
    let theta = dict.grid.thetas()[n];
    let idx = dict.samples.indices();
    let m = idx.len();
    let w = dinv[n];
    DMatrix::from_fn(m, m, |j, k| {
        // -i (m_j - m_k) exp(-i theta (m_j - m_k))
        let lag = idx[j] as f64 - idx[k] as f64;
        Complex64::new(0.0, -lag) * cis_neg(theta, lag) * w
    })
}
