//! Weighted minimum-norm solve for a fixed frequency grid.
//!
//! For weights `D` and dictionary `A = A(theta)` the minimizer of `z^H D z`
//! subject to `A z = y` is `z = D^{-1} A^H u` with `X u = y`,
//! `X = A D^{-1} A^H`. The reduced objective is `f(theta) = y^H X^{-1} y`.
//!
//! The solve works on `B = A D^{-1/2}` through a QR factorization of `B^H`,
//! which avoids squaring the condition number of `B` as forming `X` would.
//! Only when `B` is numerically rank deficient is `X` formed and factored
//! with a small diagonal shift, then polished against the unshifted `X` by
//! iterative refinement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dictionary::gram_from_parts;
use crate::error::{Error, Result};
use crate::model::{cis_neg, SampleSet};

/// Refinement sweeps after the shifted solve.
const REFINE_STEPS: usize = 5;

#[derive(Debug, Clone)]
pub(crate) struct WeightedSolution {
    /// `X^{-1} y`.
    pub u: DVector<Complex64>,
    /// `z_n = dinv_n p_n`.
    pub z: Vec<Complex64>,
    /// `y^H X^{-1} y`.
    pub f: f64,
    /// `||y - A z||_2`.
    pub residual: f64,
    pub y_norm: f64,
}

impl WeightedSolution {
    pub fn residual_rel(&self) -> f64 {
        if self.y_norm > 0.0 {
            self.residual / self.y_norm
        } else {
            self.residual
        }
    }
}

fn atoms(thetas: &[f64], samples: &SampleSet) -> Vec<Complex64> {
    // column-major M x N
    let mut out = Vec::with_capacity(thetas.len() * samples.m());
    for &t in thetas {
        out.extend(samples.indices().iter().map(|&m| cis_neg(t, m as f64)));
    }
    out
}

/// Solve the weighted system on grid `thetas` with inverse weights `dinv`.
///
/// With fewer atoms than samples `X` is singular and the constraint can only
/// hold when `y` lies in the span of the atoms; that case is solved as plain
/// least squares, whose solution does not depend on the weights.
pub(crate) fn solve(
    thetas: &[f64],
    samples: &SampleSet,
    dinv: &[f64],
    y: &[Complex64],
    ridge_rel: f64,
    feas_tol: f64,
) -> Result<WeightedSolution> {
    let m = samples.m();
    if y.len() != m {
        return Err(Error::InvalidInput(format!(
            "{} measurements for {} samples",
            y.len(),
            m
        )));
    }
    if dinv.len() != thetas.len() {
        return Err(Error::InvalidInput(
            "weights and grid lengths differ".into(),
        ));
    }
    let yv = DVector::from_column_slice(y);
    let y_norm = yv.norm();
    let a = atoms(thetas, samples);
    let (u, z) = if thetas.len() < m {
        least_squares(&a, m, dinv, &yv)?
    } else {
        match scaled_qr(&a, m, dinv, &yv) {
            Some(pair) => pair,
            None => min_norm(thetas, samples, &a, dinv, &yv, ridge_rel)?,
        }
    };

    let mut az = vec![Complex64::new(0.0, 0.0); m];
    for (col, zn) in a.chunks_exact(m).zip(&z) {
        for (acc, aj) in az.iter_mut().zip(col) {
            *acc += aj * zn;
        }
    }
    let residual = az
        .iter()
        .zip(y)
        .map(|(a, b)| (b - a).norm_sqr())
        .sum::<f64>()
        .sqrt();

    // z^H D z, equal to y^H X^{-1} y on the feasible set
    let f: f64 = z.iter().zip(dinv).map(|(zn, w)| zn.norm_sqr() / w).sum();

    let sol = WeightedSolution {
        u,
        z,
        f,
        residual,
        y_norm,
    };
    if !(sol.residual <= feas_tol * y_norm) {
        return Err(Error::IllConditioned {
            residual_rel: sol.residual_rel(),
            state: None,
        });
    }
    Ok(sol)
}

/// Relative size of the smallest `R` diagonal entry accepted as full rank.
const RANK_RTOL: f64 = 1e-13;

/// Minimum-norm solve via `B^H = Q R`, so `B = R^H Q^H`, `v = Q R^{-H} y`,
/// `z = D^{-1/2} v` and `u = X^{-1} y = R^{-1} R^{-H} y`.
fn scaled_qr(
    a: &[Complex64],
    m: usize,
    dinv: &[f64],
    yv: &DVector<Complex64>,
) -> Option<(DVector<Complex64>, Vec<Complex64>)> {
    let n = dinv.len();
    let s: Vec<f64> = dinv.iter().map(|w| w.sqrt()).collect();
    let bh = DMatrix::from_fn(n, m, |i, j| a[i * m + j].conj() * s[i]);
    let qr = bh.qr();
    let (q, r) = (qr.q(), qr.r());
    let rmax = (0..m).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if (0..m).any(|i| !(r[(i, i)].norm() > RANK_RTOL * rmax)) {
        return None;
    }
    let rh = r.adjoint();
    let t = rh.solve_lower_triangular(yv)?;
    let u = r.solve_upper_triangular(&t)?;
    let v = q * t;
    let z = v.iter().zip(&s).map(|(vi, si)| vi * *si).collect();
    Some((u, z))
}

fn min_norm(
    thetas: &[f64],
    samples: &SampleSet,
    a: &[Complex64],
    dinv: &[f64],
    yv: &DVector<Complex64>,
    ridge_rel: f64,
) -> Result<(DVector<Complex64>, Vec<Complex64>)> {
    let m = samples.m();
    let y_norm = yv.norm();
    let x = gram_from_parts(thetas, samples, dinv);

    let shift = ridge_rel * x[(0, 0)].re.max(f64::MIN_POSITIVE);
    let mut shifted = x.clone();
    for j in 0..m {
        shifted[(j, j)] += Complex64::new(shift, 0.0);
    }
    let chol = nalgebra::Cholesky::new(shifted).ok_or(Error::IllConditioned {
        residual_rel: f64::INFINITY,
        state: None,
    })?;
    let mut u = chol.solve(yv);
    let mut r_norm = f64::INFINITY;
    for _ in 0..REFINE_STEPS {
        let r = yv - &x * &u;
        let norm = r.norm();
        if norm <= 1e-16 * y_norm || norm >= 0.5 * r_norm {
            break;
        }
        r_norm = norm;
        u += chol.solve(&r);
    }

    let z = a
        .chunks_exact(m)
        .zip(dinv)
        .map(|(col, &w)| {
            w * col
                .iter()
                .zip(u.iter())
                .map(|(aj, uj)| aj.conj() * uj)
                .sum::<Complex64>()
        })
        .collect();
    Ok((u, z))
}

/// `z = A^+ y` by QR, with `u = Q R^{-H} D z` so that `z = D^{-1} A^H u`.
fn least_squares(
    a: &[Complex64],
    m: usize,
    dinv: &[f64],
    yv: &DVector<Complex64>,
) -> Result<(DVector<Complex64>, Vec<Complex64>)> {
    let n = dinv.len();
    let am = DMatrix::from_column_slice(m, n, a);
    let qr = am.qr();
    let (q, r) = (qr.q(), qr.r());
    let ill = || Error::IllConditioned {
        residual_rel: f64::INFINITY,
        state: None,
    };
    let rmax = (0..n).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if (0..n).any(|i| !(r[(i, i)].norm() > RANK_RTOL * rmax)) {
        return Err(ill());
    }
    let qty = q.adjoint() * yv;
    let z = r.solve_upper_triangular(&qty).ok_or_else(ill)?;
    let dz = DVector::from_iterator(n, z.iter().zip(dinv).map(|(zn, w)| zn / *w));
    let t = r.adjoint().solve_lower_triangular(&dz).ok_or_else(ill)?;
    let u = q * t;
    Ok((u, z.iter().copied().collect()))
}

/// `df/dtheta_n = -2 Re(conj(a'_n^H u) z_n)` for each requested atom.
pub(crate) fn gradient(
    thetas: &[f64],
    samples: &SampleSet,
    sol: &WeightedSolution,
    which: &[usize],
) -> Vec<f64> {
    which
        .iter()
        .map(|&n| {
            let t = thetas[n];
            // q = a'^H u = sum_j (i m_j) conj(a_j) u_j
            let q: Complex64 = samples
                .indices()
                .iter()
                .zip(sol.u.iter())
                .map(|(&m, uj)| {
                    let mf = m as f64;
                    Complex64::new(0.0, mf) * cis_neg(t, mf).conj() * uj
                })
                .sum();
            -2.0 * (q.conj() * sol.z[n]).re
        })
        .collect()
}
