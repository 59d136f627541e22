//! Ground-truth signal model: a sum of complex sinusoids observed on a random
//! subset of the time indices `1..=L`.
//!
//! Time indices are 1-based throughout the crate, so the first sample of a
//! component at frequency `w` is `exp(-i w)`.

use std::path::Path;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TAU;

/// Rejection rounds allowed when enforcing a minimum spacing.
pub const MAX_SPACING_ROUNDS: usize = 1000;

/// Wrap an angle into `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Distance between two angles measured along the unit circle, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// `exp(-i * theta * m)`.
#[inline]
pub fn cis_neg(theta: f64, m: f64) -> Complex64 {
    let (s, c) = (theta * m).sin_cos();
    Complex64::new(c, -s)
}

/// Components closer than this are treated as the same frequency.
pub const DUPLICATE_RAD: f64 = 1e-12;

/// Frequencies and complex amplitudes of a line spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpectrum {
    freqs: Vec<f64>,
    amps: Vec<Complex64>,
}

impl LineSpectrum {
    /// Frequencies are wrapped into `[0, 2pi)`; they must be pairwise distinct.
    pub fn new(freqs: Vec<f64>, amps: Vec<Complex64>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::InvalidInput(
                "spectrum needs at least one component".into(),
            ));
        }
        if freqs.len() != amps.len() {
            return Err(Error::InvalidInput(format!(
                "{} frequencies but {} amplitudes",
                freqs.len(),
                amps.len()
            )));
        }
        if freqs.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidInput("non-finite frequency".into()));
        }
        let freqs: Vec<f64> = freqs.into_iter().map(wrap_angle).collect();
        for (i, a) in freqs.iter().enumerate() {
            if freqs[i + 1..]
                .iter()
                .any(|&b| circular_distance(*a, b) <= DUPLICATE_RAD)
            {
                return Err(Error::InvalidInput(format!("duplicate frequency {a}")));
            }
        }
        Ok(Self { freqs, amps })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    /// Number of components.
    pub fn k(&self) -> usize {
        self.freqs.len()
    }

    /// Smallest pairwise circular distance, `None` for a single component.
    pub fn min_separation(&self) -> Option<f64> {
        min_pairwise_distance(&self.freqs)
    }
}

fn min_pairwise_distance(freqs: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, &a) in freqs.iter().enumerate() {
        for &b in &freqs[i + 1..] {
            let d = circular_distance(a, b);
            best = Some(best.map_or(d, |x| x.min(d)));
        }
    }
    best
}

/// A fully observed signal of length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSignal {
    pub values: Vec<Complex64>,
}

impl FullSignal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Strictly increasing 1-based sample times drawn from `1..=L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    indices: Vec<usize>,
    len: usize,
}

impl SampleSet {
    pub fn new(mut indices: Vec<usize>, len: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("sample set is empty".into()));
        }
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&m| m == 0 || m > len) {
            return Err(Error::IndexOutOfRange { index: bad, len });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(
                "sample indices must be distinct".into(),
            ));
        }
        Ok(Self { indices, len })
    }

    /// Every index `1..=len`.
    pub fn full(len: usize) -> Result<Self> {
        Self::new((1..=len).collect(), len)
    }

    /// Uniformly random subset of `m` indices out of `1..=len`.
    pub fn draw<R: Rng + ?Sized>(len: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || m > len {
            return Err(Error::InvalidInput(format!(
                "cannot draw {m} samples out of {len}"
            )));
        }
        let indices = index::sample(rng, len, m)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        Self::new(indices, len)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of samples `M`.
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Parent signal length `L`.
    pub fn parent_len(&self) -> usize {
        self.len
    }

    /// Largest index difference, `max - min`.
    pub fn span(&self) -> usize {
        self.indices[self.indices.len() - 1] - self.indices[0]
    }
}

/// Observed values `y` on a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: Vec<Complex64>,
    pub samples: SampleSet,
}

/// `u_l = sum_k a_k exp(-i w_k l)` for `l = 1..=len`.
pub fn synthesize(spectrum: &LineSpectrum, len: usize) -> FullSignal {
    let values = (1..=len)
        .map(|l| {
            spectrum
                .freqs
                .iter()
                .zip(&spectrum.amps)
                .map(|(&w, &a)| a * cis_neg(w, l as f64))
                .sum()
        })
        .collect();
    FullSignal { values }
}

fn unit_phasor<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

/// `k` uniform frequencies with unit-modulus random-phase amplitudes.
///
/// With `min_spacing`, the whole frequency set is redrawn until every pair is
/// at least that far apart on the circle.
pub fn draw_spectrum<R: Rng + ?Sized>(
    k: usize,
    min_spacing: Option<f64>,
    rng: &mut R,
) -> Result<LineSpectrum> {
    if k == 0 {
        return Err(Error::InvalidInput("K must be positive".into()));
    }
    if let Some(sp) = min_spacing {
        if !(sp >= 0.0) || k as f64 * sp >= TAU {
            return Err(Error::InvalidInput(format!(
                "spacing {sp} rad is infeasible for {k} components"
            )));
        }
    }
    let mut freqs = Vec::with_capacity(k);
    let mut accepted = false;
    for _ in 0..MAX_SPACING_ROUNDS {
        freqs.clear();
        freqs.extend((0..k).map(|_| rng.random_range(0.0..TAU)));
        let ok = match (min_spacing, min_pairwise_distance(&freqs)) {
            (Some(sp), Some(d)) => d >= sp && d > 0.0,
            (None, Some(d)) => d > 0.0,
            (_, None) => true,
        };
        if ok {
            accepted = true;
            break;
        }
    }
    if !accepted {
        return Err(Error::InfeasibleSpacing {
            k,
            min_spacing: min_spacing.unwrap_or(0.0),
            rounds: MAX_SPACING_ROUNDS,
        });
    }
    let amps = (0..k).map(|_| unit_phasor(rng)).collect();
    LineSpectrum::new(freqs, amps)
}

/// Two components separated by `mu / len` cycles: `w2 = w1 - 2pi mu / len`.
pub fn draw_spectrum_spaced<R: Rng + ?Sized>(
    mu: f64,
    len: usize,
    rng: &mut R,
) -> Result<LineSpectrum> {
    if !(mu > 0.0) || len == 0 {
        return Err(Error::InvalidInput(format!(
            "spacing coefficient must be positive (got {mu}) and L >= 1"
        )));
    }
    let w1 = rng.random_range(0.0..TAU);
    let w2 = wrap_angle(w1 - TAU * mu / len as f64);
    let amps = vec![unit_phasor(rng), unit_phasor(rng)];
    LineSpectrum::new(vec![w1, w2], amps)
}

/// `y_j = u[m_j]` with 1-based `m_j`.
pub fn subsample(u: &FullSignal, samples: &SampleSet) -> Result<Measurement> {
    let y = samples
        .indices()
        .iter()
        .map(|&m| {
            u.values
                .get(m.wrapping_sub(1))
                .copied()
                .ok_or(Error::IndexOutOfRange {
                    index: m,
                    len: u.len(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Measurement {
        y,
        samples: samples.clone(),
    })
}

/// Replayable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub freqs: Vec<f64>,
    pub amps_re: Vec<f64>,
    pub amps_im: Vec<f64>,
    pub sample_indices: Vec<usize>,
    pub seed: u64,
}

impl Instance {
    pub fn new(spectrum: &LineSpectrum, samples: &SampleSet, seed: u64) -> Self {
        Self {
            l: samples.parent_len(),
            k: spectrum.k(),
            freqs: spectrum.freqs.clone(),
            amps_re: spectrum.amps.iter().map(|a| a.re).collect(),
            amps_im: spectrum.amps.iter().map(|a| a.im).collect(),
            sample_indices: samples.indices().to_vec(),
            seed,
        }
    }

    pub fn spectrum(&self) -> Result<LineSpectrum> {
        if self.amps_re.len() != self.amps_im.len() || self.freqs.len() != self.k {
            return Err(Error::InvalidInput(
                "instance component counts disagree".into(),
            ));
        }
        let amps = self
            .amps_re
            .iter()
            .zip(&self.amps_im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        LineSpectrum::new(self.freqs.clone(), amps)
    }

    pub fn samples(&self) -> Result<SampleSet> {
        SampleSet::new(self.sample_indices.clone(), self.l)
    }

    /// Synthesize and subsample.
    pub fn realize(&self) -> Result<(LineSpectrum, FullSignal, Measurement)> {
        let spectrum = self.spectrum()?;
        let u = synthesize(&spectrum, self.l);
        let meas = subsample(&u, &self.samples()?)?;
        Ok((spectrum, u, meas))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("instance serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(a: &[Complex64], b: &[Complex64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn synthesize_zero_frequency() {
        let s = LineSpectrum::new(vec![0.0], vec![c(1.0, 0.0)]).unwrap();
        assert_close(&synthesize(&s, 4).values, &[c(1.0, 0.0); 4], 0.0);
    }

    #[test]
    fn synthesize_nyquist_alternates_from_minus_one() {
        let s = LineSpectrum::new(vec![PI], vec![c(1.0, 0.0)]).unwrap();
        let want = [c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)];
        assert_close(&synthesize(&s, 4).values, &want, 1e-15);
    }

    #[test]
    fn synthesize_two_components_matches_direct_evaluation() {
        let s = LineSpectrum::new(vec![0.3, 1.7], vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let u = synthesize(&s, 8);
        for l in 1..=8 {
            let t = l as f64;
            let direct = c((0.3 * t).cos(), -(0.3 * t).sin())
                + c(0.0, 1.0) * c((1.7 * t).cos(), -(1.7 * t).sin());
            assert!((u.values[l - 1] - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn spectrum_rejects_bad_shapes() {
        assert!(LineSpectrum::new(vec![], vec![]).is_err());
        assert!(LineSpectrum::new(vec![0.1], vec![]).is_err());
        assert!(LineSpectrum::new(vec![0.1, 0.1 + TAU], vec![c(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn draw_spectrum_unit_amplitudes_in_range() {
        let mut rng = stream(11);
        let s = draw_spectrum(3, None, &mut rng).unwrap();
        assert_eq!(s.k(), 3);
        for (&w, a) in s.freqs().iter().zip(s.amps()) {
            assert!((0.0..TAU).contains(&w));
            assert!((a.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn draw_single_component_never_rejects() {
        let mut rng = stream(3);
        for _ in 0..100 {
            assert_eq!(draw_spectrum(1, Some(6.0), &mut rng).unwrap().k(), 1);
        }
    }

    #[test]
    fn draw_spectrum_enforces_spacing() {
        let mut rng = stream(5);
        for _ in 0..200 {
            let s = draw_spectrum(2, Some(PI / 2.0), &mut rng).unwrap();
            assert!(s.min_separation().unwrap() >= PI / 2.0);
        }
    }

    #[test]
    fn draw_spectrum_rejects_infeasible_spacing() {
        let mut rng = stream(5);
        assert!(matches!(
            draw_spectrum(2, Some(PI), &mut rng),
            Err(Error::InvalidInput(_))
        ));
        // feasible on paper but practically never hit by uniform redraws
        assert!(matches!(
            draw_spectrum(6, Some(1.04), &mut rng),
            Err(Error::InfeasibleSpacing { .. })
        ));
    }

    #[test]
    fn draw_is_bit_reproducible() {
        let a = draw_spectrum(4, Some(0.3), &mut stream(99)).unwrap();
        let b = draw_spectrum(4, Some(0.3), &mut stream(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spaced_pair_has_requested_spacing() {
        let mut rng = stream(1);
        for &mu in &[2.0, 0.1] {
            let s = draw_spectrum_spaced(mu, 64, &mut rng).unwrap();
            let cycles = circular_distance(s.freqs()[0], s.freqs()[1]) / TAU;
            assert!((cycles - mu / 64.0).abs() < 1e-12, "{cycles}");
            assert!(s.amps().iter().all(|a| (a.norm() - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn spaced_pair_synthesis_is_sum_of_components() {
        let s = draw_spectrum_spaced(0.7, 64, &mut stream(8)).unwrap();
        let u = synthesize(&s, 64);
        let parts: Vec<_> = (0..2)
            .map(|k| {
                synthesize(
                    &LineSpectrum::new(vec![s.freqs()[k]], vec![s.amps()[k]]).unwrap(),
                    64,
                )
            })
            .collect();
        let sum: Vec<_> = parts[0]
            .values
            .iter()
            .zip(&parts[1].values)
            .map(|(a, b)| a + b)
            .collect();
        assert_close(&u.values, &sum, 1e-13);
    }

    #[test]
    fn subsample_full_and_single() {
        let u = FullSignal {
            values: vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
        };
        assert_eq!(
            subsample(&u, &SampleSet::full(3).unwrap()).unwrap().y,
            u.values
        );
        let s = SampleSet::new(vec![2], 3).unwrap();
        assert_eq!(subsample(&u, &s).unwrap().y, vec![c(2.0, 0.0)]);
    }

    #[test]
    fn subsample_out_of_range() {
        let u = FullSignal {
            values: vec![c(1.0, 0.0); 3],
        };
        let s = SampleSet::new(vec![1, 5], 8).unwrap();
        assert!(matches!(
            subsample(&u, &s),
            Err(Error::IndexOutOfRange { index: 5, .. })
        ));
        assert!(SampleSet::new(vec![0, 1], 4).is_err());
        assert!(SampleSet::new(vec![2, 2], 4).is_err());
    }

    #[test]
    fn random_sample_set_is_reproducible() {
        let a = SampleSet::draw(64, 20, &mut stream(42)).unwrap();
        let b = SampleSet::draw(64, 20, &mut stream(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m(), 20);
        assert!(a.indices().windows(2).all(|w| w[0] < w[1]));
        assert!(a.indices().iter().all(|&m| (1..=64).contains(&m)));
    }

    #[test]
    fn instance_json_round_trip() {
        let mut rng = stream(2);
        let spec = draw_spectrum(3, None, &mut rng).unwrap();
        let samples = SampleSet::draw(64, 20, &mut rng).unwrap();
        let inst = Instance::new(&spec, &samples, 2);
        let text = serde_json::to_string(&inst).unwrap();
        assert!(text.contains("\"L\":64") && text.contains("\"K\":3"));
        let back: Instance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.spectrum().unwrap(), spec);
    }

    #[test]
    fn circular_distance_wraps() {
        assert!((circular_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert_eq!(circular_distance(1.0, 1.0), 0.0);
        assert!((circular_distance(0.0, PI) - PI).abs() < 1e-15);
        assert!(wrap_angle(-1e-300) < TAU);
    }

    proptest! {
        #[test]
        fn synthesize_is_linear_in_amplitudes(
            freqs in proptest::collection::vec(0.0..TAU, 1..5),
            seed in any::<u64>(),
        ) {
            let mut rng = stream(seed);
            let k = freqs.len();
            let alpha: Vec<_> = (0..k).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let beta: Vec<_> = (0..k).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let sum: Vec<_> = alpha.iter().zip(&beta).map(|(a, b)| a + b).collect();
            let Ok(sa) = LineSpectrum::new(freqs.clone(), alpha) else { return Ok(()) };
            let sb = LineSpectrum::new(freqs.clone(), beta).unwrap();
            let ss = LineSpectrum::new(freqs, sum).unwrap();
            let (ua, ub, us) = (synthesize(&sa, 32), synthesize(&sb, 32), synthesize(&ss, 32));
            let scale = us.norm().max(1.0);
            for i in 0..32 {
                prop_assert!((us.values[i] - ua.values[i] - ub.values[i]).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn synthesize_is_two_pi_periodic(w in 0.0..TAU, re in -1.0..1.0f64, im in -1.0..1.0f64) {
            // the constructor wraps, so build the shifted samples directly
            let s = LineSpectrum::new(vec![w], vec![c(re, im)]).unwrap();
            let u = synthesize(&s, 64);
            for l in 1..=64 {
                let shifted = c(re, im) * cis_neg(w + TAU, l as f64);
                prop_assert!((u.values[l - 1] - shifted).norm() <= 1e-12);
            }
        }
    }
}
