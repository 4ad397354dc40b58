//! Orthogonal unimodular sequence design and correlation primitives.
//!
//! Discrete-time convention used throughout the crate: one sample is one
//! chip, and every correlation is a full linear cross-correlation
//!
//! ```text
//! R_ab(t) = sum_k a[k + t] * conj(b[k]),   t in [-(len(b)-1), len(a)-1]
//! ```
//!
//! stored with lag 0 at output index `len(b) - 1` (see [`lag_zero_index`]).
//! The sequence pair itself is produced by the cyclic alternating projection
//! of CAN extended to a two-sequence set: both autocorrelation sidelobes and
//! all cross-correlation lags enter the integrated sidelobe level being
//! minimized.

use std::fmt::Write as _;
use std::fs;
use std::ops::Deref;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{JrcError, Result};
use crate::fft;

/// Tolerance for the unimodularity invariant of [`OrthogonalPair`].
pub const UNIMODULAR_TOL: f64 = 1e-12;
/// Default CAN stopping tolerance on the max elementwise sequence change.
pub const DEFAULT_CAN_TOL: f64 = 1e-6;
/// Default CAN iteration cap.
pub const DEFAULT_CAN_MAX_ITERS: usize = 10_000;

/// A finite complex baseband sample vector; one sample per chip.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeq {
    samples: Vec<Complex64>,
}

impl ComplexSeq {
    /// Builds a sequence, rejecting empty or non-finite input.
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(JrcError::InvalidArgument(
                "sequence must have length >= 1".into(),
            ));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(JrcError::InvalidArgument(
                "sequence contains non-finite values".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn from_reals(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

impl Deref for ComplexSeq {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.samples
    }
}

impl AsRef<[Complex64]> for ComplexSeq {
    fn as_ref(&self) -> &[Complex64] {
        &self.samples
    }
}

/// Index of lag 0 in the output of [`cross_correlation`] for a given
/// second-argument length. Fixed artifact-wide.
pub fn lag_zero_index(b_len: usize) -> usize {
    b_len - 1
}

/// Full linear cross-correlation `R_ab(t) = sum_k a[k+t] conj(b[k])` over all
/// lags `-(len(b)-1) ..= len(a)-1`. Output length `len(a) + len(b) - 1`,
/// lag 0 at [`lag_zero_index`]`(b.len())`.
pub fn cross_correlation(a: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.is_empty() || b.is_empty() {
        return Err(JrcError::InvalidArgument(
            "cross_correlation requires non-empty inputs".into(),
        ));
    }
    Ok(fft::correlate_many(a, &[b]).pop().unwrap())
}

/// Correlation metrics of a sequence pair, normalized by the lag-0
/// autocorrelation energy where noted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    /// Signal energy `E_s = R_11(0)`.
    pub e_s: f64,
    /// Peak autocorrelation sidelobe over both sequences, normalized by E_s.
    pub psl_auto: f64,
    /// Peak cross-correlation magnitude over all lags, normalized by E_s.
    pub cross_peak: f64,
    /// Integrated sidelobe level: both autocorrelation sidelobe energies plus
    /// both cross-correlation energies over all lags (unnormalized).
    pub isl: f64,
}

/// Computes [`PairMetrics`] for two equal-length sequences.
pub fn pair_metrics(s1: &[Complex64], s2: &[Complex64]) -> Result<PairMetrics> {
    if s1.len() != s2.len() {
        return Err(JrcError::InvalidArgument(
            "pair_metrics requires equal-length sequences".into(),
        ));
    }
    let outs = fft::correlate_many(s1, &[s1, s2]);
    let r11 = &outs[0];
    let r12 = &outs[1];
    let r22 = cross_correlation(s2, s2)?;
    let lag0 = lag_zero_index(s1.len());
    let e_s = r11[lag0].re;

    let mut psl_auto = 0.0_f64;
    let mut isl = 0.0_f64;
    for (k, (a, b)) in r11.iter().zip(r22.iter()).enumerate() {
        if k == lag0 {
            continue;
        }
        psl_auto = psl_auto.max(a.norm()).max(b.norm());
        isl += a.norm_sqr() + b.norm_sqr();
    }
    let mut cross_peak = 0.0_f64;
    for c in r12 {
        cross_peak = cross_peak.max(c.norm());
        // R_21 mirrors R_12 (conjugate-flipped), so it contributes the same
        // magnitudes; count both sides of the cross term.
        isl += 2.0 * c.norm_sqr();
    }
    Ok(PairMetrics {
        e_s,
        psl_auto: psl_auto / e_s,
        cross_peak: cross_peak / e_s,
        isl,
    })
}

/// The designed pair of length-L unimodular sequences plus its correlation
/// metrics.
#[derive(Debug, Clone)]
pub struct OrthogonalPair {
    s1: ComplexSeq,
    s2: ComplexSeq,
    metrics: PairMetrics,
}

impl OrthogonalPair {
    /// Validates the pair invariants (equal length, unimodular entries within
    /// [`UNIMODULAR_TOL`]) and computes the metrics.
    pub fn new(s1: ComplexSeq, s2: ComplexSeq) -> Result<Self> {
        if s1.len() != s2.len() {
            return Err(JrcError::InvalidArgument(format!(
                "sequence lengths differ: {} vs {}",
                s1.len(),
                s2.len()
            )));
        }
        for s in s1.iter().chain(s2.iter()) {
            if (s.norm() - 1.0).abs() > UNIMODULAR_TOL {
                return Err(JrcError::InvalidArgument(format!(
                    "sequence entry {s} is not unimodular"
                )));
            }
        }
        let metrics = pair_metrics(&s1, &s2)?;
        Ok(Self { s1, s2, metrics })
    }

    pub fn s1(&self) -> &[Complex64] {
        &self.s1
    }

    pub fn s2(&self) -> &[Complex64] {
        &self.s2
    }

    /// Sequence length L in chips.
    pub fn len(&self) -> usize {
        self.s1.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signal energy `E_s` (equals L for unimodular sequences).
    pub fn e_s(&self) -> f64 {
        self.metrics.e_s
    }

    pub fn metrics(&self) -> PairMetrics {
        self.metrics
    }

    /// Elementwise sum `s1 + s2`; the time-reversed conjugate of this is the
    /// receiver's combined filter.
    pub fn combined(&self) -> Vec<Complex64> {
        self.s1
            .iter()
            .zip(self.s2.iter())
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Outcome of [`can_design`].
#[derive(Debug, Clone)]
pub struct CanResult {
    pub pair: OrthogonalPair,
    /// Number of alternating-projection iterations performed.
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
    /// ISL of the iterate after each iteration (brute-force-equivalent
    /// correlation ISL, not the frequency-domain surrogate).
    pub isl_history: Vec<f64>,
}

impl CanResult {
    pub fn final_isl(&self) -> f64 {
        *self.isl_history.last().expect("at least one iteration")
    }
}

/// Designs a pair of orthogonal unimodular sequences by the two-sequence CAN
/// cycle: zero-pad both sequences to a 2L frequency grid, project each
/// frequency-domain row vector onto the constant-norm sphere of radius
/// sqrt(2L), transform back, and project the first L time-domain entries of
/// each sequence to unit modulus. Stops when the max elementwise change
/// drops below `tol` or after `max_iters` iterations (returning the last
/// iterate with `converged = false`).
pub fn can_design(l: usize, rng_seed: u64, max_iters: usize, tol: f64) -> Result<CanResult> {
    if l < 2 {
        return Err(JrcError::InvalidArgument("CAN requires L >= 2".into()));
    }
    if max_iters < 1 {
        return Err(JrcError::InvalidArgument("max_iters must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(JrcError::InvalidArgument("tol must be > 0".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seqs: [Vec<Complex64>; 2] = [random_unimodular(l, &mut rng), random_unimodular(l, &mut rng)];

    let grid = 2 * l;
    let target = (grid as f64).sqrt(); // sqrt(M * L) with M = 2
    let mut isl_history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;

        let mut spectra: Vec<Vec<Complex64>> = seqs
            .iter()
            .map(|s| {
                let mut buf = vec![Complex64::ZERO; grid];
                buf[..l].copy_from_slice(s);
                fft::forward(&mut buf);
                buf
            })
            .collect();

        // Frequency step: scale each two-entry row to norm sqrt(2L).
        for p in 0..grid {
            let norm = (spectra[0][p].norm_sqr() + spectra[1][p].norm_sqr()).sqrt();
            if norm > 0.0 {
                let scale = target / norm;
                spectra[0][p] *= scale;
                spectra[1][p] *= scale;
            } else {
                spectra[0][p] = Complex64::new(target, 0.0);
                spectra[1][p] = Complex64::ZERO;
            }
        }

        // Time step: back to time domain, unit-modulus projection on the
        // first L entries.
        let mut delta = 0.0_f64;
        for (seq, spectrum) in seqs.iter_mut().zip(spectra.iter_mut()) {
            fft::inverse(spectrum);
            for (old, g) in seq.iter_mut().zip(spectrum.iter()) {
                let mag = g.norm();
                let new = if mag > 0.0 { g / mag } else { *old };
                delta = delta.max((new - *old).norm());
                *old = new;
            }
        }

        isl_history.push(pair_metrics(&seqs[0], &seqs[1])?.isl);
        if delta < tol {
            converged = true;
            break;
        }
    }

    let [s1, s2] = seqs;
    let pair = OrthogonalPair::new(ComplexSeq::new(s1)?, ComplexSeq::new(s2)?)?;
    Ok(CanResult {
        pair,
        iterations,
        converged,
        isl_history,
    })
}

fn random_unimodular(l: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..l)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

/// Serializes a pair to plain text: header `L=<n>`, then one `re,im` line per
/// sample of s1, a blank line, and the samples of s2. Round-trips bit-exactly.
pub fn save_pair(pair: &OrthogonalPair, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "L={}", pair.len());
    for s in pair.s1() {
        let _ = writeln!(out, "{},{}", s.re, s.im);
    }
    out.push('\n');
    for s in pair.s2() {
        let _ = writeln!(out, "{},{}", s.re, s.im);
    }
    fs::write(path, out).map_err(|e| JrcError::io(path, e))
}

/// Reads a pair saved by [`save_pair`].
pub fn load_pair(path: &Path) -> Result<OrthogonalPair> {
    let text = fs::read_to_string(path).map_err(|e| JrcError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| JrcError::Parse("empty pair file".into()))?;
    let l: usize = header
        .strip_prefix("L=")
        .ok_or_else(|| JrcError::Parse(format!("bad header line: {header}")))?
        .parse()
        .map_err(|e| JrcError::Parse(format!("bad length in header: {e}")))?;

    fn parse_seq<'a>(
        lines: &mut impl Iterator<Item = &'a str>,
        count: usize,
    ) -> Result<Vec<Complex64>> {
        let mut seq = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines
                .next()
                .ok_or_else(|| JrcError::Parse("truncated pair file".into()))?;
            let (re, im) = line
                .split_once(',')
                .ok_or_else(|| JrcError::Parse(format!("bad sample line: {line}")))?;
            seq.push(Complex64::new(
                re.trim()
                    .parse()
                    .map_err(|e| JrcError::Parse(format!("bad real part: {e}")))?,
                im.trim()
                    .parse()
                    .map_err(|e| JrcError::Parse(format!("bad imag part: {e}")))?,
            ));
        }
        Ok(seq)
    }

    let s1 = parse_seq(&mut lines, l)?;
    let blank = lines.next().unwrap_or_default();
    if !blank.trim().is_empty() {
        return Err(JrcError::Parse("expected blank separator line".into()));
    }
    let s2 = parse_seq(&mut lines, l)?;
    OrthogonalPair::new(ComplexSeq::new(s1)?, ComplexSeq::new(s2)?)
}
