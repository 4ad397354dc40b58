//! Channel-information matrix construction and judgement-reconstruction
//! equalization.
//!
//! The CI matrix flags detected path pairs whose relative delay aliases onto
//! the symbol sampling grid; only those interfere at the sampling instants.
//! When the main path's CI row is non-zero the demodulator subtracts the
//! scaled, already-reconstructed contributions of prior symbols before
//! judging each symbol, processing symbols strictly in order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{JrcError, Result};
use crate::receiver::{DetectionReport, MatchedOutputs};
use crate::seqdesign::OrthogonalPair;

/// Binary path-interference matrix with the `r_f2` main-peak pulse width.
#[derive(Debug, Clone, PartialEq)]
pub struct CiMatrix {
    a: Vec<Vec<u8>>,
    tau: f64,
}

impl CiMatrix {
    pub fn entries(&self) -> &[Vec<u8>] {
        &self.a
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.a[i]
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Builds the CI matrix: `a[m][n] = 1` iff `m != n`, `|t_m - t_n| > T_s - tau`
/// and `mod(|t_m - t_n|, T_s)` lies in `[0, tau) U (T_s - tau, T_s]` — path
/// pairs whose relative delay is within `tau` of a positive multiple of the
/// symbol length. Diagonal entries are zero.
pub fn build_ci_matrix(report: &DetectionReport, t_s: usize, tau: f64) -> Result<CiMatrix> {
    if report.is_empty() {
        return Err(JrcError::InvalidArgument(
            "CI matrix needs at least one detected path".into(),
        ));
    }
    if !(tau > 0.0 && tau < t_s as f64 / 2.0) {
        return Err(JrcError::InvalidArgument(
            "tau must lie in (0, T_s/2)".into(),
        ));
    }
    let m = report.path_count();
    let t_s_f = t_s as f64;
    let mut a = vec![vec![0u8; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let diff = (report.peaks[i].delay - report.peaks[j].delay).unsigned_abs() as f64;
            let rem = diff.rem_euclid(t_s_f);
            let aliased = diff > t_s_f - tau && (rem < tau || rem > t_s_f - tau);
            if aliased {
                a[i][j] = 1;
                a[j][i] = 1;
            }
        }
    }
    Ok(CiMatrix { a, tau })
}

/// One grid-aliased interference path relative to the main peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interferer {
    /// Delay relative to the main path, in chips (may be negative).
    pub offset_chips: i64,
    /// Retained complex detection value `r_d(T_k)`.
    pub value: Complex64,
}

/// Demodulation route chosen from the main path's CI row.
#[derive(Debug, Clone, PartialEq)]
pub enum DemodDecision {
    /// CI row all zero: judge the raw samples directly.
    PlainJudgement,
    /// Subtract reconstructed contributions of the flagged paths.
    Reconstruct { interferers: Vec<Interferer> },
}

/// Picks the route for the max-magnitude path's row of the CI matrix.
pub fn select_demod_path(report: &DetectionReport, ci: &CiMatrix) -> DemodDecision {
    let i = report.main_index;
    let main_delay = report.peaks[i].delay;
    let interferers: Vec<Interferer> = ci
        .row(i)
        .iter()
        .enumerate()
        .filter(|&(_, &flag)| flag == 1)
        .map(|(n, _)| Interferer {
            offset_chips: report.peaks[n].delay - main_delay,
            value: report.peaks[n].value,
        })
        .collect();
    if interferers.is_empty() {
        DemodDecision::PlainJudgement
    } else {
        DemodDecision::Reconstruct { interferers }
    }
}

/// Extracts the N per-branch complex values at the symbol sampling instants
/// `t_0 + n T_s` from the matched-filter outputs.
pub fn sample_at_symbol_instants(
    mo: &MatchedOutputs,
    t_0: i64,
    n_symbols: usize,
    t_s: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut r1 = Vec::with_capacity(n_symbols);
    let mut r2 = Vec::with_capacity(n_symbols);
    for n in 0..n_symbols {
        let idx = mo.lag0_index as i64 + t_0 + (n * t_s) as i64;
        if idx < 0 || idx as usize >= mo.r1.len() {
            return Err(JrcError::InvalidArgument(format!(
                "sampling instant {n} (index {idx}) out of bounds"
            )));
        }
        r1.push(mo.r1[idx as usize]);
        r2.push(mo.r2[idx as usize]);
    }
    Ok((r1, r2))
}

/// Computes the sampled branch values directly as dot products against the
/// delayed sequences, without forming the full matched-filter outputs.
/// Identical (up to rounding) to [`crate::receiver::matched_filter_pair`]
/// followed by [`sample_at_symbol_instants`]; used by the Monte-Carlo hot
/// path.
pub fn sample_matched_at_instants(
    r: &[Complex64],
    pair: &OrthogonalPair,
    t_0: i64,
    n_symbols: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let t_s = pair.len();
    let last = t_0 + ((n_symbols - 1) * t_s) as i64;
    if t_0 < -(t_s as i64 - 1) || last > r.len() as i64 - 1 {
        return Err(JrcError::InvalidArgument(format!(
            "sampling instants [{t_0}, {last}] out of bounds for length {}",
            r.len()
        )));
    }
    let mut r1 = Vec::with_capacity(n_symbols);
    let mut r2 = Vec::with_capacity(n_symbols);
    for n in 0..n_symbols {
        let base = t_0 + (n * t_s) as i64;
        let mut acc1 = Complex64::ZERO;
        let mut acc2 = Complex64::ZERO;
        for k in 0..t_s {
            let j = base + k as i64;
            if j >= 0 && (j as usize) < r.len() {
                let v = r[j as usize];
                acc1 += v * pair.s1()[k].conj();
                acc2 += v * pair.s2()[k].conj();
            }
        }
        r1.push(acc1);
        r2.push(acc2);
    }
    Ok((r1, r2))
}

/// How the per-symbol branch comparison is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JudgementMode {
    /// Magnitude of the derotated residual (noncoherent).
    Magnitude,
    /// Real part of the derotated residual normalized by the main-path
    /// detection value (coherent).
    Coherent,
}

/// Reconstructed per-symbol branch sequences; at most one branch is non-zero
/// per symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructedSeqs {
    pub re1: Vec<Complex64>,
    pub re2: Vec<Complex64>,
}

/// Per-symbol equalizer trace entry for regression debugging.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolTrace {
    pub n: usize,
    pub res1: Complex64,
    pub res2: Complex64,
    pub bit: u8,
    pub re1: Complex64,
    pub re2: Complex64,
}

/// Plain judgement: `bit = 1` iff `|r1| > |r2|` (exact ties decide 0). The
/// phase layer does not affect the magnitudes; it is accepted to mirror the
/// sampled-model signature.
pub fn plain_judgement(r1_s: &[Complex64], r2_s: &[Complex64], _phases: &[f64]) -> Vec<u8> {
    r1_s.iter()
        .zip(r2_s)
        .map(|(a, b)| u8::from(a.norm() > b.norm()))
        .collect()
}

/// Judgement-reconstruction equalization.
///
/// Symbols are processed in order; for each symbol both branch residuals are
/// formed by subtracting the scaled, already-reconstructed contributions of
/// the symbols one interferer-offset earlier (terms that would index before
/// the frame contribute zero, which makes the first symbol the special case
/// of the recursion). The winning branch's reconstructed value is
/// `r_d(t_0) e^{j phi_n} / N`, the loser's zero. With an empty interferer set
/// this reduces to a per-symbol judgement of the raw samples.
///
/// Interferer offsets are rounded to the nearest symbol multiple; offsets
/// outside `[T_s, (N-1) T_s]` cannot overlap a prior symbol and are dropped.
pub fn equalize_reconstruct(
    r1_s: &[Complex64],
    r2_s: &[Complex64],
    report: &DetectionReport,
    interferers: &[Interferer],
    phases: &[f64],
    t_s: usize,
    mode: JudgementMode,
    mut trace: Option<&mut Vec<SymbolTrace>>,
) -> Result<(ReconstructedSeqs, Vec<u8>)> {
    let n_symbols = r1_s.len();
    if r2_s.len() != n_symbols || phases.len() != n_symbols {
        return Err(JrcError::InvalidArgument(
            "sample/phase lengths must match".into(),
        ));
    }
    let main = report
        .main_peak()
        .ok_or_else(|| JrcError::DegenerateCsi("empty detection report".into()))?;
    let main_value = main.value;
    if main_value.norm() == 0.0 {
        return Err(JrcError::DegenerateCsi("zero main-path value".into()));
    }

    // (symbol offset, r_d(T_k) / r_d(t_0)) for reconstructable interferers.
    let taps: Vec<(usize, Complex64)> = interferers
        .iter()
        .filter_map(|it| {
            let d = (it.offset_chips as f64 / t_s as f64).round() as i64;
            (d >= 1 && d <= n_symbols as i64 - 1)
                .then(|| (d as usize, it.value / main_value))
        })
        .collect();

    let mut re1 = vec![Complex64::ZERO; n_symbols];
    let mut re2 = vec![Complex64::ZERO; n_symbols];
    let mut bits = Vec::with_capacity(n_symbols);
    for n in 0..n_symbols {
        let mut res1 = r1_s[n];
        let mut res2 = r2_s[n];
        for &(d, ratio) in &taps {
            if n >= d {
                res1 -= ratio * re1[n - d];
                res2 -= ratio * re2[n - d];
            }
        }
        let derot = Complex64::from_polar(1.0, -phases[n]);
        let bit = match mode {
            JudgementMode::Magnitude => {
                u8::from((res1 * derot).norm() > (res2 * derot).norm())
            }
            JudgementMode::Coherent => {
                u8::from((res1 * derot / main_value).re > (res2 * derot / main_value).re)
            }
        };
        let recon = main_value * Complex64::from_polar(1.0, phases[n]) / n_symbols as f64;
        if bit == 1 {
            re1[n] = recon;
        } else {
            re2[n] = recon;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(SymbolTrace {
                n,
                res1,
                res2,
                bit,
                re1: re1[n],
                re2: re2[n],
            });
        }
        bits.push(bit);
    }
    Ok((ReconstructedSeqs { re1, re2 }, bits))
}

/// Writes equalizer traces as JSON lines.
pub fn write_trace_jsonl(path: &std::path::Path, trace: &[SymbolTrace]) -> Result<()> {
    let mut out = String::new();
    for t in trace {
        out.push_str(&serde_json::to_string(t).map_err(|e| JrcError::Parse(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| JrcError::io(path, e))
}
