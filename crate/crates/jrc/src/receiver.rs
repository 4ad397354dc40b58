//! Receiver chain: internal matched filtering, information-independent radar
//! processing, CFAR thresholding and joint detection with CSI extraction.
//!
//! All filter outputs share the lag convention of
//! [`crate::seqdesign::cross_correlation`]: for a length-L reference the
//! sample at `lag0_index = L - 1` corresponds to zero delay, and reported
//! peak delays are relative to that index.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{JrcError, Result};
use crate::seqdesign::{cross_correlation, lag_zero_index, OrthogonalPair};
use crate::fft;

/// The two internal matched-filter branches, on a shared lag grid.
#[derive(Debug, Clone)]
pub struct MatchedOutputs {
    pub r1: Vec<Complex64>,
    pub r2: Vec<Complex64>,
    /// Index corresponding to zero delay in both branches.
    pub lag0_index: usize,
}

/// Output of the radar processing chain.
#[derive(Debug, Clone)]
pub struct RadarOutput {
    pub rf2: Vec<Complex64>,
    /// Sample index corresponding to zero delay.
    pub lag0_index: usize,
}

/// Correlates the received signal against both sequences of the pair.
pub fn matched_filter_pair(r: &[Complex64], pair: &OrthogonalPair) -> Result<MatchedOutputs> {
    if r.is_empty() {
        return Err(JrcError::InvalidArgument(
            "received signal must be non-empty".into(),
        ));
    }
    let mut outs = fft::correlate_many(r, &[pair.s1(), pair.s2()]);
    let r2 = outs.pop().unwrap();
    let r1 = outs.pop().unwrap();
    Ok(MatchedOutputs {
        r1,
        r2,
        lag0_index: lag_zero_index(pair.len()),
    })
}

/// Radar processing: correlate with the combined filter `s1 + s2`, then
/// coherently sum the N copies advanced by `n T_s` and derotated by
/// `e^{-j phi_n}`. Uses no knowledge of the embedded bits.
pub fn radar_process(
    r: &[Complex64],
    pair: &OrthogonalPair,
    phases: &[f64],
) -> Result<RadarOutput> {
    if r.is_empty() {
        return Err(JrcError::InvalidArgument(
            "received signal must be non-empty".into(),
        ));
    }
    if phases.is_empty() {
        return Err(JrcError::InvalidArgument(
            "phase sequence must be non-empty".into(),
        ));
    }
    let combined = pair.combined();
    let mf = cross_correlation(r, &combined)?;
    let t_s = pair.len();
    let rot: Vec<Complex64> = phases
        .iter()
        .map(|&p| Complex64::from_polar(1.0, -p))
        .collect();
    let mut rf2 = vec![Complex64::ZERO; mf.len()];
    for (t, out) in rf2.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for (n, &w) in rot.iter().enumerate() {
            if let Some(v) = mf.get(t + n * t_s) {
                acc += v * w;
            } else {
                break;
            }
        }
        *out = acc;
    }
    Ok(RadarOutput {
        rf2,
        lag0_index: lag_zero_index(pair.len()),
    })
}

/// Matched filter against an arbitrary known reference (e.g. the exact
/// transmitted frame), packaged on the shared lag grid so it can feed
/// [`joint_detect`] directly.
pub fn cross_correlation_output(r: &[Complex64], reference: &[Complex64]) -> Result<RadarOutput> {
    let rf2 = cross_correlation(r, reference)?;
    Ok(RadarOutput {
        rf2,
        lag0_index: lag_zero_index(reference.len()),
    })
}

/// The radar output an ideal orthogonal pair would produce: impulses of the
/// composite phase autocorrelation scaled by `e_s`, centered at `delay`.
/// Contains no dependence on the embedded bits by construction.
pub fn ideal_radar_response(
    phases: &[f64],
    e_s: f64,
    t_s: usize,
    delay: usize,
    out_len: usize,
    lag0_index: usize,
) -> Result<RadarOutput> {
    let r2 = composite_autocorr(phases)?;
    let n = phases.len();
    let mut rf2 = vec![Complex64::ZERO; out_len];
    for (k, v) in r2.iter().enumerate() {
        let lag = k as i64 - (n as i64 - 1);
        let idx = lag0_index as i64 + delay as i64 + lag * t_s as i64;
        if idx >= 0 && (idx as usize) < out_len {
            rf2[idx as usize] += e_s * v;
        }
    }
    Ok(RadarOutput { rf2, lag0_index })
}

/// Autocorrelation of the external phase layer on the `k T_s` lag grid:
/// `R_2(k) = sum_{n-m=k} e^{j(phi_n - phi_m)}`, returned for
/// `k in [-(N-1), N-1]` with lag 0 at index `N - 1`.
pub fn composite_autocorr(phases: &[f64]) -> Result<Vec<Complex64>> {
    if phases.is_empty() {
        return Err(JrcError::InvalidArgument(
            "phase sequence must be non-empty".into(),
        ));
    }
    let chips: Vec<Complex64> = phases
        .iter()
        .map(|&p| Complex64::from_polar(1.0, p))
        .collect();
    cross_correlation(&chips, &chips)
}

/// CFAR operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum CfarMode {
    /// Cell averaging over a split reference window of squared magnitudes.
    CellAveraging,
    /// Known noise power; scalar envelope threshold.
    KnownNoise,
}

/// CFAR detector configuration.
#[derive(Debug, Clone, Copy)]
pub struct CfarConfig {
    pub mode: CfarMode,
    /// Total reference cell count (split evenly across both sides).
    pub m_ref: usize,
    /// Guard cells per side.
    pub guard: usize,
    pub p_fa: f64,
    /// Noise power at the detector input stage; known-noise mode only.
    pub sigma2: Option<f64>,
}

impl CfarConfig {
    pub fn cell_averaging(m_ref: usize, guard: usize, p_fa: f64) -> Result<Self> {
        let cfg = Self {
            mode: CfarMode::CellAveraging,
            m_ref,
            guard,
            p_fa,
            sigma2: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn known_noise(sigma2: f64, p_fa: f64) -> Result<Self> {
        let cfg = Self {
            mode: CfarMode::KnownNoise,
            m_ref: 0,
            guard: 0,
            p_fa,
            sigma2: Some(sigma2),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(JrcError::InvalidArgument(
                "P_FA must lie in (0, 1)".into(),
            ));
        }
        if self.mode == CfarMode::CellAveraging && (self.m_ref < 2 || self.m_ref % 2 != 0) {
            return Err(JrcError::InvalidArgument(
                "cell-averaging CFAR needs an even M_ref >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Per-cell cell-averaging CFAR thresholds on squared-magnitude cells.
///
/// Each cell uses up to `m_ref / 2` reference cells per side beyond `guard`
/// guard cells; edge cells fall back to the one-sided window. The scale
/// factor follows `alpha = M (P_FA^{-1/M} - 1)` with M the reference cells
/// actually used, so the false-alarm calibration holds at the edges too.
pub fn cfar_threshold_ca(cells: &[f64], cfg: &CfarConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.mode != CfarMode::CellAveraging {
        return Err(JrcError::InvalidArgument(
            "cfar_threshold_ca requires cell-averaging mode".into(),
        ));
    }
    if cells.len() <= cfg.m_ref + 2 * cfg.guard {
        return Err(JrcError::InvalidArgument(format!(
            "need more than {} cells, got {}",
            cfg.m_ref + 2 * cfg.guard,
            cells.len()
        )));
    }
    let half = cfg.m_ref / 2;
    let guard = cfg.guard;
    let mut prefix = Vec::with_capacity(cells.len() + 1);
    prefix.push(0.0);
    for &c in cells {
        prefix.push(prefix.last().unwrap() + c);
    }
    let window_sum = |lo: usize, hi: usize| prefix[hi] - prefix[lo]; // [lo, hi)

    let mut out = Vec::with_capacity(cells.len());
    for i in 0..cells.len() {
        let left_hi = i.saturating_sub(guard);
        let left_lo = left_hi.saturating_sub(half);
        let right_lo = (i + guard + 1).min(cells.len());
        let right_hi = (right_lo + half).min(cells.len());
        let m = (left_hi - left_lo) + (right_hi - right_lo);
        let sum = window_sum(left_lo, left_hi) + window_sum(right_lo, right_hi);
        let factor = cfg.p_fa.powf(-1.0 / m as f64) - 1.0;
        out.push(factor * sum);
    }
    Ok(out)
}

/// Known-noise envelope threshold `T = sqrt(-sigma2 ln P_FA)`.
pub fn cfar_threshold_known(cfg: &CfarConfig) -> Result<f64> {
    cfg.validate()?;
    let sigma2 = cfg.sigma2.ok_or_else(|| {
        JrcError::InvalidArgument("known-noise CFAR requires sigma2".into())
    })?;
    if !(sigma2 > 0.0) {
        return Err(JrcError::InvalidArgument("sigma2 must be > 0".into()));
    }
    Ok((-sigma2 * cfg.p_fa.ln()).sqrt())
}

/// Noise power per complex sample at the radar-output stage for an input
/// noise power `sigma2_in`: the combined filter contributes its energy and
/// the phase-layer sum adds the N uncorrelated copies.
pub fn rf2_noise_power(pair: &OrthogonalPair, n_symbols: usize, sigma2_in: f64) -> f64 {
    let h_energy: f64 = pair.combined().iter().map(|x| x.norm_sqr()).sum();
    sigma2_in * h_energy * n_symbols as f64
}

/// One detected path: delay relative to the zero-delay reference and the
/// retained complex value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub delay: i64,
    pub value: Complex64,
}

/// CSI extracted by joint detection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    /// Detected peaks sorted by delay; delays are unique.
    pub peaks: Vec<Peak>,
    /// Index of the max-magnitude peak (ties: smallest delay).
    /// Meaningless when `peaks` is empty.
    pub main_index: usize,
}

impl DetectionReport {
    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Detected path count M.
    pub fn path_count(&self) -> usize {
        self.peaks.len()
    }

    pub fn main_peak(&self) -> Option<&Peak> {
        self.peaks.get(self.main_index)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// CFAR thresholding plus the discrete local-maximum condition
/// `|r[t-1]| < |r[t]| >= |r[t+1]|`. An empty report is a valid missed
/// detection, not an error.
pub fn joint_detect(out: &RadarOutput, cfg: &CfarConfig) -> Result<DetectionReport> {
    let mag: Vec<f64> = out.rf2.iter().map(|x| x.norm()).collect();
    let exceeds: Vec<bool> = match cfg.mode {
        CfarMode::CellAveraging => {
            let cells: Vec<f64> = mag.iter().map(|m| m * m).collect();
            let thr = cfar_threshold_ca(&cells, cfg)?;
            cells.iter().zip(thr).map(|(&c, t)| c > t).collect()
        }
        CfarMode::KnownNoise => {
            let t = cfar_threshold_known(cfg)?;
            mag.iter().map(|&m| m > t).collect()
        }
    };

    let mut peaks = Vec::new();
    for (i, &hit) in exceeds.iter().enumerate() {
        if !hit {
            continue;
        }
        let left = if i == 0 { 0.0 } else { mag[i - 1] };
        let right = if i + 1 == mag.len() { 0.0 } else { mag[i + 1] };
        if left < mag[i] && mag[i] >= right {
            peaks.push(Peak {
                delay: i as i64 - out.lag0_index as i64,
                value: out.rf2[i],
            });
        }
    }
    let mut main_index = 0;
    for (i, p) in peaks.iter().enumerate() {
        if p.value.norm() > peaks[main_index].value.norm() {
            main_index = i;
        }
    }
    Ok(DetectionReport { peaks, main_index })
}
