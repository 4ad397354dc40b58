//! Seeded Monte-Carlo experiment harness: SER and detection-probability
//! studies, the information-invariance study, CSV/SVG emission.
//!
//! Every trial draws its randomness from a ChaCha stream derived solely from
//! `(master_seed, experiment, point, trial)`, so results are byte-identical
//! across runs and worker schedules.
//!
//! SNR axis conventions (the two studies use the paper's respective axes):
//! * detection study: `d = 2E/N_0`, mapped to per-sample noise power via
//!   `sigma2 = 2E/d`;
//! * SER study: per-bit ratio `r_b` with `sigma2 = E_s / r_b`, which places
//!   the single-path coherent judgement exactly on the coherent-2FSK
//!   reference `Q(sqrt(r_b))`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{apply_channel, sample_channel, snr_to_sigma2, ChannelRealization, NoiseSpec};
use crate::equalizer::{
    build_ci_matrix, equalize_reconstruct, sample_matched_at_instants, select_demod_path,
    DemodDecision, JudgementMode,
};
use crate::error::{JrcError, Result};
use crate::framing::{assemble_frame, barker13_phases, random_bits, FrameSpec};
use crate::receiver::{
    cross_correlation_output, ideal_radar_response, joint_detect, radar_process, rf2_noise_power,
    CfarConfig, CfarMode, DetectionReport, Peak, RadarOutput,
};
use crate::seqdesign::{can_design, OrthogonalPair};

/// External phase layer selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhaseSeq {
    Barker13,
    Custom(Vec<f64>),
}

/// Where the equalizer's CSI comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    /// Ground-truth taps are handed to the equalizer.
    Ideal,
    /// CSI is extracted by the joint detection chain.
    Detected,
}

/// Full experiment configuration; serializable as the CLI's JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Sequence length L in chips.
    pub l: usize,
    /// Symbols per frame N.
    pub n_symbols: usize,
    pub phase_seq: PhaseSeq,
    pub path_counts: Vec<usize>,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub p_fa: f64,
    pub cfar_mode: CfarMode,
    pub cfar_m_ref: usize,
    pub cfar_guard: usize,
    pub master_seed: u64,
    pub csi_mode: CsiMode,
    pub judgement: JudgementMode,
    /// Pulse width of the radar main peak, in chips, for the CI matrix.
    pub tau: f64,
    pub can_max_iters: usize,
    pub can_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            l: 200,
            n_symbols: 13,
            phase_seq: PhaseSeq::Barker13,
            path_counts: vec![1, 5, 10],
            snr_grid_db: vec![6.0, 7.0, 8.0, 9.0, 10.0, 11.0],
            trials: 10_000,
            p_fa: 1e-3,
            cfar_mode: CfarMode::CellAveraging,
            cfar_m_ref: 32,
            cfar_guard: 2,
            master_seed: 1,
            csi_mode: CsiMode::Detected,
            judgement: JudgementMode::Coherent,
            tau: 1.0,
            can_max_iters: crate::seqdesign::DEFAULT_CAN_MAX_ITERS,
            can_tol: crate::seqdesign::DEFAULT_CAN_TOL,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(JrcError::InvalidArgument("trials must be >= 1".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(JrcError::InvalidArgument(
                "SNR grid must be strictly increasing".into(),
            ));
        }
        if self.snr_grid_db.is_empty() {
            return Err(JrcError::InvalidArgument("SNR grid is empty".into()));
        }
        if self.path_counts.iter().any(|&p| p == 0) || self.path_counts.is_empty() {
            return Err(JrcError::InvalidArgument(
                "path counts must be positive".into(),
            ));
        }
        if !(self.tau > 0.0 && self.tau < self.l as f64 / 2.0) {
            return Err(JrcError::InvalidArgument(
                "tau must lie in (0, T_s/2)".into(),
            ));
        }
        if let PhaseSeq::Custom(p) = &self.phase_seq {
            if p.len() != self.n_symbols {
                return Err(JrcError::InvalidArgument(
                    "custom phase sequence length must equal n_symbols".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn phases(&self) -> Vec<f64> {
        match &self.phase_seq {
            PhaseSeq::Barker13 => barker13_phases(),
            PhaseSeq::Custom(p) => p.clone(),
        }
    }

    /// Stable hash of the config plus the crate version, stamped into every
    /// curve and manifest.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).expect("config serializes"));
        hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(16);
        for b in &digest[..8] {
            let _ = write!(out, "{b:02x}");
        }
        out
    }

    /// Designs the sequence pair and resolves the phase layer.
    pub fn build_context(&self) -> Result<ExperimentContext> {
        self.validate()?;
        let phases = self.phases();
        if phases.len() != self.n_symbols {
            return Err(JrcError::InvalidArgument(format!(
                "phase sequence length {} != n_symbols {}",
                phases.len(),
                self.n_symbols
            )));
        }
        let design = can_design(self.l, self.master_seed, self.can_max_iters, self.can_tol)?;
        Ok(ExperimentContext {
            e_s: design.pair.e_s(),
            pair: design.pair,
            phases,
            n_symbols: self.n_symbols,
            t_s: self.l,
        })
    }
}

/// Designed pair and frame parameters shared by all trials of a run.
#[derive(Debug, Clone)]
pub struct ExperimentContext {
    pub pair: OrthogonalPair,
    pub phases: Vec<f64>,
    pub e_s: f64,
    pub n_symbols: usize,
    pub t_s: usize,
}

/// One estimated point of a result curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x_db: f64,
    pub y: f64,
    pub trials: u64,
    /// Raw error/detection count behind `y`.
    pub count: u64,
    /// Trials lost to missed detection (SER study only; folded into `count`).
    pub misses: u64,
}

/// A labelled result curve with its config fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveResult {
    pub label: String,
    pub points: Vec<CurvePoint>,
    pub fingerprint: String,
}

fn trial_rng(master_seed: u64, experiment: u8, group: u16, point: u16, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let stream = ((experiment as u64) << 56)
        | ((group as u64) << 48)
        | ((point as u64) << 32)
        | (trial & 0xffff_ffff);
    rng.set_stream(stream);
    rng
}

const EXP_SER: u8 = 1;
const EXP_PD: u8 = 2;
const EXP_INV: u8 = 3;

fn detection_cfg(cfg: &SimConfig, ctx: &ExperimentContext, sigma2: f64) -> Result<CfarConfig> {
    match cfg.cfar_mode {
        CfarMode::CellAveraging => {
            CfarConfig::cell_averaging(cfg.cfar_m_ref, cfg.cfar_guard, cfg.p_fa)
        }
        CfarMode::KnownNoise => CfarConfig::known_noise(
            rf2_noise_power(&ctx.pair, ctx.n_symbols, sigma2),
            cfg.p_fa,
        ),
    }
}

/// Ground-truth CSI in detection-report form: taps merged by delay, values
/// scaled to the radar-peak amplitude `gain * N * E_s`.
fn ideal_report(ch: &ChannelRealization, ctx: &ExperimentContext) -> DetectionReport {
    let mut merged: BTreeMap<usize, Complex64> = BTreeMap::new();
    for tap in ch.taps() {
        *merged.entry(tap.delay).or_insert(Complex64::ZERO) += tap.gain;
    }
    let scale = ctx.n_symbols as f64 * ctx.e_s;
    let peaks: Vec<Peak> = merged
        .into_iter()
        .map(|(delay, gain)| Peak {
            delay: delay as i64,
            value: gain * scale,
        })
        .collect();
    let mut main_index = 0;
    for (i, p) in peaks.iter().enumerate() {
        if p.value.norm() > peaks[main_index].value.norm() {
            main_index = i;
        }
    }
    DetectionReport { peaks, main_index }
}

/// Outcome of one SER trial.
struct SerOutcome {
    errors: u64,
    missed: bool,
}

fn ser_trial(
    cfg: &SimConfig,
    ctx: &ExperimentContext,
    sigma2: f64,
    n_paths: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SerOutcome> {
    let n = ctx.n_symbols;
    let bits = random_bits(n, rng);
    let spec = FrameSpec::new(bits.clone(), ctx.phases.clone(), ctx.t_s)?;
    let frame = assemble_frame(&ctx.pair, &spec)?;
    let ch = sample_channel(n_paths, ctx.t_s, rng)?;
    let noise = NoiseSpec::from_sigma2(sigma2)?;
    let r = apply_channel(&frame, &ch, &noise, rng)?;

    let report = match cfg.csi_mode {
        CsiMode::Detected => {
            let out = radar_process(&r, &ctx.pair, &ctx.phases)?;
            joint_detect(&out, &detection_cfg(cfg, ctx, sigma2)?)?
        }
        CsiMode::Ideal => ideal_report(&ch, ctx),
    };
    let Some(main) = report.main_peak() else {
        return Ok(SerOutcome {
            errors: n as u64,
            missed: true,
        });
    };
    let t_0 = main.delay;
    let Ok((r1_s, r2_s)) = sample_matched_at_instants(&r, &ctx.pair, t_0, n) else {
        // A false alarm placed the main peak where no full frame fits.
        return Ok(SerOutcome {
            errors: n as u64,
            missed: true,
        });
    };
    let ci = build_ci_matrix(&report, ctx.t_s, cfg.tau)?;
    let decision = select_demod_path(&report, &ci);
    let interferers = match &decision {
        DemodDecision::PlainJudgement => &[][..],
        DemodDecision::Reconstruct { interferers } => interferers,
    };
    let (_, bits_hat) = equalize_reconstruct(
        &r1_s,
        &r2_s,
        &report,
        interferers,
        &ctx.phases,
        ctx.t_s,
        cfg.judgement,
        None,
    )?;
    let errors = bits
        .iter()
        .zip(&bits_hat)
        .filter(|(a, b)| a != b)
        .count() as u64;
    Ok(SerOutcome {
        errors,
        missed: false,
    })
}

/// Runs the SER study: one curve per configured path count, `trials` frames
/// per SNR grid point. The x axis is the per-bit ratio `r_b` in dB. Missed
/// detections count all N symbols as errors and are tallied separately.
pub fn run_ser_experiment(cfg: &SimConfig) -> Result<Vec<CurveResult>> {
    let ctx = cfg.build_context()?;
    run_ser_with_context(cfg, &ctx)
}

/// Same as [`run_ser_experiment`] with a pre-built context (the acceptance
/// suite reuses one design across studies).
pub fn run_ser_with_context(cfg: &SimConfig, ctx: &ExperimentContext) -> Result<Vec<CurveResult>> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint();
    let mut curves = Vec::new();
    for (gi, &n_paths) in cfg.path_counts.iter().enumerate() {
        let mut points = Vec::new();
        for (pi, &x_db) in cfg.snr_grid_db.iter().enumerate() {
            let rb = 10f64.powf(x_db / 10.0);
            let sigma2 = ctx.e_s / rb;
            let (errors, misses) = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng =
                        trial_rng(cfg.master_seed, EXP_SER, gi as u16, pi as u16, trial);
                    let out = ser_trial(cfg, ctx, sigma2, n_paths, &mut rng)
                        .expect("trial parameters validated up front");
                    (out.errors, u64::from(out.missed))
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            let symbols = cfg.trials * ctx.n_symbols as u64;
            points.push(CurvePoint {
                x_db,
                y: errors as f64 / symbols as f64,
                trials: cfg.trials,
                count: errors,
                misses,
            });
        }
        curves.push(CurveResult {
            label: format!("ser_paths{n_paths}"),
            points,
            fingerprint: fingerprint.clone(),
        });
    }
    Ok(curves)
}

fn pd_trial(
    cfg: &SimConfig,
    ctx: &ExperimentContext,
    d: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(bool, bool)> {
    let bits = random_bits(ctx.n_symbols, rng);
    let spec = FrameSpec::new(bits, ctx.phases.clone(), ctx.t_s)?;
    let frame = assemble_frame(&ctx.pair, &spec)?;
    let noise = snr_to_sigma2(d, frame.energy())?;
    let ch = sample_channel(1, ctx.t_s, rng)?;
    let r = apply_channel(&frame, &ch, &noise, rng)?;
    let t_0 = ch.main_delay() as i64;

    let scored = |report: &DetectionReport| {
        report
            .peaks
            .iter()
            .any(|p| (p.delay - t_0).unsigned_abs() <= 1)
    };

    // Proposed chain: information-independent radar processing.
    let out = radar_process(&r, &ctx.pair, &ctx.phases)?;
    let cfg_prop = detection_cfg(cfg, ctx, noise.sigma2)?;
    let proposed = scored(&joint_detect(&out, &cfg_prop)?);

    // Baseline: matched filter against the exact transmitted frame (requires
    // knowledge of the bits), same CFAR and scoring.
    let mf = cross_correlation_output(&r, frame.samples())?;
    let cfg_base = match cfg.cfar_mode {
        CfarMode::CellAveraging => cfg_prop,
        CfarMode::KnownNoise => CfarConfig::known_noise(noise.sigma2 * frame.energy(), cfg.p_fa)?,
    };
    let baseline = scored(&joint_detect(&mf, &cfg_base)?);
    Ok((proposed, baseline))
}

/// Runs the detection-probability study on the `d = 2E/N_0` axis:
/// single-path channels, random bits, identical CFAR and scoring for the
/// proposed chain and the known-waveform matched-filter baseline.
pub fn run_pd_experiment(cfg: &SimConfig) -> Result<(CurveResult, CurveResult)> {
    let ctx = cfg.build_context()?;
    run_pd_with_context(cfg, &ctx)
}

pub fn run_pd_with_context(
    cfg: &SimConfig,
    ctx: &ExperimentContext,
) -> Result<(CurveResult, CurveResult)> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint();
    let mut prop_points = Vec::new();
    let mut base_points = Vec::new();
    for (pi, &x_db) in cfg.snr_grid_db.iter().enumerate() {
        let d = 10f64.powf(x_db / 10.0);
        let (prop, base) = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(cfg.master_seed, EXP_PD, 0, pi as u16, trial);
                let (p, b) = pd_trial(cfg, ctx, d, &mut rng)
                    .expect("trial parameters validated up front");
                (u64::from(p), u64::from(b))
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        prop_points.push(CurvePoint {
            x_db,
            y: prop as f64 / cfg.trials as f64,
            trials: cfg.trials,
            count: prop,
            misses: 0,
        });
        base_points.push(CurvePoint {
            x_db,
            y: base as f64 / cfg.trials as f64,
            trials: cfg.trials,
            count: base,
            misses: 0,
        });
    }
    Ok((
        CurveResult {
            label: "pd_proposed".into(),
            points: prop_points,
            fingerprint: fingerprint.clone(),
        },
        CurveResult {
            label: "pd_matched_filter".into(),
            points: base_points,
            fingerprint,
        },
    ))
}

/// Which pair drives the invariance study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// The CAN-designed pair (real correlations, small residual coupling).
    Designed,
    /// Synthetic ideal correlations: the radar output is built from the
    /// phase-layer autocorrelation alone and carries no bit dependence.
    Ideal,
}

/// Summary of pointwise radar-output differences across random bit vectors.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub num_bitvectors: usize,
    /// Peak sidelobe magnitude of the first output (mainlobe +-1 chip
    /// excluded).
    pub psl: f64,
    pub max_diff: f64,
    pub median_diff: f64,
    /// Fraction of all pairwise pointwise differences below `psl`.
    pub frac_below_psl: f64,
}

/// Noise-free single-path runs over random bit vectors; reports pointwise
/// `|r_f2|` difference statistics against the output's PSL.
pub fn run_invariance_study(
    cfg: &SimConfig,
    num_bitvectors: usize,
    kind: PairKind,
) -> Result<InvarianceReport> {
    if num_bitvectors < 2 {
        return Err(JrcError::InvalidArgument(
            "need at least two bit vectors".into(),
        ));
    }
    let ctx = cfg.build_context()?;
    run_invariance_with_context(cfg, &ctx, num_bitvectors, kind)
}

pub fn run_invariance_with_context(
    cfg: &SimConfig,
    ctx: &ExperimentContext,
    num_bitvectors: usize,
    kind: PairKind,
) -> Result<InvarianceReport> {
    let outputs: Vec<Vec<f64>> = (0..num_bitvectors)
        .map(|i| -> Result<Vec<f64>> {
            let mut rng = trial_rng(cfg.master_seed, EXP_INV, 0, 0, i as u64);
            let bits = random_bits(ctx.n_symbols, &mut rng);
            let out: RadarOutput = match kind {
                PairKind::Designed => {
                    let spec = FrameSpec::new(bits, ctx.phases.clone(), ctx.t_s)?;
                    let frame = assemble_frame(&ctx.pair, &spec)?;
                    radar_process(frame.samples(), &ctx.pair, &ctx.phases)?
                }
                PairKind::Ideal => ideal_radar_response(
                    &ctx.phases,
                    ctx.e_s,
                    ctx.t_s,
                    0,
                    ctx.n_symbols * ctx.t_s + ctx.t_s - 1,
                    ctx.t_s - 1,
                )?,
            };
            Ok(out.rf2.iter().map(|x| x.norm()).collect())
        })
        .collect::<Result<_>>()?;

    let first = &outputs[0];
    let peak_idx = first
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let psl = first
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as i64 - peak_idx as i64).abs() > 1)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);

    let mut diffs = Vec::new();
    for i in 0..outputs.len() {
        for j in (i + 1)..outputs.len() {
            for (a, b) in outputs[i].iter().zip(&outputs[j]) {
                diffs.push((a - b).abs());
            }
        }
    }
    let max_diff = diffs.iter().copied().fold(0.0, f64::max);
    let below = diffs.iter().filter(|&&d| d < psl).count();
    let frac_below_psl = below as f64 / diffs.len() as f64;
    let mid = diffs.len() / 2;
    let (_, median, _) = diffs.select_nth_unstable_by(mid, f64::total_cmp);
    Ok(InvarianceReport {
        num_bitvectors,
        psl,
        max_diff,
        median_diff: *median,
        frac_below_psl,
    })
}

/// Coherent orthogonal-2FSK symbol error rate `Q(sqrt(r_b))`.
pub fn fsk2_coherent_ser(rb_linear: f64) -> f64 {
    0.5 * statrs::function::erf::erfc((rb_linear.max(0.0) / 2.0).sqrt())
}

/// Inverse of [`fsk2_coherent_ser`] by bisection (monotone decreasing).
pub fn fsk2_rb_for_ser(target_ser: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 100.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fsk2_coherent_ser(mid) > target_ser {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// x (dB) where a curve crosses `target` in log-y, by interpolation between
/// the bracketing grid points. `None` when the grid never brackets the
/// target with positive values.
pub fn x_at_y_log(points: &[CurvePoint], target: f64) -> Option<f64> {
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.y <= 0.0 || b.y <= 0.0 {
            continue;
        }
        let (ya, yb) = (a.y.ln(), b.y.ln());
        let t = target.ln();
        if (ya - t) * (yb - t) <= 0.0 && ya != yb {
            return Some(a.x_db + (t - ya) / (yb - ya) * (b.x_db - a.x_db));
        }
    }
    None
}

/// x (dB) where a curve crosses `target` in linear y (for Pd curves).
pub fn x_at_y_linear(points: &[CurvePoint], target: f64) -> Option<f64> {
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.y - target) * (b.y - target) <= 0.0 && a.y != b.y {
            return Some(a.x_db + (target - a.y) / (b.y - a.y) * (b.x_db - a.x_db));
        }
    }
    None
}

/// Output formats for [`emit_results`].
#[derive(Debug, Clone, Copy)]
pub struct EmitFormats {
    pub csv: bool,
    pub svg: bool,
}

/// Files written by [`emit_results`].
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub files: Vec<String>,
    pub fingerprint: String,
}

/// Writes one CSV per curve (`x_db,y,trials,count`, LF endings, round-trip
/// float precision), an optional SVG overlay (log-scale y), and a JSON
/// manifest listing the files and the config fingerprint.
pub fn emit_results(curves: &[CurveResult], out_dir: &Path, formats: EmitFormats) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| JrcError::io(out_dir, e))?;
    let mut files = Vec::new();
    if formats.csv {
        for curve in curves {
            let name = format!("{}.csv", curve.label);
            let mut body = String::from("x_db,y,trials,count\n");
            for p in &curve.points {
                let _ = writeln!(body, "{},{},{},{}", p.x_db, p.y, p.trials, p.count);
            }
            let path = out_dir.join(&name);
            fs::write(&path, body).map_err(|e| JrcError::io(&path, e))?;
            files.push(name);
        }
    }
    if formats.svg && curves.iter().any(|c| !c.points.is_empty()) {
        let name = "curves.svg".to_string();
        let path = out_dir.join(&name);
        fs::write(&path, render_svg(curves)).map_err(|e| JrcError::io(&path, e))?;
        files.push(name);
    }
    let manifest = Manifest {
        files,
        fingerprint: curves
            .first()
            .map(|c| c.fingerprint.clone())
            .unwrap_or_default(),
    };
    let path = out_dir.join("manifest.json");
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| JrcError::Parse(e.to_string()))?;
    fs::write(&path, json).map_err(|e| JrcError::io(&path, e))?;
    Ok(manifest)
}

const SVG_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn render_svg(curves: &[CurveResult]) -> String {
    let (w, h, ml, mb) = (640.0, 480.0, 60.0, 40.0);
    let pts: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter())
        .filter(|p| p.y > 0.0)
        .map(|p| (p.x_db, p.y.log10()))
        .collect();
    let (x_min, x_max) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let (y_min, y_max) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    let (x_span, y_span) = ((x_max - x_min).max(1e-9), (y_max - y_min).max(1e-9));
    let sx = |x: f64| ml + (x - x_min) / x_span * (w - ml - 20.0);
    let sy = |y: f64| (h - mb) - (y - y_min) / y_span * (h - mb - 20.0);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"20\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>",
        y = h - mb,
        x2 = w - 20.0
    );
    for (ci, curve) in curves.iter().enumerate() {
        let color = SVG_COLORS[ci % SVG_COLORS.len()];
        let path: Vec<String> = curve
            .points
            .iter()
            .filter(|p| p.y > 0.0)
            .map(|p| format!("{:.2},{:.2}", sx(p.x_db), sy(p.y.log10())))
            .collect();
        if path.len() >= 2 {
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.join(" ")
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            w - 180.0,
            30.0 + 16.0 * ci as f64,
            curve.label
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\">SNR (dB)</text>\n\
         <text x=\"12\" y=\"16\">log10(y)</text>",
        w / 2.0 - 30.0,
        h - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}
