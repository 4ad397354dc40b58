//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them on success).
//!
//! The full suite is compute-heavy (several million Monte-Carlo trials) and
//! takes on the order of 10-15 minutes on one core.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use jrc::channel::{apply_channel, ChannelRealization, NoiseSpec, Tap};
use jrc::equalizer::{
    build_ci_matrix, equalize_reconstruct, plain_judgement, sample_matched_at_instants,
    select_demod_path, DemodDecision, JudgementMode,
};
use jrc::framing::{assemble_frame, barker13_phases, FrameSpec};
use jrc::harness::{
    fsk2_rb_for_ser, run_invariance_with_context, run_pd_with_context, run_ser_with_context,
    x_at_y_linear, x_at_y_log, CsiMode, ExperimentContext, PairKind, SimConfig,
};
use jrc::receiver::{
    cfar_threshold_ca, cfar_threshold_known, cross_correlation_output, radar_process, CfarConfig,
    DetectionReport, Peak,
};
use jrc::seqdesign::{can_design, cross_correlation};

static CTX: OnceLock<(SimConfig, ExperimentContext)> = OnceLock::new();

fn shared() -> &'static (SimConfig, ExperimentContext) {
    CTX.get_or_init(|| {
        let cfg = SimConfig::default();
        let ctx = cfg.build_context().expect("reference design succeeds");
        (cfg, ctx)
    })
}

fn verdict(id: u8, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

/// 1. Single-path SER with ideal CSI tracks the coherent-2FSK reference
/// within 0.7 dB horizontal shift over SER in [1e-3, 1e-2].
#[test]
fn criterion_1_single_path_ser_vs_2fsk() {
    let (base, ctx) = shared();
    let cfg = SimConfig {
        trials: 200_000,
        path_counts: vec![1],
        snr_grid_db: vec![7.0, 8.5, 9.5, 10.5],
        csi_mode: CsiMode::Ideal,
        ..base.clone()
    };
    let curves = run_ser_with_context(&cfg, ctx).unwrap();
    let points = &curves[0].points;
    let mut detail = String::new();
    let mut pass = true;
    for target in [1e-2, 3e-3, 1e-3] {
        match x_at_y_log(points, target) {
            Some(measured) => {
                let reference = 10.0 * fsk2_rb_for_ser(target).log10();
                let shift = measured - reference;
                pass &= shift.abs() <= 0.7;
                detail.push_str(&format!("shift@{target:.0e}={shift:+.2} dB; "));
            }
            None => {
                pass = false;
                detail.push_str(&format!("SER {target:.0e} not bracketed by the grid; "));
            }
        }
    }
    detail.push_str("tolerance 0.7 dB");
    verdict(1, "single-path SER vs 2FSK", pass, &detail);
}

/// 2. Multipath penalty at SER 1e-3 with detected CSI: 5-path <= 2 dB,
/// 10-path <= 3 dB over single-path, monotone in path count.
#[test]
fn criterion_2_multipath_penalty() {
    let (base, ctx) = shared();
    let cfg = SimConfig {
        trials: 200_000,
        path_counts: vec![1, 5, 10],
        snr_grid_db: vec![9.0, 11.5],
        csi_mode: CsiMode::Detected,
        ..base.clone()
    };
    let curves = run_ser_with_context(&cfg, ctx).unwrap();
    let crossings: Vec<Option<f64>> = curves
        .iter()
        .map(|c| x_at_y_log(&c.points, 1e-3))
        .collect();
    let (pass, detail) = match (crossings[0], crossings[1], crossings[2]) {
        (Some(x1), Some(x5), Some(x10)) => {
            let (p5, p10) = (x5 - x1, x10 - x1);
            let pass = p5 <= 2.0 && p10 <= 3.0 && p5 >= 0.0 && p10 >= p5;
            (
                pass,
                format!("penalty 5-path {p5:+.2} dB (<= 2), 10-path {p10:+.2} dB (<= 3), monotone"),
            )
        }
        _ => (false, "SER 1e-3 not bracketed for every curve".into()),
    };
    verdict(2, "multipath penalty", pass, &detail);
}

/// 3. At Pd = 0.9 and P_FA = 1e-3, the proposed radar chain requires
/// 3 +- 1 dB more SNR than the known-waveform matched-filter baseline.
#[test]
fn criterion_3_detection_gap() {
    let (base, ctx) = shared();
    let cfg = SimConfig {
        trials: 100_000,
        snr_grid_db: vec![13.0, 15.0, 17.0, 19.0],
        ..base.clone()
    };
    let (proposed, baseline) = run_pd_with_context(&cfg, ctx).unwrap();
    let xp = x_at_y_linear(&proposed.points, 0.9);
    let xb = x_at_y_linear(&baseline.points, 0.9);
    let (pass, detail) = match (xp, xb) {
        (Some(xp), Some(xb)) => {
            let gap = xp - xb;
            (
                (2.0..=4.0).contains(&gap),
                format!("gap at Pd=0.9 is {gap:.2} dB (required 3 +- 1 dB)"),
            )
        }
        _ => (false, "Pd = 0.9 not bracketed by the grid".into()),
    };
    verdict(3, "detection gap vs matched filter", pass, &detail);
}

/// 4. Information invariance: >= 90% of pointwise |r_f2| differences across
/// 100 random bit vectors fall below the output PSL; a synthetic ideal pair
/// gives exactly zero differences.
#[test]
fn criterion_4_information_invariance() {
    let (base, ctx) = shared();
    let designed = run_invariance_with_context(base, ctx, 100, PairKind::Designed).unwrap();
    let ideal = run_invariance_with_context(base, ctx, 100, PairKind::Ideal).unwrap();
    let pass = designed.frac_below_psl >= 0.9 && ideal.max_diff == 0.0;
    let detail = format!(
        "designed: {:.1}% of diffs below PSL {:.1} (max {:.1}); ideal: max diff {}",
        100.0 * designed.frac_below_psl,
        designed.psl,
        designed.max_diff,
        ideal.max_diff
    );
    verdict(4, "information invariance", pass, &detail);
}

/// 5. CFAR calibration on noise-only cells: empirical false-alarm rate in
/// [P_FA/3, 3 P_FA] for both the cell-averaging and known-noise modes.
#[test]
fn criterion_5_cfar_calibration() {
    let p_fa = 1e-3;
    let sigma2 = 3.7;
    let n_cells = 1_200_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mags: Vec<f64> = (0..n_cells)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            ((re * re + im * im) * sigma2 / 2.0).sqrt()
        })
        .collect();

    let ca_cfg = CfarConfig::cell_averaging(32, 2, p_fa).unwrap();
    let cells: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let thr = cfar_threshold_ca(&cells, &ca_cfg).unwrap();
    let ca_hits = cells.iter().zip(&thr).filter(|(c, t)| c > t).count();
    let ca_rate = ca_hits as f64 / n_cells as f64;

    let kn_cfg = CfarConfig::known_noise(sigma2, p_fa).unwrap();
    let t = cfar_threshold_known(&kn_cfg).unwrap();
    let kn_hits = mags.iter().filter(|&&m| m > t).count();
    let kn_rate = kn_hits as f64 / n_cells as f64;

    let ok = |r: f64| r >= p_fa / 3.0 && r <= 3.0 * p_fa;
    let pass = ok(ca_rate) && ok(kn_rate);
    let detail = format!(
        "cell-averaging rate {ca_rate:.2e}, known-noise rate {kn_rate:.2e} \
         (target 1e-3, accepted [3.3e-4, 3e-3], {n_cells} cells)"
    );
    verdict(5, "CFAR calibration", pass, &detail);
}

/// 6. CAN design: exact unimodularity, ISL non-increasing per iteration,
/// normalized cross-correlation peak <= 0.2 at L = 200.
#[test]
fn criterion_6_can_design_properties() {
    let design = can_design(200, 1, 10_000, 1e-6).unwrap();
    let worst_modulus = design
        .pair
        .s1()
        .iter()
        .chain(design.pair.s2())
        .map(|x| (x.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let monotone = design
        .isl_history
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let cross = design.pair.metrics().cross_peak;
    let pass = worst_modulus <= 1e-12 && monotone && cross <= 0.2;
    let detail = format!(
        "max | |s|-1 | = {worst_modulus:.2e} (<= 1e-12), ISL monotone over {} iterations: {monotone}, \
         normalized cross peak {cross:.3} (<= 0.2)",
        design.isl_history.len()
    );
    verdict(6, "CAN design properties", pass, &detail);
}

/// Runs the exhaustive noise-free check over every 13-bit message for one
/// grid-aliased interferer configuration. Returns (equalized symbol errors,
/// plain-judgement symbol errors).
fn exhaustive_noise_free(ctx: &ExperimentContext, interferers: &[(usize, Complex64)]) -> (u64, u64) {
    let main_delay = 137usize;
    let t_s = ctx.t_s;
    let mut taps = vec![Tap {
        delay: main_delay,
        gain: Complex64::new(1.0, 0.0),
    }];
    for &(d, gain) in interferers {
        taps.push(Tap {
            delay: main_delay + d * t_s,
            gain,
        });
    }
    let ch = ChannelRealization::new(taps).unwrap();
    // Ground-truth CSI: detection values are gain * N * E_s at the tap delays.
    let scale = ctx.n_symbols as f64 * ctx.e_s;
    let peaks: Vec<Peak> = ch
        .taps()
        .iter()
        .map(|t| Peak {
            delay: t.delay as i64,
            value: t.gain * scale,
        })
        .collect();
    let report = DetectionReport {
        peaks,
        main_index: 0,
    };
    let ci = build_ci_matrix(&report, t_s, 1.0).unwrap();
    let decision = select_demod_path(&report, &ci);
    let sel = match &decision {
        DemodDecision::PlainJudgement => &[][..],
        DemodDecision::Reconstruct { interferers } => interferers,
    };
    assert_eq!(sel.len(), interferers.len(), "all aliased paths selected");

    let n = ctx.n_symbols;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut eq_errors, mut plain_errors) = (0u64, 0u64);
    for code in 0u32..(1 << n) {
        let bits: Vec<u8> = (0..n).map(|i| ((code >> i) & 1) as u8).collect();
        let spec = FrameSpec::new(bits.clone(), ctx.phases.clone(), t_s).unwrap();
        let frame = assemble_frame(&ctx.pair, &spec).unwrap();
        let r = apply_channel(&frame, &ch, &NoiseSpec::noiseless(), &mut rng).unwrap();
        let (r1_s, r2_s) =
            sample_matched_at_instants(&r, &ctx.pair, main_delay as i64, n).unwrap();
        let (_, eq_bits) = equalize_reconstruct(
            &r1_s,
            &r2_s,
            &report,
            sel,
            &ctx.phases,
            t_s,
            JudgementMode::Magnitude,
            None,
        )
        .unwrap();
        let plain_bits = plain_judgement(&r1_s, &r2_s, &ctx.phases);
        eq_errors += bits.iter().zip(&eq_bits).filter(|(a, b)| a != b).count() as u64;
        plain_errors += bits.iter().zip(&plain_bits).filter(|(a, b)| a != b).count() as u64;
    }
    (eq_errors, plain_errors)
}

/// 7. Noise-free end-to-end exactness over exhaustive 2^13 messages on
/// grid-aliased channels with interferer gains of magnitude <= 0.7: the
/// equalizer is always exact. A single interferer of magnitude <= 0.7 can
/// never flip the plain magnitude judgement (both branches scale by the same
/// interference factor), so the plain-judgement failure is demonstrated with
/// two aliased interferers whose contributions add up across symbols.
#[test]
fn criterion_7_noise_free_exactness() {
    let (_, ctx) = shared();
    let g = 0.7 / 2f64.sqrt();
    let single: Vec<Vec<(usize, Complex64)>> = vec![
        vec![(1, Complex64::new(0.7, 0.0))],
        vec![(1, Complex64::new(0.0, 0.7))],
        vec![(2, Complex64::new(-g, g))],
    ];
    let double: Vec<Vec<(usize, Complex64)>> = vec![
        vec![(1, Complex64::new(0.65, 0.0)), (2, Complex64::new(0.65, 0.0))],
        vec![(1, Complex64::new(0.7, 0.0)), (2, Complex64::new(-0.7, 0.0))],
    ];

    let mut eq_total = 0u64;
    let mut plain_single = 0u64;
    let mut plain_double = 0u64;
    for case in &single {
        let (eq, plain) = exhaustive_noise_free(ctx, case);
        eq_total += eq;
        plain_single += plain;
    }
    for case in &double {
        let (eq, plain) = exhaustive_noise_free(ctx, case);
        eq_total += eq;
        plain_double += plain;
    }
    let pass = eq_total == 0 && plain_double > 0;
    let detail = format!(
        "equalized errors {eq_total}/0 over {} exhaustive cases; plain-judgement errors: \
         single-interferer {plain_single}, two-interferer {plain_double} (> 0 required)",
        (single.len() + double.len()) * (1 << 13)
    );
    verdict(7, "noise-free end-to-end exactness", pass, &detail);
}

/// Brute-force O(L^2) correlation, independent of the FFT implementation.
fn xcorr_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let out_len = a.len() + b.len() - 1;
    let mut out = vec![Complex64::ZERO; out_len];
    for (i, slot) in out.iter_mut().enumerate() {
        let t = i as i64 - (b.len() as i64 - 1);
        let mut acc = Complex64::ZERO;
        for (k, bv) in b.iter().enumerate() {
            let j = k as i64 + t;
            if j >= 0 && (j as usize) < a.len() {
                acc += a[j as usize] * bv.conj();
            }
        }
        *slot = acc;
    }
    out
}

/// 8. Oracle equivalences: FFT vs direct correlation, both association
/// orders of the radar chain, and sampled-model superposition — all within
/// 1e-9 relative.
#[test]
fn criterion_8_oracle_equivalences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gauss = |rng: &mut ChaCha8Rng| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    };

    // FFT correlation vs direct, L up to 512.
    let mut fft_ok = true;
    for &(la, lb) in &[(512usize, 512usize), (313, 128), (64, 257)] {
        let a: Vec<Complex64> = (0..la).map(|_| gauss(&mut rng)).collect();
        let b: Vec<Complex64> = (0..lb).map(|_| gauss(&mut rng)).collect();
        let fast = cross_correlation(&a, &b).unwrap();
        let slow = xcorr_direct(&a, &b);
        let scale = slow.iter().map(|x| x.norm()).fold(1.0, f64::max);
        fft_ok &= fast
            .iter()
            .zip(&slow)
            .all(|(x, y)| (x - y).norm() <= 1e-9 * scale);
    }

    // Radar chain association order: (r (x) h_f1) (x) h_f2 as implemented vs
    // one pass against the precombined composite filter.
    let pair = can_design(32, 2, 500, 1e-6).unwrap().pair;
    let phases: Vec<f64> = (0..5).map(|i| i as f64 * 1.1).collect();
    let r: Vec<Complex64> = (0..300).map(|_| gauss(&mut rng)).collect();
    let out = radar_process(&r, &pair, &phases).unwrap();
    let combined = pair.combined();
    let t_s = pair.len();
    let mut assoc_ok = true;
    {
        let scale = out.rf2.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for (t, have) in out.rf2.iter().enumerate() {
            let base = t as i64 - (t_s as i64 - 1);
            let mut acc = Complex64::ZERO;
            for (n, &p) in phases.iter().enumerate() {
                let w = Complex64::from_polar(1.0, -p);
                for (k, c) in combined.iter().enumerate() {
                    let j = base + (n * t_s + k) as i64;
                    if j >= 0 && (j as usize) < r.len() {
                        acc += r[j as usize] * c.conj() * w;
                    }
                }
            }
            assoc_ok &= (have - acc).norm() <= 1e-9 * scale;
        }
    }

    // Sampled model vs per-tap direct simulation (noise-free integer delays).
    let phases13 = barker13_phases();
    let bits = vec![1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1];
    let spec = FrameSpec::new(bits, phases13, 32).unwrap();
    let pair13 = can_design(32, 4, 500, 1e-6).unwrap().pair;
    let frame = assemble_frame(&pair13, &spec).unwrap();
    let taps = vec![
        Tap { delay: 11, gain: Complex64::new(1.0, 0.0) },
        Tap { delay: 43, gain: Complex64::new(0.5, -0.2) },
    ];
    let ch = ChannelRealization::new(taps.clone()).unwrap();
    let rr = apply_channel(&frame, &ch, &NoiseSpec::noiseless(), &mut rng).unwrap();
    let (s1, s2) = sample_matched_at_instants(&rr, &pair13, 11, 13).unwrap();
    let mut sup_ok = true;
    {
        let mut e1 = vec![Complex64::ZERO; 13];
        let mut e2 = vec![Complex64::ZERO; 13];
        for tap in &taps {
            let one = ChannelRealization::new(vec![Tap {
                delay: tap.delay,
                gain: Complex64::new(1.0, 0.0),
            }])
            .unwrap();
            let mut rt = apply_channel(&frame, &one, &NoiseSpec::noiseless(), &mut rng)
                .unwrap()
                .into_vec();
            rt.resize(rr.len(), Complex64::ZERO);
            let (t1, t2) = sample_matched_at_instants(&rt, &pair13, 11, 13).unwrap();
            for n in 0..13 {
                e1[n] += tap.gain * t1[n];
                e2[n] += tap.gain * t2[n];
            }
        }
        let scale = frame.energy();
        for (a, b) in s1.iter().zip(&e1).chain(s2.iter().zip(&e2)) {
            sup_ok &= (a - b).norm() <= 1e-9 * scale;
        }
    }

    // Sanity: the baseline matched-filter wrapper shares the lag convention.
    let mf = cross_correlation_output(&rr, frame.samples()).unwrap();
    let conv_ok = mf.lag0_index == frame.samples().len() - 1;

    let pass = fft_ok && assoc_ok && sup_ok && conv_ok;
    let detail = format!(
        "fft-vs-direct {fft_ok}, association order {assoc_ok}, sampled-model superposition {sup_ok}"
    );
    verdict(8, "oracle equivalences", pass, &detail);
}
