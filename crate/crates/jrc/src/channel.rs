//! Multipath channel realizations and calibrated complex white Gaussian noise.
//!
//! Delays are quantized to integer chips so the symbol sampling instants stay
//! exact; tap collisions are allowed and their gains add at application time.
//! Noise bookkeeping: one complex noise sample per chip with per-sample power
//! `sigma2` (independent real/imaginary parts of variance `sigma2 / 2`).

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{JrcError, Result};
use crate::framing::JrcFrame;
use crate::seqdesign::ComplexSeq;

/// One propagation path: integer-chip delay and complex gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: usize,
    pub gain: Complex64,
}

/// A drawn channel: main path first (unit gain), then interference paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    taps: Vec<Tap>,
}

impl ChannelRealization {
    pub fn new(taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(JrcError::InvalidArgument(
                "channel needs at least one tap".into(),
            ));
        }
        if taps[0].gain != Complex64::new(1.0, 0.0) {
            return Err(JrcError::InvalidArgument(
                "main path gain must be exactly 1".into(),
            ));
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Main-path delay tau_0 in chips.
    pub fn main_delay(&self) -> usize {
        self.taps[0].delay
    }

    pub fn path_count(&self) -> usize {
        self.taps.len()
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.delay).max().unwrap()
    }

    /// One JSON object per tap (`delay`, `re`, `im`), LF-separated, for
    /// failure reproduction logs.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for t in &self.taps {
            let _ = writeln!(
                out,
                "{{\"delay\":{},\"re\":{},\"im\":{}}}",
                t.delay, t.gain.re, t.gain.im
            );
        }
        out
    }
}

/// Noise power bookkeeping: `sigma2` per complex sample, `n0_half = sigma2/2`
/// per real dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma2: f64,
    pub n0_half: f64,
}

impl NoiseSpec {
    pub fn from_sigma2(sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) {
            return Err(JrcError::InvalidArgument(
                "noise power must be >= 0".into(),
            ));
        }
        Ok(Self {
            sigma2,
            n0_half: sigma2 / 2.0,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma2: 0.0,
            n0_half: 0.0,
        }
    }
}

/// Maps the detection-axis SNR `d = 2E/N_0` to the per-sample noise power
/// `sigma2 = N_0 = 2E/d`.
pub fn snr_to_sigma2(d: f64, energy: f64) -> Result<NoiseSpec> {
    if !(d > 0.0) {
        return Err(JrcError::InvalidArgument("SNR d must be > 0".into()));
    }
    if !(energy > 0.0) {
        return Err(JrcError::InvalidArgument("energy must be > 0".into()));
    }
    NoiseSpec::from_sigma2(2.0 * energy / d)
}

/// Draws a channel per the simulation model: all delays uniform on integer
/// chips in `[0, 3 T_s)`, main gain 1, interference gains `a + jb` with
/// `a, b ~ unif(-sqrt(2)/2, sqrt(2)/2)`.
pub fn sample_channel(
    l_paths: usize,
    t_s: usize,
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    if l_paths < 1 {
        return Err(JrcError::InvalidArgument("need at least one path".into()));
    }
    let half_sqrt2 = std::f64::consts::SQRT_2 / 2.0;
    let mut taps = Vec::with_capacity(l_paths);
    taps.push(Tap {
        delay: rng.random_range(0..3 * t_s),
        gain: Complex64::new(1.0, 0.0),
    });
    for _ in 1..l_paths {
        taps.push(Tap {
            delay: rng.random_range(0..3 * t_s),
            gain: Complex64::new(
                rng.random_range(-half_sqrt2..half_sqrt2),
                rng.random_range(-half_sqrt2..half_sqrt2),
            ),
        });
    }
    ChannelRealization::new(taps)
}

/// Applies the tapped-delay channel and injects circular complex white
/// Gaussian noise. Output length is `frame.len() + max_delay` (full tail).
pub fn apply_channel(
    frame: &JrcFrame,
    ch: &ChannelRealization,
    noise: &NoiseSpec,
    rng: &mut impl Rng,
) -> Result<ComplexSeq> {
    let samples = frame.samples();
    let out_len = samples.len() + ch.max_delay();
    let mut out = vec![Complex64::ZERO; out_len];
    for tap in ch.taps() {
        for (o, s) in out[tap.delay..tap.delay + samples.len()]
            .iter_mut()
            .zip(samples)
        {
            *o += tap.gain * s;
        }
    }
    if noise.sigma2 > 0.0 {
        let std = (noise.sigma2 / 2.0).sqrt();
        for o in out.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *o += Complex64::new(std * re, std * im);
        }
    }
    ComplexSeq::new(out)
}
