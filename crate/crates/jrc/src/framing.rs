//! Two-layer JRC frame assembly.
//!
//! Symbol `n` carries bit `I_n` by transmitting `s1` (bit 1) or `s2` (bit 0),
//! rotated by the external phase `phi_n`. Symbols are strictly contiguous
//! with no guard interval.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{JrcError, Result};
use crate::seqdesign::{ComplexSeq, OrthogonalPair};

/// Barker-13 chips; the paper's external phase layer uses their 0/pi phases.
pub const BARKER13_CHIPS: [i8; 13] = [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1];

/// Bits, external phases, and symbol length; fully determines a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    bits: Vec<u8>,
    phases: Vec<f64>,
    symbol_len: usize,
}

impl FrameSpec {
    pub fn new(bits: Vec<u8>, phases: Vec<f64>, symbol_len: usize) -> Result<Self> {
        if bits.is_empty() || bits.len() != phases.len() {
            return Err(JrcError::InvalidArgument(format!(
                "bits/phases lengths must match and be >= 1 (got {} and {})",
                bits.len(),
                phases.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(JrcError::InvalidArgument("bits must be 0 or 1".into()));
        }
        if symbol_len == 0 {
            return Err(JrcError::InvalidArgument("symbol_len must be >= 1".into()));
        }
        Ok(Self {
            bits,
            phases,
            symbol_len,
        })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Symbol duration T_s in chips.
    pub fn symbol_len(&self) -> usize {
        self.symbol_len
    }

    /// Symbol count N.
    pub fn n_symbols(&self) -> usize {
        self.bits.len()
    }
}

/// An assembled transmit frame of `N * T_s` samples.
#[derive(Debug, Clone)]
pub struct JrcFrame {
    samples: ComplexSeq,
    spec: FrameSpec,
    energy: f64,
}

impl JrcFrame {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    /// Total energy E; equals `N * E_s` for a unimodular pair.
    pub fn energy(&self) -> f64 {
        self.energy
    }
}

/// Builds the frame `sum_n [I_n s1 + (1-I_n) s2](t - n T_s) e^{j phi_n}`.
pub fn assemble_frame(pair: &OrthogonalPair, spec: &FrameSpec) -> Result<JrcFrame> {
    if spec.symbol_len() != pair.len() {
        return Err(JrcError::InvalidArgument(format!(
            "symbol_len {} does not match pair length {}",
            spec.symbol_len(),
            pair.len()
        )));
    }
    let t_s = spec.symbol_len();
    let mut samples = Vec::with_capacity(spec.n_symbols() * t_s);
    for (&bit, &phase) in spec.bits().iter().zip(spec.phases()) {
        let rot = Complex64::from_polar(1.0, phase);
        let sym = if bit == 1 { pair.s1() } else { pair.s2() };
        samples.extend(sym.iter().map(|s| s * rot));
    }
    let samples = ComplexSeq::new(samples)?;
    let energy = samples.energy();
    Ok(JrcFrame {
        samples,
        spec: spec.clone(),
        energy,
    })
}

/// The 13 external phases corresponding to the Barker-13 chips
/// (0 for +1, pi for -1).
pub fn barker13_phases() -> Vec<f64> {
    BARKER13_CHIPS
        .iter()
        .map(|&c| if c > 0 { 0.0 } else { std::f64::consts::PI })
        .collect()
}

/// `n` i.i.d. uniform bits from the given RNG.
pub fn random_bits(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..=1u8)).collect()
}

/// Writes the frame samples in the `re,im` text format plus a JSON sidecar
/// (`<path>.json`) recording bits, phases and symbol length.
pub fn save_frame(frame: &JrcFrame, path: &Path) -> Result<()> {
    let mut out = String::new();
    for s in frame.samples() {
        let _ = writeln!(out, "{},{}", s.re, s.im);
    }
    fs::write(path, out).map_err(|e| JrcError::io(path, e))?;
    let sidecar = path.with_extension(format!(
        "{}json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let json = serde_json::to_string_pretty(frame.spec())
        .map_err(|e| JrcError::Parse(e.to_string()))?;
    fs::write(&sidecar, json).map_err(|e| JrcError::io(sidecar, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdesign::can_design;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_pair() -> OrthogonalPair {
        can_design(8, 11, 500, 1e-8).unwrap().pair
    }

    #[test]
    fn single_symbol_identity() {
        let pair = small_pair();
        let spec = FrameSpec::new(vec![1], vec![0.0], pair.len()).unwrap();
        let frame = assemble_frame(&pair, &spec).unwrap();
        assert_eq!(frame.samples(), pair.s1());
    }

    #[test]
    fn phase_pi_negates_second_symbol() {
        let pair = small_pair();
        let spec =
            FrameSpec::new(vec![1, 0], vec![0.0, std::f64::consts::PI], pair.len()).unwrap();
        let frame = assemble_frame(&pair, &spec).unwrap();
        assert_eq!(&frame.samples()[..pair.len()], pair.s1());
        for (x, s) in frame.samples()[pair.len()..].iter().zip(pair.s2()) {
            assert!((x + s).norm() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let pair = small_pair();
        let spec = FrameSpec::new(vec![1], vec![0.0], pair.len() + 1).unwrap();
        assert!(assemble_frame(&pair, &spec).is_err());
    }

    #[test]
    fn frame_energy_is_n_times_es() {
        let pair = small_pair();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits = random_bits(13, &mut rng);
        let spec = FrameSpec::new(bits, barker13_phases(), pair.len()).unwrap();
        let frame = assemble_frame(&pair, &spec).unwrap();
        assert_eq!(frame.samples().len(), 13 * pair.len());
        assert!((frame.energy() - 13.0 * pair.e_s()).abs() < 1e-6);
    }

    #[test]
    fn barker13_phase_layer() {
        let phases = barker13_phases();
        assert_eq!(phases.len(), 13);
        for (&phi, &chip) in phases.iter().zip(BARKER13_CHIPS.iter()) {
            let v = Complex64::from_polar(1.0, phi);
            assert!((v.re - chip as f64).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
        // Autocorrelation of e^{j Phi}: peak 13, sidelobes at most 1.
        let chips: Vec<Complex64> = phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect();
        let r = crate::seqdesign::cross_correlation(&chips, &chips).unwrap();
        let lag0 = crate::seqdesign::lag_zero_index(13);
        assert!((r[lag0].re - 13.0).abs() < 1e-9);
        for (k, c) in r.iter().enumerate() {
            if k != lag0 {
                assert!(c.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn random_bits_deterministic_and_balanced() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(random_bits(13, &mut a), random_bits(13, &mut b));

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let bits = random_bits(100_000, &mut rng);
        let mean = bits.iter().map(|&b| b as f64).sum::<f64>() / bits.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "bit mean {mean}");
    }

    proptest! {
        #[test]
        fn complement_symmetry(bits in prop::collection::vec(0u8..=1, 1..8),
                               phases in prop::collection::vec(-3.2..3.2f64, 8)) {
            let pair = small_pair();
            let n = bits.len();
            let phases = phases[..n].to_vec();
            let flipped: Vec<u8> = bits.iter().map(|b| 1 - b).collect();
            let swapped = OrthogonalPair::new(
                ComplexSeq::new(pair.s2().to_vec()).unwrap(),
                ComplexSeq::new(pair.s1().to_vec()).unwrap(),
            ).unwrap();
            let f1 = assemble_frame(&pair, &FrameSpec::new(bits, phases.clone(), pair.len()).unwrap()).unwrap();
            let f2 = assemble_frame(&swapped, &FrameSpec::new(flipped, phases, pair.len()).unwrap()).unwrap();
            prop_assert_eq!(f1.samples(), f2.samples());
        }

        #[test]
        fn phase_layer_separability(bits in prop::collection::vec(0u8..=1, 1..8),
                                    phases in prop::collection::vec(-3.2..3.2f64, 8)) {
            let pair = small_pair();
            let n = bits.len();
            let phases = phases[..n].to_vec();
            let zero = assemble_frame(&pair, &FrameSpec::new(bits.clone(), vec![0.0; n], pair.len()).unwrap()).unwrap();
            let full = assemble_frame(&pair, &FrameSpec::new(bits, phases.clone(), pair.len()).unwrap()).unwrap();
            for (i, (x, y)) in full.samples().iter().zip(zero.samples()).enumerate() {
                let rot = Complex64::from_polar(1.0, phases[i / pair.len()]);
                prop_assert!((x - y * rot).norm() < 1e-12);
            }
        }
    }
}
