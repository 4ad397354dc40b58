//! FFT helpers shared by the correlation primitives.
//!
//! Plans are cached per thread; all operations are deterministic so results
//! do not depend on which worker thread runs them.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

pub(crate) fn forward(buf: &mut [Complex64]) {
    plan_forward(buf.len()).process(buf);
}

/// Inverse FFT, normalized by 1/n.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for x in buf.iter_mut() {
        *x *= scale;
    }
}

/// Full linear cross-correlations of `a` against several filters, computing
/// the spectrum of `a` only once. Output `k` has length
/// `a.len() + filters[k].len() - 1` with lag 0 at index `filters[k].len() - 1`.
pub(crate) fn correlate_many(a: &[Complex64], filters: &[&[Complex64]]) -> Vec<Vec<Complex64>> {
    let max_b = filters.iter().map(|f| f.len()).max().unwrap_or(0);
    let m = (a.len() + max_b - 1).next_power_of_two();
    let mut fa = vec![Complex64::ZERO; m];
    fa[..a.len()].copy_from_slice(a);
    forward(&mut fa);

    filters
        .iter()
        .map(|b| {
            let mut fb = vec![Complex64::ZERO; m];
            for (i, x) in b.iter().rev().enumerate() {
                fb[i] = x.conj();
            }
            forward(&mut fb);
            for (x, y) in fb.iter_mut().zip(fa.iter()) {
                *x *= y;
            }
            inverse(&mut fb);
            fb.truncate(a.len() + b.len() - 1);
            fb
        })
        .collect()
}
