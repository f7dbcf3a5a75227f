//! Thin DFT helpers with the conventions used by the signal model.
//!
//! Forward transforms carry the unitary `1/sqrt(N)` scaling; the raw
//! (unnormalized) variants exist for the modulator and tap conversions, which
//! use their own scale factors.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{C64, CMat};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static FWD: RefCell<HashMap<usize, Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
    static INV: RefCell<HashMap<usize, Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    FWD.with(|cache| {
        cache
            .borrow_mut()
            .entry(len)
            .or_insert_with(|| PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len)))
            .clone()
    })
}

fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    INV.with(|cache| {
        cache
            .borrow_mut()
            .entry(len)
            .or_insert_with(|| PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len)))
            .clone()
    })
}

/// In-place `X[k] = sum_n x[n] e^{-j 2 pi n k / N}` (no scaling).
pub fn forward_raw(buf: &mut [C64]) {
    forward_plan(buf.len()).process(buf);
}

/// In-place `x[n] = sum_k X[k] e^{+j 2 pi n k / N}` (no scaling).
pub fn inverse_raw(buf: &mut [C64]) {
    inverse_plan(buf.len()).process(buf);
}

/// In-place unitary forward DFT (`1/sqrt(N)` scaling).
pub fn forward_unitary(buf: &mut [C64]) {
    forward_raw(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// In-place unitary inverse DFT (`1/sqrt(N)` scaling).
pub fn inverse_unitary(buf: &mut [C64]) {
    inverse_raw(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Unitary forward DFT applied to each row of a matrix (row = one sequence).
pub fn dft_rows_unitary(m: &CMat) -> CMat {
    let (rows, cols) = m.shape();
    let mut out = m.clone();
    let mut scratch = vec![C64::default(); cols];
    for r in 0..rows {
        for c in 0..cols {
            scratch[c] = out[(r, c)];
        }
        forward_unitary(&mut scratch);
        for c in 0..cols {
            out[(r, c)] = scratch[c];
        }
    }
    out
}
