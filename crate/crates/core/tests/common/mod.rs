// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Test-only reference routines, independent of the library's
//! eigendecomposition path.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};

pub type CM = DMatrix<Complex<f64>>;

/// `exp(-i H t)` by Taylor series with scaling and squaring.
pub fn taylor_propagator(h: &CM, t: f64) -> CM {
    let n = h.nrows();
    let a = h.map(|z| z * Complex::new(0.0, -t));
    let norm: f64 = a.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 2;
    let scaled = a.map(|z| z / 2f64.powi(squarings as i32));
    let mut term = CM::identity(n, n);
    let mut sum = CM::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / Complex::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn chain_matrix(n: usize, coupling: f64) -> CM {
    DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            Complex::new(coupling, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// Populations of the unit-coupling chain started at `start`, via Taylor.
pub fn taylor_chain_populations(n: usize, start: usize, tau: f64) -> Vec<f64> {
    let u = taylor_propagator(&chain_matrix(n, 1.0), tau);
    (0..n).map(|i| u[(i, start)].norm_sqr()).collect()
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Ideal pseudopure deviation state for a `d`-level system.
pub fn ideal_pseudopure(d: usize) -> Vec<f64> {
    let i = (d - 1) as f64 / 2.0;
    let mut p = vec![-(i) / (d - 1) as f64; d];
    p[0] = i;
    p
}
