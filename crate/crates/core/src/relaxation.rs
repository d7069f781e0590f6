// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Phenomenological coherence decay built from per-line widths.
//!
//! A single-quantum coherence on transition `k` decays at
//! `R2_k = pi * FWHM_k`. Coherences spanning several transitions take the
//! largest rate among the transitions they span. An optional uniform T1
//! pulls populations back towards equilibrium.

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::{abs, lit, max, Real, C};

/// Widths in Hz, outermost to outermost. Only the 10 Hz centre and
/// 130 Hz edges are measured; 55 and 20 Hz are interpolated.
pub const DEFAULT_LINEWIDTHS_HZ: [f64; 7] = [130.0, 55.0, 20.0, 10.0, 20.0, 55.0, 130.0];

pub fn default_linewidths<T: Real>() -> Vec<T> {
    DEFAULT_LINEWIDTHS_HZ.iter().map(|&w| lit(w)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LongitudinalRelaxation<T: Real> {
    pub t1_s: T,
    pub equilibrium: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationModel<T: Real> {
    linewidths_hz: Vec<T>,
    longitudinal: Option<LongitudinalRelaxation<T>>,
}

impl<T: Real> RelaxationModel<T> {
    pub fn new(linewidths_hz: Vec<T>) -> Result<Self> {
        let n = linewidths_hz.len();
        if n == 0 {
            return Err(Error::Configuration("no linewidths given".into()));
        }
        if linewidths_hz.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::Configuration("linewidths must be non-negative".into()));
        }
        let tol = lit::<T>(1e-9);
        for k in 0..n / 2 {
            if abs(linewidths_hz[k] - linewidths_hz[n - 1 - k]) > tol * max(T::one(), linewidths_hz[k]) {
                return Err(Error::Configuration(format!(
                    "linewidths are not symmetric about the centre (line {k})"
                )));
            }
        }
        let centre = linewidths_hz[n / 2];
        if linewidths_hz.iter().any(|w| *w < centre) {
            return Err(Error::Configuration("central line must be the narrowest".into()));
        }
        Ok(Self {
            linewidths_hz,
            longitudinal: None,
        })
    }

    pub fn with_t1(mut self, t1_s: T, equilibrium: Vec<T>) -> Result<Self> {
        if !(t1_s > T::zero()) {
            return Err(Error::Configuration(format!("T1 must be positive, got {t1_s}")));
        }
        if equilibrium.len() != self.linewidths_hz.len() + 1 {
            return Err(Error::Configuration("equilibrium populations have wrong length".into()));
        }
        self.longitudinal = Some(LongitudinalRelaxation { t1_s, equilibrium });
        Ok(self)
    }

    pub fn linewidths_hz(&self) -> &[T] {
        &self.linewidths_hz
    }

    pub fn longitudinal(&self) -> Option<&LongitudinalRelaxation<T>> {
        self.longitudinal.as_ref()
    }

    /// Decay rate (1/s) of the single-quantum coherence on transition `k`.
    pub fn single_quantum_rate(&self, k: usize) -> T {
        T::pi() * self.linewidths_hz[k]
    }

    /// Decay rate (1/s) of coherence `(i, j)`; zero on the diagonal.
    pub fn rate(&self, i: usize, j: usize) -> T {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        (lo..hi).fold(T::zero(), |acc, k| max(acc, self.single_quantum_rate(k)))
    }

    /// Transverse time constant of line `k`, `1 / R2_k`.
    pub fn t2(&self, k: usize) -> T {
        T::one() / self.single_quantum_rate(k)
    }

    pub fn apply_decay(&self, rho: &DensityMatrix<T>, dt: T) -> DensityMatrix<T> {
        let d = rho.dim();
        let mut m = rho.matrix().clone();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    m[(i, j)] *= (-self.rate(i, j) * dt).exp();
                }
            }
        }
        if let Some(l) = &self.longitudinal {
            let f = (-dt / l.t1_s).exp();
            for i in 0..d {
                let p = l.equilibrium[i] + (m[(i, i)].re - l.equilibrium[i]) * f;
                m[(i, i)] = C::new(p, m[(i, i)].im);
            }
        }
        DensityMatrix::from_matrix(m)
    }
}

pub fn apply_decay<T: Real>(rho: &DensityMatrix<T>, model: &RelaxationModel<T>, dt: T) -> DensityMatrix<T> {
    model.apply_decay(rho, dt)
}
