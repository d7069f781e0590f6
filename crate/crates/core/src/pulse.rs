// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Multi-tone RF pulses and density-matrix evolution under them.
//!
//! Everything lives in the interaction frame of the static quadrupolar
//! Hamiltonian. Harmonic `h` (offset `f_h`, amplitude `a_h`, phase `phi_h`)
//! drives every single-quantum transition `j`; the `(j, j+1)` element of
//! the Hamiltonian is
//!
//! ```text
//! sum_h (a_h d_j / 2) exp(i phi_h) exp(i 2 pi (f_j - f_h) t)
//! ```
//!
//! [`EvolutionMode::IdealRwa`] keeps only the resonant `f_h = f_j` terms,
//! which leaves a time-independent tridiagonal matrix. [`EvolutionMode::Full`]
//! keeps the off-resonant cross terms and integrates them with
//! piecewise-constant midpoint propagators. Counter-rotating terms at the
//! Larmor frequency are absent in both.

use nalgebra::DMatrix;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::relaxation::RelaxationModel;
use crate::scalar::{abs, cis, lit, max, min, to_f64, Real, C};
use crate::spin::SpinSystem;

/// Offset match tolerance between a harmonic and a transition.
pub const MATCH_TOLERANCE_HZ: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RfHarmonic<T: Real> {
    /// Offset from the multiplet centre, Hz.
    pub frequency_hz: T,
    /// Nutation strength before matrix-element weighting, rad/s.
    pub amplitude: T,
    pub phase: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapedPulse<T: Real> {
    harmonics: Vec<RfHarmonic<T>>,
    duration_s: T,
}

impl<T: Real> ShapedPulse<T> {
    pub fn new(harmonics: Vec<RfHarmonic<T>>, duration_s: T) -> Result<Self> {
        if !(duration_s >= T::zero()) {
            return Err(Error::InvalidPulse(format!("negative duration {duration_s}")));
        }
        for (i, h) in harmonics.iter().enumerate() {
            if !(h.amplitude >= T::zero()) {
                return Err(Error::InvalidPulse(format!("harmonic {i} has negative amplitude")));
            }
            if harmonics[..i].iter().any(|g| g.frequency_hz == h.frequency_hz) {
                return Err(Error::InvalidPulse(format!(
                    "duplicate harmonic frequency {} Hz",
                    h.frequency_hz
                )));
            }
        }
        Ok(Self {
            harmonics,
            duration_s,
        })
    }

    pub fn harmonics(&self) -> &[RfHarmonic<T>] {
        &self.harmonics
    }

    pub fn duration_s(&self) -> T {
        self.duration_s
    }

    pub fn with_duration(&self, duration_s: T) -> Result<Self> {
        Self::new(self.harmonics.clone(), duration_s)
    }

    /// Adds `phase` to every harmonic.
    pub fn phase_shifted(&self, phase: T) -> Self {
        Self {
            harmonics: self
                .harmonics
                .iter()
                .map(|h| RfHarmonic {
                    phase: h.phase + phase,
                    ..*h
                })
                .collect(),
            duration_s: self.duration_s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvolutionMode<T: Real> {
    IdealRwa,
    /// `max_step_s: None` picks [`default_full_step`].
    Full { max_step_s: Option<T> },
}

impl<T: Real> EvolutionMode<T> {
    pub fn full() -> Self {
        Self::Full { max_step_s: None }
    }
}

/// Dimensionless chain time reached by a chain-emulation pulse,
/// `tau = omega1 * t / 2` (the rotating-frame element is half the RF amplitude).
pub fn dimensionless_time<T: Real>(omega1: T, duration_s: T) -> T {
    omega1 * duration_s / lit(2.0)
}

pub fn duration_for_tau<T: Real>(omega1: T, tau: T) -> Result<T> {
    if !(omega1 > T::zero()) {
        return Err(Error::InvalidArgument(format!("omega1 must be positive, got {omega1}")));
    }
    Ok(lit::<T>(2.0) * tau / omega1)
}

/// One harmonic per transition at amplitude `omega1 / d_k`, so every
/// rotating-frame coupling equals `omega1 / 2`.
pub fn chain_emulation_pulse<T: Real>(
    sys: &SpinSystem<T>,
    omega1: T,
    duration_s: T,
    phase: T,
) -> Result<ShapedPulse<T>> {
    if !(omega1 >= T::zero()) {
        return Err(Error::InvalidArgument(format!("omega1 must be non-negative, got {omega1}")));
    }
    let harmonics = sys
        .transition_table()
        .transitions
        .iter()
        .map(|t| RfHarmonic {
            frequency_hz: t.offset_hz,
            amplitude: omega1 / t.matrix_element,
            phase,
        })
        .collect();
    ShapedPulse::new(harmonics, duration_s)
}

fn matched_transition<T: Real>(sys: &SpinSystem<T>, h: &RfHarmonic<T>) -> Result<usize> {
    let hits = sys.transition_table().matching(h.frequency_hz, lit(MATCH_TOLERANCE_HZ));
    match hits.as_slice() {
        [k] => Ok(*k),
        [] => Err(Error::InvalidPulse(format!(
            "harmonic at {} Hz matches no transition",
            h.frequency_hz
        ))),
        _ => Err(Error::InvalidPulse(format!(
            "harmonic at {} Hz matches {} degenerate transitions",
            h.frequency_hz,
            hits.len()
        ))),
    }
}

/// Rotating-wave Hamiltonian (rad/s): `(k, k+1) = (a_k d_k / 2) exp(i phi_k)`.
pub fn effective_hamiltonian_rwa<T: Real>(pulse: &ShapedPulse<T>, sys: &SpinSystem<T>) -> Result<CMatrix<T>> {
    let table = sys.transition_table();
    let d = sys.dim();
    let mut h = CMatrix::zeros(d, d);
    let half = lit::<T>(0.5);
    for harmonic in &pulse.harmonics {
        let k = matched_transition(sys, harmonic)?;
        let elem = cis(harmonic.phase) * (harmonic.amplitude * table.transitions[k].matrix_element * half);
        h[(k, k + 1)] += elem;
        h[(k + 1, k)] += elem.conj();
    }
    Ok(h)
}

/// Largest `|f_transition - f_harmonic|` over all harmonic/transition pairs.
pub fn max_frequency_difference<T: Real>(pulse: &ShapedPulse<T>, sys: &SpinSystem<T>) -> T {
    let offsets = sys.transition_table().offsets();
    let mut worst = T::zero();
    for h in &pulse.harmonics {
        for f in &offsets {
            worst = max(worst, abs(*f - h.frequency_hz));
        }
    }
    worst
}

/// Largest step the FULL integrator accepts, `1 / (50 f_max)`.
pub fn max_allowed_step<T: Real>(pulse: &ShapedPulse<T>, sys: &SpinSystem<T>) -> Option<T> {
    let f_max = max_frequency_difference(pulse, sys);
    (f_max > T::zero()).then(|| T::one() / (lit::<T>(50.0) * f_max))
}

/// `1 / (100 * splitting)`, tightened to the `1 / (50 f_max)` bound when
/// the pulse spans a wider band.
pub fn default_full_step<T: Real>(pulse: &ShapedPulse<T>, sys: &SpinSystem<T>) -> Option<T> {
    let by_splitting =
        (sys.splitting_hz() > T::zero()).then(|| T::one() / (lit::<T>(100.0) * sys.splitting_hz()));
    match (by_splitting, max_allowed_step(pulse, sys)) {
        (Some(a), Some(b)) => Some(min(a, b)),
        (a, b) => a.or(b),
    }
}

/// Precomputed generator for one pulse; advances states over arbitrary
/// sub-intervals of the pulse so that a crossing search can resume
/// integration instead of restarting it.
pub(crate) struct Evolver<'a, T: Real> {
    kind: EvolverKind<T>,
    relax: Option<&'a RelaxationModel<T>>,
}

enum EvolverKind<T: Real> {
    Ideal {
        eigen: HermitianEigen<T>,
        relax_step: T,
    },
    Full {
        /// `coeff[h][j] = (a_h d_j / 2) exp(i phi_h)`
        coeff: Vec<Vec<C<T>>>,
        /// `detuning[h][j] = 2 pi (f_j - f_h)` in rad/s
        detuning: Vec<Vec<T>>,
        dim: usize,
        step: Option<T>,
    },
}

impl<'a, T: Real> Evolver<'a, T> {
    pub(crate) fn new(
        pulse: &ShapedPulse<T>,
        sys: &SpinSystem<T>,
        mode: EvolutionMode<T>,
        relax: Option<&'a RelaxationModel<T>>,
    ) -> Result<Self> {
        if let Some(r) = relax {
            if r.linewidths_hz().len() + 1 != sys.dim() {
                return Err(Error::Configuration(format!(
                    "relaxation model has {} linewidths, spin system has {} transitions",
                    r.linewidths_hz().len(),
                    sys.dim() - 1
                )));
            }
        }
        let kind = match mode {
            EvolutionMode::IdealRwa => {
                let h = effective_hamiltonian_rwa(pulse, sys)?;
                let relax_step = if sys.splitting_hz() > T::zero() {
                    T::one() / (lit::<T>(100.0) * sys.splitting_hz())
                } else {
                    lit(1e-5)
                };
                EvolverKind::Ideal {
                    eigen: HermitianEigen::new(&h)?,
                    relax_step,
                }
            }
            EvolutionMode::Full { max_step_s } => {
                let step = match max_step_s {
                    Some(s) => {
                        if !(s > T::zero()) {
                            return Err(Error::Configuration(format!("step {s} s is not positive")));
                        }
                        if let Some(limit) = max_allowed_step(pulse, sys) {
                            // relative slack so that exactly-at-limit steps pass
                            if s > limit * lit(1.0 + 1e-9) {
                                return Err(Error::Configuration(format!(
                                    "FULL step {} s exceeds 1/(50 f_max) = {} s",
                                    to_f64(s),
                                    to_f64(limit)
                                )));
                            }
                        }
                        Some(s)
                    }
                    None => default_full_step(pulse, sys),
                };
                let table = sys.transition_table();
                let half = lit::<T>(0.5);
                let coeff = pulse
                    .harmonics
                    .iter()
                    .map(|h| {
                        table
                            .transitions
                            .iter()
                            .map(|t| cis(h.phase) * (h.amplitude * t.matrix_element * half))
                            .collect()
                    })
                    .collect();
                let detuning = pulse
                    .harmonics
                    .iter()
                    .map(|h| {
                        table
                            .transitions
                            .iter()
                            .map(|t| T::two_pi() * (t.offset_hz - h.frequency_hz))
                            .collect()
                    })
                    .collect();
                EvolverKind::Full {
                    coeff,
                    detuning,
                    dim: sys.dim(),
                    step,
                }
            }
        };
        Ok(Self { kind, relax })
    }

    fn full_hamiltonian(coeff: &[Vec<C<T>>], detuning: &[Vec<T>], dim: usize, t: T) -> CMatrix<T> {
        let mut h = CMatrix::zeros(dim, dim);
        for (c_h, w_h) in coeff.iter().zip(detuning) {
            for j in 0..dim - 1 {
                let e = c_h[j] * cis(w_h[j] * t);
                h[(j, j + 1)] += e;
            }
        }
        for j in 0..dim - 1 {
            h[(j + 1, j)] = h[(j, j + 1)].conj();
        }
        h
    }

    fn relax_half(&self, rho: DensityMatrix<T>, h: T) -> DensityMatrix<T> {
        match self.relax {
            Some(r) => r.apply_decay(&rho, h * lit(0.5)),
            None => rho,
        }
    }

    /// Evolves `rho` from pulse time `t_start` to `t_end`.
    pub(crate) fn advance(&self, rho: &DensityMatrix<T>, t_start: T, t_end: T) -> Result<DensityMatrix<T>> {
        let span = t_end - t_start;
        if span < T::zero() {
            return Err(Error::InvalidArgument("evolution interval runs backwards".into()));
        }
        if span == T::zero() {
            return Ok(rho.clone());
        }
        match &self.kind {
            EvolverKind::Ideal { eigen, relax_step } => {
                if self.relax.is_none() {
                    return Ok(rho.conjugated(&eigen.propagator(span)));
                }
                let n = n_steps(span, *relax_step);
                let h = span / lit(n as f64);
                let u = eigen.propagator(h);
                let mut state = rho.clone();
                for _ in 0..n {
                    state = self.relax_half(state, h);
                    state = state.conjugated(&u);
                    state = self.relax_half(state, h);
                }
                Ok(state)
            }
            EvolverKind::Full {
                coeff,
                detuning,
                dim,
                step,
            } => {
                let n = step.map_or(1, |s| n_steps(span, s));
                let h = span / lit(n as f64);
                let mut state = rho.clone();
                for s in 0..n {
                    let mid = t_start + h * (lit::<T>(s as f64) + lit(0.5));
                    let ham = Self::full_hamiltonian(coeff, detuning, *dim, mid);
                    let u = HermitianEigen::new(&ham)?.propagator(h);
                    state = self.relax_half(state, h);
                    state = state.conjugated(&u);
                    state = self.relax_half(state, h);
                }
                Ok(state)
            }
        }
    }
}

fn n_steps<T: Real>(span: T, max_step: T) -> usize {
    let n = (to_f64(span) / to_f64(max_step) * (1.0 - 1e-12)).ceil();
    n.max(1.0) as usize
}

/// Evolves `rho` through `pulse`, optionally interleaving coherence decay.
pub fn evolve<T: Real>(
    rho: &DensityMatrix<T>,
    pulse: &ShapedPulse<T>,
    sys: &SpinSystem<T>,
    mode: EvolutionMode<T>,
    relax: Option<&RelaxationModel<T>>,
) -> Result<DensityMatrix<T>> {
    rho.ensure_hermitian(1e-9)?;
    if rho.dim() != sys.dim() {
        return Err(Error::InvalidState(format!(
            "state has dimension {}, spin system {}",
            rho.dim(),
            sys.dim()
        )));
    }
    Evolver::new(pulse, sys, mode, relax)?.advance(rho, T::zero(), pulse.duration_s())
}

/// Real tridiagonal chain matrix times `scale`, as a complex matrix.
pub fn scaled_chain_matrix<T: Real>(dim: usize, scale: T) -> CMatrix<T> {
    crate::linalg::complexify(&DMatrix::from_fn(dim, dim, |i, j| {
        if i.abs_diff(j) == 1 {
            scale
        } else {
            T::zero()
        }
    }))
}
