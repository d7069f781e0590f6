// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Pseudopure ground-state preparation.
//!
//! A multi-tone pulse drives every transition except `0 <-> 1`. Started
//! from equilibrium, the populations of levels `1..d` converge and cross;
//! stopping the pulse there and crushing coherences leaves a deviation
//! matrix proportional to `|0><0|` plus a uniform background.
//!
//! With transition couplings proportional to the `J_x` elements of a spin
//! `J = I - 1/2`, the driven block is a `pi/2` rotation of a spin-`J`
//! equilibrium and the crossing is exact. For `I = 7/2` those couplings
//! are `sqrt(1/2), sqrt(5/6), 1, 1, sqrt(5/6), sqrt(1/2)`, i.e. about
//! `0.7, 0.9, 1, 1, 0.9, 0.7`.

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::pulse::{EvolutionMode, Evolver, RfHarmonic, ShapedPulse};
use crate::relaxation::RelaxationModel;
use crate::scalar::{lit, max, min, to_f64, Real};
use crate::spin::SpinSystem;

/// Uniform samples of the spread before refinement.
pub const CROSSING_GRID_POINTS: usize = 400;
/// Golden-section stopping width, seconds.
pub const CROSSING_TOLERANCE_S: f64 = 1e-9;
/// Crossing time the default base strength is tuned to.
pub const DEFAULT_CROSSING_S: f64 = 600e-6;

/// Rounded profile quoted for the cesium experiment.
pub const ROUNDED_PROFILE: [f64; 6] = [0.7, 0.9, 1.0, 1.0, 0.9, 0.7];

#[derive(Clone, Debug, PartialEq)]
pub struct PreparationPulseSpec<T: Real> {
    /// Effective couplings of transitions `1..d-1`, relative to each other.
    pub relative_amplitudes: Vec<T>,
    /// rad/s; a relative amplitude of 1 gives a rotating-frame element of `base / 2`.
    pub base_strength: T,
    pub max_duration_s: T,
}

/// `sqrt(J(J+1) - m(m+1))` for the `2J` transitions of spin `J = n/2`.
fn rotation_elements(n_transitions: usize) -> Vec<f64> {
    let j = n_transitions as f64 / 2.0;
    (0..n_transitions)
        .map(|k| {
            let m = j - 1.0 - k as f64;
            (j * (j + 1.0) - m * (m + 1.0)).sqrt()
        })
        .collect()
}

impl<T: Real> PreparationPulseSpec<T> {
    /// Exact-crossing profile, base strength tuned so the crossing falls
    /// at 600 us in the rotating-wave limit.
    pub fn for_system(sys: &SpinSystem<T>) -> Self {
        let raw = rotation_elements(sys.dim() - 2);
        let top = raw.iter().cloned().fold(0.0, f64::max);
        // couplings are (base / top) J_x, a pi/2 turn takes pi top / (2 base)
        let base = std::f64::consts::PI * top / (2.0 * DEFAULT_CROSSING_S);
        Self {
            relative_amplitudes: raw.iter().map(|x| lit(x / top)).collect(),
            base_strength: lit(base),
            max_duration_s: lit(2.5 * DEFAULT_CROSSING_S),
        }
    }

    pub fn with_profile(&self, relative_amplitudes: &[f64]) -> Self {
        Self {
            relative_amplitudes: relative_amplitudes.iter().map(|&x| lit(x)).collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self, sys: &SpinSystem<T>) -> Result<()> {
        if sys.dim() < 3 {
            return Err(Error::InvalidArgument("preparation needs at least three levels".into()));
        }
        if self.relative_amplitudes.len() != sys.dim() - 2 {
            return Err(Error::Configuration(format!(
                "expected {} relative amplitudes, got {}",
                sys.dim() - 2,
                self.relative_amplitudes.len()
            )));
        }
        if self.relative_amplitudes.iter().any(|a| !(*a > T::zero())) {
            return Err(Error::Configuration("relative amplitudes must be positive".into()));
        }
        if !(self.base_strength >= T::zero()) {
            return Err(Error::Configuration("base strength must be non-negative".into()));
        }
        if !(self.max_duration_s > T::zero()) {
            return Err(Error::Configuration("max duration must be positive".into()));
        }
        Ok(())
    }
}

/// Harmonics on transitions `1..d-1` (never `0 <-> 1`), amplitude
/// `base * relative_k / d_k`; duration is the search bound.
pub fn preparation_pulse<T: Real>(spec: &PreparationPulseSpec<T>, sys: &SpinSystem<T>) -> Result<ShapedPulse<T>> {
    spec.validate(sys)?;
    let table = sys.transition_table();
    let harmonics = table.transitions[1..]
        .iter()
        .zip(&spec.relative_amplitudes)
        .map(|(t, &rel)| RfHarmonic {
            frequency_hz: t.offset_hz,
            amplitude: spec.base_strength * rel / t.matrix_element,
            phase: T::zero(),
        })
        .collect();
    ShapedPulse::new(harmonics, spec.max_duration_s)
}

/// `max - min` over the populations of levels `1..d`.
pub fn crossing_spread<T: Real>(rho: &DensityMatrix<T>) -> T {
    let p = rho.populations();
    let (lo, hi) = p[1..]
        .iter()
        .fold((p[1], p[1]), |(lo, hi), &x| (min(lo, x), max(hi, x)));
    hi - lo
}

#[derive(Clone, Debug)]
pub struct Crossing<T: Real> {
    pub duration_s: T,
    pub spread: T,
    /// Pre-crush state at `duration_s`.
    pub state: DensityMatrix<T>,
}

/// Locates the instant where levels `1..d` cross: minimum spread on a
/// uniform grid, then golden-section refinement around it.
pub fn find_crossing<T: Real>(
    spec: &PreparationPulseSpec<T>,
    sys: &SpinSystem<T>,
    mode: EvolutionMode<T>,
    relax: Option<&RelaxationModel<T>>,
) -> Result<Crossing<T>> {
    let pulse = preparation_pulse(spec, sys)?;
    let evolver = Evolver::new(&pulse, sys, mode, relax)?;
    let n = CROSSING_GRID_POINTS;
    let t_max = spec.max_duration_s;
    let grid: Vec<T> = (0..=n).map(|i| t_max * lit(i as f64 / n as f64)).collect();

    let mut states = Vec::with_capacity(n + 1);
    states.push(sys.equilibrium_state());
    for i in 1..=n {
        let next = evolver.advance(&states[i - 1], grid[i - 1], grid[i])?;
        states.push(next);
    }
    let spreads: Vec<T> = states.iter().map(crossing_spread).collect();
    let mut best = 0;
    for (i, s) in spreads.iter().enumerate() {
        if *s < spreads[best] {
            best = i;
        }
    }
    if best == 0 || best == n {
        return Err(Error::NoCrossing {
            max_duration_s: to_f64(t_max),
        });
    }

    let anchor = best - 1;
    let eval = |t: T| -> Result<(T, DensityMatrix<T>)> {
        let s = evolver.advance(&states[anchor], grid[anchor], t)?;
        Ok((crossing_spread(&s), s))
    };
    let inv_phi = lit::<T>((5.0_f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (grid[anchor], grid[best + 1]);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = eval(c)?.0;
    let mut fd = eval(d)?.0;
    while b - a > lit(CROSSING_TOLERANCE_S) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = eval(c)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = eval(d)?.0;
        }
    }
    let mid = (a + b) * lit(0.5);
    let (spread, state) = eval(mid)?;
    let (duration_s, spread, state) = if spreads[best] < spread {
        (grid[best], spreads[best], states[best].clone())
    } else {
        (mid, spread, state)
    };
    Ok(Crossing {
        duration_s,
        spread,
        state,
    })
}

/// Diagonal part of `rho`: the gradient pulse averages every coherence away.
pub fn crush_coherences<T: Real>(rho: &DensityMatrix<T>) -> DensityMatrix<T> {
    rho.diagonal_part()
}

#[derive(Clone, Debug)]
pub struct Pseudopure<T: Real> {
    pub state: DensityMatrix<T>,
    pub crossing: Crossing<T>,
}

/// Equilibrium, preparation pulse up to the crossing, then crush.
pub fn prepare_pseudopure<T: Real>(
    sys: &SpinSystem<T>,
    spec: &PreparationPulseSpec<T>,
    mode: EvolutionMode<T>,
    relax: Option<&RelaxationModel<T>>,
) -> Result<Pseudopure<T>> {
    let crossing = find_crossing(spec, sys, mode, relax)?;
    Ok(Pseudopure {
        state: crush_coherences(&crossing.state),
        crossing,
    })
}

/// Excess of level 0 over the mean of the other levels.
pub fn pseudopure_excess<T: Real>(deviation: &[T]) -> T {
    let rest = &deviation[1..];
    let mean = rest.iter().fold(T::zero(), |acc, &x| acc + x) / lit(rest.len() as f64);
    deviation[0] - mean
}

/// Maps deviation populations onto a unit-trace chain population vector,
/// `(p - mean(p)) / excess + 1/n`.
pub fn deviation_to_chain<T: Real>(deviation: &[T], excess: T) -> Vec<T> {
    let n = lit::<T>(deviation.len() as f64);
    let mean = deviation.iter().fold(T::zero(), |acc, &x| acc + x) / n;
    deviation
        .iter()
        .map(|&p| (p - mean) / excess + T::one() / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::cesium()
    }

    #[test]
    fn default_profile_rounds_to_quoted_values() {
        let spec = PreparationPulseSpec::for_system(&sys());
        assert_eq!(spec.relative_amplitudes.len(), 6);
        for (a, r) in spec.relative_amplitudes.iter().zip(ROUNDED_PROFILE) {
            assert!((a - r).abs() < 0.015, "{a} vs {r}");
        }
        assert!((spec.relative_amplitudes[0] - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!((spec.relative_amplitudes[1] - (5.0_f64 / 6.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn preparation_pulse_skips_transition_zero() {
        let spec = PreparationPulseSpec::for_system(&sys());
        let pulse = preparation_pulse(&spec, &sys()).unwrap();
        let table = sys().transition_table();
        assert_eq!(pulse.harmonics().len(), 6);
        assert!(pulse
            .harmonics()
            .iter()
            .all(|h| h.frequency_hz != table.transitions[0].offset_hz));
        let h = crate::pulse::effective_hamiltonian_rwa(&pulse, &sys()).unwrap();
        assert_eq!(h[(0, 1)].norm(), 0.0);
        for k in 1..7 {
            let rel = h[(k, k + 1)].norm() / (spec.base_strength / 2.0);
            assert!((rel - spec.relative_amplitudes[k - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_amplitude_count_rejected() {
        let spec = PreparationPulseSpec::for_system(&sys()).with_profile(&[1.0, 1.0]);
        assert!(matches!(preparation_pulse(&spec, &sys()), Err(Error::Configuration(_))));
        let spec = PreparationPulseSpec::for_system(&sys()).with_profile(&[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(preparation_pulse(&spec, &sys()).is_err());
    }

    #[test]
    fn zero_strength_has_no_crossing() {
        let mut spec = PreparationPulseSpec::for_system(&sys());
        spec.base_strength = 0.0;
        let err = find_crossing(&spec, &sys(), EvolutionMode::IdealRwa, None).unwrap_err();
        assert!(matches!(err, Error::NoCrossing { .. }));
    }

    #[test]
    fn exact_profile_crosses_at_600_us() {
        let spec = PreparationPulseSpec::for_system(&sys());
        let c = find_crossing(&spec, &sys(), EvolutionMode::IdealRwa, None).unwrap();
        assert!((c.duration_s - 600e-6).abs() < 5e-9, "{}", c.duration_s);
        assert!(c.spread < 1e-4);
        assert!((c.state.populations()[0] - 3.5).abs() < 1e-12);
    }

    #[test]
    fn crush_is_idempotent_and_trace_preserving() {
        let spec = PreparationPulseSpec::for_system(&sys());
        let pulse = preparation_pulse(&spec, &sys()).unwrap().with_duration(2e-4).unwrap();
        let rho =
            crate::pulse::evolve(&sys().equilibrium_state(), &pulse, &sys(), EvolutionMode::IdealRwa, None).unwrap();
        let once = crush_coherences(&rho);
        assert_eq!(crush_coherences(&once), once);
        assert_eq!(once.populations(), rho.populations());
        assert!((once.trace() - rho.trace()).norm() < 1e-15);
        assert_eq!(crush_coherences(&once.diagonal_part()), once);
    }

    #[test]
    fn chain_mapping_of_ideal_pseudopure() {
        let dev = [3.5_f64, -0.5, -0.5, -0.5, -0.5, -0.5, -0.5, -0.5];
        let a = pseudopure_excess(&dev);
        assert_eq!(a, 4.0);
        let chain = deviation_to_chain(&dev, a);
        assert!((chain[0] - 1.0).abs() < 1e-15);
        assert!(chain[1..].iter().all(|p| p.abs() < 1e-15));
    }
}
