// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Detection: phase cycling, small-angle reading pulse, FID synthesis,
//! Fourier transform, peak integration and population reconstruction.
//!
//! A diagonal state read with a small flip angle `theta` produces on line
//! `k` a coherence `-i (theta/2) d_k^2 (p_k - p_{k+1})` to first order.
//! At `theta = pi/20` the higher orders are not negligible for states far
//! from equilibrium, and the Lorentzian tails of neighbouring lines reach
//! into each other's windows. Both effects are linear in the populations,
//! so [`ReadoutCalibration`] pushes every basis population through the
//! exact forward chain once and inverts the resulting response matrix.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::chain::fmt_sig;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::HermitianEigen;
use crate::pulse::{evolve, EvolutionMode, ShapedPulse};
use crate::relaxation::RelaxationModel;
use crate::scalar::{abs, cis, lit, to_f64, Real, C};
use crate::spin::SpinSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionConfig<T: Real> {
    pub reading_angle: T,
    /// Extra exponential line broadening, Hz (FWHM).
    pub broadening_hz: T,
    pub dwell_s: T,
    pub n_points: usize,
    pub transients: usize,
    /// One `[lo, hi)` interval per transition, Hz.
    pub peak_windows: Vec<(T, T)>,
}

impl<T: Real> AcquisitionConfig<T> {
    /// `pi/20` reading pulse, 100 Hz broadening, 10 us dwell, 8192 points,
    /// 4 transients, windows of half-width `splitting / 2` around each line.
    pub fn for_system(sys: &SpinSystem<T>) -> Self {
        Self {
            reading_angle: T::pi() / lit(20.0),
            broadening_hz: lit(100.0),
            dwell_s: lit(10e-6),
            n_points: 8192,
            transients: 4,
            peak_windows: default_windows(sys),
        }
    }

    pub fn validate(&self, sys: &SpinSystem<T>) -> Result<()> {
        if self.transients == 0 || !self.transients.is_multiple_of(4) {
            return Err(Error::Configuration(format!(
                "transients must be a positive multiple of 4, got {}",
                self.transients
            )));
        }
        if self.n_points < 2 {
            return Err(Error::Configuration("need at least two FID points".into()));
        }
        if !(self.dwell_s > T::zero()) {
            return Err(Error::Configuration("dwell time must be positive".into()));
        }
        if !(self.broadening_hz >= T::zero()) {
            return Err(Error::Configuration("broadening must be non-negative".into()));
        }
        let nyquist = T::one() / (lit::<T>(2.0) * self.dwell_s);
        let table = sys.transition_table();
        if table.offsets().iter().any(|f| abs(*f) >= nyquist) {
            return Err(Error::Configuration(format!(
                "spectral width {} Hz does not cover every transition",
                to_f64(T::one() / self.dwell_s)
            )));
        }
        if self.peak_windows.len() != table.len() {
            return Err(Error::Configuration(format!(
                "expected {} peak windows, got {}",
                table.len(),
                self.peak_windows.len()
            )));
        }
        check_windows(&self.peak_windows)?;
        for (t, (lo, hi)) in table.transitions.iter().zip(&self.peak_windows) {
            if !(t.offset_hz >= *lo && t.offset_hz < *hi) {
                return Err(Error::Configuration(format!(
                    "window [{lo}, {hi}) does not contain line {}",
                    t.index
                )));
            }
        }
        Ok(())
    }
}

pub fn default_windows<T: Real>(sys: &SpinSystem<T>) -> Vec<(T, T)> {
    let half = sys.splitting_hz() * lit(0.5);
    let offsets = sys.transition_table().offsets();
    let mut windows: Vec<(T, T)> = Vec::with_capacity(offsets.len());
    for f in offsets {
        // neighbouring windows share their boundary exactly
        let lo = windows.last().map_or(f - half, |w| w.1);
        windows.push((lo, f + half));
    }
    windows
}

fn check_windows<T: Real>(windows: &[(T, T)]) -> Result<()> {
    for (i, (lo, hi)) in windows.iter().enumerate() {
        if !(hi > lo) {
            return Err(Error::Configuration(format!("peak window {i} is empty")));
        }
        for (j, (lo2, hi2)) in windows.iter().enumerate().skip(i + 1) {
            if lo < hi2 && lo2 < hi {
                return Err(Error::Configuration(format!("peak windows {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Real> {
    pub freq_hz: Vec<T>,
    pub intensity: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }

    pub fn bin_width_hz(&self) -> T {
        self.freq_hz[1] - self.freq_hz[0]
    }

    /// Two-column CSV `freq_hz,intensity`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_hz,intensity")?;
        for (f, y) in self.freq_hz.iter().zip(&self.intensity) {
            writeln!(w, "{},{}", fmt_sig(to_f64(*f)), fmt_sig(to_f64(*y)))?;
        }
        Ok(())
    }

    /// Index of the largest intensity inside `[lo, hi)`.
    pub fn argmax_in(&self, lo: T, hi: T) -> Option<usize> {
        (0..self.len())
            .filter(|&i| self.freq_hz[i] >= lo && self.freq_hz[i] < hi)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if self.intensity[b] >= self.intensity[i] => Some(b),
                _ => Some(i),
            })
    }
}

/// Three-column CSV `t_s,re,im`.
pub fn write_fid_csv<T: Real, W: Write>(fid: &[C<T>], dwell_s: T, mut w: W) -> Result<()> {
    writeln!(w, "t_s,re,im")?;
    for (n, s) in fid.iter().enumerate() {
        let t = to_f64(dwell_s) * n as f64;
        writeln!(w, "{},{},{}", fmt_sig(t), fmt_sig(to_f64(s.re)), fmt_sig(to_f64(s.im)))?;
    }
    Ok(())
}

/// `exp(-i angle Ix) rho exp(+i angle Ix)`.
pub fn reading_pulse<T: Real>(rho: &DensityMatrix<T>, angle: T, sys: &SpinSystem<T>) -> Result<DensityMatrix<T>> {
    let ix = sys.operators().ix;
    let u = HermitianEigen::new(&ix)?.propagator(angle);
    Ok(rho.conjugated(&u))
}

/// Average over `transients` runs whose evolution-pulse phase advances by
/// `pi/2` per run relative to the fixed reading pulse.
pub fn phase_cycled_state<T: Real>(
    rho_prepared: &DensityMatrix<T>,
    pulse: &ShapedPulse<T>,
    sys: &SpinSystem<T>,
    mode: EvolutionMode<T>,
    relax: Option<&RelaxationModel<T>>,
    transients: usize,
) -> Result<DensityMatrix<T>> {
    if transients == 0 || !transients.is_multiple_of(4) {
        return Err(Error::Configuration(format!(
            "transients must be a positive multiple of 4, got {transients}"
        )));
    }
    // every block of four transients repeats the same four phases
    let runs = (0..4)
        .into_par_iter()
        .map(|c| {
            let shifted = pulse.phase_shifted(T::frac_pi_2() * lit(c as f64));
            evolve(rho_prepared, &shifted, sys, mode, relax)
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = runs
        .iter()
        .skip(1)
        .fold(runs[0].clone(), |acc, r| &acc + r);
    Ok(sum.scaled(lit(0.25)))
}

/// `s(t_n) = sum_k c_k exp(i 2 pi f_k t_n) exp(-(pi FWHM_k + pi broadening) t_n)`,
/// `c_k = d_k rho_{k+1,k}`.
pub fn synthesize_fid<T: Real>(
    rho: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    relax: &RelaxationModel<T>,
    acq: &AcquisitionConfig<T>,
) -> Vec<C<T>> {
    let table = sys.transition_table();
    let m = rho.matrix();
    let lines: Vec<(C<T>, T, T)> = table
        .transitions
        .iter()
        .map(|t| {
            let k = t.index;
            let amp = m[(k + 1, k)] * t.matrix_element;
            let rate = relax.single_quantum_rate(k) + T::pi() * acq.broadening_hz;
            (amp, T::two_pi() * t.offset_hz, rate)
        })
        .collect();
    let mut fid = vec![C::new(T::zero(), T::zero()); acq.n_points];
    for (amp, omega, rate) in lines {
        if amp.norm_sqr() == T::zero() {
            continue;
        }
        for (n, s) in fid.iter_mut().enumerate() {
            let t = acq.dwell_s * lit(n as f64);
            *s += amp * cis(omega * t) * (-rate * t).exp();
        }
    }
    fid
}

/// Unnormalized DFT, reordered so the zero frequency sits at `n / 2`.
pub fn centered_dft<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    let n = x.len();
    let mut buf = x.to_vec();
    FftPlanner::<T>::new().plan_fft_forward(n).process(&mut buf);
    let shift = n / 2;
    (0..n).map(|j| buf[(j + n - shift) % n]).collect()
}

/// Absorption-mode spectrum. The first FID point is halved (trapezoid
/// rule for the one-sided transform), the transform is scaled by the
/// dwell time, and the `-i` of the linear response is removed by a fixed
/// `+pi/2` zero-order phase.
pub fn spectrum<T: Real>(fid: &[C<T>], dwell_s: T) -> Spectrum<T> {
    let n = fid.len();
    if n == 0 {
        return Spectrum {
            freq_hz: vec![],
            intensity: vec![],
        };
    }
    let mut x = fid.to_vec();
    x[0] *= lit::<T>(0.5);
    let phase = C::new(T::zero(), dwell_s);
    let spec = centered_dft(&x);
    let df = T::one() / (lit::<T>(n as f64) * dwell_s);
    let freq_hz = (0..n)
        .map(|j| df * (lit::<T>(j as f64) - lit((n / 2) as f64)))
        .collect();
    let intensity = spec.iter().map(|z| (*z * phase).re).collect();
    Spectrum { freq_hz, intensity }
}

/// Trapezoidal integral of the intensity over each `[lo, hi)` window.
pub fn integrate_peaks<T: Real>(spec: &Spectrum<T>, acq: &AcquisitionConfig<T>) -> Result<Vec<T>> {
    check_windows(&acq.peak_windows)?;
    Ok(acq
        .peak_windows
        .iter()
        .map(|&(lo, hi)| {
            let idx: Vec<usize> = (0..spec.len())
                .filter(|&i| spec.freq_hz[i] >= lo && spec.freq_hz[i] < hi)
                .collect();
            idx.windows(2).fold(T::zero(), |acc, w| {
                let (a, b) = (w[0], w[1]);
                acc + (spec.intensity[a] + spec.intensity[b]) * (spec.freq_hz[b] - spec.freq_hz[a]) * lit(0.5)
            })
        })
        .collect())
}

/// Reading pulse, FID, spectrum and integration in one go.
pub fn measure_integrals<T: Real>(
    rho: &DensityMatrix<T>,
    sys: &SpinSystem<T>,
    relax: &RelaxationModel<T>,
    acq: &AcquisitionConfig<T>,
) -> Result<Vec<T>> {
    let read = reading_pulse(rho, acq.reading_angle, sys)?;
    let fid = synthesize_fid(&read, sys, relax, acq);
    integrate_peaks(&spectrum(&fid, acq.dwell_s), acq)
}

/// Linear map from level populations to peak integrals, and its inverse.
#[derive(Clone, Debug)]
pub struct ReadoutCalibration<T: Real> {
    sys: SpinSystem<T>,
    /// `response[(k, j)]`: integral of window `k` for unit population on level `j`.
    response: DMatrix<T>,
    /// Integral per unit `d_k^2 (p_k - p_{k+1})`, averaged over the equilibrium lines.
    equilibrium_gain: T,
    equilibrium_integrals: Vec<T>,
}

impl<T: Real> ReadoutCalibration<T> {
    pub fn new(sys: &SpinSystem<T>, relax: &RelaxationModel<T>, acq: &AcquisitionConfig<T>) -> Result<Self> {
        acq.validate(sys)?;
        let d = sys.dim();
        let columns = (0..d)
            .into_par_iter()
            .map(|j| measure_integrals(&DensityMatrix::basis_projector(d, j), sys, relax, acq))
            .collect::<Result<Vec<_>>>()?;
        let lines = d - 1;
        let response = DMatrix::from_fn(lines, d, |k, j| columns[j][k]);
        let eq = sys.equilibrium_state().populations();
        let equilibrium_integrals: Vec<T> = (&response * DVector::from_vec(eq)).iter().copied().collect();
        let d2: Vec<T> = sys
            .transition_table()
            .matrix_elements()
            .iter()
            .map(|x| *x * *x)
            .collect();
        let equilibrium_gain = equilibrium_integrals
            .iter()
            .zip(&d2)
            .fold(T::zero(), |acc, (i, w)| acc + *i / *w)
            / lit(lines as f64);
        Ok(Self {
            sys: sys.clone(),
            response,
            equilibrium_gain,
            equilibrium_integrals,
        })
    }

    pub fn response(&self) -> &DMatrix<T> {
        &self.response
    }

    pub fn equilibrium_integrals(&self) -> &[T] {
        &self.equilibrium_integrals
    }

    /// Predicted integrals for a diagonal state.
    pub fn forward(&self, level_populations: &[T]) -> Vec<T> {
        (&self.response * DVector::from_column_slice(level_populations))
            .iter()
            .copied()
            .collect()
    }

    /// Level populations from integrals, with `sum p = total` fixing the
    /// component the spectrum cannot see.
    pub fn level_populations(&self, integrals: &[T], total: T) -> Result<Vec<T>> {
        let d = self.sys.dim();
        if integrals.len() != d - 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} integrals, got {}",
                d - 1,
                integrals.len()
            )));
        }
        let a = DMatrix::from_fn(d, d, |k, j| if k + 1 < d { self.response[(k, j)] } else { T::one() });
        let mut b = DVector::from_column_slice(integrals).push(total);
        if !a.lu().solve_mut(&mut b) {
            return Err(Error::Numerical("readout response matrix is singular".into()));
        }
        Ok(b.iter().copied().collect())
    }

    /// Populations in chain-site order.
    pub fn populations_from_integrals(&self, integrals: &[T], total: T) -> Result<Vec<T>> {
        Ok(self.sys.levels_to_sites(&self.level_populations(integrals, total)?))
    }

    /// First-order estimate: `p_k - p_{k+1} = I_k / (d_k^2 g)` with the
    /// single gain `g` fitted to equilibrium. Ignores higher orders of
    /// the reading pulse and line overlap.
    pub fn linear_response_populations(&self, integrals: &[T], total: T) -> Vec<T> {
        let d = self.sys.dim();
        let elems = self.sys.transition_table().matrix_elements();
        let mut cumulative = vec![T::zero(); d];
        for k in 0..d - 1 {
            let delta = integrals[k] / (elems[k] * elems[k] * self.equilibrium_gain);
            cumulative[k + 1] = cumulative[k] + delta;
        }
        let sum = cumulative.iter().fold(T::zero(), |acc, x| acc + *x);
        let p0 = (total + sum) / lit(d as f64);
        self.sys
            .levels_to_sites(&cumulative.iter().map(|s| p0 - *s).collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::default_linewidths;

    fn setup() -> (SpinSystem<f64>, RelaxationModel<f64>, AcquisitionConfig<f64>) {
        let sys = SpinSystem::cesium();
        let relax = RelaxationModel::new(default_linewidths()).unwrap();
        let acq = AcquisitionConfig::for_system(&sys);
        (sys, relax, acq)
    }

    #[test]
    fn defaults_validate() {
        let (sys, _, acq) = setup();
        acq.validate(&sys).unwrap();
        assert!((acq.reading_angle - std::f64::consts::PI / 20.0).abs() < 1e-15);
        assert!((acq.peak_windows[0].1 - acq.peak_windows[1].0).abs() < 1e-9);
    }

    #[test]
    fn bad_acquisition_rejected() {
        let (sys, _, acq) = setup();
        let mut a = acq.clone();
        a.transients = 6;
        assert!(a.validate(&sys).is_err());
        let mut a = acq.clone();
        a.dwell_s = 50e-6;
        assert!(a.validate(&sys).is_err());
        let mut a = acq.clone();
        a.peak_windows[1].0 -= 100.0;
        assert!(matches!(a.validate(&sys), Err(Error::Configuration(_))));
        let spec = Spectrum {
            freq_hz: vec![0.0, 1.0],
            intensity: vec![0.0, 0.0],
        };
        assert!(integrate_peaks(&spec, &a).is_err());
    }

    #[test]
    fn zero_angle_is_identity() {
        let (sys, _, _) = setup();
        let eq = sys.equilibrium_state();
        assert!(reading_pulse(&eq, 0.0, &sys).unwrap().max_abs_diff(&eq) < 1e-14);
    }

    #[test]
    fn pi_pulse_inverts_spin_half() {
        let sys = SpinSystem::<f64>::new(1, 1000.0).unwrap();
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]);
        let out = reading_pulse(&rho, std::f64::consts::PI, &sys).unwrap();
        let p = out.populations();
        assert!((p[0] - 0.1).abs() < 1e-12 && (p[1] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn diagonal_state_gives_no_signal() {
        let (sys, relax, acq) = setup();
        let fid = synthesize_fid(&sys.equilibrium_state(), &sys, &relax, &acq);
        assert!(fid.iter().all(|s| s.norm() == 0.0));
        let spec = spectrum(&fid, acq.dwell_s);
        assert!(spec.intensity.iter().all(|y| *y == 0.0));
        assert!(integrate_peaks(&spec, &acq).unwrap().iter().all(|y| *y == 0.0));
    }

    #[test]
    fn fid_envelope_bounded() {
        let (sys, relax, acq) = setup();
        let read = reading_pulse(&sys.equilibrium_state(), acq.reading_angle, &sys).unwrap();
        let fid = synthesize_fid(&read, &sys, &relax, &acq);
        let m = read.matrix();
        let c: Vec<C<f64>> = (0..7)
            .map(|k| m[(k + 1, k)] * sys.transition_table().transitions[k].matrix_element)
            .collect();
        let s0: C<f64> = c.iter().sum();
        assert!((fid[0] - s0).norm() < 1e-14);
        let total: f64 = c.iter().map(|z| z.norm()).sum();
        let slowest = std::f64::consts::PI * (10.0 + 100.0);
        for (n, s) in fid.iter().enumerate() {
            let t = n as f64 * acq.dwell_s;
            assert!(s.norm() <= total * (-slowest * t).exp() * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn equilibrium_lines_sit_on_transition_offsets() {
        let (sys, relax, acq) = setup();
        let read = reading_pulse(&sys.equilibrium_state(), acq.reading_angle, &sys).unwrap();
        let spec = spectrum(&synthesize_fid(&read, &sys, &relax, &acq), acq.dwell_s);
        let peaks: Vec<f64> = acq
            .peak_windows
            .iter()
            .map(|&(lo, hi)| spec.freq_hz[spec.argmax_in(lo, hi).unwrap()])
            .collect();
        for k in 0..6 {
            assert!((peaks[k + 1] - peaks[k] - 6.0e3).abs() <= spec.bin_width_hz() + 1e-9);
        }
    }

    #[test]
    fn calibration_round_trip_is_exact_for_diagonal_states() {
        let (sys, relax, acq) = setup();
        let cal = ReadoutCalibration::new(&sys, &relax, &acq).unwrap();
        let p = [0.3, -1.2, 0.8, 0.0, 0.25, -0.5, 0.1, 0.25];
        let total: f64 = p.iter().sum();
        let ints = measure_integrals(&DensityMatrix::from_diagonal(&p), &sys, &relax, &acq).unwrap();
        let back = cal.populations_from_integrals(&ints, total).unwrap();
        for (a, b) in back.iter().zip(p) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(cal.level_populations(&ints[..3], 0.0).is_err());
    }

    #[test]
    fn linear_estimate_exact_on_equilibrium_only() {
        let (sys, relax, acq) = setup();
        let cal = ReadoutCalibration::new(&sys, &relax, &acq).unwrap();
        let eq = sys.equilibrium_state().populations();
        let lin = cal.linear_response_populations(&cal.forward(&eq), 0.0);
        for (a, b) in lin.iter().zip(&eq) {
            assert!((a - b).abs() < 0.05);
        }
        // far from equilibrium the first-order estimate is visibly off
        let pp = [3.5, -0.5, -0.5, -0.5, -0.5, -0.5, -0.5, -0.5];
        let lin = cal.linear_response_populations(&cal.forward(&pp), 0.0);
        let worst = lin.iter().zip(pp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst > 0.01);
    }
}
