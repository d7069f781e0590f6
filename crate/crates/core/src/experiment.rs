// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of the pulse sequence: preparation, gradient crush,
//! phase-cycled chain-emulation pulse, reading pulse and spectral readout,
//! each compared against the exact chain dynamics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{fmt_sig, ChainHamiltonian, ChainPropagator, ChainState, PopulationTable};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::prep::{deviation_to_chain, prepare_pseudopure, pseudopure_excess, Crossing, PreparationPulseSpec};
use crate::pulse::{chain_emulation_pulse, dimensionless_time, duration_for_tau, EvolutionMode};
use crate::readout::{
    measure_integrals, phase_cycled_state, reading_pulse, spectrum, synthesize_fid, write_fid_csv,
    AcquisitionConfig, ReadoutCalibration, Spectrum,
};
use crate::relaxation::{RelaxationModel, DEFAULT_LINEWIDTHS_HZ};
use crate::scalar::{abs, lit, max, to_f64, Real, C};
use crate::spin::SpinSystem;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Ideal,
    Full,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreparationConfig {
    /// Defaults to the exact-crossing profile for the configured spin.
    pub relative_amplitudes: Option<Vec<f64>>,
    pub base_strength_rad_s: Option<f64>,
    pub max_duration_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationConfig {
    /// Decay during pulses. The FID always uses the linewidths.
    pub enabled: bool,
    pub linewidths_hz: Vec<f64>,
    pub t1_s: Option<f64>,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            linewidths_hz: DEFAULT_LINEWIDTHS_HZ.to_vec(),
            t1_s: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSettings {
    pub reading_angle_rad: f64,
    pub broadening_hz: f64,
    pub dwell_s: f64,
    pub n_points: usize,
    pub transients: usize,
    /// Explicit `[lo, hi)` windows; `None` means `splitting / 2` around each line.
    pub peak_windows_hz: Option<Vec<(f64, f64)>>,
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        Self {
            reading_angle_rad: std::f64::consts::PI / 20.0,
            broadening_hz: 100.0,
            dwell_s: 10e-6,
            n_points: 8192,
            transients: 4,
            peak_windows_hz: None,
        }
    }
}

/// JSON-serializable description of a run. All quantities are SI and the
/// field names carry their units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spin: f64,
    pub splitting_hz: f64,
    pub preparation: PreparationConfig,
    pub omega1_rad_s: f64,
    pub mode: ModeName,
    pub full_max_step_s: Option<f64>,
    pub relaxation: RelaxationConfig,
    pub acquisition: AcquisitionSettings,
    /// Explicit grid; when absent `tau_max` and `tau_steps` define one.
    pub tau_grid: Option<Vec<f64>>,
    pub tau_max: f64,
    /// Number of intervals; the grid has `tau_steps + 1` points.
    pub tau_steps: usize,
    /// Longer evolution pulses are run but logged as a warning.
    pub max_evolution_duration_s: f64,
    pub keep_spectra: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spin: 3.5,
            splitting_hz: 6.0e3,
            preparation: PreparationConfig::default(),
            // tau = 1.5 at 600 us
            omega1_rad_s: 5000.0,
            mode: ModeName::Ideal,
            full_max_step_s: None,
            relaxation: RelaxationConfig::default(),
            acquisition: AcquisitionSettings::default(),
            tau_grid: None,
            tau_max: 1.5,
            tau_steps: 30,
            max_evolution_duration_s: 600e-6,
            keep_spectra: false,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        match &self.tau_grid {
            Some(g) => g.clone(),
            None if self.tau_steps == 0 => vec![0.0],
            None => (0..=self.tau_steps)
                .map(|i| self.tau_max * i as f64 / self.tau_steps as f64)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.tau_grid();
        if grid.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Configuration("tau grid must be non-negative".into()));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Configuration("tau grid must be sorted".into()));
        }
        if !(self.tau_max >= 0.0) {
            return Err(Error::Configuration("tau_max must be non-negative".into()));
        }
        if !(self.omega1_rad_s > 0.0) {
            return Err(Error::Configuration("omega1_rad_s must be positive".into()));
        }
        Ok(())
    }

    pub fn evolution_mode<T: Real>(&self) -> EvolutionMode<T> {
        match self.mode {
            ModeName::Ideal => EvolutionMode::IdealRwa,
            ModeName::Full => EvolutionMode::Full {
                max_step_s: self.full_max_step_s.map(lit),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentRecord<T: Real> {
    pub tau: T,
    pub duration_s: T,
    pub recovered: Vec<T>,
    pub oracle: Vec<T>,
    pub abs_error: Vec<T>,
    pub spectrum: Option<Spectrum<T>>,
}

impl<T: Real> ExperimentRecord<T> {
    pub fn max_abs_error(&self) -> T {
        self.abs_error.iter().fold(T::zero(), |acc, e| max(acc, *e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSummary<T: Real> {
    pub max_error: T,
    pub rms_error: T,
}

#[derive(Clone, Debug)]
pub struct Sweep<T: Real> {
    pub records: Vec<ExperimentRecord<T>>,
    pub summary: SweepSummary<T>,
}

impl<T: Real> Sweep<T> {
    /// RMS of `recovered - oracle` for one site across the grid.
    pub fn site_rms(&self, site: usize) -> T {
        if self.records.is_empty() {
            return T::zero();
        }
        let sum = self
            .records
            .iter()
            .fold(T::zero(), |acc, r| acc + r.abs_error[site] * r.abs_error[site]);
        (sum / lit(self.records.len() as f64)).sqrt()
    }

    /// `tau,p0_sim,...,p{n-1}_sim,p0_ref,...,p{n-1}_ref,abs_err_max`
    pub fn write_csv<W: Write>(&self, mut w: W, n_sites: usize) -> Result<()> {
        let mut header = String::from("tau");
        for i in 0..n_sites {
            header.push_str(&format!(",p{i}_sim"));
        }
        for i in 0..n_sites {
            header.push_str(&format!(",p{i}_ref"));
        }
        header.push_str(",abs_err_max");
        writeln!(w, "{header}")?;
        for r in &self.records {
            write!(w, "{}", fmt_sig(to_f64(r.tau)))?;
            for p in r.recovered.iter().chain(&r.oracle) {
                write!(w, ",{}", fmt_sig(to_f64(*p)))?;
            }
            writeln!(w, ",{}", fmt_sig(to_f64(r.max_abs_error())))?;
        }
        Ok(())
    }
}

pub fn summarize<T: Real>(records: &[ExperimentRecord<T>]) -> SweepSummary<T> {
    let mut n = 0usize;
    let mut sq = T::zero();
    let mut worst = T::zero();
    for e in records.iter().flat_map(|r| r.abs_error.iter()) {
        n += 1;
        sq += *e * *e;
        worst = max(worst, *e);
    }
    SweepSummary {
        max_error: worst,
        rms_error: if n == 0 { T::zero() } else { (sq / lit(n as f64)).sqrt() },
    }
}

/// Equilibrium spectrum with its peak integrals.
#[derive(Clone, Debug)]
pub struct EquilibriumReport<T: Real> {
    pub fid: Vec<C<T>>,
    pub spectrum: Spectrum<T>,
    pub integrals: Vec<T>,
    /// Integrals scaled so the central line equals its `d^2` (16 for I = 7/2).
    pub ratios: Vec<T>,
    pub peak_freq_hz: Vec<T>,
}

/// A configured instrument: the pseudopure state and the readout
/// calibration are computed once and shared by every sweep point.
#[derive(Clone, Debug)]
pub struct Experiment<T: Real> {
    cfg: ExperimentConfig,
    sys: SpinSystem<T>,
    mode: EvolutionMode<T>,
    omega1: T,
    linewidths: RelaxationModel<T>,
    pulse_relaxation: Option<RelaxationModel<T>>,
    acq: AcquisitionConfig<T>,
    calibration: ReadoutCalibration<T>,
    prepared: DensityMatrix<T>,
    crossing: Crossing<T>,
    deviation_total: T,
    excess: T,
    oracle: ChainPropagator<T>,
}

impl<T: Real> Experiment<T> {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let sys = SpinSystem::from_spin(cfg.spin, lit(cfg.splitting_hz))?;
        let mode = cfg.evolution_mode();
        let linewidths = RelaxationModel::new(cfg.relaxation.linewidths_hz.iter().map(|&w| lit(w)).collect())?;
        if linewidths.linewidths_hz().len() + 1 != sys.dim() {
            return Err(Error::Configuration(format!(
                "{} linewidths given for {} transitions",
                linewidths.linewidths_hz().len(),
                sys.dim() - 1
            )));
        }
        let pulse_relaxation = if cfg.relaxation.enabled {
            Some(match cfg.relaxation.t1_s {
                Some(t1) => linewidths
                    .clone()
                    .with_t1(lit(t1), sys.equilibrium_state().populations())?,
                None => linewidths.clone(),
            })
        } else {
            None
        };

        let mut acq = AcquisitionConfig::for_system(&sys);
        let a = &cfg.acquisition;
        acq.reading_angle = lit(a.reading_angle_rad);
        acq.broadening_hz = lit(a.broadening_hz);
        acq.dwell_s = lit(a.dwell_s);
        acq.n_points = a.n_points;
        acq.transients = a.transients;
        if let Some(w) = &a.peak_windows_hz {
            acq.peak_windows = w.iter().map(|&(lo, hi)| (lit(lo), lit(hi))).collect();
        }
        acq.validate(&sys)?;

        let mut spec = PreparationPulseSpec::for_system(&sys);
        if let Some(r) = &cfg.preparation.relative_amplitudes {
            spec = spec.with_profile(r);
        }
        if let Some(b) = cfg.preparation.base_strength_rad_s {
            spec.base_strength = lit(b);
        }
        if let Some(m) = cfg.preparation.max_duration_s {
            spec.max_duration_s = lit(m);
        }

        let calibration = ReadoutCalibration::new(&sys, &linewidths, &acq)?;
        let pseudo = prepare_pseudopure(&sys, &spec, mode, pulse_relaxation.as_ref())?;
        info!(
            "pseudopure preparation: crossing at {:.6e} s, spread {:.3e}",
            to_f64(pseudo.crossing.duration_s),
            to_f64(pseudo.crossing.spread)
        );
        let deviation_total = pseudo.state.trace().re;
        // the pseudopure scale is itself measured, from a zero-length evolution
        let ints = measure_integrals(&pseudo.state, &sys, &linewidths, &acq)?;
        let excess = pseudopure_excess(&calibration.populations_from_integrals(&ints, deviation_total)?);
        if !(abs(excess) > lit(1e-6)) {
            return Err(Error::InvalidState("prepared state has no pseudopure excess".into()));
        }
        let oracle = ChainPropagator::new(&ChainHamiltonian::new(sys.dim(), T::one())?)?;
        Ok(Self {
            cfg: cfg.clone(),
            sys,
            mode,
            omega1: lit(cfg.omega1_rad_s),
            linewidths,
            pulse_relaxation,
            acq,
            calibration,
            prepared: pseudo.state,
            crossing: pseudo.crossing,
            deviation_total,
            excess,
            oracle,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn spin_system(&self) -> &SpinSystem<T> {
        &self.sys
    }

    pub fn acquisition(&self) -> &AcquisitionConfig<T> {
        &self.acq
    }

    pub fn calibration(&self) -> &ReadoutCalibration<T> {
        &self.calibration
    }

    pub fn linewidths(&self) -> &RelaxationModel<T> {
        &self.linewidths
    }

    pub fn prepared_state(&self) -> &DensityMatrix<T> {
        &self.prepared
    }

    pub fn crossing(&self) -> &Crossing<T> {
        &self.crossing
    }

    /// Site-0 excess of the prepared deviation state, as read out.
    pub fn pseudopure_excess(&self) -> T {
        self.excess
    }

    /// Sites populations of the prepared state mapped to a chain state.
    pub fn prepared_chain_populations(&self) -> Vec<T> {
        deviation_to_chain(&self.sys.levels_to_sites(&self.prepared.populations()), self.excess)
    }

    pub fn oracle_populations(&self, tau: T) -> Result<Vec<T>> {
        let rho0 = ChainState::localized(self.sys.dim(), 0);
        Ok(self.oracle.propagate(&rho0, tau)?.populations())
    }

    /// Phase-cycled state after an evolution of dimensionless length `tau`.
    pub fn evolved_state(&self, tau: T) -> Result<DensityMatrix<T>> {
        let duration = duration_for_tau(self.omega1, tau)?;
        let pulse = chain_emulation_pulse(&self.sys, self.omega1, duration, T::zero())?;
        phase_cycled_state(
            &self.prepared,
            &pulse,
            &self.sys,
            self.mode,
            self.pulse_relaxation.as_ref(),
            self.acq.transients,
        )
    }

    /// Chain populations reconstructed from the spectrum of `rho`.
    pub fn read_chain_populations(&self, rho: &DensityMatrix<T>) -> Result<(Vec<T>, Spectrum<T>)> {
        let read = reading_pulse(rho, self.acq.reading_angle, &self.sys)?;
        let fid = synthesize_fid(&read, &self.sys, &self.linewidths, &self.acq);
        let spec = spectrum(&fid, self.acq.dwell_s);
        let ints = crate::readout::integrate_peaks(&spec, &self.acq)?;
        let sites = self.calibration.populations_from_integrals(&ints, self.deviation_total)?;
        Ok((deviation_to_chain(&sites, self.excess), spec))
    }

    pub fn run_sequence(&self, tau: T) -> Result<ExperimentRecord<T>> {
        if !(tau >= T::zero()) {
            return Err(Error::InvalidArgument(format!("negative tau {tau}")));
        }
        let duration = duration_for_tau(self.omega1, tau)?;
        if to_f64(duration) > self.cfg.max_evolution_duration_s {
            warn!(
                "evolution pulse of {:.3e} s exceeds the configured {:.3e} s",
                to_f64(duration),
                self.cfg.max_evolution_duration_s
            );
        }
        let evolved = self.evolved_state(tau)?;
        let (recovered, spec) = self.read_chain_populations(&evolved)?;
        let oracle = self.oracle_populations(tau)?;
        let abs_error = recovered.iter().zip(&oracle).map(|(a, b)| abs(*a - *b)).collect();
        debug_assert!(
            abs(dimensionless_time(self.omega1, duration) - tau) <= lit::<T>(16.0) * T::default_epsilon() * max(T::one(), tau)
        );
        Ok(ExperimentRecord {
            tau,
            duration_s: duration,
            recovered,
            oracle,
            abs_error,
            spectrum: self.cfg.keep_spectra.then_some(spec),
        })
    }

    /// Runs every grid point (concurrently) and returns them in grid order.
    pub fn run_sweep(&self, taus: &[T]) -> Result<Sweep<T>> {
        let records = taus
            .par_iter()
            .map(|&tau| self.run_sequence(tau))
            .collect::<Result<Vec<_>>>()?;
        let summary = summarize(&records);
        Ok(Sweep { records, summary })
    }

    pub fn equilibrium_report(&self) -> Result<EquilibriumReport<T>> {
        equilibrium_report(&self.sys, &self.linewidths, &self.acq)
    }
}

pub fn equilibrium_report<T: Real>(
    sys: &SpinSystem<T>,
    linewidths: &RelaxationModel<T>,
    acq: &AcquisitionConfig<T>,
) -> Result<EquilibriumReport<T>> {
    acq.validate(sys)?;
    let read = reading_pulse(&sys.equilibrium_state(), acq.reading_angle, sys)?;
    let fid = synthesize_fid(&read, sys, linewidths, acq);
    let spec = spectrum(&fid, acq.dwell_s);
    let integrals = crate::readout::integrate_peaks(&spec, acq)?;
    let centre = integrals.len() / 2;
    let d_c = sys.transition_table().transitions[centre].matrix_element;
    let ratios = integrals
        .iter()
        .map(|i| *i / integrals[centre] * d_c * d_c)
        .collect();
    let peak_freq_hz = acq
        .peak_windows
        .iter()
        .map(|&(lo, hi)| spec.argmax_in(lo, hi).map_or(T::zero(), |i| spec.freq_hz[i]))
        .collect();
    Ok(EquilibriumReport {
        fid,
        spectrum: spec,
        integrals,
        ratios,
        peak_freq_hz,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes `equilibrium_spectrum.csv`, `equilibrium_fid.csv` and
/// `equilibrium_peaks.csv` into `dir`.
pub fn emit_equilibrium_report<T: Real>(
    report: &EquilibriumReport<T>,
    sys: &SpinSystem<T>,
    acq: &AcquisitionConfig<T>,
    dir: &Path,
) -> Result<()> {
    report.spectrum.write_csv(create(dir, "equilibrium_spectrum.csv")?)?;
    write_fid_csv(&report.fid, acq.dwell_s, create(dir, "equilibrium_fid.csv")?)?;
    let mut w = create(dir, "equilibrium_peaks.csv")?;
    writeln!(w, "line,offset_hz,peak_hz,integral,ratio")?;
    for (k, t) in sys.transition_table().transitions.iter().enumerate() {
        writeln!(
            w,
            "{k},{},{},{},{}",
            fmt_sig(to_f64(t.offset_hz)),
            fmt_sig(to_f64(report.peak_freq_hz[k])),
            fmt_sig(to_f64(report.integrals[k])),
            fmt_sig(to_f64(report.ratios[k]))
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<T: Real>(sweep: &Sweep<T>, n_sites: usize, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("sweep.csv");
    let mut w = create(dir, "sweep.csv")?;
    sweep.write_csv(&mut w, n_sites)?;
    w.flush()?;
    for r in &sweep.records {
        if let Some(spec) = &r.spectrum {
            let name = format!("spectrum_tau_{:.4}.csv", to_f64(r.tau));
            spec.write_csv(create(dir, &name)?)?;
        }
    }
    Ok(path)
}

pub fn write_oracle<T: Real>(table: &PopulationTable<T>, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("oracle.csv");
    let mut w = create(dir, "oracle.csv")?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_json() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.tau_grid().len(), 31);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json_str(r#"{"mode": "full", "tau_grid": [0.0, 0.5]}"#).unwrap();
        assert_eq!(cfg.mode, ModeName::Full);
        assert_eq!(cfg.splitting_hz, 6.0e3);
        assert_eq!(cfg.tau_grid(), vec![0.0, 0.5]);
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(ExperimentConfig::from_json_str(r#"{"tau_grid": [0.5, 0.1]}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"tau_grid": [-0.1]}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"omega1_rad_s": 0}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.acquisition.transients = 3;
        assert!(matches!(Experiment::<f64>::new(&cfg), Err(Error::Configuration(_))));
    }

    #[test]
    fn empty_sweep() {
        let exp = Experiment::<f64>::new(&ExperimentConfig::default()).unwrap();
        let sweep = exp.run_sweep(&[]).unwrap();
        assert!(sweep.records.is_empty());
        assert_eq!(sweep.summary, SweepSummary { max_error: 0.0, rms_error: 0.0 });
        let mut buf = Vec::new();
        sweep.write_csv(&mut buf, 8).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn zero_tau_recovers_initial_site() {
        let exp = Experiment::<f64>::new(&ExperimentConfig::default()).unwrap();
        let rec = exp.run_sequence(0.0).unwrap();
        assert!((rec.oracle[0] - 1.0).abs() < 1e-12);
        assert!((rec.recovered[0] - 1.0).abs() < 1e-3);
        assert!(rec.recovered[1..].iter().all(|p| p.abs() < 1e-3));
        assert!(exp.run_sequence(-1.0).is_err());
    }
}
