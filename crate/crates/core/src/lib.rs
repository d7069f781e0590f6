// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation of excitation transport on an eight-site chain, emulated by
//! the eight levels of a quadrupolar spin-7/2 nucleus.
//!
//! The pipeline mirrors the NMR experiment: a pseudopure ground state is
//! prepared, a seven-tone pulse makes the rotating-frame Hamiltonian equal
//! to the chain's hopping matrix, and the populations are read back from a
//! small-angle spectrum. [`chain`] provides the exact reference dynamics.
//!
//! Numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix `f64`.

// negated comparisons double as NaN rejection
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod density;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod prep;
pub mod pulse;
pub mod readout;
pub mod relaxation;
pub mod scalar;
pub mod spin;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DensityMatrix = density::DensityMatrix<f64>;
pub type ChainHamiltonian = chain::ChainHamiltonian<f64>;
pub type ChainState = chain::ChainState<f64>;
pub type SpinSystem = spin::SpinSystem<f64>;
pub type TransitionTable = spin::TransitionTable<f64>;
pub type RfHarmonic = pulse::RfHarmonic<f64>;
pub type ShapedPulse = pulse::ShapedPulse<f64>;
pub type EvolutionMode = pulse::EvolutionMode<f64>;
pub type PreparationPulseSpec = prep::PreparationPulseSpec<f64>;
pub type RelaxationModel = relaxation::RelaxationModel<f64>;
pub type AcquisitionConfig = readout::AcquisitionConfig<f64>;
pub type Spectrum = readout::Spectrum<f64>;
pub type ReadoutCalibration = readout::ReadoutCalibration<f64>;
pub type Experiment = experiment::Experiment<f64>;
pub type ExperimentRecord = experiment::ExperimentRecord<f64>;
