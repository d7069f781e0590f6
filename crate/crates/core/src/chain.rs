// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact single-excitation dynamics of a uniform nearest-neighbour chain.
//!
//! The Hamiltonian is diagonalized once; every later time point is a
//! product of the stored eigenbasis with a diagonal phase, so the
//! reference curves carry no integrator error.

use std::io::Write;

use nalgebra::DMatrix;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{complexify, HermitianEigen};
use crate::scalar::{lit, to_f64, Real, C};

pub const DEFAULT_SITES: usize = 8;

/// Tridiagonal hopping Hamiltonian with zero on-site energy.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainHamiltonian<T: Real> {
    coupling: T,
    matrix: DMatrix<T>,
}

impl<T: Real> ChainHamiltonian<T> {
    pub fn new(n_sites: usize, coupling: T) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidArgument(format!(
                "a chain needs at least two sites, got {n_sites}"
            )));
        }
        let matrix = DMatrix::from_fn(n_sites, n_sites, |i, j| {
            if i.abs_diff(j) == 1 {
                coupling
            } else {
                T::zero()
            }
        });
        Ok(Self { coupling, matrix })
    }

    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }
}

/// Chain density matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState<T: Real> {
    rho: DensityMatrix<T>,
}

impl<T: Real> ChainState<T> {
    pub fn new(rho: DensityMatrix<T>) -> Result<Self> {
        rho.ensure_hermitian(1e-9)?;
        let tr = rho.trace();
        if crate::scalar::cabs(tr - C::new(T::one(), T::zero())) > lit(1e-9) {
            return Err(Error::InvalidState(format!("chain state trace is {tr}, expected 1")));
        }
        Ok(Self { rho })
    }

    /// Excitation localized on `site`.
    pub fn localized(n_sites: usize, site: usize) -> Self {
        Self {
            rho: DensityMatrix::basis_projector(n_sites, site),
        }
    }

    pub fn density(&self) -> &DensityMatrix<T> {
        &self.rho
    }

    pub fn populations(&self) -> Vec<T> {
        self.rho.populations()
    }
}

/// Diagonalized chain Hamiltonian, reusable for any number of time points.
#[derive(Clone, Debug)]
pub struct ChainPropagator<T: Real> {
    eigen: HermitianEigen<T>,
}

impl<T: Real> ChainPropagator<T> {
    pub fn new(h: &ChainHamiltonian<T>) -> Result<Self> {
        Ok(Self {
            eigen: HermitianEigen::new(&complexify(h.matrix()))?,
        })
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eigen.values.iter().copied().collect()
    }

    pub fn eigen(&self) -> &HermitianEigen<T> {
        &self.eigen
    }

    /// `rho(tau) = U rho0 U^dagger`, `U = exp(-i H tau)`.
    pub fn propagate(&self, rho0: &ChainState<T>, tau: T) -> Result<ChainState<T>> {
        if tau < T::zero() {
            return Err(Error::InvalidArgument(format!("negative time {tau}")));
        }
        if rho0.rho.dim() != self.eigen.values.len() {
            return Err(Error::InvalidState("state and Hamiltonian dimensions differ".into()));
        }
        let u = self.eigen.propagator(tau);
        Ok(ChainState {
            rho: rho0.rho.conjugated(&u),
        })
    }
}

pub fn build_chain_hamiltonian<T: Real>(n_sites: usize, coupling: T) -> Result<ChainHamiltonian<T>> {
    ChainHamiltonian::new(n_sites, coupling)
}

pub fn propagate_exact<T: Real>(
    h: &ChainHamiltonian<T>,
    rho0: &ChainState<T>,
    tau: T,
) -> Result<ChainState<T>> {
    rho0.rho.ensure_hermitian(1e-9)?;
    ChainPropagator::new(h)?.propagate(rho0, tau)
}

/// Site populations versus dimensionless time.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTable<T: Real> {
    pub taus: Vec<T>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> PopulationTable<T> {
    /// CSV with header `tau,p0,...,p{n-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.rows.first().map_or(DEFAULT_SITES, Vec::len);
        let mut header = String::from("tau");
        for i in 0..n {
            header.push_str(&format!(",p{i}"));
        }
        writeln!(w, "{header}")?;
        for (tau, row) in self.taus.iter().zip(&self.rows) {
            write!(w, "{}", fmt_sig(to_f64(*tau)))?;
            for p in row {
                write!(w, ",{}", fmt_sig(to_f64(*p)))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// 15 significant digits in scientific notation.
pub(crate) fn fmt_sig(x: f64) -> String {
    format!("{x:.14e}")
}

/// Populations of the 8-site, unit-coupling chain started at site 0.
pub fn reference_populations<T: Real>(tau_grid: &[T]) -> Result<PopulationTable<T>> {
    reference_populations_for(DEFAULT_SITES, T::one(), 0, tau_grid)
}

pub fn reference_populations_for<T: Real>(
    n_sites: usize,
    coupling: T,
    start_site: usize,
    tau_grid: &[T],
) -> Result<PopulationTable<T>> {
    let h = ChainHamiltonian::new(n_sites, coupling)?;
    let prop = ChainPropagator::new(&h)?;
    let rho0 = ChainState::localized(n_sites, start_site);
    let rows = tau_grid
        .iter()
        .map(|&tau| prop.propagate(&rho0, tau).map(|s| s.populations()))
        .collect::<Result<Vec<_>>>()?;
    Ok(PopulationTable {
        taus: tau_grid.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_site_matrix_matches_hopping_pattern() {
        let h = build_chain_hamiltonian(8, 1.0_f64).unwrap();
        for i in 0..8_usize {
            for j in 0..8_usize {
                let want = if i.abs_diff(j) == 1 { 1.0 } else { 0.0 };
                assert_eq!(h.matrix()[(i, j)], want);
                assert_eq!(h.matrix()[(i, j)], h.matrix()[(7 - i, 7 - j)]);
            }
        }
    }

    #[test]
    fn two_site_chain() {
        let h = build_chain_hamiltonian(2, 1.0_f64).unwrap();
        assert_eq!(h.matrix().as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn too_short_chain_rejected() {
        assert!(matches!(build_chain_hamiltonian(1, 1.0_f64), Err(Error::InvalidArgument(_))));
        assert!(build_chain_hamiltonian::<f64>(0, 1.0).is_err());
    }

    #[test]
    fn eigenpairs_have_small_residual() {
        let h = build_chain_hamiltonian(8, 1.0_f64).unwrap();
        let p = ChainPropagator::new(&h).unwrap();
        assert!(p.eigen().residual(&complexify(h.matrix())) < 1e-10);
    }

    #[test]
    fn zero_time_is_identity() {
        let h = build_chain_hamiltonian(8, 1.0_f64).unwrap();
        let rho0 = ChainState::localized(8, 3);
        let out = propagate_exact(&h, &rho0, 0.0).unwrap();
        assert!(out.density().max_abs_diff(rho0.density()) < 1e-14);
    }

    #[test]
    fn non_hermitian_initial_state_rejected() {
        let mut m = DensityMatrix::<f64>::basis_projector(2, 0).into_matrix();
        m[(0, 1)] = C::new(0.5, 0.0);
        let rho = ChainState {
            rho: DensityMatrix::from_matrix(m),
        };
        let h = build_chain_hamiltonian(2, 1.0).unwrap();
        assert!(matches!(propagate_exact(&h, &rho, 1.0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn negative_time_rejected() {
        let h = build_chain_hamiltonian(4, 1.0_f64).unwrap();
        let rho = ChainState::localized(4, 0);
        assert!(propagate_exact(&h, &rho, -0.1).is_err());
    }

    #[test]
    fn csv_header_and_precision() {
        let table = reference_populations(&[0.0_f64, 0.5]).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "tau,p0,p1,p2,p3,p4,p5,p6,p7");
        let row: Vec<f64> = lines
            .nth(1)
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(row.len(), 9);
        assert!((row[1] - table.rows[1][0]).abs() < 1e-14);
    }
}
