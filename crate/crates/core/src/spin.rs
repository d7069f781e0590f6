// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Quadrupolar spin register: angular-momentum operators, level scheme,
//! single-quantum transition table and the high-temperature equilibrium.
//!
//! Matrix row `n` holds the level with magnetic quantum number
//! `m = I - n`, and chain site `n` is identified with row `n`. Site 0 is
//! therefore `m = I`, the level whose population the preparation pulse
//! leaves alone.

use nalgebra::DMatrix;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{complexify, CMatrix};
use crate::scalar::{lit, Real, C};

/// Angular-momentum operators in the `|I, m>` basis ordered `m = I .. -I`.
#[derive(Clone, Debug)]
pub struct SpinOperators<T: Real> {
    pub iz: CMatrix<T>,
    pub iplus: CMatrix<T>,
    pub iminus: CMatrix<T>,
    pub ix: CMatrix<T>,
    pub iy: CMatrix<T>,
}

/// `<I, m-1| I- |I, m> = sqrt((I+m)(I-m+1))`, with `two_i = 2I`, `two_m = 2m`.
fn lowering_element(two_i: u32, two_m: i64) -> f64 {
    let i = f64::from(two_i) / 2.0;
    let m = two_m as f64 / 2.0;
    ((i + m) * (i - m + 1.0)).sqrt()
}

/// Builds the operators for spin `two_i / 2`.
pub fn spin_operators<T: Real>(two_i: u32) -> SpinOperators<T> {
    let d = two_i as usize + 1;
    let mut iz = DMatrix::<T>::zeros(d, d);
    let mut iplus = DMatrix::<T>::zeros(d, d);
    for n in 0..d {
        let two_m = i64::from(two_i) - 2 * n as i64;
        iz[(n, n)] = lit(two_m as f64 / 2.0);
        if n + 1 < d {
            // <m| I+ |m-1> equals <m-1| I- |m>
            iplus[(n, n + 1)] = lit(lowering_element(two_i, two_m));
        }
    }
    let iz = complexify(&iz);
    let iplus = complexify(&iplus);
    let iminus = iplus.adjoint();
    let half = lit::<T>(0.5);
    let ix = (&iplus + &iminus).map(|z| z * half);
    let iy = (&iplus - &iminus).map(|z| z * C::new(T::zero(), -half));
    SpinOperators {
        iz,
        iplus,
        iminus,
        ix,
        iy,
    }
}

/// Parses a half-integer spin quantum number into `2I`.
pub fn twice_spin(spin: f64) -> Result<u32> {
    let two = 2.0 * spin;
    if !(two.is_finite() && two >= 0.0 && (two - two.round()).abs() < 1e-9 && two <= 64.0) {
        return Err(Error::InvalidArgument(format!(
            "spin quantum number {spin} is not a non-negative half-integer"
        )));
    }
    Ok(two.round() as u32)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition<T: Real> {
    /// Lower row index `k`; the transition couples rows `k` and `k + 1`.
    pub index: usize,
    pub offset_hz: T,
    /// `sqrt((I+m)(I-m+1))` at `m = I - k`.
    pub matrix_element: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionTable<T: Real> {
    pub transitions: Vec<Transition<T>>,
}

impl<T: Real> TransitionTable<T> {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn offsets(&self) -> Vec<T> {
        self.transitions.iter().map(|t| t.offset_hz).collect()
    }

    pub fn matrix_elements(&self) -> Vec<T> {
        self.transitions.iter().map(|t| t.matrix_element).collect()
    }

    /// Transitions whose offset lies within `tol_hz` of `freq_hz`.
    pub fn matching(&self, freq_hz: T, tol_hz: T) -> Vec<usize> {
        self.transitions
            .iter()
            .filter(|t| crate::scalar::abs(t.offset_hz - freq_hz) <= tol_hz)
            .map(|t| t.index)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem<T: Real> {
    two_i: u32,
    splitting_hz: T,
}

impl<T: Real> SpinSystem<T> {
    pub fn new(two_i: u32, splitting_hz: T) -> Result<Self> {
        if two_i == 0 {
            return Err(Error::InvalidArgument("spin 0 has no transitions".into()));
        }
        if !(splitting_hz >= T::zero()) {
            return Err(Error::InvalidArgument(format!("splitting {splitting_hz} Hz is negative")));
        }
        Ok(Self { two_i, splitting_hz })
    }

    pub fn from_spin(spin: f64, splitting_hz: T) -> Result<Self> {
        Self::new(twice_spin(spin)?, splitting_hz)
    }

    /// Cesium-133 in the liquid-crystal sample: `I = 7/2`, 6.0 kHz splitting.
    pub fn cesium() -> Self {
        Self {
            two_i: 7,
            splitting_hz: lit(6.0e3),
        }
    }

    pub fn two_i(&self) -> u32 {
        self.two_i
    }

    pub fn spin(&self) -> f64 {
        f64::from(self.two_i) / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_i as usize + 1
    }

    pub fn splitting_hz(&self) -> T {
        self.splitting_hz
    }

    pub fn with_splitting(&self, splitting_hz: T) -> Self {
        Self {
            two_i: self.two_i,
            splitting_hz,
        }
    }

    /// Magnetic quantum number of chain site `site`.
    pub fn m_for_site(&self, site: usize) -> f64 {
        self.spin() - site as f64
    }

    /// Inverse of [`Self::m_for_site`].
    pub fn site_for_m(&self, m: f64) -> Option<usize> {
        let n = self.spin() - m;
        if n < -1e-9 || (n - n.round()).abs() > 1e-9 || n.round() as usize >= self.dim() {
            return None;
        }
        Some(n.round() as usize)
    }

    /// Reorders level-indexed values into chain-site order.
    pub fn levels_to_sites(&self, by_level: &[T]) -> Vec<T> {
        (0..self.dim())
            .map(|site| {
                let level = self.site_for_m(self.m_for_site(site)).expect("bijective level map");
                by_level[level]
            })
            .collect()
    }

    pub fn operators(&self) -> SpinOperators<T> {
        spin_operators(self.two_i)
    }

    /// Quadrupolar coupling `q` in rad/s, `H_Q = q Iz^2`.
    pub fn quadrupolar_coupling(&self) -> T {
        T::pi() * self.splitting_hz
    }

    /// `q Iz^2` (rad/s), diagonal and real.
    pub fn static_hamiltonian(&self) -> DMatrix<T> {
        let q = self.quadrupolar_coupling();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                let m: T = lit(self.m_for_site(i));
                q * m * m
            } else {
                T::zero()
            }
        })
    }

    /// Single-quantum transitions `k <-> k+1`, offsets taken from the
    /// static Hamiltonian's level differences `(E_{k+1} - E_k) / 2 pi`.
    pub fn transition_table(&self) -> TransitionTable<T> {
        let h = self.static_hamiltonian();
        let transitions = (0..self.dim() - 1)
            .map(|k| {
                let two_m = i64::from(self.two_i) - 2 * k as i64;
                Transition {
                    index: k,
                    offset_hz: (h[(k + 1, k + 1)] - h[(k, k)]) / T::two_pi(),
                    matrix_element: lit(lowering_element(self.two_i, two_m)),
                }
            })
            .collect();
        TransitionTable { transitions }
    }

    /// High-temperature equilibrium deviation `rho ~ Iz`, scaled so that
    /// neighbouring levels differ by one population unit.
    pub fn equilibrium_state(&self) -> DensityMatrix<T> {
        let diag: Vec<T> = (0..self.dim()).map(|n| lit(self.m_for_site(n))).collect();
        DensityMatrix::from_diagonal(&diag)
    }
}

pub fn static_hamiltonian<T: Real>(sys: &SpinSystem<T>) -> DMatrix<T> {
    sys.static_hamiltonian()
}

pub fn equilibrium_state<T: Real>(sys: &SpinSystem<T>) -> DensityMatrix<T> {
    sys.equilibrium_state()
}
