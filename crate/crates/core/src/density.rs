// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Density matrices shared by the spin register and the chain model.
//!
//! Spin-side states are *deviation* matrices (traceless, with an implicit
//! uniform background), so unit trace is not enforced here. The chain
//! oracle wraps this type in [`crate::chain::ChainState`], which is.

use std::ops::{Add, Sub};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::{lit, Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real>(CMatrix<T>);

impl<T: Real> DensityMatrix<T> {
    pub fn from_matrix(m: CMatrix<T>) -> Self {
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C::new(d, T::zero());
        }
        Self(m)
    }

    /// `|index><index|` in a `dim`-dimensional space.
    pub fn basis_projector(dim: usize, index: usize) -> Self {
        let mut diag = vec![T::zero(); dim];
        diag[index] = T::one();
        Self::from_diagonal(&diag)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.0
    }

    /// Real diagonal.
    pub fn populations(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn trace(&self) -> C<T> {
        self.0.trace()
    }

    /// `tr(rho^2)`, real for Hermitian input.
    pub fn purity(&self) -> T {
        (&self.0 * &self.0).trace().re
    }

    pub fn hermiticity_defect(&self) -> T {
        linalg::hermiticity_defect(&self.0)
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > lit(tol) {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (defect {defect})"
            )));
        }
        Ok(())
    }

    /// Zeroes every off-diagonal element.
    pub fn diagonal_part(&self) -> Self {
        Self::from_diagonal(&self.populations())
    }

    pub fn off_diagonal_part(&self) -> Self {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m[(i, i)] = C::new(T::zero(), T::zero());
        }
        Self(m)
    }

    /// `u rho u^dagger`
    pub fn conjugated(&self, u: &CMatrix<T>) -> Self {
        Self(linalg::conjugate(u, &self.0))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        linalg::max_abs_diff(&self.0, &other.0)
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        Ok(linalg::HermitianEigen::new(&self.0)?.values.iter().copied().collect())
    }
}

impl<T: Real> Add for &DensityMatrix<T> {
    type Output = DensityMatrix<T>;
    fn add(self, rhs: Self) -> DensityMatrix<T> {
        DensityMatrix(&self.0 + &rhs.0)
    }
}

impl<T: Real> Sub for &DensityMatrix<T> {
    type Output = DensityMatrix<T>;
    fn sub(self, rhs: Self) -> DensityMatrix<T> {
        DensityMatrix(&self.0 - &rhs.0)
    }
}
