// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex linear algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{abs, cabs, cis, max, Real, C};

pub type CMatrix<T> = DMatrix<C<T>>;

pub fn complexify<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| C::new(x, T::zero()))
}

/// Largest elementwise deviation from Hermiticity, `max |m_ij - conj(m_ji)|`.
pub fn hermiticity_defect<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = max(worst, cabs(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    worst
}

pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| max(acc, cabs(*x - *y)))
}

/// `u * m * u^dagger`
pub fn conjugate<T: Real>(u: &CMatrix<T>, m: &CMatrix<T>) -> CMatrix<T> {
    u * m * u.adjoint()
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

/// Spectral decomposition of a Hermitian matrix, kept around so that
/// `exp(-i H t)` can be formed for many `t` without re-diagonalizing.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: DVector<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(h: &CMatrix<T>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        let scale = h.iter().fold(T::one(), |acc, z| max(acc, cabs(*z)));
        if hermiticity_defect(h) > scale * crate::scalar::lit(1e-9) {
            return Err(Error::InvalidArgument("matrix is not Hermitian".into()));
        }
        let eig = SymmetricEigen::try_new(h.clone(), T::default_epsilon(), 0)
            .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        let phases = self.values.map(|e| cis(-e * t));
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * phases[j]
        });
        scaled * self.vectors.adjoint()
    }

    /// Largest eigen-residual `max_k ||H v_k - e_k v_k||`.
    pub fn residual(&self, h: &CMatrix<T>) -> T {
        let mut worst = T::zero();
        for k in 0..self.values.len() {
            let v = self.vectors.column(k);
            let r = h * v - v * C::new(self.values[k], T::zero());
            worst = max(worst, r.norm());
        }
        worst
    }
}

/// `exp(-i H t)` for a Hermitian `H`.
pub fn hermitian_propagator<T: Real>(h: &CMatrix<T>, t: T) -> Result<CMatrix<T>> {
    Ok(HermitianEigen::new(h)?.propagator(t))
}

/// `max |U^dagger U - 1|`
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    let p = u.adjoint() * u;
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { T::one() } else { T::zero() };
            worst = max(worst, abs(p[(i, j)].re - target) + abs(p[(i, j)].im));
        }
    }
    worst
}
