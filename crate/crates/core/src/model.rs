//! Two-mode Bose-Hubbard Hamiltonian in the Fock number basis.
//!
//! The basis state with index `k` has `n₁ = k` bosons in well 1 and
//! `n₂ = N − k` in well 2, so the dimension is `N + 1`. The Hamiltonian
//!
//! ```text
//! H = −J (a₁†a₂ + a₂†a₁) + (U/2) [n₁(n₁−1) + n₂(n₂−1)] + (δ/2)(n₁ − n₂)
//! ```
//!
//! is tridiagonal in this ordering and the imbalance operator
//! `ẑ = (n₁ − n₂)/N` is diagonal and monotone in `k`.
//!
//! Units are ħ = 1. With the hopping written as `−J(a₁†a₂ + h.c.)` the
//! noninteracting Rabi frequency is `2J`, the small-amplitude Josephson
//! frequency is `2J√(1 + Λ)` with `Λ = NU/2J`, and the top doublet splitting
//! follows `2N(J/U)^N/(N−1)!`.

use serde::{Deserialize, Serialize};

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n_particles: usize,
    j: f64,
    u: f64,
    delta: f64,
}

impl ModelParams {
    pub fn new(n_particles: usize, j: f64, u: f64, delta: f64) -> Result<Self> {
        if n_particles < 1 {
            return Err(Error::InvalidParams(
                "particle number N must be >= 1".into(),
            ));
        }
        if !j.is_finite() || j < 0.0 {
            return Err(Error::InvalidParams(format!(
                "tunneling J must be finite and >= 0, got {j}"
            )));
        }
        if !u.is_finite() || u < 0.0 {
            return Err(Error::InvalidParams(format!(
                "interaction U must be finite and >= 0, got {u}"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "asymmetry delta must be finite, got {delta}"
            )));
        }
        if j == 0.0 && u == 0.0 && delta == 0.0 {
            return Err(Error::InvalidParams(
                "J, U and delta all vanish: the Hamiltonian is identically zero".into(),
            ));
        }
        Ok(Self {
            n_particles,
            j,
            u,
            delta,
        })
    }

    /// Symmetric double well in units of U (`U = 1`).
    pub fn symmetric(n_particles: usize, j_over_u: f64) -> Result<Self> {
        Self::new(n_particles, j_over_u, 1.0, 0.0)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.n_particles + 1
    }

    /// `Λ = NU/2J`; `None` when `J = 0`.
    pub fn lambda(&self) -> Option<f64> {
        (self.j > 0.0).then(|| self.n_particles as f64 * self.u / (2.0 * self.j))
    }

    /// Energy unit for reported quantities: U when U > 0, otherwise J.
    pub fn energy_unit(&self) -> f64 {
        if self.u > 0.0 {
            self.u
        } else if self.j > 0.0 {
            self.j
        } else {
            self.delta.abs()
        }
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.n_particles, self.j, self.u, delta)
    }

    pub fn is_symmetric(&self) -> bool {
        self.delta == 0.0
    }
}

/// Fock basis label `k = n₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockIndex {
    k: usize,
    n_particles: usize,
}

impl FockIndex {
    pub fn new(k: usize, n_particles: usize) -> Result<Self> {
        if k > n_particles {
            return Err(Error::IndexOutOfRange {
                index: k,
                dim: n_particles + 1,
            });
        }
        Ok(Self { k, n_particles })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n1(&self) -> usize {
        self.k
    }

    pub fn n2(&self) -> usize {
        self.n_particles - self.k
    }

    /// Eigenvalue of `ẑ = (n₁ − n₂)/N` on this basis state.
    pub fn imbalance(&self) -> f64 {
        (2.0 * self.k as f64 - self.n_particles as f64) / self.n_particles as f64
    }
}

/// Real symmetric tridiagonal matrix; `offdiag[k]` couples rows `k` and `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParams(
                "tridiagonal matrix must have dimension >= 1".into(),
            ));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len() - 1,
                got: offdiag.len(),
            });
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("matrix entries must be finite".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let d: f64 = self.diag.iter().map(|x| x * x).sum();
        let e: f64 = self.offdiag.iter().map(|x| x * x).sum();
        (d + 2.0 * e).sqrt()
    }

    /// Infinity norm (largest absolute row sum).
    pub fn max_row_sum(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut s = self.diag[k].abs();
                if k > 0 {
                    s += self.offdiag[k - 1].abs();
                }
                if k + 1 < n {
                    s += self.offdiag[k].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for k in 0..n {
            let mut s = self.diag[k] * x[k];
            if k > 0 {
                s += self.offdiag[k - 1] * x[k - 1];
            }
            if k + 1 < n {
                s += self.offdiag[k] * x[k + 1];
            }
            out[k] = s;
        }
    }

    /// True when the matrix is invariant under the index reflection `k ↦ n−1−k`.
    pub fn is_persymmetric(&self) -> bool {
        let n = self.dim();
        (0..n / 2).all(|k| self.diag[k] == self.diag[n - 1 - k])
            && (0..self.offdiag.len() / 2)
                .all(|k| self.offdiag[k] == self.offdiag[self.offdiag.len() - 1 - k])
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|x| alpha * x).collect(),
            offdiag: self.offdiag.iter().map(|x| alpha * x).collect(),
        }
    }

    /// Dense row-major copy, for small-matrix checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for k in 0..n {
            m[k][k] = self.diag[k];
            if k + 1 < n {
                m[k][k + 1] = self.offdiag[k];
                m[k + 1][k] = self.offdiag[k];
            }
        }
        m
    }
}

pub fn build_hamiltonian(params: &ModelParams) -> TridiagonalMatrix {
    let n = params.n_particles;
    let nf = n as f64;
    let half_u = 0.5 * params.u;
    let half_delta = 0.5 * params.delta;
    let diag = (0..=n)
        .map(|k| {
            let n1 = k as f64;
            let n2 = (n - k) as f64;
            half_u * (n1 * (n1 - 1.0) + n2 * (n2 - 1.0)) + half_delta * (2.0 * n1 - nf)
        })
        .collect();
    let offdiag = (0..n)
        .map(|k| -params.j * (((k + 1) * (n - k)) as f64).sqrt())
        .collect();
    TridiagonalMatrix { diag, offdiag }
}

/// Diagonal of `ẑ = (n₁ − n₂)/N` in the Fock basis.
pub fn imbalance_diagonal(n_particles: usize) -> Result<Vec<f64>> {
    if n_particles < 1 {
        return Err(Error::InvalidParams(
            "particle number N must be >= 1".into(),
        ));
    }
    let nf = n_particles as f64;
    Ok((0..=n_particles)
        .map(|k| (2.0 * k as f64 - nf) / nf)
        .collect())
}

/// `⟨m|(n₁ − n₂)|m2⟩ / N` between two eigenvectors of `spectrum`.
pub fn imbalance_matrix_element(
    spectrum: &Spectrum,
    m: usize,
    m2: usize,
    n_particles: usize,
) -> Result<f64> {
    let dim = spectrum.dim();
    if n_particles + 1 != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: n_particles + 1,
        });
    }
    for index in [m, m2] {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
    }
    let zdiag = imbalance_diagonal(n_particles)?;
    let a = spectrum.vector(m);
    let b = spectrum.vector(m2);
    Ok(a.iter()
        .zip(b)
        .zip(&zdiag)
        .map(|((x, y), z)| x * y * z)
        .sum())
}
