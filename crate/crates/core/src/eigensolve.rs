//! Full eigendecomposition of real symmetric tridiagonal matrices.
//!
//! The kernel is the implicit-shift QL iteration (Bowdler, Martin, Reinsch and
//! Wilkinson's `tql2`) with eigenvector accumulation. Two refinements sit on
//! top of it:
//!
//! - Persymmetric input with negative couplings (the δ = 0 Hamiltonian) is
//!   split into its reflection-even and reflection-odd blocks. Each block is
//!   diagonalized separately and the eigenvalues are interleaved even, odd,
//!   even, ... which is exact for an unreduced persymmetric Jacobi matrix.
//!   Eigenvectors then have exact parity even when a doublet splitting lies
//!   below machine precision.
//! - Eigenvector tails (entries far below the peak) are recomputed from the
//!   three-term recurrence in its stable direction, so they carry high
//!   relative accuracy instead of rounding noise of size `ε·‖v‖`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TridiagonalMatrix;

/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_QL_ITERATIONS: usize = 50;

/// Entries at or below this magnitude are ignored when fixing eigenvector signs.
pub const SIGN_FIX_FLOOR: f64 = 1e-14;

/// Relative magnitude below which an eigenvector entry counts as tail.
const TAIL_ANCHOR: f64 = 1e-6;

/// Ascending eigenvalues and orthonormal eigenvectors (column-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl Spectrum {
    /// Assemble from raw parts; `vectors` holds column `m` at `m*n..(m+1)*n`.
    pub fn from_parts(values: Vec<f64>, vectors: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 || vectors.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: vectors.len(),
            });
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, m: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors[m * n..(m + 1) * n]
    }

    pub fn vectors_column_major(&self) -> &[f64] {
        &self.vectors
    }

    pub fn ground(&self) -> (f64, &[f64]) {
        (self.values[0], self.vector(0))
    }

    /// Project `psi` (Fock basis) onto the eigenbasis: `c_m = ⟨m|ψ⟩`.
    pub fn project(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if psi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: psi.len(),
            });
        }
        Ok((0..n).map(|m| dot(self.vector(m), psi)).collect())
    }

    /// Largest `|⟨v_m, v_n⟩ − δ_mn|` over all pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.vector(a), self.vector(b)) - target).abs());
            }
        }
        worst
    }

    /// Largest `‖T v_m − E_m v_m‖₂` over all eigenpairs.
    pub fn max_residual(&self, matrix: &TridiagonalMatrix) -> f64 {
        let n = self.dim();
        let mut tv = vec![0.0; n];
        (0..n)
            .map(|m| {
                let v = self.vector(m);
                matrix.matvec(v, &mut tv);
                tv.iter()
                    .zip(v)
                    .map(|(a, b)| (a - self.values[m] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

pub fn eigh_tridiagonal(matrix: &TridiagonalMatrix) -> Result<Spectrum> {
    let n = matrix.dim();
    if n == 1 {
        return Ok(Spectrum {
            values: vec![matrix.diag()[0]],
            vectors: vec![1.0],
        });
    }
    if matrix.is_persymmetric() && matrix.offdiag().iter().all(|&e| e < 0.0) {
        parity_blocked(matrix)
    } else {
        let (values, mut vectors) = solve_with_vectors(matrix.diag(), matrix.offdiag())?;
        polish_resolved(matrix.diag(), matrix.offdiag(), &values, &mut vectors);
        for col in vectors.chunks_exact_mut(n) {
            fix_sign(col);
        }
        Ok(Spectrum { values, vectors })
    }
}

/// Eigenvalues only, ascending; `O(n²)`.
pub fn eigvalsh_tridiagonal(matrix: &TridiagonalMatrix) -> Result<Vec<f64>> {
    let mut d = matrix.diag().to_vec();
    let mut e = matrix.offdiag().to_vec();
    e.push(0.0);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Lowest eigenpair `(E₀, v₀)`.
///
/// Uses inverse iteration on the factorization of `T − σI` with `σ` just below
/// `E₀`, which keeps `v₀` entrywise positive for negative couplings. Falls back
/// to the full decomposition when the ground gap is not resolvable.
pub fn ground_vector(matrix: &TridiagonalMatrix) -> Result<(f64, Vec<f64>)> {
    let n = matrix.dim();
    if n == 1 {
        return Ok((matrix.diag()[0], vec![1.0]));
    }
    let values = eigvalsh_tridiagonal(matrix)?;
    let e0 = values[0];
    let gap = values[1] - values[0];
    let scale = matrix.max_row_sum().max(f64::MIN_POSITIVE);
    let full = || -> Result<(f64, Vec<f64>)> {
        let s = eigh_tridiagonal(matrix)?;
        Ok((s.values[0], s.vector(0).to_vec()))
    };
    if gap <= 1e-8 * scale || matrix.offdiag().contains(&0.0) {
        return full();
    }
    let shift = e0 - (1e-6 * gap).max(1e3 * f64::EPSILON * scale);
    let Some((pivots, multipliers)) = ldl_positive(matrix, shift) else {
        return full();
    };
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..4 {
        ldl_solve(&pivots, &multipliers, &mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let mut tv = vec![0.0; n];
    matrix.matvec(&v, &mut tv);
    let residual = tv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - e0 * b).powi(2))
        .sum::<f64>()
        .sqrt();
    if residual > 1e-10 * matrix.frobenius_norm() {
        return full();
    }
    polish_tails(matrix.diag(), matrix.offdiag(), e0, &mut v);
    fix_sign(&mut v);
    Ok((e0, v))
}

/// Number of eigenvalues strictly below `x` (Sylvester inertia of `T − xI`).
pub fn sturm_count(matrix: &TridiagonalMatrix, x: f64) -> usize {
    let d = matrix.diag();
    let e = matrix.offdiag();
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for k in 1..d.len() {
        let prev = if q == 0.0 {
            f64::EPSILON * (e[k - 1].abs() + f64::MIN_POSITIVE)
        } else {
            q
        };
        q = d[k] - x - e[k - 1] * e[k - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Sign changes between consecutive entries with `|v_k| > floor`.
pub fn sign_changes(v: &[f64], floor: f64) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &x in v.iter().filter(|x| x.abs() > floor) {
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = x;
    }
    count
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fix_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > SIGN_FIX_FLOOR) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Implicit QL on `(d, e)` with `e[n-1]` as scratch. On return `d` holds the
/// eigenvalues (unsorted) and, if given, the columns of `z` the eigenvectors.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    debug_assert_eq!(e.len(), n);
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() < f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iterations == MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence {
                    index: l,
                    iterations,
                });
            }
            iterations += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_next = &mut right[..n];
                    for (zi, zn) in col_i.iter_mut().zip(col_next.iter_mut()) {
                        let f = *zn;
                        *zn = s * *zi + c * f;
                        *zi = c * *zi - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Sorted eigenpairs of a tridiagonal given by slices; column-major vectors.
fn solve_with_vectors(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    for k in 0..n {
        z[k * n + k] = 1.0;
    }
    ql_implicit(&mut d, &mut e, Some(&mut z))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        vectors.extend_from_slice(&z[i * n..(i + 1) * n]);
    }
    Ok((values, vectors))
}

/// Reflection-even / reflection-odd block solve for persymmetric input.
fn parity_blocked(matrix: &TridiagonalMatrix) -> Result<Spectrum> {
    let d = matrix.diag();
    let e = matrix.offdiag();
    let n = d.len();
    let h = n / 2;
    let odd_dim = n % 2 == 1;

    let (even_d, even_e, odd_d, odd_e) = if odd_dim {
        // pairs (i, n-1-i) for i < h plus the centre h
        let mut even_d = d[..=h].to_vec();
        let mut even_e = e[..h].to_vec();
        even_e[h - 1] *= std::f64::consts::SQRT_2;
        let odd_d = d[..h].to_vec();
        let odd_e = e[..h - 1].to_vec();
        even_d.truncate(h + 1);
        (even_d, even_e, odd_d, odd_e)
    } else {
        let mut even_d = d[..h].to_vec();
        let mut odd_d = d[..h].to_vec();
        even_d[h - 1] += e[h - 1];
        odd_d[h - 1] -= e[h - 1];
        let block_e = e[..h - 1].to_vec();
        (even_d, block_e.clone(), odd_d, block_e)
    };

    let (even_vals, mut even_vecs) = solve_with_vectors(&even_d, &even_e)?;
    let (odd_vals, mut odd_vecs) = if odd_d.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        solve_with_vectors(&odd_d, &odd_e)?
    };
    let ne = even_d.len();
    let no = odd_d.len();
    polish_resolved(&even_d, &even_e, &even_vals, &mut even_vecs);
    polish_resolved(&odd_d, &odd_e, &odd_vals, &mut odd_vecs);

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for m in 0..n {
        let col = &mut vectors[m * n..(m + 1) * n];
        let block = m / 2;
        if m % 2 == 0 {
            values.push(even_vals[block]);
            let x = &even_vecs[block * ne..(block + 1) * ne];
            for i in 0..h {
                col[i] = x[i] * inv_sqrt2;
                col[n - 1 - i] = col[i];
            }
            if odd_dim {
                col[h] = x[h];
            }
        } else {
            values.push(odd_vals[block]);
            let y = &odd_vecs[block * no..(block + 1) * no];
            for i in 0..h {
                col[i] = y[i] * inv_sqrt2;
                col[n - 1 - i] = -col[i];
            }
        }
        fix_sign(col);
    }
    // Doublet partners closer than rounding can come out in either order;
    // the interleaving fixes the order, this keeps the values ascending.
    for m in 1..n {
        if values[m] <= values[m - 1] {
            values[m] = values[m - 1].next_up();
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Tail polishing for every eigenvector whose eigenvalue is separated from
/// its neighbours by more than `√ε·‖T‖`. Inside a near-degenerate cluster the
/// columns are arbitrary rotations of each other and a boundary recurrence
/// would follow only one of them, destroying orthogonality.
fn polish_resolved(diag: &[f64], offdiag: &[f64], values: &[f64], vectors: &mut [f64]) {
    let n = diag.len();
    if n < 3 {
        return;
    }
    let scale = (0..n)
        .map(|k| {
            diag[k].abs()
                + if k > 0 { offdiag[k - 1].abs() } else { 0.0 }
                + if k + 1 < n { offdiag[k].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let min_gap = f64::EPSILON.sqrt() * scale;
    for (m, col) in vectors.chunks_exact_mut(n).enumerate() {
        let below = if m > 0 {
            values[m] - values[m - 1]
        } else {
            f64::INFINITY
        };
        let above = values.get(m + 1).map_or(f64::INFINITY, |v| v - values[m]);
        if below.min(above) > min_gap {
            polish_tails(diag, offdiag, values[m], col);
        }
    }
}

/// Recompute the small-magnitude ends of eigenvector `v` (eigenvalue `value`)
/// from the three-term recurrence, run from each boundary inward.
fn polish_tails(diag: &[f64], offdiag: &[f64], value: f64, v: &mut [f64]) {
    let n = v.len();
    if n < 3 {
        return;
    }
    let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let anchor = TAIL_ANCHOR * vmax;
    let Some(first) = v.iter().position(|x| x.abs() >= anchor) else {
        return;
    };
    let last = v.iter().rposition(|x| x.abs() >= anchor).unwrap_or(n - 1);

    // left tail: ratio v_k / v_{k+1} from the k = 0 row upward
    if first > 0 && offdiag[..first].iter().all(|&x| x != 0.0) {
        let mut ratios = Vec::with_capacity(first);
        let mut prev = 0.0;
        for k in 0..first {
            let denom = diag[k] - value + if k > 0 { offdiag[k - 1] * prev } else { 0.0 };
            prev = -offdiag[k] / denom;
            ratios.push(prev);
        }
        let mut tail = vec![0.0; first];
        let mut next = v[first];
        for k in (0..first).rev() {
            next *= ratios[k];
            tail[k] = next;
        }
        if tail
            .iter()
            .all(|x| x.is_finite() && x.abs() <= 10.0 * anchor)
        {
            v[..first].copy_from_slice(&tail);
        }
    }

    // right tail: ratio v_k / v_{k-1} from the k = n-1 row downward
    if last + 1 < n && offdiag[last..].iter().all(|&x| x != 0.0) {
        let len = n - 1 - last;
        let mut ratios = vec![0.0; len];
        let mut prev = 0.0;
        for k in (last + 1..n).rev() {
            let denom = diag[k] - value + if k + 1 < n { offdiag[k] * prev } else { 0.0 };
            prev = -offdiag[k - 1] / denom;
            ratios[k - last - 1] = prev;
        }
        let mut tail = vec![0.0; len];
        let mut next = v[last];
        for (slot, ratio) in tail.iter_mut().zip(&ratios) {
            next *= ratio;
            *slot = next;
        }
        if tail
            .iter()
            .all(|x| x.is_finite() && x.abs() <= 10.0 * anchor)
        {
            v[last + 1..].copy_from_slice(&tail);
        }
    }
}

/// `T − σI = L D Lᵀ`; `None` unless every pivot is positive.
fn ldl_positive(matrix: &TridiagonalMatrix, shift: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let d = matrix.diag();
    let e = matrix.offdiag();
    let n = d.len();
    let mut pivots = Vec::with_capacity(n);
    let mut multipliers = Vec::with_capacity(n - 1);
    let mut p = d[0] - shift;
    for k in 0..n {
        if !(p > 0.0) {
            return None;
        }
        pivots.push(p);
        if k + 1 < n {
            let l = e[k] / p;
            multipliers.push(l);
            p = d[k + 1] - shift - e[k] * l;
        }
    }
    Some((pivots, multipliers))
}

fn ldl_solve(pivots: &[f64], multipliers: &[f64], x: &mut [f64]) {
    let n = x.len();
    for k in 1..n {
        x[k] -= multipliers[k - 1] * x[k - 1];
    }
    for k in 0..n {
        x[k] /= pivots[k];
    }
    for k in (0..n - 1).rev() {
        x[k] -= multipliers[k] * x[k + 1];
    }
}
