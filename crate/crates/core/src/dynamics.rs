//! Initial-state preparation and the time evolution of the population imbalance.
//!
//! The initial state is the ground state of the tilted double well, with the
//! tilt `δ` tuned so that its imbalance equals the requested `z(0)`; at `t = 0`
//! the tilt is switched off and the state evolves under the symmetric
//! Hamiltonian. In the symmetric eigenbasis `{|m⟩, E_m}` with real amplitudes
//! `c_m`,
//!
//! ```text
//! z(t) = Σ_m z_mm + 2 Σ_{m<m'} z_mm' cos((E_m − E_m') t),
//! z_mm' = c_m c_m' ⟨m|(n₁ − n₂)|m'⟩ / N.
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::plasma_frequency;
use crate::eigensolve::{eigh_tridiagonal, ground_vector, Spectrum};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, imbalance_diagonal, ModelParams, TridiagonalMatrix};

/// Target accuracy of the prepared `z(0)`.
pub const Z0_TOLERANCE: f64 = 1e-9;

/// Bracket expansion gives up past `|δ| = DELTA_LIMIT_FACTOR · max(J, U·N)`.
pub const DELTA_LIMIT_FACTOR: f64 = 1e6;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    /// Tilted-well ground state in the Fock basis.
    pub amplitudes_fock: Vec<f64>,
    /// `c_m = ⟨m|ψ(0)⟩` in the symmetric eigenbasis.
    pub coeffs: Vec<f64>,
    pub delta_used: f64,
    pub z0: f64,
}

impl InitialState {
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Occupation probabilities `|c_m|²`.
    pub fn occupations(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c * c).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceTrace {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
}

impl ImbalanceTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Arithmetic mean of the samples.
    pub fn mean(&self) -> f64 {
        self.z.iter().sum::<f64>() / self.z.len() as f64
    }
}

/// `⟨m|ẑ|m'⟩` for every pair of symmetric eigenstates; independent of the state.
#[derive(Debug, Clone)]
pub struct EigenbasisImbalance {
    n: usize,
    energies: Vec<f64>,
    /// row-major, symmetric
    elements: Vec<f64>,
}

impl EigenbasisImbalance {
    pub fn new(spectrum: &Spectrum) -> Result<Self> {
        let n = spectrum.dim();
        if n < 2 {
            return Err(Error::InvalidParams("need at least two Fock states".into()));
        }
        let zdiag = imbalance_diagonal(n - 1)?;
        let weighted: Vec<Vec<f64>> = (0..n)
            .map(|m| {
                spectrum
                    .vector(m)
                    .iter()
                    .zip(&zdiag)
                    .map(|(v, z)| v * z)
                    .collect()
            })
            .collect();
        let mut elements = vec![0.0; n * n];
        for a in 0..n {
            let va = spectrum.vector(a);
            for b in a..n {
                let x: f64 = va.iter().zip(&weighted[b]).map(|(p, q)| p * q).sum();
                elements[a * n + b] = x;
                elements[b * n + a] = x;
            }
        }
        Ok(Self {
            n,
            energies: spectrum.values().to_vec(),
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn element(&self, m: usize, m2: usize) -> f64 {
        self.elements[m * self.n + m2]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

/// `z_mm'` and `ω_mm' = E_m − E_m'` for one initial state.
#[derive(Debug, Clone)]
pub struct CoherenceMatrix {
    n: usize,
    entries: Vec<f64>,
    energies: Vec<f64>,
    stationary: f64,
    /// (2·z_mm', ω_mm') for m < m'
    pairs: Vec<(f64, f64)>,
}

impl CoherenceMatrix {
    pub fn new(coeffs: &[f64], operator: &EigenbasisImbalance) -> Result<Self> {
        let n = operator.dim();
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: coeffs.len(),
            });
        }
        let mut entries = vec![0.0; n * n];
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        let mut stationary = 0.0;
        for a in 0..n {
            for b in a..n {
                let z = coeffs[a] * coeffs[b] * operator.element(a, b);
                entries[a * n + b] = z;
                entries[b * n + a] = z;
                if a == b {
                    stationary += z;
                } else {
                    pairs.push((2.0 * z, operator.energies[a] - operator.energies[b]));
                }
            }
        }
        Ok(Self {
            n,
            entries,
            energies: operator.energies.clone(),
            stationary,
            pairs,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, m: usize, m2: usize) -> f64 {
        self.entries[m * self.n + m2]
    }

    pub fn frequency(&self, m: usize, m2: usize) -> f64 {
        self.energies[m] - self.energies[m2]
    }

    /// `Σ_m z_mm`, the infinite-time average.
    pub fn stationary(&self) -> f64 {
        self.stationary
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.stationary
            + self
                .pairs
                .iter()
                .map(|&(w, omega)| w * (omega * t).cos())
                .sum::<f64>()
    }

    /// Exact mean of `z(t)` over `[0, T]`.
    pub fn window_average(&self, window: f64) -> f64 {
        self.stationary
            + self
                .pairs
                .iter()
                .map(|&(w, omega)| {
                    let x = omega * window;
                    if x.abs() < 1e-12 {
                        w
                    } else {
                        w * x.sin() / x
                    }
                })
                .sum::<f64>()
    }
}

/// `Σ_k |a_k|² (2k − N)/N` for normalized Fock amplitudes.
pub fn imbalance_of_state(amplitudes_fock: &[f64]) -> Result<f64> {
    if amplitudes_fock.len() < 2 {
        return Err(Error::InvalidParams(
            "need at least two Fock amplitudes".into(),
        ));
    }
    let norm_sq: f64 = amplitudes_fock.iter().map(|a| a * a).sum();
    if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(fock_imbalance(amplitudes_fock))
}

fn fock_imbalance(amplitudes: &[f64]) -> f64 {
    let n = (amplitudes.len() - 1) as f64;
    amplitudes
        .iter()
        .enumerate()
        .map(|(k, a)| a * a * (2.0 * k as f64 - n) / n)
        .sum()
}

fn check_symmetric(params: &ModelParams) -> Result<()> {
    if !params.is_symmetric() {
        return Err(Error::InvalidParams(format!(
            "expected the symmetric model (delta = 0), got delta = {}",
            params.delta()
        )));
    }
    Ok(())
}

/// Ground state of the tilted well with imbalance `z0_target`, projected onto
/// the symmetric eigenbasis.
pub fn prepare_initial(z0_target: f64, params_symmetric: &ModelParams) -> Result<InitialState> {
    check_symmetric(params_symmetric)?;
    let spectrum = eigh_tridiagonal(&build_hamiltonian(params_symmetric))?;
    prepare_initial_with(z0_target, params_symmetric, &spectrum)
}

/// As [`prepare_initial`] with the symmetric spectrum supplied by the caller.
pub fn prepare_initial_with(
    z0_target: f64,
    params_symmetric: &ModelParams,
    spectrum: &Spectrum,
) -> Result<InitialState> {
    check_symmetric(params_symmetric)?;
    if !(z0_target.abs() < 1.0) {
        return Err(Error::Domain {
            what: "initial imbalance z0",
            value: z0_target,
            domain: "(-1, 1)",
        });
    }
    if spectrum.dim() != params_symmetric.dim() {
        return Err(Error::DimensionMismatch {
            expected: params_symmetric.dim(),
            got: spectrum.dim(),
        });
    }
    let (delta, amplitudes) = if z0_target == 0.0 {
        (0.0, spectrum.vector(0).to_vec())
    } else {
        find_tilt(z0_target, params_symmetric)?
    };
    let coeffs = spectrum.project(&amplitudes)?;
    let z0 = imbalance_of_state(&amplitudes)?;
    Ok(InitialState {
        amplitudes_fock: amplitudes,
        coeffs,
        delta_used: delta,
        z0,
    })
}

/// Ground state of the well tilted by `delta` (no target imbalance), projected
/// onto the symmetric eigenbasis.
pub fn prepare_from_tilt(
    delta: f64,
    params_symmetric: &ModelParams,
    spectrum: &Spectrum,
) -> Result<InitialState> {
    check_symmetric(params_symmetric)?;
    if spectrum.dim() != params_symmetric.dim() {
        return Err(Error::DimensionMismatch {
            expected: params_symmetric.dim(),
            got: spectrum.dim(),
        });
    }
    let (z0, amplitudes) = tilted_ground(params_symmetric, delta)?;
    let coeffs = spectrum.project(&amplitudes)?;
    Ok(InitialState {
        amplitudes_fock: amplitudes,
        coeffs,
        delta_used: delta,
        z0,
    })
}

fn tilted_ground(params: &ModelParams, delta: f64) -> Result<(f64, Vec<f64>)> {
    let (_, v) = ground_vector(&build_hamiltonian(&params.with_delta(delta)?))?;
    Ok((fock_imbalance(&v), v))
}

/// Bisection on `δ` for the tilted ground state with imbalance `target`.
/// A positive imbalance (excess in well 1) needs `δ < 0`.
fn find_tilt(target: f64, params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    let direction = -target.signum();
    let goal = target.abs();
    let n = params.n_particles() as f64;
    let limit = DELTA_LIMIT_FACTOR * params.j().max(params.u() * n).max(f64::MIN_POSITIVE);
    let start = if params.u() > 0.0 {
        params.u()
    } else {
        params.j()
    };

    // imbalance is odd in delta, so work with magnitudes
    let eval = |mag: f64| -> Result<(f64, Vec<f64>)> {
        let (z, v) = tilted_ground(params, direction * mag)?;
        Ok((-direction * z, v))
    };

    let mut lo = (0.0, 0.0);
    let mut hi_mag = start;
    let (mut hi_z, mut hi_v) = eval(hi_mag)?;
    while hi_z < goal {
        if hi_z < lo.1 - 1e-12 {
            return Err(Error::Invariant(format!(
                "ground-state imbalance not monotone in |delta| near {hi_mag}"
            )));
        }
        lo = (hi_mag, hi_z);
        hi_mag *= 2.0;
        if hi_mag > limit {
            return Err(Error::NoBracket { target, limit });
        }
        (hi_z, hi_v) = eval(hi_mag)?;
    }
    if (hi_z - goal).abs() <= Z0_TOLERANCE {
        return Ok((direction * hi_mag, hi_v));
    }

    let (mut lo_mag, mut lo_z) = lo;
    let mut best = (hi_mag, hi_z, hi_v);
    for _ in 0..200 {
        let mid = 0.5 * (lo_mag + best.0);
        if mid <= lo_mag || mid >= best.0 {
            break;
        }
        let (z, v) = eval(mid)?;
        if z < lo_z - 1e-12 || z > best.1 + 1e-12 {
            return Err(Error::Invariant(format!(
                "ground-state imbalance not monotone in |delta| near {mid}"
            )));
        }
        if (z - goal).abs() <= Z0_TOLERANCE {
            return Ok((direction * mid, v));
        }
        if z < goal {
            lo_mag = mid;
            lo_z = z;
        } else {
            best = (mid, z, v);
        }
    }
    if (best.1 - goal).abs() <= 1e-8 {
        Ok((direction * best.0, best.2))
    } else {
        Err(Error::NoBracket { target, limit })
    }
}

/// `z(t)` from the spectral sum at each requested time.
pub fn evolve_imbalance(
    state: &InitialState,
    spectrum: &Spectrum,
    times: &[f64],
) -> Result<ImbalanceTrace> {
    if state.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            got: state.dim(),
        });
    }
    let operator = EigenbasisImbalance::new(spectrum)?;
    let coherence = CoherenceMatrix::new(&state.coeffs, &operator)?;
    Ok(evolve_coherence(&coherence, times))
}

pub fn evolve_coherence(coherence: &CoherenceMatrix, times: &[f64]) -> ImbalanceTrace {
    let z = times.par_iter().map(|&t| coherence.evaluate(t)).collect();
    ImbalanceTrace {
        times: times.to_vec(),
        z,
    }
}

/// Exact window mean `(1/T) ∫₀ᵀ z(t) dt`.
pub fn window_average(state: &InitialState, spectrum: &Spectrum, window: f64) -> Result<f64> {
    if !(window > 0.0) {
        return Err(Error::Domain {
            what: "averaging window T",
            value: window,
            domain: "(0, inf)",
        });
    }
    if state.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            got: state.dim(),
        });
    }
    let operator = EigenbasisImbalance::new(spectrum)?;
    Ok(CoherenceMatrix::new(&state.coeffs, &operator)?.window_average(window))
}

/// `|c_m|²` for each `z0` in the grid (rows) and each eigenstate (columns).
pub fn occupation_map(params_symmetric: &ModelParams, z0_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_symmetric(params_symmetric)?;
    let spectrum = eigh_tridiagonal(&build_hamiltonian(params_symmetric))?;
    occupation_map_with(params_symmetric, &spectrum, z0_grid)
}

pub fn occupation_map_with(
    params_symmetric: &ModelParams,
    spectrum: &Spectrum,
    z0_grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    z0_grid
        .par_iter()
        .map(|&z0| Ok(prepare_initial_with(z0, params_symmetric, spectrum)?.occupations()))
        .collect()
}

/// Uniform grid of `periods · samples_per_period + 1` times starting at 0,
/// in units of the plasma period `2π/ω_p`.
pub fn plasma_time_grid(
    params: &ModelParams,
    periods: f64,
    samples_per_period: usize,
) -> Result<Vec<f64>> {
    if !(periods > 0.0) || samples_per_period == 0 {
        return Err(Error::Config(
            "time grid needs periods > 0 and samples_per_period > 0".into(),
        ));
    }
    let period = 2.0 * std::f64::consts::PI / plasma_frequency(params)?;
    let dt = period / samples_per_period as f64;
    let count = (periods * samples_per_period as f64).round() as usize;
    Ok((0..=count).map(|i| i as f64 * dt).collect())
}

/// Fixed-step RK4 integration of `i dψ/dt = Hψ` from `t = 0` to `t_final`.
///
/// Independent of the spectral route; meant for cross-checks. Requires
/// `dt ≤ 0.01 / ‖H‖∞`.
pub fn propagate_oracle(
    amplitudes_fock: &[f64],
    matrix: &TridiagonalMatrix,
    t_final: f64,
    dt: f64,
) -> Result<Vec<Complex64>> {
    let psi: Vec<Complex64> = amplitudes_fock
        .iter()
        .map(|&a| Complex64::new(a, 0.0))
        .collect();
    let mut oracle = Rk4Propagator::new(psi, matrix, dt)?;
    oracle.advance_to(t_final)?;
    Ok(oracle.psi)
}

/// `z(t)` at ascending `times` via [`propagate_oracle`]'s integrator.
pub fn oracle_imbalance(
    amplitudes_fock: &[f64],
    matrix: &TridiagonalMatrix,
    times: &[f64],
    dt: f64,
) -> Result<ImbalanceTrace> {
    let psi: Vec<Complex64> = amplitudes_fock
        .iter()
        .map(|&a| Complex64::new(a, 0.0))
        .collect();
    let mut oracle = Rk4Propagator::new(psi, matrix, dt)?;
    let n = (matrix.dim() - 1) as f64;
    let mut z = Vec::with_capacity(times.len());
    for &t in times {
        oracle.advance_to(t)?;
        z.push(
            oracle
                .psi
                .iter()
                .enumerate()
                .map(|(k, a)| a.norm_sqr() * (2.0 * k as f64 - n) / n)
                .sum(),
        );
    }
    Ok(ImbalanceTrace {
        times: times.to_vec(),
        z,
    })
}

struct Rk4Propagator<'a> {
    matrix: &'a TridiagonalMatrix,
    psi: Vec<Complex64>,
    time: f64,
    dt: f64,
    initial_norm: f64,
    scratch: [Vec<Complex64>; 5],
}

impl<'a> Rk4Propagator<'a> {
    fn new(psi: Vec<Complex64>, matrix: &'a TridiagonalMatrix, dt: f64) -> Result<Self> {
        if psi.len() != matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: matrix.dim(),
                got: psi.len(),
            });
        }
        let norm = matrix.max_row_sum();
        let bound = if norm > 0.0 {
            0.01 / norm
        } else {
            f64::INFINITY
        };
        if !(dt > 0.0) || dt > bound {
            return Err(Error::StepTooLarge { dt, bound });
        }
        let n = psi.len();
        let initial_norm = psi.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self {
            matrix,
            psi,
            time: 0.0,
            dt,
            initial_norm,
            scratch: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]),
        })
    }

    /// out = −i H x
    fn derivative(matrix: &TridiagonalMatrix, x: &[Complex64], out: &mut [Complex64]) {
        let d = matrix.diag();
        let e = matrix.offdiag();
        let n = x.len();
        for k in 0..n {
            let mut s = x[k] * d[k];
            if k > 0 {
                s += x[k - 1] * e[k - 1];
            }
            if k + 1 < n {
                s += x[k + 1] * e[k];
            }
            out[k] = Complex64::new(s.im, -s.re);
        }
    }

    fn step(&mut self, h: f64) {
        let [k1, k2, k3, k4, tmp] = &mut self.scratch;
        let psi = &mut self.psi;
        Self::derivative(self.matrix, psi, k1);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k1[i] * (0.5 * h);
        }
        Self::derivative(self.matrix, tmp, k2);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k2[i] * (0.5 * h);
        }
        Self::derivative(self.matrix, tmp, k3);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k3[i] * h;
        }
        Self::derivative(self.matrix, tmp, k4);
        for i in 0..psi.len() {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }

    fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(Error::Config(format!(
                "oracle times must be ascending ({t} < {})",
                self.time
            )));
        }
        if self.matrix.max_row_sum() == 0.0 {
            self.time = t;
            return Ok(());
        }
        let span = t - self.time;
        let steps = (span / self.dt).ceil() as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                self.step(h);
            }
        }
        self.time = t;
        let norm: f64 = self.psi.iter().map(|a| a.norm_sqr()).sum();
        if (norm - self.initial_norm).abs() > 1e-8 {
            return Err(Error::Invariant(format!(
                "oracle norm drifted by {:e}",
                norm - self.initial_norm
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> ModelParams {
        ModelParams::new(1, 1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn imbalance_of_basis_states() {
        assert_eq!(imbalance_of_state(&[0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(imbalance_of_state(&[1.0, 0.0, 0.0]).unwrap(), -1.0);
        let u = 1.0 / 5f64.sqrt();
        assert!(imbalance_of_state(&[u; 5]).unwrap().abs() < 1e-15);
        assert!(matches!(
            imbalance_of_state(&[1.0, 1.0]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn zero_target_is_symmetric_ground_state() {
        let p = ModelParams::symmetric(10, 0.8).unwrap();
        let s = prepare_initial(0.0, &p).unwrap();
        assert_eq!(s.delta_used, 0.0);
        assert!((s.coeffs[0] - 1.0).abs() < 1e-12);
        assert!(s.coeffs[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn tilt_preparation_two_level() {
        let p = two_level();
        let spectrum = eigh_tridiagonal(&build_hamiltonian(&p)).unwrap();
        let s = prepare_from_tilt(-1.5, &p, &spectrum).unwrap();
        assert!((s.z0 - 1.5 / (1.5f64 * 1.5 + 4.0).sqrt()).abs() < 1e-14);
        assert_eq!(s.delta_used, -1.5);
        // round trip through the z0 route recovers the tilt
        let back = prepare_initial_with(s.z0, &p, &spectrum).unwrap();
        assert!((back.delta_used + 1.5).abs() < 1e-6);
    }

    #[test]
    fn two_level_preparation_closed_form() {
        // ground state of [[-δ/2, -J], [-J, δ/2]] has z = -δ/√(δ² + 4J²)
        let s = prepare_initial(0.6, &two_level()).unwrap();
        let expected_delta = -0.6 * 2.0 / (1.0f64 - 0.36).sqrt();
        assert!(
            (s.delta_used - expected_delta).abs() < 1e-7,
            "{}",
            s.delta_used
        );
        assert!((s.z0 - 0.6).abs() < 1e-8);
        // symmetric eigenbasis: (1,1)/√2 and (1,-1)/√2
        let a = s.amplitudes_fock.clone();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.coeffs[0] - r * (a[0] + a[1])).abs() < 1e-14);
        assert!((s.coeffs[1] - r * (a[0] - a[1])).abs() < 1e-14);
    }

    #[test]
    fn negative_target_mirrors_positive() {
        let p = ModelParams::symmetric(12, 1.5).unwrap();
        let plus = prepare_initial(0.4, &p).unwrap();
        let minus = prepare_initial(-0.4, &p).unwrap();
        assert!((plus.delta_used + minus.delta_used).abs() < 1e-6);
        assert!((minus.z0 + 0.4).abs() < 1e-8);
    }

    #[test]
    fn rejects_out_of_domain_targets() {
        let p = ModelParams::symmetric(6, 1.0).unwrap();
        assert!(matches!(
            prepare_initial(1.0, &p),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            prepare_initial(-1.2, &p),
            Err(Error::Domain { .. })
        ));
        let tilted = ModelParams::new(6, 1.0, 1.0, 0.2).unwrap();
        assert!(prepare_initial(0.3, &tilted).is_err());
    }

    #[test]
    fn unreachable_target_is_reported() {
        // J = 0, N = 1: any tilt localizes the particle completely, so z(delta)
        // jumps from 0 to 1 and never takes the value 0.5.
        let p = ModelParams::new(1, 0.0, 1.0, 0.0).unwrap();
        let s = prepare_initial(0.5, &p);
        assert!(matches!(s, Err(Error::NoBracket { .. })), "{s:?}");
    }

    #[test]
    fn rabi_oscillation() {
        let p = two_level();
        let spectrum = eigh_tridiagonal(&build_hamiltonian(&p)).unwrap();
        let psi = vec![0.0, 1.0];
        let state = InitialState {
            coeffs: spectrum.project(&psi).unwrap(),
            amplitudes_fock: psi,
            delta_used: f64::NAN,
            z0: 1.0,
        };
        let times: Vec<f64> = (0..50).map(|i| 0.1 * i as f64).collect();
        let trace = evolve_imbalance(&state, &spectrum, &times).unwrap();
        for (t, z) in times.iter().zip(&trace.z) {
            assert!((z - (2.0 * t).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_state_does_not_move() {
        let p = ModelParams::symmetric(16, 0.6).unwrap();
        let spectrum = eigh_tridiagonal(&build_hamiltonian(&p)).unwrap();
        let state = prepare_initial_with(0.0, &p, &spectrum).unwrap();
        let times: Vec<f64> = (0..100).map(|i| 0.37 * i as f64).collect();
        let trace = evolve_imbalance(&state, &spectrum, &times).unwrap();
        assert!(trace.z.iter().all(|z| z.abs() < 1e-12));
        assert!(window_average(&state, &spectrum, 10.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_steps() {
        let h = build_hamiltonian(&ModelParams::symmetric(4, 1.0).unwrap());
        let bound = 0.01 / h.max_row_sum();
        assert!(matches!(
            propagate_oracle(&[1.0, 0.0, 0.0, 0.0, 0.0], &h, 1.0, 2.0 * bound),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_with_zero_hamiltonian_is_identity() {
        let h = TridiagonalMatrix::new(vec![0.0; 3], vec![0.0; 2]).unwrap();
        let psi = [0.6, 0.0, 0.8];
        let out = propagate_oracle(&psi, &h, 5.0, 0.1).unwrap();
        for (a, b) in out.iter().zip(psi) {
            assert_eq!(*a, Complex64::new(b, 0.0));
        }
    }

    #[test]
    fn oracle_two_level_rabi() {
        let h = build_hamiltonian(&two_level());
        let dt = 0.01 / h.max_row_sum();
        let times: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
        let trace = oracle_imbalance(&[0.0, 1.0], &h, &times, dt).unwrap();
        for (t, z) in times.iter().zip(&trace.z) {
            assert!((z - (2.0 * t).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn window_average_rejects_non_positive() {
        let p = ModelParams::symmetric(4, 1.0).unwrap();
        let spectrum = eigh_tridiagonal(&build_hamiltonian(&p)).unwrap();
        let state = prepare_initial_with(0.2, &p, &spectrum).unwrap();
        assert!(window_average(&state, &spectrum, 0.0).is_err());
        assert!(window_average(&state, &spectrum, -1.0).is_err());
    }

    #[test]
    fn coherence_matrix_is_symmetric() {
        let p = ModelParams::symmetric(9, 0.9).unwrap();
        let spectrum = eigh_tridiagonal(&build_hamiltonian(&p)).unwrap();
        let state = prepare_initial_with(0.45, &p, &spectrum).unwrap();
        let op = EigenbasisImbalance::new(&spectrum).unwrap();
        let c = CoherenceMatrix::new(&state.coeffs, &op).unwrap();
        for a in 0..c.dim() {
            assert!(c.entry(a, a).abs() < 1e-12);
            for b in 0..c.dim() {
                assert_eq!(c.entry(a, b), c.entry(b, a));
                assert_eq!(c.frequency(a, b), -c.frequency(b, a));
            }
        }
        assert!((c.evaluate(0.0) - state.z0).abs() < 1e-10);
    }
}
