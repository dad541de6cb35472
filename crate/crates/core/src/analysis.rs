//! Spectrum structure and the closed-form scales of the double well.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{prepare_initial_with, CoherenceMatrix, EigenbasisImbalance, ImbalanceTrace};
use crate::eigensolve::{eigh_tridiagonal, Spectrum};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModelParams};

pub const DEFAULT_DOUBLET_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_ZC_THRESHOLD: f64 = 0.1;
pub const DEFAULT_WINDOW_PERIODS: f64 = 50.0;

/// Small-amplitude Josephson frequency `ω_p = 2J√(1 + Λ)` (ħ = 1).
pub fn plasma_frequency(params: &ModelParams) -> Result<f64> {
    match params.lambda() {
        Some(lambda) => Ok(2.0 * params.j() * (1.0 + lambda).sqrt()),
        None => Err(Error::Domain {
            what: "plasma frequency tunneling J",
            value: params.j(),
            domain: "(0, inf)",
        }),
    }
}

/// Top doublet splitting `ΔE/U = 2N(J/U)^N / (N−1)!`, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubletSplitting {
    pub ln_value: f64,
    pub log10_value: f64,
    /// `exp(ln_value)`; zero when it underflows.
    pub value: f64,
}

pub fn analytic_doublet_splitting(n_particles: usize, j_over_u: f64) -> Result<DoubletSplitting> {
    if n_particles < 2 {
        return Err(Error::Domain {
            what: "doublet formula particle number",
            value: n_particles as f64,
            domain: "N >= 2",
        });
    }
    if !(j_over_u > 0.0) || !j_over_u.is_finite() {
        return Err(Error::Domain {
            what: "doublet formula J/U",
            value: j_over_u,
            domain: "(0, inf)",
        });
    }
    let n = n_particles as f64;
    let ln_value =
        std::f64::consts::LN_2 + n.ln() + n * j_over_u.ln() - ln_factorial(n_particles - 1);
    Ok(DoubletSplitting {
        ln_value,
        log10_value: ln_value / std::f64::consts::LN_10,
        value: ln_value.exp(),
    })
}

/// `ln(k!)` by direct summation; exact to rounding for the sizes used here.
fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZcPrediction {
    pub value: f64,
    /// The raw formula exceeded 1: no self-trapping regime.
    pub clipped: bool,
}

/// Semiclassical critical imbalance `min(1, 2√(1+Λ)/Λ)`.
pub fn semiclassical_zc(lambda: f64) -> Result<ZcPrediction> {
    if !(lambda > 0.0) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
            domain: "(0, inf]",
        });
    }
    if lambda.is_infinite() {
        return Ok(ZcPrediction {
            value: 0.0,
            clipped: false,
        });
    }
    let raw = 2.0 * (1.0 + lambda).sqrt() / lambda;
    Ok(ZcPrediction {
        value: raw.min(1.0),
        clipped: raw > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Doublet {
    pub lower: usize,
    pub upper: usize,
    pub splitting: f64,
    /// Centroid distance to the next doublet up, if any.
    pub gap_to_next: Option<f64>,
}

impl Doublet {
    pub fn centroid(&self, spectrum: &Spectrum) -> f64 {
        0.5 * (spectrum.values()[self.lower] + spectrum.values()[self.upper])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubletReport {
    /// First eigenindex of the lowest doublet; `None` without doublets.
    pub separatrix_index: Option<usize>,
    pub doublets: Vec<Doublet>,
    pub threshold: f64,
    pub median_gap: f64,
    /// Doublets do not tile the spectrum from the separatrix to the top.
    pub irregular: bool,
}

/// Pair consecutive levels whose gap is below `threshold · median(gap)`.
pub fn classify_spectrum(spectrum: &Spectrum, threshold: f64) -> DoubletReport {
    let values = spectrum.values();
    let n = values.len();
    if n < 4 {
        return DoubletReport {
            separatrix_index: None,
            doublets: Vec::new(),
            threshold,
            median_gap: f64::NAN,
            irregular: false,
        };
    }
    let gaps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_gap = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    let cutoff = threshold * median_gap;

    let mut doublets = Vec::new();
    let mut m = 0;
    while m < gaps.len() {
        if gaps[m] < cutoff {
            doublets.push(Doublet {
                lower: m,
                upper: m + 1,
                splitting: gaps[m],
                gap_to_next: None,
            });
            m += 2;
        } else {
            m += 1;
        }
    }
    for i in 0..doublets.len().saturating_sub(1) {
        let here = 0.5 * (values[doublets[i].lower] + values[doublets[i].upper]);
        let next = 0.5 * (values[doublets[i + 1].lower] + values[doublets[i + 1].upper]);
        doublets[i].gap_to_next = Some(next - here);
    }
    let separatrix_index = doublets.first().map(|d| d.lower);
    let irregular = match separatrix_index {
        Some(start) => {
            doublets.last().map(|d| d.upper) != Some(n - 1)
                || doublets
                    .iter()
                    .enumerate()
                    .any(|(i, d)| d.lower != start + 2 * i)
        }
        None => false,
    };
    DoubletReport {
        separatrix_index,
        doublets,
        threshold,
        median_gap,
        irregular,
    }
}

/// Centroid distance between the two topmost doublets: the level spacing that
/// sets the small residual oscillation of a self-trapped state.
pub fn adjacent_doublet_gap(spectrum: &Spectrum, report: &DoubletReport) -> Result<f64> {
    let k = report.doublets.len();
    if k < 2 {
        return Err(Error::TooFewDoublets {
            needed: 2,
            found: k,
        });
    }
    Ok(report.doublets[k - 1].centroid(spectrum) - report.doublets[k - 2].centroid(spectrum))
}

/// Mean centroid distance over all consecutive doublets in the report.
pub fn mean_doublet_gap(report: &DoubletReport) -> Result<f64> {
    let gaps: Vec<f64> = report
        .doublets
        .iter()
        .filter_map(|d| d.gap_to_next)
        .collect();
    if gaps.is_empty() {
        return Err(Error::TooFewDoublets {
            needed: 2,
            found: report.doublets.len(),
        });
    }
    Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub z0_grid: Vec<f64>,
    pub zbar_over_z0: Vec<f64>,
    /// `None` when no grid point reaches the threshold.
    pub z_c_estimate: Option<f64>,
    pub lambda: f64,
    pub threshold: f64,
    pub window_periods: f64,
}

/// Window-averaged `z̄/z0` over `window_periods` plasma periods for each grid
/// point; `z_c` is the smallest `z0` whose ratio exceeds `zc_threshold`, refined
/// by one bisection step between the neighbouring grid points.
pub fn sweep_zc(
    params_symmetric: &ModelParams,
    z0_grid: &[f64],
    window_periods: f64,
    zc_threshold: f64,
) -> Result<SweepResult> {
    let spectrum = eigh_tridiagonal(&build_hamiltonian(params_symmetric))?;
    sweep_zc_with(
        params_symmetric,
        &spectrum,
        z0_grid,
        window_periods,
        zc_threshold,
    )
}

pub fn sweep_zc_with(
    params_symmetric: &ModelParams,
    spectrum: &Spectrum,
    z0_grid: &[f64],
    window_periods: f64,
    zc_threshold: f64,
) -> Result<SweepResult> {
    if z0_grid.is_empty() {
        return Err(Error::Config("empty z0 grid".into()));
    }
    if z0_grid.iter().any(|&z| !(z > 0.0 && z < 1.0)) {
        return Err(Error::Config("sweep grid values must lie in (0, 1)".into()));
    }
    if z0_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "sweep grid must be strictly ascending".into(),
        ));
    }
    if !(window_periods > 0.0) {
        return Err(Error::Config("window_periods must be > 0".into()));
    }
    let lambda = params_symmetric.lambda().ok_or(Error::Domain {
        what: "sweep tunneling J",
        value: params_symmetric.j(),
        domain: "(0, inf)",
    })?;
    let window = window_periods * 2.0 * std::f64::consts::PI / plasma_frequency(params_symmetric)?;
    let operator = EigenbasisImbalance::new(spectrum)?;

    let ratio = |z0: f64| -> Result<f64> {
        let state = prepare_initial_with(z0, params_symmetric, spectrum)?;
        let zbar = CoherenceMatrix::new(&state.coeffs, &operator)?.window_average(window);
        let r = zbar / state.z0;
        if !(-1.01..=1.01).contains(&r) {
            return Err(Error::Invariant(format!("z_bar/z0 = {r} at z0 = {z0}")));
        }
        Ok(r)
    };

    let zbar_over_z0 = z0_grid
        .par_iter()
        .map(|&z0| ratio(z0))
        .collect::<Result<Vec<f64>>>()?;

    let z_c_estimate = match zbar_over_z0.iter().position(|&r| r > zc_threshold) {
        None => None,
        Some(0) => Some(z0_grid[0]),
        Some(i) => {
            let mid = 0.5 * (z0_grid[i - 1] + z0_grid[i]);
            Some(if ratio(mid)? > zc_threshold {
                mid
            } else {
                z0_grid[i]
            })
        }
    };

    Ok(SweepResult {
        z0_grid: z0_grid.to_vec(),
        zbar_over_z0,
        z_c_estimate,
        lambda,
        threshold: zc_threshold,
        window_periods,
    })
}

/// Angular frequency from the mean spacing of zero crossings of `z − ⟨z⟩`.
///
/// A crossing is registered when the signal moves from beyond `−h` to beyond
/// `+h` (or back), with `h` a tenth of the peak deviation, so rounding-level
/// wiggles during a collapse are not counted. Spacings longer than twice the
/// median (collapse gaps) are dropped before averaging.
pub fn dominant_angular_frequency(trace: &ImbalanceTrace) -> Option<f64> {
    if trace.len() < 3 {
        return None;
    }
    let mean = trace.mean();
    let peak = trace.z.iter().fold(0.0f64, |a, z| a.max((z - mean).abs()));
    if peak == 0.0 {
        return None;
    }
    let band = 0.1 * peak;
    let mut side = 0i8;
    let mut crossings = Vec::new();
    for (t, z) in trace.times.iter().zip(&trace.z) {
        let x = z - mean;
        let s = if x > band {
            1
        } else if x < -band {
            -1
        } else {
            0
        };
        if s != 0 && s != side {
            if side != 0 {
                crossings.push(*t);
            }
            side = s;
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    let spacings: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = spacings.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let kept: Vec<f64> = spacings
        .into_iter()
        .filter(|&s| s <= 2.0 * median)
        .collect();
    let mean_spacing = kept.iter().sum::<f64>() / kept.len() as f64;
    Some(std::f64::consts::PI / mean_spacing)
}
