//! Solvers on uniform sample sets: Prony, Matrix Pencil, the histogram
//! variant of decimated Prony, and least-squares amplitudes.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::decimation::admissible_interval;
use crate::error::{Result, SrError};
use crate::linalg::{self, CMatrix, CVector};
use crate::signal_model::MeasurementOracle;

/// Hankel systems with a larger condition number are rejected.
pub const MAX_COND: f64 = 1e14;
/// Relative cutoff below which a pencil singular value counts as zero.
pub const RANK_TOL: f64 = 1e-14;

/// Samples `mu(rho (k0 + k) + t)` for `k = 0..K-1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleVector {
    pub values: Vec<Complex64>,
    pub rho: f64,
    pub t: f64,
    /// Exponent of the first sample; amplitudes are referenced to exponent 0.
    pub k0: i64,
}

impl SampleVector {
    pub fn new(values: Vec<Complex64>, rho: f64, t: f64, k0: i64) -> Self {
        SampleVector { values, rho, t, k0 }
    }

    /// Window of `count` samples starting at exponent `k0`.
    pub fn from_oracle(oracle: &MeasurementOracle, rho: f64, t: f64, k0: i64, count: usize) -> Result<Self> {
        let values = (0..count as i64)
            .map(|k| oracle.eval(rho * (k0 + k) as f64 + t))
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleVector { values, rho, t, k0 })
    }

    /// Window of `count` samples centered on exponent 0.
    pub fn centered(oracle: &MeasurementOracle, rho: f64, t: f64, count: usize) -> Result<Self> {
        Self::from_oracle(oracle, rho, t, centered_start(count), count)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Frequencies the samples were taken at.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.values.len() as i64)
            .map(|k| self.rho * (self.k0 + k) as f64 + self.t)
            .collect()
    }

    fn exponents(&self) -> Vec<f64> {
        (0..self.values.len() as i64).map(|k| (self.k0 + k) as f64).collect()
    }
}

/// First exponent of a window of `count` samples centered on 0.
pub fn centered_start(count: usize) -> i64 {
    -((count / 2) as i64)
}

/// Estimated `Phi_j = e^{i rate x_j}` with their amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeEstimate {
    pub phis: Vec<Complex64>,
    pub amps: Vec<Complex64>,
    pub rate: f64,
    /// Largest `|1 - |root||` removed by projecting onto the circle.
    pub radial_deviation: f64,
    pub amp_residual: f64,
    pub amp_cond: f64,
}

impl NodeEstimate {
    /// Arguments of the estimated `Phi_j`, in `(-pi, pi]`.
    pub fn angles(&self) -> Vec<f64> {
        self.phis.iter().map(|p| p.arg()).collect()
    }

    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }
}

/// Least-squares amplitudes and fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeFit {
    pub amps: Vec<Complex64>,
    pub residual: f64,
    pub cond: f64,
    pub ill_conditioned: bool,
}

/// Solve `sum_j a_j e^{i w_k y_j} = values_k` in the least-squares sense.
pub fn amplitude_ls_at(angles: &[f64], weights: &[f64], values: &[Complex64]) -> Result<AmplitudeFit> {
    if values.len() < angles.len() || weights.len() != values.len() {
        return Err(SrError::SampleCount {
            expected: angles.len(),
            got: values.len(),
        });
    }
    let v = CMatrix::from_fn(values.len(), angles.len(), |k, j| Complex64::cis(weights[k] * angles[j]));
    let b = CVector::from_row_slice(values);
    let sol = linalg::lstsq(&v, &b)?;
    let ill = sol.cond > MAX_COND;
    if ill {
        warn!("amplitude system condition {:.3e} exceeds {MAX_COND:e}", sol.cond);
    }
    Ok(AmplitudeFit {
        amps: sol.x.iter().copied().collect(),
        residual: sol.residual,
        cond: sol.cond,
        ill_conditioned: ill,
    })
}

/// Amplitudes for unit `phis` from a sample window, referenced to exponent 0.
pub fn amplitude_ls(phis: &[Complex64], samples: &SampleVector) -> Result<AmplitudeFit> {
    let angles: Vec<f64> = phis.iter().map(|p| p.arg()).collect();
    amplitude_ls_at(&angles, &samples.exponents(), &samples.values)
}

fn project(roots: &[Complex64]) -> (Vec<Complex64>, f64) {
    let dev = roots.iter().map(|r| (1.0 - r.norm()).abs()).fold(0.0, f64::max);
    let phis = roots.iter().map(|r| Complex64::cis(r.arg())).collect();
    (phis, dev)
}

fn finish(roots: Vec<Complex64>, n: usize, samples: &SampleVector) -> Result<NodeEstimate> {
    if roots.len() != n || roots.iter().any(|r| !r.is_finite()) {
        return Err(SrError::SolverFailure(format!("expected {n} finite roots, got {}", roots.len())));
    }
    let (phis, radial_deviation) = project(&roots);
    let fit = amplitude_ls(&phis, samples)?;
    Ok(NodeEstimate {
        phis,
        amps: fit.amps,
        rate: samples.rho,
        radial_deviation,
        amp_residual: fit.residual,
        amp_cond: fit.cond,
    })
}

/// Prony's method. Needs at least `2n` samples.
pub fn prony(samples: &SampleVector, n: usize) -> Result<NodeEstimate> {
    let k = samples.len();
    if n == 0 || k < 2 * n {
        return Err(SrError::SampleCount {
            expected: 2 * n,
            got: k,
        });
    }
    let y = &samples.values;
    let rows = k - n;
    // sum_l c_l y_{m+l} = -y_{m+n}
    let h = CMatrix::from_fn(rows, n, |m, l| y[m + l]);
    let rhs = CVector::from_fn(rows, |m, _| -y[m + n]);
    let sol = linalg::lstsq(&h, &rhs)?;
    if !(sol.cond <= MAX_COND) {
        return Err(SrError::DegenerateSampleSet { cond: sol.cond });
    }
    let roots = if n == 1 {
        vec![-sol.x[0]]
    } else {
        let mut companion = CMatrix::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            companion[(i, n - 1)] = -sol.x[i];
        }
        linalg::eigenvalues(&companion)?
    };
    finish(roots, n, samples)
}

/// Default pencil parameter, `floor(K/2)` clamped to `[n, K-n]`.
pub fn default_pencil(k: usize, n: usize) -> usize {
    (k / 2).clamp(n, k.saturating_sub(n).max(n))
}

/// Matrix Pencil method with pencil parameter `l`.
pub fn matrix_pencil(samples: &SampleVector, n: usize, l: usize) -> Result<NodeEstimate> {
    let k = samples.len();
    if n == 0 || k < 2 * n {
        return Err(SrError::SampleCount {
            expected: 2 * n,
            got: k,
        });
    }
    if l < n || l + n > k {
        return Err(SrError::Domain(format!("pencil parameter {l} outside [{n}, {}]", k - n)));
    }
    let y = &samples.values;
    let hankel = CMatrix::from_fn(k - l, l + 1, |i, j| y[i + j]);
    let svd = linalg::svd(&hankel)?;
    let (s_max, s_n) = (svd.s[0], svd.s[n - 1]);
    if !(s_n > RANK_TOL * s_max) {
        let rank = svd.s.iter().take_while(|&&s| s > RANK_TOL * s_max).count();
        return Err(SrError::ModelOrderUnreachable { rank, n });
    }
    // rows of W span the signal subspace: W = C B^T, shifts act as C Z C^{-1}
    let w = svd.v.columns(0, n).adjoint();
    let w1 = w.columns(0, l).into_owned();
    let w2 = w.columns(1, l).into_owned();
    let pencil = w2 * linalg::pinv(&w1, RANK_TOL)?;
    finish(linalg::eigenvalues(&pencil)?, n, samples)
}

/// Parameters of the histogram baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramParams {
    pub n_rho: usize,
    pub n_bins: usize,
}

impl HistogramParams {
    /// `N_rho = 900`, `N_b = 3 / delta`.
    pub fn for_separation(delta: f64) -> Self {
        HistogramParams {
            n_rho: 900,
            n_bins: (3.0 / delta).ceil().max(1.0) as usize,
        }
    }
}

/// Pre-images in `(-pi/2, pi/2]` of `arg(phi)` under `x -> rate x`.
fn pre_images(phi: Complex64, rate: f64) -> Vec<f64> {
    let theta = phi.arg();
    let half = std::f64::consts::FRAC_PI_2;
    let tau = std::f64::consts::TAU;
    let lo = ((-half * rate - theta) / tau).floor() as i64;
    let hi = ((half * rate - theta) / tau).ceil() as i64;
    (lo..=hi)
        .map(|m| (theta + tau * m as f64) / rate)
        .filter(|x| *x > -half && *x <= half)
        .collect()
}

/// Decimated Prony with histogram voting over many real-valued rates.
pub fn decimated_prony_histogram(oracle: &MeasurementOracle, n: usize, params: HistogramParams) -> Result<NodeEstimate> {
    if params.n_rho == 0 || params.n_bins == 0 || n == 0 {
        return Err(SrError::Domain("histogram needs n, N_rho, N_b >= 1".into()));
    }
    let omega = oracle.omega_max();
    let (lo, hi) = admissible_interval(omega, n);
    let rates: Vec<f64> = if params.n_rho == 1 {
        vec![hi]
    } else {
        (0..params.n_rho)
            .map(|i| lo + (hi - lo) * i as f64 / (params.n_rho - 1) as f64)
            .collect()
    };
    let votes: Vec<Vec<f64>> = rates
        .par_iter()
        .map(|&rate| {
            let solved = SampleVector::centered(oracle, rate, 0.0, 2 * n).and_then(|s| prony(&s, n));
            match solved {
                Ok(est) => est.phis.iter().flat_map(|&p| pre_images(p, rate)).collect(),
                Err(_) => Vec::new(),
            }
        })
        .collect();

    let half = std::f64::consts::FRAC_PI_2;
    let width = std::f64::consts::PI / params.n_bins as f64;
    let mut count = vec![0usize; params.n_bins];
    let mut sum = vec![0.0f64; params.n_bins];
    for x in votes.iter().flatten() {
        let b = (((x + half) / width) as usize).min(params.n_bins - 1);
        count[b] += 1;
        sum[b] += x;
    }
    let mut order: Vec<usize> = (0..params.n_bins).filter(|&b| count[b] > 0).collect();
    order.sort_by(|&a, &b| count[b].cmp(&count[a]).then(a.cmp(&b)));
    let mut taken = vec![false; params.n_bins];
    let mut peaks = Vec::with_capacity(n);
    for b in order {
        if peaks.len() == n {
            break;
        }
        let near = b.saturating_sub(1)..=(b + 1).min(params.n_bins - 1);
        if near.clone().any(|j| taken[j]) {
            continue;
        }
        taken[b] = true;
        let (s, c) = near.fold((0.0, 0usize), |(s, c), j| (s + sum[j], c + count[j]));
        peaks.push(s / c as f64);
    }
    if peaks.len() < n {
        return Err(SrError::InsufficientConsensus { found: peaks.len(), n });
    }
    peaks.sort_by(|a, b| a.total_cmp(b));

    let top = omega.floor() as i64;
    let freqs: Vec<f64> = (-top..=top).map(|k| k as f64).collect();
    let values = freqs.iter().map(|&w| oracle.eval(w)).collect::<Result<Vec<_>>>()?;
    let fit = amplitude_ls_at(&peaks, &freqs, &values)?;
    Ok(NodeEstimate {
        phis: peaks.iter().map(|&x| Complex64::cis(x)).collect(),
        amps: fit.amps,
        rate: 1.0,
        radial_deviation: 0.0,
        amp_residual: fit.residual,
        amp_cond: fit.cond,
    })
}

/// Matrix Pencil on every integer sample in `[-Omega, Omega]`.
pub fn matrix_pencil_full(oracle: &MeasurementOracle, n: usize) -> Result<NodeEstimate> {
    let top = oracle.omega_max().floor() as i64;
    let count = (2 * top + 1) as usize;
    let samples = SampleVector::from_oracle(oracle, 1.0, 0.0, -top, count)?;
    matrix_pencil(&samples, n, default_pencil(count, n))
}

/// Prony on `2n` consecutive integer samples around 0.
pub fn prony_undecimated(oracle: &MeasurementOracle, n: usize) -> Result<NodeEstimate> {
    prony(&SampleVector::centered(oracle, 1.0, 0.0, 2 * n)?, n)
}
