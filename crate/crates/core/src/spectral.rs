//! Vandermonde and sample-Toeplitz matrices and their singular spectra.
//!
//! For `n` nodes, the Toeplitz matrix of the samples `mu_0 .. mu_{2n-2}` is
//! `T[j][k] = mu_{n-1+j-k}` and factors as `T = V_n D V_n^*` with
//! `V_n = [e^{i k x_j}]_{k=0..n-1}` and `D = diag(a_j e^{i(n-1)x_j})`.
//! The `(M+1)`-th singular value of `T` built at a decimation rate `rho`
//! tracks the squared minimal separation of the decimated nodes, which is
//! what rate selection relies on.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SrError};
use crate::linalg::{self, CMatrix, CVector};
use crate::signal_model::{make_clustered_config, multiplicities, ClusterGeometry, MeasurementOracle, SpikeTrain};
use crate::stats::{loglog_fit, LinearFit};

/// `V[k][x] = e^{i k x}` with rows indexed by `sample_set`, columns by `nodes`.
pub fn vandermonde(nodes: &[f64], sample_set: &[i64]) -> CMatrix {
    CMatrix::from_fn(sample_set.len(), nodes.len(), |r, c| {
        Complex64::cis(sample_set[r] as f64 * nodes[c])
    })
}

/// Square Vandermonde matrix `V_n` on the sample set `{0, .., n-1}`.
pub fn vandermonde_square(nodes: &[f64]) -> CMatrix {
    let set: Vec<i64> = (0..nodes.len() as i64).collect();
    vandermonde(nodes, &set)
}

/// Product of pairwise chord lengths `prod_{k<j} |e^{ix_j} - e^{ix_k}|`.
pub fn chord_product(nodes: &[f64]) -> f64 {
    let mut p = 1.0;
    for (j, &xj) in nodes.iter().enumerate() {
        for &xk in &nodes[..j] {
            p *= (Complex64::cis(xj) - Complex64::cis(xk)).norm();
        }
    }
    p
}

/// `n x n` Toeplitz matrix of samples taken at rate `rho`.
#[derive(Debug, Clone)]
pub struct SampleToeplitz {
    n: usize,
    rho: u64,
    matrix: CMatrix,
    singular_values: Vec<f64>,
}

impl SampleToeplitz {
    /// Build from `mu_0 .. mu_{2n-2}`; entry `(j, k)` is `mu_{n-1+j-k}`.
    pub fn from_samples(samples: &[Complex64], n: usize, rho: u64) -> Result<Self> {
        if n == 0 || samples.len() != 2 * n - 1 {
            return Err(SrError::SampleCount {
                expected: (2 * n).saturating_sub(1),
                got: samples.len(),
            });
        }
        let matrix = CMatrix::from_fn(n, n, |j, k| samples[n - 1 + j - k]);
        let singular_values = linalg::singular_values(&matrix);
        Ok(Self {
            n,
            rho,
            matrix,
            singular_values,
        })
    }

    /// Query `mu(rho k)` for `k = 0..=2n-2` and build `T_rho`.
    pub fn from_oracle(oracle: &MeasurementOracle, rho: u64, n: usize) -> Result<Self> {
        let samples = (0..2 * n.max(1) - 1)
            .map(|k| oracle.eval((rho * k as u64) as f64))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(&samples, n, rho)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> u64 {
        self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.matrix[(j, k)]
    }

    /// Descending singular values.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// One-based singular value `sigma_i`.
    pub fn sigma(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.n {
            return Err(SrError::Index(format!("sigma_{i} of a {0}x{0} matrix", self.n)));
        }
        Ok(self.singular_values[i - 1])
    }
}

/// Free-function form of [`SampleToeplitz::from_samples`] at rate 1.
pub fn toeplitz_from_samples(samples: &[Complex64], n: usize) -> Result<SampleToeplitz> {
    SampleToeplitz::from_samples(samples, n, 1)
}

/// `V_n diag(a_j e^{i(n-1)x_j}) V_n^*`.
pub fn factorized_toeplitz(spike: &SpikeTrain) -> CMatrix {
    let n = spike.len();
    let v = vandermonde_square(spike.nodes());
    let d: Vec<Complex64> = spike
        .nodes()
        .iter()
        .zip(spike.amps())
        .map(|(&x, &a)| a * Complex64::cis((n as f64 - 1.0) * x))
        .collect();
    &v * CMatrix::from_diagonal(&CVector::from_vec(d)) * v.adjoint()
}

/// Relative Frobenius residual between the Toeplitz matrix of the given
/// samples and the Vandermonde factorization of `spike`.
pub fn factorization_residual_of(samples: &[Complex64], spike: &SpikeTrain) -> Result<f64> {
    let t = toeplitz_from_samples(samples, spike.len())?;
    Ok(linalg::relative_frobenius(t.matrix(), &factorized_toeplitz(spike)))
}

/// Residual of the factorization for the clean samples `mu(0) .. mu(2n-2)`.
pub fn factorization_residual(spike: &SpikeTrain) -> f64 {
    let n = spike.len();
    let samples: Vec<Complex64> = (0..2 * n - 1).map(|k| spike.fourier_sample(k as f64)).collect();
    factorization_residual_of(&samples, spike).expect("sample count matches by construction")
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    linalg::singular_values(m)
}

fn check_ratio_inputs(v: &CMatrix, d: &[Complex64]) -> Result<(CMatrix, Vec<f64>)> {
    let n = v.nrows();
    if v.ncols() != n || d.len() != n {
        return Err(SrError::Index(format!(
            "V is {}x{} with {} diagonal entries",
            v.nrows(),
            v.ncols(),
            d.len()
        )));
    }
    let gram = v * v.adjoint();
    let lam = linalg::hermitian_eigenvalues(&gram);
    if !(lam[n - 1] > lam[0] * 1e-14) {
        return Err(SrError::RatiosUndefined);
    }
    Ok((gram, lam))
}

/// `theta_i = sigma_i(V^* D V) / lambda_i(V V^*)`, both sorted descending.
pub fn ostrowski_ratios(v: &CMatrix, d: &[Complex64]) -> Result<Vec<f64>> {
    let (_, lam) = check_ratio_inputs(v, d)?;
    let q = v.adjoint() * CMatrix::from_diagonal(&CVector::from_row_slice(d)) * v;
    let sv = linalg::singular_values(&q);
    Ok(sv.iter().zip(&lam).map(|(s, l)| s / l).collect())
}

/// Ratios for the Hermitian congruence `|D|^{1/2} V V^* |D|^{1/2}`, the
/// setting in which Ostrowski's inertia bound applies directly.
pub fn congruence_ratios(v: &CMatrix, d: &[Complex64]) -> Result<Vec<f64>> {
    let (gram, lam) = check_ratio_inputs(v, d)?;
    let s = CMatrix::from_diagonal(&CVector::from_iterator(
        d.len(),
        d.iter().map(|z| Complex64::new(z.norm().sqrt(), 0.0)),
    ));
    let congruent = &s * gram * &s;
    let mu = linalg::hermitian_eigenvalues(&congruent);
    Ok(mu.iter().zip(&lam).map(|(m, l)| m / l).collect())
}

/// Largest relative gap between the sorted `|eig(Q)|` and `sigma(Q)` for
/// `Q = V^* D V`.
pub fn eigen_singular_gap(v: &CMatrix, d: &[Complex64]) -> Result<f64> {
    let q = v.adjoint() * CMatrix::from_diagonal(&CVector::from_row_slice(d)) * v;
    let sv = linalg::singular_values(&q);
    let mut ev: Vec<f64> = linalg::eigenvalues(&q)?.iter().map(|z| z.norm()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(sv
        .iter()
        .zip(&ev)
        .map(|(s, e)| (s - e).abs() / s.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}

/// Singular values of `V_n` over a grid of separations, the geometry held
/// fixed up to rescaling.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingTable {
    pub deltas: Vec<f64>,
    /// `sigmas[i]` is the descending spectrum at `deltas[i]`.
    pub sigmas: Vec<Vec<f64>>,
}

impl ScalingTable {
    /// Log-log slope of each singular value index against delta.
    pub fn slopes(&self) -> Vec<LinearFit> {
        let n = self.sigmas.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| {
                let col: Vec<f64> = self.sigmas.iter().map(|s| s[i]).collect();
                loglog_fit(&self.deltas, &col).unwrap_or(LinearFit {
                    slope: f64::NAN,
                    intercept: f64::NAN,
                    stderr: f64::NAN,
                })
            })
            .collect()
    }
}

/// Slopes predicted by the multiplicity structure: `ell_m` singular values
/// scaling like `delta^{m-1}`, in descending-singular-value order.
pub fn predicted_slopes(sizes: &[usize]) -> Vec<f64> {
    multiplicities(sizes)
        .iter()
        .enumerate()
        .flat_map(|(m, &ell)| std::iter::repeat_n(m as f64, ell))
        .collect()
}

pub fn vandermonde_scaling_probe(
    template: &ClusterGeometry,
    delta_grid: &[f64],
    seed: u64,
) -> Result<ScalingTable> {
    let mut sigmas = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let geom = ClusterGeometry {
            delta,
            ..template.clone()
        };
        let (spike, _) = make_clustered_config(&geom, None, seed)?;
        sigmas.push(linalg::singular_values(&vandermonde_square(spike.nodes())));
    }
    Ok(ScalingTable {
        deltas: delta_grid.to_vec(),
        sigmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vandermonde_examples() {
        let v = vandermonde(&[0.0], &[0]);
        assert_eq!(v[(0, 0)], c(1.0, 0.0));
        let v = vandermonde(&[0.0, FRAC_PI_2], &[0, 1]);
        assert!((v[(1, 1)] - c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(v[(0, 1)], c(1.0, 0.0));
        assert_eq!(v[(1, 0)], c(1.0, 0.0));
    }

    #[test]
    fn toeplitz_examples() {
        let t = toeplitz_from_samples(&[c(2.0, 1.0)], 1).unwrap();
        assert_eq!(t.entry(0, 0), c(2.0, 1.0));
        let t = toeplitz_from_samples(&[c(1.0, 0.0); 3], 2).unwrap();
        assert_eq!(t.matrix(), &CMatrix::from_element(2, 2, c(1.0, 0.0)));
        assert!((t.sigma(1).unwrap() - 2.0).abs() < 1e-14);
        assert!(t.sigma(2).unwrap() < 1e-14);
        assert!(t.sigma(3).is_err());
        assert!(matches!(
            toeplitz_from_samples(&[c(1.0, 0.0); 4], 2),
            Err(SrError::SampleCount { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn toeplitz_index_convention() {
        let samples: Vec<Complex64> = (0..7).map(|k| c(k as f64, 0.0)).collect();
        let t = toeplitz_from_samples(&samples, 4).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                assert_eq!(t.entry(j, k).re, (3 + j - k) as f64);
            }
        }
    }

    #[test]
    fn single_node_residual_vanishes() {
        let s = SpikeTrain::new(vec![0.7], vec![c(-1.2, 0.4)]).unwrap();
        assert!(factorization_residual(&s) < 1e-15);
    }

    #[test]
    fn ratios_trivial_cases() {
        let v = vandermonde_square(&[-0.9, 0.2, 1.1]);
        let ones = vec![c(1.0, 0.0); 3];
        for th in ostrowski_ratios(&v, &ones).unwrap() {
            assert!((th - 1.0).abs() < 1e-9);
        }
        let scaled = vec![c(0.0, 2.5); 3];
        for th in ostrowski_ratios(&v, &scaled).unwrap() {
            assert!((th - 2.5).abs() < 1e-9);
        }
        let singular = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(
            ostrowski_ratios(&singular, &ones[..2]),
            Err(SrError::RatiosUndefined)
        ));
    }

    #[test]
    fn predicted_slopes_follow_multiplicities() {
        assert_eq!(predicted_slopes(&[3, 2]), vec![0.0, 0.0, 1.0, 1.0, 2.0]);
        assert_eq!(predicted_slopes(&[2]), vec![0.0, 1.0]);
        assert_eq!(predicted_slopes(&[1]), vec![0.0]);
    }

    #[test]
    fn scaling_probe_single_node_is_flat() {
        let g = ClusterGeometry { sizes: vec![1], delta: 1e-2, nu: vec![1.0], eta: 0.5 };
        let t = vandermonde_scaling_probe(&g, &[1e-2, 1e-3, 1e-4], 0).unwrap();
        assert!(t.slopes()[0].slope.abs() < 1e-12);
    }

    #[test]
    fn scaling_probe_pair() {
        let g = ClusterGeometry { sizes: vec![2], delta: 1e-2, nu: vec![1.0], eta: 0.5 };
        let grid: Vec<f64> = (0..8).map(|i| 10f64.powf(-2.0 - 2.0 * i as f64 / 7.0)).collect();
        let t = vandermonde_scaling_probe(&g, &grid, 0).unwrap();
        let s = t.slopes();
        assert!(s[0].slope.abs() < 0.01, "{:?}", s);
        assert!((s[1].slope - 1.0).abs() < 0.01, "{:?}", s);
    }
}
