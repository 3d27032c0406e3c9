//! Property suite behind `spike-sr validate`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dealias::{dealias_node, AliasedPair};
use crate::decimation::coprime_shift;
use crate::error::Result;
use crate::experiments::{rho_sweep_experiment, ExperimentSpec};
use crate::linalg;
use crate::signal_model::{random_amplitudes, wrap_angle, wrap_dist, ClusterGeometry, SpikeTrain};
use crate::spectral::{
    chord_product, congruence_ratios, eigen_singular_gap, factorization_residual, ostrowski_ratios,
    predicted_slopes, vandermonde_scaling_probe, vandermonde_square,
};

/// Outcome of one property.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub name: &'static str,
    pub passed: bool,
    /// Informational properties never fail the suite.
    pub gating: bool,
    pub detail: String,
}

/// A `(V, D)` pair violating the complex-diagonal sandwich.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub nodes: Vec<f64>,
    pub d: Vec<[f64; 2]>,
    pub ratios: Vec<f64>,
    pub bounds: [f64; 2],
    pub eig_sv_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub properties: Vec<PropertyReport>,
    pub counterexamples: Vec<Counterexample>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed || !p.gating)
    }
}

/// Nodes drawn uniformly from `(-pi/2, pi/2]` with pairwise wrapped
/// distance at least `min_sep`.
pub fn random_nodes<R: Rng>(rng: &mut R, n: usize, min_sep: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| FRAC_PI_2 - rng.random::<f64>() * PI).collect();
        let ok = (0..n).all(|i| (i + 1..n).all(|j| wrap_dist(x[i], x[j]) >= min_sep));
        if ok {
            return x;
        }
    }
}

pub fn random_spike<R: Rng>(rng: &mut R, n: usize) -> SpikeTrain {
    let x = random_nodes(rng, n, 1e-3);
    let a = random_amplitudes(rng, n);
    SpikeTrain::new(x, a).expect("generated nodes are valid")
}

pub const FACTORIZATION_TOL: f64 = 1e-10;
pub const SANDWICH_SLACK: f64 = 1e-8;
pub const DETERMINANT_TOL: f64 = 1e-10;
pub const SCALING_TOL: f64 = 0.15;
pub const DEALIAS_TOL: f64 = 1e-12;

pub fn check_factorization(trials: usize, seed: u64) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = rng.random_range(2..=8);
        worst = worst.max(factorization_residual(&random_spike(&mut rng, n)));
    }
    PropertyReport {
        name: "factorization",
        passed: worst <= FACTORIZATION_TOL,
        gating: true,
        detail: format!("{trials} spikes, max relative residual {worst:.3e}"),
    }
}

fn bounds(d: &[Complex64]) -> [f64; 2] {
    let m: Vec<f64> = d.iter().map(|z| z.norm()).collect();
    [m.iter().copied().fold(f64::INFINITY, f64::min), m.iter().copied().fold(0.0, f64::max)]
}

fn within(r: &[f64], [lo, hi]: [f64; 2]) -> bool {
    r.iter().all(|&t| t >= lo * (1.0 - SANDWICH_SLACK) && t <= hi * (1.0 + SANDWICH_SLACK))
}

/// Hermitian congruence sandwich (gating) and the same sandwich with a
/// complex diagonal plus the eigenvalue/singular-value match
/// (informational, counterexamples collected).
pub fn check_sandwich(trials: usize, seed: u64) -> (PropertyReport, PropertyReport, Vec<Counterexample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut herm_fail = 0;
    let mut skipped = 0;
    let mut cex = Vec::new();
    let mut outside = 0;
    let mut mismatched = 0;
    for _ in 0..trials {
        let n = rng.random_range(2..=6);
        let x = random_nodes(&mut rng, n, 0.05);
        let d = random_amplitudes(&mut rng, n);
        let v = vandermonde_square(&x);
        let b = bounds(&d);
        match congruence_ratios(&v, &d) {
            Ok(r) if within(&r, b) => {}
            Ok(_) => herm_fail += 1,
            Err(_) => {
                skipped += 1;
                continue;
            }
        }
        let ratios = ostrowski_ratios(&v, &d).unwrap_or_default();
        let gap = eigen_singular_gap(&v, &d).unwrap_or(f64::NAN);
        let inside = within(&ratios, b);
        let matched = gap <= SANDWICH_SLACK;
        outside += usize::from(!inside);
        mismatched += usize::from(!matched);
        if !inside || !matched {
            cex.push(Counterexample {
                nodes: x,
                d: d.iter().map(|z| [z.re, z.im]).collect(),
                ratios,
                bounds: b,
                eig_sv_gap: gap,
            });
        }
    }
    let tested = trials - skipped;
    let herm = PropertyReport {
        name: "congruence-sandwich",
        passed: herm_fail == 0 && tested > 0,
        gating: true,
        detail: format!("{tested} pairs, {herm_fail} outside [min|d|, max|d|]"),
    };
    let complex = PropertyReport {
        name: "complex-diagonal-sandwich",
        passed: cex.is_empty(),
        gating: false,
        detail: format!(
            "{tested} pairs, {outside} ratios outside [min|d|, max|d|], {mismatched} with |eig| != sigma"
        ),
    };
    (herm, complex, cex)
}

pub fn check_determinant(trials: usize, seed: u64) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = rng.random_range(2..=8);
        let x = random_nodes(&mut rng, n, 0.05);
        let v = vandermonde_square(&x);
        let det = linalg::determinant(&v).norm();
        let chord = chord_product(&x);
        let sv: f64 = linalg::singular_values(&v).iter().product();
        worst = worst.max((det - chord).abs() / chord).max((sv - chord).abs() / chord);
    }
    PropertyReport {
        name: "determinant-product",
        passed: worst <= DETERMINANT_TOL,
        gating: true,
        detail: format!("{trials} node sets, max relative error {worst:.3e}"),
    }
}

/// Logarithmic grid from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    let (a, b) = (hi.ln(), lo.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

pub fn check_scaling(seed: u64) -> Result<PropertyReport> {
    let geom = ClusterGeometry {
        sizes: vec![3, 2],
        delta: 1e-2,
        nu: vec![2.0],
        eta: 1.0,
    };
    let table = vandermonde_scaling_probe(&geom, &log_grid(1e-2, 1e-4, 8), seed)?;
    let slopes: Vec<f64> = table.slopes().iter().map(|f| f.slope).collect();
    let want = predicted_slopes(&geom.sizes);
    let passed = slopes.iter().zip(&want).all(|(s, w)| (s - w).abs() <= SCALING_TOL);
    Ok(PropertyReport {
        name: "vandermonde-scaling",
        passed,
        gating: true,
        detail: format!("slopes {slopes:.3?}, expected {want:?}"),
    })
}

/// Noiseless de-aliasing of `nodes` points per rate `2..=max_rho`.
pub fn check_dealias(max_rho: u64, nodes: usize) -> PropertyReport {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for rho in 2..=max_rho {
        let t = (2..).find(|&t| crate::decimation::gcd(t, rho) == 1).expect("co-prime exists");
        for k in 0..nodes {
            let x = FRAC_PI_2 - PI * (k as f64 + 0.5) / nodes as f64;
            let pair = AliasedPair {
                phi_rho: Complex64::cis(wrap_angle(rho as f64 * x)),
                phi_t: Complex64::cis(wrap_angle(t as f64 * x)),
                rho,
                t,
            };
            match dealias_node(&pair) {
                Ok(est) => worst = worst.max(wrap_dist(est, x)),
                Err(_) => failures += 1,
            }
        }
    }
    PropertyReport {
        name: "dealias-exhaustive",
        passed: failures == 0 && worst <= DEALIAS_TOL,
        gating: true,
        detail: format!("rho 2..={max_rho}, {nodes} nodes each, {failures} failures, max error {worst:.3e}"),
    }
}

pub fn check_rho_scoring(seed: u64) -> Result<PropertyReport> {
    let mut spec = ExperimentSpec::clustered(vec![3], 2.0, 0.5, 300.0);
    spec.srf = Some(6.0);
    spec.seed = seed;
    let s = rho_sweep_experiment(&spec)?.summary;
    Ok(PropertyReport {
        name: "toeplitz-scoring",
        passed: s.spearman >= 0.9 && s.ratio_spread <= 50.0,
        gating: true,
        detail: format!("spearman {:.3}, ratio spread {:.3}", s.spearman, s.ratio_spread),
    })
}

pub fn check_shift(max_omega: u64) -> PropertyReport {
    let mut bad = 0;
    for omega in 20..=max_omega {
        for n in 2..=4usize {
            let lo = (omega as f64 / (2.0 * (2 * n - 1) as f64)).ceil() as u64;
            for rho in lo.max(2)..=omega / (2 * n as u64 - 1) {
                if let Ok(t) = coprime_shift(rho, omega as f64, n) {
                    if crate::decimation::gcd(t, rho) != 1 || t < 2 || rho * (2 * n as u64 - 2) + t > omega {
                        bad += 1;
                    }
                }
            }
        }
    }
    PropertyReport {
        name: "coprime-shift",
        passed: bad == 0,
        gating: true,
        detail: format!("{bad} invalid shifts"),
    }
}

/// The whole suite with the default sizes.
pub fn run_suite(seed: u64) -> Result<SuiteReport> {
    let mut properties = vec![check_factorization(200, seed)];
    let (herm, complex, counterexamples) = check_sandwich(1000, seed.wrapping_add(1));
    properties.push(herm);
    properties.push(complex);
    properties.push(check_determinant(100, seed.wrapping_add(2)));
    properties.push(check_scaling(seed.wrapping_add(3))?);
    properties.push(check_dealias(30, 1000));
    properties.push(check_rho_scoring(seed.wrapping_add(4))?);
    properties.push(check_shift(200));
    Ok(SuiteReport {
        properties,
        counterexamples,
    })
}
