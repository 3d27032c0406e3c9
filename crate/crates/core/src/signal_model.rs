//! Spike trains on the circle, clustered node geometries and the noisy
//! Fourier measurement model.
//!
//! A spike train is a finite sum `sum_j a_j delta(x - x_j)` with nodes on
//! the circle `R mod 2pi`. Its Fourier transform `mu(w) = sum_j a_j e^{i w x_j}`
//! is observed on a band `[-Omega, Omega]` with additive noise bounded in
//! sup-norm by `epsilon`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrError};

/// Reduce an angle to the principal range `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Circle distance `|(x - y) mod (-pi, pi]|`, always in `[0, pi]`.
pub fn wrap_dist(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    let d = (hi - lo).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Minimal wrapped separation of `rho * X`.
pub fn min_separation(nodes: &[f64], rho: f64) -> Result<f64> {
    if nodes.len() < 2 {
        return Err(SrError::UndefinedSeparation);
    }
    let mut best = f64::INFINITY;
    for (i, &x) in nodes.iter().enumerate() {
        for &y in &nodes[i + 1..] {
            best = best.min(wrap_dist(rho * x, rho * y));
        }
    }
    Ok(best)
}

/// Super-resolution factor `1 / (delta * omega)`.
pub fn srf(delta: f64, omega: f64) -> Result<f64> {
    if !(delta > 0.0) || !(omega > 0.0) {
        return Err(SrError::Domain(format!(
            "srf needs positive inputs, got delta = {delta}, omega = {omega}"
        )));
    }
    Ok(1.0 / (delta * omega))
}

/// Ground-truth nodes and amplitudes, stored sorted by node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeTrain {
    nodes: Vec<f64>,
    amps: Vec<Complex64>,
}

impl SpikeTrain {
    /// Validate and canonicalize. Nodes must lie in `(-pi/2, pi/2]`, be
    /// pairwise distinct, and carry nonzero amplitudes.
    pub fn new(nodes: Vec<f64>, amps: Vec<Complex64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(SrError::InvalidSpike("no nodes".into()));
        }
        if nodes.len() != amps.len() {
            return Err(SrError::InvalidSpike(format!(
                "{} nodes but {} amplitudes",
                nodes.len(),
                amps.len()
            )));
        }
        for &x in &nodes {
            if !x.is_finite() || x <= -FRAC_PI_2 || x > FRAC_PI_2 {
                return Err(SrError::InvalidSpike(format!(
                    "node {x} outside (-pi/2, pi/2]"
                )));
            }
        }
        for a in &amps {
            if !(a.norm() > 0.0) || !a.re.is_finite() || !a.im.is_finite() {
                return Err(SrError::InvalidSpike(format!("amplitude {a} is not a nonzero finite value")));
            }
        }
        let mut pairs: Vec<(f64, Complex64)> = nodes.into_iter().zip(amps).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.len() >= 2 {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            if min_separation(&xs, 1.0)? <= 0.0 {
                return Err(SrError::InvalidSpike("repeated node".into()));
            }
        }
        let (nodes, amps) = pairs.into_iter().unzip();
        Ok(Self { nodes, amps })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exact Fourier sample `sum_j a_j e^{i omega x_j}`.
    pub fn fourier_sample(&self, omega: f64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.amps)
            .map(|(&x, &a)| a * Complex64::cis(omega * x))
            .sum()
    }
}

/// Free-function form of [`SpikeTrain::fourier_sample`].
pub fn fourier_sample(spike: &SpikeTrain, omega: f64) -> Complex64 {
    spike.fourier_sample(omega)
}

/// Partition of the nodes into clusters together with the geometry
/// parameters the partition satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Index sets into the sorted node list, one per cluster.
    pub partition: Vec<Vec<usize>>,
    /// Common intra-cluster minimal gap.
    pub h: f64,
    /// Per-cluster spread factors.
    pub nu: Vec<f64>,
    /// Inter-cluster separation.
    pub eta: f64,
    pub sizes: Vec<usize>,
    /// `ell_m = #{k : m <= n_k}` for `m = 1..=max size`.
    pub multiplicities: Vec<usize>,
}

/// Multiplicities `ell_m` of a list of cluster sizes.
pub fn multiplicities(sizes: &[usize]) -> Vec<usize> {
    let s = sizes.iter().copied().max().unwrap_or(0);
    (1..=s)
        .map(|m| sizes.iter().filter(|&&k| m <= k).count())
        .collect()
}

impl ClusterConfig {
    pub fn num_clusters(&self) -> usize {
        self.partition.len()
    }

    /// Check every structural and geometric invariant against `spike`.
    pub fn verify(&self, spike: &SpikeTrain) -> Result<()> {
        const SLACK: f64 = 1e-12;
        let n = spike.len();
        let mut seen = vec![false; n];
        for cluster in &self.partition {
            for &i in cluster {
                if i >= n || seen[i] {
                    return Err(SrError::InfeasibleGeometry(format!(
                        "partition index {i} repeated or out of range"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SrError::InfeasibleGeometry("partition is not exhaustive".into()));
        }
        if self.sizes.len() != self.partition.len() || self.nu.len() != self.partition.len() {
            return Err(SrError::InfeasibleGeometry("sizes/nu do not match partition".into()));
        }
        let x = spike.nodes();
        for (j, cluster) in self.partition.iter().enumerate() {
            if cluster.len() != self.sizes[j] {
                return Err(SrError::InfeasibleGeometry(format!("cluster {j} has wrong size")));
            }
            for (a, &p) in cluster.iter().enumerate() {
                for &q in &cluster[a + 1..] {
                    let d = wrap_dist(x[p], x[q]);
                    if d < self.h - SLACK || d > self.nu[j] * self.h + SLACK {
                        return Err(SrError::InfeasibleGeometry(format!(
                            "intra-cluster distance {d} in cluster {j} outside [h, nu h]"
                        )));
                    }
                }
            }
            for other in self.partition.iter().skip(j + 1) {
                for &p in cluster {
                    for &q in other {
                        let d = wrap_dist(x[p], x[q]);
                        if d < self.eta - SLACK {
                            return Err(SrError::InfeasibleGeometry(format!(
                                "inter-cluster distance {d} below eta = {}",
                                self.eta
                            )));
                        }
                    }
                }
            }
        }
        let ell = multiplicities(&self.sizes);
        if ell != self.multiplicities {
            return Err(SrError::InfeasibleGeometry("multiplicities inconsistent with sizes".into()));
        }
        if ell.first().copied() != Some(self.partition.len()) || ell.iter().sum::<usize>() != n {
            return Err(SrError::InfeasibleGeometry("multiplicity sums violated".into()));
        }
        Ok(())
    }
}

/// Parameters for [`make_clustered_config`]. `nu` may hold a single value
/// shared by every cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    pub sizes: Vec<usize>,
    pub delta: f64,
    pub nu: Vec<f64>,
    pub eta: f64,
}

impl ClusterGeometry {
    pub fn num_nodes(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn nu_for(&self, j: usize) -> f64 {
        if self.nu.len() == 1 {
            self.nu[0]
        } else {
            self.nu[j]
        }
    }
}

/// Fraction of the half-circle a generated configuration may occupy.
const SPAN_BUDGET: f64 = 0.95 * PI;

/// Generate a clustered configuration realizing `geom`.
///
/// Clusters are laid out left to right in the order of `geom.sizes`; the
/// first gap of every cluster is exactly `delta`, so with any cluster of
/// size two or more the minimal separation equals `delta`. Random draws do
/// not depend on `delta`, so the same seed yields the same geometry rescaled.
pub fn make_clustered_config(
    geom: &ClusterGeometry,
    amps: Option<Vec<Complex64>>,
    seed: u64,
) -> Result<(SpikeTrain, ClusterConfig)> {
    let m = geom.sizes.len();
    if m == 0 || geom.sizes.contains(&0) {
        return Err(SrError::InfeasibleGeometry("cluster sizes must be positive".into()));
    }
    if geom.nu.len() != 1 && geom.nu.len() != m {
        return Err(SrError::InfeasibleGeometry(format!(
            "nu has {} entries for {m} clusters",
            geom.nu.len()
        )));
    }
    if !(geom.delta > 0.0) {
        return Err(SrError::InfeasibleGeometry("delta must be positive".into()));
    }
    if m > 1 && !(geom.eta >= geom.delta) {
        return Err(SrError::InfeasibleGeometry(format!(
            "eta = {} must be at least delta = {}",
            geom.eta, geom.delta
        )));
    }
    let mut required = (m as f64 - 1.0) * geom.eta;
    for (j, &s) in geom.sizes.iter().enumerate() {
        let nu = geom.nu_for(j);
        if s >= 2 && nu < (s - 1) as f64 {
            return Err(SrError::InfeasibleGeometry(format!(
                "cluster {j} of size {s} needs nu >= {}, got {nu}",
                s - 1
            )));
        }
        required += (s as f64 - 1.0) * nu * geom.delta;
    }
    if required >= PI {
        return Err(SrError::InfeasibleGeometry(format!(
            "clusters need span {required:.4} >= pi"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spans = Vec::with_capacity(m);
    let mut intra: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (j, &s) in geom.sizes.iter().enumerate() {
        let nu = geom.nu_for(j);
        let mut gaps = Vec::with_capacity(s.saturating_sub(1));
        if s >= 2 {
            let stretch = (nu - (s - 1) as f64) / (s - 1) as f64;
            gaps.push(geom.delta);
            for _ in 2..s {
                let r: f64 = rng.random();
                gaps.push(geom.delta * (1.0 + r * stretch));
            }
        }
        spans.push(gaps.iter().sum::<f64>());
        intra.push(gaps);
    }
    let mut extra: Vec<f64> = (1..m).map(|_| rng.random::<f64>() * geom.eta).collect();
    let fixed = spans.iter().sum::<f64>() + (m as f64 - 1.0) * geom.eta;
    let room = (SPAN_BUDGET - fixed).max(0.0);
    let wanted: f64 = extra.iter().sum();
    if wanted > room {
        let scale = room / wanted;
        extra.iter_mut().for_each(|e| *e *= scale);
    }

    let mut nodes = Vec::with_capacity(geom.num_nodes());
    let mut partition = Vec::with_capacity(m);
    let mut pos = 0.0;
    for (j, gaps) in intra.iter().enumerate() {
        if j > 0 {
            pos += geom.eta + extra[j - 1];
        }
        let mut members = vec![nodes.len()];
        nodes.push(pos);
        for g in gaps {
            pos += g;
            members.push(nodes.len());
            nodes.push(pos);
        }
        partition.push(members);
    }
    let mid = 0.5 * (nodes[0] + nodes[nodes.len() - 1]);
    nodes.iter_mut().for_each(|x| *x -= mid);

    let amps = match amps {
        Some(a) => {
            if a.len() != nodes.len() {
                return Err(SrError::InvalidSpike(format!(
                    "{} amplitudes for {} nodes",
                    a.len(),
                    nodes.len()
                )));
            }
            a
        }
        None => random_amplitudes(&mut rng, nodes.len()),
    };
    let spike = SpikeTrain::new(nodes, amps)?;
    let config = ClusterConfig {
        partition,
        h: geom.delta,
        nu: (0..m).map(|j| geom.nu_for(j)).collect(),
        eta: geom.eta,
        sizes: geom.sizes.clone(),
        multiplicities: multiplicities(&geom.sizes),
    };
    Ok((spike, config))
}

/// Moduli uniform in `[0.5, 2]`, phases uniform on the circle.
pub fn random_amplitudes<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let r = rng.random_range(0.5..=2.0);
            let phase = rng.random_range(0.0..TAU);
            Complex64::from_polar(r, phase)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    CauchyClipped,
    UniformBox,
}

/// Noisy sample source over `[-omega_max, omega_max]`.
///
/// Noise at a frequency is a pure function of `(seed, omega)`, so the
/// oracle holds no mutable state and may be shared across threads.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurementOracle {
    spike: SpikeTrain,
    omega_max: f64,
    epsilon: f64,
    noise: NoiseKind,
    seed: u64,
}

pub fn make_oracle(
    spike: SpikeTrain,
    omega_max: f64,
    epsilon: f64,
    noise: NoiseKind,
    seed: u64,
) -> Result<MeasurementOracle> {
    MeasurementOracle::new(spike, omega_max, epsilon, noise, seed)
}

impl MeasurementOracle {
    pub fn new(
        spike: SpikeTrain,
        omega_max: f64,
        epsilon: f64,
        noise: NoiseKind,
        seed: u64,
    ) -> Result<Self> {
        if !(omega_max > 0.0) || !omega_max.is_finite() {
            return Err(SrError::Domain(format!("omega_max must be positive, got {omega_max}")));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(SrError::Domain(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        Ok(Self {
            spike,
            omega_max,
            epsilon,
            noise,
            seed,
        })
    }

    pub fn spike(&self) -> &SpikeTrain {
        &self.spike
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Noiseless sample.
    pub fn clean(&self, omega: f64) -> Complex64 {
        self.spike.fourier_sample(omega)
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        if !(omega.abs() <= self.omega_max) {
            return Err(SrError::OutOfBand {
                omega,
                omega_max: self.omega_max,
            });
        }
        Ok(self.clean(omega) + self.perturbation(omega))
    }

    /// The noise term added to the sample at `omega`.
    pub fn perturbation(&self, omega: f64) -> Complex64 {
        if self.epsilon == 0.0 || self.noise == NoiseKind::None {
            return Complex64::new(0.0, 0.0);
        }
        // -0.0 and 0.0 must draw the same value
        let bits = if omega == 0.0 { 0 } else { omega.to_bits() };
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(bits)));
        let eps = self.epsilon;
        match self.noise {
            NoiseKind::None => Complex64::new(0.0, 0.0),
            NoiseKind::CauchyClipped => {
                let cauchy = Cauchy::new(0.0, 1.0).expect("unit Cauchy");
                let e = Complex64::new(cauchy.sample(&mut rng), cauchy.sample(&mut rng)) * (eps / 10.0);
                let r = e.norm();
                if r > eps {
                    // shave an ulp-scale margin so rounding cannot exceed eps
                    e * (eps / r * (1.0 - 4.0 * f64::EPSILON))
                } else {
                    e
                }
            }
            NoiseKind::UniformBox => {
                let half = eps / std::f64::consts::SQRT_2 * (1.0 - 4.0 * f64::EPSILON);
                Complex64::new(
                    rng.random_range(-half..=half),
                    rng.random_range(-half..=half),
                )
            }
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-frequency and
/// per-trial seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
