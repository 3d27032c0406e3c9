//! Rate sweeps, optimality scaling and benchmarks over clustered
//! geometries.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decimation::{candidate_rhos, select_rho, sweep};
use crate::error::{Result, SrError};
use crate::pipeline::{recover, Method, RecoverOptions, ShiftFit};
use crate::signal_model::{
    make_clustered_config, min_separation, splitmix64, ClusterConfig, ClusterGeometry, MeasurementOracle,
    NoiseKind, SpikeTrain,
};
use crate::sr_methods::HistogramParams;
use crate::stats::{loglog_fit, mean, median, spearman, LinearFit};

pub const SCHEMA_VERSION: u32 = 1;

/// Experiment and geometry parameters, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema: u32,
    /// Explicit nodes; overrides the cluster generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<f64>>,
    /// Explicit amplitudes as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amps: Option<Vec<[f64; 2]>>,
    /// Number of clusters; defaults to `sizes.len()`.
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srf: Option<f64>,
    #[serde(default = "default_nu")]
    pub nu: Vec<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub omega: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub srf_grid: Vec<f64>,
    #[serde(default)]
    pub omega_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rho: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bins: Option<usize>,
    /// Timing repeats per point of the complexity series.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub shift_fit: ShiftFit,
}

fn default_nu() -> Vec<f64> {
    vec![2.0]
}

fn default_eta() -> f64 {
    0.5
}

fn default_trials() -> usize {
    10
}

fn default_repeats() -> usize {
    15
}

impl ExperimentSpec {
    /// A generated-geometry spec with defaults for everything else.
    pub fn clustered(sizes: Vec<usize>, nu: f64, eta: f64, omega: f64) -> Self {
        ExperimentSpec {
            schema: SCHEMA_VERSION,
            nodes: None,
            amps: None,
            m: None,
            sizes,
            delta: None,
            srf: None,
            nu: vec![nu],
            eta,
            omega,
            epsilon: 0.0,
            noise: NoiseKind::None,
            seed: 0,
            trials: default_trials(),
            methods: Vec::new(),
            srf_grid: Vec::new(),
            omega_grid: Vec::new(),
            n_rho: None,
            n_bins: None,
            repeats: default_repeats(),
            shift_fit: ShiftFit::default(),
        }
    }

    /// Field-level consistency checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(SrError::Config(format!("field `{field}`: {why}")));
        if self.schema != SCHEMA_VERSION {
            return bad("schema", format!("expected {SCHEMA_VERSION}, got {}", self.schema));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return bad("omega", format!("must be positive, got {}", self.omega));
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon", format!("must be nonnegative, got {}", self.epsilon));
        }
        if self.epsilon > 0.0 && self.noise == NoiseKind::None {
            return bad("noise", "epsilon > 0 needs a noise kind".into());
        }
        if self.delta.is_some() && self.srf.is_some() {
            return bad("delta", "give either delta or srf, not both".into());
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        match &self.nodes {
            Some(nodes) => {
                if let Some(amps) = &self.amps {
                    if amps.len() != nodes.len() {
                        return bad("amps", format!("{} amplitudes for {} nodes", amps.len(), nodes.len()));
                    }
                }
                if self.m.is_none() {
                    return bad("M", "required with explicit nodes".into());
                }
            }
            None => {
                if self.sizes.is_empty() {
                    return bad("sizes", "required unless nodes are given".into());
                }
                if let Some(amps) = &self.amps {
                    if amps.len() != self.num_nodes() {
                        return bad("amps", format!("{} amplitudes for {} nodes", amps.len(), self.num_nodes()));
                    }
                }
            }
        }
        if self.srf_grid.iter().any(|s| !(*s > 0.0)) {
            return bad("srf_grid", "entries must be positive".into());
        }
        if self.omega_grid.iter().any(|s| !(*s > 0.0)) {
            return bad("omega_grid", "entries must be positive".into());
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        match &self.nodes {
            Some(x) => x.len(),
            None => self.sizes.iter().sum(),
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.m.unwrap_or(self.sizes.len())
    }

    /// Separation implied by `delta`, `srf` or, failing both, SRF = 1.
    pub fn resolved_delta(&self) -> f64 {
        match (self.delta, self.srf) {
            (Some(d), _) => d,
            (None, Some(s)) => 1.0 / (s * self.omega),
            (None, None) => 1.0 / self.omega,
        }
    }

    fn explicit_amps(&self) -> Option<Vec<Complex64>> {
        self.amps
            .as_ref()
            .map(|a| a.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
    }

    pub fn geometry(&self, delta: f64) -> ClusterGeometry {
        ClusterGeometry {
            sizes: self.sizes.clone(),
            delta,
            nu: self.nu.clone(),
            eta: self.eta,
        }
    }

    /// Ground truth at separation `delta` (ignored for explicit nodes).
    pub fn build_spike(&self, delta: f64) -> Result<(SpikeTrain, Option<ClusterConfig>)> {
        match &self.nodes {
            Some(nodes) => {
                let amps = match self.explicit_amps() {
                    Some(a) => a,
                    None => {
                        use rand::SeedableRng;
                        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
                        crate::signal_model::random_amplitudes(&mut rng, nodes.len())
                    }
                };
                Ok((SpikeTrain::new(nodes.clone(), amps)?, None))
            }
            None => {
                let (s, c) = make_clustered_config(&self.geometry(delta), self.explicit_amps(), self.seed)?;
                Ok((s, Some(c)))
            }
        }
    }

    pub fn oracle(&self, spike: SpikeTrain, noise_seed: u64) -> Result<MeasurementOracle> {
        MeasurementOracle::new(spike, self.omega, self.epsilon, self.noise, noise_seed)
    }

    /// Index of the first node of the first singleton cluster, if any.
    pub fn reference_node(&self) -> Option<usize> {
        let mut offset = 0;
        for &s in &self.sizes {
            if s == 1 {
                return Some(offset);
            }
            offset += s;
        }
        None
    }
}

/// Noise seed for one trial at one grid point.
pub fn trial_seed(seed: u64, grid_index: usize, trial: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((grid_index as u64) << 32) | trial as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoSweepRow {
    pub rho: u64,
    pub delta_rho: f64,
    pub sigma: f64,
    /// `(n / Omega) sqrt(sigma)`.
    pub scaled_sqrt_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoSweepSummary {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub spearman: f64,
    /// max/min of `sqrt(sigma) / delta_rho` over non-colliding rates.
    pub ratio_spread: f64,
    pub selected_rho: u64,
    pub selected_delta_rho: f64,
    pub max_delta_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoSweepTable {
    pub rows: Vec<RhoSweepRow>,
    pub summary: RhoSweepSummary,
    #[serde(skip)]
    pub timings: Vec<Duration>,
}

/// Below this a decimated separation counts as a collision.
pub const COLLISION: f64 = 1e-8;

/// Score every admissible rate against the true decimated separation.
pub fn rho_sweep_experiment(spec: &ExperimentSpec) -> Result<RhoSweepTable> {
    spec.validate()?;
    let delta = spec.resolved_delta();
    let (spike, _) = spec.build_spike(delta)?;
    let n = spike.len();
    let m = spec.num_clusters();
    let oracle = spec.oracle(spike.clone(), spec.seed)?;
    let cands = candidate_rhos(spec.omega, n)?;
    let scored = sweep(&oracle, &cands.rhos, n, m, Some(&spike))?;
    let c = n as f64 / spec.omega;
    let rows: Vec<RhoSweepRow> = scored
        .iter()
        .map(|s| RhoSweepRow {
            rho: s.score.rho,
            delta_rho: s.score.delta_rho.unwrap_or(f64::NAN),
            sigma: s.score.score,
            scaled_sqrt_sigma: c * s.score.score.sqrt(),
        })
        .collect();
    let sq: Vec<f64> = rows.iter().map(|r| r.sigma.sqrt()).collect();
    let dr: Vec<f64> = rows.iter().map(|r| r.delta_rho).collect();
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.delta_rho >= COLLISION)
        .map(|r| r.sigma.sqrt() / r.delta_rho)
        .collect();
    let spread = ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let scores: Vec<_> = scored.iter().map(|s| s.score).collect();
    let selected = select_rho(&scores)?;
    let selected_delta_rho = min_separation(spike.nodes(), selected as f64).unwrap_or(0.0);
    let summary = RhoSweepSummary {
        n,
        m,
        delta,
        spearman: spearman(&sq, &dr).unwrap_or(f64::NAN),
        ratio_spread: spread,
        selected_rho: selected,
        selected_delta_rho,
        max_delta_rho: dr.iter().copied().fold(0.0, f64::max),
    };
    Ok(RhoSweepTable {
        rows,
        summary,
        timings: scored.iter().map(|s| s.elapsed).collect(),
    })
}

/// Per-SRF aggregate of error amplification factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityRow {
    pub srf: f64,
    pub delta: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub mean_kx: Vec<f64>,
    pub mean_ka: Vec<f64>,
    pub median_kx: Vec<f64>,
    pub median_ka: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalitySummary {
    pub cluster_node: usize,
    pub reference_node: Option<usize>,
    pub kx_cluster: Option<LinearFit>,
    pub ka_cluster: Option<LinearFit>,
    pub kx_reference: Option<LinearFit>,
    pub ka_reference: Option<LinearFit>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityTable {
    pub n: usize,
    pub rows: Vec<OptimalityRow>,
    pub summary: OptimalitySummary,
}

fn transpose_stat(per_trial: &[Vec<f64>], n: usize, f: fn(&[f64]) -> f64) -> Vec<f64> {
    (0..n)
        .map(|j| f(&per_trial.iter().map(|v| v[j]).collect::<Vec<_>>()))
        .collect()
}

fn slope_of(rows: &[OptimalityRow], pick: impl Fn(&OptimalityRow) -> f64) -> Option<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.trials_ok > 0)
        .map(|r| (r.srf, pick(r)))
        .filter(|(_, y)| y.is_finite())
        .unzip();
    loglog_fit(&x, &y)
}

/// EDP error amplification over an SRF grid, the geometry rescaled so
/// that `Delta = 1 / (SRF Omega)`.
pub fn optimality_experiment(spec: &ExperimentSpec) -> Result<OptimalityTable> {
    spec.validate()?;
    if !(spec.epsilon > 0.0) {
        return Err(SrError::Config("field `epsilon`: optimality needs epsilon > 0".into()));
    }
    if spec.srf_grid.is_empty() {
        return Err(SrError::Config("field `srf_grid`: must not be empty".into()));
    }
    let n = spec.num_nodes();
    let m = spec.num_clusters();
    let mut rows = Vec::with_capacity(spec.srf_grid.len());
    let mut failures = Vec::new();
    for (gi, &srf) in spec.srf_grid.iter().enumerate() {
        let delta = 1.0 / (srf * spec.omega);
        let (spike, _) = spec.build_spike(delta)?;
        let outcomes: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let oracle = spec.oracle(spike.clone(), trial_seed(spec.seed, gi, trial))?;
                let opts = RecoverOptions {
                    shift_fit: spec.shift_fit,
                    ..Default::default()
                };
                let mut r = recover(&oracle, n, m, Method::Edp, &opts)?;
                r.attach_truth(&spike, spec.epsilon, spec.omega)?;
                Ok((r.k_x.unwrap_or_default(), r.k_a.unwrap_or_default()))
            })
            .collect();
        let mut kx = Vec::new();
        let mut ka = Vec::new();
        for (trial, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok((x, a)) => {
                    kx.push(x);
                    ka.push(a);
                }
                Err(e) => {
                    log::info!("srf {srf} trial {trial} excluded: {e}");
                    failures.push(format!("srf={srf} trial={trial}: {e}"));
                }
            }
        }
        rows.push(OptimalityRow {
            srf,
            delta,
            trials_ok: kx.len(),
            trials_failed: spec.trials - kx.len(),
            mean_kx: transpose_stat(&kx, n, mean),
            mean_ka: transpose_stat(&ka, n, mean),
            median_kx: transpose_stat(&kx, n, median),
            median_ka: transpose_stat(&ka, n, median),
        });
    }
    let reference = spec.reference_node();
    let summary = OptimalitySummary {
        cluster_node: 0,
        reference_node: reference,
        kx_cluster: slope_of(&rows, |r| r.mean_kx[0]),
        ka_cluster: slope_of(&rows, |r| r.mean_ka[0]),
        kx_reference: reference.and_then(|j| slope_of(&rows, |r| r.mean_kx[j])),
        ka_reference: reference.and_then(|j| slope_of(&rows, |r| r.mean_ka[j])),
        failures,
    };
    Ok(OptimalityTable { n, rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub srf: f64,
    pub delta: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub mean_err_x1: f64,
    pub median_err_x1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTiming {
    pub method: Method,
    pub srf: f64,
    pub mean_wall_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityPoint {
    pub omega: f64,
    pub candidates: usize,
    pub edp_wall_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub timings: Vec<BenchTiming>,
    pub complexity: Vec<ComplexityPoint>,
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| SrError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Node error of the cluster node `x_1` and wall time per method and SRF,
/// then EDP wall time across `omega_grid`. Runs single-threaded so the
/// timings compare like with like.
pub fn bench_experiment(spec: &ExperimentSpec) -> Result<BenchTable> {
    spec.validate()?;
    if spec.methods.is_empty() {
        return Err(SrError::Config("field `methods`: must not be empty".into()));
    }
    single_thread(|| bench_inner(spec))?
}

fn bench_inner(spec: &ExperimentSpec) -> Result<BenchTable> {
    let n = spec.num_nodes();
    let m = spec.num_clusters();
    let grid: Vec<f64> = if spec.srf_grid.is_empty() {
        vec![1.0 / (spec.resolved_delta() * spec.omega)]
    } else {
        spec.srf_grid.clone()
    };
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &method in &spec.methods {
        for (gi, &srf) in grid.iter().enumerate() {
            let delta = 1.0 / (srf * spec.omega);
            let (spike, _) = spec.build_spike(delta)?;
            let opts = RecoverOptions {
                histogram: match (spec.n_rho, spec.n_bins) {
                    (Some(n_rho), Some(n_bins)) => Some(HistogramParams { n_rho, n_bins }),
                    (Some(n_rho), None) => Some(HistogramParams {
                        n_rho,
                        ..HistogramParams::for_separation(delta)
                    }),
                    (None, Some(n_bins)) => Some(HistogramParams {
                        n_bins,
                        ..HistogramParams::for_separation(delta)
                    }),
                    (None, None) => None,
                },
                delta: Some(delta),
                shift_fit: spec.shift_fit,
                ..Default::default()
            };
            let mut errs = Vec::new();
            let mut wall = Vec::new();
            for trial in 0..spec.trials {
                let oracle = spec.oracle(spike.clone(), trial_seed(spec.seed, gi, trial))?;
                match recover(&oracle, n, m, method, &opts) {
                    Ok(mut r) => {
                        wall.push(r.wall_time.as_secs_f64());
                        r.attach_truth(&spike, 0.0, spec.omega)?;
                        errs.push(r.node_errors.as_ref().expect("attached")[0]);
                    }
                    Err(e) => log::info!("{} srf {srf} trial {trial} failed: {e}", method.name()),
                }
            }
            rows.push(BenchRow {
                method,
                srf,
                delta,
                trials_ok: errs.len(),
                trials_failed: spec.trials - errs.len(),
                mean_err_x1: mean(&errs),
                median_err_x1: median(&errs),
            });
            timings.push(BenchTiming {
                method,
                srf,
                mean_wall_s: mean(&wall),
            });
        }
    }
    let mut complexity = Vec::new();
    for &omega in &spec.omega_grid {
        let sub = ExperimentSpec {
            omega,
            ..spec.clone()
        };
        let delta = 1.0 / (grid[0] * omega);
        let (spike, _) = sub.build_spike(delta)?;
        let oracle = sub.oracle(spike, spec.seed)?;
        let mut samples = Vec::with_capacity(spec.repeats.max(1));
        for _ in 0..spec.repeats.max(1) {
            let start = Instant::now();
            // failures still cost the full selection sweep
            let _ = recover(&oracle, n, m, Method::Edp, &RecoverOptions::default());
            samples.push(start.elapsed().as_secs_f64());
        }
        complexity.push(ComplexityPoint {
            omega,
            candidates: candidate_rhos(omega, n)?.rhos.len(),
            edp_wall_s: median(&samples),
        });
    }
    Ok(BenchTable {
        rows,
        timings,
        complexity,
    })
}
