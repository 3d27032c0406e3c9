//! End-to-end decimated recovery (EDP and DMP), the baselines behind a
//! common entry point, and error amplification factors.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dealias::{self, AliasedPair, AMP_FLOOR_REL};
use crate::decimation::{self, DecimationPlan, SelectionStrategy};
use crate::error::{Result, SrError, Stage};
use crate::matching::hungarian;
use crate::signal_model::{wrap_dist, MeasurementOracle, SpikeTrain};
use crate::sr_methods::{
    self, amplitude_ls_at, decimated_prony_histogram, HistogramParams, NodeEstimate, SampleVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Decimated Prony with Toeplitz rate selection and de-aliasing.
    Edp,
    /// As `Edp` with Matrix Pencil on `3n` samples per set.
    Dmp,
    /// Histogram decimated Prony.
    Dp,
    /// Undecimated Matrix Pencil on the full band.
    Mp,
    /// Prony on `2n` consecutive integer samples.
    Prony,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Edp, Method::Dmp, Method::Dp, Method::Mp, Method::Prony];

    pub fn name(self) -> &'static str {
        match self {
            Method::Edp => "edp",
            Method::Dmp => "dmp",
            Method::Dp => "dp",
            Method::Mp => "mp",
            Method::Prony => "prony",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s.to_ascii_lowercase())
    }

    /// Samples per set for the decimated methods.
    pub fn window(self, n: usize) -> usize {
        match self {
            Method::Dmp => 3 * n,
            _ => 2 * n,
        }
    }
}

/// Estimated spike train, and errors against the truth when known.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryResult {
    pub method: Method,
    pub est_nodes: Vec<f64>,
    pub est_amps: Vec<Complex64>,
    /// `matching[j]` is the estimate paired with true node `j`.
    pub matching: Option<Vec<usize>>,
    pub node_errors: Option<Vec<f64>>,
    pub amp_errors: Option<Vec<f64>>,
    pub k_x: Option<Vec<f64>>,
    pub k_a: Option<Vec<f64>>,
    pub plan: Option<DecimationPlan>,
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}

impl RecoveryResult {
    fn new(method: Method, nodes: Vec<f64>, amps: Vec<Complex64>, plan: Option<DecimationPlan>) -> Self {
        let mut pairs: Vec<(f64, Complex64)> = nodes.into_iter().zip(amps).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (est_nodes, est_amps) = pairs.into_iter().unzip();
        RecoveryResult {
            method,
            est_nodes,
            est_amps,
            matching: None,
            node_errors: None,
            amp_errors: None,
            k_x: None,
            k_a: None,
            plan,
            wall_time: Default::default(),
        }
    }

    /// Fill in matching and raw errors, plus amplification factors when
    /// `epsilon > 0`.
    pub fn attach_truth(&mut self, truth: &SpikeTrain, epsilon: f64, omega: f64) -> Result<()> {
        let raw = raw_errors(truth, &self.est_nodes, &self.est_amps)?;
        if epsilon > 0.0 {
            self.k_x = Some(raw.node_errors.iter().map(|e| omega * e / epsilon).collect());
            self.k_a = Some(raw.amp_errors.iter().map(|e| e / epsilon).collect());
        }
        self.matching = Some(raw.matching);
        self.node_errors = Some(raw.node_errors);
        self.amp_errors = Some(raw.amp_errors);
        Ok(())
    }

    pub fn max_node_error(&self) -> Option<f64> {
        self.node_errors.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max))
    }

    pub fn max_amp_error(&self) -> Option<f64> {
        self.amp_errors.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max))
    }
}

/// Per-true-node errors under the optimal wrapped-distance matching.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawErrors {
    pub matching: Vec<usize>,
    pub node_errors: Vec<f64>,
    pub amp_errors: Vec<f64>,
}

pub fn raw_errors(truth: &SpikeTrain, nodes: &[f64], amps: &[Complex64]) -> Result<RawErrors> {
    if nodes.len() != truth.len() || amps.len() != nodes.len() {
        return Err(SrError::CardinalityMismatch {
            left: truth.len(),
            right: nodes.len(),
        });
    }
    let cost: Vec<Vec<f64>> = truth
        .nodes()
        .iter()
        .map(|&x| nodes.iter().map(|&y| wrap_dist(x, y)).collect())
        .collect();
    let matching = hungarian(&cost)?;
    let node_errors = matching.iter().enumerate().map(|(j, &k)| cost[j][k]).collect();
    let amp_errors = matching
        .iter()
        .enumerate()
        .map(|(j, &k)| (truth.amps()[j] - amps[k]).norm())
        .collect();
    Ok(RawErrors {
        matching,
        node_errors,
        amp_errors,
    })
}

/// `(K_x, K_a)` per true node.
pub fn error_factors(
    truth: &SpikeTrain,
    nodes: &[f64],
    amps: &[Complex64],
    epsilon: f64,
    omega: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(epsilon > 0.0) {
        return Err(SrError::FactorsUndefined);
    }
    let raw = raw_errors(truth, nodes, amps)?;
    Ok((
        raw.node_errors.iter().map(|e| omega * e / epsilon).collect(),
        raw.amp_errors.iter().map(|e| e / epsilon).collect(),
    ))
}

/// Where the shifted-set amplitudes used for `e^{itx}` come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShiftFit {
    /// Least squares on the shifted samples at the decimated node
    /// estimates, so node errors cancel in the ratio.
    #[default]
    CommonNodes,
    /// A separate solve on the shifted set, matched to the decimated one.
    Independent,
}

/// Knobs for [`recover`] that only some methods read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct RecoverOptions {
    pub selection: SelectionStrategy,
    pub shift_fit: ShiftFit,
    /// Histogram parameters; `None` derives them from `delta`.
    pub histogram: Option<HistogramParams>,
    /// Minimal separation, used only to size the default histogram.
    pub delta: Option<f64>,
}

/// Run `method` on the oracle's samples. `m` is the number of clusters.
pub fn recover(oracle: &MeasurementOracle, n: usize, m: usize, method: Method, opts: &RecoverOptions) -> Result<RecoveryResult> {
    let start = Instant::now();
    let mut result = match method {
        Method::Edp | Method::Dmp => decimated_sr_with(oracle, n, m, method, opts.selection, opts.shift_fit)?,
        Method::Dp => {
            let params = match (opts.histogram, opts.delta) {
                (Some(p), _) => p,
                (None, Some(d)) => HistogramParams::for_separation(d),
                (None, None) => return Err(SrError::Config("histogram needs N_rho/N_b or delta".into())),
            };
            from_estimate(method, decimated_prony_histogram(oracle, n, params).map_err(SrError::at(Stage::Solve))?)
        }
        Method::Mp => from_estimate(method, sr_methods::matrix_pencil_full(oracle, n).map_err(SrError::at(Stage::Solve))?),
        Method::Prony => from_estimate(method, sr_methods::prony_undecimated(oracle, n).map_err(SrError::at(Stage::Solve))?),
    };
    result.wall_time = start.elapsed();
    Ok(result)
}

fn from_estimate(method: Method, est: NodeEstimate) -> RecoveryResult {
    let nodes = est.phis.iter().map(|p| p.arg() / est.rate).collect();
    RecoveryResult::new(method, nodes, est.amps, None)
}

/// EDP (`Method::Edp`) or DMP (`Method::Dmp`) with arg-max rate selection.
pub fn decimated_sr(oracle: &MeasurementOracle, n: usize, m: usize, method: Method) -> Result<RecoveryResult> {
    let start = Instant::now();
    let mut r = decimated_sr_with(oracle, n, m, method, SelectionStrategy::ArgMax, ShiftFit::default())?;
    r.wall_time = start.elapsed();
    Ok(r)
}

fn solve(method: Method, samples: &SampleVector, n: usize) -> Result<NodeEstimate> {
    match method {
        Method::Dmp => sr_methods::matrix_pencil(samples, n, sr_methods::default_pencil(samples.len(), n)),
        _ => sr_methods::prony(samples, n),
    }
}

pub fn decimated_sr_with(
    oracle: &MeasurementOracle,
    n: usize,
    m: usize,
    method: Method,
    selection: SelectionStrategy,
    shift_fit: ShiftFit,
) -> Result<RecoveryResult> {
    if !matches!(method, Method::Edp | Method::Dmp) {
        return Err(SrError::Config(format!("{} is not a decimated method", method.name())));
    }
    if n == 0 || (m == 0 && n > 1) {
        return Err(SrError::Domain(format!("need n >= 1 and M >= 1, got n = {n}, M = {m}")));
    }
    let omega = oracle.omega_max();
    let plan = if n == 1 || m >= n {
        DecimationPlan {
            rho: 1,
            t: 0,
            candidates: Vec::new(),
            interval: decimation::admissible_interval(omega, n),
        }
    } else {
        decimation::plan(oracle, n, m, selection).map_err(|e| match e {
            SrError::ShiftInfeasible { .. } => SrError::at(Stage::Shift)(e),
            other => SrError::at(Stage::Selection)(other),
        })?
    };
    let (rho, t) = (plan.rho, plan.t);
    let k = method.window(n);
    let sample = |shift: u64| SampleVector::centered(oracle, rho as f64, shift as f64, k).map_err(SrError::at(Stage::Sampling));
    let set_d = sample(0)?;
    let est_d = solve(method, &set_d, n).map_err(SrError::at(Stage::Solve))?;
    if rho == 1 {
        let nodes = est_d.angles();
        return Ok(RecoveryResult::new(method, nodes, est_d.amps, Some(plan)));
    }

    let set_ds = sample(t)?;
    let shifted: Vec<Complex64> = match shift_fit {
        ShiftFit::CommonNodes => {
            sr_methods::amplitude_ls(&est_d.phis, &set_ds)
                .map_err(SrError::at(Stage::SolveShifted))?
                .amps
        }
        ShiftFit::Independent => {
            let est_ds = solve(method, &set_ds, n).map_err(SrError::at(Stage::SolveShifted))?;
            let pairing = dealias::match_estimates(&est_d, &est_ds).map_err(SrError::at(Stage::Matching))?;
            pairing.iter().map(|&p| est_ds.amps[p]).collect()
        }
    };
    let floor = AMP_FLOOR_REL * est_d.amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let nodes = (0..n)
        .map(|j| {
            let phi_t = dealias::shift_power_from_amps(est_d.amps[j], shifted[j], floor)?;
            dealias::dealias_node(&AliasedPair {
                phi_rho: est_d.phis[j],
                phi_t,
                rho,
                t,
            })
        })
        .collect::<Result<Vec<f64>>>()
        .map_err(SrError::at(Stage::Dealias))?;

    let mut freqs = set_d.frequencies();
    freqs.extend(set_ds.frequencies());
    let mut values = set_d.values.clone();
    values.extend(&set_ds.values);
    let fit = amplitude_ls_at(&nodes, &freqs, &values).map_err(SrError::at(Stage::Amplitudes))?;
    Ok(RecoveryResult::new(method, nodes, fit.amps, Some(plan)))
}
