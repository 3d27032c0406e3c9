//! Candidate decimation rates, their Toeplitz scores, rate selection and
//! co-prime shifts.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SrError};
use crate::signal_model::{min_separation, MeasurementOracle, SpikeTrain};
use crate::spectral::SampleToeplitz;

/// Score of one decimation rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoScore {
    pub rho: u64,
    /// `sigma_{M+1}(T_rho)`.
    pub score: f64,
    /// Minimal separation of the decimated true nodes, when known.
    pub delta_rho: Option<f64>,
}

/// Integer rates in the admissible interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSet {
    pub rhos: Vec<u64>,
    pub lo: f64,
    pub hi: f64,
    /// Set when the interval holds no integer and `{1}` is returned instead.
    pub degenerate: bool,
}

/// Interval `[Omega / (2(2n-1)), Omega / (2n-1)]`.
pub fn admissible_interval(omega: f64, n: usize) -> (f64, f64) {
    let hi = omega / (2 * n - 1) as f64;
    (0.5 * hi, hi)
}

pub fn candidate_rhos(omega: f64, n: usize) -> Result<CandidateSet> {
    candidate_rhos_strided(omega, n, 1)
}

/// As [`candidate_rhos`], keeping every `stride`-th integer.
pub fn candidate_rhos_strided(omega: f64, n: usize, stride: usize) -> Result<CandidateSet> {
    if !(omega > 0.0) || n == 0 {
        return Err(SrError::Domain(format!("candidate rates need omega > 0 and n >= 1, got {omega}, {n}")));
    }
    let (lo, hi) = admissible_interval(omega, n);
    // guard against lo/hi landing a hair off an integer
    let first = ((lo - 1e-9).ceil().max(1.0)) as u64;
    let last = (hi + 1e-9).floor() as u64;
    let rhos: Vec<u64> = if first <= last {
        (first..=last).step_by(stride.max(1)).collect()
    } else {
        Vec::new()
    };
    if rhos.is_empty() {
        return Ok(CandidateSet {
            rhos: vec![1],
            lo,
            hi,
            degenerate: true,
        });
    }
    Ok(CandidateSet {
        rhos,
        lo,
        hi,
        degenerate: false,
    })
}

/// `sigma_{M+1}` of the Toeplitz matrix of `mu(rho k)`, `k = 0..=2n-2`.
pub fn score_rho(oracle: &MeasurementOracle, rho: u64, n: usize, m: usize) -> Result<RhoScore> {
    if m == 0 || m >= n {
        return Err(SrError::Index(format!("need 1 <= M < n, got M = {m}, n = {n}")));
    }
    let t = SampleToeplitz::from_oracle(oracle, rho, n)?;
    Ok(RhoScore {
        rho,
        score: t.sigma(m + 1)?,
        delta_rho: None,
    })
}

/// A scored candidate together with the time spent scoring it.
#[derive(Debug, Clone, Copy)]
pub struct TimedScore {
    pub score: RhoScore,
    pub elapsed: Duration,
}

/// Score every candidate in parallel. With `truth`, each score also
/// carries the decimated minimal separation.
pub fn sweep(
    oracle: &MeasurementOracle,
    rhos: &[u64],
    n: usize,
    m: usize,
    truth: Option<&SpikeTrain>,
) -> Result<Vec<TimedScore>> {
    rhos.par_iter()
        .map(|&rho| {
            let start = Instant::now();
            let mut score = score_rho(oracle, rho, n, m)?;
            let elapsed = start.elapsed();
            if let Some(spike) = truth {
                score.delta_rho = Some(if spike.len() >= 2 {
                    min_separation(spike.nodes(), rho as f64)?
                } else {
                    0.0
                });
            }
            Ok(TimedScore { score, elapsed })
        })
        .collect()
}

/// Rate with the largest score; ties go to the smallest rate.
pub fn select_rho(scores: &[RhoScore]) -> Result<u64> {
    ranked(scores).first().copied().ok_or(SrError::EmptyCandidates)
}

/// Rates ordered by decreasing score, ties by increasing rate.
pub fn ranked(scores: &[RhoScore]) -> Vec<u64> {
    let mut order: Vec<&RhoScore> = scores.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.rho.cmp(&b.rho)));
    order.iter().map(|s| s.rho).collect()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Smallest `t >= 2` co-prime to `rho` with `rho (2n-2) + t <= Omega`.
/// Returns 0 for `rho == 1`, where no de-aliasing is needed.
pub fn coprime_shift(rho: u64, omega: f64, n: usize) -> Result<u64> {
    if rho == 0 {
        return Err(SrError::Domain("rho must be positive".into()));
    }
    if rho == 1 {
        return Ok(0);
    }
    let base = (rho * (2 * n as u64).saturating_sub(2)) as f64;
    let mut t = 2u64;
    while base + t as f64 <= omega {
        if gcd(rho, t) == 1 {
            return Ok(t);
        }
        t += 1;
    }
    Err(SrError::ShiftInfeasible { rho })
}

/// How the rate is picked from the scored candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum SelectionStrategy {
    #[default]
    ArgMax,
    /// Uniform draw from the candidate interval, without scoring.
    Random { seed: u64 },
}

/// Chosen rate, co-prime shift and the evidence behind the choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecimationPlan {
    pub rho: u64,
    pub t: u64,
    pub candidates: Vec<RhoScore>,
    pub interval: (f64, f64),
}

/// Number of next-best rates tried when the best one admits no shift.
pub const SHIFT_RETRIES: usize = 3;

/// Score the candidates, select a rate and find its co-prime shift,
/// falling back to the next-best rates when no shift is feasible.
pub fn plan(
    oracle: &MeasurementOracle,
    n: usize,
    m: usize,
    strategy: SelectionStrategy,
) -> Result<DecimationPlan> {
    let omega = oracle.omega_max();
    let cands = candidate_rhos(omega, n)?;
    let interval = (cands.lo, cands.hi);
    let (candidates, order) = match strategy {
        SelectionStrategy::ArgMax => {
            let scores: Vec<RhoScore> = sweep(oracle, &cands.rhos, n, m, None)?
                .into_iter()
                .map(|s| s.score)
                .collect();
            let order = ranked(&scores);
            (scores, order)
        }
        SelectionStrategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order = cands.rhos.clone();
            let first = rng.random_range(0..order.len());
            order.swap(0, first);
            (Vec::new(), order)
        }
    };
    let mut last_err = SrError::EmptyCandidates;
    for &rho in order.iter().take(SHIFT_RETRIES + 1) {
        match coprime_shift(rho, omega, n) {
            Ok(t) => {
                return Ok(DecimationPlan {
                    rho,
                    t,
                    candidates,
                    interval,
                })
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}
