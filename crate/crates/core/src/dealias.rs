//! Resolving the `rho`-fold ambiguity of decimated nodes with a co-prime
//! shifted sample set.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::decimation::gcd;
use crate::error::{Result, SrError};
use crate::matching::hungarian;
use crate::signal_model::{wrap_angle, wrap_dist};
use crate::sr_methods::NodeEstimate;

/// The `r` angles whose `r`-th multiple has the argument of `w`.
pub fn candidate_roots(w: Complex64, r: u64) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(SrError::Domain("candidate roots need r >= 1".into()));
    }
    let theta = w.arg();
    Ok((0..r)
        .map(|m| wrap_angle((theta + TAU * m as f64) / r as f64))
        .collect())
}

/// Pairing `p` with `a[i]` matched to `b[p[i]]`, minimizing the total
/// wrapped distance between arguments.
pub fn match_estimates(a: &NodeEstimate, b: &NodeEstimate) -> Result<Vec<usize>> {
    match_angles(&a.angles(), &b.angles())
}

pub fn match_angles(a: &[f64], b: &[f64]) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(SrError::CardinalityMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|&x| b.iter().map(|&y| wrap_dist(x, y)).collect())
        .collect();
    hungarian(&cost)
}

/// Amplitude floor relative to the largest recovered amplitude.
pub const AMP_FLOOR_REL: f64 = 1e-3;

/// `a_shift / a` projected onto the unit circle.
pub fn shift_power_from_amps(a: Complex64, a_shift: Complex64, amp_floor: f64) -> Result<Complex64> {
    let modulus = a.norm();
    if !(modulus > amp_floor) {
        return Err(SrError::AmplitudeUnderflow {
            modulus,
            floor: amp_floor,
        });
    }
    Ok(Complex64::cis((a_shift / a).arg()))
}

/// Estimates of `Phi^rho` and `Phi^t` for one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AliasedPair {
    pub phi_rho: Complex64,
    pub phi_t: Complex64,
    pub rho: u64,
    pub t: u64,
}

/// Default acceptance tolerance on the shifted-phase residual.
pub fn default_tol(rho: u64) -> f64 {
    PI / (2.0 * rho as f64)
}

pub fn dealias_node(pair: &AliasedPair) -> Result<f64> {
    dealias_node_with_tol(pair, default_tol(pair.rho))
}

/// Among the `rho` candidates for `phi_rho`, the one whose `t`-th multiple
/// lands closest to `arg(phi_t)`.
pub fn dealias_node_with_tol(pair: &AliasedPair, tol: f64) -> Result<f64> {
    let AliasedPair { phi_rho, phi_t, rho, t } = *pair;
    if rho == 0 || gcd(rho, t) != 1 {
        return Err(SrError::NotCoprime { rho, t });
    }
    if rho == 1 {
        return Ok(phi_rho.arg());
    }
    if t == 1 {
        return Ok(phi_t.arg());
    }
    let target = phi_t.arg();
    let (best, residual) = candidate_roots(phi_rho, rho)?
        .into_iter()
        .map(|x| (x, wrap_dist(t as f64 * x, target)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("rho >= 2 candidates");
    if residual > tol {
        return Err(SrError::AmbiguousAlias { residual, tol });
    }
    Ok(best)
}

/// `(u, v)` with `u a + v b = gcd(a, b)`.
pub fn bezout(a: u64, b: u64) -> (i64, i64) {
    let (mut r0, mut r1) = (a as i64, b as i64);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (s0, t0)
}

/// `arg(phi_rho^u phi_t^v)` with `u rho + v t = 1`.
pub fn bezout_node(pair: &AliasedPair) -> Result<f64> {
    if pair.rho == 0 || gcd(pair.rho, pair.t) != 1 {
        return Err(SrError::NotCoprime {
            rho: pair.rho,
            t: pair.t,
        });
    }
    let (u, v) = bezout(pair.rho, pair.t);
    Ok(wrap_angle(u as f64 * pair.phi_rho.arg() + v as f64 * pair.phi_t.arg()))
}
