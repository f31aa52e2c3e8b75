//! Sparse row normalization: the alpha-entmax family.
//!
//! For alpha in (1, 2] the transform maps a score vector e to
//! `p_j = [(alpha-1) e_j - tau]_+^{1/(alpha-1)}` with the threshold tau
//! chosen so the outputs sum to one. Scores at or below the threshold map
//! to exactly zero, which is what prunes noisy edges downstream. alpha = 1
//! degenerates to softmax (dense), alpha = 2 is sparsemax.
//!
//! Two solvers are provided: bisection on the threshold (the production
//! path, cheap for long rows) and an exact sorting-based solver for
//! alpha in {1.5, 2} kept as an independent oracle.

use crate::error::{Error, Result};

/// Default stopping tolerance on `|sum(p) - 1|` for the bisection solver.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_BISECT_ITERS: usize = 100;

/// Output of a row normalization.
#[derive(Debug, Clone)]
pub struct EntmaxResult {
    /// Probabilities, same length as the input; non-negative, sum 1.
    pub p: Vec<f64>,
    /// Threshold; entries with `(alpha-1) e_j <= tau` are exactly zero.
    /// For the softmax case this is the log-partition value.
    pub tau: f64,
    /// Indices with strictly positive probability.
    pub support: Vec<usize>,
    pub alpha: f64,
}

impl EntmaxResult {
    fn from_p(p: Vec<f64>, tau: f64, alpha: f64) -> Self {
        let support = p
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v > 0.0)
            .map(|(j, _)| j)
            .collect();
        Self {
            p,
            tau,
            support,
            alpha,
        }
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

fn check_input(e: &[f64]) -> Result<()> {
    if e.is_empty() || e.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadEntmaxInput);
    }
    Ok(())
}

/// Numerically stable softmax; the alpha = 1 member of the family.
pub fn softmax(e: &[f64]) -> Result<EntmaxResult> {
    check_input(e)?;
    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = e.iter().map(|&x| (x - max).exp()).sum();
    let tau = max + sum.ln();
    let p: Vec<f64> = e.iter().map(|&x| (x - tau).exp()).collect();
    Ok(EntmaxResult::from_p(p, tau, 1.0))
}

fn probs_for_tau(z: &[f64], tau: f64, exponent: f64) -> Vec<f64> {
    z.iter()
        .map(|&zj| {
            let t = zj - tau;
            if t > 0.0 {
                t.powf(exponent)
            } else {
                0.0
            }
        })
        .collect()
}

/// alpha-entmax by bisection on the threshold.
///
/// The root is bracketed on `[max(z) - 1, max(z)]` with `z = (alpha-1) e`:
/// the sum of probabilities is at least 1 at the left end and 0 at the
/// right end. alpha = 1 routes to [`softmax`].
pub fn entmax(e: &[f64], alpha: f64, tol: f64) -> Result<EntmaxResult> {
    check_input(e)?;
    if !(1.0..=2.0).contains(&alpha) {
        return Err(Error::BadAlpha(alpha));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::BadEntmaxInput);
    }
    if alpha == 1.0 {
        return softmax(e);
    }

    let scale = alpha - 1.0;
    let exponent = 1.0 / scale;
    let z: Vec<f64> = e.iter().map(|&x| scale * x).collect();
    let z_max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut lo = z_max - 1.0;
    let mut hi = z_max;
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECT_ITERS {
        tau = 0.5 * (lo + hi);
        let sum: f64 = z
            .iter()
            .map(|&zj| {
                let t = zj - tau;
                if t > 0.0 {
                    t.powf(exponent)
                } else {
                    0.0
                }
            })
            .sum();
        if (sum - 1.0).abs() <= tol {
            break;
        }
        if sum > 1.0 {
            lo = tau;
        } else {
            hi = tau;
        }
    }

    let p = probs_for_tau(&z, tau, exponent);
    Ok(EntmaxResult::from_p(p, tau, alpha))
}

/// Exact sorting-based solver for alpha in {1.5, 2}; the oracle the
/// bisection path is checked against.
///
/// Sorts the scaled scores descending and solves the sum-to-one condition
/// in closed form for each candidate support size, keeping the one whose
/// threshold falls between the last included and first excluded score.
pub fn entmax_sorted_oracle(e: &[f64], alpha: f64) -> Result<EntmaxResult> {
    check_input(e)?;
    let is_15 = (alpha - 1.5).abs() < 1e-12;
    let is_20 = (alpha - 2.0).abs() < 1e-12;
    if !is_15 && !is_20 {
        return Err(Error::UnsupportedOracleAlpha(alpha));
    }
    let scale = alpha - 1.0;
    let z: Vec<f64> = e.iter().map(|&x| scale * x).collect();
    let mut sorted = z.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut cum = 0.0;
    let mut cum_sq = 0.0;
    let mut tau = f64::NAN;
    for k in 1..=sorted.len() {
        let zk = sorted[k - 1];
        cum += zk;
        cum_sq += zk * zk;
        let candidate = if is_20 {
            // Support entries are linear in z: tau = (sum - 1) / k.
            (cum - 1.0) / k as f64
        } else {
            // Support entries are squares: solve k*tau^2 - 2*sum*tau + (sum_sq - 1) = 0.
            let mean = cum / k as f64;
            let disc = mean * mean - (cum_sq - 1.0) / k as f64;
            if disc < 0.0 {
                continue;
            }
            mean - disc.sqrt()
        };
        let next = sorted.get(k).copied().unwrap_or(f64::NEG_INFINITY);
        if zk > candidate && candidate >= next {
            tau = candidate;
            break;
        }
    }
    if !tau.is_finite() {
        return Err(Error::BadEntmaxInput);
    }

    let exponent = 1.0 / scale;
    let p = probs_for_tau(&z, tau, exponent);
    Ok(EntmaxResult::from_p(p, tau, alpha))
}

/// Vector-Jacobian product of the entmax forward map at a computed result.
///
/// On the support the Jacobian is `diag(s) - s s^T / sum(s)` with
/// `s_j = p_j^(2-alpha)`; off-support rows and columns are zero. The same
/// expression with `s = p` covers the softmax case.
pub fn entmax_vjp(result: &EntmaxResult, upstream: &[f64]) -> Vec<f64> {
    entmax_vjp_parts(&result.p, result.alpha, upstream)
}

/// [`entmax_vjp`] from the probability vector alone, for callers that keep
/// rows rather than full results.
pub fn entmax_vjp_parts(p: &[f64], alpha: f64, upstream: &[f64]) -> Vec<f64> {
    assert_eq!(
        p.len(),
        upstream.len(),
        "upstream length must match the forward output"
    );
    let s: Vec<f64> = p
        .iter()
        .map(|&pj| if pj > 0.0 { pj.powf(2.0 - alpha) } else { 0.0 })
        .collect();
    let s_sum: f64 = s.iter().sum();
    let weighted: f64 = s.iter().zip(upstream).map(|(&sj, &uj)| sj * uj).sum();
    let shift = weighted / s_sum;
    s.iter()
        .zip(upstream)
        .map(|(&sj, &uj)| sj * (uj - shift))
        .collect()
}
