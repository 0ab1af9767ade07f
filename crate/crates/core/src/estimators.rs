//! Expected mean matching distance on a segment.
//!
//! All estimators return values in the same distance unit as `length`. The
//! unit-segment formulas are scaled linearly: a segment of length `L` with
//! fixed point counts is a unit segment stretched by `L`.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    ballot_prob, expected_zero_returns, harel_area, stars_bars_unchecked,
};
use crate::error::{ensure, Result};
use crate::types::EdgeParams;

/// Largest distance between `mu * L` (or `lambda * L`) and an integer that
/// [`dispatch_estimate`] accepts.
pub const COUNT_ROUNDING_TOLERANCE: f64 = 1e-6;

/// Supply-to-demand ratio from which [`dispatch_estimate`] uses the
/// `1 / (2 lambda)` asymptote instead of the recursive estimator.
pub const ASYMPTOTE_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Balanced,
    ClosedUnbalanced,
    Recursive,
    Baseline,
    EdgeScaled,
    Network,
}

impl Method {
    /// Short name used in CLI flags and output columns.
    pub fn tag(self) -> &'static str {
        match self {
            Method::Balanced => "balanced",
            Method::ClosedUnbalanced => "closed",
            Method::Recursive => "recursive",
            Method::Baseline => "baseline",
            Method::EdgeScaled => "edge",
            Method::Network => "network",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    /// Whether the step-length correction was subtracted.
    pub corrected: bool,
}

/// Step-length correction `(n - m) / (2 n (m + n))`, scaled to `length`.
pub fn step_correction(m: u64, n: u64, length: f64) -> f64 {
    length * (n - m) as f64 / (2.0 * n as f64 * (m + n) as f64)
}

fn check_length(length: f64) -> Result<()> {
    ensure!(
        length.is_finite() && length > 0.0,
        InvalidInput,
        "length must be positive and finite, got {length}"
    );
    Ok(())
}

fn check_unbalanced(m: u64, n: u64) -> Result<()> {
    ensure!(m >= 1, Precondition, "need at least one demand point, got m = {m}");
    ensure!(
        n > m,
        Precondition,
        "unbalanced estimators need n > m (got m = {m}, n = {n}); use the balanced estimator"
    );
    Ok(())
}

/// Balanced case `m = n`: `l B(n) / n` with `l = L / (2n)`.
pub fn balanced_estimate(n: u64, length: f64) -> Result<Estimate> {
    ensure!(n >= 1, Precondition, "balanced estimator needs n >= 1");
    check_length(length)?;
    let nf = n as f64;
    Ok(Estimate {
        value: length * harel_area(n) / (2.0 * nf * nf),
        method: Method::Balanced,
        corrected: false,
    })
}

/// Closed form for `n > m`, assuming the removed supply points split the
/// curve into segments with uniformly distributed demand counts.
pub fn closed_unbalanced_estimate(
    m: u64,
    n: u64,
    length: f64,
    apply_correction: bool,
) -> Result<Estimate> {
    check_unbalanced(m, n)?;
    check_length(length)?;
    let sum: f64 = (0..=m)
        .map(|mp| stars_bars_unchecked(mp, m, n) * harel_area(mp))
        .sum();
    let raw = length * (n - m + 1) as f64 / (m as f64 * (m + n) as f64) * sum;
    Ok(finish(raw, m, n, length, apply_correction, Method::ClosedUnbalanced))
}

fn finish(raw: f64, m: u64, n: u64, length: f64, corrected: bool, method: Method) -> Estimate {
    let value = if corrected {
        raw - step_correction(m, n, length)
    } else {
        raw
    };
    Estimate {
        value,
        method,
        corrected,
    }
}

/// Expected tail areas `E[Z(k, a)]` of the recursive estimator.
///
/// Row `k` is the tail to the right of the `k`-th selected removal and `a`
/// the number of demand points in it. Rows run from `0` to `n - m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTable {
    excess: usize,
    m: usize,
    step: f64,
    values: Vec<f64>,
}

impl RecursionTable {
    /// Fills the table bottom-up from the last row.
    pub fn build(m: u64, n: u64, length: f64) -> Result<Self> {
        check_unbalanced(m, n)?;
        check_length(length)?;
        let (mu, excess) = (m as usize, (n - m) as usize);
        let step = length / (m + n) as f64;
        let width = mu + 1;

        let segment_area: Vec<f64> = (0..=m).map(|a| step * harel_area(a)).collect();
        let swap_gain: Vec<f64> = (0..=m)
            .map(|a| step * (2.0 * a as f64 - 2.0 * expected_zero_returns(a)))
            .collect();

        let mut values = vec![0.0; (excess + 1) * width];
        values[excess * width..].copy_from_slice(&segment_area);

        for k in (0..excess).rev() {
            let remaining = (excess - k) as u64;
            let (head, tail) = values.split_at_mut((k + 1) * width);
            let row = &mut head[k * width..];
            let next = &tail[..width];
            for a in 0..=mu {
                let mut acc = 0.0;
                for mp in 0..=a {
                    let p = ballot_prob(mp as u64, a as u64, remaining);
                    let mut term = segment_area[mp] + next[a - mp];
                    if k > 0 {
                        term -= swap_gain[mp];
                    }
                    acc += p * term;
                }
                row[a] = acc;
            }
        }

        Ok(RecursionTable {
            excess,
            m: mu,
            step,
            values,
        })
    }

    /// `E[Z(k, a)]`; `None` outside `0 <= k <= n - m`, `0 <= a <= m`.
    pub fn get(&self, k: usize, a: usize) -> Option<f64> {
        (k <= self.excess && a <= self.m).then(|| self.values[k * (self.m + 1) + a])
    }

    /// Mean step length `L / (m + n)`.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn rows(&self) -> usize {
        self.excess + 1
    }

    /// Expected area of the whole post-removal curve.
    pub fn total(&self) -> f64 {
        self.values[self.m]
    }
}

/// Recursive upper-bound estimator for `n > m`, with one point swap per
/// interior segment.
pub fn recursive_estimate(
    m: u64,
    n: u64,
    length: f64,
    apply_correction: bool,
) -> Result<Estimate> {
    let table = RecursionTable::build(m, n, length)?;
    let raw = table.total() / m as f64;
    Ok(finish(raw, m, n, length, apply_correction, Method::Recursive))
}

/// Earlier general-purpose formula, asymptotically `L / (2n)` for `n >> m`.
pub fn baseline_estimate(m: u64, n: u64, length: f64) -> Result<Estimate> {
    ensure!(m >= 1, Precondition, "baseline needs m >= 1");
    ensure!(n >= m, Precondition, "baseline needs n >= m (got m = {m}, n = {n})");
    check_length(length)?;
    let nf = n as f64;
    let mut total = 0.0;
    for i in 1..=m {
        let p = (i - 1) as f64 / nf;
        let mut inner = 0.0;
        let mut pk = 1.0;
        for k in 1..=i {
            inner += k as f64 * pk * (1.0 - p);
            pk *= p;
        }
        total += inner + i as f64 * pk;
    }
    Ok(Estimate {
        value: length * total / (2.0 * m as f64 * (nf + 1.0)),
        method: Method::Baseline,
        corrected: false,
    })
}

fn rounded_count(density: f64, length: f64, what: &str) -> Result<u64> {
    let x = density * length;
    let r = x.round();
    ensure!(
        (x - r).abs() <= COUNT_ROUNDING_TOLERANCE,
        InvalidInput,
        "{what} count {x} is not an integer"
    );
    ensure!(r >= 1.0, InvalidInput, "{what} count must be at least 1, got {r}");
    Ok(r as u64)
}

/// Picks the estimator for one edge from its densities:
/// balanced when `lambda L = mu L`, the `1 / (2 lambda)` asymptote from
/// [`ASYMPTOTE_RATIO`] on, and the corrected recursive estimator otherwise.
pub fn dispatch_estimate(params: &EdgeParams) -> Result<Estimate> {
    let m = rounded_count(params.mu, params.length, "demand")?;
    let n = rounded_count(params.lambda, params.length, "supply")?;
    if n == m {
        return balanced_estimate(n, params.length);
    }
    if params.ratio() >= ASYMPTOTE_RATIO {
        return Ok(Estimate {
            value: 1.0 / (2.0 * params.lambda),
            method: Method::EdgeScaled,
            corrected: false,
        });
    }
    recursive_estimate(m, n, params.length, true)
}
