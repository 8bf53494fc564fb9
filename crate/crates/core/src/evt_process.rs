//! The weighted exponential-spacing process and its exact moment oracles.
//!
//! Building block: `S_{j,k} = exp(-gamma * sum_{h=j}^{k-1} E_h / h)` with
//! independent unit exponentials `E_h`. Its mean has the closed form
//! `s_{j,k} = prod_{h=j}^{k-1} h/(h+gamma)` (from `E e^{-tE} = 1/(1+t)`),
//! which we evaluate through log-gamma differences. Variances and
//! covariances follow from the independence of disjoint spacing blocks:
//! the `S_{j,k}` are non-increasing functions of independent exponentials,
//! hence associated, and all their covariances are non-negative.

use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::special::{inverse_square_tail, ln_gamma};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// weights and scaling
// ---------------------------------------------------------------------------

/// Increasing integer weight with `f(0) = 0`.
#[derive(Clone)]
pub enum WeightFunction {
    Power {
        tau: f64,
    },
    Table {
        values: Vec<f64>,
    },
    Rule {
        f: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    },
}

impl WeightFunction {
    pub fn power(tau: f64) -> Self {
        WeightFunction::Power { tau }
    }

    /// The identity weight, `f(j) = j`.
    pub fn id() -> Self {
        WeightFunction::Power { tau: 1.0 }
    }

    pub fn eval(&self, j: u64) -> f64 {
        match self {
            WeightFunction::Power { tau } => {
                if j == 0 {
                    0.0
                } else {
                    (j as f64).powf(*tau)
                }
            }
            WeightFunction::Table { values } => values[j as usize],
            WeightFunction::Rule { f } => f(j),
        }
    }

    /// Forward difference `f(j) - f(j-1)`, positive for `j >= 1`.
    pub fn delta(&self, j: u64) -> f64 {
        debug_assert!(j >= 1);
        self.eval(j) - self.eval(j - 1)
    }

    /// Checks `f(0) = 0` and strict monotonicity up to `max_j` (tables are
    /// checked over their whole range, rules on a probe grid).
    pub fn validate(&self, max_j: u64) -> Result<()> {
        if self.eval(0) != 0.0 {
            return Err(Error::Contract(
                "weight function must satisfy f(0) = 0".into(),
            ));
        }
        let probes: Vec<u64> = match self {
            WeightFunction::Table { values } => {
                if (values.len() as u64) <= max_j {
                    return Err(Error::InvalidParameter(format!(
                        "weight table has {} entries but index {} is required",
                        values.len(),
                        max_j
                    )));
                }
                (1..values.len() as u64).collect()
            }
            _ => (1..=max_j.min(64)).chain([max_j.max(1)]).collect(),
        };
        for &j in &probes {
            if !(self.delta(j) > 0.0) {
                return Err(Error::Contract(format!(
                    "weight function must be strictly increasing (failed at j = {j})"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFunction::Power { tau } => write!(f, "WeightFunction::Power(tau={tau})"),
            WeightFunction::Table { values } => {
                write!(f, "WeightFunction::Table(len={})", values.len())
            }
            WeightFunction::Rule { .. } => write!(f, "WeightFunction::Rule(..)"),
        }
    }
}

/// Positive scaling sequence `alpha(k)`.
#[derive(Clone)]
pub enum AlphaRule {
    One,
    Power {
        exponent: f64,
    },
    Rule {
        f: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    },
}

impl AlphaRule {
    /// `alpha(k) = k^{1 - tau}`, the scaling that pairs with the power
    /// weight `f(j) = j^tau`.
    pub fn matched_power(tau: f64) -> Self {
        AlphaRule::Power {
            exponent: 1.0 - tau,
        }
    }

    pub fn eval(&self, k: u64) -> f64 {
        match self {
            AlphaRule::One => 1.0,
            AlphaRule::Power { exponent } => (k as f64).powf(*exponent),
            AlphaRule::Rule { f } => f(k),
        }
    }
}

impl fmt::Debug for AlphaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaRule::One => write!(f, "AlphaRule::One"),
            AlphaRule::Power { exponent } => write!(f, "AlphaRule::Power({exponent})"),
            AlphaRule::Rule { .. } => write!(f, "AlphaRule::Rule(..)"),
        }
    }
}

/// Parameters of the weighted spacing process.
#[derive(Debug, Clone)]
pub struct EvtProcessParams {
    pub gamma: f64,
    pub f: WeightFunction,
    pub alpha: AlphaRule,
    /// Cutoff index L below which terms are dropped by the tail conditions.
    pub cutoff: u64,
    /// Block exponent parameter, 0 < delta < 3; nu = (1 - delta)/2.
    pub delta: f64,
}

impl EvtProcessParams {
    pub fn power_case(gamma: f64, tau: f64, delta: f64) -> Self {
        Self {
            gamma,
            f: WeightFunction::power(tau),
            alpha: AlphaRule::matched_power(tau),
            cutoff: 1,
            delta,
        }
    }

    pub fn nu(&self) -> f64 {
        (1.0 - self.delta) / 2.0
    }

    pub fn validate(&self, max_k: u64) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.delta > 0.0 && self.delta < 3.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 3), got {}",
                self.delta
            )));
        }
        if self.cutoff < 1 {
            return Err(Error::InvalidParameter("cutoff must be >= 1".into()));
        }
        self.f.validate(max_k)?;
        for k in [1u64, 2, 10, max_k.max(1)] {
            if !(self.alpha.eval(k) > 0.0) {
                return Err(Error::Contract(format!("alpha({k}) must be positive")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// exact moment oracles
// ---------------------------------------------------------------------------

/// `ln Gamma(x + gamma) - ln Gamma(x)`; `exp` of this behaves like `x^gamma`.
fn ln_ratio(x: f64, gamma: f64) -> f64 {
    ln_gamma(x + gamma) - ln_gamma(x)
}

fn check_pair(j: u64, k: u64) -> Result<()> {
    if j < 1 || j > k {
        return Err(Error::Index(format!(
            "need 1 <= j <= k, got j = {j}, k = {k}"
        )));
    }
    Ok(())
}

/// Exact mean `s_{j,k} = prod_{h=j}^{k-1} h/(h+gamma)`, via log-gamma
/// differences; the empty product (`j = k`) is 1.
pub fn s_jk(j: u64, k: u64, gamma: f64) -> Result<f64> {
    check_pair(j, k)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(s_jk_unchecked(j, k, gamma))
}

fn s_jk_unchecked(j: u64, k: u64, gamma: f64) -> f64 {
    if j == k {
        return 1.0;
    }
    (ln_ratio(j as f64, gamma) - ln_ratio(k as f64, gamma)).exp()
}

/// Exact variance of `S_{j,k}`.
pub fn var_s(j: u64, k: u64, gamma: f64) -> Result<f64> {
    let m1 = s_jk(j, k, gamma)?;
    let m2 = s_jk_unchecked(j, k, 2.0 * gamma);
    Ok((m2 - m1 * m1).max(0.0))
}

/// Exact covariance of `S_{i,k}` and `S_{j,k}` for `i <= j`; splitting the
/// spacing sum at `j` gives
/// `Cov = s_{i,j}(gamma) s_{j,k}(2 gamma) - s_{i,k}(gamma) s_{j,k}(gamma)`,
/// which is non-negative by association.
pub fn cov_s(i: u64, j: u64, k: u64, gamma: f64) -> Result<f64> {
    if i < 1 || i > j {
        return Err(Error::Index(format!(
            "need 1 <= i <= j, got i = {i}, j = {j}"
        )));
    }
    check_pair(j, k)?;
    let a = s_jk(i, j, gamma)?;
    let b = s_jk_unchecked(j, k, 2.0 * gamma);
    let c = s_jk_unchecked(i, k, gamma);
    let d = s_jk_unchecked(j, k, gamma);
    Ok((a * b - c * d).max(0.0))
}

/// The variance bound behind the covariance control: the exact tail sum
/// `gamma^2 sum_{h=j}^{k-1} h^{-2}` plus the two closed-form envelopes.
/// The integral comparison with `int_{j-1}^{k}` gives `gamma^2/(j-1)`; the
/// frequently quoted `gamma^2/j` is also reported but is *not* an upper
/// bound of the exact sum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NewmanBound {
    pub exact: f64,
    /// `gamma^2 / (j - 1)`, a true upper bound for the tail sum.
    pub integral_bound: f64,
    /// `gamma^2 / j`, the commonly stated constant.
    pub quoted_bound: f64,
}

pub fn newman_bound(j: u64, k: u64, gamma: f64) -> Result<NewmanBound> {
    if j < 2 || j > k {
        return Err(Error::Index(format!(
            "need 2 <= j <= k, got j = {j}, k = {k}"
        )));
    }
    let g2 = gamma * gamma;
    Ok(NewmanBound {
        exact: g2 * inverse_square_tail(j, k),
        integral_bound: g2 / (j - 1) as f64,
        quoted_bound: g2 / j as f64,
    })
}

/// Oracle front-end caching the tail parameter; handy when sweeping grids.
#[derive(Debug, Clone)]
pub struct MomentOracle {
    pub gamma: f64,
}

impl MomentOracle {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    pub fn s(&self, j: u64, k: u64) -> Result<f64> {
        s_jk(j, k, self.gamma)
    }

    pub fn var(&self, j: u64, k: u64) -> Result<f64> {
        var_s(j, k, self.gamma)
    }

    pub fn cov(&self, i: u64, j: u64, k: u64) -> Result<f64> {
        cov_s(i, j, k, self.gamma)
    }
}

// ---------------------------------------------------------------------------
// simulated paths
// ---------------------------------------------------------------------------

/// One trajectory of the weighted statistic.
///
/// `values[k-1]` holds the normalized sum
/// `A_k / f(k)` with `A_k = sum_{j=1}^{k-1} Delta f(j) S_{j,k}`, and
/// `raw_w[k-1]` the telescoped form `W_k = f(k-1) - A_k` (the spacing sum
/// `sum f(j) [S_{j+1,k} - S_{j,k}]`; Abel summation carries a minus sign on
/// the weighted block sum).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WkPath {
    pub seed: u64,
    pub k_max: u64,
    pub values: Vec<f64>,
    pub raw_w: Vec<f64>,
}

/// Simulate the normalized statistic up to `k_max` with the O(k) recursion
/// `A_{k+1} = (A_k + Delta f(k)) * exp(-gamma E_k / k)`.
pub fn simulate_wk(
    stream: &mut SeededStream,
    params: &EvtProcessParams,
    k_max: u64,
) -> Result<WkPath> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "k_max must be >= 2, got {k_max}"
        )));
    }
    params.validate(k_max)?;
    let seed = stream.seed();
    let mut values = Vec::with_capacity(k_max as usize);
    let mut raw_w = Vec::with_capacity(k_max as usize);
    let mut sum = 0.0_f64; // A_k
    for k in 1..=k_max {
        values.push(sum / params.f.eval(k));
        raw_w.push(params.f.eval(k - 1) - sum);
        if k < k_max {
            let e = stream.exponential();
            sum = (sum + params.f.delta(k)) * (-params.gamma * e / k as f64).exp();
        }
    }
    Ok(WkPath {
        seed,
        k_max,
        values,
        raw_w,
    })
}

/// Exact mean of the normalized statistic, `sum_j Delta f(j) s_{j,k} / f(k)`,
/// by the same recursion with the factor `k/(k+gamma)` in place of the
/// exponential.
pub fn wk_mean(gamma: f64, f: &WeightFunction, k: u64) -> f64 {
    let mut m = 0.0_f64;
    for kk in 1..k {
        m = (m + f.delta(kk)) * kk as f64 / (kk as f64 + gamma);
    }
    m / f.eval(k)
}

/// Deterministic centering sum `M_k = sum_{j=1}^{k-1} Delta f(j) s_{j,k}`.
fn centering_sum(gamma: f64, f: &WeightFunction, k: u64) -> f64 {
    let mut m = 0.0_f64;
    for kk in 1..k {
        m = (m + f.delta(kk)) * kk as f64 / (kk as f64 + gamma);
    }
    m
}

/// `mu_k = alpha(k) * M_k / k`; the `1/k` matches the almost-sure limit of
/// the normalized partial sums.
pub fn mu_k(params: &EvtProcessParams, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    params.validate(k)?;
    Ok(params.alpha.eval(k) * centering_sum(params.gamma, &params.f, k) / k as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuLimit {
    pub value: f64,
    pub error_estimate: f64,
    /// The `(k, mu_k)` evaluations behind the extrapolation.
    pub grid: Vec<(u64, f64)>,
}

/// Extrapolated limit of `mu_k` over a geometric grid (Richardson step
/// assuming a leading `1/k` error term). Returns a divergence error when the
/// sequence trends away instead of settling.
pub fn mu_limit(params: &EvtProcessParams) -> Result<MuLimit> {
    const K0: u64 = 2_000;
    const LEVELS: u32 = 9; // up to k = 512_000
    let k_top = K0 << (LEVELS - 1);
    params.validate(k_top)?;

    // one recursion pass, checkpointing mu_k at the geometric grid
    let checkpoints: Vec<u64> = (0..LEVELS).map(|m| K0 << m).collect();
    let mut grid = Vec::with_capacity(checkpoints.len());
    let mut m = 0.0_f64;
    let mut next = 0usize;
    for kk in 1..=k_top {
        if next < checkpoints.len() && kk == checkpoints[next] {
            grid.push((kk, params.alpha.eval(kk) * m / kk as f64));
            next += 1;
        }
        m = (m + params.f.delta(kk)) * kk as f64 / (kk as f64 + params.gamma);
    }

    // divergence probe: growing magnitude across every doubling
    let mags: Vec<f64> = grid.iter().map(|&(_, v)| v.abs()).collect();
    let growing = mags.windows(2).all(|w| w[1] > w[0] * 1.05);
    if growing && mags[mags.len() - 1] > 10.0 * mags[0].max(1e-12) {
        return Err(Error::Divergent("mu_k grows without settling".into()));
    }

    let r = |m: usize| 2.0 * grid[m + 1].1 - grid[m].1;
    let last = r(grid.len() - 2);
    let prev = r(grid.len() - 3);
    Ok(MuLimit {
        value: last,
        error_estimate: (last - prev).abs(),
        grid,
    })
}

/// Centered path: `values[k-1] = alpha(k) (A_k - M_k) / k`, the normalized
/// centered block sum, which tends to zero almost surely under the tail
/// conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenteredPath {
    pub seed: u64,
    pub k_max: u64,
    pub values: Vec<f64>,
}

pub fn simulate_sk_star(
    stream: &mut SeededStream,
    params: &EvtProcessParams,
    k_max: u64,
) -> Result<CenteredPath> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "k_max must be >= 2, got {k_max}"
        )));
    }
    params.validate(k_max)?;
    let seed = stream.seed();
    let mut values = Vec::with_capacity(k_max as usize);
    let mut sum = 0.0_f64; // A_k
    let mut cent = 0.0_f64; // M_k
    for k in 1..=k_max {
        values.push(params.alpha.eval(k) * (sum - cent) / k as f64);
        if k < k_max {
            let e = stream.exponential();
            let d = params.f.delta(k);
            sum = (sum + d) * (-params.gamma * e / k as f64).exp();
            cent = (cent + d) * k as f64 / (k as f64 + params.gamma);
        }
    }
    Ok(CenteredPath {
        seed,
        k_max,
        values,
    })
}

// ---------------------------------------------------------------------------
// weighted variances (O(k) routes used by the condition evaluators)
// ---------------------------------------------------------------------------

/// Variance of the centered weighted sum
/// `sum_{j=a}^{b} alpha(k) Delta f(j) (S_{j,k} - s_{j,k})` at horizon `k`,
/// expanded through the exact covariance oracle with running prefix sums,
/// O(b - a) per call.
pub fn weighted_block_var(params: &EvtProcessParams, a: u64, b: u64, k: u64) -> Result<f64> {
    if a < 1 || a > b || b >= k {
        return Err(Error::Index(format!(
            "need 1 <= a <= b < k, got a={a} b={b} k={k}"
        )));
    }
    let g = params.gamma;
    let ak = params.alpha.eval(k);
    let lr_k1 = ln_ratio(k as f64, g);
    let lr_k2 = ln_ratio(k as f64, 2.0 * g);
    let mut total = 0.0_f64;
    let mut prefix = 0.0_f64; // sum_{i<j in block} w_i * exp(lr1(i))
    for j in a..=b {
        let w = ak * params.f.delta(j);
        let lr1 = ln_ratio(j as f64, g);
        let lr2 = ln_ratio(j as f64, 2.0 * g);
        let s1 = (lr1 - lr_k1).exp(); // s_{j,k}(gamma)
        let s2 = (lr2 - lr_k2).exp(); // s_{j,k}(2 gamma)
        total += w * w * (s2 - s1 * s1).max(0.0);
        // cross terms against every i < j in the block:
        //   cov = s_{i,j}(g) s_{j,k}(2g) - s_{i,k}(g) s_{j,k}(g)
        total += 2.0 * w * prefix * (s2 * (-lr1).exp() - s1 * (-lr_k1).exp());
        prefix += w * lr1.exp();
    }
    Ok(total.max(0.0))
}

/// Variance of the full centered sum at horizon `k` (indices `1..k`).
pub fn weighted_prefix_var(params: &EvtProcessParams, k: u64) -> Result<f64> {
    weighted_block_var(params, 1, k - 1, k)
}
