//! Numerical evaluators for the almost-sure convergence conditions: the
//! prefix/block variance-growth pair (GCIP1/GCIP2), the Hajek-Renyi-type
//! covariance condition (GCHR1), Newman's stationary variance constant
//! (new01), the Cesaro covariance criterion (lebonew), the stationary
//! condition q2, Birkel's variant, the five deterministic conditions of the
//! weighted spacing process (prop2.1 .. prop2.4), and Monte Carlo probes of
//! the max-variance property.
//!
//! "sup < infinity" is not machine-decidable; every evaluator reports the
//! running supremum over a geometric grid together with a log-log slope fit
//! on the top half of the grid and turns the pair into a verdict:
//! `bounded` when the slope is at most `slope_tol`, `diverging` when the
//! slope clearly exceeds it with a clean power-law fit, `inconclusive`
//! otherwise. The tolerances are overridable and documented as a surrogate,
//! not a proof.

use crate::error::{Error, Result};
use crate::evt_process::{weighted_block_var, EvtProcessParams};
use crate::rng::SeededStream;
use crate::stats;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// covariance models
// ---------------------------------------------------------------------------

pub type IndexFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(u64, u64) -> f64 + Send + Sync>;

/// Covariance structure of a centered sequence `X_1, X_2, ...`.
///
/// The `EvtOracle` kind is triangular: the sequence under study at prefix
/// length `q` is the family `alpha(k) Delta f(i) (S_{i,k} - s_{i,k})`,
/// `i < k`, at horizon `k = q + 1`, so that the prefix variance equals the
/// variance of the full centered statistic `S*_{q+1}`. Evaluators pass the
/// horizon explicitly; the other kinds ignore it.
#[derive(Clone)]
pub enum CovarianceModel {
    /// Independent entries with variances `v_i`.
    Independent { variance: IndexFn },
    /// Stationary covariances `rho(lag)` with `rho(0) = Var`.
    Stationary { rho: IndexFn },
    /// Arbitrary covariance rule `Cov(i, j)` (must be symmetric).
    General { cov: PairFn },
    /// Covariance matrix estimated from data (1-based indices into it).
    Empirical { matrix: Vec<Vec<f64>> },
    /// Exact oracle for the weighted exponential-spacing process.
    EvtOracle { params: EvtProcessParams },
    /// Off-diagonal covariances clipped at zero ("drop the covariances"
    /// reduction for negatively associated sequences).
    Dropped { inner: Box<CovarianceModel> },
}

impl fmt::Debug for CovarianceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceModel::Independent { .. } => write!(f, "CovarianceModel::Independent"),
            CovarianceModel::Stationary { .. } => write!(f, "CovarianceModel::Stationary"),
            CovarianceModel::General { .. } => write!(f, "CovarianceModel::General"),
            CovarianceModel::Empirical { matrix } => {
                write!(f, "CovarianceModel::Empirical(n={})", matrix.len())
            }
            CovarianceModel::EvtOracle { params } => {
                write!(f, "CovarianceModel::EvtOracle({params:?})")
            }
            CovarianceModel::Dropped { inner } => write!(f, "Dropped({inner:?})"),
        }
    }
}

impl CovarianceModel {
    pub fn independent_const(v: f64) -> Self {
        CovarianceModel::Independent {
            variance: Arc::new(move |_| v),
        }
    }

    /// Independent entries with `v_i = i^p`.
    pub fn independent_power(p: f64) -> Self {
        CovarianceModel::Independent {
            variance: Arc::new(move |i| (i as f64).powf(p)),
        }
    }

    pub fn stationary<F: Fn(u64) -> f64 + Send + Sync + 'static>(rho: F) -> Self {
        CovarianceModel::Stationary { rho: Arc::new(rho) }
    }

    pub fn general<F: Fn(u64, u64) -> f64 + Send + Sync + 'static>(cov: F) -> Self {
        CovarianceModel::General { cov: Arc::new(cov) }
    }

    /// Clip off-diagonal covariances at zero; with negatively associated
    /// data this reduces the model to its diagonal.
    pub fn drop_covariances(self) -> Self {
        CovarianceModel::Dropped {
            inner: Box::new(self),
        }
    }

    /// Largest usable index, when the model is finite (empirical kind).
    pub fn dim(&self) -> Option<u64> {
        match self {
            CovarianceModel::Empirical { matrix } => Some(matrix.len() as u64),
            CovarianceModel::Dropped { inner } => inner.dim(),
            _ => None,
        }
    }

    /// `Cov(X_i, X_j)` at the given horizon (1-based indices).
    pub fn cov(&self, i: u64, j: u64, horizon: u64) -> f64 {
        debug_assert!(i >= 1 && j >= 1);
        match self {
            CovarianceModel::Independent { variance } => {
                if i == j {
                    variance(i)
                } else {
                    0.0
                }
            }
            CovarianceModel::Stationary { rho } => rho(i.abs_diff(j)),
            CovarianceModel::General { cov } => cov(i, j),
            CovarianceModel::Empirical { matrix } => matrix[(i - 1) as usize][(j - 1) as usize],
            CovarianceModel::EvtOracle { params } => {
                if i >= horizon || j >= horizon {
                    return 0.0;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                let a = params.alpha.eval(horizon);
                a * a
                    * params.f.delta(lo)
                    * params.f.delta(hi)
                    * crate::evt_process::cov_s(lo, hi, horizon, params.gamma).unwrap()
            }
            CovarianceModel::Dropped { inner } => {
                let c = inner.cov(i, j, horizon);
                if i == j {
                    c
                } else {
                    c.max(0.0)
                }
            }
        }
    }

    /// `Var(sum_{i=a}^{b} X_i)` at the given horizon; O(b - a) for the
    /// independent, stationary and oracle kinds, O((b - a)^2) otherwise.
    pub fn block_var(&self, a: u64, b: u64, horizon: u64) -> f64 {
        debug_assert!(a >= 1 && a <= b);
        match self {
            CovarianceModel::Independent { variance } => (a..=b).map(|i| variance(i)).sum(),
            CovarianceModel::Stationary { rho } => {
                let m = b - a + 1;
                let mut v = m as f64 * rho(0);
                for l in 1..m {
                    v += 2.0 * (m - l) as f64 * rho(l);
                }
                v
            }
            CovarianceModel::EvtOracle { params } => {
                // indices at or past the horizon contribute constants
                let b = b.min(horizon - 1);
                if a > b {
                    return 0.0;
                }
                weighted_block_var(params, a, b, horizon).unwrap()
            }
            _ => {
                let mut v = 0.0;
                for i in a..=b {
                    for j in a..=b {
                        v += self.cov(i, j, horizon);
                    }
                }
                v
            }
        }
    }

    /// `Var(S_q)` with the oracle horizon convention `k = q + 1`.
    pub fn prefix_var(&self, q: u64) -> f64 {
        self.block_var(1, q, q + 1)
    }
}

// ---------------------------------------------------------------------------
// verdicts and reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Diverging,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Bounded => write!(f, "bounded"),
            Verdict::Diverging => write!(f, "diverging"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Tolerances of the numerical sup surrogate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerdictTolerances {
    /// Log-log slopes at most this are treated as bounded.
    pub slope_tol: f64,
    /// A diverging verdict additionally requires the power-law fit residual
    /// (rms, in log space) below this.
    pub residual_tol: f64,
    /// For criteria whose limit must be zero, last values at most this count
    /// as vanished.
    pub zero_tol: f64,
}

impl Default for VerdictTolerances {
    fn default() -> Self {
        Self {
            slope_tol: 0.02,
            residual_tol: 0.05,
            zero_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: String,
    pub parameters: BTreeMap<String, f64>,
    /// `(index, value)` pairs on the geometric grid.
    pub grid: Vec<(u64, f64)>,
    pub running_sup: f64,
    /// Least-squares slope of log value vs log index over the top half of
    /// the grid.
    pub loglog_slope: f64,
    /// RMS residual of that fit, in log space.
    pub residual: f64,
    pub verdict: Verdict,
}

/// Geometric index grid `ceil(1.25^m)` intersected with `[lo, hi]`, with
/// `hi` always included.
pub fn geometric_grid(lo: u64, hi: u64) -> Vec<u64> {
    let lo = lo.max(1);
    let mut out = Vec::new();
    let mut x = 1.0_f64;
    while (x.ceil() as u64) <= hi {
        let q = x.ceil() as u64;
        if q >= lo && out.last() != Some(&q) {
            out.push(q);
        }
        x *= 1.25;
    }
    if out.last() != Some(&hi) {
        out.push(hi);
    }
    out
}

fn fit_top_half(grid: &[(u64, f64)]) -> (f64, f64) {
    let start = grid.len() / 2;
    let pts: Vec<(f64, f64)> = grid[start..]
        .iter()
        .filter(|&&(_, v)| v > 1e-300)
        .map(|&(q, v)| ((q as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return (0.0, 0.0);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, _, rms) = stats::linear_fit(&xs, &ys);
    (slope, rms)
}

fn classify_bounded(grid: &[(u64, f64)], tol: &VerdictTolerances) -> (f64, f64, f64, Verdict) {
    let sup = grid
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let (slope, residual) = fit_top_half(grid);
    let verdict = if !sup.is_finite() {
        Verdict::Diverging
    } else if slope <= tol.slope_tol {
        Verdict::Bounded
    } else if residual <= tol.residual_tol {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    (sup, slope, residual, verdict)
}

fn classify_zero_limit(grid: &[(u64, f64)], tol: &VerdictTolerances) -> (f64, f64, f64, Verdict) {
    let sup = grid
        .iter()
        .map(|&(_, v)| v.abs())
        .fold(f64::NEG_INFINITY, f64::max);
    let abs_grid: Vec<(u64, f64)> = grid.iter().map(|&(q, v)| (q, v.abs())).collect();
    let (slope, residual) = fit_top_half(&abs_grid);
    let last = abs_grid.last().map(|&(_, v)| v).unwrap_or(f64::NAN);
    let verdict = if slope <= -tol.slope_tol || last <= tol.zero_tol {
        Verdict::Bounded
    } else if slope > tol.slope_tol && residual <= tol.residual_tol {
        Verdict::Diverging
    } else if slope.abs() <= tol.slope_tol && last > tol.zero_tol {
        // flat at a nonzero level: the Cesaro mean does not vanish
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    (sup, slope, residual, verdict)
}

fn report(
    condition_id: &str,
    parameters: BTreeMap<String, f64>,
    grid: Vec<(u64, f64)>,
    tol: &VerdictTolerances,
    zero_limit: bool,
) -> ConditionReport {
    let (running_sup, loglog_slope, residual, verdict) = if zero_limit {
        classify_zero_limit(&grid, tol)
    } else {
        classify_bounded(&grid, tol)
    };
    ConditionReport {
        condition_id: condition_id.to_string(),
        parameters,
        grid,
        running_sup,
        loglog_slope,
        residual,
        verdict,
    }
}

fn params_map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

// ---------------------------------------------------------------------------
// GCIP
// ---------------------------------------------------------------------------

/// Prefix and block variance-growth conditions.
///
/// Report 1 (GCIP1) evaluates `Var(S_q) / q^{(3-delta)/2}` over `q <= q_max`;
/// report 2 (GCIP2) evaluates, for each `q <= sqrt(q_max)`, the supremum over
/// block positions `q^2 + 1 <= k <= (q+1)^2` of
/// `Var(sum_{i=q^2+1}^{k} X_i) / q^{3-delta}`. The inner `sup_{j<=k}` is
/// attained at `j = k` for independent and associated models (block variances
/// grow with the block), which is how it is evaluated.
pub fn eval_gcip(
    model: &CovarianceModel,
    delta: f64,
    q_max: u64,
    tol: &VerdictTolerances,
) -> Result<(ConditionReport, ConditionReport)> {
    if !(delta > 0.0 && delta < 3.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 3), got {delta}"
        )));
    }
    if q_max < 10 {
        return Err(Error::InvalidParameter(format!(
            "q_max must be >= 10, got {q_max}"
        )));
    }
    let q_max = model.dim().map_or(q_max, |d| q_max.min(d));
    let pars = params_map(&[("delta", delta), ("q_max", q_max as f64)]);

    let grid1: Vec<(u64, f64)> = geometric_grid(1, q_max)
        .into_iter()
        .map(|q| {
            (
                q,
                model.prefix_var(q) / (q as f64).powf((3.0 - delta) / 2.0),
            )
        })
        .collect();
    let r1 = report("GCIP1", pars.clone(), grid1, tol, false);

    let q_top = (q_max as f64).sqrt().floor() as u64;
    let mut grid2 = Vec::new();
    for q in geometric_grid(1, q_top.max(2)) {
        let lo = q * q + 1;
        let hi = (q + 1) * (q + 1);
        let mut sup = 0.0_f64;
        for k in lo..=hi {
            sup = sup.max(model.block_var(lo, k, k) / (q as f64).powf(3.0 - delta));
        }
        grid2.push((q, sup));
    }
    let r2 = report("GCIP2", pars, grid2, tol, false);
    Ok((r1, r2))
}

// ---------------------------------------------------------------------------
// GCHR
// ---------------------------------------------------------------------------

/// Normalizing sequence `b_i` of the Hajek-Renyi condition.
#[derive(Clone)]
pub enum BoundRule {
    Power { exponent: f64 },
    Rule { f: IndexFn },
}

impl BoundRule {
    /// `b_i = i`.
    pub fn identity() -> Self {
        BoundRule::Power { exponent: 1.0 }
    }

    pub fn eval(&self, i: u64) -> f64 {
        match self {
            BoundRule::Power { exponent } => (i as f64).powf(*exponent),
            BoundRule::Rule { f } => f(i),
        }
    }

    fn validate(&self, n_max: u64) -> Result<()> {
        let probes: Vec<u64> = geometric_grid(1, n_max);
        let mut prev = 0.0_f64;
        for &i in &probes {
            let b = self.eval(i);
            if !(b > 0.0) || b < prev {
                return Err(Error::Contract(
                    "b rule must be positive and non-decreasing".into(),
                ));
            }
            prev = b;
        }
        if self.eval(n_max) <= self.eval(1) {
            return Err(Error::Contract("b rule must be unbounded".into()));
        }
        Ok(())
    }
}

impl fmt::Debug for BoundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundRule::Power { exponent } => write!(f, "BoundRule::Power({exponent})"),
            BoundRule::Rule { .. } => write!(f, "BoundRule::Rule(..)"),
        }
    }
}

/// Hajek-Renyi condition GCHR1: `sum_{i<=n} b_i^{-r} Cov(X_i, S_n)` over
/// `n <= n_max`.
pub fn eval_gchr(
    model: &CovarianceModel,
    b_rule: &BoundRule,
    r: f64,
    n_max: u64,
    tol: &VerdictTolerances,
) -> Result<ConditionReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "r must be positive, got {r}"
        )));
    }
    let n_max = model.dim().map_or(n_max, |d| n_max.min(d));
    b_rule.validate(n_max)?;
    let checkpoints = geometric_grid(2, n_max);
    let mut grid = Vec::with_capacity(checkpoints.len());
    match model {
        CovarianceModel::Independent { variance } => {
            // Cov(X_i, S_n) = v_i: one increasing series
            let mut sum = 0.0_f64;
            let mut i = 1u64;
            for &n in &checkpoints {
                while i <= n {
                    sum += variance(i) / b_rule.eval(i).powf(r);
                    i += 1;
                }
                grid.push((n, sum));
            }
        }
        CovarianceModel::Stationary { rho } => {
            // Cov(X_i, S_n) = rho(0) + P(i-1) + P(n-i), P = prefix sums of rho
            let mut p = vec![0.0_f64; (n_max + 1) as usize];
            for l in 1..=n_max {
                p[l as usize] = p[(l - 1) as usize] + rho(l);
            }
            for &n in &checkpoints {
                let mut sum = 0.0_f64;
                for i in 1..=n {
                    sum += (rho(0) + p[(i - 1) as usize] + p[(n - i) as usize])
                        / b_rule.eval(i).powf(r);
                }
                grid.push((n, sum));
            }
        }
        _ => {
            for &n in &checkpoints {
                let mut sum = 0.0_f64;
                for i in 1..=n {
                    let mut c = 0.0_f64;
                    for j in 1..=n {
                        c += model.cov(i, j, n + 1);
                    }
                    sum += c / b_rule.eval(i).powf(r);
                }
                grid.push((n, sum));
            }
        }
    }
    Ok(report(
        "GCHR1",
        params_map(&[("r", r), ("n_max", n_max as f64)]),
        grid,
        tol,
        false,
    ))
}

// ---------------------------------------------------------------------------
// stationary criteria
// ---------------------------------------------------------------------------

/// Newman's variance constant `sigma^2 = rho(0) + 2 sum_{l>=1} rho(l)`.
///
/// The series is summed until the fitted power-law tail bound drops below
/// `tol`; a fitted decay exponent at most 1 raises a divergence error
/// (harmonic-or-slower tails do not sum).
pub fn eval_newman_sigma2(rho: &IndexFn, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let mut sigma2 = rho(0);
    let mut l = 1u64;
    let mut block = 64u64;
    const L_CAP: u64 = 100_000_000;
    while l <= L_CAP {
        let hi = (l + block - 1).min(L_CAP);
        for ll in l..=hi {
            sigma2 += 2.0 * rho(ll);
        }
        // fitted local decay exponent from two probe lags
        let (r1, r2) = (rho(hi).abs(), rho(2 * hi).abs());
        if r1 <= f64::MIN_POSITIVE {
            return Ok(sigma2);
        }
        let p = (r1 / r2.max(f64::MIN_POSITIVE)).ln() / 2.0_f64.ln();
        if p <= 1.02 {
            return Err(Error::Divergent(format!(
                "covariance tail decays like lag^-{p:.3} at lag {hi}; sigma^2 sum diverges"
            )));
        }
        // tail bound for rho ~ l^-p: sum_{l > hi} ~ rho(hi) * hi / (p - 1)
        if 2.0 * r1 * hi as f64 / (p - 1.0) < tol {
            return Ok(sigma2);
        }
        l = hi + 1;
        block *= 2;
    }
    Err(Error::Contract(format!(
        "sigma^2 series did not resolve within lag {L_CAP}"
    )))
}

/// Cesaro covariance criterion: `(1/n) sum_{j=1}^{n} rho(j-1) -> 0`.
pub fn eval_cesaro(rho: &IndexFn, n_max: u64, tol: &VerdictTolerances) -> Result<ConditionReport> {
    if n_max < 10 {
        return Err(Error::InvalidParameter(format!(
            "n_max must be >= 10, got {n_max}"
        )));
    }
    let checkpoints = geometric_grid(2, n_max);
    let mut grid = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0_f64;
    let mut j = 1u64;
    for &n in &checkpoints {
        while j <= n {
            sum += rho(j - 1);
            j += 1;
        }
        grid.push((n, sum / n as f64));
    }
    Ok(report(
        "lebonew",
        params_map(&[("n_max", n_max as f64)]),
        grid,
        tol,
        true,
    ))
}

/// Stationary condition q2:
/// `q^{-nu} [rho(0) + (2/q) sum_{i=2}^{q} (q - i + 1) rho(i-1)]`.
pub fn eval_q2(
    rho: &IndexFn,
    nu: f64,
    q_max: u64,
    tol: &VerdictTolerances,
) -> Result<ConditionReport> {
    if nu < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "nu must be >= 0, got {nu}"
        )));
    }
    if q_max < 10 {
        return Err(Error::InvalidParameter(format!(
            "q_max must be >= 10, got {q_max}"
        )));
    }
    let checkpoints = geometric_grid(1, q_max);
    // sum_{l=1}^{q-1} (q - l) rho(l) = q P(q-1) - Q(q-1) with prefix sums of
    // rho(l) and l rho(l)
    let mut grid = Vec::with_capacity(checkpoints.len());
    let (mut p, mut pl) = (0.0_f64, 0.0_f64);
    let mut l = 1u64;
    for &q in &checkpoints {
        while l < q {
            let r = rho(l);
            p += r;
            pl += l as f64 * r;
            l += 1;
        }
        let weighted = q as f64 * p - pl;
        let v = (rho(0) + 2.0 * weighted / q as f64) / (q as f64).powf(nu);
        grid.push((q, v));
    }
    Ok(report(
        "q2",
        params_map(&[("nu", nu), ("q_max", q_max as f64)]),
        grid,
        tol,
        false,
    ))
}

/// Birkel's variant: `sum_{i<=n} i^{-2} Cov(X_i, S_i)`.
pub fn eval_birkel(
    model: &CovarianceModel,
    n_max: u64,
    tol: &VerdictTolerances,
) -> Result<ConditionReport> {
    let n_max = model.dim().map_or(n_max, |d| n_max.min(d));
    if n_max < 10 {
        return Err(Error::InvalidParameter(format!(
            "n_max must be >= 10, got {n_max}"
        )));
    }
    let checkpoints = geometric_grid(2, n_max);
    let mut grid = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0_f64;
    let mut i = 1u64;
    // stationary fast path: Cov(X_i, S_i) = rho(0) + P(i-1)
    let mut p = 0.0_f64;
    for &n in &checkpoints {
        while i <= n {
            let c = match model {
                CovarianceModel::Independent { variance } => variance(i),
                CovarianceModel::Stationary { rho } => {
                    if i > 1 {
                        p += rho(i - 1);
                    }
                    rho(0) + p
                }
                _ => (1..=i).map(|j| model.cov(i, j, i + 1)).sum(),
            };
            sum += c / (i as f64 * i as f64);
            i += 1;
        }
        grid.push((n, sum));
    }
    Ok(report(
        "birkel",
        params_map(&[("n_max", n_max as f64)]),
        grid,
        tol,
        false,
    ))
}

// ---------------------------------------------------------------------------
// the five deterministic conditions of the spacing process
// ---------------------------------------------------------------------------

/// Evaluates the five deterministic conditions prop2.1, prop2.2, prop2.2m,
/// prop2.3, prop2.4 of the weighted spacing process with `Delta f` and
/// `alpha` taken from `params` and `L = params.cutoff`:
///
/// 1.  `sup_k alpha^2(k) k^{-(2 gamma + 1 + nu)} sum_{j=L}^{k-1} Delta^2 f(j) j^{2 gamma}`
/// 2.  `sup_k alpha^2(k) k^{-(1+nu)} sum_{j=L+1}^{k-1} [f(j-1) - f(L-1)] Delta f(j) / j`
/// 2m. `sup_k alpha^2(k) k^{-(1+nu)} sum_{j=L}^{k-1} Delta f(j) / j`
/// 3.  `sup_q q^{-(3-delta)} sup_{k in block} alpha^2(k) k^{-2 gamma} sum_{i=1}^{2q+1} Delta^2 f(q^2+i) (q^2+i)^{2 gamma}`
/// 4.  `sup_q q^{-(3-delta)} sup_{k in block} alpha^2(k) sum_{j=2}^{2q+1} [f(q^2+j-1) - f(q^2)] Delta f(q^2+j) / (q^2+j)`
///
/// with `block = [q^2 + 1, (q+1)^2]` and `nu = (1 - delta)/2`.
pub fn eval_prop2(
    params: &EvtProcessParams,
    k_max: u64,
    tol: &VerdictTolerances,
) -> Result<Vec<ConditionReport>> {
    let el = params.cutoff;
    if el >= k_max {
        return Err(Error::InvalidParameter(format!(
            "cutoff L = {el} must be below k_max = {k_max}"
        )));
    }
    if k_max < el * el {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} must be at least L^2 = {}",
            el * el
        )));
    }
    params.validate(k_max)?;
    let g = params.gamma;
    let nu = params.nu();
    let delta = params.delta;
    let pars = params_map(&[
        ("gamma", g),
        ("delta", delta),
        ("nu", nu),
        ("L", el as f64),
        ("k_max", k_max as f64),
    ]);

    // conditions (1), (2), (2m): one incremental sweep over k
    let checkpoints = geometric_grid(el + 2, k_max);
    let mut grid1 = Vec::with_capacity(checkpoints.len());
    let mut grid2 = Vec::with_capacity(checkpoints.len());
    let mut grid2m = Vec::with_capacity(checkpoints.len());
    let (mut s1, mut s2, mut s2m) = (0.0_f64, 0.0_f64, 0.0_f64);
    let f_lm1 = params.f.eval(el.saturating_sub(1));
    let mut j = el;
    for &k in &checkpoints {
        while j < k {
            let d = params.f.delta(j);
            let jf = j as f64;
            s1 += d * d * jf.powf(2.0 * g);
            s2m += d / jf;
            if j > el {
                s2 += (params.f.eval(j - 1) - f_lm1) * d / jf;
            }
            j += 1;
        }
        let a2 = params.alpha.eval(k).powi(2);
        let kf = k as f64;
        grid1.push((k, a2 * s1 / kf.powf(2.0 * g + 1.0 + nu)));
        grid2.push((k, a2 * s2 / kf.powf(1.0 + nu)));
        grid2m.push((k, a2 * s2m / kf.powf(1.0 + nu)));
    }

    // conditions (3), (4): sweep over q with the block supremum over k
    let q_top = ((k_max as f64).sqrt().floor() as u64).max(2);
    let mut grid3 = Vec::new();
    let mut grid4 = Vec::new();
    for q in geometric_grid(1, q_top) {
        let q2 = q * q;
        let (mut inner3, mut inner4) = (0.0_f64, 0.0_f64);
        let f_base = params.f.eval(q2);
        for i in 1..=(2 * q + 1) {
            let d = params.f.delta(q2 + i);
            inner3 += d * d * ((q2 + i) as f64).powf(2.0 * g);
            if i >= 2 {
                inner4 += (params.f.eval(q2 + i - 1) - f_base) * d / (q2 + i) as f64;
            }
        }
        // the k-dependence factors out of the inner sums
        let (mut sup3, mut sup4) = (0.0_f64, 0.0_f64);
        for k in (q2 + 1)..=((q + 1) * (q + 1)) {
            let a2 = params.alpha.eval(k).powi(2);
            sup3 = sup3.max(a2 * (k as f64).powf(-2.0 * g));
            sup4 = sup4.max(a2);
        }
        let qd = (q as f64).powf(3.0 - delta);
        grid3.push((q, sup3 * inner3 / qd));
        grid4.push((q, sup4 * inner4 / qd));
    }

    Ok(vec![
        report("prop2.1", pars.clone(), grid1, tol, false),
        report("prop2.2", pars.clone(), grid2, tol, false),
        report("prop2.2m", pars.clone(), grid2m, tol, false),
        report("prop2.3", pars.clone(), grid3, tol, false),
        report("prop2.4", pars, grid4, tol, false),
    ])
}

// ---------------------------------------------------------------------------
// max-variance probe
// ---------------------------------------------------------------------------

/// Monte Carlo estimate of the max-variance(r) constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxvarReport {
    pub r: f64,
    pub n: usize,
    pub reps: u64,
    pub var_sn: f64,
    /// `sup_lambda lambda^r P(max |S_l| >= lambda) / Var(S_n)` over the grid.
    pub c_estimate: f64,
    /// Binomial standard error of the estimate at the maximizing lambda.
    pub c_std_error: f64,
    /// `E[(max |S_l|)^2] / Var(S_n)`, the E-max-variance(2) ratio.
    pub e_max_ratio: f64,
    /// `(lambda, lambda^r P-hat / Var)` for every grid value.
    pub lambda_curve: Vec<(f64, f64)>,
}

/// Estimates the max-variance(r) constant of a centered sequence by Monte
/// Carlo: the sampler receives a seeded stream and the length `n` and must
/// return one centered realization.
pub fn maxvar_probe<F>(
    sampler: F,
    r: f64,
    n: usize,
    lambda_grid: &[f64],
    reps: u64,
    base_seed: u64,
) -> Result<MaxvarReport>
where
    F: Fn(&mut SeededStream, usize) -> Result<Vec<f64>>,
{
    if reps < 1_000 {
        return Err(Error::InsufficientReplications {
            got: reps,
            need: 1_000,
        });
    }
    if n == 0 || lambda_grid.is_empty() {
        return Err(Error::EmptyRequest("maxvar_probe grid"));
    }
    let mut maxima = Vec::with_capacity(reps as usize);
    let mut sn_acc = stats::Accumulator::default();
    let mut max_sq = stats::Accumulator::default();
    for rep in 0..reps {
        let mut stream = SeededStream::new(base_seed + rep);
        let xs = sampler(&mut stream, n)?;
        if xs.len() != n {
            return Err(Error::Contract(format!(
                "sampler returned {} values, expected {n}",
                xs.len()
            )));
        }
        let mut s = 0.0_f64;
        let mut m = 0.0_f64;
        for &x in &xs {
            s += x;
            m = m.max(s.abs());
        }
        maxima.push(m);
        sn_acc.push(s);
        max_sq.push(m * m);
    }
    let var_sn = sn_acc.variance();
    if !(var_sn > 1e-300) {
        return Err(Error::DegenerateVariance(format!("Var(S_n) = {var_sn}")));
    }
    maxima.sort_by(f64::total_cmp);
    let mut c_estimate = 0.0_f64;
    let mut c_std_error = 0.0_f64;
    let mut lambda_curve = Vec::with_capacity(lambda_grid.len());
    for &lam in lambda_grid {
        if !(lam > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lam}"
            )));
        }
        // P(max >= lam) from the sorted maxima
        let below = maxima.partition_point(|&m| m < lam);
        let p = (maxima.len() - below) as f64 / maxima.len() as f64;
        let v = lam.powf(r) * p / var_sn;
        if v > c_estimate {
            c_estimate = v;
            c_std_error = lam.powf(r) * (p * (1.0 - p) / maxima.len() as f64).sqrt() / var_sn;
        }
        lambda_curve.push((lam, v));
    }
    Ok(MaxvarReport {
        r,
        n,
        reps,
        var_sn,
        c_estimate,
        c_std_error,
        e_max_ratio: max_sq.mean / var_sn,
        lambda_curve,
    })
}
