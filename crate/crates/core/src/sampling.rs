//! Seeded variate generation: unit exponentials, uniform order statistics
//! through the Malmquist construction, and samples from a finite-endpoint
//! (Weibull-domain) quantile representation.
//!
//! Spacing convention: we take `j * ln(U_{j+1,n} / U_{j,n})` to be a unit
//! exponential. The classical identity (and the closed-form moments built on
//! it) only hold with the factor `j`, not `1/j`; see the README note on the
//! two published variants.

use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::stats::adaptive_simpson;
use std::fmt;
use std::sync::Arc;

/// Sorted sample of order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStatSample {
    values: Vec<f64>,
}

impl OrderStatSample {
    /// Wraps a vector, checking the non-decreasing invariant.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyRequest("order statistic sample"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Contract(
                "order statistics must be sorted ascending".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Sorts raw data into an order-statistic sample.
    pub fn from_raw(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyRequest("order statistic sample"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Which exponent the quantile representation applies to `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMode {
    /// `y0 - G^{-1}(1-u) = c * u^gamma * ...`
    Gamma,
    /// `y0 - G^{-1}(1-u) = c * u^{1/gamma} * ...`
    InverseGamma,
}

/// Slowly-vanishing perturbation attached to the quantile representation.
#[derive(Clone)]
pub enum PerturbFn {
    Zero,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl PerturbFn {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            PerturbFn::Zero => 0.0,
            PerturbFn::Custom(f) => f(u),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, PerturbFn::Zero)
    }
}

impl fmt::Debug for PerturbFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbFn::Zero => write!(f, "PerturbFn::Zero"),
            PerturbFn::Custom(_) => write!(f, "PerturbFn::Custom(..)"),
        }
    }
}

/// Quantile representation of a distribution with finite upper endpoint:
/// `y0 - G^{-1}(1-u) = c * u^e * (1 + p(u)) * exp(int_u^1 b(t)/t dt)`,
/// with `e` chosen by [`ExponentMode`].
#[derive(Debug, Clone)]
pub struct QuantileRep {
    pub y0: f64,
    pub c: f64,
    pub gamma: f64,
    pub exponent_mode: ExponentMode,
    pub p: PerturbFn,
    pub b: PerturbFn,
}

impl QuantileRep {
    /// The simplest representation: `y0 - G^{-1}(1-u) = u^e`.
    pub fn simplest(y0: f64, gamma: f64, exponent_mode: ExponentMode) -> Self {
        Self {
            y0,
            c: 1.0,
            gamma,
            exponent_mode,
            p: PerturbFn::Zero,
            b: PerturbFn::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c must be positive, got {}",
                self.c
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        // p and b must vanish at the origin; probed on a log grid
        for pert in [&self.p, &self.b] {
            if pert.is_zero() {
                continue;
            }
            let near = pert.eval(1e-8).abs();
            let far = pert.eval(1e-2).abs();
            if near > 0.05 || near > far + 0.05 {
                return Err(Error::Contract(
                    "perturbation function does not vanish as u -> 0".into(),
                ));
            }
        }
        Ok(())
    }

    fn exponent(&self) -> f64 {
        match self.exponent_mode {
            ExponentMode::Gamma => self.gamma,
            ExponentMode::InverseGamma => 1.0 / self.gamma,
        }
    }

    /// Distance from the endpoint, `y0 - G^{-1}(1-u)`.
    pub fn endpoint_gap(&self, u: f64) -> f64 {
        let base = self.c * u.powf(self.exponent()) * (1.0 + self.p.eval(u));
        if self.b.is_zero() {
            return base;
        }
        // integrate b(t)/t on the log scale: int_u^1 b(t)/t dt = int_{ln u}^0 b(e^s) ds
        let b = self.b.clone();
        let integral = adaptive_simpson(&move |s: f64| b.eval(s.exp()), u.ln(), 0.0, 1e-8);
        base * integral.exp()
    }
}

/// `n` iid unit-rate exponentials; advances the stream counter by exactly `n`.
pub fn draw_exponentials(stream: &mut SeededStream, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyRequest("draw_exponentials with n = 0"));
    }
    Ok((0..n).map(|_| stream.exponential()).collect())
}

/// Uniform order statistics `U_{1,n} <= ... <= U_{n,n}`, built top-down:
/// `U_{n,n} = V^{1/n}` and `ln U_{j,n} = ln U_{j+1,n} - E_j / j`.
pub fn uniform_order_stats(stream: &mut SeededStream, n: usize) -> Result<OrderStatSample> {
    if n == 0 {
        return Err(Error::EmptyRequest("uniform_order_stats with n = 0"));
    }
    let mut log_u = vec![0.0_f64; n];
    log_u[n - 1] = stream.uniform().ln() / n as f64;
    for j in (1..n).rev() {
        // j runs over the spacing index: U_{j,n} from U_{j+1,n}
        log_u[j - 1] = log_u[j] - stream.exponential() / j as f64;
    }
    OrderStatSample::new(log_u.into_iter().map(f64::exp).collect())
}

/// Order statistics of `n` draws of `Y = G^{-1}(1-U)` under `rep`; all values
/// sit strictly below the endpoint `y0`.
pub fn sample_weibull_domain(
    stream: &mut SeededStream,
    n: usize,
    rep: &QuantileRep,
) -> Result<OrderStatSample> {
    rep.validate()?;
    if n == 0 {
        return Err(Error::EmptyRequest("sample_weibull_domain with n = 0"));
    }
    let uniforms = uniform_order_stats(stream, n)?;
    // the gap is increasing in u, so the largest Y comes from the smallest U
    let values: Vec<f64> = uniforms
        .values()
        .iter()
        .rev()
        .map(|&u| rep.y0 - rep.endpoint_gap(u))
        .collect();
    OrderStatSample::new(values)
}
