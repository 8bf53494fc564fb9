//! Functional tail-index statistics for samples with a finite upper
//! endpoint.
//!
//! The statistic is a weighted sum of spacings of the top order statistics,
//! `T_n(f) = sum_{j=1}^{k} f(j) (X_{n-j+1,n} - X_{n-j,n})`. Normalizing by
//! the gap to the endpoint and by `f(k)` gives a ratio whose distribution is
//! exactly that of the weighted spacing statistic `W_{k+1} / f(k)` when the
//! endpoint gap is a pure power of the quantile level: writing
//! `D_j = y0 - X_{n-j+1,n} = c U_{j,n}^theta`, Abel summation telescopes the
//! ratio into `f(k) - sum_j Delta f(j) (U_{j,n}/U_{k+1,n})^theta`, and the
//! Malmquist spacings turn the ratio factors into the `S_{j,k+1}` blocks at
//! rate `theta`.

use crate::error::{Error, Result};
use crate::evt_process::WeightFunction;
use crate::sampling::OrderStatSample;
use serde::{Deserialize, Serialize};

/// Result of the weighted spacing estimator at truncation level `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HillEstimate {
    pub k: u64,
    /// The raw weighted spacing sum `T_n(f)`.
    pub statistic: f64,
    /// Gap to the endpoint at the truncation level, `y0 - X_{n-k,n}`.
    pub denominator: f64,
    /// `statistic / (f(k) * denominator)`.
    pub ratio: f64,
}

/// The raw weighted spacing sum `T_n(f)`; requires `1 <= k <= n - 1`.
pub fn hill_functional(sample: &OrderStatSample, f: &WeightFunction, k: u64) -> Result<f64> {
    let n = sample.n() as u64;
    if k < 1 || k > n - 1 {
        return Err(Error::Index(format!(
            "need 1 <= k <= n - 1, got k = {k}, n = {n}"
        )));
    }
    f.validate(k)?;
    let v = sample.values();
    let mut t = 0.0_f64;
    for j in 1..=k {
        let hi = v[(n - j) as usize];
        let lo = v[(n - j - 1) as usize];
        t += f.eval(j) * (hi - lo);
    }
    Ok(t)
}

/// Normalized ratio `T_n(f) / (f(k) (y0 - X_{n-k,n}))`.
///
/// Errors when any sample value reaches `y0` or when the truncation gap is
/// zero (a tie at `X_{n-k,n} = y0` would divide by zero).
pub fn hill_ratio(
    sample: &OrderStatSample,
    f: &WeightFunction,
    k: u64,
    y0: f64,
) -> Result<HillEstimate> {
    if sample.max() >= y0 {
        return Err(Error::EndpointViolation {
            y0,
            max: sample.max(),
        });
    }
    let statistic = hill_functional(sample, f, k)?;
    let n = sample.n() as u64;
    let denominator = y0 - sample.values()[(n - k - 1) as usize];
    let fk = f.eval(k);
    if !(fk > 0.0) {
        return Err(Error::DegenerateVariance(format!("f(k) = {fk} at k = {k}")));
    }
    Ok(HillEstimate {
        k,
        statistic,
        denominator,
        ratio: statistic / (fk * denominator),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;
    use crate::sampling::{sample_weibull_domain, ExponentMode, QuantileRep};
    use crate::stats;

    #[test]
    fn brute_force_small_sample() {
        // n = 3, f(j) = j^2, k = 2
        let sample = OrderStatSample::new(vec![0.1, 0.4, 0.9]).unwrap();
        let f = WeightFunction::power(2.0);
        let t = hill_functional(&sample, &f, 2).unwrap();
        // j=1: 1 * (0.9 - 0.4); j=2: 4 * (0.4 - 0.1)
        assert!((t - (0.5 + 4.0 * 0.3)).abs() < 1e-12);
        let est = hill_ratio(&sample, &f, 2, 1.0).unwrap();
        assert!((est.denominator - 0.9).abs() < 1e-12);
        assert!((est.ratio - t / (4.0 * 0.9)).abs() < 1e-12);
    }

    #[test]
    fn k_out_of_range() {
        let sample = OrderStatSample::new(vec![0.1, 0.4, 0.9]).unwrap();
        let f = WeightFunction::id();
        assert!(hill_functional(&sample, &f, 0).is_err());
        assert!(hill_functional(&sample, &f, 3).is_err());
    }

    #[test]
    fn endpoint_violation_rejected() {
        let sample = OrderStatSample::new(vec![0.1, 1.0]).unwrap();
        let f = WeightFunction::id();
        assert!(matches!(
            hill_ratio(&sample, &f, 1, 1.0),
            Err(Error::EndpointViolation { .. })
        ));
    }

    #[test]
    fn ties_are_legal() {
        let sample = OrderStatSample::new(vec![0.2, 0.5, 0.5, 0.5]).unwrap();
        let f = WeightFunction::id();
        let est = hill_ratio(&sample, &f, 3, 1.0).unwrap();
        // only the j = 3 spacing is nonzero: T = 3 * 0.3
        assert!((est.statistic - 0.9).abs() < 1e-12);
        assert!(est.ratio.is_finite());
    }

    #[test]
    fn ratio_is_location_scale_equivariant() {
        let mut s = SeededStream::new(21);
        let rep = QuantileRep::simplest(2.0, 1.5, ExponentMode::Gamma);
        let sample = sample_weibull_domain(&mut s, 500, &rep).unwrap();
        let f = WeightFunction::power(1.5);
        let base = hill_ratio(&sample, &f, 50, rep.y0).unwrap();
        let (a, b) = (3.7, -1.2);
        let moved =
            OrderStatSample::new(sample.values().iter().map(|&x| a * x + b).collect()).unwrap();
        let shifted = hill_ratio(&moved, &f, 50, a * rep.y0 + b).unwrap();
        assert!((base.ratio - shifted.ratio).abs() < 1e-12);
    }

    #[test]
    fn telescoped_identity_on_synthetic_uniforms() {
        // hand-built sample: D_j = U_j^theta exactly, so the ratio must equal
        // (f(k) - sum_j Delta f(j) (U_j / U_{k+1})^theta) / f(k)
        let theta = 0.5;
        let us: [f64; 8] = [0.01, 0.03, 0.08, 0.2, 0.45, 0.7, 0.9, 0.97];
        let n = us.len();
        let y0 = 2.0;
        let values: Vec<f64> = us.iter().rev().map(|u| y0 - u.powf(theta)).collect();
        let sample = OrderStatSample::new(values).unwrap();
        let f = WeightFunction::power(2.0);
        let k = 4u64;
        let est = hill_ratio(&sample, &f, k, y0).unwrap();
        let mut acc = 0.0;
        for j in 1..=k {
            acc += f.delta(j) * (us[(j - 1) as usize] / us[k as usize]).powf(theta);
        }
        let want = (f.eval(k) - acc) / f.eval(k);
        assert!((est.ratio - want).abs() < 1e-12, "{} vs {want}", est.ratio);
        let _ = n;
    }

    #[test]
    fn ratio_mean_approaches_limit() {
        // inverse-exponent data u^{1/gamma}: the identity ratio limit is
        // 1/(gamma + 1) for f = id
        let gamma = 2.0;
        let rep = QuantileRep::simplest(1.0, gamma, ExponentMode::InverseGamma);
        let f = WeightFunction::id();
        let mut acc = stats::Accumulator::default();
        for seed in 0..400u64 {
            let mut s = SeededStream::new(3_000 + seed);
            let sample = sample_weibull_domain(&mut s, 2_000, &rep).unwrap();
            acc.push(hill_ratio(&sample, &f, 50, rep.y0).unwrap().ratio);
        }
        let want = 1.0 / (gamma + 1.0);
        assert!(
            (acc.mean - want).abs() < 3.0 * acc.std_error() + 0.01,
            "mean {} vs {want}",
            acc.mean
        );
    }
}
