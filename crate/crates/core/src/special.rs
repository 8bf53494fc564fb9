//! Small special-function kernel: log-gamma and the trigamma tail used by
//! the covariance bounds. Products of the form prod h/(h+g) are evaluated
//! through log-gamma differences so they stay accurate down past 1e-300.

/// Natural log of the gamma function, Lanczos approximation with g = 5.
///
/// Relative accuracy is ~1e-14 over the positive axis, which is enough for
/// the moment oracles (they only ever take differences of nearby values).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    // first 6 series coefficients
    const COEF: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_5e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut series = 1.000_000_000_190_015_f64;
    for (i, c) in COEF.iter().enumerate() {
        series += c / (x + i as f64 + 1.0);
    }
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    -tmp + ((2.506_628_274_631_000_5 * series) / x).ln()
}

/// Sum_{h=j}^{k-1} h^{-2}, computed by direct summation.
pub fn inverse_square_tail(j: u64, k: u64) -> f64 {
    debug_assert!(j >= 1 && j <= k);
    // backwards for slightly better rounding
    (j..k).rev().map(|h| 1.0 / (h as f64 * h as f64)).sum()
}
