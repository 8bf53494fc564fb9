//! Generators of associated (and negatively associated) sequences and
//! empirical verifiers of the association toolkit.
//!
//! Association itself quantifies over all pairs of coordinate-wise monotone
//! functions and is not machine-checkable; what the verifiers test are
//! necessary consequences: covariance signs, the Newman covariance
//! inequality for C1 functions, and variance additivity. The generators are
//! the classical constructions: iid sequences, Gaussian vectors with
//! non-negative correlations, partial sums of iid summands, and monotone
//! transforms of any of these.

use crate::conditions::CovarianceModel;
use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::stats;
use std::fmt;
use std::sync::Arc;

/// Marginal distribution of the iid kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    StandardNormal,
    /// Uniform on (0, 1).
    Uniform,
    /// Unit-rate exponential.
    Exponential,
    /// Unit-rate exponential minus 1 (centered).
    CenteredExponential,
}

impl Distribution {
    pub fn draw(&self, stream: &mut SeededStream) -> f64 {
        match self {
            Distribution::StandardNormal => stream.normal(),
            Distribution::Uniform => stream.uniform(),
            Distribution::Exponential => stream.exponential(),
            Distribution::CenteredExponential => stream.exponential() - 1.0,
        }
    }
}

type MapFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type CorrFn = Arc<dyn Fn(u64, u64) -> f64 + Send + Sync>;

/// Recipe for one realization of an associated sequence.
#[derive(Clone)]
pub enum AssocGenerator {
    /// Independent draws (associated by the independence property).
    Iid { dist: Distribution },
    /// Centered Gaussian vector with correlation rule `corr(i, j) >= 0`
    /// (1-based); sampled through a Cholesky factorization.
    Gaussian { corr: CorrFn },
    /// Partial sums `S_1, ..., S_n` of iid summands.
    PartialSums { dist: Distribution },
    /// Coordinate-wise monotone transform of a base generator.
    Transform {
        base: Box<AssocGenerator>,
        map: MapFn,
    },
}

impl fmt::Debug for AssocGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssocGenerator::Iid { dist } => write!(f, "AssocGenerator::Iid({dist:?})"),
            AssocGenerator::Gaussian { .. } => write!(f, "AssocGenerator::Gaussian(..)"),
            AssocGenerator::PartialSums { dist } => {
                write!(f, "AssocGenerator::PartialSums({dist:?})")
            }
            AssocGenerator::Transform { base, .. } => write!(f, "Transform({base:?})"),
        }
    }
}

impl AssocGenerator {
    pub fn gaussian<F: Fn(u64, u64) -> f64 + Send + Sync + 'static>(corr: F) -> Self {
        AssocGenerator::Gaussian {
            corr: Arc::new(corr),
        }
    }

    pub fn transform<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        base: AssocGenerator,
        map: F,
    ) -> Self {
        AssocGenerator::Transform {
            base: Box::new(base),
            map: Arc::new(map),
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix. A negative pivot
/// (beyond rounding slack) means the matrix is not positive semidefinite;
/// the factorization is refused rather than repaired, since silently fixing
/// the matrix would change the model under test.
fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s < -1e-10 {
                    return Err(Error::NotPsd { index: i });
                }
                l[i][j] = s.max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = s / l[j][j];
            } else if s.abs() > 1e-10 {
                return Err(Error::NotPsd { index: i });
            }
        }
    }
    Ok(l)
}

/// Checks that `map` is monotone (in either direction) on a probe grid.
fn check_monotone(map: &MapFn) -> Result<()> {
    let grid: Vec<f64> = (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| map(x)).collect();
    let non_decreasing = vals.windows(2).all(|w| w[1] >= w[0]);
    let non_increasing = vals.windows(2).all(|w| w[1] <= w[0]);
    if non_decreasing || non_increasing {
        Ok(())
    } else {
        Err(Error::Contract(
            "transform map is not coordinate-wise monotone".into(),
        ))
    }
}

/// One realization of length `n`.
pub fn generate(gen: &AssocGenerator, stream: &mut SeededStream, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyRequest("generate with n = 0"));
    }
    match gen {
        AssocGenerator::Iid { dist } => Ok((0..n).map(|_| dist.draw(stream)).collect()),
        AssocGenerator::Gaussian { corr } => {
            let mut a = vec![vec![0.0_f64; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let c = corr((i + 1) as u64, (j + 1) as u64);
                    if c < 0.0 {
                        return Err(Error::Contract(format!(
                            "gaussian association requires non-negative correlations, got corr({}, {}) = {c}",
                            i + 1,
                            j + 1
                        )));
                    }
                    a[i][j] = c;
                }
            }
            for i in 0..n {
                for j in 0..i {
                    if (a[i][j] - a[j][i]).abs() > 1e-12 {
                        return Err(Error::Contract("correlation rule is not symmetric".into()));
                    }
                }
            }
            let l = cholesky(&a)?;
            let z: Vec<f64> = (0..n).map(|_| stream.normal()).collect();
            Ok((0..n)
                .map(|i| (0..=i).map(|k| l[i][k] * z[k]).sum())
                .collect())
        }
        AssocGenerator::PartialSums { dist } => {
            let mut s = 0.0_f64;
            Ok((0..n)
                .map(|_| {
                    s += dist.draw(stream);
                    s
                })
                .collect())
        }
        AssocGenerator::Transform { base, map } => {
            check_monotone(map)?;
            Ok(generate(base, stream, n)?
                .into_iter()
                .map(|x| map(x))
                .collect())
        }
    }
}

/// A continuously differentiable function with a supplied bound on its
/// derivative's sup-norm.
#[derive(Clone)]
pub struct C1Function {
    pub f: MapFn,
    pub deriv_bound: f64,
}

impl C1Function {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, deriv_bound: f64) -> Self {
        Self {
            f: Arc::new(f),
            deriv_bound,
        }
    }

    pub fn identity() -> Self {
        Self::new(|x| x, 1.0)
    }
}

/// Monte Carlo check of the Newman covariance inequality
/// `|Cov(f(X), g(Y))| <= ||f'|| ||g'|| Cov(X, Y)` for an associated pair.
#[derive(Debug, Clone)]
pub struct NewmanCheck {
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub rhs_std_error: f64,
    pub cov_xy: f64,
    /// Inequality satisfied within three combined standard errors.
    pub holds: bool,
}

/// Runs the check over `reps` independent draws of the pair.
pub fn check_newman_lemma<S>(
    sampler: S,
    f: &C1Function,
    g: &C1Function,
    reps: u64,
    base_seed: u64,
) -> Result<NewmanCheck>
where
    S: Fn(&mut SeededStream) -> Result<(f64, f64)>,
{
    if reps < 1_000 {
        return Err(Error::InsufficientReplications {
            got: reps,
            need: 1_000,
        });
    }
    let mut xs = Vec::with_capacity(reps as usize);
    let mut ys = Vec::with_capacity(reps as usize);
    let mut fx = Vec::with_capacity(reps as usize);
    let mut gy = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let mut stream = SeededStream::new(base_seed + rep);
        let (x, y) = sampler(&mut stream)?;
        xs.push(x);
        ys.push(y);
        fx.push((f.f)(x));
        gy.push((g.f)(y));
    }
    let cov_xy = stats::covariance(&xs, &ys);
    let cov_xy_se = stats::covariance_std_error(&xs, &ys);
    if cov_xy < -3.0 * cov_xy_se {
        return Err(Error::Contract(format!(
            "pair is not associated: Cov(X, Y) = {cov_xy} is negative beyond sampling error"
        )));
    }
    let lhs = stats::covariance(&fx, &gy).abs();
    let lhs_se = stats::covariance_std_error(&fx, &gy);
    let scale = f.deriv_bound * g.deriv_bound;
    let rhs = scale * cov_xy;
    let rhs_se = scale * cov_xy_se;
    Ok(NewmanCheck {
        lhs,
        lhs_std_error: lhs_se,
        rhs,
        rhs_std_error: rhs_se,
        cov_xy,
        holds: lhs <= rhs + 3.0 * (lhs_se * lhs_se + rhs_se * rhs_se).sqrt(),
    })
}

/// Empirical covariance model estimated from `R` replications of an
/// `n`-vector, with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalCovModel {
    pub model: CovarianceModel,
    pub std_errors: Vec<Vec<f64>>,
}

/// Builds a [`CovarianceModel::Empirical`] from a replication matrix
/// (rows = replications, columns = sequence positions); requires at least 30
/// replications.
pub fn empirical_cov_model(samples: &[Vec<f64>]) -> Result<EmpiricalCovModel> {
    let r = samples.len();
    if r < 30 {
        return Err(Error::InsufficientReplications {
            got: r as u64,
            need: 30,
        });
    }
    let n = samples[0].len();
    if n == 0 || samples.iter().any(|row| row.len() != n) {
        return Err(Error::Contract(
            "replication matrix rows must share a positive length".into(),
        ));
    }
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| samples.iter().map(|row| row[j]).collect())
        .collect();
    let mut matrix = vec![vec![0.0_f64; n]; n];
    let mut std_errors = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in i..n {
            let c = stats::covariance(&cols[i], &cols[j]);
            let se = stats::covariance_std_error(&cols[i], &cols[j]);
            matrix[i][j] = c;
            matrix[j][i] = c;
            std_errors[i][j] = se;
            std_errors[j][i] = se;
        }
    }
    Ok(EmpiricalCovModel {
        model: CovarianceModel::Empirical { matrix },
        std_errors,
    })
}

/// Extension beyond the source material: multinomial cell counts, the
/// textbook negatively associated family. Returns the `cells` counts of
/// `trials` draws landing in equiprobable cells.
pub fn multinomial_counts(
    stream: &mut SeededStream,
    trials: u64,
    cells: usize,
) -> Result<Vec<f64>> {
    if cells < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 cells, got {cells}"
        )));
    }
    let mut counts = vec![0.0_f64; cells];
    for _ in 0..trials {
        let cell = ((stream.uniform() * cells as f64) as usize).min(cells - 1);
        counts[cell] += 1.0;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt_process::{cov_s, newman_bound};

    #[test]
    fn iid_lag_one_correlation_vanishes() {
        let gen = AssocGenerator::Iid {
            dist: Distribution::StandardNormal,
        };
        let mut s = SeededStream::new(42);
        let xs = generate(&gen, &mut s, 100_001).unwrap();
        let a = &xs[..100_000];
        let b = &xs[1..];
        let c = stats::covariance(a, b);
        let se = stats::covariance_std_error(a, b);
        assert!(c.abs() < 3.0 * se, "lag-1 cov {c} (se {se})");
    }

    #[test]
    fn gaussian_matches_target_covariance() {
        let gen = AssocGenerator::gaussian(|i, j| 0.5_f64.powi(i.abs_diff(j) as i32));
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        for seed in 0..10_000u64 {
            let mut s = SeededStream::new(9_000 + seed);
            let xs = generate(&gen, &mut s, 5).unwrap();
            x1.push(xs[0]);
            x2.push(xs[1]);
        }
        let c = stats::covariance(&x1, &x2);
        let se = stats::covariance_std_error(&x1, &x2);
        assert!((c - 0.5).abs() < 3.0 * se, "cov {c} (se {se})");
    }

    #[test]
    fn partial_sums_variance_additivity() {
        let gen = AssocGenerator::PartialSums {
            dist: Distribution::StandardNormal,
        };
        let n = 50;
        let mut last = Vec::new();
        for seed in 0..10_000u64 {
            let mut s = SeededStream::new(17_000 + seed);
            last.push(generate(&gen, &mut s, n).unwrap()[n - 1]);
        }
        let v = stats::variance(&last) / n as f64;
        let se = stats::variance_std_error(&last) / n as f64;
        assert!((v - 1.0).abs() < 3.0 * se, "Var(S_n)/n = {v}");
    }

    #[test]
    fn non_psd_correlation_is_refused() {
        let corr = [[1.0, 0.9, 0.0], [0.9, 1.0, 0.9], [0.0, 0.9, 1.0]];
        let gen = AssocGenerator::gaussian(move |i, j| corr[(i - 1) as usize][(j - 1) as usize]);
        let mut s = SeededStream::new(1);
        assert!(matches!(
            generate(&gen, &mut s, 3),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn negative_correlation_is_refused() {
        let gen = AssocGenerator::gaussian(|i, j| if i == j { 1.0 } else { -0.2 });
        let mut s = SeededStream::new(1);
        assert!(generate(&gen, &mut s, 2).is_err());
    }

    #[test]
    fn non_monotone_transform_is_refused() {
        let base = AssocGenerator::Iid {
            dist: Distribution::StandardNormal,
        };
        let gen = AssocGenerator::transform(base, |x| x * x);
        let mut s = SeededStream::new(1);
        assert!(matches!(generate(&gen, &mut s, 4), Err(Error::Contract(_))));
    }

    #[test]
    fn monotone_transform_passes() {
        let base = AssocGenerator::Iid {
            dist: Distribution::Uniform,
        };
        let gen = AssocGenerator::transform(base, |x| -x); // non-increasing is fine
        let mut s = SeededStream::new(1);
        let xs = generate(&gen, &mut s, 10).unwrap();
        assert!(xs.iter().all(|&x| x < 0.0));
    }

    #[test]
    fn newman_identity_is_equality() {
        let sampler = |s: &mut SeededStream| -> Result<(f64, f64)> {
            let z = s.normal();
            Ok((z, z))
        };
        let id = C1Function::identity();
        let check = check_newman_lemma(sampler, &id, &id, 2_000, 5).unwrap();
        assert!(check.holds);
        assert!((check.lhs - check.rhs).abs() < 3.0 * check.lhs_std_error + 1e-9);
    }

    #[test]
    fn newman_sine_of_gaussian() {
        // X = Y standard normal, f = g = sin: Var(sin X) = (1 - e^-2)/2 *
        // ... numerically about 0.432, below Var(X) = 1
        let sampler = |s: &mut SeededStream| -> Result<(f64, f64)> {
            let z = s.normal();
            Ok((z, z))
        };
        let sine = C1Function::new(f64::sin, 1.0);
        let check = check_newman_lemma(sampler, &sine, &sine, 20_000, 77).unwrap();
        assert!(check.holds, "lhs {} rhs {}", check.lhs, check.rhs);
        assert!(
            (check.lhs - 0.432).abs() < 0.02,
            "Var(sin X) = {}",
            check.lhs
        );
    }

    #[test]
    fn newman_on_spacing_exponents() {
        // X, Y are the exponent sums of S_{j,k}, S_{i,k}; f = g = exp(-x)
        // has derivative bound 1 on x >= 0, so |Cov(S_j, S_i)| must sit
        // below Cov(X, Y) = gamma^2 sum_{h=j}^{k-1} h^{-2}
        let (i, j, k, g) = (3u64, 6u64, 12u64, 2.0_f64);
        let sampler = |s: &mut SeededStream| -> Result<(f64, f64)> {
            let es: Vec<f64> = (i..k).map(|_| s.exponential()).collect();
            let tail =
                |from: u64| -> f64 { (from..k).map(|h| g * es[(h - i) as usize] / h as f64).sum() };
            Ok((tail(j), tail(i)))
        };
        let e = C1Function::new(|x: f64| (-x).exp(), 1.0);
        let check = check_newman_lemma(sampler, &e, &e, 20_000, 3).unwrap();
        assert!(check.holds);
        // the Monte Carlo sides bracket the exact oracle values
        let exact_lhs = cov_s(i, j, k, g).unwrap();
        assert!((check.lhs - exact_lhs).abs() < 4.0 * check.lhs_std_error);
        let exact_rhs = newman_bound(j, k, g).unwrap().exact;
        assert!((check.rhs - exact_rhs).abs() < 4.0 * check.rhs_std_error);
    }

    #[test]
    fn newman_requires_replications() {
        let sampler = |s: &mut SeededStream| -> Result<(f64, f64)> {
            let z = s.normal();
            Ok((z, z))
        };
        let id = C1Function::identity();
        assert!(matches!(
            check_newman_lemma(sampler, &id, &id, 100, 0),
            Err(Error::InsufficientReplications { .. })
        ));
    }

    #[test]
    fn empirical_constant_columns_give_zero() {
        let samples: Vec<Vec<f64>> = (0..50).map(|_| vec![1.0, 2.0, 3.0]).collect();
        let emp = empirical_cov_model(&samples).unwrap();
        if let CovarianceModel::Empirical { matrix } = &emp.model {
            assert!(matrix.iter().flatten().all(|&c| c == 0.0));
        } else {
            panic!("expected empirical kind");
        }
    }

    #[test]
    fn empirical_iid_identity_covariance() {
        let mut samples = Vec::new();
        for seed in 0..10_000u64 {
            let mut s = SeededStream::new(50_000 + seed);
            samples.push((0..5).map(|_| s.normal()).collect::<Vec<f64>>());
        }
        let emp = empirical_cov_model(&samples).unwrap();
        let CovarianceModel::Empirical { matrix } = &emp.model else {
            panic!()
        };
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (matrix[i][j] - want).abs() < 3.0 * emp.std_errors[i][j],
                    "entry ({i},{j}) = {}",
                    matrix[i][j]
                );
            }
        }
    }

    #[test]
    fn empirical_recovers_gaussian_ground_truth() {
        let gen = AssocGenerator::gaussian(|i, j| 0.5_f64.powi(i.abs_diff(j) as i32));
        let mut samples = Vec::new();
        for seed in 0..10_000u64 {
            let mut s = SeededStream::new(70_000 + seed);
            samples.push(generate(&gen, &mut s, 4).unwrap());
        }
        let emp = empirical_cov_model(&samples).unwrap();
        let CovarianceModel::Empirical { matrix } = &emp.model else {
            panic!()
        };
        for i in 0..4usize {
            for j in 0..4usize {
                let want = 0.5_f64.powi(i.abs_diff(j) as i32);
                assert!(
                    (matrix[i][j] - want).abs() < 3.0 * emp.std_errors[i][j],
                    "entry ({i},{j}) = {} vs {want}",
                    matrix[i][j]
                );
            }
        }
    }

    #[test]
    fn empirical_needs_thirty_replications() {
        let samples: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        assert!(matches!(
            empirical_cov_model(&samples),
            Err(Error::InsufficientReplications { .. })
        ));
    }

    #[test]
    fn p5_scaled_shifts_keep_nonnegative_covariances() {
        // a_i (Z_i - b_i) for associated Z and positive a_i stays associated
        let gen = AssocGenerator::gaussian(|i, j| 0.5_f64.powi(i.abs_diff(j) as i32));
        let a = [2.0, 0.5, 3.0, 1.5];
        let b = [1.0, -2.0, 0.3, 4.0];
        let mut samples = Vec::new();
        for seed in 0..10_000u64 {
            let mut s = SeededStream::new(81_000 + seed);
            let z = generate(&gen, &mut s, 4).unwrap();
            samples.push((0..4).map(|i| a[i] * (z[i] - b[i])).collect::<Vec<f64>>());
        }
        let emp = empirical_cov_model(&samples).unwrap();
        let CovarianceModel::Empirical { matrix } = &emp.model else {
            panic!()
        };
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    matrix[i][j] >= -3.0 * emp.std_errors[i][j],
                    "entry ({i},{j}) = {}",
                    matrix[i][j]
                );
            }
        }
    }

    #[test]
    fn multinomial_counts_are_negatively_correlated() {
        let mut samples = Vec::new();
        for seed in 0..5_000u64 {
            let mut s = SeededStream::new(91_000 + seed);
            samples.push(multinomial_counts(&mut s, 60, 4).unwrap());
        }
        let emp = empirical_cov_model(&samples).unwrap();
        let CovarianceModel::Empirical { matrix } = &emp.model else {
            panic!()
        };
        // theoretical cross covariance: -trials * p^2 = -60/16 = -3.75
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(
                        matrix[i][j] <= 3.0 * emp.std_errors[i][j],
                        "entry ({i},{j}) = {}",
                        matrix[i][j]
                    );
                    assert!((matrix[i][j] + 3.75).abs() < 5.0 * emp.std_errors[i][j]);
                }
            }
        }
    }
}
