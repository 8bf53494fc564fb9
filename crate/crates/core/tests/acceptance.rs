//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N [PASS|FAIL]` line (visible with `--nocapture`).

use evtlab_core::conditions::{
    eval_gchr, eval_gcip, eval_prop2, maxvar_probe, BoundRule, CovarianceModel, Verdict,
    VerdictTolerances,
};
use evtlab_core::evt_process::{
    cov_s, mu_limit, newman_bound, s_jk, simulate_wk, var_s, EvtProcessParams,
};
use evtlab_core::montecarlo::{run, ExperimentConfig, ExperimentSpec};
use evtlab_core::sampling::{draw_exponentials, sample_weibull_domain, ExponentMode, QuantileRep};
use evtlab_core::stats;
use evtlab_core::{hill_ratio, Result, SeededStream, WeightFunction};

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn tol() -> VerdictTolerances {
    VerdictTolerances::default()
}

/// gamma = 2, tau = 1: replication means of V_k near 1/3, and single seeded
/// paths of the same magnitude as the reference values at k = 50/75/100.
#[test]
fn criterion_1_monte_carlo_anchor() {
    let params = EvtProcessParams::power_case(2.0, 1.0, 1.0);
    let reps = 200u64;
    let (mut m100, mut m2000) = (0.0, 0.0);
    for rep in 0..reps {
        let mut s = SeededStream::new(1_000 + rep);
        let path = simulate_wk(&mut s, &params, 2_000).unwrap();
        m100 += path.values[99];
        m2000 += path.values[1_999];
    }
    m100 /= reps as f64;
    m2000 /= reps as f64;

    let mut s = SeededStream::new(1);
    let single = simulate_wk(&mut s, &params, 100).unwrap();
    let refs = [(50usize, 0.358), (75, 0.321), (100, 0.3332)];
    let magnitude_ok = refs.iter().all(|&(k, r)| {
        let v = single.values[k - 1];
        v > 0.0 && v / r > 0.4 && v / r < 2.5
    });

    let pass = (m100 - 1.0 / 3.0).abs() < 0.05 && (m2000 - 1.0 / 3.0).abs() < 0.02 && magnitude_ok;
    report(
        1,
        "monte carlo anchor",
        pass,
        &format!(
            "mean(k=100) = {m100:.4}, mean(k=2000) = {m2000:.4}, \
             single path (50/75/100) = {:.4}/{:.4}/{:.4}",
            single.values[49], single.values[74], single.values[99]
        ),
    );
}

/// s_jk, var_s, cov_s against 10^6-replication Monte Carlo on a 20-point
/// (j, k, gamma) grid, all within 3 standard errors.
#[test]
fn criterion_2_oracle_agreement() {
    const R: usize = 1_000_000;
    let blocks: [(u64, u64, u64); 5] = [(1, 2, 5), (1, 3, 8), (2, 4, 10), (3, 6, 14), (5, 10, 20)];
    let gammas = [0.5, 1.0, 2.0, 3.0];
    let mut worst_z = 0.0_f64;
    let mut point = 0u64;
    for &g in &gammas {
        for &(i, j, k) in &blocks {
            point += 1;
            let mut si = Vec::with_capacity(R);
            let mut sj = Vec::with_capacity(R);
            let mut stream = SeededStream::new(40_000 + point);
            for _ in 0..R {
                // shared exponentials E_i .. E_{k-1} so the pair is dependent
                let mut tail = 0.0_f64; // sum_{h=j}^{k-1} E_h / h
                let mut head = 0.0_f64; // sum_{h=i}^{j-1} E_h / h
                for h in i..k {
                    let e = stream.exponential() / h as f64;
                    if h < j {
                        head += e;
                    } else {
                        tail += e;
                    }
                }
                si.push((-g * (head + tail)).exp());
                sj.push((-g * tail).exp());
            }
            let zs = [
                (stats::mean(&sj) - s_jk(j, k, g).unwrap()) / stats::std_error(&sj),
                (stats::variance(&sj) - var_s(j, k, g).unwrap()) / stats::variance_std_error(&sj),
                (stats::covariance(&si, &sj) - cov_s(i, j, k, g).unwrap())
                    / stats::covariance_std_error(&si, &sj),
            ];
            for z in zs {
                worst_z = worst_z.max(z.abs());
            }
        }
    }
    report(
        2,
        "oracle agreement",
        worst_z < 3.0,
        &format!("20 grid points x 3 moments, worst |z| = {worst_z:.2}"),
    );
}

fn hill_ratio_reps(gamma: f64, reps: u64, n: usize, k: u64, seed: u64) -> Result<Vec<f64>> {
    let rep = QuantileRep::simplest(1.0, gamma, ExponentMode::InverseGamma);
    let f = WeightFunction::id();
    (0..reps)
        .map(|r| {
            let mut s = SeededStream::new(seed + r);
            let sample = sample_weibull_domain(&mut s, n, &rep)?;
            Ok(hill_ratio(&sample, &f, k, 1.0)?.ratio)
        })
        .collect()
}

/// Distributional identity: the estimator ratio at (n = 10^4, k = 100)
/// matches W_{k+1}/f(k) simulated at the reciprocal rate, by two-sample KS
/// below the 1% critical value.
#[test]
fn criterion_3_distributional_identity() {
    let gamma = 2.0;
    let reps = 1_000u64;
    let a = hill_ratio_reps(gamma, reps, 10_000, 100, 60_000).unwrap();

    let params = EvtProcessParams::power_case(1.0 / gamma, 1.0, 1.0);
    let b: Vec<f64> = (0..reps)
        .map(|r| {
            let mut s = SeededStream::new(70_000 + r);
            let path = simulate_wk(&mut s, &params, 101).unwrap();
            path.raw_w[100] / 100.0
        })
        .collect();

    let stat = stats::ks_two_sample(&a, &b);
    let crit = stats::ks_critical(0.01, a.len(), b.len());
    report(
        3,
        "identity ext",
        stat < crit,
        &format!("KS = {stat:.4} vs critical {crit:.4} at 1%"),
    );
}

/// Mean estimator ratio within 0.02 of 1/(gamma+1) for gamma in {1, 2}.
#[test]
fn criterion_4_hill_consistency() {
    let mut detail = String::new();
    let mut pass = true;
    for (i, gamma) in [1.0, 2.0].into_iter().enumerate() {
        let rs = hill_ratio_reps(gamma, 1_000, 10_000, 100, 80_000 + 10_000 * i as u64).unwrap();
        let m = stats::mean(&rs);
        let target = 1.0 / (gamma + 1.0);
        pass &= (m - target).abs() < 0.02;
        detail.push_str(&format!(
            "gamma = {gamma}: mean = {m:.4} (target {target:.4}); "
        ));
    }
    report(4, "hill consistency", pass, detail.trim_end_matches("; "));
}

/// Independent counterexample with v_i = i^{1/3}: GCIP1 diverges at nu = 0,
/// is bounded at nu = 1/3, while GCHR1 with b_i = i, r = 2 stays bounded.
#[test]
fn criterion_5_independence_dichotomy() {
    let model = CovarianceModel::independent_power(1.0 / 3.0);
    // nu = (1 - delta)/2: nu = 0 is delta = 1, nu = 1/3 is delta = 1/3
    let (diverge, _) = eval_gcip(&model, 1.0, 100_000, &tol()).unwrap();
    let (bound, _) = eval_gcip(&model, 1.0 / 3.0, 100_000, &tol()).unwrap();
    let gchr = eval_gchr(
        &model,
        &BoundRule::Power { exponent: 1.0 },
        2.0,
        10_000,
        &tol(),
    )
    .unwrap();
    let pass = diverge.verdict == Verdict::Diverging
        && bound.verdict == Verdict::Bounded
        && gchr.verdict == Verdict::Bounded;
    report(
        5,
        "independence dichotomy",
        pass,
        &format!(
            "GCIP1(nu=0) = {}, GCIP1(nu=1/3) = {}, GCHR1 = {}",
            diverge.verdict, bound.verdict, gchr.verdict
        ),
    );
}

/// All five prop2 conditions bounded at (tau=1, gamma=2, delta=0.5, K=10^5);
/// condition (1) flips to diverging as delta approaches 3.
#[test]
fn criterion_6_prop2_suite() {
    let good = eval_prop2(
        &EvtProcessParams::power_case(2.0, 1.0, 0.5),
        100_000,
        &tol(),
    )
    .unwrap();
    let all_bounded = good.iter().all(|r| r.verdict == Verdict::Bounded);
    let near3 = eval_prop2(
        &EvtProcessParams::power_case(2.0, 1.0, 2.9),
        100_000,
        &tol(),
    )
    .unwrap();
    let flips = near3[0].verdict == Verdict::Diverging;
    report(
        6,
        "prop2 suite",
        all_bounded && flips,
        &format!(
            "delta = 0.5: [{}]; delta = 2.9 condition 1: {}",
            good.iter()
                .map(|r| r.verdict.to_string())
                .collect::<Vec<_>>()
                .join(", "),
            near3[0].verdict
        ),
    );
}

/// Structural properties: covariance non-negativity and its Newman envelope
/// on exhaustive grids, recursion-vs-brute-force equality, the max-variance
/// constant for iid sums, determinism, and parallel/serial agreement.
#[test]
fn criterion_7_property_suites() {
    // (a) cov_s >= 0 and bounded by gamma^2 sum h^-2, exhaustively for k <= 50
    let mut grid_ok = true;
    for &g in &[0.5, 2.0] {
        for k in 2..=50u64 {
            for j in 1..k {
                for i in 1..=j {
                    let c = cov_s(i, j, k, g).unwrap();
                    let bound = if j >= 2 {
                        newman_bound(j, k, g).unwrap().exact
                    } else {
                        g * g * (j..k).map(|h| 1.0 / (h * h) as f64).sum::<f64>()
                    };
                    grid_ok &= c >= -1e-15 && c <= bound + 1e-12;
                }
            }
        }
    }

    // (b) recursion vs brute force to 1e-12 for k <= 200
    let params = EvtProcessParams::power_case(2.0, 1.0, 1.0);
    let k_max = 200u64;
    let mut s = SeededStream::new(77);
    let path = simulate_wk(&mut s, &params, k_max).unwrap();
    let mut replay = SeededStream::new(77);
    let es = draw_exponentials(&mut replay, (k_max - 1) as usize).unwrap();
    let mut recursion_ok = true;
    for k in 2..=k_max {
        let mut brute = 0.0_f64;
        for j in 1..k {
            let expo: f64 = (j..k).map(|h| es[(h - 1) as usize] / h as f64).sum();
            brute += params.f.delta(j) * (-params.gamma * expo).exp();
        }
        let norm = brute / params.f.eval(k);
        recursion_ok &= (path.values[(k - 1) as usize] - norm).abs() <= 1e-12 * norm.abs().max(1.0);
    }

    // (c) maxvar constant for iid sums with r = 2
    let sampler = |s: &mut SeededStream, n: usize| -> Result<Vec<f64>> {
        Ok((0..n).map(|_| s.normal()).collect())
    };
    let n = 100usize;
    let sd = (n as f64).sqrt();
    let lambdas: Vec<f64> = (5..=30).map(|i| sd * i as f64 / 10.0).collect();
    let probe = maxvar_probe(sampler, 2.0, n, &lambdas, 4_000, 9).unwrap();
    let maxvar_ok = probe.c_estimate <= 1.0 + 3.0 * probe.c_std_error;

    // (d) determinism of every seeded entry point
    let rep = QuantileRep::simplest(1.0, 2.0, ExponentMode::InverseGamma);
    let sample_a = sample_weibull_domain(&mut SeededStream::new(5), 500, &rep).unwrap();
    let sample_b = sample_weibull_domain(&mut SeededStream::new(5), 500, &rep).unwrap();
    let path_a = simulate_wk(&mut SeededStream::new(5), &params, 100).unwrap();
    let path_b = simulate_wk(&mut SeededStream::new(5), &params, 100).unwrap();
    let deterministic = sample_a.values() == sample_b.values() && path_a.values == path_b.values;

    // (e) parallel aggregation vs a serial replay, to 1e-12 relative
    let cfg = ExperimentConfig {
        spec: ExperimentSpec::WkConvergence {
            gamma: 2.0,
            tau: 1.0,
            k_grid: vec![50, 100],
        },
        replications: 300,
        base_seed: 5,
    };
    let result = run(&cfg).unwrap();
    let (mut m50, mut m100) = (0.0, 0.0);
    for r in 0..cfg.replications {
        let mut s = SeededStream::new(cfg.base_seed + r);
        let p = simulate_wk(&mut s, &EvtProcessParams::power_case(2.0, 1.0, 1.0), 100).unwrap();
        m50 += p.values[49];
        m100 += p.values[99];
    }
    m50 /= cfg.replications as f64;
    m100 /= cfg.replications as f64;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let parallel_ok =
        rel(result.points[0].mean, m50) < 1e-12 && rel(result.points[1].mean, m100) < 1e-12;

    let pass = grid_ok && recursion_ok && maxvar_ok && deterministic && parallel_ok;
    report(
        7,
        "property suites",
        pass,
        &format!(
            "cov grid = {grid_ok}, recursion = {recursion_ok}, maxvar C = {:.3} (ok = \
             {maxvar_ok}), determinism = {deterministic}, parallel/serial = {parallel_ok}",
            probe.c_estimate
        ),
    );
}

/// mu_limit resolves to tau/(tau+gamma) within 1e-3 on three (tau, gamma)
/// pairs.
#[test]
fn criterion_8_mu_limit_resolution() {
    let mut detail = String::new();
    let mut pass = true;
    for (tau, gamma) in [(1.0, 2.0), (2.0, 1.0), (0.5, 0.5)] {
        let lim = mu_limit(&EvtProcessParams::power_case(gamma, tau, 1.0)).unwrap();
        let target = tau / (tau + gamma);
        pass &= (lim.value - target).abs() < 1e-3;
        detail.push_str(&format!(
            "(tau={tau}, gamma={gamma}): {:.5} vs {target:.5}; ",
            lim.value
        ));
    }
    report(
        8,
        "mu limit resolution",
        pass,
        detail.trim_end_matches("; "),
    );
}
