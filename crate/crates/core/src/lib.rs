//! Numerical laboratory for weighted sums of associated random variables in
//! extreme value statistics: seeded sampling, exact moment oracles for the
//! exponential-spacing process, functional tail estimators, almost-sure
//! convergence condition evaluators, association generators, and a
//! deterministic Monte Carlo harness.

pub mod association;
pub mod conditions;
pub mod error;
pub mod estimators;
pub mod evt_process;
pub mod export;
pub mod montecarlo;
pub mod rng;
pub mod sampling;
pub mod special;
pub mod stats;

pub use association::{
    check_newman_lemma, empirical_cov_model, generate, AssocGenerator, C1Function, Distribution,
};
pub use conditions::{
    eval_birkel, eval_cesaro, eval_gchr, eval_gcip, eval_newman_sigma2, eval_prop2, eval_q2,
    maxvar_probe, BoundRule, ConditionReport, CovarianceModel, MaxvarReport, Verdict,
    VerdictTolerances,
};
pub use error::{Error, Result};
pub use estimators::{hill_functional, hill_ratio, HillEstimate};
pub use evt_process::{
    cov_s, mu_k, mu_limit, newman_bound, s_jk, simulate_sk_star, simulate_wk, var_s, wk_mean,
    AlphaRule, EvtProcessParams, MomentOracle, MuLimit, WeightFunction, WkPath,
};
pub use montecarlo::{
    compare_to_target, configure_threads, run, DeviationTable, ExperimentConfig, ExperimentSpec,
    GridPoint, RunResult, TargetRule,
};
pub use rng::SeededStream;
pub use sampling::{
    draw_exponentials, sample_weibull_domain, uniform_order_stats, ExponentMode, OrderStatSample,
    PerturbFn, QuantileRep,
};
