//! `evtlab`: batch front end for the spacing-process laboratory.
//!
//! Every subcommand is reproducible by default: `--seed` falls back to the
//! documented constant [`DEFAULT_SEED`]. Artifacts are written atomically
//! (temp file + rename) so failed runs leave nothing behind. Exit codes:
//! 0 success, 1 computation-level error (e.g. a divergence flag where a
//! number was demanded), 2 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use evtlab_core::conditions::{self, CovarianceModel, IndexFn, VerdictTolerances};
use evtlab_core::evt_process::{self, AlphaRule, EvtProcessParams, WeightFunction};
use evtlab_core::export;
use evtlab_core::montecarlo::{self, ExperimentConfig};
use evtlab_core::sampling::{sample_weibull_domain, ExponentMode, QuantileRep};
use evtlab_core::{Error, Result, SeededStream};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

/// Default seed for bare invocations; fixed so that published numbers can be
/// reproduced with no flags at all.
pub const DEFAULT_SEED: u64 = 20_240_214;

/// Environment variable holding the directory that relative `--output`
/// paths resolve against.
pub const OUTPUT_DIR_ENV: &str = "EVTLAB_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "evtlab",
    about = "Numerical laboratory for weighted exponential-spacing statistics \
             and almost-sure convergence conditions",
    version
)]
struct Cli {
    /// Cap the worker-thread count for replicated experiments.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; relative paths resolve against $EVTLAB_OUTPUT_DIR.
    /// Without this flag the artifact goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Artifact format (column orders are fixed and documented).
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl OutputArgs {
    fn emit(&self, csv: String, json: String) -> Result<()> {
        let body = match self.format {
            Format::Csv => csv,
            Format::Json => json,
        };
        match &self.output {
            None => {
                print!("{body}");
                Ok(())
            }
            Some(p) => {
                let path = if p.is_relative() {
                    match std::env::var_os(OUTPUT_DIR_ENV) {
                        Some(dir) => Path::new(&dir).join(p),
                        None => p.clone(),
                    }
                } else {
                    p.clone()
                };
                export::atomic_write(&path, &body)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Endpoint gap c u^gamma.
    Gamma,
    /// Endpoint gap c u^(1/gamma).
    InverseGamma,
}

impl From<Mode> for ExponentMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Gamma => ExponentMode::Gamma,
            Mode::InverseGamma => ExponentMode::InverseGamma,
        }
    }
}

/// Covariance model selector shared by the condition evaluators.
#[derive(Args)]
struct ModelArgs {
    /// evt: exact spacing-process oracle (needs --gamma/--tau);
    /// independent: v_i = i^var-power; stationary: rho(l) = l^-rho-power.
    #[arg(long, default_value = "evt")]
    model: String,

    #[arg(long)]
    gamma: Option<f64>,

    #[arg(long)]
    tau: Option<f64>,

    /// Exponent p in v_i = i^p (independent model).
    #[arg(long, default_value_t = 0.0)]
    var_power: f64,

    /// Exponent p in rho(l) = l^-p, rho(0) = 1 (stationary model).
    #[arg(long, default_value_t = 2.0)]
    rho_power: f64,
}

impl ModelArgs {
    fn build(&self, delta: f64) -> Result<CovarianceModel> {
        match self.model.as_str() {
            "evt" => {
                let gamma = self.gamma.ok_or_else(|| {
                    Error::InvalidParameter("--model evt requires --gamma".into())
                })?;
                let tau = self
                    .tau
                    .ok_or_else(|| Error::InvalidParameter("--model evt requires --tau".into()))?;
                Ok(CovarianceModel::EvtOracle {
                    params: EvtProcessParams::power_case(gamma, tau, delta),
                })
            }
            "independent" => Ok(CovarianceModel::independent_power(self.var_power)),
            "stationary" => {
                let p = self.rho_power;
                Ok(CovarianceModel::stationary(move |l| {
                    if l == 0 {
                        1.0
                    } else {
                        (l as f64).powf(-p)
                    }
                }))
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind: {other}"
            ))),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the normalized weighted spacing statistic (tag sum01): one
    /// seeded path of V_k = sum_j Delta f(j) S_{j,k} / f(k) up to --kmax.
    SimulateWk {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long)]
        kmax: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Functional spacing estimator (tags hillfonct, ext): the ratio
    /// T_n(f) / (f(k) (y0 - X_{n-k,n})) on one seeded sample.
    Hill {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, value_enum, default_value_t = Mode::InverseGamma)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Evaluate an almost-sure convergence condition and print its verdict.
    #[command(subcommand)]
    CheckConditions(CheckCmd),

    /// Monte Carlo estimate of the max-variance(r) constant.
    ProbeMaxvar {
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 4_000)]
        reps: u64,
        /// Comma-separated thresholds; default is a grid around sqrt(n).
        #[arg(long)]
        lambdas: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Run a replicated experiment described by a TOML config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Exact moment oracles of the spacing blocks S_{j,k}.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Subcommand)]
enum CheckCmd {
    /// The five deterministic conditions prop2.1 .. prop2.4 of the weighted
    /// spacing process.
    Prop2 {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        kmax: u64,
        /// Cutoff index L.
        #[arg(long, default_value_t = 1)]
        cutoff: u64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Variance-growth conditions GCIP1 (prefixes) and GCIP2 (square blocks).
    Gcip {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        qmax: u64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Hajek-Renyi condition GCHR1: sum b_i^-r Cov(X_i, S_n).
    Gchr {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Exponent of the normalizer b_i = i^b-power.
        #[arg(long, default_value_t = 1.0)]
        b_power: f64,
        #[arg(long, default_value_t = 10_000)]
        nmax: u64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Stationary condition q2 with rate exponent nu.
    Q2 {
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 100_000)]
        qmax: u64,
        #[arg(long, default_value_t = 2.0)]
        rho_power: f64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Cesaro covariance criterion (tag lebonew): (1/n) sum rho(j-1) -> 0.
    Cesaro {
        #[arg(long, default_value_t = 100_000)]
        nmax: u64,
        #[arg(long, default_value_t = 2.0)]
        rho_power: f64,
        #[command(flatten)]
        out: OutputArgs,
    },

    /// Newman's variance constant (tag new01): sigma^2 = rho(0) + 2 sum rho(l).
    NewmanSigma2 {
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 2.0)]
        rho_power: f64,
    },

    /// Birkel's variant: sum i^-2 Cov(X_i, S_i).
    Birkel {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10_000)]
        nmax: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exact mean s_{j,k} = prod_{h=j}^{k-1} h/(h+gamma).
    SJk {
        #[arg(long)]
        j: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        gamma: f64,
    },
    /// Exact variance of S_{j,k}.
    VarS {
        #[arg(long)]
        j: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        gamma: f64,
    },
    /// Exact covariance of S_{i,k} and S_{j,k}.
    CovS {
        #[arg(long)]
        i: u64,
        #[arg(long)]
        j: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        gamma: f64,
    },
    /// Covariance bound gamma^2 sum_{h=j}^{k-1} h^-2 with its closed-form
    /// envelopes.
    NewmanBound {
        #[arg(long)]
        j: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        gamma: f64,
    },
    /// Extrapolated limit of mu_k for the power case (limit tau/(tau+gamma)).
    Mu {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        tau: f64,
    },
}

fn stationary_rho(p: f64) -> IndexFn {
    Arc::new(move |l| if l == 0 { 1.0 } else { (l as f64).powf(-p) })
}

fn reports_csv(reports: &[conditions::ConditionReport]) -> String {
    let mut out = String::from("condition_id,index,value\n");
    for rep in reports {
        for &(q, v) in &rep.grid {
            out.push_str(&format!("{},{q},{v:?}\n", rep.condition_id));
        }
    }
    out
}

fn print_verdicts(reports: &[conditions::ConditionReport]) {
    for rep in reports {
        println!(
            "{}: {} (sup = {:.6e}, slope = {:+.4})",
            rep.condition_id, rep.verdict, rep.running_sup, rep.loglog_slope
        );
    }
}

fn emit_reports(out: &OutputArgs, reports: &[conditions::ConditionReport]) -> Result<()> {
    print_verdicts(reports);
    if out.output.is_some() {
        let json =
            serde_json::to_string_pretty(reports).map_err(|e| Error::Parse(e.to_string()))?;
        out.emit(reports_csv(reports), json)?;
    }
    Ok(())
}

fn run_cli(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        montecarlo::configure_threads(t)?;
    }
    let tol = VerdictTolerances::default();
    match cli.command {
        Command::SimulateWk {
            gamma,
            tau,
            kmax,
            seed,
            out,
        } => {
            let params = EvtProcessParams {
                gamma,
                f: WeightFunction::power(tau),
                alpha: AlphaRule::matched_power(tau),
                cutoff: 1,
                delta: 1.0,
            };
            let mut stream = SeededStream::new(seed);
            let path = evt_process::simulate_wk(&mut stream, &params, kmax)?;
            let json =
                serde_json::to_string_pretty(&path).map_err(|e| Error::Parse(e.to_string()))?;
            out.emit(export::wk_path_to_csv(&path), json)
        }
        Command::Hill {
            gamma,
            tau,
            n,
            k,
            y0,
            mode,
            seed,
            out,
        } => {
            let rep = QuantileRep::simplest(y0, gamma, mode.into());
            let mut stream = SeededStream::new(seed);
            let sample = sample_weibull_domain(&mut stream, n as usize, &rep)?;
            let f = WeightFunction::power(tau);
            let est = evtlab_core::hill_ratio(&sample, &f, k, y0)?;
            let csv = format!(
                "k,statistic,denominator,ratio\n{},{:?},{:?},{:?}\n",
                est.k, est.statistic, est.denominator, est.ratio
            );
            let json =
                serde_json::to_string_pretty(&est).map_err(|e| Error::Parse(e.to_string()))?;
            out.emit(csv, json)
        }
        Command::CheckConditions(cmd) => match cmd {
            CheckCmd::Prop2 {
                gamma,
                tau,
                delta,
                kmax,
                cutoff,
                out,
            } => {
                let mut params = EvtProcessParams::power_case(gamma, tau, delta);
                params.cutoff = cutoff;
                let reports = conditions::eval_prop2(&params, kmax, &tol)?;
                emit_reports(&out, &reports)
            }
            CheckCmd::Gcip {
                model,
                delta,
                qmax,
                out,
            } => {
                let m = model.build(delta)?;
                let (r1, r2) = conditions::eval_gcip(&m, delta, qmax, &tol)?;
                emit_reports(&out, &[r1, r2])
            }
            CheckCmd::Gchr {
                model,
                r,
                b_power,
                nmax,
                out,
            } => {
                let m = model.build(1.0)?;
                let b = conditions::BoundRule::Power { exponent: b_power };
                let rep = conditions::eval_gchr(&m, &b, r, nmax, &tol)?;
                emit_reports(&out, &[rep])
            }
            CheckCmd::Q2 {
                nu,
                qmax,
                rho_power,
                out,
            } => {
                let rep = conditions::eval_q2(&stationary_rho(rho_power), nu, qmax, &tol)?;
                emit_reports(&out, &[rep])
            }
            CheckCmd::Cesaro {
                nmax,
                rho_power,
                out,
            } => {
                let rep = conditions::eval_cesaro(&stationary_rho(rho_power), nmax, &tol)?;
                emit_reports(&out, &[rep])
            }
            CheckCmd::NewmanSigma2 { tol, rho_power } => {
                let sigma2 = conditions::eval_newman_sigma2(&stationary_rho(rho_power), tol)?;
                println!("{sigma2}");
                Ok(())
            }
            CheckCmd::Birkel { model, nmax, out } => {
                let m = model.build(1.0)?;
                let rep = conditions::eval_birkel(&m, nmax, &tol)?;
                emit_reports(&out, &[rep])
            }
        },
        Command::ProbeMaxvar {
            r,
            n,
            reps,
            lambdas,
            seed,
            out,
        } => {
            let grid: Vec<f64> = match lambdas {
                Some(s) => s
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad lambda {t:?}")))
                    })
                    .collect::<Result<_>>()?,
                None => {
                    let sd = (n as f64).sqrt();
                    (5..=30).map(|i| sd * i as f64 / 10.0).collect()
                }
            };
            let sampler = |s: &mut SeededStream, n: usize| -> Result<Vec<f64>> {
                Ok((0..n).map(|_| s.normal()).collect())
            };
            let probe = conditions::maxvar_probe(sampler, r, n as usize, &grid, reps, seed)?;
            println!(
                "C = {:.4} (se {:.4}), E-max ratio = {:.4}, Var(S_n) = {:.4}",
                probe.c_estimate, probe.c_std_error, probe.e_max_ratio, probe.var_sn
            );
            if out.output.is_some() {
                let mut csv = String::from("lambda,value\n");
                for &(l, v) in &probe.lambda_curve {
                    csv.push_str(&format!("{l:?},{v:?}\n"));
                }
                let json = serde_json::to_string_pretty(&probe)
                    .map_err(|e| Error::Parse(e.to_string()))?;
                out.emit(csv, json)?;
            }
            Ok(())
        }
        Command::Experiment { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg: ExperimentConfig =
                toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let result = montecarlo::run(&cfg)?;
            let json =
                serde_json::to_string_pretty(&result).map_err(|e| Error::Parse(e.to_string()))?;
            out.emit(export::run_result_to_csv(&result), json)?;
            if out.output.is_some() {
                println!(
                    "{}: {} replications, {} grid points, config {}",
                    result.experiment_id,
                    result.replications,
                    result.points.len(),
                    &result.config_hash[..12]
                );
            }
            Ok(())
        }
        Command::Oracle(cmd) => {
            match cmd {
                OracleCmd::SJk { j, k, gamma } => println!("{}", evt_process::s_jk(j, k, gamma)?),
                OracleCmd::VarS { j, k, gamma } => println!("{}", evt_process::var_s(j, k, gamma)?),
                OracleCmd::CovS { i, j, k, gamma } => {
                    println!("{}", evt_process::cov_s(i, j, k, gamma)?)
                }
                OracleCmd::NewmanBound { j, k, gamma } => {
                    let nb = evt_process::newman_bound(j, k, gamma)?;
                    println!(
                        "exact = {}, integral_bound = {}, quoted_bound = {}",
                        nb.exact, nb.integral_bound, nb.quoted_bound
                    );
                }
                OracleCmd::Mu { gamma, tau } => {
                    let params = EvtProcessParams::power_case(gamma, tau, 1.0);
                    let lim = evt_process::mu_limit(&params)?;
                    println!("{}", lim.value);
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
