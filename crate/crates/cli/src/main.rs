//! `gmp-overbound` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmp_overbound::experiments::{
    exp_k0_sweeps, exp_kf_demo, exp_psd_curves, monte_carlo_validate, reproduce_all, write_mc_report,
    write_realizations,
};
use gmp_overbound::sim::simulate_gmp;
use gmp_overbound::verify::{
    acm_bound_scan, check_continuous_constraints, psd_dominance_continuous, psd_dominance_discrete, DEFAULT_FREQ_COUNT,
    DEFAULT_TAU_COUNT,
};
use gmp_overbound::{
    continuous_bound, discrete_bound, nonstationary_k0, psd_continuous, psd_discrete, BoundModel, Error,
    ExperimentConfig, FrequencyGrid, GmpSpec, SamplingSpec, TauInterval, VarianceInterval, VERSION,
};

#[derive(Parser, Debug)]
#[command(name = "gmp-overbound", version = VERSION, about = "Gauss-Markov overbound models for uncertain time constants")]
struct Cli {
    /// Also print machine-readable `key,value` records with 15 significant digits.
    #[arg(long, global = true)]
    record: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute bound parameters.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Evaluate a GMP power spectral density.
    Psd(PsdArgs),
    /// Numerically verify bounding conditions.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Write experiment datasets (CSV plus manifest).
    Demo(DemoArgs),
    /// Simulate sample paths.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Monte Carlo validation of the analytic results.
    #[command(subcommand)]
    Validate(ValidateCmd),
}

#[derive(Args, Debug, Clone)]
struct IntervalArgs {
    /// Lower end of the time-constant interval (s).
    #[arg(long, allow_negative_numbers = true)]
    tau_min: f64,
    /// Upper end of the time-constant interval (s).
    #[arg(long, allow_negative_numbers = true)]
    tau_max: f64,
}

impl IntervalArgs {
    fn interval(&self) -> Result<TauInterval, Error> {
        TauInterval::new(self.tau_min, self.tau_max)
    }
}

#[derive(Subcommand, Debug)]
enum BoundCmd {
    /// Stationary continuous-time bound.
    Continuous {
        #[command(flatten)]
        interval: IntervalArgs,
        /// Process variance.
        #[arg(long, allow_negative_numbers = true)]
        sigma2: f64,
        /// Upper end of the variance interval, if the variance is uncertain.
        #[arg(long, allow_negative_numbers = true)]
        sigma2_max: Option<f64>,
    },
    /// Stationary bound for a sampled process.
    Discrete {
        #[command(flatten)]
        interval: IntervalArgs,
        /// Sampling interval (s).
        #[arg(long, allow_negative_numbers = true)]
        dt: f64,
        /// Process variance.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sigma2: f64,
    },
    /// Minimum initial inflation of the non-stationary bound.
    K0 {
        #[command(flatten)]
        interval: IntervalArgs,
        /// Sampling interval (s).
        #[arg(long, allow_negative_numbers = true)]
        dt: f64,
        /// Process variance.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sigma2: f64,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Mode {
    Cont,
    Disc,
}

#[derive(Args, Debug)]
struct PsdArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Time constant (s).
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    /// Process variance.
    #[arg(long, allow_negative_numbers = true)]
    sigma2: f64,
    /// Sampling interval (s); required for `--mode disc`.
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Angular frequencies (rad/s), comma separated or repeated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    omega: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// PSD dominance of a stationary bound over the truth family.
    Dominance {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        interval: IntervalArgs,
        /// Process variance.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sigma2: f64,
        /// Sampling interval (s); required for `--mode disc`.
        #[arg(long, allow_negative_numbers = true)]
        dt: Option<f64>,
        /// Variance inflation of a custom model (default: the computed bound).
        #[arg(long, requires = "tau_hat", allow_negative_numbers = true)]
        k: Option<f64>,
        /// Time constant of a custom model (default: the computed bound).
        #[arg(long, requires = "k", allow_negative_numbers = true)]
        tau_hat: Option<f64>,
        /// Number of frequencies.
        #[arg(long, default_value_t = DEFAULT_FREQ_COUNT)]
        freq_count: usize,
        /// Number of truth time constants.
        #[arg(long, default_value_t = DEFAULT_TAU_COUNT)]
        tau_count: usize,
        /// Lowest angular frequency of the continuous grid (rad/s).
        #[arg(long, requires = "omega_max", allow_negative_numbers = true)]
        omega_min: Option<f64>,
        /// Highest angular frequency of the continuous grid (rad/s).
        #[arg(long, requires = "omega_min", allow_negative_numbers = true)]
        omega_max: Option<f64>,
    },
    /// Autocovariance-matrix scan of the non-stationary bound.
    Acm {
        #[command(flatten)]
        interval: IntervalArgs,
        /// Sampling interval (s).
        #[arg(long, allow_negative_numbers = true)]
        dt: f64,
        /// Process variance.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sigma2: f64,
        /// Initial inflation to test (default: the computed minimum).
        #[arg(long, conflicts_with = "k0_scale", allow_negative_numbers = true)]
        k0: Option<f64>,
        /// Multiplier applied to the computed minimum k0.
        #[arg(long, allow_negative_numbers = true)]
        k0_scale: Option<f64>,
        /// Largest sample index scanned.
        #[arg(long, default_value_t = 200)]
        n_max: usize,
        /// Number of truth time constants.
        #[arg(long, default_value_t = 25)]
        tau_count: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Experiment {
    Kf,
    Psd,
    K0,
    All,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[command(flatten)]
    io: ConfigIo,
}

#[derive(Args, Debug)]
struct ConfigIo {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: `experiment.output` from the config).
    #[arg(long, env = "GMP_OVERBOUND_OUT")]
    out: Option<PathBuf>,
}

impl ConfigIo {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let out = self.out.clone().unwrap_or_else(|| cfg.experiment.output.clone());
        Ok((cfg, out))
    }
}

#[derive(Subcommand, Debug)]
enum SimulateCmd {
    /// GMP sample paths written as CSV.
    Gmp {
        /// Time constant (s).
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        /// Stationary variance.
        #[arg(long, allow_negative_numbers = true)]
        sigma2: f64,
        /// Sampling interval (s).
        #[arg(long, allow_negative_numbers = true)]
        dt: f64,
        /// Initial variance (default: the stationary variance).
        #[arg(long, allow_negative_numbers = true)]
        sigma0_2: Option<f64>,
        /// Steps after the initial sample.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Number of realizations.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum ValidateCmd {
    /// Ensemble statistics against the closed forms.
    Mc {
        #[command(flatten)]
        io: ConfigIo,
        /// Override the number of realizations.
        #[arg(long)]
        realizations: Option<usize>,
    },
}

/// Human-readable and optional machine-readable output of scalar results.
struct Printer {
    record: bool,
    records: Vec<(String, f64)>,
}

impl Printer {
    fn new(record: bool) -> Self {
        Self {
            record,
            records: Vec::new(),
        }
    }

    fn value(&mut self, key: &str, v: f64) {
        println!("{key} = {}", six(v));
        self.records.push((key.to_string(), v));
    }

    fn finish(self) {
        if self.record {
            println!();
            println!("key,value");
            for (k, v) in self.records {
                println!("{k},{v:.14e}");
            }
        }
    }
}

/// Six significant digits without trailing zeros.
fn six(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn sampling_for(mode: Mode, dt: Option<f64>) -> Result<Option<SamplingSpec>, Error> {
    match (mode, dt) {
        (Mode::Disc, None) => Err(Error::InvalidParameter {
            name: "dt",
            reason: "required for --mode disc".into(),
        }),
        (_, Some(dt)) => SamplingSpec::new(dt).map(Some),
        (Mode::Cont, None) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let mut out = Printer::new(cli.record);
    let outcome = match cli.command {
        Command::Bound(cmd) => {
            bound(cmd, &mut out)?;
            Outcome::Pass
        }
        Command::Psd(args) => {
            let spec = GmpSpec::new(args.sigma2, args.tau)?;
            let sampling = sampling_for(args.mode, args.dt)?;
            for w in args.omega {
                let v = match sampling {
                    Some(s) if args.mode == Mode::Disc => psd_discrete(w, &spec, s)?,
                    _ => psd_continuous(w, &spec)?,
                };
                out.value(&format!("psd[omega={w}]"), v);
            }
            Outcome::Pass
        }
        Command::Verify(cmd) => verify(cmd)?,
        Command::Demo(args) => {
            let (cfg, dir) = args.io.load()?;
            let files = match args.experiment {
                Experiment::Kf => exp_kf_demo(&cfg, &dir, &[])?,
                Experiment::Psd => exp_psd_curves(&cfg, &dir)?,
                Experiment::K0 => exp_k0_sweeps(&cfg, &dir)?,
                Experiment::All => reproduce_all(&cfg, &dir)?,
            };
            for f in files {
                println!("wrote: {}", f.display());
            }
            Outcome::Pass
        }
        Command::Simulate(SimulateCmd::Gmp {
            tau,
            sigma2,
            dt,
            sigma0_2,
            steps,
            count,
            seed,
            out: path,
        }) => {
            let spec = GmpSpec::new(sigma2, tau)?;
            let runs = simulate_gmp(
                &spec,
                sigma0_2.unwrap_or(sigma2),
                SamplingSpec::new(dt)?,
                steps,
                seed,
                count,
            )?;
            println!("wrote: {}", write_realizations(&path, &runs)?.display());
            Outcome::Pass
        }
        Command::Validate(ValidateCmd::Mc { io, realizations }) => {
            let (mut cfg, dir) = io.load()?;
            if let Some(r) = realizations {
                cfg.experiment.realizations = r;
            }
            let report = monte_carlo_validate(&cfg)?;
            println!("result: {}", if report.passed() { "PASS" } else { "FAIL" });
            println!("realizations: {}", report.realizations);
            println!();
            println!("check\tindex\tanalytic\testimate\tz_score");
            for c in report.checks() {
                println!(
                    "{}\t{}\t{}\t{}\t{}",
                    c.label,
                    c.index,
                    six(c.analytic),
                    six(c.estimate),
                    six(c.z_score())
                );
            }
            for f in write_mc_report(&report, &cfg, &dir)? {
                println!("wrote: {}", f.display());
            }
            if report.passed() {
                Outcome::Pass
            } else {
                Outcome::Fail
            }
        }
    };
    out.finish();
    Ok(outcome)
}

fn bound(cmd: BoundCmd, out: &mut Printer) -> Result<(), Error> {
    match cmd {
        BoundCmd::Continuous {
            interval,
            sigma2,
            sigma2_max,
        } => {
            let iv = interval.interval()?;
            let var = VarianceInterval::new(sigma2, sigma2_max.unwrap_or(sigma2))?;
            let b = continuous_bound(&iv);
            let c = check_continuous_constraints(&b, &iv);
            out.value("tau_hat", b.tau_hat());
            out.value("k", b.k());
            out.value("sigma_hat2", b.variance(var.bounding_variance()));
            out.value("residual_low_freq", c.residual_low_freq);
            out.value("residual_high_freq", c.residual_high_freq);
        }
        BoundCmd::Discrete { interval, dt, sigma2 } => {
            let iv = interval.interval()?;
            let b = discrete_bound(&iv, SamplingSpec::new(dt)?);
            check_sigma2(sigma2)?;
            out.value("tau_hat", b.tau_hat());
            out.value("k", b.k());
            out.value("sigma_hat2", b.variance(sigma2));
        }
        BoundCmd::K0 { interval, dt, sigma2 } => {
            let iv = interval.interval()?;
            let sampling = SamplingSpec::new(dt)?;
            check_sigma2(sigma2)?;
            let b = continuous_bound(&iv);
            let k0 = nonstationary_k0(&iv, sampling, &b)?;
            out.value("tau_hat", b.tau_hat());
            out.value("k", b.k());
            out.value("k0", k0);
            out.value("sigma_hat2", b.variance(sigma2));
            out.value("sigma0_hat2", k0 * sigma2);
        }
    }
    Ok(())
}

fn check_sigma2(sigma2: f64) -> Result<(), Error> {
    VarianceInterval::new(sigma2, sigma2).map(|_| ())
}

fn verify(cmd: VerifyCmd) -> Result<Outcome, Error> {
    let passed = match cmd {
        VerifyCmd::Dominance {
            mode,
            interval,
            sigma2,
            dt,
            k,
            tau_hat,
            freq_count,
            tau_count,
            omega_min,
            omega_max,
        } => {
            let iv = interval.interval()?;
            let sampling = sampling_for(mode, dt)?;
            let bound = match (k, tau_hat) {
                (Some(k), Some(t)) => BoundModel::custom(t, k)?,
                _ => match (mode, sampling) {
                    (Mode::Disc, Some(s)) => discrete_bound(&iv, s),
                    _ => continuous_bound(&iv),
                },
            };
            let report = match (mode, sampling) {
                (Mode::Disc, Some(s)) => {
                    let grid = FrequencyGrid::nyquist_linear(s, freq_count)?;
                    psd_dominance_discrete(&bound, &iv, sigma2, s, &grid, tau_count)?
                }
                _ => {
                    let grid = match (omega_min, omega_max) {
                        (Some(lo), Some(hi)) => FrequencyGrid::log_spaced(lo, hi, freq_count)?,
                        _ => FrequencyGrid::default_continuous(&iv, freq_count)?,
                    };
                    psd_dominance_continuous(&bound, &iv, sigma2, &grid, tau_count)?
                }
            };
            println!("tau_hat: {}", six(bound.tau_hat()));
            println!("k: {}", six(bound.k()));
            print!("{report}");
            report.passed()
        }
        VerifyCmd::Acm {
            interval,
            dt,
            sigma2,
            k0,
            k0_scale,
            n_max,
            tau_count,
        } => {
            let iv = interval.interval()?;
            let sampling = SamplingSpec::new(dt)?;
            let base = continuous_bound(&iv);
            let k0 = match k0 {
                Some(v) => v,
                None => nonstationary_k0(&iv, sampling, &base)? * k0_scale.unwrap_or(1.0),
            };
            let bound = base.with_k0(k0, sampling)?;
            let report = acm_bound_scan(&bound, &iv, sigma2, sampling, n_max, tau_count)?;
            println!("k0: {}", six(k0));
            print!("{report}");
            report.passed()
        }
    };
    Ok(if passed { Outcome::Pass } else { Outcome::Fail })
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::DatasetCheck(_) | Error::NonPositiveInnovation { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                // --help / --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
