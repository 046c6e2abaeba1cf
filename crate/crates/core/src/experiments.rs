//! Dataset generators behind the figure scripts, plus Monte Carlo validation.
//!
//! Every generator writes CSV files with a fixed header (see the `*_HEADER`
//! constants) and a `<id>.manifest.toml` describing the run. Numbers are
//! written with 15 significant digits and no timestamps are recorded, so a
//! fixed config reproduces byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bound::{continuous_bound, discrete_bound, nonstationary_k0, BoundModel};
use crate::config::ExperimentConfig;
use crate::error::{invalid, Error, Result};
use crate::gmp::{psd_continuous_unchecked, psd_discrete_unchecked, GmpSpec, SamplingSpec, TauInterval};
use crate::grid::{log_space, FrequencyGrid};
use crate::kf::{
    demo_models, design_model_with_variance, riccati_run, run_demo_suite_with_variance, true_error_covariance,
    MODEL_ORACLE, POSITION,
};
use crate::sim::{check_filter_variance, check_gmp_autocov, simulate_filter_errors, BandCheck, GmpRealization};
use crate::verify::{k0_binding_point_scan, DOMINANCE_REL_TOL};

pub const PSD_HEADER: [&str; 4] = ["frequency_hz", "model", "tau_s", "psd"];
pub const K0_P_HEADER: [&str; 3] = ["p", "tau_s", "k0_required"];
pub const K0_DT_HEADER: [&str; 3] = ["dt_s", "interval", "k0_min"];
pub const KF_HEADER: [&str; 6] = [
    "step",
    "time_s",
    "model",
    "predicted_sigma_pos",
    "true_sigma_pos",
    "diff",
];
pub const MC_HEADER: [&str; 7] = [
    "check",
    "index",
    "analytic",
    "estimate",
    "std_error",
    "z_score",
    "inside",
];
pub const SIM_HEADER: [&str; 3] = ["realization", "step", "value"];

pub const PSD_CONT_FILE: &str = "psd_cont.csv";
pub const PSD_DISC_FILE: &str = "psd_disc.csv";
pub const K0_P_FILE: &str = "k0_vs_p.csv";
pub const K0_DT_FILE: &str = "k0_vs_dt.csv";
pub const KF_FILE: &str = "kf_demo.csv";
pub const MC_FILE: &str = "mc_validation.csv";

pub const TRUTH_LABEL: &str = "truth";
pub const BOUND_CONTINUOUS_LABEL: &str = "bound-continuous";
pub const BOUND_DISCRETE_LABEL: &str = "bound-discrete";

/// Fixed-precision number formatting used in every dataset.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.14e}")
}

/// CSV writer that checks every record against the header.
struct Table {
    path: PathBuf,
    width: usize,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(&path).map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        writer.write_record(header).map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        Ok(Self {
            path,
            width: header.len(),
            writer,
        })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        if fields.len() != self.width {
            return Err(Error::DatasetCheck(format!(
                "{}: record has {} fields, header has {}",
                self.path.display(),
                fields.len(),
                self.width
            )));
        }
        self.writer.write_record(fields).map_err(|source| Error::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|source| Error::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.path)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    manifest: ManifestHeader<'a>,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct ManifestHeader<'a> {
    experiment: &'a str,
    library_version: &'a str,
    seed: u64,
    files: Vec<String>,
}

/// Writes `<experiment>.manifest.toml` next to the datasets.
pub fn write_manifest(
    out_dir: &Path,
    experiment: &str,
    config: &ExperimentConfig,
    files: &[PathBuf],
) -> Result<PathBuf> {
    let manifest = Manifest {
        manifest: ManifestHeader {
            experiment,
            library_version: crate::VERSION,
            seed: config.experiment.seed,
            files: files
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|f| f.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
        },
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    let path = out_dir.join(format!("{experiment}.manifest.toml"));
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Bound-versus-truth PSD curves in both the continuous and the sampled
/// setting. Fails if any emitted bound curve dips below a truth curve.
pub fn exp_psd_curves(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(out_dir)?;
    let sigma2 = config.process.sigma2;
    let sigma2_bound = config.bounding_sigma2();
    let two_pi = 2.0 * std::f64::consts::PI;

    let interval = config.interval()?;
    let grid = FrequencyGrid::default_continuous(&interval, config.grid.freq_count)?;
    let bound = continuous_bound(&interval);
    let cont = write_psd_file(
        out_dir.join(PSD_CONT_FILE),
        grid.values(),
        &interval.log_grid(config.grid.psd_tau_count),
        &[(BOUND_CONTINUOUS_LABEL, bound)],
        psd_continuous_unchecked,
        sigma2,
        sigma2_bound,
        two_pi,
    )?;

    let d = &config.psd_discrete;
    let d_interval = TauInterval::new(d.tau_min, d.tau_max)?;
    let d_sampling = SamplingSpec::new(d.dt)?;
    let d_grid = FrequencyGrid::nyquist_linear(d_sampling, config.grid.freq_count)?;
    let dt = d_sampling.dt();
    let disc = write_psd_file(
        out_dir.join(PSD_DISC_FILE),
        d_grid.values(),
        &d_interval.log_grid(config.grid.psd_tau_count),
        &[
            (BOUND_CONTINUOUS_LABEL, continuous_bound(&d_interval)),
            (BOUND_DISCRETE_LABEL, discrete_bound(&d_interval, d_sampling)),
        ],
        |w, s2, tau| psd_discrete_unchecked(w, s2, tau, dt),
        sigma2,
        sigma2_bound,
        two_pi,
    )?;

    let files = vec![cont, disc];
    write_manifest(out_dir, "psd_curves", config, &files)?;
    Ok(files)
}

#[allow(clippy::too_many_arguments)]
fn write_psd_file<F>(
    path: PathBuf,
    omegas: &[f64],
    taus: &[f64],
    bounds: &[(&str, BoundModel)],
    psd: F,
    sigma2: f64,
    sigma2_bound: f64,
    two_pi: f64,
) -> Result<PathBuf>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let truth: Vec<Vec<f64>> = taus
        .iter()
        .map(|&tau| omegas.iter().map(|&w| psd(w, sigma2, tau)).collect())
        .collect();
    let peak = truth.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let tol = DOMINANCE_REL_TOL * peak.max(1.0);

    let mut table = Table::create(path, &PSD_HEADER)?;
    for (tau, curve) in taus.iter().zip(&truth) {
        for (w, v) in omegas.iter().zip(curve) {
            table.row(&[fmt_num(w / two_pi), TRUTH_LABEL.into(), fmt_num(*tau), fmt_num(*v)])?;
        }
    }
    for (label, b) in bounds {
        let s_hat = b.variance(sigma2_bound);
        for (i, &w) in omegas.iter().enumerate() {
            let v = psd(w, s_hat, b.tau_hat());
            if let Some((tau, t)) = taus.iter().zip(&truth).find(|(_, c)| c[i] - v > tol) {
                return Err(Error::DatasetCheck(format!(
                    "{label} below truth tau={tau} at omega={w}: {v} < {}",
                    t[i]
                )));
            }
            table.row(&[fmt_num(w / two_pi), (*label).into(), fmt_num(b.tau_hat()), fmt_num(v)])?;
        }
    }
    table.finish()
}

/// Required `k0` versus `p` (at `n = 0`) per tau, and minimum `k0` versus
/// sampling interval for several tau intervals.
pub fn exp_k0_sweeps(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(out_dir)?;
    let k = &config.k0;
    let interval = config.interval()?;
    let sampling = SamplingSpec::new(k.dt)?;
    let bound = continuous_bound(&interval);
    let scan = k0_binding_point_scan(&interval, sampling, &bound, 0, k.p_max, k.tau_count)?;

    let mut by_p = Table::create(out_dir.join(K0_P_FILE), &K0_P_HEADER)?;
    for (tau, curve) in scan.taus.iter().zip(&scan.curves_n0) {
        for (i, v) in curve.iter().enumerate() {
            by_p.row(&[(i + 1).to_string(), fmt_num(*tau), fmt_num(*v)])?;
        }
    }
    let by_p = by_p.finish()?;

    let mut by_dt = Table::create(out_dir.join(K0_DT_FILE), &K0_DT_HEADER)?;
    let dts = log_space(k.sweep_dt_min, k.sweep_dt_max, k.sweep_dt_count);
    for (lo, hi) in k.sweep_tau_min.iter().zip(&k.sweep_tau_max) {
        let iv = TauInterval::new(*lo, *hi)?;
        let label = format!("{lo}-{hi}");
        let b = continuous_bound(&iv);
        for &dt in &dts {
            let k0 = nonstationary_k0(&iv, SamplingSpec::new(dt)?, &b)?;
            by_dt.row(&[fmt_num(dt), label.clone(), fmt_num(k0)])?;
        }
    }
    let by_dt = by_dt.finish()?;

    let files = vec![by_p, by_dt];
    write_manifest(out_dir, "k0_sweeps", config, &files)?;
    Ok(files)
}

/// Predicted and true position sigma for the standard design models plus any
/// `extra` comparison models.
pub fn exp_kf_demo(config: &ExperimentConfig, out_dir: &Path, extra: &[(String, BoundModel)]) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(out_dir)?;
    let sampling = config.sampling()?;
    let traces = run_demo_suite_with_variance(
        &config.interval()?,
        sampling,
        &config.truth()?,
        config.bounding_sigma2(),
        config.kf.steps,
        extra,
    )?;
    let mut table = Table::create(out_dir.join(KF_FILE), &KF_HEADER)?;
    for t in &traces {
        for (i, (pred, act)) in t.predicted_sigma_pos.iter().zip(&t.true_sigma_pos).enumerate() {
            let step = i + 1;
            table.row(&[
                step.to_string(),
                fmt_num(step as f64 * sampling.dt()),
                t.name.clone(),
                fmt_num(*pred),
                fmt_num(*act),
                fmt_num(pred - act),
            ])?;
        }
    }
    let files = vec![table.finish()?];
    write_manifest(out_dir, "kf_demo", config, &files)?;
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub autocov: Vec<BandCheck>,
    pub filter: Vec<BandCheck>,
    pub realizations: usize,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.autocov.iter().chain(&self.filter).all(BandCheck::inside)
    }

    pub fn checks(&self) -> impl Iterator<Item = &BandCheck> {
        self.autocov.iter().chain(&self.filter)
    }
}

/// Ensemble autocovariance of a simulated GMP against the closed form, and
/// the ensemble filter error variance against the analytic true covariance.
pub fn monte_carlo_validate(config: &ExperimentConfig) -> Result<McReport> {
    config.validate()?;
    let mc = &config.mc;
    let sampling = config.sampling()?;
    let count = config.experiment.realizations;
    let seed = config.experiment.seed;

    let tau = -sampling.dt() / mc.gmp_alpha.ln();
    let spec = GmpSpec::new(config.process.sigma2, tau)?;
    let autocov = check_gmp_autocov(
        &spec,
        mc.gmp_sigma0_2,
        sampling,
        mc.gmp_base_index,
        &mc.lags,
        seed,
        count,
        mc.band,
    )?;

    let truth = config.truth()?;
    let (_, bound) = demo_models(&config.interval()?, sampling, truth.tau_true)?
        .into_iter()
        .find(|(name, _)| *name == config.kf.mc_model)
        .ok_or_else(|| invalid("mc_model", format!("unknown model {:?}", config.kf.mc_model)))?;
    let sigma2 = if config.kf.mc_model == MODEL_ORACLE {
        truth.sigma_xi2
    } else {
        config.bounding_sigma2()
    };
    let design = design_model_with_variance(&bound, sigma2, &truth, sampling)?;
    let (_, gains) = riccati_run(&design, config.kf.steps)?;
    let analytic = true_error_covariance(&design, &gains, &truth, sampling, config.kf.steps)?;
    let errors = simulate_filter_errors(
        &design,
        &gains,
        &truth.model(sampling)?,
        POSITION,
        &config.kf.mc_steps,
        seed.wrapping_add(1),
        count,
    )?;
    let filter = check_filter_variance(&errors, &config.kf.mc_steps, &analytic.variance(0), mc.band);
    Ok(McReport {
        autocov,
        filter,
        realizations: count,
    })
}

pub fn write_mc_report(report: &McReport, config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut table = Table::create(out_dir.join(MC_FILE), &MC_HEADER)?;
    for c in report.checks() {
        table.row(&[
            c.label.clone(),
            c.index.to_string(),
            fmt_num(c.analytic),
            fmt_num(c.estimate),
            fmt_num(c.std_error),
            fmt_num(c.z_score()),
            c.inside().to_string(),
        ])?;
    }
    let files = vec![table.finish()?];
    write_manifest(out_dir, "mc_validation", config, &files)?;
    Ok(files)
}

pub fn write_realizations(path: &Path, runs: &[GmpRealization]) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut table = Table::create(path.to_path_buf(), &SIM_HEADER)?;
    for r in runs {
        for (step, v) in r.samples.iter().enumerate() {
            table.row(&[r.index.to_string(), step.to_string(), fmt_num(*v)])?;
        }
    }
    table.finish()
}

/// Runs every dataset generator into `out_dir`.
pub fn reproduce_all(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = exp_psd_curves(config, out_dir)?;
    files.extend(exp_k0_sweeps(config, out_dir)?);
    files.extend(exp_kf_demo(config, out_dir, &[])?);
    Ok(files)
}
