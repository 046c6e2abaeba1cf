//! Experiment configuration: flat TOML sections of `key = value` pairs.
//!
//! ```toml
//! [experiment]
//! id = "kf_demo"
//! seed = 7
//!
//! [interval]
//! tau_min = 10.0
//! tau_max = 100.0
//!
//! [kf]
//! tau_true = 50.0
//! ```
//!
//! Every key is optional; missing keys take the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gmp::{check_positive, check_variance, SamplingSpec, TauInterval};
use crate::kf::{Priors, TruthSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub interval: IntervalSection,
    pub process: ProcessSection,
    pub sampling: SamplingSection,
    pub grid: GridSection,
    pub psd_discrete: PsdDiscreteSection,
    pub k0: K0Section,
    pub kf: KfSection,
    pub mc: McSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    pub seed: u64,
    pub realizations: usize,
    pub output: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            id: "default".into(),
            seed: 20_210_611,
            realizations: 20_000,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalSection {
    pub tau_min: f64,
    pub tau_max: f64,
}

impl Default for IntervalSection {
    fn default() -> Self {
        Self {
            tau_min: 10.0,
            tau_max: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessSection {
    /// Truth GMP variance. When `sigma2_max` is set, bounds and filter designs
    /// use it instead.
    pub sigma2: f64,
    pub sigma2_max: Option<f64>,
}

impl Default for ProcessSection {
    fn default() -> Self {
        Self {
            sigma2: 1.0,
            sigma2_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub dt: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self { dt: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub freq_count: usize,
    /// Truth curves written to the PSD datasets.
    pub psd_tau_count: usize,
    /// Truth time constants scanned when re-checking dominance.
    pub tau_count: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            freq_count: 1000,
            psd_tau_count: 10,
            tau_count: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsdDiscreteSection {
    pub tau_min: f64,
    pub tau_max: f64,
    pub dt: f64,
}

impl Default for PsdDiscreteSection {
    fn default() -> Self {
        Self {
            tau_min: 1.0,
            tau_max: 10.0,
            dt: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct K0Section {
    /// Sampling interval of the k0-versus-p sweep.
    pub dt: f64,
    pub p_max: usize,
    pub tau_count: usize,
    /// Intervals of the k0-versus-dt sweep, as parallel lists.
    pub sweep_tau_min: Vec<f64>,
    pub sweep_tau_max: Vec<f64>,
    pub sweep_dt_min: f64,
    pub sweep_dt_max: f64,
    pub sweep_dt_count: usize,
}

impl Default for K0Section {
    fn default() -> Self {
        Self {
            dt: 0.1,
            p_max: 200,
            tau_count: 10,
            sweep_tau_min: vec![1.0, 1.0, 5.0, 10.0, 20.0],
            sweep_tau_max: vec![10.0, 100.0, 20.0, 100.0, 40.0],
            sweep_dt_min: 0.01,
            sweep_dt_max: 1.0,
            sweep_dt_count: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KfSection {
    pub steps: usize,
    pub tau_true: f64,
    pub sigma_nu2: f64,
    pub prior_position: f64,
    pub prior_velocity: f64,
    /// Design model used for the Monte Carlo filter check.
    pub mc_model: String,
    pub mc_steps: Vec<usize>,
}

impl Default for KfSection {
    fn default() -> Self {
        let priors = Priors::default();
        Self {
            steps: 1000,
            tau_true: 50.0,
            sigma_nu2: 1.0,
            prior_position: priors.position,
            prior_velocity: priors.velocity,
            mc_model: crate::kf::MODEL_STATIONARY_CONTINUOUS.into(),
            mc_steps: vec![10, 100, 500, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    /// One-step correlation of the simulated GMP (sampled at `sampling.dt`).
    pub gmp_alpha: f64,
    pub gmp_sigma0_2: f64,
    pub gmp_base_index: usize,
    pub lags: Vec<usize>,
    /// Acceptance band in standard errors.
    pub band: f64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            gmp_alpha: 0.5,
            gmp_sigma0_2: 2.0,
            gmp_base_index: 1,
            lags: vec![0, 1, 2, 5, 10],
            band: 4.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.interval()?;
        self.sampling()?;
        check_variance("sigma2", self.process.sigma2)?;
        if let Some(max) = self.process.sigma2_max {
            crate::gmp::VarianceInterval::new(self.process.sigma2, max)?;
        }
        TauInterval::new(self.psd_discrete.tau_min, self.psd_discrete.tau_max)?;
        SamplingSpec::new(self.psd_discrete.dt)?;
        SamplingSpec::new(self.k0.dt)?;
        if self.k0.sweep_tau_min.len() != self.k0.sweep_tau_max.len() {
            return Err(invalid("sweep_tau_max", "must have as many entries as sweep_tau_min"));
        }
        for (lo, hi) in self.k0.sweep_tau_min.iter().zip(&self.k0.sweep_tau_max) {
            TauInterval::new(*lo, *hi)?;
        }
        check_positive("sweep_dt_min", self.k0.sweep_dt_min)?;
        if self.k0.sweep_dt_max < self.k0.sweep_dt_min {
            return Err(invalid("sweep_dt_max", "sweep_dt_max < sweep_dt_min"));
        }
        if self.grid.freq_count < 2 {
            return Err(invalid("freq_count", "must be >= 2"));
        }
        for (name, v) in [
            ("psd_tau_count", self.grid.psd_tau_count),
            ("tau_count", self.grid.tau_count),
            ("k0.tau_count", self.k0.tau_count),
            ("p_max", self.k0.p_max),
            ("sweep_dt_count", self.k0.sweep_dt_count),
            ("steps", self.kf.steps),
            ("realizations", self.experiment.realizations),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be >= 1"));
            }
        }
        self.truth()?;
        if !(self.mc.gmp_alpha > 0.0 && self.mc.gmp_alpha < 1.0) {
            return Err(invalid("gmp_alpha", "must lie in (0, 1)"));
        }
        check_variance("gmp_sigma0_2", self.mc.gmp_sigma0_2)?;
        check_positive("band", self.mc.band)?;
        if let Some(&s) = self.kf.mc_steps.iter().find(|&&s| s == 0 || s > self.kf.steps) {
            return Err(invalid("mc_steps", format!("step {s} outside 1..={}", self.kf.steps)));
        }
        Ok(())
    }

    pub fn interval(&self) -> Result<TauInterval> {
        TauInterval::new(self.interval.tau_min, self.interval.tau_max)
    }

    pub fn sampling(&self) -> Result<SamplingSpec> {
        SamplingSpec::new(self.sampling.dt)
    }

    /// Variance the bounds are built from.
    pub fn bounding_sigma2(&self) -> f64 {
        self.process.sigma2_max.unwrap_or(self.process.sigma2)
    }

    pub fn truth(&self) -> Result<TruthSpec> {
        check_positive("tau_true", self.kf.tau_true)?;
        check_positive("sigma_nu2", self.kf.sigma_nu2)?;
        check_variance("prior_position", self.kf.prior_position)?;
        check_variance("prior_velocity", self.kf.prior_velocity)?;
        Ok(TruthSpec {
            tau_true: self.kf.tau_true,
            sigma_xi2: self.process.sigma2,
            sigma_nu2: self.kf.sigma_nu2,
            priors: Priors {
                position: self.kf.prior_position,
                velocity: self.kf.prior_velocity,
            },
        })
    }
}
