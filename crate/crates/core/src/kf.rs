//! Covariance analysis of a Kalman filter designed with an overbound model.
//!
//! [`riccati_run`] propagates the covariance the filter *believes*;
//! [`true_error_covariance_with`] propagates the covariance of the filter's
//! *actual* error when its gains are replayed against a different truth
//! system. The bounding property is `predicted >= true` on the states of
//! interest.

use nalgebra::{DMatrix, DVector, RowDVector};
use rayon::prelude::*;

use crate::bound::{continuous_bound, discrete_bound, nonstationary_k0, BoundModel};
use crate::error::{invalid, Error, Result};
use crate::gmp::{check_positive, check_variance, discrete_params_raw, SamplingSpec, TauInterval};

/// Slack allowed when checking that a covariance is positive semidefinite.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Observation row `h(n) = base + n * slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub base: RowDVector<f64>,
    pub slope: RowDVector<f64>,
}

impl Observation {
    pub fn constant(h: RowDVector<f64>) -> Self {
        let slope = RowDVector::zeros(h.len());
        Self { base: h, slope }
    }

    pub fn at(&self, step: usize) -> RowDVector<f64> {
        &self.base + &self.slope * step as f64
    }
}

/// Discrete-time linear system with a scalar measurement.
///
/// `r = 0` is accepted so noiseless truth systems can be described; a design
/// model needs a positive innovation variance at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    phi: DMatrix<f64>,
    obs: Observation,
    q: DMatrix<f64>,
    r: f64,
    p0: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(phi: DMatrix<f64>, obs: Observation, q: DMatrix<f64>, r: f64, p0: DMatrix<f64>) -> Result<Self> {
        let n = phi.nrows();
        if phi.ncols() != n
            || q.shape() != (n, n)
            || p0.shape() != (n, n)
            || obs.base.len() != n
            || obs.slope.len() != n
        {
            return Err(Error::Dimension(format!(
                "phi {:?}, q {:?}, p0 {:?}, h {}",
                phi.shape(),
                q.shape(),
                p0.shape(),
                obs.base.len()
            )));
        }
        check_variance("r", r)?;
        check_psd("q", &q)?;
        check_psd("p0", &p0)?;
        Ok(Self { phi, obs, q, r, p0 })
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p0(&self) -> &DMatrix<f64> {
        &self.p0
    }

    pub fn h(&self, step: usize) -> RowDVector<f64> {
        self.obs.at(step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    /// `gains[i]` is the gain applied at step `i + 1`.
    pub gains: Vec<DVector<f64>>,
}

impl GainSchedule {
    pub fn horizon(&self) -> usize {
        self.gains.len()
    }
}

/// Covariances at steps `1..=N`, after each measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrace {
    pub entries: Vec<DMatrix<f64>>,
    pub labels: Vec<String>,
    /// Largest relative asymmetry seen before re-symmetrisation.
    pub max_asymmetry: f64,
}

impl CovarianceTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn variance(&self, state: usize) -> Vec<f64> {
        self.entries.iter().map(|m| m[(state, state)]).collect()
    }

    pub fn sigma(&self, state: usize) -> Vec<f64> {
        self.entries.iter().map(|m| m[(state, state)].max(0.0).sqrt()).collect()
    }

    /// Restriction to the given states, in the given order.
    pub fn block(&self, states: &[usize]) -> CovarianceTrace {
        let entries = self
            .entries
            .iter()
            .map(|m| DMatrix::from_fn(states.len(), states.len(), |i, j| m[(states[i], states[j])]))
            .collect();
        let labels = states.iter().map(|&s| self.labels[s].clone()).collect();
        CovarianceTrace {
            entries,
            labels,
            max_asymmetry: self.max_asymmetry,
        }
    }

    /// Smallest `lambda_min / trace` over all entries.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        self.entries
            .iter()
            .map(|m| {
                let tr = m.trace().abs().max(f64::MIN_POSITIVE);
                m.clone().symmetric_eigenvalues().min() / tr
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Standard covariance recursion with a Joseph-form update.
pub fn riccati_run(model: &LinearModel, steps: usize) -> Result<(CovarianceTrace, GainSchedule)> {
    if steps == 0 {
        return Err(invalid("steps", "must be >= 1"));
    }
    let dim = model.dim();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let mut p = model.p0.clone();
    let mut entries = Vec::with_capacity(steps);
    let mut gains = Vec::with_capacity(steps);
    let mut max_asym: f64 = 0.0;
    for step in 1..=steps {
        let pred = &model.phi * &p * model.phi.transpose() + &model.q;
        let h = model.h(step);
        let ph = &pred * h.transpose();
        let s = (&h * &ph)[(0, 0)] + model.r;
        if s.is_nan() || s <= 0.0 {
            return Err(Error::NonPositiveInnovation { step, value: s });
        }
        let k: DVector<f64> = ph / s;
        let a = &eye - &k * &h;
        p = &a * pred * a.transpose() + &k * k.transpose() * model.r;
        max_asym = max_asym.max(symmetrize(&mut p));
        entries.push(p.clone());
        gains.push(k);
    }
    let labels = (0..dim).map(|i| format!("x{i}")).collect();
    Ok((
        CovarianceTrace {
            entries,
            labels,
            max_asymmetry: max_asym,
        },
        GainSchedule { gains },
    ))
}

/// Covariance of `x_hat - x` when a filter running `design` with the given
/// gains is fed measurements from `truth`.
///
/// The error `e = x_hat - x` is propagated jointly with the truth state:
///
/// ```text
/// e_n = A_n e_{n-1} + (A_n - B_n) x_{n-1} - (I - K_n h_n) w_n + K_n nu_n
/// x_n = Phi x_{n-1} + w_n
/// ```
///
/// with `A_n = (I - K_n h_hat_n) Phi_hat` and `B_n = (I - K_n h_n) Phi`,
/// starting from `x ~ N(0, P0_truth)` and `x_hat = 0`. Carrying `e` rather
/// than `x_hat` avoids cancellation when the error is much smaller than the
/// state, and reduces to the Joseph recursion when design and truth agree.
pub fn true_error_covariance_with(
    design: &LinearModel,
    gains: &GainSchedule,
    truth: &LinearModel,
    steps: usize,
) -> Result<CovarianceTrace> {
    let dim = design.dim();
    if truth.dim() != dim {
        return Err(Error::Dimension(format!(
            "design has {dim} states, truth has {}",
            truth.dim()
        )));
    }
    if gains.horizon() < steps {
        return Err(Error::HorizonMismatch {
            available: gains.horizon(),
            requested: steps,
        });
    }
    if let Some(g) = gains.gains.iter().find(|g| g.len() != dim) {
        return Err(Error::Dimension(format!("gain of length {} for {dim} states", g.len())));
    }
    let eye = DMatrix::<f64>::identity(dim, dim);
    let mut sigma = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    sigma.view_mut((0, 0), (dim, dim)).copy_from(&truth.p0);
    sigma.view_mut((0, dim), (dim, dim)).copy_from(&(-&truth.p0));
    sigma.view_mut((dim, 0), (dim, dim)).copy_from(&(-&truth.p0));
    sigma.view_mut((dim, dim), (dim, dim)).copy_from(&truth.p0);

    let mut entries = Vec::with_capacity(steps);
    let mut max_asym: f64 = 0.0;
    for step in 1..=steps {
        let k = &gains.gains[step - 1];
        let update_true = &eye - k * truth.h(step);
        let a_design = (&eye - k * design.h(step)) * &design.phi;
        let coupling = &a_design - &update_true * &truth.phi;

        let mut a = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
        a.view_mut((0, 0), (dim, dim)).copy_from(&a_design);
        a.view_mut((0, dim), (dim, dim)).copy_from(&coupling);
        a.view_mut((dim, dim), (dim, dim)).copy_from(&truth.phi);

        let mut g = DMatrix::<f64>::zeros(2 * dim, dim);
        g.view_mut((0, 0), (dim, dim)).copy_from(&(-&update_true));
        g.view_mut((dim, 0), (dim, dim)).copy_from(&eye);

        let mut gk = DVector::<f64>::zeros(2 * dim);
        gk.rows_mut(0, dim).copy_from(k);

        sigma = &a * &sigma * a.transpose() + &g * &truth.q * g.transpose() + &gk * gk.transpose() * truth.r;
        max_asym = max_asym.max(symmetrize(&mut sigma));
        entries.push(sigma.view((0, 0), (dim, dim)).into_owned());
    }
    let labels = (0..dim).map(|i| format!("x{i}")).collect();
    Ok(CovarianceTrace {
        entries,
        labels,
        max_asymmetry: max_asym,
    })
}

/// Prior variances of the initial position and velocity states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    pub position: f64,
    pub velocity: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            position: 100.0,
            velocity: 1.0,
        }
    }
}

/// Truth system of the constant-velocity example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSpec {
    pub tau_true: f64,
    pub sigma_xi2: f64,
    pub sigma_nu2: f64,
    pub priors: Priors,
}

impl TruthSpec {
    /// The truth GMP starts stationary, with variance `sigma_xi2`.
    pub fn model(&self, sampling: SamplingSpec) -> Result<LinearModel> {
        build_example_lds(
            self.tau_true,
            self.sigma_xi2,
            self.sigma_xi2,
            self.sigma_nu2,
            sampling,
            self.priors,
        )
    }
}

pub const STATE_LABELS: [&str; 3] = ["p0", "v", "xi"];
pub const POSITION: usize = 0;
pub const VELOCITY: usize = 1;

/// Initial position `p0`, constant velocity `v` and a GMP measurement error
/// `xi`, observed through `z_n = p0 + n dt v + xi_n + nu_n`.
pub fn build_example_lds(
    model_tau: f64,
    model_sigma_xi2: f64,
    model_sigma0_2: f64,
    sigma_nu2: f64,
    sampling: SamplingSpec,
    priors: Priors,
) -> Result<LinearModel> {
    check_positive("tau", model_tau)?;
    check_variance("sigma_xi2", model_sigma_xi2)?;
    check_variance("sigma0_2", model_sigma0_2)?;
    check_variance("sigma_nu2", sigma_nu2)?;
    check_variance("prior_position", priors.position)?;
    check_variance("prior_velocity", priors.velocity)?;
    let gm = discrete_params_raw(model_sigma_xi2, model_tau, sampling.dt());
    let phi = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, gm.alpha]));
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, gm.q_d]));
    let p0 = DMatrix::from_diagonal(&DVector::from_vec(vec![
        priors.position,
        priors.velocity,
        model_sigma0_2,
    ]));
    let obs = Observation {
        base: RowDVector::from_vec(vec![1.0, 0.0, 1.0]),
        slope: RowDVector::from_vec(vec![0.0, sampling.dt(), 0.0]),
    };
    LinearModel::new(phi, obs, q, sigma_nu2, p0)
}

/// Design model of the example system for a given bound.
pub fn design_model(bound: &BoundModel, truth: &TruthSpec, sampling: SamplingSpec) -> Result<LinearModel> {
    design_model_with_variance(bound, truth.sigma_xi2, truth, sampling)
}

/// Design model built from `sigma2` rather than the truth variance; with an
/// uncertain variance this is the upper end of its interval.
pub fn design_model_with_variance(
    bound: &BoundModel,
    sigma2: f64,
    truth: &TruthSpec,
    sampling: SamplingSpec,
) -> Result<LinearModel> {
    check_variance("sigma2", sigma2)?;
    build_example_lds(
        bound.tau_hat(),
        bound.variance(sigma2),
        bound.initial_variance(sigma2),
        truth.sigma_nu2,
        sampling,
        truth.priors,
    )
}

/// True `(p0, v)` error covariance of the example filter designed with `design`.
pub fn true_error_covariance(
    design: &LinearModel,
    gains: &GainSchedule,
    truth: &TruthSpec,
    sampling: SamplingSpec,
    steps: usize,
) -> Result<CovarianceTrace> {
    let truth_model = truth.model(sampling)?;
    let mut trace = true_error_covariance_with(design, gains, &truth_model, steps)?;
    trace.labels = STATE_LABELS.iter().map(|s| s.to_string()).collect();
    Ok(trace.block(&[POSITION, VELOCITY]))
}

pub const MODEL_STATIONARY_CONTINUOUS: &str = "stationary-continuous";
pub const MODEL_STATIONARY_DISCRETE: &str = "stationary-discrete";
pub const MODEL_NON_STATIONARY: &str = "non-stationary";
pub const MODEL_ORACLE: &str = "oracle";

#[derive(Debug, Clone, PartialEq)]
pub struct DemoTrace {
    pub name: String,
    pub bound: BoundModel,
    pub predicted_sigma_pos: Vec<f64>,
    pub true_sigma_pos: Vec<f64>,
}

/// The standard design models for `interval`, plus a truth-matched oracle.
pub fn demo_models(interval: &TauInterval, sampling: SamplingSpec, tau_true: f64) -> Result<Vec<(String, BoundModel)>> {
    let cont = continuous_bound(interval);
    let k0 = nonstationary_k0(interval, sampling, &cont)?;
    Ok(vec![
        (MODEL_STATIONARY_CONTINUOUS.to_string(), cont),
        (
            MODEL_STATIONARY_DISCRETE.to_string(),
            discrete_bound(interval, sampling),
        ),
        (MODEL_NON_STATIONARY.to_string(), cont.with_k0(k0, sampling)?),
        (MODEL_ORACLE.to_string(), BoundModel::custom(tau_true, 1.0)?),
    ])
}

/// One predicted/true position-sigma pair per design model.
pub fn run_model(
    name: &str,
    bound: &BoundModel,
    truth: &TruthSpec,
    sampling: SamplingSpec,
    steps: usize,
) -> Result<DemoTrace> {
    run_model_with_variance(name, bound, truth.sigma_xi2, truth, sampling, steps)
}

/// [`run_model`] with the design built from `sigma2`.
pub fn run_model_with_variance(
    name: &str,
    bound: &BoundModel,
    sigma2: f64,
    truth: &TruthSpec,
    sampling: SamplingSpec,
    steps: usize,
) -> Result<DemoTrace> {
    let design = design_model_with_variance(bound, sigma2, truth, sampling)?;
    let (predicted, gains) = riccati_run(&design, steps)?;
    let actual = true_error_covariance(&design, &gains, truth, sampling, steps)?;
    Ok(DemoTrace {
        name: name.to_string(),
        bound: *bound,
        predicted_sigma_pos: predicted.sigma(POSITION),
        true_sigma_pos: actual.sigma(0),
    })
}

/// Runs the standard models followed by any `extra` comparison models.
pub fn run_demo_suite(
    interval: &TauInterval,
    sampling: SamplingSpec,
    truth: &TruthSpec,
    steps: usize,
    extra: &[(String, BoundModel)],
) -> Result<Vec<DemoTrace>> {
    run_demo_suite_with_variance(interval, sampling, truth, truth.sigma_xi2, steps, extra)
}

/// [`run_demo_suite`] with the bound designs built from `sigma2`. The oracle
/// model always uses the truth variance.
pub fn run_demo_suite_with_variance(
    interval: &TauInterval,
    sampling: SamplingSpec,
    truth: &TruthSpec,
    sigma2: f64,
    steps: usize,
    extra: &[(String, BoundModel)],
) -> Result<Vec<DemoTrace>> {
    let mut models = demo_models(interval, sampling, truth.tau_true)?;
    models.extend(extra.iter().cloned());
    models
        .par_iter()
        .map(|(name, bound)| {
            let s2 = if name == MODEL_ORACLE { truth.sigma_xi2 } else { sigma2 };
            run_model_with_variance(name, bound, s2, truth, sampling, steps)
        })
        .collect()
}

/// Averages `m` with its transpose; returns the relative asymmetry removed.
fn symmetrize(m: &mut DMatrix<f64>) -> f64 {
    let scale = m.amax();
    let t = m.transpose();
    let asym = (&*m - &t).amax();
    *m = (&*m + t) * 0.5;
    if scale > 0.0 {
        asym / scale
    } else {
        0.0
    }
}

fn check_psd(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    let scale = m.amax();
    if asym > 1e-12 * scale.max(1.0) {
        return Err(invalid(name, "must be symmetric"));
    }
    if m.nrows() == 0 {
        return Ok(());
    }
    let min = m.clone().symmetric_eigenvalues().min();
    if min < -PSD_REL_TOL * m.trace().abs().max(f64::MIN_POSITIVE) {
        return Err(invalid(
            name,
            format!("must be positive semidefinite, min eigenvalue {min:e}"),
        ));
    }
    Ok(())
}
