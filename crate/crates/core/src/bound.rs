//! Overbound models for a GMP whose time constant is only known to lie in an
//! interval.
//!
//! Three flavours are provided:
//!
//! * [`continuous_bound`]: the tightest stationary model in the continuous-time
//!   PSD domain, `tau_hat = sqrt(tau_min tau_max)`, `k = sqrt(tau_max/tau_min)`.
//! * [`discrete_bound`]: the same construction carried out on the sampled PSD
//!   over `[0, pi/dt]`, which relaxes `k` once `dt` approaches `tau_min`.
//! * [`nonstationary_k0`]: the smallest initial variance inflation `k0` that
//!   keeps every 2x2 autocovariance matrix of the model above the truth.

use std::fmt;

use nalgebra::Matrix2;

use crate::error::{invalid, Error, Result};
use crate::gmp::{autocov_raw, SamplingSpec, TauInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundMode {
    ContinuousStationary,
    DiscreteStationary,
    NonStationary,
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMode::ContinuousStationary => "continuous-stationary",
            BoundMode::DiscreteStationary => "discrete-stationary",
            BoundMode::NonStationary => "non-stationary",
        })
    }
}

/// A GMP overbound: time constant `tau_hat`, stationary variance inflation
/// `k` and, for the non-stationary model, initial variance inflation `k0`.
///
/// Variances are expressed relative to the truth variance, so the model's
/// stationary variance is `k sigma2` and its initial variance `k0 sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundModel {
    tau_hat: f64,
    k: f64,
    k0: Option<f64>,
    mode: BoundMode,
    sampling: Option<SamplingSpec>,
}

impl BoundModel {
    /// A user-supplied stationary model. Used for comparisons and for
    /// deliberately non-bounding designs.
    pub fn custom(tau_hat: f64, k: f64) -> Result<Self> {
        crate::gmp::check_positive("tau_hat", tau_hat)?;
        if !(k.is_finite() && k >= 1.0) {
            return Err(invalid("k", format!("must be finite and >= 1, got {k}")));
        }
        Ok(Self {
            tau_hat,
            k,
            k0: None,
            mode: BoundMode::ContinuousStationary,
            sampling: None,
        })
    }

    /// Turns this model into a non-stationary one started at `k0 sigma2`.
    pub fn with_k0(self, k0: f64, sampling: SamplingSpec) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(invalid("k0", format!("must be finite and > 0, got {k0}")));
        }
        Ok(Self {
            k0: Some(k0),
            mode: BoundMode::NonStationary,
            sampling: Some(sampling),
            ..self
        })
    }

    pub fn tau_hat(&self) -> f64 {
        self.tau_hat
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn k0(&self) -> Option<f64> {
        self.k0
    }

    pub fn mode(&self) -> BoundMode {
        self.mode
    }

    pub fn sampling(&self) -> Option<SamplingSpec> {
        self.sampling
    }

    /// Stationary variance of the model for truth variance `sigma2`.
    pub fn variance(&self, sigma2: f64) -> f64 {
        self.k * sigma2
    }

    /// Initial variance: `k0 sigma2` when non-stationary, `k sigma2` otherwise.
    pub fn initial_variance(&self, sigma2: f64) -> f64 {
        self.k0.unwrap_or(self.k) * sigma2
    }
}

/// Tightest stationary continuous-time bound over `interval`.
///
/// Both PSD constraints hold with equality: `k tau_hat = tau_max` and
/// `k / tau_hat = 1 / tau_min`.
pub fn continuous_bound(interval: &TauInterval) -> BoundModel {
    let (lo, hi) = (interval.tau_min(), interval.tau_max());
    let (tau_hat, k) = if interval.is_degenerate() {
        (lo, 1.0)
    } else {
        ((lo * hi).sqrt(), (hi / lo).sqrt())
    };
    BoundModel {
        tau_hat,
        k,
        k0: None,
        mode: BoundMode::ContinuousStationary,
        sampling: None,
    }
}

/// Tightest stationary bound derived directly on the sampled PSD.
///
/// With `a = exp(-dt/tau_min)` and `b = exp(-dt/tau_max)`, the low-frequency
/// constraint binds at `b` and the Nyquist constraint at `a`. Their
/// intersection gives
///
/// ```text
/// k_d^2 = (1 + b)(1 - a) / ((1 - b)(1 + a))
/// (1 - a_hat)/(1 + a_hat) = sqrt((1 - a)(1 - b) / ((1 + a)(1 + b)))
/// ```
pub fn discrete_bound(interval: &TauInterval, sampling: SamplingSpec) -> BoundModel {
    let dt = sampling.dt();
    let (tau_hat, k) = if interval.is_degenerate() {
        (interval.tau_min(), 1.0)
    } else {
        let x_min = dt / interval.tau_min();
        let x_max = dt / interval.tau_max();
        let (a, b) = ((-x_min).exp(), (-x_max).exp());
        let one_minus_a = -(-x_min).exp_m1();
        let one_minus_b = -(-x_max).exp_m1();
        let k = ((1.0 + b) * one_minus_a / (one_minus_b * (1.0 + a))).sqrt();
        let r = (one_minus_a * one_minus_b / ((1.0 + a) * (1.0 + b))).sqrt();
        // a_hat = (1 - r)/(1 + r), so -ln(a_hat) = 2 atanh(r)
        (dt / (2.0 * r.atanh()), k)
    };
    BoundModel {
        tau_hat,
        k,
        k0: None,
        mode: BoundMode::DiscreteStationary,
        sampling: Some(sampling),
    }
}

/// Minimum initial inflation `k0` for the non-stationary version of `bound`.
///
/// The binding point of the 2x2 autocovariance ordering is `n = 0`, `p = 1`,
/// `tau = tau_min`; `verify::k0_binding_point_scan` checks this against a full
/// grid. The result is never below 1, which the `(0, 0)` entry requires.
pub fn nonstationary_k0(interval: &TauInterval, sampling: SamplingSpec, bound: &BoundModel) -> Result<f64> {
    if interval.is_degenerate() {
        return Ok(1.0);
    }
    let dt = sampling.dt();
    let k = bound.k();
    let u = -(-dt / bound.tau_hat()).exp_m1(); // 1 - a_hat
    let v = -(-dt / interval.tau_min()).exp_m1(); // 1 - a
    let one_minus_ahat2 = u * (2.0 - u);
    let one_minus_a2 = v * (2.0 - v);
    // k (1 - a_hat^2) - 1 + a^2
    let num = k * one_minus_ahat2 - one_minus_a2;
    // k (1 - a_hat^2) - 1 - a_hat^2 + 2 a a_hat
    let den = k * one_minus_ahat2 - u * u - 2.0 * (1.0 - u) * v;
    if den.is_nan() || den <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("k0 condition degenerates (denominator {den:e}) for dt = {dt}"),
        });
    }
    Ok((num / den).max(1.0))
}

/// Convenience: the continuous bound with its minimal `k0` attached.
pub fn nonstationary_bound(interval: &TauInterval, sampling: SamplingSpec) -> Result<BoundModel> {
    let stationary = continuous_bound(interval);
    let k0 = nonstationary_k0(interval, sampling, &stationary)?;
    stationary.with_k0(k0, sampling)
}

/// Autocovariance matrix `[[r_nn, r_np], [r_np, r_pp]]` of the model process.
pub fn acm2(n: usize, p: usize, bound: &BoundModel, sigma2: f64, sampling: SamplingSpec) -> Matrix2<f64> {
    let alpha_hat = (-sampling.dt() / bound.tau_hat()).exp();
    let s0 = bound.initial_variance(sigma2);
    let s = bound.variance(sigma2);
    let r_nn = autocov_raw(n, n, s0, s, alpha_hat);
    let r_np = autocov_raw(n, p, s0, s, alpha_hat);
    let r_pp = autocov_raw(p, p, s0, s, alpha_hat);
    Matrix2::new(r_nn, r_np, r_np, r_pp)
}

/// Autocovariance matrix of the stationary truth with time constant `tau`.
pub fn truth_acm2(n: usize, p: usize, tau: f64, sigma2: f64, sampling: SamplingSpec) -> Matrix2<f64> {
    let alpha = (-sampling.dt() / tau).exp();
    let r_np = autocov_raw(n, p, sigma2, sigma2, alpha);
    Matrix2::new(sigma2, r_np, r_np, sigma2)
}
