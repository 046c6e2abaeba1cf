//! First-order Gauss-Markov process (GMP) primitives.
//!
//! A GMP is described by its stationary variance `sigma2` and its correlation
//! time constant `tau`. This module holds the validated parameter types and the
//! closed forms that every other module builds on: continuous and sampled power
//! spectral densities, the one-step discrete transition, and the autocovariance
//! of a (possibly non-stationary) sampled GMP.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A stationary first-order GMP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGmpSpec")]
pub struct GmpSpec {
    sigma2: f64,
    tau: f64,
}

#[derive(Deserialize)]
struct RawGmpSpec {
    sigma2: f64,
    tau: f64,
}

impl TryFrom<RawGmpSpec> for GmpSpec {
    type Error = crate::Error;

    fn try_from(raw: RawGmpSpec) -> Result<Self> {
        GmpSpec::new(raw.sigma2, raw.tau)
    }
}

impl GmpSpec {
    pub fn new(sigma2: f64, tau: f64) -> Result<Self> {
        check_variance("sigma2", sigma2)?;
        check_positive("tau", tau)?;
        Ok(Self { sigma2, tau })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Inverse time constant `1/tau`.
    pub fn beta(&self) -> f64 {
        1.0 / self.tau
    }

    /// One-step correlation `exp(-dt/tau)` at the given sampling interval.
    pub fn alpha(&self, sampling: SamplingSpec) -> f64 {
        (-sampling.dt() / self.tau).exp()
    }
}

/// The interval `[tau_min, tau_max]` known to contain the true time constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTauInterval")]
pub struct TauInterval {
    tau_min: f64,
    tau_max: f64,
}

#[derive(Deserialize)]
struct RawTauInterval {
    tau_min: f64,
    tau_max: f64,
}

impl TryFrom<RawTauInterval> for TauInterval {
    type Error = crate::Error;

    fn try_from(raw: RawTauInterval) -> Result<Self> {
        TauInterval::new(raw.tau_min, raw.tau_max)
    }
}

impl TauInterval {
    pub fn new(tau_min: f64, tau_max: f64) -> Result<Self> {
        check_positive("tau_min", tau_min)?;
        check_positive("tau_max", tau_max)?;
        if tau_max < tau_min {
            return Err(invalid("tau_max", "tau_max < tau_min"));
        }
        Ok(Self { tau_min, tau_max })
    }

    /// The degenerate interval `[tau, tau]`.
    pub fn exact(tau: f64) -> Result<Self> {
        Self::new(tau, tau)
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn is_degenerate(&self) -> bool {
        self.tau_min == self.tau_max
    }

    pub fn contains(&self, tau: f64) -> bool {
        tau >= self.tau_min && tau <= self.tau_max
    }

    /// `count` log-spaced time constants covering the interval, endpoints
    /// included exactly.
    pub fn log_grid(&self, count: usize) -> Vec<f64> {
        crate::grid::log_space(self.tau_min, self.tau_max, count)
    }
}

/// A variance only known to lie in `[min, max]`. Bounds are built from `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceInterval {
    min: f64,
    max: f64,
}

impl VarianceInterval {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        check_variance("sigma2_min", min)?;
        check_variance("sigma2_max", max)?;
        if max < min {
            return Err(invalid("sigma2_max", "sigma2_max < sigma2_min"));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    /// The variance a bounding model must be built from.
    pub fn bounding_variance(&self) -> f64 {
        self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SamplingSpec {
    dt: f64,
}

impl TryFrom<f64> for SamplingSpec {
    type Error = crate::Error;

    fn try_from(dt: f64) -> Result<Self> {
        SamplingSpec::new(dt)
    }
}

impl From<SamplingSpec> for f64 {
    fn from(s: SamplingSpec) -> f64 {
        s.dt
    }
}

impl SamplingSpec {
    pub fn new(dt: f64) -> Result<Self> {
        check_positive("dt", dt)?;
        Ok(Self { dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Nyquist angular frequency `pi/dt` in rad/s.
    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }
}

/// Per-step transition of a sampled GMP: `a_n = alpha a_{n-1} + sqrt(q_d) w_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteGmpParams {
    pub alpha: f64,
    pub q_d: f64,
}

/// Power spectral density of a continuous-time GMP at angular frequency `omega`.
pub fn psd_continuous(omega: f64, spec: &GmpSpec) -> Result<f64> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(invalid("omega", format!("must be finite and >= 0, got {omega}")));
    }
    Ok(psd_continuous_unchecked(omega, spec.sigma2, spec.tau))
}

/// `2 sigma2 / tau / (omega^2 + 1/tau^2)`, written to stay finite for large tau.
pub(crate) fn psd_continuous_unchecked(omega: f64, sigma2: f64, tau: f64) -> f64 {
    let wt = omega * tau;
    2.0 * sigma2 * tau / (1.0 + wt * wt)
}

/// Power spectral density of a GMP sampled every `dt`, on `[0, pi/dt]`.
pub fn psd_discrete(omega: f64, spec: &GmpSpec, sampling: SamplingSpec) -> Result<f64> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(invalid("omega", format!("must be finite and >= 0, got {omega}")));
    }
    // pi/dt computed by the caller may differ from ours in the last ulp
    if omega > sampling.nyquist() * (1.0 + 4.0 * f64::EPSILON) {
        return Err(invalid(
            "omega",
            format!("{omega} rad/s is beyond the Nyquist frequency {}", sampling.nyquist()),
        ));
    }
    Ok(psd_discrete_unchecked(omega, spec.sigma2, spec.tau, sampling.dt))
}

pub(crate) fn psd_discrete_unchecked(omega: f64, sigma2: f64, tau: f64, dt: f64) -> f64 {
    let x = dt / tau;
    let alpha = (-x).exp();
    let one_minus_alpha = -(-x).exp_m1();
    let one_minus_alpha2 = -(-2.0 * x).exp_m1();
    // 1 + a^2 - 2a cos(w dt) == (1 - a)^2 + 4a sin^2(w dt / 2)
    let s = (0.5 * omega * dt).sin();
    let denom = one_minus_alpha * one_minus_alpha + 4.0 * alpha * s * s;
    sigma2 * dt * one_minus_alpha2 / denom
}

pub fn gmp_discrete_params(spec: &GmpSpec, sampling: SamplingSpec) -> DiscreteGmpParams {
    discrete_params_raw(spec.sigma2, spec.tau, sampling.dt)
}

pub(crate) fn discrete_params_raw(sigma2: f64, tau: f64, dt: f64) -> DiscreteGmpParams {
    let x = dt / tau;
    DiscreteGmpParams {
        alpha: (-x).exp(),
        q_d: sigma2 * -(-2.0 * x).exp_m1(),
    }
}

/// `E[a_n a_p]` for a sampled GMP started from `a_0 ~ N(0, sigma0_2)`.
///
/// `alpha` is the one-step correlation and is expected in `[0, 1]`. The
/// result is symmetric in `(n, p)` and reduces to `sigma2 alpha^|p-n|` when
/// `sigma0_2 == sigma2`.
pub fn autocov_nonstationary(n: usize, p: usize, sigma0_2: f64, spec: &GmpSpec, alpha: f64) -> f64 {
    autocov_raw(n, p, sigma0_2, spec.sigma2, alpha)
}

pub(crate) fn autocov_raw(n: usize, p: usize, sigma0_2: f64, sigma2: f64, alpha: f64) -> f64 {
    let (lo, hi) = if n <= p { (n, p) } else { (p, n) };
    let lag = alpha.powi(to_exp(hi - lo));
    let decay = alpha.powi(to_exp(2 * lo));
    // Written around sigma2 so that sigma0_2 == sigma2 reduces exactly.
    lag * (sigma2 + decay * (sigma0_2 - sigma2))
}

pub(crate) fn to_exp(m: usize) -> i32 {
    i32::try_from(m).expect("time index exceeds i32 range")
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

pub(crate) fn check_variance(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn spec(sigma2: f64, tau: f64) -> GmpSpec {
        GmpSpec::new(sigma2, tau).unwrap()
    }

    #[test]
    fn psd_at_dc_is_two_sigma2_tau() {
        assert_relative_eq!(psd_continuous(0.0, &spec(1.0, 100.0)).unwrap(), 200.0);
    }

    #[test]
    fn psd_half_power_point() {
        let s = spec(1.0, 10.0);
        assert_relative_eq!(psd_continuous(0.1, &s).unwrap(), 10.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_power_process() {
        let s = spec(0.0, 50.0);
        for w in [0.0, 0.3, 7.0, 1e6] {
            assert_eq!(psd_continuous(w, &s).unwrap(), 0.0);
        }
        let ts = SamplingSpec::new(1.0).unwrap();
        assert_eq!(psd_discrete(1.0, &s, ts).unwrap(), 0.0);
    }

    #[test]
    fn psd_continuous_strictly_decreasing() {
        let s = spec(2.5, 13.0);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let w = 1e-4 * 1.1f64.powi(i);
            let v = psd_continuous(w, &s).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(GmpSpec::new(-1.0, 1.0).is_err());
        assert!(GmpSpec::new(1.0, 0.0).is_err());
        assert!(GmpSpec::new(1.0, f64::NAN).is_err());
        assert!(TauInterval::new(100.0, 10.0).is_err());
        assert!(SamplingSpec::new(0.0).is_err());
        assert!(psd_continuous(-1.0, &spec(1.0, 1.0)).is_err());
        let err = TauInterval::new(100.0, 10.0).unwrap_err().to_string();
        assert!(err.contains("tau_max < tau_min"), "{err}");
    }

    #[test]
    fn discrete_psd_reference_values() {
        let s = spec(1.0, 10.0);
        let ts = SamplingSpec::new(1.0).unwrap();
        // direct evaluation with a = e^-0.1
        let a = (-0.1f64).exp();
        let dc = (1.0 - a * a) / (1.0 + a * a - 2.0 * a);
        let ny = (1.0 - a * a) / (1.0 + a * a + 2.0 * a);
        assert_relative_eq!(psd_discrete(0.0, &s, ts).unwrap(), dc, max_relative = 1e-13);
        assert_relative_eq!(dc, 20.016661, max_relative = 1e-6);
        assert_relative_eq!(psd_discrete(ts.nyquist(), &s, ts).unwrap(), ny, max_relative = 1e-13);
        assert_relative_eq!(ny, 0.0499584, max_relative = 1e-5);
    }

    #[test]
    fn discrete_psd_rejects_beyond_nyquist() {
        let ts = SamplingSpec::new(2.0).unwrap();
        assert!(psd_discrete(ts.nyquist() * 1.01, &spec(1.0, 1.0), ts).is_err());
    }

    #[test]
    fn white_noise_limit() {
        let s = spec(3.0, 1e-6);
        let ts = SamplingSpec::new(0.5).unwrap();
        for w in [0.0, 1.0, ts.nyquist()] {
            assert_relative_eq!(psd_discrete(w, &s, ts).unwrap(), 1.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn discrete_params_reference() {
        let p = gmp_discrete_params(&spec(1.0, 50.0), SamplingSpec::new(1.0).unwrap());
        assert_relative_eq!(p.alpha, 0.980199, epsilon = 1e-6);
        assert_relative_eq!(p.q_d, 0.039211, epsilon = 1e-6);

        let p = gmp_discrete_params(&spec(1.0, 1e12), SamplingSpec::new(1.0).unwrap());
        assert!(p.alpha > 1.0 - 1e-11 && p.q_d < 1e-11);
        let p = gmp_discrete_params(&spec(1.0, 5.0), SamplingSpec::new(1e-9).unwrap());
        assert!(p.alpha > 1.0 - 1e-9 && p.q_d < 1e-9);
    }

    #[test]
    fn autocov_origin_and_stationary_reduction() {
        let s = spec(1.7, 1.0);
        assert_eq!(autocov_nonstationary(0, 0, 4.2, &s, 0.8), 4.2);
        for (n, p) in [(0, 3), (2, 2), (5, 11)] {
            let got = autocov_nonstationary(n, p, 1.7, &s, 0.8);
            assert_relative_eq!(got, 1.7 * 0.8f64.powi((p - n) as i32), max_relative = 1e-14);
        }
    }

    #[test]
    fn autocov_cross_term_reference() {
        // (n, p) = (1, 3), sigma0^2 = 2, sigma^2 = 1, alpha = 0.5:
        // 0.5^4 * 2 + (1 - 0.25) * 0.25 = 0.125 + 0.1875
        let s = spec(1.0, 1.0);
        assert_relative_eq!(autocov_nonstationary(1, 3, 2.0, &s, 0.5), 0.3125, max_relative = 1e-15);
        assert_eq!(
            autocov_nonstationary(1, 3, 2.0, &s, 0.5),
            autocov_nonstationary(3, 1, 2.0, &s, 0.5)
        );
    }

    #[test]
    fn serde_validates() {
        let bad: std::result::Result<TauInterval, _> = toml::from_str("tau_min = 5.0\ntau_max = 1.0");
        assert!(bad.is_err());
        let ok: TauInterval = toml::from_str("tau_min = 1.0\ntau_max = 5.0").unwrap();
        assert_eq!(ok.tau_max(), 5.0);
    }
}
