use crate::error::{invalid, Result};
use crate::gmp::{SamplingSpec, TauInterval};

/// Strictly increasing, non-negative angular frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    values: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("freq_grid", "grid is empty"));
        }
        if values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("freq_grid", "frequencies must be finite and >= 0"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("freq_grid", "frequencies must be strictly increasing"));
        }
        Ok(Self { values })
    }

    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || count < 2 {
            return Err(invalid("freq_grid", "log grid needs 0 < lo < hi and count >= 2"));
        }
        Self::new(log_space(lo, hi, count))
    }

    /// `count` linearly spaced points on `[0, pi/dt]`; both ends are exact.
    pub fn nyquist_linear(sampling: SamplingSpec, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(invalid("freq_grid", "linear grid needs count >= 2"));
        }
        let mut values = lin_space(0.0, sampling.nyquist(), count);
        values[0] = 0.0;
        values[count - 1] = sampling.nyquist();
        Self::new(values)
    }

    /// Default continuous grid: `count` points over `[1e-3/tau_max, 1e3/tau_min]`.
    pub fn default_continuous(interval: &TauInterval, count: usize) -> Result<Self> {
        Self::log_spaced(1e-3 / interval.tau_max(), 1e3 / interval.tau_min(), count)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("grid is non-empty")
    }
}

pub(crate) fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ if lo == hi => vec![lo; count],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let last = (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|i| (a + (b - a) * i as f64 / last).exp()).collect();
            v[0] = lo;
            v[count - 1] = hi;
            v
        }
    }
}

pub(crate) fn lin_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = (count - 1) as f64;
            (0..count).map(|i| lo + (hi - lo) * i as f64 / last).collect()
        }
    }
}
