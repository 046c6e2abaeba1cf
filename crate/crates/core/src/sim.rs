//! Seeded simulation of GMP sequences and of the example filter.
//!
//! Realization `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so
//! results do not depend on thread count or scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::gmp::{autocov_nonstationary, check_variance, GmpSpec, SamplingSpec};
use crate::kf::{GainSchedule, LinearModel};

pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmpRealization {
    /// `a_0 ..= a_N`
    pub samples: Vec<f64>,
    pub spec: GmpSpec,
    pub sigma0_2: f64,
    pub index: u64,
}

/// `count` realizations of `a_n = alpha a_{n-1} + sqrt(sigma2 (1 - alpha^2)) w_n`
/// with `a_0 ~ N(0, sigma0_2)`.
pub fn simulate_gmp(
    spec: &GmpSpec,
    sigma0_2: f64,
    sampling: SamplingSpec,
    steps: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<GmpRealization>> {
    check_variance("sigma0_2", sigma0_2)?;
    if count == 0 {
        return Err(invalid("count", "must be >= 1"));
    }
    let gm = crate::gmp::gmp_discrete_params(spec, sampling);
    let (s0, sq) = (sigma0_2.sqrt(), gm.q_d.sqrt());
    Ok((0..count as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = realization_rng(seed, index);
            let mut samples = Vec::with_capacity(steps + 1);
            let mut a = s0 * normal(&mut rng);
            samples.push(a);
            for _ in 0..steps {
                a = gm.alpha * a + sq * normal(&mut rng);
                samples.push(a);
            }
            GmpRealization {
                samples,
                spec: *spec,
                sigma0_2,
                index,
            }
        })
        .collect())
}

/// Sample mean of `values` and its standard error.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// One analytic value compared against a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCheck {
    pub label: String,
    pub index: usize,
    pub analytic: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub band: f64,
}

impl BandCheck {
    fn new(label: &str, index: usize, analytic: f64, samples: &[f64], band: f64) -> Self {
        let (estimate, std_error) = mean_and_std_error(samples);
        Self {
            label: label.to_string(),
            index,
            analytic,
            estimate,
            std_error,
            band,
        }
    }

    pub fn inside(&self) -> bool {
        (self.estimate - self.analytic).abs() <= self.band * self.std_error
    }

    /// `|estimate - analytic|` in standard errors.
    pub fn z_score(&self) -> f64 {
        let d = (self.estimate - self.analytic).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Ensemble `E[a_base a_{base+lag}]` against the closed-form autocovariance.
#[allow(clippy::too_many_arguments)]
pub fn check_gmp_autocov(
    spec: &GmpSpec,
    sigma0_2: f64,
    sampling: SamplingSpec,
    base: usize,
    lags: &[usize],
    seed: u64,
    count: usize,
    band: f64,
) -> Result<Vec<BandCheck>> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let runs = simulate_gmp(spec, sigma0_2, sampling, base + max_lag, seed, count)?;
    let alpha = spec.alpha(sampling);
    Ok(lags
        .iter()
        .map(|&lag| {
            let products: Vec<f64> = runs.iter().map(|r| r.samples[base] * r.samples[base + lag]).collect();
            let analytic = autocov_nonstationary(base, base + lag, sigma0_2, spec, alpha);
            BandCheck::new("autocov", lag, analytic, &products, band)
        })
        .collect())
}

/// Column-major dense factor `L` with `L L^T = m` for a PSD matrix.
fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut f = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    f
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let n = m.nrows();
    for i in 0..n {
        out[i] = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
    }
}

/// Simulated filter errors `x_hat - x` of `state` at the requested steps.
///
/// The filter runs the design model with the given gains on measurements
/// produced by `truth`. Returns one row per realization.
pub fn simulate_filter_errors(
    design: &LinearModel,
    gains: &GainSchedule,
    truth: &LinearModel,
    state: usize,
    sample_steps: &[usize],
    seed: u64,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let dim = design.dim();
    if truth.dim() != dim || state >= dim {
        return Err(invalid(
            "state",
            "truth/design dimension mismatch or state out of range",
        ));
    }
    let horizon = sample_steps.iter().copied().max().unwrap_or(0);
    if horizon > gains.horizon() {
        return Err(crate::Error::HorizonMismatch {
            available: gains.horizon(),
            requested: horizon,
        });
    }
    if count == 0 {
        return Err(invalid("count", "must be >= 1"));
    }
    let p0_factor = psd_factor(truth.p0());
    let q_factor = psd_factor(truth.q());
    let r_sd = truth.r().sqrt();
    let h_rows: Vec<Vec<f64>> = (1..=horizon).map(|n| truth.h(n).iter().copied().collect()).collect();
    let hd_rows: Vec<Vec<f64>> = (1..=horizon).map(|n| design.h(n).iter().copied().collect()).collect();
    let gain_vecs: Vec<Vec<f64>> = gains.gains.iter().map(|g| g.iter().copied().collect()).collect();

    Ok((0..count as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = realization_rng(seed, index);
            let mut w = vec![0.0; dim];
            let mut x = vec![0.0; dim];
            let mut xh = vec![0.0; dim];
            let mut tmp = vec![0.0; dim];
            w.iter_mut().for_each(|v| *v = normal(&mut rng));
            mat_vec(&p0_factor, &w, &mut x);
            let mut out = Vec::with_capacity(sample_steps.len());
            for n in 1..=horizon {
                // truth
                mat_vec(truth.phi(), &x, &mut tmp);
                w.iter_mut().for_each(|v| *v = normal(&mut rng));
                mat_vec(&q_factor, &w, &mut x);
                x.iter_mut().zip(&tmp).for_each(|(xi, ti)| *xi += ti);
                let h = &h_rows[n - 1];
                let z = h.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + r_sd * normal(&mut rng);
                // filter
                mat_vec(design.phi(), &xh, &mut tmp);
                let hd = &hd_rows[n - 1];
                let innov = z - hd.iter().zip(&tmp).map(|(a, b)| a * b).sum::<f64>();
                for ((xi, ti), ki) in xh.iter_mut().zip(&tmp).zip(&gain_vecs[n - 1]) {
                    *xi = ti + ki * innov;
                }
                if sample_steps.contains(&n) {
                    out.push(xh[state] - x[state]);
                }
            }
            out
        })
        .collect())
}

/// Ensemble error variance of `state` against an analytic variance trace.
///
/// `analytic[i]` is the variance at step `i + 1`.
pub fn check_filter_variance(
    errors: &[Vec<f64>],
    sample_steps: &[usize],
    analytic: &[f64],
    band: f64,
) -> Vec<BandCheck> {
    let mut sorted: Vec<usize> = sample_steps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted
        .iter()
        .enumerate()
        .map(|(col, &step)| {
            let sq: Vec<f64> = errors.iter().map(|row| row[col] * row[col]).collect();
            BandCheck::new("error_variance", step, analytic[step - 1], &sq, band)
        })
        .collect()
}
