//! Numerical verification of the bounding claims.
//!
//! Every check here evaluates the bound against the truth family on explicit
//! grids (frequency x tau, or time index x time index x tau) and reports the
//! worst point. Scans over tau run in parallel; per-tau results are collected
//! in grid order and reduced sequentially, so reports are deterministic.

use std::fmt;

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::bound::{acm2, truth_acm2, BoundModel};
use crate::error::{invalid, Result};
use crate::gmp::{psd_continuous_unchecked, psd_discrete_unchecked, SamplingSpec, TauInterval};
use crate::grid::FrequencyGrid;

/// Relative slack allowed on PSD dominance, scaled by the peak truth PSD.
pub const DOMINANCE_REL_TOL: f64 = 1e-12;
/// Relative slack allowed on semidefiniteness, scaled by the model ACM trace.
pub const SEMIDEF_REL_TOL: f64 = 1e-10;
/// Slack on the linear PSD constraints, relative to their natural scale.
pub const CONSTRAINT_TOL: f64 = 1e-12;

pub const DEFAULT_FREQ_COUNT: usize = 1000;
pub const DEFAULT_TAU_COUNT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    /// `k tau_hat - tau_max`
    pub residual_low_freq: f64,
    /// `k / tau_hat - 1 / tau_min`
    pub residual_high_freq: f64,
    pub low_freq_ok: bool,
    pub high_freq_ok: bool,
}

impl ConstraintCheck {
    pub fn passed(&self) -> bool {
        self.low_freq_ok && self.high_freq_ok
    }
}

/// Checks the two limiting-frequency constraints of a continuous stationary bound.
pub fn check_continuous_constraints(bound: &BoundModel, interval: &TauInterval) -> ConstraintCheck {
    let r1 = bound.k() * bound.tau_hat() - interval.tau_max();
    let r2 = bound.k() / bound.tau_hat() - 1.0 / interval.tau_min();
    ConstraintCheck {
        residual_low_freq: r1,
        residual_high_freq: r2,
        low_freq_ok: r1 >= -CONSTRAINT_TOL * interval.tau_max(),
        high_freq_ok: r2 >= -CONSTRAINT_TOL / interval.tau_min(),
    }
}

/// Worst violation per tau value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauViolation {
    pub tau: f64,
    pub omega: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// `max over grid of S(omega; tau) - S_hat(omega)`; positive means the
    /// truth pokes above the bound.
    pub max_violation: f64,
    pub argmax_omega: f64,
    pub argmax_tau: f64,
    pub freq_count: usize,
    pub tau_count: usize,
    pub tolerance: f64,
    pub per_tau: Vec<TauViolation>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }

    /// Smallest gap `S_hat - S` over the grid.
    pub fn margin(&self) -> f64 {
        -self.max_violation
    }
}

impl fmt::Display for DominanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "result: {}", verdict(self.passed()))?;
        writeln!(f, "max_violation: {:.15e}", self.max_violation)?;
        writeln!(f, "argmax_omega: {:.15e}", self.argmax_omega)?;
        writeln!(f, "argmax_tau: {:.15e}", self.argmax_tau)?;
        writeln!(f, "tolerance: {:.15e}", self.tolerance)?;
        writeln!(f, "freq_count: {}", self.freq_count)?;
        writeln!(f, "tau_count: {}", self.tau_count)?;
        writeln!(f)?;
        writeln!(f, "tau\tomega\tviolation")?;
        for row in self.per_tau.iter().filter(|r| r.violation > self.tolerance) {
            writeln!(f, "{:.15e}\t{:.15e}\t{:.15e}", row.tau, row.omega, row.violation)?;
        }
        Ok(())
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// PSD dominance of a stationary bound over the continuous-time truth family.
pub fn psd_dominance_continuous(
    bound: &BoundModel,
    interval: &TauInterval,
    sigma2: f64,
    freq_grid: &FrequencyGrid,
    tau_count: usize,
) -> Result<DominanceReport> {
    crate::gmp::check_variance("sigma2", sigma2)?;
    check_count("tau_count", tau_count)?;
    let s_hat = bound.variance(sigma2);
    let tau_hat = bound.tau_hat();
    let peak = 2.0 * sigma2 * interval.tau_max();
    dominance_scan(interval, freq_grid, tau_count, peak, |w, tau| {
        psd_continuous_unchecked(w, sigma2, tau) - psd_continuous_unchecked(w, s_hat, tau_hat)
    })
}

/// PSD dominance over the sampled truth family on `[0, pi/dt]`.
///
/// The bound's `tau_hat` and `k` are used at the given sampling interval
/// whatever domain they were derived in.
pub fn psd_dominance_discrete(
    bound: &BoundModel,
    interval: &TauInterval,
    sigma2: f64,
    sampling: SamplingSpec,
    freq_grid: &FrequencyGrid,
    tau_count: usize,
) -> Result<DominanceReport> {
    crate::gmp::check_variance("sigma2", sigma2)?;
    check_count("tau_count", tau_count)?;
    if freq_grid.max() > sampling.nyquist() * (1.0 + 4.0 * f64::EPSILON) {
        return Err(invalid("freq_grid", "grid extends beyond the Nyquist frequency"));
    }
    let dt = sampling.dt();
    let s_hat = bound.variance(sigma2);
    let tau_hat = bound.tau_hat();
    let peak = psd_discrete_unchecked(0.0, sigma2, interval.tau_max(), dt);
    dominance_scan(interval, freq_grid, tau_count, peak, |w, tau| {
        psd_discrete_unchecked(w, sigma2, tau, dt) - psd_discrete_unchecked(w, s_hat, tau_hat, dt)
    })
}

fn dominance_scan<F>(
    interval: &TauInterval,
    freq_grid: &FrequencyGrid,
    tau_count: usize,
    peak: f64,
    excess: F,
) -> Result<DominanceReport>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let taus = interval.log_grid(tau_count);
    let per_tau: Vec<TauViolation> = taus
        .par_iter()
        .map(|&tau| {
            let mut worst = TauViolation {
                tau,
                omega: freq_grid.values()[0],
                violation: f64::NEG_INFINITY,
            };
            for &w in freq_grid.values() {
                let v = excess(w, tau);
                if v > worst.violation {
                    worst.omega = w;
                    worst.violation = v;
                }
            }
            worst
        })
        .collect();
    let worst = per_tau
        .iter()
        .copied()
        .reduce(|a, b| if b.violation > a.violation { b } else { a })
        .expect("tau grid is non-empty");
    Ok(DominanceReport {
        max_violation: worst.violation,
        argmax_omega: worst.omega,
        argmax_tau: worst.tau,
        freq_count: freq_grid.len(),
        tau_count: taus.len(),
        tolerance: DOMINANCE_REL_TOL * peak.max(1.0),
        per_tau,
    })
}

/// Smallest eigenvalue of a symmetric 2x2 matrix, by two routes: the direct
/// closed form and `det / lambda_max`. The smaller (worse) one is returned.
pub fn min_eigenvalue_2x2(m: &Matrix2<f64>) -> f64 {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let radius = (0.5 * (a - c)).hypot(b);
    let direct = mean - radius;
    let lambda_max = mean + radius;
    let via_det = if lambda_max > 0.0 {
        (a * c - b * b) / lambda_max
    } else {
        direct
    };
    direct.min(via_det)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcmScanReport {
    pub min_eigenvalue: f64,
    pub min_determinant: f64,
    /// `(n, p, tau)` of the smallest eigenvalue.
    pub arg: (usize, usize, f64),
    /// `(n, p, tau)` of the smallest determinant.
    pub det_arg: (usize, usize, f64),
    pub tolerance: f64,
    pub points: usize,
}

impl AcmScanReport {
    pub fn passed(&self) -> bool {
        self.min_eigenvalue >= -self.tolerance
    }
}

impl fmt::Display for AcmScanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "result: {}", verdict(self.passed()))?;
        writeln!(f, "min_eigenvalue: {:.15e}", self.min_eigenvalue)?;
        writeln!(f, "min_determinant: {:.15e}", self.min_determinant)?;
        writeln!(f, "arg_n: {}", self.arg.0)?;
        writeln!(f, "arg_p: {}", self.arg.1)?;
        writeln!(f, "arg_tau: {:.15e}", self.arg.2)?;
        writeln!(f, "tolerance: {:.15e}", self.tolerance)?;
        writeln!(f, "points: {}", self.points)
    }
}

/// Scans `R_hat(n, p) - R(n, p)` for `0 <= n <= p <= n_max` and every tau on
/// a log grid. A bound without `k0` starts at its stationary variance.
pub fn acm_bound_scan(
    bound: &BoundModel,
    interval: &TauInterval,
    sigma2: f64,
    sampling: SamplingSpec,
    n_max: usize,
    tau_count: usize,
) -> Result<AcmScanReport> {
    crate::gmp::check_variance("sigma2", sigma2)?;
    check_count("tau_count", tau_count)?;
    let taus = interval.log_grid(tau_count);
    let scale = 2.0 * bound.variance(sigma2).max(bound.initial_variance(sigma2));
    // (min eigenvalue, arg, min det, det arg)
    type Worst = (f64, (usize, usize, f64), f64, (usize, usize, f64));
    let per_tau: Vec<Worst> = taus
        .par_iter()
        .map(|&tau| {
            let mut w: Worst = (f64::INFINITY, (0, 0, tau), f64::INFINITY, (0, 0, tau));
            for n in 0..=n_max {
                for p in n..=n_max {
                    let d = acm2(n, p, bound, sigma2, sampling) - truth_acm2(n, p, tau, sigma2, sampling);
                    let e = min_eigenvalue_2x2(&d);
                    if e < w.0 {
                        w.0 = e;
                        w.1 = (n, p, tau);
                    }
                    let det = d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)];
                    if det < w.2 {
                        w.2 = det;
                        w.3 = (n, p, tau);
                    }
                }
            }
            w
        })
        .collect();
    let mut worst = per_tau[0];
    for w in &per_tau[1..] {
        if w.0 < worst.0 {
            worst.0 = w.0;
            worst.1 = w.1;
        }
        if w.2 < worst.2 {
            worst.2 = w.2;
            worst.3 = w.3;
        }
    }
    Ok(AcmScanReport {
        min_eigenvalue: worst.0,
        min_determinant: worst.2,
        arg: worst.1,
        det_arg: worst.3,
        tolerance: SEMIDEF_REL_TOL * scale.max(f64::MIN_POSITIVE),
        points: taus.len() * (n_max + 1) * (n_max + 2) / 2,
    })
}

/// Outcome of the minimum-`k0` requirement at one `(n, p, tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum K0Requirement {
    /// Smallest `sigma0^2 / sigma^2` making the 2x2 difference semidefinite.
    Min(f64),
    /// The determinant is not increasing in `sigma0^2`; the coefficient is
    /// reported and the point excluded.
    Degenerate(f64),
}

/// Minimum initial inflation required at one `(n, p, tau)`, `n <= p`.
///
/// The difference `R_hat - R` has entries affine in `s0 = sigma0^2/sigma^2`
/// and the quadratic terms of its determinant cancel, so the three
/// conditions `d11 >= 0`, `d22 >= 0`, `det >= 0` each give a lower bound on
/// `s0`. For `n = 0` the determinant bound is
///
/// ```text
/// (k(1 - a_hat^2p) - 1 + a^2p) / (k(1 - a_hat^2p) - 1 - a_hat^2p + 2 a^p a_hat^p)
/// ```
pub fn k0_required(n: usize, p: usize, tau: f64, sampling: SamplingSpec, bound: &BoundModel) -> K0Requirement {
    let (n, p) = if n <= p { (n, p) } else { (p, n) };
    let dt = sampling.dt();
    let k = bound.k();
    let x_hat = dt / bound.tau_hat();
    let x = dt / tau;
    let (nf, pf) = (n as f64, p as f64);
    let an = (-2.0 * nf * x_hat).exp();
    let ap = (-2.0 * pf * x_hat).exp();
    let cross = (-(nf + pf) * x_hat).exp();
    let c1 = k * (1.0 - an) - 1.0;
    let c2 = k * (1.0 - ap) - 1.0;
    let diag = (-c1 / an).max(-c2 / ap);
    if n == p {
        return K0Requirement::Min(diag);
    }
    let lag = pf - nf;
    let off = k * (1.0 - an) * (-lag * x_hat).exp() - (-lag * x).exp();
    let a = an * c2 + ap * c1 - 2.0 * cross * off;
    let b = c1 * c2 - off * off;
    if a > 0.0 {
        K0Requirement::Min(diag.max(-b / a))
    } else {
        K0Requirement::Degenerate(a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct K0ScanReport {
    pub global_max: f64,
    /// `(n, p, tau)` of the global maximum.
    pub argmax: (usize, usize, f64),
    pub taus: Vec<f64>,
    /// Requirement at `n = 0` for `p = 1..=p_max`, one row per tau.
    pub curves_n0: Vec<Vec<f64>>,
    /// Largest requirement over `(p, tau)` for each `n = 0..=n_max`.
    pub max_by_n: Vec<f64>,
    /// Points excluded because the determinant coefficient was not positive.
    pub flagged: Vec<(usize, usize, f64, f64)>,
}

impl K0ScanReport {
    pub fn warnings(&self) -> Vec<String> {
        self.flagged
            .iter()
            .map(|(n, p, tau, a)| format!("k0 condition degenerate at n={n} p={p} tau={tau}: coefficient {a:e}"))
            .collect()
    }
}

/// Evaluates [`k0_required`] on `0 <= n <= n_max`, `n <= p <= p_max` and a log
/// grid of `tau_count` time constants.
pub fn k0_binding_point_scan(
    interval: &TauInterval,
    sampling: SamplingSpec,
    bound: &BoundModel,
    n_max: usize,
    p_max: usize,
    tau_count: usize,
) -> Result<K0ScanReport> {
    check_count("tau_count", tau_count)?;
    if p_max < 1 || n_max > p_max {
        return Err(invalid("p_max", "need p_max >= 1 and n_max <= p_max"));
    }
    let taus = interval.log_grid(tau_count);
    if interval.is_degenerate() {
        return Ok(K0ScanReport {
            global_max: 1.0,
            argmax: (0, 1, interval.tau_min()),
            curves_n0: vec![vec![1.0; p_max]; taus.len()],
            max_by_n: vec![1.0; n_max + 1],
            taus,
            flagged: Vec::new(),
        });
    }

    struct PerTau {
        curve: Vec<f64>,
        max_by_n: Vec<f64>,
        best: (f64, usize, usize),
        flagged: Vec<(usize, usize, f64, f64)>,
    }

    let per_tau: Vec<PerTau> = taus
        .par_iter()
        .map(|&tau| {
            let mut out = PerTau {
                curve: Vec::with_capacity(p_max),
                max_by_n: vec![f64::NEG_INFINITY; n_max + 1],
                best: (f64::NEG_INFINITY, 0, 0),
                flagged: Vec::new(),
            };
            for n in 0..=n_max {
                for p in n..=p_max {
                    match k0_required(n, p, tau, sampling, bound) {
                        K0Requirement::Min(v) => {
                            if n == 0 && p >= 1 {
                                out.curve.push(v);
                            }
                            if v > out.max_by_n[n] {
                                out.max_by_n[n] = v;
                            }
                            if v > out.best.0 {
                                out.best = (v, n, p);
                            }
                        }
                        K0Requirement::Degenerate(a) => {
                            if n == 0 && p >= 1 {
                                out.curve.push(f64::NAN);
                            }
                            out.flagged.push((n, p, tau, a));
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut global_max = f64::NEG_INFINITY;
    let mut argmax = (0, 1, taus[0]);
    let mut max_by_n = vec![f64::NEG_INFINITY; n_max + 1];
    let mut curves_n0 = Vec::with_capacity(taus.len());
    let mut flagged = Vec::new();
    for (tau, r) in taus.iter().zip(per_tau) {
        if r.best.0 > global_max {
            global_max = r.best.0;
            argmax = (r.best.1, r.best.2, *tau);
        }
        for (acc, v) in max_by_n.iter_mut().zip(&r.max_by_n) {
            *acc = acc.max(*v);
        }
        curves_n0.push(r.curve);
        flagged.extend(r.flagged);
    }
    Ok(K0ScanReport {
        global_max,
        argmax,
        taus,
        curves_n0,
        max_by_n,
        flagged,
    })
}

fn check_count(name: &'static str, count: usize) -> Result<()> {
    if count == 0 {
        Err(invalid(name, "must be >= 1"))
    } else {
        Ok(())
    }
}
