//! Library results against independent reference computations.

use approx::assert_relative_eq;
use gmp_overbound::bound::truth_acm2;
use gmp_overbound::verify::min_eigenvalue_2x2;
use gmp_overbound::{
    acm2, autocov_nonstationary, continuous_bound, discrete_bound, gmp_discrete_params, nonstationary_k0, psd_discrete,
    GmpSpec, SamplingSpec, TauInterval,
};

fn iv(lo: f64, hi: f64) -> TauInterval {
    TauInterval::new(lo, hi).unwrap()
}

fn ts(dt: f64) -> SamplingSpec {
    SamplingSpec::new(dt).unwrap()
}

/// `dt sigma2 sum_k alpha^|k| cos(omega k dt)`, summed until the terms vanish.
fn psd_by_series(omega: f64, sigma2: f64, alpha: f64, dt: f64) -> f64 {
    let mut sum = 1.0;
    let mut a = 1.0;
    for k in 1.. {
        a *= alpha;
        if a < 1e-20 {
            break;
        }
        sum += 2.0 * a * (omega * k as f64 * dt).cos();
    }
    dt * sigma2 * sum
}

/// `E[a_n a_p]` by propagating the variance and cross-covariance step by step.
fn autocov_by_recursion(n: usize, p: usize, sigma0_2: f64, sigma2: f64, alpha: f64) -> f64 {
    let (lo, hi) = (n.min(p), n.max(p));
    let q = sigma2 * (1.0 - alpha * alpha);
    let mut var = sigma0_2;
    for _ in 0..lo {
        var = alpha * alpha * var + q;
    }
    let mut cross = var;
    for _ in lo..hi {
        cross *= alpha;
    }
    cross
}

/// Discrete bound found by bisecting for the time constant at which the two
/// tight spectral constraints (at zero and at Nyquist) demand the same `k`.
fn discrete_bound_by_bisection(tau_min: f64, tau_max: f64, dt: f64) -> (f64, f64) {
    let nyq = std::f64::consts::PI / dt;
    let alpha = |tau: f64| (-dt / tau).exp();
    let need_low =
        |tau_hat: f64| psd_by_series(0.0, 1.0, alpha(tau_max), dt) / psd_by_series(0.0, 1.0, alpha(tau_hat), dt);
    let need_high =
        |tau_hat: f64| psd_by_series(nyq, 1.0, alpha(tau_min), dt) / psd_by_series(nyq, 1.0, alpha(tau_hat), dt);
    let (mut lo, mut hi) = (tau_min, tau_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if need_low(mid) > need_high(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_hat = 0.5 * (lo + hi);
    (tau_hat, need_low(tau_hat))
}

/// Smallest `k0` for which every sampled 2x2 autocovariance difference is
/// positive semidefinite, found by bisection.
fn k0_by_bisection(interval: &TauInterval, sampling: SamplingSpec, n_max: usize, tau_count: usize) -> f64 {
    let base = continuous_bound(interval);
    let taus = interval.log_grid(tau_count);
    let holds = |k0: f64| {
        let b = base.with_k0(k0, sampling).unwrap();
        taus.iter().all(|&tau| {
            (0..=n_max).all(|n| {
                (n..=n_max).all(|p| {
                    let d = acm2(n, p, &b, 1.0, sampling) - truth_acm2(n, p, tau, 1.0, sampling);
                    min_eigenvalue_2x2(&d) >= 0.0
                })
            })
        })
    };
    let (mut lo, mut hi) = (0.5, base.k());
    assert!(holds(hi));
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn discrete_psd_matches_autocovariance_series() {
    for (tau, dt) in [(1.0, 2.0), (10.0, 1.0), (50.0, 0.1), (3.0, 0.5)] {
        let spec = GmpSpec::new(1.7, tau).unwrap();
        let alpha = spec.alpha(ts(dt));
        if alpha > 0.999 {
            continue;
        }
        // The alternating series loses digits near Nyquist; scale by the peak.
        let peak = psd_by_series(0.0, 1.7, alpha, dt);
        for i in 0..=20 {
            let w = std::f64::consts::PI / dt * i as f64 / 20.0;
            let got = psd_discrete(w, &spec, ts(dt)).unwrap();
            assert_relative_eq!(
                got,
                psd_by_series(w, 1.7, alpha, dt),
                max_relative = 1e-10,
                epsilon = 1e-12 * peak
            );
        }
    }
}

#[test]
fn autocovariance_matches_recursion() {
    for alpha in [0.1, 0.5, 0.9, 0.999] {
        for ratio in [0.0, 1.0, 3.16] {
            for n in 0..=20 {
                for p in 0..=20 {
                    let spec = GmpSpec::new(2.0, 1.0).unwrap();
                    let got = autocov_nonstationary(n, p, ratio * 2.0, &spec, alpha);
                    let want = autocov_by_recursion(n, p, ratio * 2.0, 2.0, alpha);
                    assert_relative_eq!(got, want, max_relative = 1e-12, epsilon = 1e-300);
                }
            }
        }
    }
}

#[test]
fn discrete_bound_matches_constraint_intersection() {
    for (lo, hi, dt) in [(1.0, 10.0, 2.0), (10.0, 100.0, 1.0), (2.0, 3.0, 0.5), (5.0, 500.0, 4.0)] {
        let b = discrete_bound(&iv(lo, hi), ts(dt));
        let (tau_hat, k) = discrete_bound_by_bisection(lo, hi, dt);
        assert_relative_eq!(b.tau_hat(), tau_hat, max_relative = 1e-9);
        assert_relative_eq!(b.k(), k, max_relative = 1e-9);
    }
}

#[test]
fn discrete_bound_reference_values() {
    let b = discrete_bound(&iv(1.0, 10.0), ts(2.0));
    assert_relative_eq!(b.k(), 2.764292155907287, max_relative = 1e-12);
    assert_relative_eq!(b.tau_hat(), 3.535839280762454, max_relative = 1e-12);
}

#[test]
fn discrete_parameters_reference_values() {
    let gm = gmp_discrete_params(&GmpSpec::new(1.0, 50.0).unwrap(), ts(1.0));
    assert_relative_eq!(gm.alpha, 0.9801986733067553, max_relative = 1e-14);
    assert_relative_eq!(gm.q_d, 0.03921056084767682, max_relative = 1e-12);
}

#[test]
fn minimum_k0_matches_bisection_on_the_matrix_condition() {
    for (lo, hi, dt) in [
        (10.0, 100.0, 0.1),
        (10.0, 100.0, 1.0),
        (1.0, 10.0, 0.5),
        (5.0, 20.0, 2.0),
    ] {
        let interval = iv(lo, hi);
        let sampling = ts(dt);
        let k0 = nonstationary_k0(&interval, sampling, &continuous_bound(&interval)).unwrap();
        let oracle = k0_by_bisection(&interval, sampling, 40, 12);
        assert_relative_eq!(k0, oracle, max_relative = 1e-8);
    }
}

#[test]
fn minimum_k0_reference_values() {
    let interval = iv(10.0, 100.0);
    let b = continuous_bound(&interval);
    let k0_fine = nonstationary_k0(&interval, ts(0.1), &b).unwrap();
    let k0_coarse = nonstationary_k0(&interval, ts(1.0), &b).unwrap();
    assert_relative_eq!(k0_fine, 1.5160422268199434, max_relative = 1e-12);
    assert_relative_eq!(k0_coarse, 1.4860040428160664, max_relative = 1e-12);
}

/// Error variance of a scalar filter with fixed gains, from the explicit
/// response of the error to every individual noise sample.
fn scalar_error_variance_by_impulse_response(
    (phi, q, r, p0): (f64, f64, f64, f64),
    (phi_hat, h_hat): (f64, f64),
    h: f64,
    gains: &[f64],
) -> Vec<f64> {
    // coefficients of (x_n, x_hat_n) on x_0, w_1.., nu_1..
    let mut x = vec![1.0];
    let mut xh = vec![0.0];
    let mut variances = vec![p0];
    let mut out = Vec::new();
    for &k in gains {
        x.iter_mut().for_each(|c| *c *= phi);
        x.push(1.0); // w_n
        variances.push(q);
        xh.iter_mut().for_each(|c| *c *= (1.0 - k * h_hat) * phi_hat);
        xh.push(0.0);
        for (c, xc) in xh.iter_mut().zip(&x) {
            *c += k * h * xc;
        }
        x.push(0.0); // nu_n
        xh.push(k);
        variances.push(r);
        out.push(
            x.iter()
                .zip(&xh)
                .zip(&variances)
                .map(|((a, b), v)| (b - a) * (b - a) * v)
                .sum(),
        );
    }
    out
}

#[test]
fn mismatched_filter_error_matches_impulse_response() {
    use gmp_overbound::kf::{riccati_run, true_error_covariance_with, LinearModel, Observation};
    use nalgebra::{DMatrix, RowDVector};

    let scalar = |phi: f64, h: f64, q: f64, r: f64, p0: f64| {
        LinearModel::new(
            DMatrix::from_element(1, 1, phi),
            Observation::constant(RowDVector::from_element(1, h)),
            DMatrix::from_element(1, 1, q),
            r,
            DMatrix::from_element(1, 1, p0),
        )
        .unwrap()
    };
    let truth = scalar(0.95, 1.0, 0.3, 0.5, 2.0);
    let design = scalar(0.8, 1.1, 0.6, 0.4, 5.0);
    let (_, gains) = riccati_run(&design, 60).unwrap();
    let got = true_error_covariance_with(&design, &gains, &truth, 60)
        .unwrap()
        .variance(0);
    let k: Vec<f64> = gains.gains.iter().map(|g| g[0]).collect();
    let want = scalar_error_variance_by_impulse_response((0.95, 0.3, 0.5, 2.0), (0.8, 1.1), 1.0, &k);
    for (g, w) in got.iter().zip(&want) {
        assert_relative_eq!(*g, *w, max_relative = 1e-12);
    }
}
