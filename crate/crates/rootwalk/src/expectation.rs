//! Three routes to E[f(z + W^n(t))]: exact lattice enumeration, Monte Carlo,
//! and the n→∞ limit series, plus the time-integrated limit and the
//! Fourier-initial-data closed form.

use num_complex::Complex64;
use rand::Rng;

use crate::cnum::{cpow_u64, factorial, i_pow};
use crate::error::Result;
use crate::estimate::{parallel_mc, EstimateWithError};
use crate::rng::path_rng;
use crate::series::{AtomicMeasure, PowerSeries};
use crate::walk::{exact_distribution_with_budget, WalkSpec, DEFAULT_ATOM_BUDGET};

/// Hard cap on limit-series length; terms decay factorially long before this.
pub const LIMIT_SERIES_MAX_TERMS: usize = 400;

/// Total expectation over the exact lattice law of W^n(m/n).
pub fn expect_exact(
    spec: &WalkSpec,
    m_steps: u64,
    f: &PowerSeries,
    z: Complex64,
) -> Result<EstimateWithError> {
    expect_exact_with_budget(spec, m_steps, f, z, DEFAULT_ATOM_BUDGET)
}

pub fn expect_exact_with_budget(
    spec: &WalkSpec,
    m_steps: u64,
    f: &PowerSeries,
    z: Complex64,
    budget: u64,
) -> Result<EstimateWithError> {
    let dist = exact_distribution_with_budget(spec, m_steps, budget)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut max_r: f64 = 0.0;
    for a in &dist.atoms {
        acc += a.weight * f.value_at(z + a.point);
        max_r = max_r.max((z + a.point - f.center()).norm());
    }
    let err = f.tail_bound(max_r) + 1e-15 * (1.0 + acc.norm());
    Ok(EstimateWithError::exact(acc, err))
}

/// Monte Carlo mean of f(z + W^n(t)) over independent paths under the
/// per-path seed contract.
pub fn expect_mc(
    spec: &WalkSpec,
    t: f64,
    f: &PowerSeries,
    z: Complex64,
    paths: u64,
    seed: u64,
) -> EstimateWithError {
    let steps = spec.steps_by(t);
    let set = spec.step_set();
    let n = spec.order();
    let scale = spec.space_scale();
    let acc = parallel_mc(paths, |i| {
        let mut rng = path_rng(seed, i);
        // only the endpoint matters: accumulate direction counts
        let mut counts = vec![0u32; n as usize];
        for _ in 0..steps {
            counts[rng.gen_range(0..n) as usize] += 1;
        }
        let mut w = Complex64::new(0.0, 0.0);
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                w += c as f64 * set.value(k as u32);
            }
        }
        f.value_at(z + scale * w)
    });
    acc.estimate()
}

/// Core of the limit series: Σ_h f^{(hN)}(z) q^h / h! for a given effective
/// time q. Returns (value, tail bound, terms used).
pub(crate) fn effective_time_series(
    f: &PowerSeries,
    z: Complex64,
    q: Complex64,
    order_n: u32,
) -> Result<(Complex64, f64, usize)> {
    let n = order_n.max(1) as usize;
    let c_eps = 1.1 * f.type_upper();
    let env = (c_eps * (z - f.center()).norm()).exp();

    let mut sum = Complex64::new(0.0, 0.0);
    let mut deriv = f.clone();
    let mut fac = Complex64::new(1.0, 0.0); // q^h / h!
    let mut tail = 0.0f64;
    let mut terms = 0usize;
    for h in 0..LIMIT_SERIES_MAX_TERMS {
        if h > 0 {
            deriv = deriv.derivative_series(n);
            fac *= q / h as f64;
        }
        if deriv.is_zero() {
            // polynomial data: the series is a finite exact sum
            return Ok((sum, tail, terms));
        }
        sum += deriv.value_at(z) * fac;
        terms += 1;
        // (c+eps)^{(h+1)N} e^{(c+eps)|z|} |q|^{h+1}/(h+1)! as the next-term
        // envelope; stop when the geometric tail from here is negligible
        let hn1 = ((h + 1) * n) as f64;
        let next = env * (hn1 * c_eps.ln()).exp() * fac.norm() * q.norm() / (h as f64 + 1.0);
        if next.is_finite() {
            let ratio = (c_eps.powi(n as i32) * q.norm() / (h as f64 + 2.0)).min(0.99);
            tail = next / (1.0 - ratio);
            if tail < 1e-12 * (1.0 + sum.norm()) && h >= 2 {
                return Ok((sum, tail, terms));
            }
        }
    }
    Ok((sum, tail, terms))
}

/// lim_n E[f(z + W^n(t))] = Σ_h f^{(hN)}(z)/h! (αt/N!)^h.
///
/// An uncertified growth condition attaches a warning, not a failure.
pub fn limit_series(
    spec: &WalkSpec,
    t: f64,
    f: &PowerSeries,
    z: Complex64,
) -> Result<EstimateWithError> {
    let n = spec.order();
    let q = spec.alpha() * t / factorial(n as usize);
    let (value, tail, _terms) = effective_time_series(f, z, q, n)?;
    let mut est = EstimateWithError::series(value, tail);
    let growth = f.check_growth_condition(n);
    if !growth.satisfied {
        est = est.with_warning(format!(
            "coefficient growth condition not certified (partial sum {:.3e})",
            growth.partial_sum
        ));
    }
    Ok(est)
}

/// lim_n ∫_0^t E[f(z + W^n(s))] ds = Σ_h f^{(hN)}(z) (α/N!)^h t^{h+1}/(h+1)!.
pub fn limit_time_integral(
    spec: &WalkSpec,
    t: f64,
    f: &PowerSeries,
    z: Complex64,
) -> Result<Complex64> {
    let n = spec.order().max(1) as usize;
    let q = spec.alpha() / factorial(n);

    let mut sum = Complex64::new(0.0, 0.0);
    let mut deriv = f.clone();
    let mut fac = Complex64::new(t, 0.0); // q^h t^{h+1} / (h+1)!
    for h in 0..LIMIT_SERIES_MAX_TERMS {
        if h > 0 {
            deriv = deriv.derivative_series(n);
            fac *= q * t / (h as f64 + 1.0);
        }
        if deriv.is_zero() {
            break;
        }
        let term = deriv.value_at(z) * fac;
        sum += term;
        if h >= 3 && term.norm() < 1e-14 * (1.0 + sum.norm()) {
            break;
        }
    }
    Ok(sum)
}

/// ∫ e^{iyx} e^{i^N α t y^N / N!} dμ(y): the limit for Fourier-type initial
/// data, evaluated atom by atom.
pub fn fourier_initialdata_limit(spec: &WalkSpec, t: f64, mu: &AtomicMeasure, x: f64) -> Complex64 {
    let n = spec.order();
    let coef = i_pow(n as u64) * spec.alpha() * t / factorial(n as usize);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(y, w) in &mu.atoms {
        let osc = Complex64::from_polar(1.0, y * x);
        acc += w * osc * (coef * cpow_u64(Complex64::new(y, 0.0), n as u64)).exp();
    }
    acc
}
