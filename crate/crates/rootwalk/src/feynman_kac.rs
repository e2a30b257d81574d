//! Exponential functionals of the walk and the Feynman-Kac representation
//! for potentials linear in space: Monte Carlo estimators next to their
//! closed forms, and a residual check of the perturbed equation.

use num_complex::Complex64;
use rand::Rng;

use crate::cnum::{cpow_u64, factorial, simpson, BinomialTable};
use crate::error::{Error, Result};
use crate::estimate::{parallel_mc2, EstimateWithError};
use crate::rng::path_rng;
use crate::series::{AtomicMeasure, PowerSeries};
use crate::timefn::TimeFn;
use crate::walk::WalkSpec;

/// Sample variance of Re(exponent) above which the exponential-functional
/// estimators warn about the heavy-tail Monte Carlo regime.
pub const HEAVY_TAIL_VARIANCE: f64 = 25.0;

/// A time-dependent potential V(τ, x) = A(τ)·x, linear in space.
#[derive(Clone, Debug)]
pub struct LinearPotential {
    pub a: TimeFn,
}

impl LinearPotential {
    pub fn new(a: TimeFn) -> Self {
        Self { a }
    }

    /// ∫_0^τ A(v) dv.
    pub fn integral_to(&self, tau: f64) -> Complex64 {
        self.a.integral(0.0, tau)
    }
}

/// Tail integrals K_i = ∫_{i/n}^{t} a(s) ds for i = 1..⌊nt⌋: the exact
/// weights of the piecewise-constant reduction of ∫ a(s) W^n(s) ds, with ξ_i
/// entering the walk from time i/n onwards.
fn suffix_weights(a: &TimeFn, t: f64, n: u64) -> Vec<Complex64> {
    let steps = (n as f64 * t).floor() as u64;
    (1..=steps)
        .map(|i| a.integral(i as f64 / n as f64, t))
        .collect()
}

/// MC mean of exp(∫_0^t a(s) W^n(s) ds) with the integral reduced exactly on
/// the piecewise-constant path.
pub fn exp_functional_mc(
    spec: &WalkSpec,
    t: f64,
    a: &TimeFn,
    paths: u64,
    seed: u64,
) -> EstimateWithError {
    let set = spec.step_set();
    let scale = spec.space_scale();
    let order = spec.order();
    let weights = suffix_weights(a, t, spec.scale());

    let (vals, expo) = parallel_mc2(paths, |i| {
        let mut rng = path_rng(seed, i);
        let mut e = Complex64::new(0.0, 0.0);
        for w in weights.iter() {
            e += w * set.value(rng.gen_range(0..order));
        }
        e *= scale;
        (e.exp(), e)
    });
    let mut est = vals.estimate();
    let var_re = expo.variance().0;
    if var_re > HEAVY_TAIL_VARIANCE {
        est = est.with_warning(format!(
            "exponent Re-variance {var_re:.2} exceeds {HEAVY_TAIL_VARIANCE}: heavy-tail MC regime"
        ));
    }
    est
}

/// The closed form exp((α/N!) ∫_0^t (∫_s^t a(u) du)^N ds); exact polynomial
/// calculus when `a` is polynomial, Simpson otherwise.
pub fn exp_functional_limit(spec: &WalkSpec, t: f64, a: &TimeFn) -> Complex64 {
    let n = spec.order();
    let inner = match a.antiderivative() {
        Some(p) => {
            // I(s) = P(t) - P(s) as a polynomial, raised and integrated exactly
            let pt = p.eval(t);
            let tail_poly = match &p {
                TimeFn::Poly(c) => {
                    let mut coeffs: Vec<Complex64> = c.iter().map(|&x| -x).collect();
                    coeffs[0] += pt;
                    TimeFn::Poly(coeffs)
                }
                TimeFn::Sampled { .. } => unreachable!(),
            };
            tail_poly.pow_int(n).integral(0.0, t)
        }
        None => simpson(|s| cpow_u64(a.integral(s, t), n as u64), 0.0, t, 1000),
    };
    (spec.alpha() * inner / factorial(n as usize)).exp()
}

/// Closed-form solution of ∂_t u = (α/N!)∂^N u + A(t)x u with Fourier-type
/// initial data μ:
/// e^{x∫_0^t A} Σ_j w_j e^{iy_j x} exp((α/N!)∫_0^t (iy_j + ∫_0^v A)^N dv).
pub fn fk_solution_closed(
    spec: &WalkSpec,
    t: f64,
    x: f64,
    potential: &LinearPotential,
    mu: &AtomicMeasure,
) -> Complex64 {
    let n = spec.order();
    let c_t = potential.integral_to(t);
    let coef = spec.alpha() / factorial(n as usize);
    let binom = BinomialTable::new(n as usize);

    // Q_k = ∫_0^t P(v)^k dv with P the antiderivative of A
    let q: Vec<Complex64> = match potential.a.antiderivative() {
        Some(p) => (0..=n).map(|k| p.pow_int(k).integral(0.0, t)).collect(),
        None => (0..=n)
            .map(|k| {
                simpson(
                    |v| cpow_u64(potential.a.integral(0.0, v), k as u64),
                    0.0,
                    t,
                    1000,
                )
            })
            .collect(),
    };

    let mut acc = Complex64::new(0.0, 0.0);
    for &(y, w) in &mu.atoms {
        let iy = Complex64::new(0.0, y);
        // binomial expansion of ∫ (iy + P(v))^N dv
        let mut j = Complex64::new(0.0, 0.0);
        for k in 0..=n {
            j += binom.get(n as usize, k as usize) * cpow_u64(iy, (n - k) as u64) * q[k as usize];
        }
        acc += w * Complex64::from_polar(1.0, y * x) * (coef * j).exp();
    }
    (x * c_t).exp() * acc
}

/// MC mean of f(x + W^n(t)) · exp(∫_0^t A(t-s)(W^n(s)+x) ds), the grid sum
/// being exact over the piecewise-constant walk.
pub fn fk_solution_mc(
    spec: &WalkSpec,
    t: f64,
    x: f64,
    potential: &LinearPotential,
    f: &PowerSeries,
    paths: u64,
    seed: u64,
) -> EstimateWithError {
    let set = spec.step_set();
    let scale = spec.space_scale();
    let order = spec.order();
    let n = spec.scale();
    // with a(s) = A(t-s): K_i = ∫_0^{t-i/n} A(v) dv
    let steps = spec.steps_by(t);
    let weights: Vec<Complex64> = (1..=steps)
        .map(|i| potential.a.integral(0.0, t - i as f64 / n as f64))
        .collect();
    let x_drift = Complex64::new(x, 0.0) * potential.integral_to(t);

    let (vals, expo) = parallel_mc2(paths, |i| {
        let mut rng = path_rng(seed, i);
        let mut e = Complex64::new(0.0, 0.0);
        let mut w_end = Complex64::new(0.0, 0.0);
        for w in weights.iter() {
            let step = set.value(rng.gen_range(0..order));
            e += w * step;
            w_end += step;
        }
        let exponent = e * scale + x_drift;
        (
            f.value_at(Complex64::new(x, 0.0) + scale * w_end) * exponent.exp(),
            exponent,
        )
    });
    let mut est = vals.estimate();
    let var_re = expo.variance().0;
    if var_re > HEAVY_TAIL_VARIANCE {
        est = est.with_warning(format!(
            "exponent Re-variance {var_re:.2} exceeds {HEAVY_TAIL_VARIANCE}: heavy-tail MC regime"
        ));
    }
    est
}

/// Prelimit-only estimator for a general potential V(τ, x), exposed for
/// experiments; no convergence is claimed outside the linear class.
pub fn fk_general_potential_prelimit_mc<V>(
    spec: &WalkSpec,
    t: f64,
    x: f64,
    potential: V,
    f: &PowerSeries,
    paths: u64,
    seed: u64,
) -> EstimateWithError
where
    V: Fn(f64, Complex64) -> Complex64 + Sync,
{
    let set = spec.step_set();
    let scale = spec.space_scale();
    let order = spec.order();
    let n = spec.scale() as f64;
    let steps = spec.steps_by(t);

    let (vals, _) = parallel_mc2(paths, |i| {
        let mut rng = path_rng(seed, i);
        let mut w = Complex64::new(0.0, 0.0);
        let mut e = Complex64::new(0.0, 0.0);
        for tau in 0..steps {
            // left endpoint of [tau/n, (tau+1)/n): V(t - s, x + W(s)) ds
            let s = tau as f64 / n;
            e += potential(t - s, Complex64::new(x, 0.0) + w) / n;
            w += scale * set.value(rng.gen_range(0..order));
        }
        (f.value_at(Complex64::new(x, 0.0) + w) * e.exp(), e)
    });
    vals.estimate()
        .with_warning("prelimit estimate only: no convergence claim".into())
}

/// Residual of `fk_solution_closed` under ∂_t u = (α/N!)∂^N u + A(t)x u;
/// time derivative by the fourth-order central stencil, space derivatives
/// exactly through the explicit x-dependence e^{(C(t)+iy)x} of each atom.
pub fn fk_residual(
    spec: &WalkSpec,
    t: f64,
    x: f64,
    potential: &LinearPotential,
    mu: &AtomicMeasure,
) -> Result<f64> {
    if mu.is_empty() {
        return Ok(0.0);
    }
    if t <= 0.0 {
        return Err(Error::InvalidArgument(
            "residual needs interior t > 0".into(),
        ));
    }
    let n = spec.order();
    let mut dt = 1e-4 * (1.0 + t);
    if 2.0 * dt >= t {
        dt = t / 4.0;
    }
    let u = |tt: f64| fk_solution_closed(spec, tt, x, potential, mu);
    let u_t = (u(t - 2.0 * dt) - 8.0 * u(t - dt) + 8.0 * u(t + dt) - u(t + 2.0 * dt)) / (12.0 * dt);

    // ∂_x^N u atom by atom
    let c_t = potential.integral_to(t);
    let coef = spec.alpha() / factorial(n as usize);
    let binom = BinomialTable::new(n as usize);
    let q: Vec<Complex64> = match potential.a.antiderivative() {
        Some(p) => (0..=n).map(|k| p.pow_int(k).integral(0.0, t)).collect(),
        None => (0..=n)
            .map(|k| {
                simpson(
                    |v| cpow_u64(potential.a.integral(0.0, v), k as u64),
                    0.0,
                    t,
                    1000,
                )
            })
            .collect(),
    };
    let mut dxn = Complex64::new(0.0, 0.0);
    let mut u = Complex64::new(0.0, 0.0);
    for &(y, w) in &mu.atoms {
        let iy = Complex64::new(0.0, y);
        let mut j = Complex64::new(0.0, 0.0);
        for k in 0..=n {
            j += binom.get(n as usize, k as usize) * cpow_u64(iy, (n - k) as u64) * q[k as usize];
        }
        let atom = w * ((c_t + iy) * x).exp() * (coef * j).exp();
        u += atom;
        dxn += cpow_u64(c_t + iy, n as u64) * atom;
    }
    let rhs = coef * dxn + potential.a.eval(t) * x * u;
    Ok((u_t - rhs).norm())
}
