//! Series and probabilistic solvers for the N-th order Cauchy problem
//! ∂_t u = (α/N!) φ(t)^N ∂^N u with entire initial data, plus a residual
//! verifier that differentiates the series solution numerically in time.

use num_complex::Complex64;
use rand::Rng;

use crate::cnum::{factorial, simpson};
use crate::error::{Error, Result};
use crate::estimate::{parallel_mc, EstimateWithError};
use crate::expectation::effective_time_series;
use crate::rng::path_rng;
use crate::series::{fourier_of_measure, AtomicMeasure, PowerSeries};
use crate::timefn::TimeFn;
use crate::walk::WalkSpec;

const EFFECTIVE_TIME_PANELS: usize = 1000;

/// Initial datum: an entire series or a compactly supported atomic measure
/// (used through its Fourier transform).
#[derive(Clone, Debug)]
pub enum InitialData {
    Series(PowerSeries),
    Measure(AtomicMeasure),
}

impl InitialData {
    pub fn as_series(&self) -> PowerSeries {
        match self {
            InitialData::Series(f) => f.clone(),
            InitialData::Measure(mu) => fourier_of_measure(mu),
        }
    }
}

/// The Cauchy problem data: order, diffusion constant, time coefficient
/// (≡ 1 for the constant-coefficient equation) and initial datum.
#[derive(Clone, Debug)]
pub struct CauchyProblem {
    pub order_n: u32,
    pub alpha: Complex64,
    pub coefficient: TimeFn,
    pub initial: InitialData,
    pub horizon: f64,
}

impl CauchyProblem {
    pub fn new(
        order_n: u32,
        alpha: Complex64,
        coefficient: TimeFn,
        initial: InitialData,
        horizon: f64,
    ) -> Result<Self> {
        if order_n < 1 {
            return Err(Error::InvalidSpec("order N must be >= 1".into()));
        }
        if alpha == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidSpec("alpha must be nonzero".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidSpec("horizon must be positive".into()));
        }
        let max_abs = coefficient.max_abs_on(horizon);
        if !max_abs.is_finite() {
            return Err(Error::InvalidSpec("coefficient unbounded on [0, T]".into()));
        }
        Ok(Self {
            order_n,
            alpha,
            coefficient,
            initial,
            horizon,
        })
    }

    /// Effective time (α/N!)·∫_0^t φ(s)^N ds, by composite Simpson with 10^3
    /// panels (exact per panel for polynomial φ up to cubic integrands).
    pub fn effective_time(&self, t: f64) -> Complex64 {
        let q = simpson(
            |s| crate::cnum::cpow_u64(self.coefficient.eval(s), self.order_n as u64),
            0.0,
            t,
            EFFECTIVE_TIME_PANELS,
        );
        self.alpha * q / factorial(self.order_n as usize)
    }
}

/// u(t,z) = Σ_h g^{(hN)}(z)/h! ((α/N!)∫_0^t φ^N)^h.
pub fn solve_series(problem: &CauchyProblem, t: f64, z: Complex64) -> Result<Complex64> {
    let g = problem.initial.as_series();
    let q = problem.effective_time(t);
    let (value, _tail, _terms) = effective_time_series(&g, z, q, problem.order_n)?;
    Ok(value)
}

/// Monte Carlo mean of g(z + ∫_0^t φ(s) dW^n(s)) over independent paths.
pub fn solve_probabilistic(
    problem: &CauchyProblem,
    t: f64,
    z: Complex64,
    n: u64,
    paths: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    let spec = WalkSpec::new(problem.order_n, problem.alpha, n)?;
    let g = problem.initial.as_series();
    let steps = spec.steps_by(t);
    let set = spec.step_set();
    let scale = spec.space_scale();
    let order = spec.order();
    // φ on the step grid, shared across paths
    let phi: Vec<Complex64> = (0..steps)
        .map(|tau| problem.coefficient.eval(tau as f64 / n as f64))
        .collect();

    let acc = parallel_mc(paths, |i| {
        let mut rng = path_rng(seed, i);
        let mut x = Complex64::new(0.0, 0.0);
        for w in phi.iter() {
            x += w * set.value(rng.gen_range(0..order));
        }
        g.value_at(z + scale * x)
    });
    Ok(acc.estimate())
}

/// |∂_t u − (α/N!) φ(t)^N ∂^N u| at (t, z), with ∂_t by the fourth-order
/// central stencil (step 1e-4·(1+t)) on `solve_series` and ∂^N through the
/// series itself.
pub fn residual(problem: &CauchyProblem, t: f64, z: Complex64) -> Result<f64> {
    let mut dt = 1e-4 * (1.0 + t);
    if 2.0 * dt >= t {
        dt = t / 4.0;
    }
    let u = |tt: f64| solve_series(problem, tt, z);
    let u_t =
        (u(t - 2.0 * dt)? - 8.0 * u(t - dt)? + 8.0 * u(t + dt)? - u(t + 2.0 * dt)?) / (12.0 * dt);

    let g = problem.initial.as_series();
    let g_n = g.derivative_series(problem.order_n as usize);
    let q = problem.effective_time(t);
    let (dnu, _, _) = effective_time_series(&g_n, z, q, problem.order_n)?;
    let phi_t = crate::cnum::cpow_u64(problem.coefficient.eval(t), problem.order_n as u64);
    let rhs = problem.alpha / factorial(problem.order_n as usize) * phi_t * dnu;
    Ok((u_t - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::limit_series;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_one() -> TimeFn {
        TimeFn::constant(c(1.0, 0.0))
    }

    fn problem(n: u32, alpha: Complex64, phi: TimeFn, g: PowerSeries) -> CauchyProblem {
        CauchyProblem::new(n, alpha, phi, InitialData::Series(g), 2.0).unwrap()
    }

    #[test]
    fn series_solution_at_t0_is_initial_datum() {
        let g = PowerSeries::exp_series(c(1.0, 0.0));
        let p = problem(3, c(1.0, 0.0), constant_one(), g.clone());
        let z = c(0.3, -0.2);
        let u = solve_series(&p, 0.0, z).unwrap();
        assert!((u - g.value_at(z)).norm() < 1e-13);
    }

    #[test]
    fn exponential_closed_form_constant_phi() {
        // g = e^{cz}: u = e^{cz} exp(alpha t c^N / N!)
        let cc = c(1.3, 0.0);
        let g = PowerSeries::exp_series(cc);
        let p = problem(2, c(1.0, 0.0), constant_one(), g);
        let z = c(0.2, 0.0);
        let u = solve_series(&p, 1.0, z).unwrap();
        let want = (cc * z).exp() * (cc * cc * 0.5).exp();
        assert!((u - want).norm() < 1e-10 * want.norm(), "{u} vs {want}");
    }

    #[test]
    fn exponential_closed_form_linear_phi() {
        // phi(s) = s, N=2: effective time  c^2/2 * int_0^1 s^2 ds = c^2/6
        let cc = c(1.0, 0.0);
        let g = PowerSeries::exp_series(cc);
        let phi = TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let p = problem(2, c(1.0, 0.0), phi, g);
        let u = solve_series(&p, 1.0, c(0.0, 0.0)).unwrap();
        let want = (1.0f64 / 6.0).exp();
        assert!((u.re - want).abs() < 1e-10 * want, "{u} vs {want}");
    }

    #[test]
    fn consistency_with_limit_series_at_constant_phi() {
        let g = PowerSeries::cos_series();
        let p = problem(4, c(1.0, 0.5), constant_one(), g.clone());
        let spec = WalkSpec::new(4, c(1.0, 0.5), 1000).unwrap();
        let z = c(0.3, 0.1);
        let a = solve_series(&p, 0.7, z).unwrap();
        let b = limit_series(&spec, 0.7, &g, z).unwrap().value;
        assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()), "{a} vs {b}");
    }

    #[test]
    fn residual_examples() {
        // exponential datum, N=3
        let g = PowerSeries::exp_series(c(1.0, 0.0));
        let p = problem(3, c(1.0, 0.0), constant_one(), g);
        let r = residual(&p, 0.5, c(0.0, 0.0)).unwrap();
        assert!(r <= 1e-6, "residual {r}");

        // low-degree polynomial: u constant in t
        let g = PowerSeries::polynomial(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let p = problem(3, c(1.0, 0.0), constant_one(), g);
        let r = residual(&p, 0.5, c(0.4, 0.0)).unwrap();
        assert!(r <= 1e-9, "residual {r}");

        // cosine datum, N=4, off-origin
        let p = problem(4, c(1.0, 0.0), constant_one(), PowerSeries::cos_series());
        let r = residual(&p, 1.0, c(0.3, 0.0)).unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn residual_time_dependent_coefficient() {
        let g = PowerSeries::exp_series(c(0.0, 1.0));
        let phi = TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)]);
        for n in 2..=4u32 {
            let p = problem(n, c(1.0, 0.0), phi.clone(), g.clone());
            let r = residual(&p, 0.6, c(0.1, 0.0)).unwrap();
            assert!(r <= 1e-6, "N={n} residual {r}");
        }
    }

    #[test]
    fn probabilistic_route_matches_series_small() {
        // N=3, g = z^3, z=0, constant phi: u(t,0) = alpha * t on the grid
        let g = PowerSeries::monomial(c(1.0, 0.0), 3);
        let p = problem(3, c(1.0, 0.0), constant_one(), g);
        let est = solve_probabilistic(&p, 1.0, c(0.0, 0.0), 200, 20_000, 21).unwrap();
        let series = solve_series(&p, 1.0, c(0.0, 0.0)).unwrap();
        assert!(
            (est.value - series).norm() <= 4.0 * est.error + 25.0 * (1.0 + series.norm()) / 200.0,
            "{} vs {series} ± {}",
            est.value,
            est.error
        );
    }

    #[test]
    fn probabilistic_route_linear_phi() {
        // phi(s)=s, g=e^z, N=2: target e^{1/6}
        let g = PowerSeries::exp_series(c(1.0, 0.0));
        let phi = TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let p = problem(2, c(1.0, 0.0), phi, g);
        let est = solve_probabilistic(&p, 1.0, c(0.0, 0.0), 400, 40_000, 23).unwrap();
        let want = (1.0f64 / 6.0).exp();
        assert!(
            (est.value - c(want, 0.0)).norm() <= 4.0 * est.error + 25.0 * (1.0 + want) / 400.0,
            "{} vs {want} ± {}",
            est.value,
            est.error
        );
    }

    #[test]
    fn rejects_unbounded_coefficient() {
        let g = PowerSeries::exp_series(c(1.0, 0.0));
        let bad = TimeFn::sampled(0.0, 2.0, vec![c(1.0, 0.0), c(f64::INFINITY, 0.0)]);
        assert!(CauchyProblem::new(2, c(1.0, 0.0), bad, InitialData::Series(g), 2.0).is_err());
    }
}
