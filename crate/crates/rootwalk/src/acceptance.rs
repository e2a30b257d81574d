//! The verification suite behind `rootwalk verify` and the acceptance
//! integration test: twelve criteria, each with pinned tolerances, producing
//! deterministic report lines (floats at 17 significant digits, timings kept
//! out of the comparable text).
//!
//! Criteria 10 and 11 exercise the displayed exit-time mean bound and the
//! 1/τ-weighted derivative estimator exactly as stated. Both checks fail on
//! correct simulations: the displayed upper bound for E[τ_n] omits the
//! overshoot cross term 2R n^{1/N-1}|α|^{1/N}, and the 1/τ weighting
//! converges to a constant multiple of the target (E[1/τ]·E[τ] > 1 at every
//! scale; see the notes next to those criteria). They are kept as stated
//! rather than silently weakened; the report shows the corrected bound and a
//! ratio-of-means diagnostic alongside.

use std::time::Instant;

use num_complex::Complex64;

use crate::cnum::{cpow_u64, factorial};
use crate::expectation::{expect_exact, expect_mc, limit_series};
use crate::feynman_kac::{
    exp_functional_limit, exp_functional_mc, fk_residual, fk_solution_closed, fk_solution_mc,
    LinearPotential,
};
use crate::ito::{ito_formula_check, ito_integral, martingale_check};
use crate::moments::{
    characteristic_function, characteristic_function_limit, exact_moment, leading_term,
    remainder_bound,
};
use crate::pde::{residual, solve_probabilistic, solve_series, CauchyProblem, InitialData};
use crate::rng::path_seed;
use crate::series::{AtomicMeasure, PowerSeries};
use crate::stopping::{default_horizon, derivative_estimator, sample_exit};
use crate::timefn::TimeFn;
use crate::walk::{sample_path, WalkSpec};

/// One verified criterion.
#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub elapsed_ms: u128,
}

pub const CRITERION_COUNT: u32 = 12;

fn f(x: f64) -> String {
    format!("{:.16e}", x)
}

fn cf(z: Complex64) -> String {
    format!("[{},{}]", f(z.re), f(z.im))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn spec(n: u32, alpha: Complex64, scale: u64) -> WalkSpec {
    WalkSpec::new(n, alpha, scale).expect("criterion specs are valid")
}

/// Deterministic comparable text for a set of outcomes (no timings).
pub fn report_text(outcomes: &[CriterionOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&format!(
            "criterion {:02} {}: {}\n",
            o.id,
            o.name,
            if o.passed { "PASS" } else { "FAIL" }
        ));
        for d in &o.details {
            s.push_str("  ");
            s.push_str(d);
            s.push('\n');
        }
    }
    s
}

pub fn run_all(master_seed: u64) -> Vec<CriterionOutcome> {
    (1..=CRITERION_COUNT)
        .map(|id| run_criterion(id, master_seed))
        .collect()
}

pub fn run_criterion(id: u32, master_seed: u64) -> CriterionOutcome {
    let start = Instant::now();
    let (name, passed, details) = match id {
        1 => step_law_exactness(),
        2 => moment_vanishing_containment(),
        3 => brute_force_oracle(),
        4 => characteristic_function_rate(),
        5 => ito_pathwise_identity(master_seed),
        6 => zero_mean_integrals(),
        7 => pde_residual_suite(),
        8 => probabilistic_series_agreement(master_seed),
        9 => feynman_kac_suite(master_seed),
        10 => exit_time_suite(master_seed),
        11 => derivative_estimator_suite(master_seed),
        12 => determinism_suite(master_seed),
        other => panic!("unknown criterion {other}"),
    };
    CriterionOutcome {
        id,
        name,
        passed,
        details,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

// 1. step_power_moment vs the N-atom average, 1e-12.
fn step_law_exactness() -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let mut worst = 0.0f64;
    for n in [2u32, 3, 4, 5] {
        for alpha in [c(1.0, 0.0), c(2.0, 0.0), c(1.0, 1.0)] {
            let s = spec(n, alpha, 1);
            let set = s.step_set();
            for m in 0..=(3 * n) {
                let mut avg = c(0.0, 0.0);
                for k in 0..n {
                    avg += cpow_u64(set.value(k), m as u64);
                }
                avg /= n as f64;
                let lhs = s.step_power_moment(m);
                let err = (lhs - avg).norm();
                worst = worst.max(err / (1.0 + lhs.norm()));
                if err > 1e-12 * (1.0 + lhs.norm()) {
                    pass = false;
                    details.push(format!(
                        "MISMATCH N={n} alpha={} m={m}: formula {} vs average {}",
                        cf(alpha),
                        cf(lhs),
                        cf(avg)
                    ));
                }
            }
        }
    }
    details.push(format!("worst relative gap {}", f(worst)));
    ("step-law exactness", pass, details)
}

// 2. Vanishing for N ∤ k; |exact - leading| <= remainder bound at t=1.
fn moment_vanishing_containment() -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    for n in [2u32, 3, 4] {
        for scale in [10u64, 100, 1000] {
            let s = spec(n, c(1.0, 0.0), scale);
            for k in 0..=(3 * n).min(crate::moments::MAX_MOMENT_ORDER) {
                let exact = exact_moment(&s, scale, k).expect("k within limit");
                if k % n != 0 {
                    if exact != c(0.0, 0.0) {
                        pass = false;
                        details.push(format!(
                            "NONZERO off-lattice N={n} n={scale} k={k}: {}",
                            cf(exact)
                        ));
                    }
                    continue;
                }
                let h = k / n;
                if h > 3 {
                    continue;
                }
                let lead = leading_term(&s, 1.0, k);
                let bound = remainder_bound(&s, 1.0, h) + 1e-12 * (1.0 + lead.norm());
                let gap = (exact - lead).norm();
                if gap > bound {
                    pass = false;
                    details.push(format!(
                        "CONTAINMENT FAIL N={n} n={scale} h={h}: gap {} bound {}",
                        f(gap),
                        f(bound)
                    ));
                } else {
                    details.push(format!(
                        "N={n} n={scale} h={h}: gap {} <= bound {}",
                        f(gap),
                        f(bound)
                    ));
                }
            }
        }
    }
    ("moment vanishing and remainder containment", pass, details)
}

// 3. Full enumeration over N^m step sequences vs exact_moment / expect_exact.
fn brute_force_oracle() -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let mut worst = 0.0f64;
    let z = c(0.1, 0.0);
    let fexp = PowerSeries::exp_series(c(1.0, 0.0));
    for n in 2..=4u32 {
        let s = spec(n, c(1.0, 0.0), 7);
        let set = s.step_set();
        let scale = s.space_scale();
        for m in 0..=8u32 {
            let total = (n as u64).pow(m);
            let mut moments = vec![c(0.0, 0.0); (3 * n + 1) as usize];
            let mut expf = c(0.0, 0.0);
            for code in 0..total {
                let mut rem = code;
                let mut w = c(0.0, 0.0);
                for _ in 0..m {
                    w += set.value((rem % n as u64) as u32);
                    rem /= n as u64;
                }
                let w = scale * w;
                let mut p = c(1.0, 0.0);
                for slot in moments.iter_mut() {
                    *slot += p;
                    p *= w;
                }
                expf += fexp.value_at(z + w);
            }
            for slot in moments.iter_mut() {
                *slot /= total as f64;
            }
            expf /= total as f64;

            for k in 0..=(3 * n) {
                let got = exact_moment(&s, m as u64, k).expect("within limit");
                let want = moments[k as usize];
                let rel = (got - want).norm() / (1.0 + want.norm());
                worst = worst.max(rel);
                if rel > 1e-10 {
                    pass = false;
                    details.push(format!(
                        "MOMENT MISMATCH N={n} m={m} k={k}: {} vs {}",
                        cf(got),
                        cf(want)
                    ));
                }
            }
            let got = expect_exact(&s, m as u64, &fexp, z)
                .expect("budget ok")
                .value;
            let rel = (got - expf).norm() / (1.0 + expf.norm());
            worst = worst.max(rel);
            if rel > 1e-10 {
                pass = false;
                details.push(format!(
                    "EXPECT MISMATCH N={n} m={m}: {} vs {}",
                    cf(got),
                    cf(expf)
                ));
            }
        }
    }
    details.push(format!("worst relative gap {}", f(worst)));
    ("brute-force enumeration oracle", pass, details)
}

// 4. |ψ_n(λ) - exp(i^N λ^N α t/N!)| halves (×2 ± 0.4) from n=1000 to 2000.
fn characteristic_function_rate() -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    for n in [3u32, 4] {
        let s1 = spec(n, c(1.0, 0.0), 1000);
        let s2 = spec(n, c(1.0, 0.0), 2000);
        for lam in [0.5, 1.0, 2.0] {
            let l = c(lam, 0.0);
            let lim = characteristic_function_limit(&s1, 1.0, l);
            let e1 = (characteristic_function(&s1, 1.0, l) - lim).norm();
            let e2 = (characteristic_function(&s2, 1.0, l) - lim).norm();
            let ratio = e1 / e2;
            let ok = (1.6..=2.4).contains(&ratio);
            pass &= ok;
            details.push(format!(
                "N={n} lambda={}: gap(1000)={} gap(2000)={} ratio {}{}",
                f(lam),
                f(e1),
                f(e2),
                f(ratio),
                if ok { "" } else { " OUT OF [1.6,2.4]" }
            ));
        }
    }
    ("characteristic-function 1/n rate", pass, details)
}

// 5. Pathwise Itô formula: exact for polynomials, 1e-10 for e^z, and the
// binomial expansion of (W^n(t))^N.
fn ito_pathwise_identity(master_seed: u64) -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let poly = PowerSeries::polynomial(&[c(0.3, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(1.0, -1.0)]);
    let z = c(0.2, -0.1);
    for n in 2..=4u32 {
        let s = spec(n, c(1.0, 0.5), 50);
        let mut worst = 0.0f64;
        for i in 0..1000u64 {
            let p = sample_path(
                &s,
                1.0,
                path_seed(master_seed ^ 0xA5, ((n as u64) << 32) | i),
            );
            let chk = ito_formula_check(&p, &poly, z);
            worst = worst.max((chk.lhs - chk.rhs).norm() / (1.0 + chk.lhs.norm()));
        }
        let ok = worst <= 1e-12;
        pass &= ok;
        details.push(format!(
            "polynomial N={n}: worst relative gap {}{}",
            f(worst),
            if ok { "" } else { " > 1e-12" }
        ));

        // (W^n(t))^N = Σ_k C(N,k) ∫ (W^n)^{N-k} d(W^n)^k
        let binom = crate::cnum::BinomialTable::new(n as usize);
        let mut worst_exp = 0.0f64;
        for i in 0..1000u64 {
            let p = sample_path(
                &s,
                1.0,
                path_seed(master_seed ^ 0xB6, ((n as u64) << 32) | i),
            );
            let lhs = cpow_u64(p.endpoint(), n as u64);
            let mut rhs = c(0.0, 0.0);
            for k in 1..=n {
                let mono = PowerSeries::monomial(c(1.0, 0.0), (n - k) as usize);
                rhs += binom.get(n as usize, k as usize) * ito_integral(&p, &mono, c(0.0, 0.0), k);
            }
            worst_exp = worst_exp.max((lhs - rhs).norm() / (1.0 + lhs.norm()));
        }
        let ok = worst_exp <= 1e-12;
        pass &= ok;
        details.push(format!(
            "walk-power expansion N={n}: worst relative gap {}{}",
            f(worst_exp),
            if ok { "" } else { " > 1e-12" }
        ));
    }

    let fexp = PowerSeries::exp_series(c(1.0, 0.0));
    for n in 2..=4u32 {
        let s = spec(n, c(1.0, 0.0), 100);
        let mut worst = 0.0f64;
        for i in 0..50u64 {
            let p = sample_path(
                &s,
                1.0,
                path_seed(master_seed ^ 0xC7, ((n as u64) << 32) | i),
            );
            let chk = ito_formula_check(&p, &fexp, c(0.0, 0.0));
            worst = worst.max((chk.lhs - chk.rhs).norm() / (1.0 + chk.lhs.norm()));
        }
        let ok = worst <= 1e-10;
        pass &= ok;
        details.push(format!(
            "exponential N={n}: worst relative gap {}{}",
            f(worst),
            if ok { "" } else { " > 1e-10" }
        ));
    }
    ("pathwise Ito formula", pass, details)
}

// 6. E[∫ g d(W)^k] ≡ 0 exactly for N ∤ k; k = 2N values scale like n^{1-m}.
fn zero_mean_integrals() -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let g = PowerSeries::exp_series(c(1.0, 0.0));
    let z = c(0.2, 0.0);
    for n in 2..=4u32 {
        let s = spec(n, c(1.0, 0.0), 10);
        let mut clean = true;
        for m in 0..=10u64 {
            for k in 1..=(2 * n) {
                if k % n != 0 {
                    let v = crate::ito::expected_ito_integral_exact(&s, m, &g, z, k)
                        .expect("budget ok");
                    if v != c(0.0, 0.0) {
                        clean = false;
                        pass = false;
                        details.push(format!("NONZERO N={n} m={m} k={k}: {}", cf(v)));
                    }
                }
            }
        }
        if clean {
            details.push(format!("N={n}: all off-lattice orders identically zero"));
        }

        // rate: k = 2N values times n^{m-1} stable under n doubling
        let v1 = crate::ito::expected_ito_integral_exact(&spec(n, c(1.0, 0.0), 8), 8, &g, z, 2 * n)
            .expect("budget ok");
        let v2 =
            crate::ito::expected_ito_integral_exact(&spec(n, c(1.0, 0.0), 16), 16, &g, z, 2 * n)
                .expect("budget ok");
        let p1 = v1.norm() * 8.0;
        let p2 = v2.norm() * 16.0;
        let ratio = p1 / p2;
        let ok = (0.6..=1.67).contains(&ratio);
        pass &= ok;
        details.push(format!(
            "N={n} k=2N scaling: n*|v| at 8 -> {}, at 16 -> {} (ratio {}{})",
            f(p1),
            f(p2),
            f(ratio),
            if ok { "" } else { " OUT OF [0.6,1.67]" }
        ));
    }
    ("zero-mean stochastic integrals", pass, details)
}

// 7. Residual of the series solution under the displayed equation, 1e-6.
fn pde_residual_suite() -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let z = c(0.3, 0.1);
    for n in 2..=4u32 {
        let data: Vec<(&str, PowerSeries)> = vec![
            ("exp(z)", PowerSeries::exp_series(c(1.0, 0.0))),
            ("exp(iz)", PowerSeries::exp_series(c(0.0, 1.0))),
            ("cos", PowerSeries::cos_series()),
            ("z^2N", PowerSeries::monomial(c(1.0, 0.0), 2 * n as usize)),
        ];
        for (gname, g) in data {
            for (pname, phi) in [
                ("1", TimeFn::constant(c(1.0, 0.0))),
                ("s", TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)])),
            ] {
                let problem =
                    CauchyProblem::new(n, c(1.0, 0.0), phi, InitialData::Series(g.clone()), 2.0)
                        .expect("valid problem");
                let mut worst = 0.0f64;
                for t in [0.25, 1.0] {
                    worst = worst.max(residual(&problem, t, z).expect("series reachable"));
                }
                let ok = worst <= 1e-6;
                pass &= ok;
                details.push(format!(
                    "N={n} g={gname} phi={pname}: residual {}{}",
                    f(worst),
                    if ok { "" } else { " > 1e-6" }
                ));
            }
        }
    }
    ("series-solution residual", pass, details)
}

// 8. solve_probabilistic vs solve_series within 4 SE + C/n, C = 25(1+|u|),
// at n ∈ {1e3, 1e4} with 1e5 paths.
fn probabilistic_series_agreement(master_seed: u64) -> (&'static str, bool, Vec<String>) {
    let phi1 = TimeFn::constant(c(1.0, 0.0));
    let phis = TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)]);
    let cases: Vec<(&str, u32, PowerSeries, TimeFn, Complex64)> = vec![
        (
            "N=2 exp phi=1",
            2,
            PowerSeries::exp_series(c(1.0, 0.0)),
            phi1.clone(),
            c(0.0, 0.0),
        ),
        (
            "N=2 cos phi=s",
            2,
            PowerSeries::cos_series(),
            phis.clone(),
            c(0.3, 0.0),
        ),
        (
            "N=3 exp phi=1",
            3,
            PowerSeries::exp_series(c(1.0, 0.0)),
            phi1.clone(),
            c(0.1, 0.0),
        ),
        (
            "N=3 z^3 phi=1",
            3,
            PowerSeries::monomial(c(1.0, 0.0), 3),
            phi1.clone(),
            c(0.0, 0.0),
        ),
        (
            "N=4 exp(iz) phi=1",
            4,
            PowerSeries::exp_series(c(0.0, 1.0)),
            phi1,
            c(0.0, 0.0),
        ),
        (
            "N=4 z^4 phi=s",
            4,
            PowerSeries::monomial(c(1.0, 0.0), 4),
            phis,
            c(0.2, 0.0),
        ),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, n, g, phi, z) in cases {
        let problem = CauchyProblem::new(n, c(1.0, 0.0), phi, InitialData::Series(g), 2.0)
            .expect("valid problem");
        let series = solve_series(&problem, 1.0, z).expect("series reachable");
        for scale in [1000u64, 10_000] {
            let est = solve_probabilistic(&problem, 1.0, z, scale, 100_000, master_seed ^ scale)
                .expect("valid spec");
            let allowance = 25.0 * (1.0 + series.norm()) / scale as f64;
            let gap = (est.value - series).norm();
            let ok = gap <= 4.0 * est.error + allowance;
            pass &= ok;
            details.push(format!(
                "{name} n={scale}: gap {} vs 4SE {} + C/n {}{}",
                f(gap),
                f(4.0 * est.error),
                f(allowance),
                if ok { "" } else { " EXCEEDED" }
            ));
        }
    }
    ("probabilistic vs series solution", pass, details)
}

// 9. Exponential functionals and the linear-potential Feynman-Kac formula.
fn feynman_kac_suite(master_seed: u64) -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let scale = 10_000u64;
    let paths = 100_000u64;

    // exponential functional against the closed form
    for n in [2u32, 3] {
        for (aname, a) in [
            ("1", TimeFn::constant(c(1.0, 0.0))),
            ("s", TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)])),
        ] {
            let s = spec(n, c(1.0, 0.0), scale);
            let closed = exp_functional_limit(&s, 1.0, &a);
            let est = exp_functional_mc(&s, 1.0, &a, paths, master_seed ^ 0x91 ^ n as u64);
            let allowance = 25.0 * (1.0 + closed.norm()) / scale as f64;
            let gap = (est.value - closed).norm();
            let ok = gap <= 4.0 * est.error + allowance;
            pass &= ok;
            details.push(format!(
                "exp-functional N={n} a={aname}: gap {} vs 4SE {} + C/n {}{}",
                f(gap),
                f(4.0 * est.error),
                f(allowance),
                if ok { "" } else { " EXCEEDED" }
            ));
        }
    }

    // Feynman-Kac with linear potentials over a 3-atom measure
    let mu = AtomicMeasure::new(vec![
        (1.0, c(0.5, 0.0)),
        (-0.7, c(0.3, 0.1)),
        (0.4, c(0.2, 0.0)),
    ]);
    let fser = crate::series::fourier_of_measure(&mu);
    let x = 0.2;
    for n in [2u32, 3] {
        for (aname, a) in [
            ("0", TimeFn::constant(c(0.0, 0.0))),
            ("1", TimeFn::constant(c(1.0, 0.0))),
            ("s", TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)])),
        ] {
            let s = spec(n, c(1.0, 0.0), scale);
            let pot = LinearPotential::new(a);
            let closed = fk_solution_closed(&s, 1.0, x, &pot, &mu);
            let est = fk_solution_mc(
                &s,
                1.0,
                x,
                &pot,
                &fser,
                paths,
                master_seed ^ 0xF3 ^ ((n as u64) << 8),
            );
            let allowance = 25.0 * (1.0 + closed.norm()) / scale as f64;
            let gap = (est.value - closed).norm();
            let ok = gap <= 4.0 * est.error + allowance;
            pass &= ok;
            details.push(format!(
                "fk N={n} A={aname}: gap {} vs 4SE {} + C/n {}{}",
                f(gap),
                f(4.0 * est.error),
                f(allowance),
                if ok { "" } else { " EXCEEDED" }
            ));

            let r = fk_residual(&s, 0.6, 0.25, &pot, &mu).expect("interior t");
            let okr = r <= 1e-5;
            pass &= okr;
            details.push(format!(
                "fk residual N={n} A={aname}: {}{}",
                f(r),
                if okr { "" } else { " > 1e-5" }
            ));
        }
    }
    ("Feynman-Kac estimators vs closed forms", pass, details)
}

// 10. Mean exit time within [n^{2/N-1}R^2, n^{2/N-1}R^2 + 1/n] ± 4 SE and
// median shrinkage. The displayed interval drops the overshoot cross term
// 2R n^{1/N-1}|α|^{1/N}; correct simulations land above it, so the
// containment legs fail. The corrected interval is reported alongside.
fn exit_time_suite(master_seed: u64) -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let radius = 1.0;
    let samples = 100_000u64;
    for n in [3u32, 4] {
        for scale in [100u64, 1000] {
            let s = spec(n, c(1.0, 0.0), scale);
            let horizon = default_horizon(&s, radius);
            let mut mean = 0.0f64;
            let mut m2 = 0.0f64;
            let mut truncated = 0u64;
            for i in 0..samples {
                let e = sample_exit(
                    &s,
                    radius,
                    horizon,
                    path_seed(master_seed ^ 0xE1, ((n as u64) << 40) | (scale << 20) | i),
                );
                if e.truncated {
                    truncated += 1;
                }
                let d = e.tau_n - mean;
                mean += d / (i + 1) as f64;
                m2 += d * (e.tau_n - mean);
            }
            let se = (m2 / (samples as f64 - 1.0) / samples as f64).sqrt();
            let lo = (scale as f64).powf(2.0 / n as f64 - 1.0) * radius * radius;
            let hi = lo + 1.0 / scale as f64;
            let corrected_hi =
                ((scale as f64).powf(1.0 / n as f64) * radius + 1.0).powi(2) / scale as f64;
            let ok = mean >= lo - 4.0 * se && mean <= hi + 4.0 * se;
            let trunc_ok = (truncated as f64) < 1e-3 * samples as f64;
            pass &= ok && trunc_ok;
            let corrected_ok = mean >= lo - 4.0 * se && mean <= corrected_hi + 4.0 * se;
            details.push(format!(
                "N={n} n={scale}: E[tau] {} 4SE {} vs displayed [{}, {}]{}; corrected upper {} ({}); truncated {}{}",
                f(mean),
                f(4.0 * se),
                f(lo),
                f(hi),
                if ok { "" } else { " OUTSIDE" },
                f(corrected_hi),
                if corrected_ok { "contains" } else { "violated" },
                truncated,
                if trunc_ok { "" } else { " (over the 1e-3 cap)" }
            ));
        }
    }

    // median shrinkage along n for N = 3, 4
    for n in [3u32, 4] {
        let mut medians = Vec::new();
        for scale in [100u64, 1000, 10_000] {
            let s = spec(n, c(1.0, 0.0), scale);
            let horizon = default_horizon(&s, radius);
            let mut taus: Vec<f64> = (0..4000u64)
                .map(|i| {
                    sample_exit(
                        &s,
                        radius,
                        horizon,
                        path_seed(master_seed ^ 0xE2, ((n as u64) << 40) | (scale << 20) | i),
                    )
                    .tau_n
                })
                .collect();
            taus.sort_by(f64::total_cmp);
            medians.push(taus[taus.len() / 2]);
        }
        let ok = medians[0] > medians[1] && medians[1] > medians[2];
        pass &= ok;
        details.push(format!(
            "N={n} median tau over n in {{100,1000,10000}}: {}, {}, {}{}",
            f(medians[0]),
            f(medians[1]),
            f(medians[2]),
            if ok { " decreasing" } else { " NOT DECREASING" }
        ));
    }
    ("exit-time mean containment and shrinkage", pass, details)
}

// 11. The 1/τ-weighted derivative estimator with two-point extrapolation,
// 5% target. The estimator as displayed converges to a constant multiple of
// g^{(N)}(z) (the weight 1/τ_n correlates with the stopped increments and
// E[1/τ]E[τ] > 1 scale-invariantly), so these legs fail; the ratio-of-means
// diagnostic E[g(z+W(τ))-g(z)]/E[τ] is reported alongside and does recover
// the derivative.
fn derivative_estimator_suite(master_seed: u64) -> (&'static str, bool, Vec<String>) {
    let mut pass = true;
    let mut details = Vec::new();
    let radius = 0.5;
    let schedule = [1000u64, 10_000];
    let paths = 100_000u64;
    for n in [2u32, 3] {
        let cases: Vec<(&str, PowerSeries, Box<dyn Fn(Complex64) -> Complex64>)> = vec![
            (
                "z^N",
                PowerSeries::monomial(c(1.0, 0.0), n as usize),
                Box::new(move |_z| c(factorial(n as usize), 0.0)),
            ),
            (
                "e^z",
                PowerSeries::exp_series(c(1.0, 0.0)),
                Box::new(|z: Complex64| z.exp()),
            ),
        ];
        for (gname, g, dn_of) in cases {
            for z in [c(0.0, 0.0), c(0.2, 0.0)] {
                let est = derivative_estimator(
                    n,
                    c(1.0, 0.0),
                    radius,
                    &g,
                    z,
                    &schedule,
                    paths,
                    master_seed ^ 0xD4 ^ ((n as u64) << 16),
                )
                .expect("estimator ran");
                let target = dn_of(z);
                let rel = (est.extrapolated - target).norm() / target.norm();
                let ok = rel <= 0.05;
                pass &= ok;
                let last = est.per_n.last().expect("nonempty schedule");
                details.push(format!(
                    "N={n} g={gname} z={}: extrapolated {} target {} rel-err {}{}; per-n {} | {}; ratio-of-means {}",
                    cf(z),
                    cf(est.extrapolated),
                    cf(target),
                    f(rel),
                    if ok { "" } else { " > 5%" },
                    cf(est.per_n[0].estimate),
                    cf(last.estimate),
                    cf(last.ratio_of_means)
                ));
            }
        }
    }
    ("1/tau derivative estimator", pass, details)
}

// 12. Byte-identical deterministic output across worker counts 1 and 8.
fn determinism_suite(master_seed: u64) -> (&'static str, bool, Vec<String>) {
    fn bundle(seed: u64) -> String {
        let mut out = String::new();
        let s3 = spec(3, c(1.0, 0.0), 1000);
        let fexp = PowerSeries::exp_series(c(1.0, 0.0));
        let e = expect_mc(&s3, 1.0, &fexp, c(0.1, 0.0), 10_000, seed);
        out.push_str(&format!("expect_mc {} {}\n", cf(e.value), f(e.error)));

        let problem = CauchyProblem::new(
            2,
            c(1.0, 0.0),
            TimeFn::poly(&[c(0.0, 0.0), c(1.0, 0.0)]),
            InitialData::Series(PowerSeries::exp_series(c(1.0, 0.0))),
            2.0,
        )
        .expect("valid problem");
        let e = solve_probabilistic(&problem, 1.0, c(0.0, 0.0), 1000, 10_000, seed ^ 1)
            .expect("valid spec");
        out.push_str(&format!(
            "solve_probabilistic {} {}\n",
            cf(e.value),
            f(e.error)
        ));

        let s = spec(3, c(1.0, 0.0), 1000);
        let e = exp_functional_mc(&s, 1.0, &TimeFn::constant(c(1.0, 0.0)), 10_000, seed ^ 2);
        out.push_str(&format!(
            "exp_functional_mc {} {}\n",
            cf(e.value),
            f(e.error)
        ));

        let d = derivative_estimator(
            3,
            c(1.0, 0.0),
            0.5,
            &PowerSeries::monomial(c(1.0, 0.0), 3),
            c(0.0, 0.0),
            &[1000],
            10_000,
            seed ^ 3,
        )
        .expect("estimator ran");
        out.push_str(&format!(
            "derivative_estimator {} {}\n",
            cf(d.per_n[0].estimate),
            f(d.per_n[0].se)
        ));

        let rep = martingale_check(
            &s3,
            &PowerSeries::monomial(c(1.0, 0.0), 1),
            c(0.0, 0.0),
            2,
            &[0.5],
            1.0,
            5000,
            seed ^ 4,
        );
        out.push_str(&format!(
            "martingale_check {} {}\n",
            cf(rep.entries[0].conditional_mean),
            f(rep.entries[0].se)
        ));

        let lim = limit_series(&s3, 1.0, &fexp, c(0.0, 0.0)).expect("series reachable");
        out.push_str(&format!(
            "limit_series {} {}\n",
            cf(lim.value),
            f(lim.error)
        ));
        out
    }

    let mut texts = Vec::new();
    for workers in [1usize, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        texts.push(pool.install(|| bundle(master_seed)));
    }
    // and a repeat at 8 workers to confirm run-to-run stability
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .expect("thread pool");
    texts.push(pool.install(|| bundle(master_seed)));

    let pass = texts[0] == texts[1] && texts[1] == texts[2];
    let mut details: Vec<String> = texts[0].lines().map(|l| format!("workers-1 {l}")).collect();
    details.push(format!(
        "workers 1 vs 8: {}; repeat at 8: {}",
        if texts[0] == texts[1] {
            "identical"
        } else {
            "DIFFER"
        },
        if texts[1] == texts[2] {
            "identical"
        } else {
            "DIFFER"
        }
    ));
    ("deterministic output across worker counts", pass, details)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_text_is_deterministic_shape() {
        let o = CriterionOutcome {
            id: 1,
            name: "x",
            passed: true,
            details: vec!["line".into()],
            elapsed_ms: 5,
        };
        let t = report_text(&[o]);
        assert!(t.contains("criterion 01 x: PASS"));
        assert!(t.contains("  line"));
        assert!(!t.contains("ms"));
    }
}
