//! Exact complex moments of W^n(t), the asymptotic moment formula with its
//! displayed remainder bound, and characteristic-function machinery for the
//! step law and the walk.

use num_complex::Complex64;

use crate::cnum::{cpow_u64, factorial, BinomialTable};
use crate::error::{Error, Result};
use crate::walk::WalkSpec;

/// Largest moment order computed through the exact binomial table. Above
/// this the binomials would round; we refuse instead of degrading.
pub const MAX_MOMENT_ORDER: u32 = 64;

/// Exact and asymptotic views of one moment E[(W^n(t))^k].
#[derive(Clone, Copy, Debug)]
pub struct MomentResult {
    pub k: u32,
    pub exact_value: Complex64,
    pub leading_term: Complex64,
    pub remainder_bound: f64,
    pub on_grid: bool,
}

/// E[(Σ_{j≤m} ξ_j)^k] · n^{-k/N} by the binomial convolution over steps:
/// M_m(k) = Σ_j C(k,j)·M_{m-1}(k-j)·E[ξ^j]. Independence makes this identical
/// to the partition expansion at polynomial cost. Exactly zero when N ∤ k.
pub fn exact_moment(spec: &WalkSpec, m_steps: u64, k: u32) -> Result<Complex64> {
    if k > MAX_MOMENT_ORDER {
        return Err(Error::MomentOrder {
            k,
            limit: MAX_MOMENT_ORDER,
        });
    }
    let n = spec.order();
    if k % n != 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let binom = BinomialTable::new(k as usize);
    // nonzero step moments E[ξ^{jN}] = α^j
    let step_moms: Vec<Complex64> = (0..=(k / n))
        .map(|j| cpow_u64(spec.alpha(), j as u64))
        .collect();

    let mut cur = vec![Complex64::new(0.0, 0.0); k as usize + 1];
    cur[0] = Complex64::new(1.0, 0.0);
    for _ in 0..m_steps {
        let mut next = vec![Complex64::new(0.0, 0.0); k as usize + 1];
        for kk in (0..=k as usize).step_by(n as usize) {
            // only orders divisible by N are ever nonzero
            let mut acc = Complex64::new(0.0, 0.0);
            let mut j = 0usize;
            while j <= kk {
                acc += binom.get(kk, j) * step_moms[j / n as usize] * cur[kk - j];
                j += n as usize;
            }
            next[kk] = acc;
        }
        cur = next;
    }
    let scale = spec.space_scale().powi(k as i32);
    Ok(cur[k as usize] * scale)
}

/// The displayed leading term (αt/N!)^{k/N}·k!/(k/N)!, zero when k/N is not
/// an integer in [0, ⌊nt⌋].
pub fn leading_term(spec: &WalkSpec, t: f64, k: u32) -> Complex64 {
    let n = spec.order();
    if k % n != 0 {
        return Complex64::new(0.0, 0.0);
    }
    let h = (k / n) as u64;
    if h > spec.steps_by(t) {
        return Complex64::new(0.0, 0.0);
    }
    let base = spec.alpha() * t / factorial(n as usize);
    cpow_u64(base, h) * (factorial(k as usize) / factorial(h as usize))
}

/// The displayed remainder bound for k = hN:
/// |α|^h t^{h-1} (h²+h)/(2n) + (|α|^h/n)(0.792hN/log(hN+1))^{hN}.
/// Zero for h ∈ {0, 1}.
pub fn remainder_bound(spec: &WalkSpec, t: f64, h: u32) -> f64 {
    if h < 2 {
        return 0.0;
    }
    let n = spec.scale() as f64;
    let abs_alpha_h = spec.alpha().norm().powi(h as i32);
    let hf = h as f64;
    let first = abs_alpha_h * t.powi(h as i32 - 1) * (hf * hf + hf) / (2.0 * n);
    let hn = (h * spec.order()) as f64;
    let bell = (hn * ((0.792 * hn).ln() - (hn + 1.0).ln().ln())).exp();
    first + abs_alpha_h / n * bell
}

/// Bundle the three views of E[(W^n(t))^k] at time t (steps ⌊nt⌋).
pub fn moment_result(spec: &WalkSpec, t: f64, k: u32) -> Result<MomentResult> {
    let m = spec.steps_by(t);
    let exact_value = exact_moment(spec, m, k)?;
    let leading = leading_term(spec, t, k);
    let h = if k % spec.order() == 0 {
        k / spec.order()
    } else {
        0
    };
    Ok(MomentResult {
        k,
        exact_value,
        leading_term: leading,
        remainder_bound: remainder_bound(spec, t, h),
        on_grid: spec.on_grid(t),
    })
}

/// E[e^{λξ}] through both routes: the N-point average (1/N)Σ exp(α^{1/N}λζ_j)
/// and the lacunary series Σ_m λ^{mN}α^m/(mN)!. Both are returned so callers
/// can assert the cross-route agreement.
pub fn step_mgf_routes(spec: &WalkSpec, lambda: Complex64) -> (Complex64, Complex64) {
    let set = spec.step_set();
    let n = spec.order();
    let mut avg = Complex64::new(0.0, 0.0);
    for k in 0..n {
        avg += (lambda * set.value(k)).exp();
    }
    avg /= n as f64;

    let lam_n = cpow_u64(lambda, n as u64) * spec.alpha();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for m in 1..=500u32 {
        let mut denom = 1.0;
        for i in ((m - 1) * n + 1)..=(m * n) {
            denom *= i as f64;
        }
        term *= lam_n / denom;
        sum += term;
        if term.norm() < 1e-18 * (1.0 + sum.norm()) {
            break;
        }
    }
    (avg, sum)
}

/// E[e^{λξ}], the N-point average route.
pub fn step_mgf(spec: &WalkSpec, lambda: Complex64) -> Complex64 {
    let (avg, series) = step_mgf_routes(spec, lambda);
    debug_assert!(
        (avg - series).norm() <= 1e-12 * (1.0 + avg.norm()),
        "mgf routes disagree at λ={lambda}: {avg} vs {series}"
    );
    avg
}

/// The gap E[e^{λξ}] − e^{αλ^N/N!} together with a sampled estimate of the
/// constant C with |gap| ≤ C·|α|²·|λ|^{2N} on |λ| ≤ radius.
#[derive(Clone, Copy, Debug)]
pub struct MgfGap {
    pub gap: Complex64,
    pub bound_constant: f64,
}

/// The gap and the constant from the factorization gap = α²λ^{2N}·g(λ);
/// C is the max of |g| over 10^4 points of the circle |λ| = radius, where the
/// maximum modulus principle puts the sup over the disk. It is an estimate of
/// the true sup; tests apply a 2x safety factor.
pub fn step_mgf_gap(spec: &WalkSpec, lambda: Complex64, radius: f64) -> Result<MgfGap> {
    if lambda.norm() > radius {
        return Err(Error::InvalidArgument(format!(
            "|lambda| = {} exceeds the configured radius {radius}",
            lambda.norm()
        )));
    }
    let n = spec.order();
    let target = (spec.alpha() * cpow_u64(lambda, n as u64) / factorial(n as usize)).exp();
    let gap = step_mgf(spec, lambda) - target;

    let mut sup = 0.0f64;
    for j in 0..10_000 {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / 10_000.0;
        let u = Complex64::from_polar(radius, theta);
        sup = sup.max(gap_series_g(spec, u).norm());
    }
    Ok(MgfGap {
        gap,
        bound_constant: sup,
    })
}

/// g(λ) = Σ_m λ^{mN} α^m (1/((m+2)N)! − 1/((m+2)!(N!)^{m+2})).
fn gap_series_g(spec: &WalkSpec, lambda: Complex64) -> Complex64 {
    let n = spec.order() as usize;
    let lam_n = cpow_u64(lambda, n as u64) * spec.alpha();
    let n_fact = factorial(n);
    // d_m pieces advanced incrementally in f64
    let mut inv_big = 1.0 / factorial(2 * n); // 1/((m+2)N)! at m=0
    let mut inv_small = 1.0 / (2.0 * n_fact * n_fact); // 1/((m+2)!(N!)^{m+2}) at m=0
    let mut pow = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 0..500usize {
        sum += pow * (inv_big - inv_small);
        pow *= lam_n;
        if pow.norm() * (inv_big + inv_small) < 1e-20 * (1.0 + sum.norm()) {
            break;
        }
        let base = (m + 3) * n;
        for i in (base - n + 1)..=base {
            inv_big /= i as f64;
        }
        inv_small /= (m as f64 + 3.0) * n_fact;
    }
    sum
}

/// ψ_n(λ) = (ψ_ξ(λ n^{-1/N}))^{⌊nt⌋} with ψ_ξ(λ) = E[e^{iλξ}].
pub fn characteristic_function(spec: &WalkSpec, t: f64, lambda: Complex64) -> Complex64 {
    let steps = spec.steps_by(t);
    let arg = Complex64::new(0.0, 1.0) * lambda * spec.space_scale();
    let psi_step = step_mgf(spec, arg);
    cpow_u64(psi_step, steps)
}

/// The n→∞ characteristic function exp(i^N λ^N α t / N!).
pub fn characteristic_function_limit(spec: &WalkSpec, t: f64, lambda: Complex64) -> Complex64 {
    let n = spec.order();
    (crate::cnum::i_pow(n as u64) * cpow_u64(lambda, n as u64) * spec.alpha() * t
        / factorial(n as usize))
    .exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{exact_distribution, sample_path};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(n: u32, alpha: Complex64, scale: u64) -> WalkSpec {
        WalkSpec::new(n, alpha, scale).unwrap()
    }

    /// Brute-force E[(W^n(m/n))^k] over all N^m step sequences. Independent
    /// of the convolution recursion; the oracle for small instances.
    fn brute_force_moment(spec: &WalkSpec, m: u32, k: u32) -> Complex64 {
        let set = spec.step_set();
        let n = spec.order();
        let scale = spec.space_scale();
        let total = (n as u64).pow(m);
        let mut acc = c(0.0, 0.0);
        for code in 0..total {
            let mut rem = code;
            let mut s = c(0.0, 0.0);
            for _ in 0..m {
                s += set.value((rem % n as u64) as u32);
                rem /= n as u64;
            }
            acc += cpow_u64(scale * s, k as u64);
        }
        acc / total as f64
    }

    #[test]
    fn recursion_matches_brute_force() {
        for n in 2..=4u32 {
            for &alpha in &[c(1.0, 0.0), c(1.0, 1.0)] {
                let s = spec(n, alpha, 8);
                for m in 0..=6u32 {
                    for k in 0..=(2 * n) {
                        let exact = exact_moment(&s, m as u64, k).unwrap();
                        let brute = brute_force_moment(&s, m, k);
                        assert!(
                            (exact - brute).norm() <= 1e-10 * (1.0 + brute.norm()),
                            "N={n} m={m} k={k}: {exact} vs {brute}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn vanishing_off_lattice_orders_is_exact() {
        let s = spec(3, c(2.0, -1.0), 10);
        for m in 0..=10u64 {
            for k in 1..=9u32 {
                if k % 3 != 0 {
                    assert_eq!(exact_moment(&s, m, k).unwrap(), c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn grid_first_moment_identities() {
        // E[W^N] = alpha * m/n exactly on the grid
        let s = spec(3, c(1.0, 0.0), 9);
        let v = exact_moment(&s, 9, 3).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        // k=1 vanishes
        assert_eq!(exact_moment(&s, 9, 1).unwrap(), c(0.0, 0.0));
        // N=2, n=4, m=4, k=2 -> 1
        let s = spec(2, c(1.0, 0.0), 4);
        let v = exact_moment(&s, 4, 2).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn moment_order_limit() {
        let s = spec(2, c(1.0, 0.0), 4);
        assert!(matches!(
            exact_moment(&s, 4, 65),
            Err(Error::MomentOrder { k: 65, limit: 64 })
        ));
    }

    #[test]
    fn leading_term_examples() {
        let s = spec(4, c(1.0, 0.0), 1000);
        assert!((leading_term(&s, 1.0, 4) - c(1.0, 0.0)).norm() < 1e-15);

        let s = spec(3, c(1.0, 0.0), 1000);
        assert_eq!(leading_term(&s, 1.0, 2), c(0.0, 0.0));

        // N=2, t=2, k=4: (alpha t/2)^2 * 4!/2! = 12
        let s = spec(2, c(1.0, 0.0), 1000);
        assert!((leading_term(&s, 2.0, 4) - c(12.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn leading_term_indicator_cutoff() {
        // h > floor(nt) suppresses the term
        let s = spec(2, c(1.0, 0.0), 1);
        assert_eq!(leading_term(&s, 1.0, 4), c(0.0, 0.0)); // h=2 > floor(1*1)=1
    }

    #[test]
    fn remainder_bound_examples() {
        let s = spec(2, c(1.0, 0.0), 100);
        assert_eq!(remainder_bound(&s, 1.0, 0), 0.0);
        assert_eq!(remainder_bound(&s, 1.0, 1), 0.0);
        let got = remainder_bound(&s, 1.0, 2);
        let want = (6.0 / 2.0 + (0.792 * 4.0 / 5.0f64.ln()).powi(4)) / 100.0;
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn remainder_contains_exact_minus_leading() {
        for n in 2..=4u32 {
            for &scale in &[10u64, 100, 1000] {
                let s = spec(n, c(1.0, 0.0), scale);
                for h in 2..=4u32 {
                    let k = h * n;
                    if k > MAX_MOMENT_ORDER || (h as u64) > scale {
                        continue;
                    }
                    let exact = exact_moment(&s, scale, k).unwrap();
                    let lead = leading_term(&s, 1.0, k);
                    let bound = remainder_bound(&s, 1.0, h);
                    assert!(
                        (exact - lead).norm() <= bound,
                        "containment fails N={n} n={scale} h={h}: |{}| > {bound}",
                        (exact - lead).norm()
                    );
                }
            }
        }
    }

    #[test]
    fn moments_against_lattice_law() {
        // expectation of z^k over the exact law equals the recursion
        for n in 2..=3u32 {
            let s = spec(n, c(1.0, 1.0), 9);
            for m in 0..=12u64 {
                let d = exact_distribution(&s, m).unwrap();
                for k in (0..=2 * n).step_by(1) {
                    let got = d.moment(k);
                    let want = exact_moment(&s, m, k).unwrap();
                    assert!(
                        (got - want).norm() <= 1e-9 * (1.0 + want.norm()),
                        "lattice law vs recursion N={n} m={m} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn step_mgf_examples() {
        // N=2, alpha=1: cosh
        let s = spec(2, c(1.0, 0.0), 1);
        for &l in &[0.3, 1.0, 2.5] {
            let v = step_mgf(&s, c(l, 0.0));
            assert!((v.re - l.cosh()).abs() < 1e-12);
            assert!(v.im.abs() < 1e-14);
        }
        // lambda = 0 -> 1
        let s = spec(5, c(1.0, 1.0), 1);
        assert_eq!(step_mgf(&s, c(0.0, 0.0)), c(1.0, 0.0));
        // N=3, alpha=1, lambda=1: sum 1/(3m)!
        let s = spec(3, c(1.0, 0.0), 1);
        let v = step_mgf(&s, c(1.0, 0.0));
        let series: f64 = (0..10).map(|m| 1.0 / factorial(3 * m)).sum();
        assert!((v.re - series).abs() < 1e-12, "{} vs {series}", v.re);
    }

    #[test]
    fn step_mgf_two_routes_agree() {
        for n in 1..=5u32 {
            for &alpha in &[c(1.0, 0.0), c(0.5, -1.5)] {
                let s = spec(n, alpha, 1);
                for j in 0..20 {
                    let theta = j as f64;
                    let l = Complex64::from_polar(5.0 * (j as f64 + 1.0) / 20.0, theta);
                    let (avg, series) = step_mgf_routes(&s, l);
                    assert!(
                        (avg - series).norm() <= 1e-12 * (1.0 + avg.norm()),
                        "routes differ N={n} λ={l}: {avg} vs {series}"
                    );
                }
            }
        }
    }

    #[test]
    fn mgf_gap_examples() {
        let s = spec(2, c(1.0, 0.0), 1);
        let g = step_mgf_gap(&s, c(0.0, 0.0), 1.0).unwrap();
        assert!(g.gap.norm() < 1e-15);

        // N=2, lambda=0.5: cosh(0.5) - e^{0.125}
        let g = step_mgf_gap(&s, c(0.5, 0.0), 1.0).unwrap();
        let want = 0.5f64.cosh() - 0.125f64.exp();
        assert!((g.gap.re - want).abs() < 1e-12);

        // inequality with the sampled constant (2x safety)
        let s = spec(3, c(1.0, 0.0), 1);
        let l = c(0.3, 0.0);
        let g = step_mgf_gap(&s, l, 1.0).unwrap();
        assert!(g.gap.norm() <= 2.0 * g.bound_constant * l.norm().powi(6));
    }

    #[test]
    fn mgf_gap_inequality_over_disk() {
        for n in 2..=4u32 {
            let s = spec(n, c(1.0, 1.0), 1);
            let radius = 1.5;
            for j in 0..24 {
                let l = Complex64::from_polar(radius * (j % 5 + 1) as f64 / 5.0, j as f64 * 0.7);
                let g = step_mgf_gap(&s, l, radius).unwrap();
                let rhs =
                    2.0 * g.bound_constant * s.alpha().norm_sqr() * l.norm().powi(2 * n as i32);
                assert!(g.gap.norm() <= rhs + 1e-15, "N={n} λ={l}");
            }
        }
    }

    #[test]
    fn characteristic_function_examples() {
        let s = spec(3, c(1.0, 0.0), 100);
        assert_eq!(characteristic_function(&s, 1.0, c(0.0, 0.0)), c(1.0, 0.0));

        // N=2, n=1e4: close to e^{-1/2} at lambda=1
        let s = spec(2, c(1.0, 0.0), 10_000);
        let v = characteristic_function(&s, 1.0, c(1.0, 0.0));
        let lim = (-0.5f64).exp();
        assert!((v - c(lim, 0.0)).norm() < 2e-3, "{v} vs {lim}");
    }

    #[test]
    fn characteristic_function_rate_halves() {
        // O(1/n): doubling n halves the distance to the limit
        let s1 = spec(4, c(1.0, 0.0), 1000);
        let s2 = spec(4, c(1.0, 0.0), 2000);
        let l = c(1.0, 0.0);
        let lim = characteristic_function_limit(&s1, 1.0, l);
        let e1 = (characteristic_function(&s1, 1.0, l) - lim).norm();
        let e2 = (characteristic_function(&s2, 1.0, l) - lim).norm();
        let ratio = e1 / e2;
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rate_of_moment_remainder_is_one_over_n() {
        // |exact - leading| * n bounded over n
        let mut products = vec![];
        for &scale in &[100u64, 1000, 10_000] {
            let s = spec(2, c(1.0, 0.0), scale);
            let exact = exact_moment(&s, scale, 4).unwrap();
            let lead = leading_term(&s, 1.0, 4);
            products.push((exact - lead).norm() * scale as f64);
        }
        let max = products.iter().cloned().fold(0.0, f64::max);
        let min = products.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max < 10.0 * (min + 1e-9), "products {products:?}");
    }

    #[test]
    fn empirical_mean_and_variance_of_walk() {
        // MC check of E[W] = 0 and E|W|^2 = floor(nt)/n^{2/N}
        let s = spec(3, c(1.0, 0.0), 1000);
        let paths = 20_000u64;
        let mut mean = c(0.0, 0.0);
        let mut mean_sq = 0.0;
        for i in 0..paths {
            let p = sample_path(&s, 1.0, crate::rng::path_seed(11, i));
            let w = p.endpoint();
            mean += w;
            mean_sq += w.norm_sqr();
        }
        mean /= paths as f64;
        mean_sq /= paths as f64;
        let want_var = 1000.0 / 1000.0f64.powf(2.0 / 3.0);
        // SE of |W|^2-mean ~ sqrt(Var(|W|^2)/paths); Var(|W|^2) ~ want_var^2
        let se = want_var / (paths as f64).sqrt();
        assert!(
            mean.norm() <= 4.0 * (want_var / paths as f64).sqrt() * 2.0,
            "mean {mean}"
        );
        assert!(
            (mean_sq - want_var).abs() <= 4.0 * se * 2.0,
            "{mean_sq} vs {want_var}"
        );
    }
}
