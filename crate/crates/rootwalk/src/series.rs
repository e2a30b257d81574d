//! Power-series calculus for entire functions: evaluation with a recorded
//! tail bound, derivative shifts, exponential-type estimation, the
//! coefficient-growth certificate, and Fourier transforms of atomic measures.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cnum::{i_pow, ln_factorial};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_TERMS: usize = 200;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

// componentwise zero test: norm_sqr underflows long before the components do
fn is_zero_c(a: &Complex64) -> bool {
    a.re == 0.0 && a.im == 0.0
}

/// Truncation control recorded with every evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub max_terms: usize,
    pub tail_tolerance: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            max_terms: DEFAULT_MAX_TERMS,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }
}

/// An entire function represented by its Taylor coefficients about `center`.
///
/// Coefficients are zero-padded to the policy length, so a finite polynomial
/// and a factorially-decaying truncation live in the same representation
/// window and the type estimate distinguishes them by the stored tail.
#[derive(Clone, Debug)]
pub struct PowerSeries {
    coeffs: Vec<Complex64>,
    center: Complex64,
    policy: TruncationPolicy,
    // index one past the last nonzero coefficient (min 1); Horner stops here
    eff_len: usize,
    // cached |b_k|^{1/k} estimate; coefficients are immutable after build
    type_c: f64,
}

/// Result of an evaluation with its truncation provenance.
#[derive(Clone, Copy, Debug)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

/// Windowed estimate of the exponential type c = limsup |a_k k!|^{1/k}.
///
/// `b_log_abs[k]` holds ln|a_k·k!| (−∞ where a_k = 0); b_k itself overflows
/// f64 long before k reaches typical truncation lengths.
#[derive(Clone, Debug)]
pub struct ExponentialTypeEstimate {
    /// max over the tail window of |b_k|^{1/k}; robust to vanishing
    /// subsequences (cosine has b_k = 0 at every odd k).
    pub type_c: f64,
    /// |b_k|^{1/k} at the largest k in the window with b_k != 0.
    pub point_estimate: f64,
    pub window: (usize, usize),
    pub b_log_abs: Vec<f64>,
}

/// Outcome of the coefficient-growth test. This certifies geometric decay of
/// the tested tail and reports the partial sum; it is a heuristic certificate
/// from finitely many coefficients, not a convergence proof.
#[derive(Clone, Copy, Debug)]
pub struct GrowthCheck {
    pub satisfied: bool,
    pub partial_sum: f64,
}

/// Finite complex measure on the line with compact support: atoms (y_j, w_j).
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<(f64, Complex64)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(f64, Complex64)>) -> Self {
        Self { atoms }
    }

    pub fn support_radius(&self) -> f64 {
        self.atoms.iter().map(|(y, _)| y.abs()).fold(0.0, f64::max)
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.norm()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl PowerSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self::with_center_and_policy(
            coeffs,
            Complex64::new(0.0, 0.0),
            TruncationPolicy::default(),
        )
    }

    pub fn with_center_and_policy(
        mut coeffs: Vec<Complex64>,
        center: Complex64,
        policy: TruncationPolicy,
    ) -> Self {
        let len = policy.max_terms.max(1);
        coeffs.resize(len, Complex64::new(0.0, 0.0));
        let eff_len = coeffs
            .iter()
            .rposition(|a| !is_zero_c(a))
            .map_or(1, |d| d + 1);
        let type_c = estimate_type(&coeffs).type_c;
        Self {
            coeffs,
            center,
            policy,
            eff_len,
            type_c,
        }
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0)])
    }

    /// A finite polynomial Σ c_k z^k.
    pub fn polynomial(coeffs: &[Complex64]) -> Self {
        Self::new(coeffs.to_vec())
    }

    /// e^{cz} truncated at the default length.
    pub fn exp_series(c: Complex64) -> Self {
        Self::exp_series_with_terms(c, DEFAULT_MAX_TERMS)
    }

    pub fn exp_series_with_terms(c: Complex64, terms: usize) -> Self {
        let mut coeffs = Vec::with_capacity(terms);
        let mut a = Complex64::new(1.0, 0.0);
        for k in 0..terms {
            coeffs.push(a);
            a *= c / (k as f64 + 1.0);
        }
        Self::new(coeffs)
    }

    /// cos z truncated at the default length.
    pub fn cos_series() -> Self {
        let terms = DEFAULT_MAX_TERMS;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); terms];
        let mut a = 1.0f64;
        let mut k = 0usize;
        while k < terms {
            coeffs[k] = Complex64::new(a, 0.0);
            a = -a / ((k + 1) as f64 * (k + 2) as f64);
            k += 2;
        }
        Self::new(coeffs)
    }

    /// c·z^degree.
    pub fn monomial(c: Complex64, degree: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(is_zero_c)
    }

    /// Index of the highest nonzero coefficient, if any.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|a| !is_zero_c(a))
    }

    /// Plain truncated Horner evaluation, no tail accounting. This is the
    /// hot path used inside Monte Carlo loops; `evaluate` wraps it with the
    /// tail bound and the tolerance check.
    pub fn value_at(&self, z: Complex64) -> Complex64 {
        let w = z - self.center;
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in self.coeffs[..self.eff_len].iter().rev() {
            acc = acc * w + a;
        }
        acc
    }

    /// Σ_{k<K} a_k (z-center)^k with the exponential-type tail bound.
    /// Errors when the bound exceeds the policy tolerance (relative to the
    /// value magnitude), reporting how many terms would be needed.
    pub fn evaluate(&self, z: Complex64) -> Result<SeriesValue> {
        let value = self.value_at(z);
        let r = (z - self.center).norm();
        let tail_bound = self.tail_bound(r);
        let tol = self.policy.tail_tolerance * (1.0 + value.norm());
        if tail_bound > tol {
            return Err(Error::Truncation {
                bound: tail_bound,
                tolerance: tol,
                required_terms: self.required_terms(r, tol),
            });
        }
        Ok(SeriesValue {
            value,
            tail_bound,
            terms_used: self.coeffs.len(),
        })
    }

    /// Tail bound Σ_{k>=K} (c+ε)^k r^k / k! with ε = 0.1c, the same (c+ε)
    /// device the admissible-function estimates use. Zero when the visible
    /// tail window is itself zero (polynomials).
    pub fn tail_bound(&self, r: f64) -> f64 {
        let k = self.coeffs.len();
        let x = 1.1 * self.type_c * r;
        if x == 0.0 {
            return 0.0;
        }
        // first omitted term, then a geometric majorant
        let ln_t = (k as f64) * x.ln() - ln_factorial(k);
        let ratio = x / (k as f64 + 1.0);
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        ln_t.exp() / (1.0 - ratio)
    }

    fn required_terms(&self, r: f64, tol: f64) -> usize {
        let x = 1.1 * self.type_c * r;
        if x == 0.0 {
            return self.coeffs.len();
        }
        let mut k = self.coeffs.len();
        while k < 1_000_000 {
            let ln_t = (k as f64) * x.ln() - ln_factorial(k);
            if ln_t < tol.max(f64::MIN_POSITIVE).ln() {
                return k;
            }
            k += k / 8 + 1;
        }
        k
    }

    /// The j-th derivative as a series about the same center:
    /// coefficients a_{k+j}·(k+j)!/k!.
    pub fn derivative_series(&self, j: usize) -> PowerSeries {
        if j == 0 {
            return self.clone();
        }
        if j >= self.eff_len {
            return PowerSeries::with_center_and_policy(vec![], self.center, self.policy);
        }
        let len = self.eff_len - j;
        let mut coeffs = Vec::with_capacity(len);
        for k in 0..len {
            let mut v = self.coeffs[k + j];
            for i in 1..=j {
                v *= (k + i) as f64;
            }
            coeffs.push(v);
        }
        PowerSeries::with_center_and_policy(coeffs, self.center, self.policy)
    }

    /// Windowed estimate of the exponential type.
    pub fn exponential_type(&self) -> ExponentialTypeEstimate {
        estimate_type(&self.coeffs)
    }

    /// Cached type upper estimate used by truncation bounds.
    pub fn type_upper(&self) -> f64 {
        self.type_c
    }

    /// Tests the lacunary coefficient condition by certifying geometric decay
    /// of the terms |a_{hN}|·(0.792hN/log(hN+1))^{hN} over the tail window.
    pub fn check_growth_condition(&self, order_n: u32) -> GrowthCheck {
        let n = order_n.max(1) as usize;
        let mut terms: Vec<f64> = Vec::new();
        let mut h = 0usize;
        while h * n < self.coeffs.len() {
            let a = self.coeffs[h * n].norm();
            let t = if h == 0 {
                a
            } else if a == 0.0 {
                0.0
            } else {
                let hn = (h * n) as f64;
                (a.ln() + hn * ((0.792 * hn).ln() - (hn + 1.0).ln().ln())).exp()
            };
            terms.push(t);
            h += 1;
        }
        let partial_sum: f64 = terms.iter().sum();
        // drop the zero tail; a series that terminates is a finite sum
        while terms.last() == Some(&0.0) {
            terms.pop();
        }
        if terms.len() <= 2 {
            return GrowthCheck {
                satisfied: true,
                partial_sum,
            };
        }
        let lo = terms.len() / 2;
        let mut satisfied = true;
        for w in terms[lo..].windows(2) {
            // an interior zero counts as decay; a flat or growing pair does not
            if w[0] == 0.0 {
                continue;
            }
            if w[1] > 0.95 * w[0] {
                satisfied = false;
                break;
            }
        }
        GrowthCheck {
            satisfied,
            partial_sum,
        }
    }
}

fn estimate_type(coeffs: &[Complex64]) -> ExponentialTypeEstimate {
    let k_len = coeffs.len();
    let mut b_log_abs = Vec::with_capacity(k_len);
    for (k, a) in coeffs.iter().enumerate() {
        let n = a.norm();
        b_log_abs.push(if n == 0.0 {
            f64::NEG_INFINITY
        } else {
            n.ln() + ln_factorial(k)
        });
    }
    let lo = (k_len / 2).max(1);
    let hi = k_len;
    let mut type_c = 0.0f64;
    let mut point = 0.0f64;
    for k in lo..hi {
        if b_log_abs[k].is_finite() {
            let est = (b_log_abs[k] / k as f64).exp();
            type_c = type_c.max(est);
            point = est;
        }
    }
    ExponentialTypeEstimate {
        type_c,
        point_estimate: point,
        window: (lo, hi),
        b_log_abs,
    }
}

/// Series of x ↦ ∫ e^{iyx} dμ(y): coefficients a_k = (i^k/k!)·Σ_j w_j y_j^k.
/// The result has exponential type at most the support radius of μ.
pub fn fourier_of_measure(mu: &AtomicMeasure) -> PowerSeries {
    let terms = DEFAULT_MAX_TERMS;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); terms];
    for &(y, w) in &mu.atoms {
        // w * y^k / k!, advanced incrementally to avoid overflow
        let mut t = w;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c += t;
            t *= y / (k as f64 + 1.0);
        }
    }
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= i_pow(k as u64);
    }
    PowerSeries::new(coeffs)
}

// --- JSON wire formats ------------------------------------------------------
//
// Series: {"coeffs": [[re, im], ...]}
// Measure: {"atoms": [[y, [re, im]], ...]}

impl Serialize for PowerSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            coeffs: Vec<[f64; 2]>,
            #[serde(skip_serializing_if = "Option::is_none")]
            center: &'a Option<[f64; 2]>,
        }
        let center = if self.center == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some([self.center.re, self.center.im])
        };
        // trailing zero padding is dropped on the wire
        Repr {
            coeffs: self.coeffs[..self.eff_len]
                .iter()
                .map(|c| [c.re, c.im])
                .collect(),
            center: &center,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PowerSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            coeffs: Vec<[f64; 2]>,
            #[serde(default)]
            center: Option<[f64; 2]>,
        }
        let r = Repr::deserialize(d)?;
        if r.coeffs.is_empty() {
            return Err(D::Error::custom("series needs at least one coefficient"));
        }
        let coeffs = r
            .coeffs
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        let center = r
            .center
            .map_or(Complex64::new(0.0, 0.0), |[re, im]| Complex64::new(re, im));
        Ok(PowerSeries::with_center_and_policy(
            coeffs,
            center,
            TruncationPolicy::default(),
        ))
    }
}

impl Serialize for AtomicMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            atoms: Vec<(f64, [f64; 2])>,
        }
        Repr {
            atoms: self.atoms.iter().map(|&(y, w)| (y, [w.re, w.im])).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            atoms: Vec<(f64, [f64; 2])>,
        }
        let r = Repr::deserialize(d)?;
        Ok(AtomicMeasure::new(
            r.atoms
                .into_iter()
                .map(|(y, [re, im])| (y, Complex64::new(re, im)))
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_exp_examples() {
        let f = PowerSeries::exp_series(c(1.0, 0.0));
        let at0 = f.evaluate(c(0.0, 0.0)).unwrap();
        assert_eq!(at0.value, c(1.0, 0.0));
        let at1 = f.evaluate(c(1.0, 0.0)).unwrap();
        assert!((at1.value.re - std::f64::consts::E).abs() < 1e-12);
        assert!(at1.value.im.abs() < 1e-15);
    }

    #[test]
    fn evaluate_monomial() {
        let f = PowerSeries::monomial(c(1.0, 0.0), 4);
        let v = f.evaluate(c(0.0, 2.0)).unwrap().value;
        assert!((v - c(16.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn evaluate_refuses_outside_reach() {
        let f = PowerSeries::exp_series_with_terms(c(1.0, 0.0), 200);
        let err = f.evaluate(c(400.0, 0.0)).unwrap_err();
        match err {
            Error::Truncation { required_terms, .. } => assert!(required_terms > 200),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derivative_of_monomial_is_factorial() {
        let n = 5;
        let f = PowerSeries::monomial(c(1.0, 0.0), n);
        let d = f.derivative_series(n);
        assert_eq!(d.degree(), Some(0));
        assert!((d.coeffs()[0].re - 120.0).abs() < 1e-12);
        assert!(d.derivative_series(1).is_zero());
    }

    #[test]
    fn derivative_of_exp_is_exp() {
        let f = PowerSeries::exp_series(c(1.0, 0.0));
        let d = f.derivative_series(3);
        for (k, a) in d.coeffs().iter().enumerate() {
            assert!((a - f.coeffs()[k]).norm() < 1e-12 * (1.0 + f.coeffs()[k].norm()));
        }
        // truncated exp, first derivative, evaluated at 1
        let f50 = PowerSeries::exp_series_with_terms(c(1.0, 0.0), 50);
        let d1 = f50.derivative_series(1);
        assert!((d1.value_at(c(1.0, 0.0)).re - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn exponential_type_examples() {
        let f = PowerSeries::exp_series(c(2.0, 0.0));
        let est = f.exponential_type();
        assert!((est.type_c - 2.0).abs() < 0.05, "type {}", est.type_c);

        let p = PowerSeries::polynomial(&[c(1.0, 0.0), c(3.0, 0.0), c(0.0, -2.0)]);
        assert_eq!(p.exponential_type().type_c, 0.0);

        let cosf = PowerSeries::cos_series();
        let est = cosf.exponential_type();
        assert!((est.type_c - 1.0).abs() < 0.05, "cos type {}", est.type_c);
    }

    #[test]
    fn growth_condition_cases() {
        // a_k = C1 C2^k / k! with C1 = C2 = 1: admissible
        let f = PowerSeries::exp_series(c(1.0, 0.0));
        assert!(f.check_growth_condition(3).satisfied);

        // finite polynomial: finite sum, trivially satisfied
        let p = PowerSeries::polynomial(&[c(1.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)]);
        let g = p.check_growth_condition(2);
        assert!(g.satisfied);
        assert!(g.partial_sum.is_finite());

        // a_{2h} = (log(2h+1)/(0.792·2h))^{2h} makes every term equal 1
        let nn = 2usize;
        let mut coeffs = vec![c(0.0, 0.0); DEFAULT_MAX_TERMS];
        for h in 0..DEFAULT_MAX_TERMS / nn {
            let k = h * nn;
            coeffs[k] = if h == 0 {
                c(1.0, 0.0)
            } else {
                let kf = k as f64;
                c((kf + 1.0).ln() / (0.792 * kf), 0.0).powu(k as u32)
            };
        }
        let bad = PowerSeries::new(coeffs);
        let g = bad.check_growth_condition(2);
        assert!(!g.satisfied, "constant terms must fail the decay test");
    }

    #[test]
    fn fourier_of_measure_examples() {
        // single atom (y=1, w=1): a_k = i^k/k!, i.e. e^{iz}
        let mu = AtomicMeasure::new(vec![(1.0, c(1.0, 0.0))]);
        let f = fourier_of_measure(&mu);
        for (k, a) in f.coeffs().iter().take(20).enumerate() {
            let want = i_pow(k as u64) / crate::cnum::factorial(k);
            assert!((a - want).norm() < 1e-15 * (1.0 + want.norm()));
        }

        // empty measure -> zero series
        let z = fourier_of_measure(&AtomicMeasure::new(vec![]));
        assert!(z.is_zero());

        // atoms ±1 with weight 1/2 -> cos
        let mu = AtomicMeasure::new(vec![(1.0, c(0.5, 0.0)), (-1.0, c(0.5, 0.0))]);
        let f = fourier_of_measure(&mu);
        let cosf = PowerSeries::cos_series();
        for k in 0..40 {
            assert!((f.coeffs()[k] - cosf.coeffs()[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn fourier_matches_pointwise_sum() {
        let mu = AtomicMeasure::new(vec![
            (0.7, c(0.3, 0.1)),
            (-1.2, c(0.5, 0.0)),
            (2.0, c(0.0, -0.25)),
        ]);
        let f = fourier_of_measure(&mu);
        for i in 0..11 {
            let x = -5.0 + i as f64;
            let direct: Complex64 = mu
                .atoms
                .iter()
                .map(|&(y, w)| w * Complex64::from_polar(1.0, y * x))
                .sum();
            let got = f.value_at(c(x, 0.0));
            assert!((got - direct).norm() < 1e-10, "x={x}: {got} vs {direct}");
        }
    }

    #[test]
    fn paley_wiener_type_bound() {
        let mu = AtomicMeasure::new(vec![(0.4, c(1.0, 0.0)), (-1.5, c(0.25, 0.25))]);
        let f = fourier_of_measure(&mu);
        let est = f.exponential_type();
        assert!(
            est.type_c <= mu.support_radius() + 0.05,
            "type {}",
            est.type_c
        );
    }

    #[test]
    fn series_json_round_trip() {
        let f = PowerSeries::polynomial(&[c(1.0, 2.0), c(-0.5, 0.0)]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"coeffs":[[1.0,2.0],[-0.5,0.0]]}"#);
        let g: PowerSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(g.coeffs(), f.coeffs());

        let mu = AtomicMeasure::new(vec![(1.0, c(0.5, -0.5))]);
        let s = serde_json::to_string(&mu).unwrap();
        assert_eq!(s, r#"{"atoms":[[1.0,[0.5,-0.5]]]}"#);
        let back: AtomicMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
    }
}
