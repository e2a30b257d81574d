//! Deterministic time-dependent coefficients: polynomials with exact
//! antiderivatives, or sampled grids integrated by Simpson.

use num_complex::Complex64;

use crate::cnum::simpson;

const SIMPSON_PANELS: usize = 1000;

/// A continuous function of time on a bounded interval.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeFn {
    /// Σ c_k s^k. All calculus on this variant is exact.
    Poly(Vec<Complex64>),
    /// Values on a uniform grid over [start, end], linearly interpolated.
    Sampled {
        start: f64,
        end: f64,
        values: Vec<Complex64>,
    },
}

impl TimeFn {
    pub fn constant(c: Complex64) -> Self {
        TimeFn::Poly(vec![c])
    }

    pub fn poly(coeffs: &[Complex64]) -> Self {
        let mut v = coeffs.to_vec();
        while v.len() > 1 && v.last().map_or(false, |c| c.re == 0.0 && c.im == 0.0) {
            v.pop();
        }
        if v.is_empty() {
            v.push(Complex64::new(0.0, 0.0));
        }
        TimeFn::Poly(v)
    }

    pub fn sampled(start: f64, end: f64, values: Vec<Complex64>) -> Self {
        assert!(values.len() >= 2 && end > start);
        TimeFn::Sampled { start, end, values }
    }

    pub fn is_poly(&self) -> bool {
        matches!(self, TimeFn::Poly(_))
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        match self {
            TimeFn::Poly(c) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &a in c.iter().rev() {
                    acc = acc * s + a;
                }
                acc
            }
            TimeFn::Sampled { start, end, values } => {
                let m = values.len() - 1;
                let x = ((s - start) / (end - start) * m as f64).clamp(0.0, m as f64);
                let i = (x.floor() as usize).min(m - 1);
                let frac = x - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// ∫_a^b f(s) ds; exact for polynomials, Simpson otherwise.
    pub fn integral(&self, a: f64, b: f64) -> Complex64 {
        match self {
            TimeFn::Poly(c) => {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut pa = 1.0;
                let mut pb = 1.0;
                for (k, &ck) in c.iter().enumerate() {
                    pa *= a;
                    pb *= b;
                    acc += ck * (pb - pa) / (k as f64 + 1.0);
                }
                acc
            }
            TimeFn::Sampled { .. } => simpson(|s| self.eval(s), a, b, SIMPSON_PANELS),
        }
    }

    /// Antiderivative with value 0 at 0 (polynomials only).
    pub fn antiderivative(&self) -> Option<TimeFn> {
        match self {
            TimeFn::Poly(c) => {
                let mut out = Vec::with_capacity(c.len() + 1);
                out.push(Complex64::new(0.0, 0.0));
                for (k, &ck) in c.iter().enumerate() {
                    out.push(ck / (k as f64 + 1.0));
                }
                Some(TimeFn::Poly(out))
            }
            TimeFn::Sampled { .. } => None,
        }
    }

    /// f^k, exactly by coefficient convolution for polynomials, pointwise on
    /// the grid otherwise.
    pub fn pow_int(&self, k: u32) -> TimeFn {
        match self {
            TimeFn::Poly(c) => {
                let mut acc = vec![Complex64::new(1.0, 0.0)];
                for _ in 0..k {
                    acc = conv(&acc, c);
                }
                TimeFn::Poly(acc)
            }
            TimeFn::Sampled { start, end, values } => TimeFn::Sampled {
                start: *start,
                end: *end,
                values: values.iter().map(|v| v.powu(k)).collect(),
            },
        }
    }

    /// max |f| over [0, horizon], sampled at 10^3 nodes. Used to check the
    /// boundedness invariant of problem coefficients.
    pub fn max_abs_on(&self, horizon: f64) -> f64 {
        (0..=1000)
            .map(|j| self.eval(horizon * j as f64 / 1000.0).norm())
            .fold(0.0, f64::max)
    }
}

fn conv(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
