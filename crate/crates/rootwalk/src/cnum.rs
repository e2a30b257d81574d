//! Small numeric helpers: exact powers of `i`, integer powers of complex
//! numbers, factorials in plain and log space, binomials, Simpson quadrature.

use num_complex::Complex64;

/// `i^k` by case split on `k mod 4`. Never computed through a float `pow`,
/// so there is no imaginary dust on the axis cases.
pub fn i_pow(k: u64) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `z^e` by binary exponentiation for u64 exponents (num-complex only
/// exposes `powu(u32)`).
pub fn cpow_u64(z: Complex64, mut e: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Largest `k` with `k!` representable in f64.
pub const MAX_F64_FACTORIAL: usize = 170;

/// `k!` as f64 for `k <= 170`; panics beyond.
pub fn factorial(k: usize) -> f64 {
    assert!(k <= MAX_F64_FACTORIAL, "factorial({k}) overflows f64");
    FACTORIALS.with(|t| t[k])
}

thread_local! {
    static FACTORIALS: [f64; MAX_F64_FACTORIAL + 1] = {
        let mut t = [1.0; MAX_F64_FACTORIAL + 1];
        for k in 1..=MAX_F64_FACTORIAL {
            t[k] = t[k - 1] * k as f64;
        }
        t
    };
}

/// `ln k!`. Table-backed for small `k`, Stirling with the 1/(12k) .. 1/(1260k^5)
/// corrections beyond (absolute error well below 1e-14 there).
pub fn ln_factorial(k: usize) -> f64 {
    if k <= MAX_F64_FACTORIAL {
        factorial(k).ln()
    } else {
        let x = (k as f64) + 1.0;
        stirling_ln_gamma(x)
    }
}

fn stirling_ln_gamma(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    0.5 * ((2.0 * std::f64::consts::PI).ln() - x.ln())
        + x * (x.ln() - 1.0)
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Exact binomial table up to `kmax` (u128 arithmetic, rounded to f64 once).
pub struct BinomialTable {
    kmax: usize,
    rows: Vec<Vec<f64>>,
}

impl BinomialTable {
    pub fn new(kmax: usize) -> Self {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(kmax + 1);
        for k in 0..=kmax {
            let mut row = vec![1u128; k + 1];
            for j in 1..k {
                row[j] = rows[k - 1][j - 1] + rows[k - 1][j];
            }
            rows.push(row);
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| v as f64).collect())
            .collect();
        Self { kmax, rows }
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        debug_assert!(k <= self.kmax && j <= k);
        self.rows[k][j]
    }
}

/// Composite Simpson on [a, b] with `panels` panels (must be even and >= 2).
pub fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    assert!(panels >= 2 && panels % 2 == 0);
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for j in 1..panels {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h);
    }
    acc * (h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_pow_cycle() {
        assert_eq!(i_pow(0), Complex64::new(1.0, 0.0));
        assert_eq!(i_pow(1), Complex64::new(0.0, 1.0));
        assert_eq!(i_pow(2), Complex64::new(-1.0, 0.0));
        assert_eq!(i_pow(3), Complex64::new(0.0, -1.0));
        assert_eq!(i_pow(7), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn ln_factorial_continuity_across_table_edge() {
        // Stirling branch must agree with the table branch where they meet.
        let exact = factorial(170).ln();
        let stirling = stirling_ln_gamma(171.0);
        assert!((exact - stirling).abs() < 1e-10, "{exact} vs {stirling}");
    }

    #[test]
    fn binomials_exact() {
        let t = BinomialTable::new(64);
        assert_eq!(t.get(6, 3), 20.0);
        assert_eq!(t.get(64, 1), 64.0);
        assert_eq!(t.get(64, 32), 1832624140942590534u64 as f64);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let v = simpson(|s| Complex64::new(s * s * s, 0.0), 0.0, 1.0, 2);
        assert!((v.re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cpow_matches_powu() {
        let z = Complex64::new(0.3, -0.7);
        assert!((cpow_u64(z, 13) - z.powu(13)).norm() < 1e-12);
    }
}
