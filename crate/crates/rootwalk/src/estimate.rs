//! Estimates bundled with an error bar and its provenance, plus the
//! deterministic parallel Monte Carlo driver.
//!
//! Paths are split into fixed-size chunks by index; each chunk is reduced
//! sequentially and chunk results are merged in chunk order, so the result is
//! bit-identical for any number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;

/// Where an error bar comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimateKind {
    /// Deterministic evaluation; error covers floating error and recorded
    /// series truncation only.
    Exact,
    /// Monte Carlo mean with one-sigma componentwise standard errors.
    McConfidence {
        paths: u64,
        confidence: f64,
        se_re: f64,
        se_im: f64,
    },
    /// Truncated series; error is the tail bound.
    SeriesTail,
    /// The displayed analytic remainder bound.
    PaperRemainder,
}

/// A complex estimate with an error bound and its provenance.
#[derive(Clone, Debug)]
pub struct EstimateWithError {
    pub value: Complex64,
    pub error: f64,
    pub kind: EstimateKind,
    pub warnings: Vec<String>,
}

impl EstimateWithError {
    pub fn exact(value: Complex64, error: f64) -> Self {
        Self {
            value,
            error,
            kind: EstimateKind::Exact,
            warnings: Vec::new(),
        }
    }

    pub fn series(value: Complex64, tail: f64) -> Self {
        Self {
            value,
            error: tail,
            kind: EstimateKind::SeriesTail,
            warnings: Vec::new(),
        }
    }

    pub fn with_warning(mut self, w: String) -> Self {
        self.warnings.push(w);
        self
    }

    /// |self - other| measured against k-sigma of the combined error bars
    /// plus an extra allowance.
    pub fn agrees_with(&self, other: &EstimateWithError, k_sigma: f64, allowance: f64) -> bool {
        let gap = (self.value - other.value).norm();
        gap <= k_sigma * (self.error + other.error) + allowance
    }
}

/// Streaming mean/variance for complex samples (Welford, with pairwise merge).
#[derive(Clone, Copy, Debug)]
pub struct ComplexWelford {
    count: u64,
    mean: Complex64,
    m2_re: f64,
    m2_im: f64,
}

impl Default for ComplexWelford {
    fn default() -> Self {
        Self {
            count: 0,
            mean: Complex64::new(0.0, 0.0),
            m2_re: 0.0,
            m2_im: 0.0,
        }
    }
}

impl ComplexWelford {
    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        let d2 = x - self.mean;
        self.m2_re += d.re * d2.re;
        self.m2_im += d.im * d2.im;
    }

    pub fn merge(&mut self, other: &ComplexWelford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let d = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += d * (n2 / n);
        self.m2_re += other.m2_re + d.re * d.re * n1 * n2 / n;
        self.m2_im += other.m2_im + d.im * d.im * n1 * n2 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    /// Componentwise sample variances.
    pub fn variance(&self) -> (f64, f64) {
        if self.count < 2 {
            return (0.0, 0.0);
        }
        let d = (self.count - 1) as f64;
        (self.m2_re / d, self.m2_im / d)
    }

    /// Componentwise standard errors of the mean.
    pub fn standard_error(&self) -> (f64, f64) {
        if self.count < 2 {
            return (0.0, 0.0);
        }
        let (vr, vi) = self.variance();
        let n = self.count as f64;
        ((vr / n).sqrt(), (vi / n).sqrt())
    }

    /// Estimate with the joint one-sigma error |(se_re, se_im)|.
    pub fn estimate(&self) -> EstimateWithError {
        let (se_re, se_im) = self.standard_error();
        EstimateWithError {
            value: self.mean,
            error: se_re.hypot(se_im),
            kind: EstimateKind::McConfidence {
                paths: self.count,
                confidence: 0.682, // one sigma
                se_re,
                se_im,
            },
            warnings: Vec::new(),
        }
    }
}

const CHUNK: u64 = 4096;

/// Run `f(path_index)` for every index in 0..paths and reduce into a
/// `ComplexWelford`, deterministically for any worker count.
pub fn parallel_mc<F>(paths: u64, f: F) -> ComplexWelford
where
    F: Fn(u64) -> Complex64 + Sync,
{
    parallel_mc2(paths, |i| (f(i), Complex64::new(0.0, 0.0))).0
}

/// Same driver accumulating two statistics per path (e.g. value and exponent).
pub fn parallel_mc2<F>(paths: u64, f: F) -> (ComplexWelford, ComplexWelford)
where
    F: Fn(u64) -> (Complex64, Complex64) + Sync,
{
    let chunks = paths.div_ceil(CHUNK);
    let partials: Vec<(ComplexWelford, ComplexWelford)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(paths);
            let mut acc1 = ComplexWelford::default();
            let mut acc2 = ComplexWelford::default();
            for i in lo..hi {
                let (a, b) = f(i);
                acc1.push(a);
                acc2.push(b);
            }
            (acc1, acc2)
        })
        .collect();
    let mut total1 = ComplexWelford::default();
    let mut total2 = ComplexWelford::default();
    for (p1, p2) in &partials {
        total1.merge(p1);
        total2.merge(p2);
    }
    (total1, total2)
}
