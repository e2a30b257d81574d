//! The step distribution ξ uniform on α^{1/N}·R(N), the rescaled walk
//! W^n(t) = n^{-1/N} Σ_{k≤⌊nt⌋} ξ_k, path sampling, and the exact lattice
//! law of W^n(m/n) as a multinomial mixture over Σ m_j ζ_j.

use num_complex::Complex64;
use rand::Rng;

use crate::cnum::{cpow_u64, ln_factorial};
use crate::error::{Error, Result};
use crate::rng::path_rng;

/// Default cap on the number of compositions `exact_distribution` will
/// enumerate. Override per call or through `ROOTWALK_ATOM_BUDGET` in the CLI.
pub const DEFAULT_ATOM_BUDGET: u64 = 10_000_000;

/// The tuple (N, α, n) that fixes the step law and the rescaling.
///
/// The step magnitude is |α|^{1/N} with the principal branch of α^{1/N}
/// (argument in (-π, π]); any other fixed branch only rotates the step set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkSpec {
    order_n: u32,
    alpha: Complex64,
    scale_n: u64,
}

impl WalkSpec {
    pub fn new(order_n: u32, alpha: Complex64, scale_n: u64) -> Result<Self> {
        if order_n < 1 {
            return Err(Error::InvalidSpec("order N must be >= 1".into()));
        }
        if scale_n < 1 {
            return Err(Error::InvalidSpec("scale n must be >= 1".into()));
        }
        if alpha == Complex64::new(0.0, 0.0) || !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidSpec(
                "alpha must be finite and nonzero".into(),
            ));
        }
        Ok(Self {
            order_n,
            alpha,
            scale_n,
        })
    }

    pub fn order(&self) -> u32 {
        self.order_n
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn scale(&self) -> u64 {
        self.scale_n
    }

    /// Principal N-th root of α; the common magnitude of every step.
    pub fn step_root(&self) -> Complex64 {
        self.alpha.powf(1.0 / self.order_n as f64)
    }

    /// n^{-1/N}, the space rescaling applied to the plain sum of steps.
    pub fn space_scale(&self) -> f64 {
        (self.scale_n as f64).powf(-1.0 / self.order_n as f64)
    }

    /// ⌊n t⌋, the number of steps available by time `t`.
    pub fn steps_by(&self, t: f64) -> u64 {
        assert!(t >= 0.0 && t.is_finite(), "time must be finite and >= 0");
        (self.scale_n as f64 * t).floor() as u64
    }

    /// Whether `t` lies on the step grid m/n (within floating slack).
    pub fn on_grid(&self, t: f64) -> bool {
        let nt = self.scale_n as f64 * t;
        (nt - nt.round()).abs() <= 1e-9 * (1.0 + nt.abs())
    }

    /// E[ξ^m]: α^{m/N} when N | m, zero otherwise. The zero branch is exact.
    pub fn step_power_moment(&self, m: u32) -> Complex64 {
        let n = self.order_n;
        if m % n != 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.alpha.powu(m / n)
        }
    }

    /// E[|ξ|^m] = |α|^{m/N}.
    pub fn step_abs_moment(&self, m: u32) -> f64 {
        self.alpha.norm().powf(m as f64 / self.order_n as f64)
    }

    pub fn step_set(&self) -> StepSet {
        StepSet::new(self)
    }
}

/// One point of the step support: α^{1/N}·ζ_k with ζ_k = e^{2πik/N}.
#[derive(Clone, Copy, Debug)]
pub struct StepValue {
    pub root_index: u32,
    pub value: Complex64,
}

/// Precomputed step support with exact modular powers.
///
/// `pow(idx, m)` evaluates ξ^m as α^⌊m/N⌋ · (α^{1/N})^{m mod N} · ζ_{(idx·m) mod N},
/// so ξ^N is bit-identical to α and higher multiples are exact integer powers.
pub struct StepSet {
    order_n: u32,
    alpha: Complex64,
    root: Complex64,
    zetas: Vec<Complex64>,
    root_pows: Vec<Complex64>,
}

impl StepSet {
    fn new(spec: &WalkSpec) -> Self {
        let n = spec.order_n;
        let zetas = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let root = spec.step_root();
        let mut root_pows = Vec::with_capacity(n as usize);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            root_pows.push(p);
            p *= root;
        }
        Self {
            order_n: n,
            alpha: spec.alpha,
            root,
            zetas,
            root_pows,
        }
    }

    pub fn order(&self) -> u32 {
        self.order_n
    }

    /// ξ for root index `idx`.
    pub fn value(&self, idx: u32) -> Complex64 {
        self.root * self.zetas[idx as usize]
    }

    /// ξ^m for root index `idx`, exact in the lattice structure.
    pub fn pow(&self, idx: u32, m: u32) -> Complex64 {
        let n = self.order_n as u64;
        let q = m as u64 / n;
        let r = (m as u64 % n) as usize;
        let zi = ((idx as u64 * (m as u64 % n)) % n) as usize;
        cpow_u64(self.alpha, q) * self.root_pows[r] * self.zetas[zi]
    }

    pub fn step(&self, idx: u32) -> StepValue {
        StepValue {
            root_index: idx,
            value: self.value(idx),
        }
    }
}

/// A sampled trajectory of W^n up to horizon `t`.
///
/// `partial_sums[j]` is W^n((j+1)/n); W^n(s) is piecewise constant between
/// grid points and zero before the first step.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub spec: WalkSpec,
    pub horizon_t: f64,
    pub step_indices: Vec<u32>,
    pub partial_sums: Vec<Complex64>,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.step_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_indices.is_empty()
    }

    /// W^n(j/n), with W^n(0) = 0.
    pub fn value_at_grid(&self, j: usize) -> Complex64 {
        if j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.partial_sums[j - 1]
        }
    }

    /// W^n(horizon_t).
    pub fn endpoint(&self) -> Complex64 {
        self.partial_sums
            .last()
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }
}

/// Draw ⌊nt⌋ i.i.d. uniform root indices from `seed` and accumulate the
/// rescaled partial sums.
pub fn sample_path(spec: &WalkSpec, t: f64, seed: u64) -> PathSample {
    let steps = spec.steps_by(t);
    let set = spec.step_set();
    let scale = spec.space_scale();
    let mut rng = path_rng(seed, 0);
    let mut step_indices = Vec::with_capacity(steps as usize);
    let mut partial_sums = Vec::with_capacity(steps as usize);
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..steps {
        let idx = rng.gen_range(0..spec.order());
        acc += scale * set.value(idx);
        step_indices.push(idx);
        partial_sums.push(acc);
    }
    PathSample {
        spec: *spec,
        horizon_t: t,
        step_indices,
        partial_sums,
    }
}

/// One atom of the exact law of W^n(m/n).
#[derive(Clone, Debug)]
pub struct LatticeAtom {
    /// Counts (m_0, …, m_{N-1}) of each root direction, Σ m_j = m.
    pub composition: Vec<u32>,
    pub point: Complex64,
    pub weight: f64,
}

/// Exact law of W^n(m/n): one atom per composition of m into N parts, with
/// multinomial weights.
#[derive(Clone, Debug)]
pub struct LatticeDistribution {
    pub spec: WalkSpec,
    pub num_steps: u64,
    pub atoms: Vec<LatticeAtom>,
}

impl LatticeDistribution {
    /// Σ weight · f(point).
    pub fn expectation<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            acc += a.weight * f(a.point);
        }
        acc
    }

    /// E[z^k] over the lattice law.
    pub fn moment(&self, k: u32) -> Complex64 {
        self.expectation(|z| cpow_u64(z, k as u64))
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

/// C(m+N-1, N-1) without overflow for the sizes we accept.
pub fn composition_count(m: u64, order_n: u32) -> u128 {
    let mut acc: u128 = 1;
    for j in 1..order_n as u128 {
        acc = acc * (m as u128 + j) / j;
    }
    acc
}

pub fn exact_distribution(spec: &WalkSpec, m: u64) -> Result<LatticeDistribution> {
    exact_distribution_with_budget(spec, m, DEFAULT_ATOM_BUDGET)
}

/// Enumerate the law of W^n(m/n), refusing above `budget` compositions.
pub fn exact_distribution_with_budget(
    spec: &WalkSpec,
    m: u64,
    budget: u64,
) -> Result<LatticeDistribution> {
    let n = spec.order() as usize;
    let count = composition_count(m, spec.order());
    if count > budget as u128 {
        return Err(Error::AtomBudget {
            required: count,
            budget,
        });
    }
    let set = spec.step_set();
    let scale = spec.space_scale();
    let scaled_steps: Vec<Complex64> = (0..spec.order()).map(|k| scale * set.value(k)).collect();
    let ln_n = (spec.order() as f64).ln();
    let ln_fact_m = ln_factorial(m as usize);

    let mut atoms = Vec::with_capacity(count as usize);
    // Colex enumeration of compositions (m_0, ..., m_{N-1}) with sum m.
    let mut comp = vec![0u32; n];
    comp[0] = m as u32;
    loop {
        let mut point = Complex64::new(0.0, 0.0);
        let mut ln_denom = 0.0;
        for (j, &c) in comp.iter().enumerate() {
            if c > 0 {
                point += c as f64 * scaled_steps[j];
                ln_denom += ln_factorial(c as usize);
            }
        }
        let weight = (ln_fact_m - ln_denom - m as f64 * ln_n).exp();
        atoms.push(LatticeAtom {
            composition: comp.clone(),
            point,
            weight,
        });

        // Next composition: move one unit from the first nonzero slot past
        // position 0 boundaries (standard odometer).
        if comp[n - 1] as u64 == m {
            break;
        }
        let first_nonzero = comp.iter().position(|&c| c > 0).unwrap();
        if first_nonzero == n - 1 {
            break;
        }
        let head = comp[first_nonzero];
        comp[first_nonzero] = 0;
        comp[first_nonzero + 1] += 1;
        comp[0] = head - 1;
    }
    Ok(LatticeDistribution {
        spec: *spec,
        num_steps: m,
        atoms,
    })
}
