//! JSON experiment configurations. Every run config round-trips through
//! serde losslessly and hashes canonically for the manifest.

use num_complex::Complex64;
use rootwalk::pde::{CauchyProblem, InitialData};
use rootwalk::series::{AtomicMeasure, PowerSeries};
use rootwalk::timefn::TimeFn;
use rootwalk::walk::WalkSpec;
use serde::{Deserialize, Serialize};

/// A number that may be written as `x` or `[re, im]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Num {
    Real(f64),
    Pair([f64; 2]),
}

impl Num {
    pub fn to_complex(self) -> Complex64 {
        match self {
            Num::Real(x) => Complex64::new(x, 0.0),
            Num::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

fn default_alpha() -> Num {
    Num::Real(1.0)
}

fn default_scale() -> u64 {
    1000
}

fn default_t() -> f64 {
    1.0
}

fn default_paths() -> u64 {
    100_000
}

/// Walk parameters shared by most subcommands.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpecCfg {
    #[serde(rename = "N")]
    pub order_n: u32,
    #[serde(default = "default_alpha")]
    pub alpha: Num,
    #[serde(default = "default_scale")]
    pub n: u64,
}

impl SpecCfg {
    pub fn build(&self) -> rootwalk::Result<WalkSpec> {
        WalkSpec::new(self.order_n, self.alpha.to_complex(), self.n)
    }
}

/// Test-function specifications.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SeriesCfg {
    /// {"coeffs": [[re,im], ...]}
    Coeffs(Vec<[f64; 2]>),
    /// {"exp": c}: e^{cz}
    Exp(Num),
    /// "cos"
    Cos,
    /// {"monomial": {"coeff": c, "degree": d}}
    Monomial { coeff: Num, degree: usize },
}

impl SeriesCfg {
    pub fn build(&self) -> PowerSeries {
        match self {
            SeriesCfg::Coeffs(cs) => {
                PowerSeries::new(cs.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            }
            SeriesCfg::Exp(c) => PowerSeries::exp_series(c.to_complex()),
            SeriesCfg::Cos => PowerSeries::cos_series(),
            SeriesCfg::Monomial { coeff, degree } => {
                PowerSeries::monomial(coeff.to_complex(), *degree)
            }
        }
    }
}

/// {"const": c} or {"poly": [c0, c1, ...]}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum PhiCfg {
    Const(Num),
    Poly(Vec<Num>),
}

impl PhiCfg {
    pub fn build(&self) -> TimeFn {
        match self {
            PhiCfg::Const(c) => TimeFn::constant(c.to_complex()),
            PhiCfg::Poly(cs) => {
                let v: Vec<Complex64> = cs.iter().map(|c| c.to_complex()).collect();
                TimeFn::poly(&v)
            }
        }
    }
}

/// {"atoms": [[y, [re, im]], ...]}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureCfg {
    pub atoms: Vec<(f64, [f64; 2])>,
}

impl MeasureCfg {
    pub fn build(&self) -> AtomicMeasure {
        AtomicMeasure::new(
            self.atoms
                .iter()
                .map(|&(y, [re, im])| (y, Complex64::new(re, im)))
                .collect(),
        )
    }
}

/// {"series": ...} or {"measure": ...}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InitCfg {
    Series(SeriesCfg),
    Measure(MeasureCfg),
}

impl InitCfg {
    pub fn build(&self) -> InitialData {
        match self {
            InitCfg::Series(s) => InitialData::Series(s.build()),
            InitCfg::Measure(m) => InitialData::Measure(m.build()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MomentsCfg {
    #[serde(flatten)]
    pub spec: SpecCfg,
    #[serde(default = "default_t")]
    pub t: f64,
    pub kmax: u32,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExpectRoute {
    Exact,
    Mc,
    Series,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExpectCfg {
    #[serde(flatten)]
    pub spec: SpecCfg,
    #[serde(default = "default_t")]
    pub t: f64,
    pub f: SeriesCfg,
    #[serde(default)]
    pub z: Option<Num>,
    pub route: ExpectRoute,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ItoCfg {
    #[serde(flatten)]
    pub spec: SpecCfg,
    #[serde(default = "default_t")]
    pub t: f64,
    pub g: SeriesCfg,
    #[serde(default)]
    pub z: Option<Num>,
    pub k: u32,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveCfg {
    #[serde(rename = "N")]
    pub order_n: u32,
    #[serde(default = "default_alpha")]
    pub alpha: Num,
    pub phi: PhiCfg,
    pub init: InitCfg,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub z: Option<Num>,
    /// mc-route parameters; ignored by the series route
    #[serde(default = "default_scale")]
    pub n: u64,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub route: Option<SolveRoute>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SolveRoute {
    Series,
    Mc,
    Both,
}

impl SolveCfg {
    pub fn problem(&self) -> rootwalk::Result<CauchyProblem> {
        CauchyProblem::new(
            self.order_n,
            self.alpha.to_complex(),
            self.phi.build(),
            self.init.build(),
            self.t.max(1.0) * 2.0,
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FkCfg {
    #[serde(rename = "N")]
    pub order_n: u32,
    #[serde(default = "default_alpha")]
    pub alpha: Num,
    /// polynomial coefficients of the potential factor A(τ)
    #[serde(rename = "A")]
    pub a: Vec<Num>,
    pub mu: MeasureCfg,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default = "default_scale")]
    pub n: u64,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DeriveCfg {
    #[serde(rename = "N")]
    pub order_n: u32,
    #[serde(default = "default_alpha")]
    pub alpha: Num,
    #[serde(rename = "R")]
    pub radius: f64,
    pub g: SeriesCfg,
    #[serde(default)]
    pub z: Option<Num>,
    pub n_schedule: Vec<u64>,
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
}

pub fn complex_of(z: &Option<Num>) -> Complex64 {
    z.map_or(Complex64::new(0.0, 0.0), Num::to_complex)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_config_round_trip() {
        let json = r#"{
            "N": 3, "alpha": [1.0, 0.5],
            "phi": {"poly": [0.0, 1.0]},
            "init": {"series": {"exp": 1.0}},
            "t": 0.75, "z": [0.1, -0.2],
            "n": 500, "paths": 1000, "seed": 7
        }"#;
        let cfg: SolveCfg = serde_json::from_str(json).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SolveCfg = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert!(cfg.problem().is_ok());
    }

    #[test]
    fn fk_config_shapes() {
        let json = r#"{
            "N": 2, "alpha": 1.0, "A": [1.0],
            "mu": {"atoms": [[1.0, [1.0, 0.0]]]},
            "t": 1.0, "x": 0.0, "n": 100, "paths": 50, "seed": 3
        }"#;
        let cfg: FkCfg = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.a.len(), 1);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: FkCfg = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
