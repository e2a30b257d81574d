//! Command-line front end: deterministic experiments against the walk
//! library with JSON/CSV outputs and per-run manifests.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use config::{
    complex_of, DeriveCfg, ExpectCfg, ExpectRoute, FkCfg, ItoCfg, MomentsCfg, Num, SeriesCfg,
    SolveCfg, SolveRoute, SpecCfg,
};
use output::{fnum, fstr, json_array, JsonObj, Manifest, Sink};
use rootwalk::expectation::{expect_mc, limit_series};
use rootwalk::feynman_kac::{fk_residual, fk_solution_closed, fk_solution_mc, LinearPotential};
use rootwalk::ito::ito_trace;
use rootwalk::moments::moment_result;
use rootwalk::pde::{solve_probabilistic, solve_series};
use rootwalk::rng::path_seed;
use rootwalk::stopping::derivative_estimator;
use rootwalk::timefn::TimeFn;
use rootwalk::walk::sample_path;
use rootwalk::{Error as LibError, EstimateWithError};

#[derive(Parser)]
#[command(
    name = "rootwalk",
    version,
    about = "Complex roots-of-unity random walks, their Ito calculus, and heat-type PDE estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact moments of W^n(t) with leading terms and remainder bounds (CSV)
    Moments(MomentsArgs),
    /// E[f(z + W^n(t))] by the exact, Monte Carlo, or limit-series route
    Expect(ExpectArgs),
    /// Sample Ito integrals along paths: per-path CSV plus a summary
    Ito(ItoArgs),
    /// Solve the N-th order Cauchy problem (series and/or probabilistic)
    Solve(SolveArgs),
    /// Feynman-Kac estimator and closed form for a linear potential
    Fk(FkArgs),
    /// Exit-time derivative estimator across an n-schedule
    Derive(DeriveArgs),
    /// Run the acceptance suite; nonzero exit on any failure
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonOut {
    /// Result path (stdout when omitted); a .manifest.json is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json where the subcommand supports both
    #[arg(long, default_value = "csv")]
    format: String,
    /// Worker threads (0 = library default)
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct SpecFlags {
    /// Walk order N
    #[arg(long = "N", value_name = "N")]
    order_n: Option<u32>,
    /// Re(alpha)
    #[arg(long = "alpha-re", visible_alias = "alpha", default_value_t = 1.0)]
    alpha_re: f64,
    /// Im(alpha)
    #[arg(long = "alpha-im", default_value_t = 0.0)]
    alpha_im: f64,
    /// Walk scale n
    #[arg(long, default_value_t = 1000)]
    n: u64,
    /// Horizon t
    #[arg(long, default_value_t = 1.0)]
    t: f64,
}

impl SpecFlags {
    fn spec_cfg(&self) -> Result<SpecCfg, AppError> {
        let order_n = self
            .order_n
            .ok_or_else(|| AppError::Usage("--N is required without --config".into()))?;
        let alpha = if self.alpha_im == 0.0 {
            Num::Real(self.alpha_re)
        } else {
            Num::Pair([self.alpha_re, self.alpha_im])
        };
        Ok(SpecCfg {
            order_n,
            alpha,
            n: self.n,
        })
    }
}

#[derive(Args)]
struct FnFlags {
    /// Test function e^{cz} with real c
    #[arg(long = "exp", value_name = "C")]
    exp_c: Option<f64>,
    /// Test function cos z
    #[arg(long = "cos", default_value_t = false)]
    cos: bool,
    /// Test function z^D
    #[arg(long = "monomial", value_name = "D")]
    monomial: Option<usize>,
}

impl FnFlags {
    fn series_cfg(&self) -> Result<SeriesCfg, AppError> {
        match (self.exp_c, self.cos, self.monomial) {
            (Some(c), false, None) => Ok(SeriesCfg::Exp(Num::Real(c))),
            (None, true, None) => Ok(SeriesCfg::Cos),
            (None, false, Some(d)) => Ok(SeriesCfg::Monomial {
                coeff: Num::Real(1.0),
                degree: d,
            }),
            _ => Err(AppError::Usage(
                "choose exactly one of --exp C | --cos | --monomial D (or use --config)".into(),
            )),
        }
    }
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecFlags,
    /// Largest moment order k
    #[arg(long, default_value_t = 8)]
    kmax: u32,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct ExpectArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecFlags,
    #[command(flatten)]
    func: FnFlags,
    /// exact | mc | series
    #[arg(long, default_value = "mc")]
    route: String,
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct ItoArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecFlags,
    #[command(flatten)]
    func: FnFlags,
    /// Increment power k in d(W^n)^k
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 4)]
    paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON: {"N", "alpha", "phi", "init", "t", "z", "n", "paths", "seed"}
    #[arg(long)]
    config: PathBuf,
    /// series | mc | both (overrides the config)
    #[arg(long)]
    route: Option<String>,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct FkArgs {
    /// Problem JSON: {"N", "alpha", "A", "mu", "t", "x", "n", "paths", "seed"}
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Walk order N
    #[arg(long = "N")]
    order_n: Option<u32>,
    #[arg(long = "alpha-re", visible_alias = "alpha", default_value_t = 1.0)]
    alpha_re: f64,
    #[arg(long = "alpha-im", default_value_t = 0.0)]
    alpha_im: f64,
    /// Ball radius R
    #[arg(long = "R", default_value_t = 0.5)]
    radius: f64,
    #[command(flatten)]
    func: FnFlags,
    /// Comma-separated n schedule, e.g. 1000,10000
    #[arg(long, value_delimiter = ',')]
    n_schedule: Vec<u64>,
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20260810)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Directory for results.txt / results.json (printed only when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single criterion id (repeatable); all twelve when omitted
    #[arg(long)]
    criterion: Vec<u32>,
}

enum AppError {
    Usage(String),
    Budget(String),
    Failed(String),
}

impl From<LibError> for AppError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::InvalidSpec(_) | LibError::InvalidArgument(_) => {
                AppError::Usage(e.to_string())
            }
            LibError::AtomBudget { .. }
            | LibError::MomentOrder { .. }
            | LibError::Truncation { .. }
            | LibError::AllTruncated { .. } => AppError::Budget(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Failed(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Cmd::Moments(a) => cmd_moments(a),
        Cmd::Expect(a) => cmd_expect(a),
        Cmd::Ito(a) => cmd_ito(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Fk(a) => cmd_fk(a),
        Cmd::Derive(a) => cmd_derive(a),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(AppError::Budget(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(AppError::Failed(m)) => {
            eprintln!("{m}");
            ExitCode::FAILURE
        }
    }
}

fn atom_budget() -> u64 {
    std::env::var("ROOTWALK_ATOM_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(rootwalk::walk::DEFAULT_ATOM_BUDGET)
}

fn read_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn config_json<T: serde::Serialize>(cfg: &T) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        job()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(job)
    }
}

fn estimate_obj(route: &str, est: &EstimateWithError, params: &str) -> String {
    let mut obj = JsonObj::new()
        .str("route", route)
        .complex("value", est.value)
        .num("error", est.error);
    if !est.warnings.is_empty() {
        obj = obj.raw("warnings", json_array(est.warnings.iter().map(|w| fstr(w))));
    }
    obj.raw("params", params).finish()
}

fn cmd_moments(a: MomentsArgs) -> Result<(), AppError> {
    let cfg: MomentsCfg = match &a.config {
        Some(p) => read_config(p)?,
        None => MomentsCfg {
            spec: a.spec.spec_cfg()?,
            t: a.spec.t,
            kmax: a.kmax,
        },
    };
    let cfg_json = config_json(&cfg);
    let manifest = Manifest::start("moments", cfg_json.clone(), 0, a.out.workers);
    let spec = cfg.spec.build()?;

    let mut rows = Vec::with_capacity(cfg.kmax as usize + 1);
    for k in 0..=cfg.kmax {
        rows.push(moment_result(&spec, cfg.t, k)?);
    }

    let payload = match a.out.format.as_str() {
        "csv" => {
            let mut s = String::from("k,exact_re,exact_im,leading_re,leading_im,bound,on_grid\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.k,
                    fnum(r.exact_value.re),
                    fnum(r.exact_value.im),
                    fnum(r.leading_term.re),
                    fnum(r.leading_term.im),
                    fnum(r.remainder_bound),
                    r.on_grid
                ));
            }
            s
        }
        "json" => {
            let items = rows.iter().map(|r| {
                JsonObj::new()
                    .int("k", r.k as i128)
                    .complex("exact", r.exact_value)
                    .complex("leading", r.leading_term)
                    .num("bound", r.remainder_bound)
                    .bool("on_grid", r.on_grid)
                    .finish()
            });
            JsonObj::new()
                .raw("rows", json_array(items))
                .raw("params", &cfg_json)
                .finish()
                + "\n"
        }
        other => return Err(AppError::Usage(format!("unknown format {other}"))),
    };
    let written = Sink::new(a.out.out).write(&payload)?;
    manifest.finalize(written.as_deref())?;
    Ok(())
}

fn cmd_expect(a: ExpectArgs) -> Result<(), AppError> {
    let cfg: ExpectCfg = match &a.config {
        Some(p) => read_config(p)?,
        None => ExpectCfg {
            spec: a.spec.spec_cfg()?,
            t: a.spec.t,
            f: a.func.series_cfg()?,
            z: None,
            route: match a.route.as_str() {
                "exact" => ExpectRoute::Exact,
                "mc" => ExpectRoute::Mc,
                "series" => ExpectRoute::Series,
                other => return Err(AppError::Usage(format!("unknown route {other}"))),
            },
            paths: a.paths,
            seed: a.seed,
        },
    };
    let cfg_json = config_json(&cfg);
    let manifest = Manifest::start("expect", cfg_json.clone(), cfg.seed, a.out.workers);
    let spec = cfg.spec.build()?;
    let func = cfg.f.build();
    let z = complex_of(&cfg.z);

    let (route, est) = in_pool(a.out.workers, || -> Result<_, AppError> {
        Ok(match cfg.route {
            ExpectRoute::Exact => {
                let m = spec.steps_by(cfg.t);
                let est = rootwalk::expectation::expect_exact_with_budget(
                    &spec,
                    m,
                    &func,
                    z,
                    atom_budget(),
                )?;
                ("exact", est)
            }
            ExpectRoute::Mc => ("mc", expect_mc(&spec, cfg.t, &func, z, cfg.paths, cfg.seed)),
            ExpectRoute::Series => ("series", limit_series(&spec, cfg.t, &func, z)?),
        })
    })?;

    let payload = estimate_obj(route, &est, &cfg_json) + "\n";
    let written = Sink::new(a.out.out).write(&payload)?;
    manifest.finalize(written.as_deref())?;
    Ok(())
}

fn cmd_ito(a: ItoArgs) -> Result<(), AppError> {
    let cfg: ItoCfg = match &a.config {
        Some(p) => read_config(p)?,
        None => ItoCfg {
            spec: a.spec.spec_cfg()?,
            t: a.spec.t,
            g: a.func.series_cfg()?,
            z: None,
            k: a.k,
            paths: a.paths,
            seed: a.seed,
        },
    };
    let cfg_json = config_json(&cfg);
    let manifest = Manifest::start("ito", cfg_json.clone(), cfg.seed, a.out.workers);
    let spec = cfg.spec.build()?;
    let g = cfg.g.build();
    let z = complex_of(&cfg.z);

    let mut csv = String::from("path,tau,W_re,W_im,H_re,H_im\n");
    let mut acc = rootwalk::estimate::ComplexWelford::default();
    for i in 0..cfg.paths {
        let path = sample_path(&spec, cfg.t, path_seed(cfg.seed, i));
        let trace = ito_trace(&path, &g, z, cfg.k);
        let mut last = Complex64::new(0.0, 0.0);
        for (tau, w, h) in &trace {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i,
                fnum(*tau as f64 / spec.scale() as f64),
                fnum(w.re),
                fnum(w.im),
                fnum(h.re),
                fnum(h.im)
            ));
            last = *h;
        }
        acc.push(last);
    }
    let est = acc.estimate();
    let summary = JsonObj::new()
        .int("paths", cfg.paths as i128)
        .int("k", cfg.k as i128)
        .complex("mean", est.value)
        .num("se", est.error)
        .raw("params", &cfg_json)
        .finish()
        + "\n";

    match a.out.out {
        Some(path) => {
            let written = Sink::new(Some(path.clone())).write(&csv)?;
            let mut sumpath = path.as_os_str().to_owned();
            sumpath.push(".summary.json");
            std::fs::write(PathBuf::from(sumpath), &summary)?;
            manifest.finalize(written.as_deref())?;
        }
        None => {
            // stdout: just the summary
            Sink::new(None).write(&summary)?;
        }
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<(), AppError> {
    let mut cfg: SolveCfg = read_config(&a.config)?;
    if let Some(r) = &a.route {
        cfg.route = Some(match r.as_str() {
            "series" => SolveRoute::Series,
            "mc" => SolveRoute::Mc,
            "both" => SolveRoute::Both,
            other => return Err(AppError::Usage(format!("unknown route {other}"))),
        });
    }
    let cfg_json = config_json(&cfg);
    let manifest = Manifest::start("solve", cfg_json.clone(), cfg.seed, a.out.workers);
    let problem = cfg.problem()?;
    let z = complex_of(&cfg.z);
    let route = cfg.route.unwrap_or(SolveRoute::Both);

    let mut obj = JsonObj::new();
    if matches!(route, SolveRoute::Series | SolveRoute::Both) {
        let u = solve_series(&problem, cfg.t, z)?;
        obj = obj.complex("series", u);
    }
    if matches!(route, SolveRoute::Mc | SolveRoute::Both) {
        let est = in_pool(a.out.workers, || {
            solve_probabilistic(&problem, cfg.t, z, cfg.n, cfg.paths, cfg.seed)
        })?;
        obj = obj.complex("mc", est.value).num("mc_error", est.error);
    }
    let payload = obj.raw("params", &cfg_json).finish() + "\n";
    let written = Sink::new(a.out.out).write(&payload)?;
    manifest.finalize(written.as_deref())?;
    Ok(())
}

fn cmd_fk(a: FkArgs) -> Result<(), AppError> {
    let cfg: FkCfg = read_config(&a.config)?;
    let cfg_json = config_json(&cfg);
    let manifest = Manifest::start("fk", cfg_json.clone(), cfg.seed, a.out.workers);
    let spec = rootwalk::WalkSpec::new(cfg.order_n, cfg.alpha.to_complex(), cfg.n)?;
    let coeffs: Vec<Complex64> = cfg.a.iter().map(|c| c.to_complex()).collect();
    let pot = LinearPotential::new(TimeFn::poly(&coeffs));
    let mu = cfg.mu.build();
    let f = rootwalk::series::fourier_of_measure(&mu);

    let closed = fk_solution_closed(&spec, cfg.t, cfg.x, &pot, &mu);
    let est = in_pool(a.out.workers, || {
        fk_solution_mc(&spec, cfg.t, cfg.x, &pot, &f, cfg.paths, cfg.seed)
    });
    let resid = fk_residual(&spec, cfg.t, cfg.x, &pot, &mu)?;

    let mut obj = JsonObj::new()
        .complex("closed", closed)
        .complex("mc", est.value)
        .num("mc_error", est.error)
        .num("residual", resid);
    if !est.warnings.is_empty() {
        obj = obj.raw("warnings", json_array(est.warnings.iter().map(|w| fstr(w))));
    }
    let payload = obj.raw("params", &cfg_json).finish() + "\n";
    let written = Sink::new(a.out.out).write(&payload)?;
    manifest.finalize(written.as_deref())?;
    Ok(())
}

fn cmd_derive(a: DeriveArgs) -> Result<(), AppError> {
    let cfg: DeriveCfg = match &a.config {
        Some(p) => read_config(p)?,
        None => DeriveCfg {
            order_n: a
                .order_n
                .ok_or_else(|| AppError::Usage("--N is required without --config".into()))?,
            alpha: if a.alpha_im == 0.0 {
                Num::Real(a.alpha_re)
            } else {
                Num::Pair([a.alpha_re, a.alpha_im])
            },
            radius: a.radius,
            g: a.func.series_cfg()?,
            z: None,
            n_schedule: a.n_schedule.clone(),
            paths: a.paths,
            seed: a.seed,
        },
    };
    if cfg.n_schedule.is_empty() {
        return Err(AppError::Usage("n_schedule must be nonempty".into()));
    }
    let cfg_json = config_json(&cfg);
    let manifest = Manifest::start("derive", cfg_json.clone(), cfg.seed, a.out.workers);
    let g = cfg.g.build();
    let z = complex_of(&cfg.z);

    let est = in_pool(a.out.workers, || {
        derivative_estimator(
            cfg.order_n,
            cfg.alpha.to_complex(),
            cfg.radius,
            &g,
            z,
            &cfg.n_schedule,
            cfg.paths,
            cfg.seed,
        )
    })?;

    let per_n = est.per_n.iter().map(|e| {
        JsonObj::new()
            .int("n", e.n as i128)
            .complex("est", e.estimate)
            .num("se", e.se)
            .complex("trimmed", e.trimmed)
            .complex("ratio_of_means", e.ratio_of_means)
            .num("truncated_fraction", e.truncated_fraction)
            .finish()
    });
    let payload = JsonObj::new()
        .raw("per_n", json_array(per_n))
        .complex("extrapolated", est.extrapolated)
        .raw("params", &cfg_json)
        .finish()
        + "\n";
    let written = Sink::new(a.out.out).write(&payload)?;
    manifest.finalize(written.as_deref())?;
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), AppError> {
    let ids: Vec<u32> = if a.criterion.is_empty() {
        (1..=rootwalk::acceptance::CRITERION_COUNT).collect()
    } else {
        a.criterion.clone()
    };
    for &id in &ids {
        if !(1..=rootwalk::acceptance::CRITERION_COUNT).contains(&id) {
            return Err(AppError::Usage(format!("criterion id {id} out of range")));
        }
    }

    let outcomes = in_pool(a.workers, || {
        ids.iter()
            .map(|&id| rootwalk::acceptance::run_criterion(id, a.seed))
            .collect::<Vec<_>>()
    });
    for o in &outcomes {
        println!(
            "criterion {:02} {}: {} ({} ms)",
            o.id,
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.elapsed_ms
        );
    }
    let failed: Vec<u32> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.id)
        .collect();

    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        // deterministic text: identical across runs and worker counts
        let report = rootwalk::acceptance::report_text(&outcomes);
        std::fs::write(dir.join("results.txt"), &report)?;
        // timed JSON for humans
        let items = outcomes.iter().map(|o| {
            JsonObj::new()
                .int("id", o.id as i128)
                .str("name", o.name)
                .bool("passed", o.passed)
                .raw("details", json_array(o.details.iter().map(|d| fstr(d))))
                .int("elapsed_ms", o.elapsed_ms as i128)
                .finish()
        });
        let json = JsonObj::new()
            .int("seed", a.seed as i128)
            .int("workers", a.workers as i128)
            .raw("criteria", json_array(items))
            .bool("all_passed", failed.is_empty())
            .finish()
            + "\n";
        std::fs::write(dir.join("results.json"), json)?;
        let manifest = Manifest::start(
            "verify",
            JsonObj::new()
                .int("seed", a.seed as i128)
                .raw("criteria", json_array(ids.iter().map(|i| i.to_string())))
                .finish(),
            a.seed,
            a.workers,
        );
        manifest.finalize(Some(&dir.join("results.txt")))?;
    }

    if failed.is_empty() {
        Ok(())
    } else {
        Err(AppError::Failed(format!(
            "{} of {} criteria failed: {:?}",
            failed.len(),
            outcomes.len(),
            failed
        )))
    }
}
