//! Deterministic result writing: floats at 17 significant digits, no
//! locale-dependent formatting, complex numbers always as [re, im].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

pub fn fnum(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn fc(z: Complex64) -> String {
    format!("[{},{}]", fnum(z.re), fnum(z.im))
}

pub fn fstr(s: &str) -> String {
    serde_json::to_string(s).expect("string encodes")
}

/// Tiny ordered JSON object builder so numeric formatting stays ours.
pub struct JsonObj {
    parts: Vec<String>,
}

impl JsonObj {
    pub fn new() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn raw(mut self, key: &str, value: impl AsRef<str>) -> Self {
        self.parts.push(format!("{}:{}", fstr(key), value.as_ref()));
        self
    }

    pub fn num(self, key: &str, value: f64) -> Self {
        self.raw(key, fnum(value))
    }

    pub fn int(self, key: &str, value: impl Into<i128>) -> Self {
        let v: i128 = value.into();
        self.raw(key, v.to_string())
    }

    pub fn str(self, key: &str, value: &str) -> Self {
        self.raw(key, fstr(value))
    }

    pub fn complex(self, key: &str, value: Complex64) -> Self {
        self.raw(key, fc(value))
    }

    pub fn bool(self, key: &str, value: bool) -> Self {
        self.raw(key, if value { "true" } else { "false" })
    }

    pub fn finish(self) -> String {
        format!("{{{}}}", self.parts.join(","))
    }
}

pub fn json_array<I: IntoIterator<Item = String>>(items: I) -> String {
    format!("[{}]", items.into_iter().collect::<Vec<_>>().join(","))
}

/// Where results go: a file or stdout.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out }
    }

    pub fn write(&self, payload: &str) -> std::io::Result<Option<PathBuf>> {
        match &self.out {
            Some(path) => {
                if let Some(dir) = path.parent() {
                    if !dir.as_os_str().is_empty() {
                        fs::create_dir_all(dir)?;
                    }
                }
                fs::write(path, payload)?;
                Ok(Some(path.clone()))
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(payload.as_bytes())?;
                Ok(None)
            }
        }
    }
}

/// Run manifest: enough to reproduce the output from scratch.
pub struct Manifest {
    started: Instant,
    subcommand: String,
    config_json: String,
    seed: u64,
    workers: usize,
}

impl Manifest {
    pub fn start(subcommand: &str, config_json: String, seed: u64, workers: usize) -> Self {
        Self {
            started: Instant::now(),
            subcommand: subcommand.to_string(),
            config_json,
            seed,
            workers,
        }
    }

    /// Write `<out>.manifest.json` next to the result (skipped for stdout).
    pub fn finalize(&self, written: Option<&Path>) -> std::io::Result<()> {
        let Some(path) = written else { return Ok(()) };
        let result_bytes = fs::read(path)?;
        let obj = JsonObj::new()
            .str("tool", "rootwalk")
            .str("version", env!("CARGO_PKG_VERSION"))
            .str("subcommand", &self.subcommand)
            .raw("config", &self.config_json)
            .str("config_sha256", &hex_digest(self.config_json.as_bytes()))
            .int("master_seed", self.seed as i128)
            .int("workers", self.workers as i128)
            .str("output", &path.display().to_string())
            .str("output_sha256", &hex_digest(&result_bytes))
            .int("wall_ms", self.started.elapsed().as_millis() as i128)
            .finish();
        let mpath = manifest_path(path);
        fs::write(mpath, obj + "\n")
    }
}

pub fn manifest_path(result: &Path) -> PathBuf {
    let mut os = result.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
