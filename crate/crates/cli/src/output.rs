use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Directory used for reports when `--output` is not given.
pub const OUTPUT_DIR_ENV: &str = "INDUCED_SDR_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Json => "json",
        }
    }
}

/// Parameterization choices baked into the generators and estimators.
pub const CONVENTIONS: &[&str] = &[
    "lognormal_ratio noise: (alpha2'x)^-2 is the standard deviation of log Y",
    "gamma laws (response and censoring) use shape/scale",
    "lognormal_ratio censoring: Gamma(shape 2, scale 0.8505), calibrated to 25% censoring",
    "thresholds: type-1 empirical quantiles of the uncensored response",
    "kaplan-meier: failures precede censorings at tied times",
    "censoring weights use the right-continuous censoring survival at Y*",
    "reported se: sd / sqrt(R) across successful replications",
    "directions are sign-fixed so the largest-magnitude entry is positive",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub rng: String,
    pub conventions: Vec<String>,
    /// Fully resolved configuration; feeding it back reproduces the report.
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Self {
        Provenance {
            tool: "induced-sdr".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            rng: induced_sdr::simgen::RNG_ID.into(),
            conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
            config: serde_json::to_value(config).expect("config serializes"),
        }
    }

    /// `#`-prefixed header block for TSV output.
    pub fn tsv_header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {} {}", self.tool, self.version, self.command);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# rng: {}", self.rng);
        let _ = writeln!(s, "# config: {}", self.config);
        for c in &self.conventions {
            let _ = writeln!(s, "# convention: {c}");
        }
        s
    }
}

/// Where a report goes: `--output`, then `$INDUCED_SDR_OUTPUT_DIR/<default>`,
/// then stdout.
pub fn destination(output: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    if let Some(p) = output {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(default_name))
}

pub fn emit(contents: &str, output: Option<&Path>, default_name: &str) -> CliResult<()> {
    match destination(output, default_name) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            std::fs::write(&path, contents).map_err(|source| CliError::Write { path, source })
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Six-decimal rendering for TSV tables. JSON output keeps full precision.
pub fn num(v: f64) -> String {
    format!("{v:.6}")
}

pub fn join_nums(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| num(v))
        .collect::<Vec<_>>()
        .join("\t")
}
