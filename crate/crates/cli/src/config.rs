//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! Precedence, highest first: explicit flag (or `CAUSALEVAL_SEED` for the
//! seed), config file, built-in default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use causaleval::diagnostics::{DEFAULT_N_SIM, MIN_N_SIM};
use causaleval::Family;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Ols,
    Logit,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Ols => Family::Ols,
            FamilyArg::Logit => Family::Logit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

/// Flags shared by the analysis subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Input CSV file with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Optional schema file of `column=continuous|categorical` lines.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Model formula, e.g. "acc ~ pretrain * arch" (repeatable).
    #[arg(long = "formula")]
    pub formulas: Vec<String>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Significance level for intervals and stars.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Continuous column to mean-center before fitting (repeatable).
    #[arg(long = "center")]
    pub center: Vec<String>,
    /// Reference level override as `variable=level` (repeatable).
    #[arg(long = "reference")]
    pub reference: Vec<String>,
    /// Seed for simulation-based diagnostics.
    #[arg(long, env = "CAUSALEVAL_SEED")]
    pub seed: Option<u64>,
    /// Simulated replicates per observation for quantile residuals.
    #[arg(long = "n-sim")]
    pub n_sim: Option<usize>,
    /// Write the JSON report to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Format printed on standard output.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Skip the diagnostics that `fit` runs by default.
    #[arg(long)]
    pub no_diagnostics: bool,
    /// TOML file supplying any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// TOML mirror of [`RunArgs`]. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    data: Option<PathBuf>,
    schema: Option<PathBuf>,
    #[serde(default)]
    formula: Vec<String>,
    family: Option<FamilyArg>,
    alpha: Option<f64>,
    #[serde(default)]
    center: Vec<String>,
    #[serde(default)]
    reference: Vec<String>,
    seed: Option<u64>,
    n_sim: Option<usize>,
    output: Option<PathBuf>,
    format: Option<Format>,
    no_diagnostics: Option<bool>,
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PathBuf,
    pub schema: Option<PathBuf>,
    pub formulas: Vec<String>,
    pub family: Family,
    pub alpha: f64,
    pub center: Vec<String>,
    pub reference: BTreeMap<String, String>,
    pub seed: u64,
    pub n_sim: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub diagnostics: bool,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p
    }
}

impl RunArgs {
    pub fn resolve(self) -> Result<RunConfig, String> {
        let (file, base) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                let cfg: FileConfig = toml::from_str(&text)
                    .map_err(|e| format!("invalid config {}: {}", path.display(), e.message()))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let data = self
            .data
            .or_else(|| file.data.map(|p| resolve(&base, p)))
            .ok_or("--data is required")?;
        let formulas = if self.formulas.is_empty() { file.formula } else { self.formulas };
        if formulas.is_empty() {
            return Err("at least one --formula is required".into());
        }
        let alpha = self.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(format!("--alpha must lie in (0, 1), got {alpha}"));
        }
        let n_sim = self.n_sim.or(file.n_sim).unwrap_or(DEFAULT_N_SIM);
        if n_sim < MIN_N_SIM {
            return Err(format!("--n-sim must be at least {MIN_N_SIM}, got {n_sim}"));
        }
        let reference_specs = if self.reference.is_empty() { file.reference } else { self.reference };
        let mut reference = BTreeMap::new();
        for spec in reference_specs {
            let (var, level) = spec
                .split_once('=')
                .filter(|(v, l)| !v.is_empty() && !l.is_empty())
                .ok_or_else(|| format!("--reference expects variable=level, got '{spec}'"))?;
            reference.insert(var.trim().to_owned(), level.trim().to_owned());
        }
        Ok(RunConfig {
            data,
            schema: self.schema.or_else(|| file.schema.map(|p| resolve(&base, p))),
            formulas,
            family: self.family.or(file.family).unwrap_or(FamilyArg::Ols).into(),
            alpha,
            center: if self.center.is_empty() { file.center } else { self.center },
            reference,
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            n_sim,
            output: self.output.or_else(|| file.output.map(|p| resolve(&base, p))),
            format: self.format.or(file.format).unwrap_or(Format::Text),
            diagnostics: !(self.no_diagnostics || file.no_diagnostics.unwrap_or(false)),
        })
    }
}
