//! `causaleval` command-line front end.
//!
//! ```text
//! causaleval fit      --data runs.csv --formula "acc ~ pretrain + arch + algo"
//! causaleval anova    --data runs.csv --formula "acc ~ pretrain * arch"
//! causaleval diagnose --data runs.csv --formula "success ~ pretrain" --family logit --seed 7
//! causaleval compare  --data runs.csv --formula "acc ~ arch" --formula "acc ~ arch + algo"
//! causaleval ame      --data runs.csv --formula "success ~ pretrain + arch" --family logit
//! causaleval demo-data --output demo.csv
//! ```
//!
//! Exit status is 0 on success, 1 on usage errors and 2 on data or model
//! errors. Failures print one line to stderr of the form
//! `causaleval: error[<kind>]: <message>` and leave no output file behind.

mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use causaleval::anova::{anova_table_with, AnovaOptions};
use causaleval::dataset::write_csv;
use causaleval::design::{build_design_matrix_with, DesignMatrix, DesignOptions};
use causaleval::diagnostics::{logit_suite, ols_suite, Execution, Thresholds};
use causaleval::distributions::TailProbability;
use causaleval::logit::{all_marginal_effects, coef_table_logit, fit_logit, mcfadden_r2};
use causaleval::ols::{self, coef_table};
use causaleval::report::{
    anova_section, coefficients_section, comparison_section, diagnostics_section, logit_summary,
    marginal_effects_section, ols_summary, render_json, render_text, Meta, Report,
};
use causaleval::selection::compare_with;
use causaleval::{demo, load_csv, parse, parse_schema, Dataset, Family, ModelFormula};

use crate::config::{Format, RunArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "causaleval", version, about = "Regression analysis of ML experiment logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coefficient table (plus linear-model diagnostics for OLS).
    Fit(RunArgs),
    /// Effect sums of squares and partial eta squared per term.
    Anova(RunArgs),
    /// Family-appropriate regression diagnostics.
    Diagnose(RunArgs),
    /// Rank every --formula by AIC.
    Compare(RunArgs),
    /// Average marginal effects of a logit model.
    Ame(RunArgs),
    /// Write the bundled synthetic experiment log as CSV.
    DemoData {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = demo::DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long, default_value_t = demo::DEFAULT_SEED)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Model(causaleval::Error),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Model(_) | Failure::Io(_) => 2,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m.clone()),
            Failure::Model(e) => (e.kind(), e.to_string()),
            Failure::Io(m) => ("io", m.clone()),
        };
        let msg: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("causaleval: error[{kind}]: {msg}")
    }
}

impl From<causaleval::Error> for Failure {
    fn from(e: causaleval::Error) -> Self {
        Failure::Model(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", Failure::Usage(msg.to_owned()).line());
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(command: Command) -> Outcome<()> {
    match command {
        Command::DemoData {
            output,
            replicates,
            seed,
        } => {
            if replicates == 0 {
                return Err(Failure::Usage("--replicates must be positive".into()));
            }
            let ds = demo::generate(replicates, seed);
            let mut bytes = Vec::new();
            write_csv(&ds, &mut bytes)?;
            match output {
                Some(path) => write_atomically(&path, &bytes),
                None => io::stdout()
                    .write_all(&bytes)
                    .map_err(|e| Failure::Io(e.to_string())),
            }
        }
        Command::Fit(args) => analyse(Subcmd::Fit, args),
        Command::Anova(args) => analyse(Subcmd::Anova, args),
        Command::Diagnose(args) => analyse(Subcmd::Diagnose, args),
        Command::Compare(args) => analyse(Subcmd::Compare, args),
        Command::Ame(args) => analyse(Subcmd::Ame, args),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Subcmd {
    Fit,
    Anova,
    Diagnose,
    Compare,
    Ame,
}

fn analyse(sub: Subcmd, args: RunArgs) -> Outcome<()> {
    let cfg = args.resolve().map_err(Failure::Usage)?;
    check_usage(sub, &cfg)?;
    let (raw, ds) = load(&cfg)?;
    let formulas = cfg
        .formulas
        .iter()
        .map(|f| parse(f))
        .collect::<causaleval::Result<Vec<ModelFormula>>>()?;
    let design = DesignOptions {
        reference_levels: cfg.reference.clone(),
    };
    let meta = Meta {
        dataset_digest: Some(raw.digest()),
        seed: Some(cfg.seed),
        timestamp: source_date()?,
        ..Meta::default()
    };
    let mut report = Report::new(meta);
    let alpha = TailProbability::new(cfg.alpha)?;
    let formula = &formulas[0];
    let canonical = formula.canonical_string();

    match sub {
        Subcmd::Fit => match cfg.family {
            Family::Ols => {
                let fit = ols::fit(&design_matrix(formula, &ds, &design)?)?;
                let rows = coef_table(&fit, alpha)?;
                report.push(coefficients_section(
                    &canonical,
                    Family::Ols,
                    cfg.alpha,
                    &rows,
                    ols_summary(&fit),
                ));
                if cfg.diagnostics {
                    let diag = ols_suite(&fit, &Thresholds::default())?;
                    report.push(diagnostics_section(&canonical, &diag));
                }
            }
            Family::Logit => {
                let fit = fit_logit(&design_matrix(formula, &ds, &design)?)?;
                let rows = coef_table_logit(&fit, alpha)?;
                let r2 = mcfadden_r2(&fit)?;
                report.push(coefficients_section(
                    &canonical,
                    Family::Logit,
                    cfg.alpha,
                    &rows,
                    logit_summary(&fit, r2),
                ));
            }
        },
        Subcmd::Anova => {
            let opts = AnovaOptions {
                design,
                ..AnovaOptions::default()
            };
            report.push(anova_section(&anova_table_with::<f64>(formula, &ds, &opts)?));
        }
        Subcmd::Diagnose => {
            let th = Thresholds::default();
            let diag = match cfg.family {
                Family::Ols => ols_suite(&ols::fit(&design_matrix(formula, &ds, &design)?)?, &th)?,
                Family::Logit => {
                    let fit = fit_logit(&design_matrix(formula, &ds, &design)?)?;
                    logit_suite(&fit, cfg.n_sim, cfg.seed, &th, Execution::Parallel)?
                }
            };
            report.push(diagnostics_section(&canonical, &diag));
        }
        Subcmd::Compare => {
            let candidates: Vec<(ModelFormula, Family)> =
                formulas.iter().map(|f| (f.clone(), cfg.family)).collect();
            report.push(comparison_section(&compare_with::<f64>(&candidates, &ds, &design)?));
        }
        Subcmd::Ame => {
            let fit = fit_logit(&design_matrix(formula, &ds, &design)?)?;
            let effects = all_marginal_effects(&fit, alpha)?;
            report.push(marginal_effects_section(&canonical, cfg.alpha, &effects));
        }
    }

    let json = render_json(&report);
    if let Some(path) = &cfg.output {
        write_atomically(path, &json)?;
    }
    let stdout_bytes = match cfg.format {
        Format::Json => json,
        Format::Text => render_text(&report).into_bytes(),
    };
    io::stdout()
        .write_all(&stdout_bytes)
        .map_err(|e| Failure::Io(e.to_string()))
}

fn check_usage(sub: Subcmd, cfg: &RunConfig) -> Outcome<()> {
    if sub != Subcmd::Compare && cfg.formulas.len() != 1 {
        return Err(Failure::Usage(format!(
            "this subcommand takes exactly one --formula, got {}",
            cfg.formulas.len()
        )));
    }
    match (sub, cfg.family) {
        (Subcmd::Ame, Family::Ols) => Err(Failure::Usage(
            "ame requires --family logit (OLS coefficients are already marginal effects)".into(),
        )),
        (Subcmd::Anova, Family::Logit) => {
            Err(Failure::Usage("anova requires --family ols".into()))
        }
        _ => Ok(()),
    }
}

fn design_matrix(
    f: &ModelFormula,
    ds: &Dataset,
    options: &DesignOptions,
) -> causaleval::Result<DesignMatrix<f64>> {
    build_design_matrix_with(f, ds, options)
}

/// Returns the dataset as loaded (for the digest) and after centering.
fn load(cfg: &RunConfig) -> Outcome<(Dataset, Dataset)> {
    let schema = match &cfg.schema {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            Some(parse_schema(&text)?)
        }
        None => None,
    };
    let file =
        File::open(&cfg.data).map_err(|e| Failure::Io(format!("{}: {e}", cfg.data.display())))?;
    let raw = load_csv(io::BufReader::new(file), schema.as_ref())?;
    let centered = raw.center(&cfg.center)?;
    Ok((raw, centered))
}

/// Writes through a sibling temporary file so a failure never leaves a
/// partial report at `path`.
fn write_atomically(path: &Path, bytes: &[u8]) -> Outcome<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Usage(format!("invalid output path {}", path.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = std::fs::write(&tmp, bytes).and_then(|()| std::fs::rename(&tmp, path));
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Failure::Io(format!("{}: {e}", path.display()))
    })
}

/// Report timestamp from `SOURCE_DATE_EPOCH` (RFC 3339, UTC); absent
/// otherwise so identical inputs give identical reports.
fn source_date() -> Outcome<Option<String>> {
    let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") else {
        return Ok(None);
    };
    let secs: i64 = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("SOURCE_DATE_EPOCH is not an integer: '{raw}'")))?;
    Ok(Some(rfc3339(secs)))
}

fn rfc3339(secs: i64) -> String {
    let days = secs.div_euclid(86_400);
    let rem = secs.rem_euclid(86_400);
    // civil-from-days over the proleptic Gregorian calendar
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!(
        "{year:04}-{month:02}-{day:02}T{:02}:{:02}:{:02}Z",
        rem / 3600,
        rem % 3600 / 60,
        rem % 60
    )
}

#[cfg(test)]
mod tests {
    use super::rfc3339;

    #[test]
    fn epoch_formatting() {
        assert_eq!(rfc3339(0), "1970-01-01T00:00:00Z");
        assert_eq!(rfc3339(951_782_400), "2000-02-29T00:00:00Z");
        assert_eq!(rfc3339(1_700_000_000), "2023-11-14T22:13:20Z");
        assert_eq!(rfc3339(-1), "1969-12-31T23:59:59Z");
    }
}
