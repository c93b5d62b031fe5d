//! Canonical JSON and aligned plain-text rendering of analysis results.
//!
//! A [`Report`] holds metadata and an ordered list of sections. Each section
//! payload is a JSON value built from a typed result. Rendering is a pure
//! function of the report:
//!
//! - JSON has sorted object keys and a trailing newline.
//! - Floats use the shortest representation that parses back to the same
//!   double.
//! - Infinities become the strings `"inf"`/`"-inf"`.
//! - Text tables round to four decimals and right-align numeric columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::anova::AnovaTable;
use crate::diagnostics::DiagnosticsReport;
use crate::logit::{EffectKind, LogitFit, MarginalEffect};
use crate::ols::{CoefRow, OlsFit};
use crate::scalar::Scalar;
use crate::selection::{ComparisonTable, Family};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub dataset_digest: Option<String>,
    pub seed: Option<u64>,
    /// Supplied by the caller; `None` keeps reports reproducible.
    pub timestamp: Option<String>,
}

impl Default for Meta {
    fn default() -> Self {
        Meta {
            tool: "causaleval".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            dataset_digest: None,
            seed: None,
            timestamp: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Coefficients,
    Anova,
    Diagnostics,
    Comparison,
    MarginalEffects,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub meta: Meta,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(meta: Meta) -> Self {
        Report {
            meta,
            sections: Vec::new(),
        }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }
}

/// JSON number for finite values, `"inf"`/`"-inf"` strings for infinities and
/// `null` for NaN.
pub fn num<T: Scalar>(x: T) -> Value {
    let x = x.as_f64();
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

fn opt<T: Scalar>(x: Option<T>) -> Value {
    x.map_or(Value::Null, num)
}

fn stats_object(stats: &BTreeMap<String, f64>) -> Value {
    Value::Object(stats.iter().map(|(k, &v)| (k.clone(), num(v))).collect())
}

pub fn render_json(report: &Report) -> Vec<u8> {
    let mut out = serde_json::to_vec(report).expect("report values are serializable");
    out.push(b'\n');
    out
}

/// Model-level summary statistics of a linear fit.
pub fn ols_summary<T: Scalar>(fit: &OlsFit<T>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("n".into(), json!(fit.n()));
    m.insert("df_resid".into(), json!(fit.df_resid));
    m.insert("r2".into(), num(fit.r2));
    m.insert("r2_adj".into(), num(fit.r2_adj));
    m.insert("rss".into(), num(fit.rss));
    m.insert("sigma".into(), num(fit.s()));
    m
}

/// Model-level summary statistics of a logit fit.
pub fn logit_summary<T: Scalar>(fit: &LogitFit<T>, mcfadden: T) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("n".into(), json!(fit.n()));
    m.insert("iterations".into(), json!(fit.iterations));
    m.insert("loglik".into(), num(fit.loglik_full));
    m.insert("loglik_null".into(), num(fit.loglik_null));
    m.insert("mcfadden_r2".into(), num(mcfadden));
    m
}

pub fn coefficients_section<T: Scalar>(
    formula: &str,
    family: Family,
    alpha: f64,
    rows: &[CoefRow<T>],
    summary: Map<String, Value>,
) -> Section {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "term": r.name,
                "estimate": num(r.estimate),
                "std_error": num(r.se),
                "statistic": opt(r.statistic),
                "p_value": opt(r.p_value),
                "ci_low": opt(r.ci.map(|c| c.0)),
                "ci_high": opt(r.ci.map(|c| c.1)),
                "significant": r.significant(),
                "flagged": r.flagged,
            })
        })
        .collect();
    Section {
        kind: SectionKind::Coefficients,
        payload: json!({
            "formula": formula,
            "family": family,
            "statistic": match family { Family::Ols => "t", Family::Logit => "z" },
            "alpha": alpha,
            "rows": rows,
            "summary": summary,
        }),
    }
}

pub fn anova_section<T: Scalar>(table: &AnovaTable<T>) -> Section {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "term": r.term.to_string(),
                "df": r.df_term,
                "ss_effect": num(r.ss_effect),
                "ss_error": num(r.ss_error),
                "eta2_partial": num(r.eta2_partial),
                "r2_reduced": num(r.r2_reduced),
                "f": opt(r.f_stat),
                "p_value": opt(r.p_value),
            })
        })
        .collect();
    Section {
        kind: SectionKind::Anova,
        payload: json!({
            "formula": table.formula,
            "rows": rows,
            "total_ss": num(table.total_ss),
            "residual_ss": num(table.residual_ss),
            "df_resid": table.df_resid,
            "r2_full": num(table.r2_full),
        }),
    }
}

pub fn diagnostics_section(formula: &str, report: &DiagnosticsReport) -> Section {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "verdict": c.verdict,
                "statistics": stats_object(&c.statistics),
                "series": c.series.iter().map(|p| json!([num(p[0]), num(p[1])])).collect::<Vec<_>>(),
                "notes": c.notes,
            })
        })
        .collect();
    Section {
        kind: SectionKind::Diagnostics,
        payload: json!({
            "formula": formula,
            "family": report.family,
            "overall": report.worst(),
            "checks": checks,
        }),
    }
}

pub fn comparison_section<T: Scalar>(table: &ComparisonTable<T>) -> Section {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "formula": r.formula,
                "k": r.k_params,
                "loglik": num(r.loglik),
                "aic": num(r.aic),
                "delta_aic": num(r.delta_aic),
            })
        })
        .collect();
    let failed: Vec<Value> = table
        .failed
        .iter()
        .map(|f| json!({ "formula": f.formula, "error": f.error.to_string() }))
        .collect();
    let likelihood = match table.family {
        Family::Ols => "gaussian, sigma^2 = RSS/n, K = coefficients + 1",
        Family::Logit => "bernoulli, K = coefficients",
    };
    Section {
        kind: SectionKind::Comparison,
        payload: json!({
            "family": table.family,
            "likelihood": likelihood,
            "best": table.best,
            "rows": rows,
            "failed": failed,
        }),
    }
}

pub fn marginal_effects_section<T: Scalar>(
    formula: &str,
    alpha: f64,
    effects: &[MarginalEffect<T>],
) -> Section {
    let rows: Vec<Value> = effects
        .iter()
        .map(|e| {
            let (lo, hi) = e.ci;
            json!({
                "term": e.column,
                "kind": match e.kind {
                    EffectKind::Derivative => "derivative",
                    EffectKind::DiscreteChange => "discrete_change",
                },
                "ame": num(e.ame),
                "std_error": num(e.se),
                "z": opt(e.z),
                "p_value": opt(e.p_value),
                "ci_low": num(lo),
                "ci_high": num(hi),
                "significant": lo > T::zero() || hi < T::zero(),
            })
        })
        .collect();
    Section {
        kind: SectionKind::MarginalEffects,
        payload: json!({ "formula": formula, "alpha": alpha, "rows": rows }),
    }
}

/// Four-decimal rendering; integers verbatim, `NA` for null.
fn cell(v: &Value) -> String {
    match v {
        Value::Null => "NA".into(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_u64() || n.is_i64() => n.to_string(),
        Value::Number(n) => {
            let s = format!("{:.4}", n.as_f64().unwrap_or(f64::NAN));
            if s == "-0.0000" {
                "0.0000".into()
            } else {
                s
            }
        }
        other => other.to_string(),
    }
}

/// Fixed-width table: first column left-aligned, the rest right-aligned,
/// columns separated by two spaces.
fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (j, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if j > 0 {
                s.push_str("  ");
            }
            if j == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "{c:>w$}");
            }
        }
        s.trim_end().to_owned()
    };
    out.push_str(&line(header.to_vec()));
    out.push('\n');
    let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
}

fn field<'a>(v: &'a Value, key: &str) -> &'a Value {
    v.get(key).unwrap_or(&Value::Null)
}

fn marker(row: &Value) -> String {
    if field(row, "significant").as_bool() == Some(true) {
        "*".into()
    } else {
        String::new()
    }
}

fn rows_of(v: &Value) -> &[Value] {
    field(v, "rows").as_array().map_or(&[], Vec::as_slice)
}

fn is_count_key(k: &str) -> bool {
    k == "n" || k == "k" || k.starts_with("n_") || k.starts_with("df") || k.ends_with("_points")
}

fn key_values(out: &mut String, obj: &Value) {
    if let Some(map) = obj.as_object() {
        for (k, v) in map {
            // counts stored as floats print as integers
            let text = match v.as_f64() {
                Some(x) if is_count_key(k) && x.fract() == 0.0 && x.abs() < 1e15 => {
                    format!("{}", x as i64)
                }
                _ => cell(v),
            };
            let _ = writeln!(out, "  {k}: {text}");
        }
    }
}

fn text_coefficients(out: &mut String, p: &Value) {
    let _ = writeln!(
        out,
        "Coefficients: {} [{}, alpha = {}]",
        cell(field(p, "formula")),
        cell(field(p, "family")),
        field(p, "alpha")
    );
    let stat = field(p, "statistic").as_str().unwrap_or("t");
    let rows: Vec<Vec<String>> = rows_of(p)
        .iter()
        .map(|r| {
            vec![
                cell(field(r, "term")),
                cell(field(r, "estimate")),
                cell(field(r, "std_error")),
                cell(field(r, "statistic")),
                cell(field(r, "p_value")),
                cell(field(r, "ci_low")),
                cell(field(r, "ci_high")),
                marker(r),
            ]
        })
        .collect();
    table(
        out,
        &["term", "estimate", "std.error", stat, "p", "ci.low", "ci.high", ""],
        &rows,
    );
    key_values(out, field(p, "summary"));
}

fn text_anova(out: &mut String, p: &Value) {
    let _ = writeln!(out, "ANOVA: {}", cell(field(p, "formula")));
    let rows: Vec<Vec<String>> = rows_of(p)
        .iter()
        .map(|r| {
            vec![
                cell(field(r, "term")),
                cell(field(r, "df")),
                cell(field(r, "ss_effect")),
                cell(field(r, "f")),
                cell(field(r, "p_value")),
                cell(field(r, "eta2_partial")),
            ]
        })
        .collect();
    table(out, &["term", "df", "ss", "F", "p", "eta2_partial"], &rows);
    let _ = writeln!(
        out,
        "  residual ss: {} on {} df; total ss: {}; r2: {}",
        cell(field(p, "residual_ss")),
        cell(field(p, "df_resid")),
        cell(field(p, "total_ss")),
        cell(field(p, "r2_full"))
    );
}

fn text_diagnostics(out: &mut String, p: &Value) {
    let _ = writeln!(
        out,
        "Diagnostics: {} [{}] overall: {}",
        cell(field(p, "formula")),
        cell(field(p, "family")),
        cell(field(p, "overall"))
    );
    for c in field(p, "checks").as_array().map_or(&[][..], Vec::as_slice) {
        let _ = writeln!(out, "{}: {}", cell(field(c, "name")), cell(field(c, "verdict")));
        key_values(out, field(c, "statistics"));
        for note in field(c, "notes").as_array().map_or(&[][..], Vec::as_slice) {
            let _ = writeln!(out, "  note: {}", cell(note));
        }
    }
}

fn text_comparison(out: &mut String, p: &Value) {
    let _ = writeln!(
        out,
        "Model comparison [{}; {}]",
        cell(field(p, "family")),
        cell(field(p, "likelihood"))
    );
    let rows: Vec<Vec<String>> = rows_of(p)
        .iter()
        .map(|r| {
            vec![
                cell(field(r, "formula")),
                cell(field(r, "k")),
                cell(field(r, "loglik")),
                cell(field(r, "aic")),
                cell(field(r, "delta_aic")),
            ]
        })
        .collect();
    table(out, &["formula", "k", "loglik", "aic", "delta_aic"], &rows);
    for f in field(p, "failed").as_array().map_or(&[][..], Vec::as_slice) {
        let _ = writeln!(
            out,
            "  failed: {}: {}",
            cell(field(f, "formula")),
            cell(field(f, "error"))
        );
    }
}

fn text_marginal_effects(out: &mut String, p: &Value) {
    let _ = writeln!(
        out,
        "Average marginal effects: {} [alpha = {}]",
        cell(field(p, "formula")),
        field(p, "alpha")
    );
    let rows: Vec<Vec<String>> = rows_of(p)
        .iter()
        .map(|r| {
            vec![
                cell(field(r, "term")),
                cell(field(r, "kind")),
                cell(field(r, "ame")),
                cell(field(r, "std_error")),
                cell(field(r, "z")),
                cell(field(r, "p_value")),
                cell(field(r, "ci_low")),
                cell(field(r, "ci_high")),
                marker(r),
            ]
        })
        .collect();
    table(
        out,
        &["term", "kind", "ame", "std.error", "z", "p", "ci.low", "ci.high", ""],
        &rows,
    );
}

pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let m = &report.meta;
    let _ = writeln!(out, "{} {}", m.tool, m.version);
    if let Some(d) = &m.dataset_digest {
        let _ = writeln!(out, "dataset sha256: {d}");
    }
    if let Some(s) = m.seed {
        let _ = writeln!(out, "seed: {s}");
    }
    if let Some(t) = &m.timestamp {
        let _ = writeln!(out, "timestamp: {t}");
    }
    for s in &report.sections {
        out.push('\n');
        match s.kind {
            SectionKind::Coefficients => text_coefficients(&mut out, &s.payload),
            SectionKind::Anova => text_anova(&mut out, &s.payload),
            SectionKind::Diagnostics => text_diagnostics(&mut out, &s.payload),
            SectionKind::Comparison => text_comparison(&mut out, &s.payload),
            SectionKind::MarginalEffects => text_marginal_effects(&mut out, &s.payload),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lo: f64, hi: f64) -> CoefRow<f64> {
        CoefRow {
            name: "x".into(),
            estimate: (lo + hi) / 2.0,
            se: 0.1,
            statistic: Some(1.0),
            p_value: Some(0.5),
            ci: Some((lo, hi)),
            flagged: false,
        }
    }

    fn coef_report(rows: &[CoefRow<f64>]) -> Report {
        let mut r = Report::default();
        r.push(coefficients_section("y ~ x", Family::Ols, 0.05, rows, Map::new()));
        r
    }

    #[test]
    fn empty_report_shape() {
        let r = Report::default();
        let v: Value = serde_json::from_slice(&render_json(&r)).unwrap();
        assert!(v["meta"].is_object());
        assert_eq!(v["sections"], json!([]));
        assert!(render_json(&r).ends_with(b"}\n"));
    }

    #[test]
    fn stars_follow_ci() {
        let text = render_text(&coef_report(&[row(0.1, 0.5)]));
        assert!(text.lines().any(|l| l.starts_with('x') && l.ends_with('*')));
        let text = render_text(&coef_report(&[row(-0.2, 0.3)]));
        assert!(text.lines().any(|l| l.starts_with('x') && !l.ends_with('*')));
    }

    #[test]
    fn non_finite_encoding() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(0.1f64), json!(0.1));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let r = coef_report(&[row(0.1 + 0.2, 1.0 / 3.0), row(-1e-300, 2.5e17)]);
        let a = render_json(&r);
        let back = Report::from_json(&a).unwrap();
        assert_eq!(back, r);
        assert_eq!(render_json(&back), a);
    }

    #[test]
    fn negative_zero_prints_unsigned() {
        assert_eq!(cell(&json!(-0.00001)), "0.0000");
        assert_eq!(cell(&json!(3)), "3");
    }
}
