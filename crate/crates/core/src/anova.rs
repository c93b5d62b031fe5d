//! Variance decomposition over formula terms with partial η² effect sizes.
//!
//! Each term's effect sum of squares is the increase in residual SS when the
//! term (and every higher-order term containing its variables) is dropped
//! from the full model. The comparison against the full model makes the
//! result independent of term order, balanced or not.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::design::{build_design_matrix_with, DesignMatrix, DesignOptions};
use crate::distributions::f_sf;
use crate::error::{Error, Result};
use crate::formula::{ModelFormula, Term};
use crate::linalg::Matrix;
use crate::ols::{self, least_squares, refined_mean, total_ss};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectSs {
    /// Reduced-versus-full residual SS (default).
    #[default]
    ModelComparison,
    /// `Σ (ŷ_T,i − ȳ)²` from a fit on the term's columns alone (audit only).
    SingleTerm,
}

#[derive(Debug, Clone, Default)]
pub struct AnovaOptions {
    pub effect_ss: EffectSs,
    pub design: DesignOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow<T> {
    pub term: Term,
    pub ss_effect: T,
    pub df_term: usize,
    /// Residual SS of the full model (the η² denominator companion).
    pub ss_error: T,
    pub eta2_partial: T,
    /// R² of the reduced model, for the R²-increase cross-check.
    pub r2_reduced: T,
    pub f_stat: Option<T>,
    pub p_value: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable<T> {
    pub formula: String,
    pub rows: Vec<AnovaRow<T>>,
    pub total_ss: T,
    pub residual_ss: T,
    pub df_resid: usize,
    pub r2_full: T,
}

/// `η²_p = SS_effect / (SS_effect + SS_error)`; zero when both vanish.
pub fn partial_eta2<T: Scalar>(ss_effect: T, ss_error: T) -> T {
    let denom = ss_effect + ss_error;
    if denom > T::zero() {
        ss_effect / denom
    } else {
        T::zero()
    }
}

/// `(R²_full − R²_reduced) / (1 − R²_reduced)`, the R²-increase form of η²_p.
pub fn eta2_from_r2_delta<T: Scalar>(r2_full: T, r2_reduced: T) -> Result<T> {
    if r2_reduced > r2_full {
        return Err(Error::MarginalityViolation {
            full: r2_full.as_f64(),
            reduced: r2_reduced.as_f64(),
        });
    }
    if r2_reduced >= T::one() {
        return Ok(T::zero());
    }
    Ok((r2_full - r2_reduced) / (T::one() - r2_reduced))
}

/// Terms dropped together with `term`: itself and every term whose variables
/// include all of `term`'s.
pub fn marginal_closure(f: &ModelFormula, term: &Term) -> Vec<Term> {
    let vars = term.variables();
    f.terms()
        .iter()
        .filter(|t| vars.iter().all(|v| t.contains(v)))
        .cloned()
        .collect()
}

/// Residual SS and column count of the reduced design that keeps only the
/// columns not belonging to `dropped` terms.
fn reduced_fit<T: Scalar>(full: &DesignMatrix<T>, dropped: &[Term]) -> Result<(T, usize)> {
    let keep: Vec<usize> = full
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, meta)| meta.term.as_ref().is_none_or(|t| !dropped.contains(t)))
        .map(|(j, _)| j)
        .collect();
    let y = full.response();
    if keep.len() == 1 {
        return Ok((total_ss(y), 1));
    }
    let x = select_columns(full.matrix(), &keep);
    let ls = least_squares(&x, y, |j| full.columns()[keep[j]].name.clone())?;
    Ok((ls.rss, keep.len()))
}

pub(crate) fn select_columns<T: Scalar>(m: &Matrix<T>, keep: &[usize]) -> Matrix<T> {
    let cols: Vec<Vec<T>> = keep.iter().map(|&j| m.column(j)).collect();
    Matrix::from_columns(&cols)
}

/// Single-term effect SS: fit on intercept + the term's own columns, then
/// the centered prediction sum of squares.
fn single_term_ss<T: Scalar>(full: &DesignMatrix<T>, term: &Term) -> Result<T> {
    let span = full
        .term_spans()
        .iter()
        .find(|(t, _)| t == term)
        .map(|(_, r)| r.clone())
        .expect("term present in its own design");
    let keep: Vec<usize> = std::iter::once(0).chain(span).collect();
    let x = select_columns(full.matrix(), &keep);
    let y = full.response();
    let ls = least_squares(&x, y, |j| full.columns()[keep[j]].name.clone())?;
    let ybar = refined_mean(y);
    Ok(ls.fitted.iter().map(|&v| (v - ybar) * (v - ybar)).sum())
}

pub fn anova_table<T: Scalar>(f: &ModelFormula, ds: &Dataset) -> Result<AnovaTable<T>> {
    anova_table_with(f, ds, &AnovaOptions::default())
}

pub fn anova_table_with<T: Scalar>(
    f: &ModelFormula,
    ds: &Dataset,
    options: &AnovaOptions,
) -> Result<AnovaTable<T>> {
    let dm = build_design_matrix_with::<T>(f, ds, &options.design)?;
    let full = ols::fit(&dm)?;
    let residual_ss = full.rss;
    let tss = full.tss;
    let df_resid = full.df_resid;
    let p_full = dm.n_columns();

    let rows: Result<Vec<AnovaRow<T>>> = f
        .terms()
        .par_iter()
        .map(|term| {
            let dropped = marginal_closure(f, term);
            let (rss_reduced, p_reduced) = reduced_fit(&dm, &dropped)?;
            let df_term = p_full - p_reduced;
            let ss_effect = match options.effect_ss {
                EffectSs::ModelComparison => (rss_reduced - residual_ss).max(T::zero()),
                EffectSs::SingleTerm => single_term_ss(&dm, term)?,
            };
            let r2_reduced = if tss > T::zero() {
                (T::one() - rss_reduced / tss).max(T::zero())
            } else {
                T::zero()
            };
            let (f_stat, p_value) = if residual_ss > T::zero() && df_term > 0 {
                let num = ss_effect / T::from_usize_lossy(df_term);
                let den = residual_ss / T::from_usize_lossy(df_resid);
                let fv = num / den;
                let p = f_sf(fv, T::from_usize_lossy(df_term), T::from_usize_lossy(df_resid))?;
                (Some(fv), Some(p))
            } else {
                (None, None)
            };
            Ok(AnovaRow {
                term: term.clone(),
                ss_effect,
                df_term,
                ss_error: residual_ss,
                eta2_partial: partial_eta2(ss_effect, residual_ss),
                r2_reduced,
                f_stat,
                p_value,
            })
        })
        .collect();

    Ok(AnovaTable {
        formula: f.canonical_string(),
        rows: rows?,
        total_ss: tss,
        residual_ss,
        df_resid,
        r2_full: full.r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use crate::formula::parse;

    #[test]
    fn eta2_r2_examples() {
        assert_eq!(eta2_from_r2_delta(0.5, 0.5).unwrap(), 0.0);
        assert_eq!(eta2_from_r2_delta(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(eta2_from_r2_delta(0.75, 0.5).unwrap(), 0.5);
        assert!(matches!(
            eta2_from_r2_delta(0.4, 0.5),
            Err(Error::MarginalityViolation { .. })
        ));
        assert_eq!(partial_eta2(3.0, 3.0), 0.5);
    }

    #[test]
    fn perfect_separation_of_two_groups() {
        let ds = Dataset::new(vec![
            Column::continuous("y", vec![0.0, 0.0, 0.0, 2.0, 2.0, 2.0]),
            Column::categorical("g", vec!["a", "a", "a", "b", "b", "b"]),
        ])
        .unwrap();
        let t: AnovaTable<f64> = anova_table(&parse("y ~ g").unwrap(), &ds).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!((t.rows[0].eta2_partial - 1.0).abs() < 1e-12);
        assert!((t.rows[0].ss_effect - 6.0).abs() < 1e-12);
        assert_eq!(t.rows[0].df_term, 1);
        assert!(t.rows[0].f_stat.is_none());
    }

    #[test]
    fn orthogonal_null_term() {
        // x sums to zero and is orthogonal to y within each arrangement
        let ds = Dataset::new(vec![
            Column::continuous("y", vec![1.0, 1.0, 3.0, 3.0, 2.0, 2.0]),
            Column::continuous("x", vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0]),
            Column::continuous("z", vec![0.0, 0.1, 1.0, 0.9, 0.5, 0.55]),
        ])
        .unwrap();
        let t: AnovaTable<f64> = anova_table(&parse("y ~ x").unwrap(), &ds).unwrap();
        assert!(t.rows[0].ss_effect < 1e-12);
        assert!(t.rows[0].eta2_partial < 1e-12);
    }

    #[test]
    fn marginality_drops_interactions() {
        let f = parse("y ~ a*b + c").unwrap();
        let closure = marginal_closure(&f, &Term::Main("a".into()));
        assert_eq!(
            closure,
            vec![Term::Main("a".into()), Term::Interaction(vec!["a".into(), "b".into()])]
        );
    }
}
