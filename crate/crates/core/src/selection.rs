//! Model comparison by the Akaike information criterion.
//!
//! OLS candidates use the maximized Gaussian log-likelihood with
//! `σ̂² = RSS/n` and count σ² as a parameter. Logit candidates use the
//! Bernoulli log-likelihood at β̂. The two are never mixed in one table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::design::{build_design_matrix_with, DesignOptions};
use crate::error::{Error, Result};
use crate::formula::ModelFormula;
use crate::logit::fit_logit;
use crate::ols;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ols,
    Logit,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Ols => "ols",
            Family::Logit => "logit",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Family::Ols),
            "logit" => Ok(Family::Logit),
            other => Err(Error::InvalidArgument(format!(
                "unknown family '{other}' (expected ols or logit)"
            ))),
        }
    }
}

/// `AIC = 2K − 2ℓ`.
pub fn aic<T: Scalar>(k_params: usize, loglik: T) -> T {
    T::lit(2.0) * T::from_usize_lossy(k_params) - T::lit(2.0) * loglik
}

/// Maximized Gaussian log-likelihood `−n/2 · (ln(2π·RSS/n) + 1)`.
pub fn gaussian_loglik<T: Scalar>(rss: T, n: usize) -> T {
    let n = T::from_usize_lossy(n);
    -n / T::lit(2.0) * ((T::TAU() * rss / n).ln() + T::one())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow<T> {
    pub formula: String,
    pub family: Family,
    pub k_params: usize,
    pub loglik: T,
    pub aic: T,
    pub delta_aic: T,
}

/// A candidate whose fit failed; reported but not ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedCandidate {
    pub formula: String,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable<T> {
    pub family: Family,
    pub rows: Vec<ComparisonRow<T>>,
    /// Index of the preferred model in `rows` (always 0 when rows exist).
    pub best: Option<usize>,
    pub failed: Vec<FailedCandidate>,
}

fn fit_candidate<T: Scalar>(
    f: &ModelFormula,
    family: Family,
    ds: &Dataset,
    options: &DesignOptions,
) -> Result<(usize, T)> {
    let dm = build_design_matrix_with::<T>(f, ds, options)?;
    match family {
        Family::Ols => {
            let fit = ols::fit(&dm)?;
            if fit.rss.is_nan() || fit.rss <= T::zero() {
                return Err(Error::InvalidArgument(
                    "exact fit: Gaussian likelihood is unbounded".into(),
                ));
            }
            Ok((fit.n_coefficients() + 1, gaussian_loglik(fit.rss, fit.n())))
        }
        Family::Logit => {
            let fit = fit_logit(&dm)?;
            Ok((fit.n_coefficients(), fit.loglik_full))
        }
    }
}

/// Fits every candidate and ranks them by AIC (ties: fewer parameters, then
/// formula string).
pub fn compare<T: Scalar>(
    candidates: &[(ModelFormula, Family)],
    ds: &Dataset,
) -> Result<ComparisonTable<T>> {
    compare_with(candidates, ds, &DesignOptions::default())
}

pub fn compare_with<T: Scalar>(
    candidates: &[(ModelFormula, Family)],
    ds: &Dataset,
    options: &DesignOptions,
) -> Result<ComparisonTable<T>> {
    let (first, family) = match candidates.first() {
        Some((f, fam)) => (f, *fam),
        None => return Err(Error::NoCandidates),
    };
    for (f, fam) in candidates {
        if *fam != family {
            return Err(Error::MixedFamilies);
        }
        if f.response() != first.response() {
            return Err(Error::DifferingResponses(
                first.response().to_owned(),
                f.response().to_owned(),
            ));
        }
    }
    let results: Vec<(String, Result<(usize, T)>)> = candidates
        .par_iter()
        .map(|(f, fam)| (f.canonical_string(), fit_candidate::<T>(f, *fam, ds, options)))
        .collect();

    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (formula, res) in results {
        match res {
            Ok((k, ll)) => rows.push(ComparisonRow {
                formula,
                family,
                k_params: k,
                loglik: ll,
                aic: aic(k, ll),
                delta_aic: T::zero(),
            }),
            Err(error) => failed.push(FailedCandidate { formula, error }),
        }
    }
    rows.sort_by(|a, b| {
        a.aic
            .partial_cmp(&b.aic)
            .expect("finite AIC")
            .then(a.k_params.cmp(&b.k_params))
            .then_with(|| a.formula.cmp(&b.formula))
    });
    if let Some(best) = rows.first().map(|r| r.aic) {
        for r in &mut rows {
            r.delta_aic = r.aic - best;
        }
    }
    Ok(ComparisonTable {
        family,
        best: if rows.is_empty() { None } else { Some(0) },
        rows,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use crate::formula::parse;

    #[test]
    fn aic_examples() {
        assert_eq!(aic(3, -10.0), 26.0);
        assert_eq!(aic(1, 0.0), 2.0);
        assert_eq!(aic(4, -7.5) - aic(3, -7.5), 2.0);
    }

    fn ds() -> Dataset {
        Dataset::new(vec![
            Column::continuous("y", vec![1.0, 3.2, 4.9, 7.1, 9.0, 10.8, 13.2]),
            Column::continuous("x", vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            Column::continuous("w", vec![1.0, -1.0, 0.5, 0.2, -0.3, 0.9, -0.4]),
            Column::continuous("z", vec![5.0, 1.0, 2.0, 3.0, 4.0, 0.0, 6.0]),
        ])
        .unwrap()
    }

    #[test]
    fn duplicate_candidates_tie_deterministically() {
        let f = parse("y ~ x").unwrap();
        let t: ComparisonTable<f64> =
            compare(&[(f.clone(), Family::Ols), (f, Family::Ols)], &ds()).unwrap();
        assert_eq!(t.rows[0].aic, t.rows[1].aic);
        assert_eq!(t.rows[1].delta_aic, 0.0);
    }

    #[test]
    fn ranking_invariants() {
        let cands = [
            (parse("y ~ x + w").unwrap(), Family::Ols),
            (parse("y ~ x").unwrap(), Family::Ols),
            (parse("y ~ w").unwrap(), Family::Ols),
        ];
        let t: ComparisonTable<f64> = compare(&cands, &ds()).unwrap();
        assert_eq!(t.best, Some(0));
        assert_eq!(t.rows[0].delta_aic, 0.0);
        assert!(t.rows.windows(2).all(|w| w[0].aic <= w[1].aic));
        assert!(t.rows.iter().all(|r| r.delta_aic >= 0.0));
        let mut rev = cands.to_vec();
        rev.reverse();
        let t2: ComparisonTable<f64> = compare(&rev, &ds()).unwrap();
        assert_eq!(t, t2);
    }

    #[test]
    fn argument_errors() {
        assert_eq!(compare::<f64>(&[], &ds()), Err(Error::NoCandidates));
        let mixed = [
            (parse("y ~ x").unwrap(), Family::Ols),
            (parse("y ~ w").unwrap(), Family::Logit),
        ];
        assert_eq!(compare::<f64>(&mixed, &ds()), Err(Error::MixedFamilies));
        let responses = [
            (parse("y ~ x").unwrap(), Family::Ols),
            (parse("z ~ w").unwrap(), Family::Ols),
        ];
        assert!(matches!(
            compare::<f64>(&responses, &ds()),
            Err(Error::DifferingResponses(..))
        ));
    }

    #[test]
    fn failed_fits_are_reported_not_ranked() {
        let cands = [
            (parse("y ~ x").unwrap(), Family::Ols),
            (parse("y ~ nosuch").unwrap(), Family::Ols),
        ];
        let t: ComparisonTable<f64> = compare(&cands, &ds()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.failed.len(), 1);
        assert_eq!(t.failed[0].formula, "y ~ nosuch");
    }
}
